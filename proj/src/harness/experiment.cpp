// Copyright 2026 The ngi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"
#include "ngi/rng.hpp"

namespace ngi {

namespace {

using Json = nlohmann::ordered_json;

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
template <class F>
void ParallelFor(size_t n, int jobs, F&& fn) {
  const size_t workers = std::min(n, static_cast<size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::string Fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Run {
  std::string name;
  bool ngi;
  int order;
  double tfe;
  NoiseConfig noise;
};

}  // namespace

ExperimentConfig ExperimentConfig::Preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "desk") {
    c.train.decoder = DecoderConfig::Desk(0, c.synth.proto_dim);
    c.train.adam.lr = 1e-3;
    c.train.epochs = 40;
    c.train.batch_size = 16;
    c.beam_width = 16;
  } else if (name == "paper") {
    c.train.decoder = DecoderConfig::Paper(0, c.synth.proto_dim);
    c.train.epochs = 60;
    c.train.batch_size = 128;
    c.beam_width = 150;
  } else if (name == "smoke") {
    c.seeds = {1};
    c.corpus.types = 40;
    c.train.decoder = DecoderConfig::Desk(0, c.synth.proto_dim);
    c.train.decoder.d = 16;
    c.train.decoder.heads = 2;
    c.train.decoder.ffn_dim = 32;
    c.train.adam.lr = 3e-3;
    c.train.epochs = 3;
    c.beam_width = 4;
    c.lambda_grid = {0.0, 0.5};
  } else {
    throw UsageError("unknown preset '" + name + "' (desk, paper, smoke)");
  }
  return c;
}

SeedResult RunExperimentSeed(const Corpus& corpus, const SplitManifest& manifest,
                             const ExperimentConfig& cfg, uint64_t seed,
                             const ExperimentLog& log) {
  ValidateManifest(manifest, corpus.size());
  std::mutex log_mu;
  const auto say = [&](const std::string& line) {
    std::lock_guard lock(log_mu);
    if (log) log("seed " + std::to_string(seed) + ": " + line);
  };
  SeedResult res;
  res.seed = seed;
  for (size_t p = 0; p < kSplitParts.size(); ++p)
    res.sizes[p] = manifest.part(kSplitParts[p]).size();
  res.audit = Audit(manifest, corpus, cfg.order);

  // One charset for every model of the experiment.
  const Charset charset = Charset::FromCorpus(corpus);
  const std::vector<TrainExample> data =
      SynthGenerate(cfg.synth, charset, corpus.words(), Rng::Derive(seed, 11));
  const auto part = [&](const std::vector<size_t>& idx) {
    std::vector<const TrainExample*> v;
    for (size_t i : idx) v.push_back(&data[i]);
    return v;
  };
  const auto train = part(manifest.source_train), val = part(manifest.source_val),
             source_test = part(manifest.source_test),
             target_test = part(manifest.target_test);
  const int max_len = DecodeLengthCap(train);

  std::vector<int> orders = {cfg.order, cfg.low_order};
  if (cfg.ablate_order3) orders.push_back(3);
  std::map<std::pair<std::string, int>, NgramModel> lms;
  const Corpus source_dev = corpus.Subset(manifest.source_dev());
  const Corpus target_ng = corpus.Subset(manifest.target_ng);
  for (int n : orders) {
    if (lms.count({"source", n})) continue;
    lms.emplace(std::pair{std::string("source"), n}, EstimateWittenBell(source_dev, charset, n));
    lms.emplace(std::pair{std::string("target"), n}, EstimateWittenBell(target_ng, charset, n));
  }
  for (const auto& [key, lm] : lms)
    res.lms.emplace_back(key.first + "-" + std::to_string(key.second), Fingerprint(lm));
  const auto lm = [&](const std::string& which, int n) { return &lms.at({which, n}); };

  const TrainConfig& base = cfg.train;
  std::vector<Run> runs = {{"baseline", false, 0, base.tfe, base.noise},
                           {"ngi", true, cfg.order, base.tfe, base.noise},
                           {"ngi_n" + std::to_string(cfg.low_order), true, cfg.low_order, base.tfe, base.noise},
                           {"ngi_no_tfe", true, cfg.order, 0.0, base.noise}};
  if (cfg.ablate_order3) runs.push_back({"ngi_n3", true, 3, base.tfe, base.noise});
  if (cfg.ablate_noise) {
    NoiseConfig off = base.noise;
    off.tau = 0.0;
    runs.push_back({"ngi_no_noise", true, cfg.order, base.tfe, off});
  }

  std::vector<Checkpoint> models(runs.size());
  std::vector<double> seconds(runs.size());
  ParallelFor(runs.size(), cfg.jobs, [&](size_t i) {
    const Run& r = runs[i];
    TrainConfig tc = base;
    tc.decoder.ngi = r.ngi;
    tc.tfe = r.tfe;
    tc.noise = r.noise;
    tc.seed = Rng::Derive(seed, 21);
    const auto t0 = std::chrono::steady_clock::now();
    models[i] = TrainModel(train, charset, r.ngi ? lm("source", r.order) : nullptr, tc,
                           [&](int epoch, double loss) {
                             if (epoch == tc.epochs || epoch % 10 == 0)
                               say(r.name + " epoch " + std::to_string(epoch) +
                                   " loss " + Fixed(loss));
                           });
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  for (size_t i = 0; i < runs.size(); ++i) res.train_seconds.emplace_back(runs[i].name, seconds[i]);

  // Fusion weight per model: smallest source-val CER over the grid, source
  // n-gram only.
  const std::vector<size_t> main_runs = {0, 1};
  std::vector<double> lambdas(runs.size(), 0.0);
  ParallelFor(main_runs.size(), cfg.jobs, [&](size_t j) {
    const size_t i = main_runs[j];
    const NgramModel* src = lm("source", cfg.order);
    double best = std::numeric_limits<double>::infinity();
    for (double lambda : cfg.lambda_grid) {
      const double cer = Evaluate(models[i], val, charset, runs[i].ngi ? src : nullptr, src,
                                  DecodeMode::kBeam, {cfg.beam_width, lambda}, max_len)
                             .cer;
      if (cer < best) {
        best = cer;
        lambdas[i] = lambda;
      }
    }
  });
  for (size_t i : main_runs) res.lambdas.emplace_back(runs[i].name, lambdas[i]);

  struct Cell {
    size_t run;
    std::string lm;  // injected, or fused for the baseline beam
    int order;
    std::string subset;
    DecodeMode mode;
  };
  std::vector<Cell> cells;
  for (const char* subset : {"source_test", "target_test"}) {
    const std::string matched = std::string(subset) == "source_test" ? "source" : "target";
    cells.push_back({0, "none", cfg.order, subset, DecodeMode::kGreedy});
    cells.push_back({0, matched, cfg.order, subset, DecodeMode::kBeam});
    for (const char* which : {"source", "target"}) {
      cells.push_back({1, which, cfg.order, subset, DecodeMode::kGreedy});
      cells.push_back({1, which, cfg.order, subset, DecodeMode::kBeam});
    }
  }
  for (size_t i = 2; i < runs.size(); ++i) {
    cells.push_back({i, "source", runs[i].order, "source_test", DecodeMode::kGreedy});
    cells.push_back({i, "target", runs[i].order, "target_test", DecodeMode::kGreedy});
  }
  res.cells.resize(cells.size());
  ParallelFor(cells.size(), cfg.jobs, [&](size_t c) {
    const Cell& cell = cells[c];
    const Run& run = runs[cell.run];
    const NgramModel* chosen = cell.lm == "none" ? nullptr : lm(cell.lm, cell.order);
    const NgramModel* inject = run.ngi ? chosen : nullptr;
    const NgramModel* fusion = cell.mode == DecodeMode::kBeam ? chosen : nullptr;
    EvalReport r = Evaluate(models[cell.run],
                            cell.subset == "source_test" ? source_test : target_test,
                            charset, inject, fusion, cell.mode,
                            {cfg.beam_width, lambdas[cell.run]}, max_len);
    r.model = run.name;
    r.lm = cell.lm;
    r.subset = cell.subset;
    res.cells[c] = std::move(r);
  });
  for (const auto& r : res.cells)
    say(r.model + " lm=" + r.lm + " " + r.subset + " " + ToString(r.mode) + " CER " +
        Fixed(r.cer));
  return res;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const ExperimentLog& log) {
  if (cfg.seeds.empty()) throw UsageError("at least one seed is required");
  if (cfg.lambda_grid.empty()) throw UsageError("the lambda grid is empty");
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.config = cfg;
  for (uint64_t seed : cfg.seeds) {
    const Corpus corpus = BenchmarkCorpus(cfg.corpus, Rng::Derive(seed, 7));
    const SplitManifest manifest = Split(corpus, cfg.strategy, Rng::Derive(seed, 8));
    out.seeds.push_back(RunExperimentSeed(corpus, manifest, cfg, seed, log));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double ExperimentResult::MeanCer(const std::string& model, const std::string& lm,
                                 const std::string& subset, DecodeMode mode) const {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& s : seeds)
    for (const auto& c : s.cells)
      if (c.model == model && c.lm == lm && c.subset == subset && c.mode == mode) {
        sum += c.cer;
        ++n;
      }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

std::vector<ExperimentCheck> ExperimentResult::Checks() const {
  const auto g = DecodeMode::kGreedy, b = DecodeMode::kBeam;
  const double base_t = MeanCer("baseline", "none", "target_test", g);
  const double base_s = MeanCer("baseline", "none", "source_test", g);
  const double ngi_tt = MeanCer("ngi", "target", "target_test", g);
  const double ngi_st = MeanCer("ngi", "source", "target_test", g);
  const double ngi_ss = MeanCer("ngi", "source", "source_test", g);
  std::vector<ExperimentCheck> out;
  const auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  add("target gap", ngi_tt <= 0.8 * base_t,
      "NGI+target " + Fixed(ngi_tt) + " <= 0.8 x baseline " + Fixed(base_t));
  add("source kept", ngi_ss <= base_s + 0.02,
      "NGI+source " + Fixed(ngi_ss) + " <= baseline " + Fixed(base_s) + " + 0.02");
  add("lm switch", ngi_tt < ngi_st,
      "target n-gram " + Fixed(ngi_tt) + " < source n-gram " + Fixed(ngi_st));
  const std::string low = "ngi_n" + std::to_string(config.low_order);
  const double low_tt = MeanCer(low, "target", "target_test", g);
  add("order ablation", low_tt >= ngi_tt,
      "n=" + std::to_string(config.low_order) + " " + Fixed(low_tt) + " >= n=" +
          std::to_string(config.order) + " " + Fixed(ngi_tt));
  const double notfe_tt = MeanCer("ngi_no_tfe", "target", "target_test", g);
  add("tfe ablation", notfe_tt >= ngi_tt,
      "no TFE " + Fixed(notfe_tt) + " >= TFE " + Fixed(ngi_tt));
  const double base_beam = MeanCer("baseline", "target", "target_test", b);
  const double ngi_beam = MeanCer("ngi", "target", "target_test", b);
  add("beam guard", base_beam <= base_t + 0.005 && ngi_beam <= ngi_tt + 0.005,
      "baseline " + Fixed(base_beam) + " vs " + Fixed(base_t) + ", NGI+target " +
          Fixed(ngi_beam) + " vs " + Fixed(ngi_tt) + " (+0.005)");
  return out;
}

std::string ExperimentResult::ToJson() const {
  const TrainConfig& t = config.train;
  Json cfg{{"preset", config.preset},
           {"seeds", config.seeds},
           {"strategy", ToString(config.strategy)},
           {"order", config.order},
           {"low_order", config.low_order},
           {"decoder", {{"d", t.decoder.d}, {"heads", t.decoder.heads},
                        {"layers", t.decoder.layers}, {"ffn_dim", t.decoder.ffn_dim},
                        {"dropout", t.decoder.dropout}}},
           {"epochs", t.epochs},
           {"batch_size", t.batch_size},
           {"lr", t.adam.lr},
           {"tfe", t.tfe},
           {"noise", {{"a", t.noise.a}, {"b", t.noise.b}, {"tau", t.noise.tau}}},
           {"synth", {{"proto_dim", config.synth.proto_dim},
                      {"frames_per_char", config.synth.frames_per_char},
                      {"noise_sigma", config.synth.noise_sigma}}},
           {"corpus_types", config.corpus.types},
           {"beam_width", config.beam_width},
           {"lambda_grid", config.lambda_grid}};
  Json seeds_json = Json::array();
  for (const auto& s : seeds) {
    Json sizes = Json::object();
    for (size_t p = 0; p < kSplitParts.size(); ++p) sizes[kSplitParts[p]] = s.sizes[p];
    Json lms = Json::object(), lambdas = Json::object(), secs = Json::object();
    for (const auto& [k, v] : s.lms) lms[k] = v;
    for (const auto& [k, v] : s.lambdas) lambdas[k] = v;
    for (const auto& [k, v] : s.train_seconds) secs[k] = v;
    Json cells = Json::array();
    for (const auto& c : s.cells)
      cells.push_back({{"model", c.model}, {"lm", c.lm}, {"subset", c.subset},
                       {"mode", ToString(c.mode)}, {"inject_lm", c.inject_lm},
                       {"fusion_lm", c.fusion_lm}, {"lambda", c.lambda},
                       {"beam", c.beam}, {"samples", c.samples},
                       {"errors", c.errors}, {"ref_chars", c.ref_chars},
                       {"cer", c.cer}});
    seeds_json.push_back({{"seed", s.seed}, {"sizes", sizes},
                          {"audit", Json::parse(s.audit.ToJson())}, {"lms", lms},
                          {"lambdas", lambdas}, {"train_seconds", secs},
                          {"cells", cells}});
  }
  Json checks = Json::array();
  for (const auto& c : Checks())
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  Json out{{"config", cfg}, {"seconds", seconds}, {"seeds", seeds_json}, {"checks", checks}};
  return out.dump(2) + "\n";
}

std::string ExperimentResult::ToTable() const {
  const auto g = DecodeMode::kGreedy, b = DecodeMode::kBeam;
  const auto cell = [&](const std::string& m, const std::string& lm,
                        const std::string& subset, DecodeMode mode) {
    const double v = MeanCer(m, lm, subset, mode);
    return std::isnan(v) ? std::string("     -") : Fixed(100.0 * v, 2);
  };
  std::string s = "CER (%), mean over " + std::to_string(seeds.size()) + " seed(s)\n";
  s += "model       n-gram   source greedy  source +LM  target greedy  target +LM\n";
  const auto row = [&](const std::string& label, const std::string& m,
                       const std::string& lm_s, const std::string& lm_t,
                       const std::string& beam_s, const std::string& beam_t) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-11s %-8s %13s %11s %14s %11s\n", label.c_str(),
                  (lm_s == "none" ? "-" : lm_s == lm_t ? lm_s : "matched").c_str(),
                  cell(m, lm_s, "source_test", g).c_str(),
                  cell(m, beam_s, "source_test", b).c_str(),
                  cell(m, lm_t, "target_test", g).c_str(),
                  cell(m, beam_t, "target_test", b).c_str());
    s += buf;
  };
  row("WAN", "baseline", "none", "none", "source", "target");
  row("WAN+NGI", "ngi", "source", "source", "source", "source");
  row("WAN+NGI", "ngi", "target", "target", "target", "target");
  s += "\nablations (greedy, target test)\n";
  for (const auto& c : seeds.empty() ? std::vector<EvalReport>{} : seeds[0].cells) {
    if (c.model == "baseline" || c.model == "ngi" || c.subset != "target_test") continue;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-14s %6s\n", c.model.c_str(),
                  cell(c.model, "target", "target_test", g).c_str());
    s += buf;
  }
  s += "\n";
  for (const auto& c : Checks())
    s += std::string(c.pass ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "runtime %.1f s\n", seconds);
  return s + buf;
}

}  // namespace ngi

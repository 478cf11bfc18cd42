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
//
// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// all ten hold. Usage: ngi_acceptance [--data DIR] [--jobs N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"
#include "ngi/rng.hpp"
#include "oracles.hpp"

using namespace ngi;

namespace {

// Tolerances and budgets.
constexpr double kOracleTol = 1e-9;        // criteria 1, 2, 4
constexpr double kRoundTripTol = 1e-6;     // criterion 3
constexpr double kGradientRelTol = 1e-4;   // criterion 6
constexpr double kOracleSeconds = 10.0;    // criterion 1
constexpr double kGradientSeconds = 60.0;  // criterion 6
constexpr double kExperimentSeconds = 900.0;  // criterion 8
constexpr int kCorpora = 50;
constexpr int kKMeansInstances = 200;

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::string Fix(double x, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

int failures = 0;

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s  %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct TestCorpus {
  Corpus corpus;
  Charset charset;
  int order;
  std::vector<std::vector<int>> symbols;
};

std::vector<TestCorpus> RandomCorpora() {
  std::mt19937_64 g(1);
  std::vector<TestCorpus> out;
  for (int i = 0; i < kCorpora; ++i) {
    TestCorpus t;
    const int letters = 2 + i % 8;  // K = letters + 1 <= 10
    t.corpus = Corpus::FromUtf8(oracle::RandomWords(g, letters, 200));
    t.charset = Charset::FromCorpus(t.corpus);
    t.order = 1 + i % 5;
    for (const auto& w : t.corpus.words()) t.symbols.push_back(t.charset.Encode(w));
    out.push_back(std::move(t));
  }
  return out;
}

// Every context a left-to-right decoder can present: <s> plus up to n-2
// characters, or any n-1 characters once the word start has scrolled out.
std::vector<std::vector<Symbol>> ReachableContexts(const Charset& cs, int order) {
  std::vector<std::vector<Symbol>> out;
  const int chars = cs.size() - 1;
  std::vector<std::vector<Symbol>> level = {{}};
  for (int len = 0; len <= std::max(0, order - 1); ++len) {
    for (const auto& s : level) {
      if (len <= order - 2 || len == 0) {
        std::vector<Symbol> c{cs.sos()};
        c.insert(c.end(), s.begin(), s.end());
        out.push_back(c);
      }
      if (len == order - 1 && len > 0) out.push_back(s);
    }
    std::vector<std::vector<Symbol>> next;
    for (const auto& s : level)
      for (Symbol c = 0; c < chars; ++c) {
        next.push_back(s);
        next.back().push_back(c);
      }
    level = std::move(next);
  }
  return out;
}

void OracleEquivalence(const std::vector<TestCorpus>& corpora) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  size_t queries = 0;
  for (const auto& t : corpora) {
    const NgramModel m = EstimateWittenBell(t.corpus, t.charset, t.order);
    const oracle::WittenBell o(t.symbols, t.charset.size(), t.order);
    for (const auto& h : ReachableContexts(t.charset, t.order))
      for (Symbol w = 0; w < t.charset.size(); ++w) {
        worst = std::max(worst, std::fabs(m.Score(h, w) - std::log10(o.Prob(h, w))));
        ++queries;
      }
  }
  const double secs = Since(t0);
  Report(1, "n-gram oracle equivalence", worst <= kOracleTol && secs < kOracleSeconds,
         std::to_string(corpora.size()) + " corpora, " + std::to_string(queries) +
             " log10 scores, max |diff| " + Sci(worst) + " (tol " + Sci(kOracleTol) + "), " +
             Fix(secs, 2) + " s (limit " + Fix(kOracleSeconds, 0) + " s)");
}

void Normalization(const std::vector<TestCorpus>& corpora) {
  double worst = 0.0;
  size_t vectors = 0;
  for (const auto& t : corpora) {
    const NgramModel m = EstimateWittenBell(t.corpus, t.charset, t.order);
    for (const auto& h : ReachableContexts(t.charset, t.order)) {
      double sum = 0.0;
      for (double p : m.DistVector(h)) sum += p;
      worst = std::max(worst, std::fabs(sum - 1.0));
      ++vectors;
    }
  }
  Report(2, "normalization", worst <= kOracleTol,
         std::to_string(vectors) + " distribution vectors, max |sum - 1| " + Sci(worst));
}

void ArpaRoundTrip(const std::vector<TestCorpus>& corpora, const std::string& data) {
  double worst = 0.0;
  size_t queries = 0;
  for (const auto& t : corpora) {
    const NgramModel m = EstimateWittenBell(t.corpus, t.charset, t.order);
    std::istringstream in(ArpaText(m));
    const NgramModel r = ReadArpa(in);
    for (const auto& h : ReachableContexts(t.charset, t.order))
      for (Symbol w = 0; w < t.charset.size(); ++w) {
        worst = std::max(worst, std::fabs(m.Score(h, w) - r.Score(h, w)));
        ++queries;
      }
  }
  // fixture -> line the error must cite
  const std::vector<std::pair<std::string, int>> fixtures = {
      {"count_mismatch.arpa", 17}, {"duplicate_bigram.arpa", 14}, {"duplicate_unigram.arpa", 7},
      {"bad_header.arpa", 2},      {"missing_end.arpa", 7},       {"unknown_symbol.arpa", 6}};
  int rejected = 0;
  std::string missed;
  for (const auto& [file, line] : fixtures) {
    try {
      LoadArpa((std::filesystem::path(data) / "arpa" / file).string());
      missed += " " + file + "(accepted)";
    } catch (const DataError& e) {
      if (std::string(e.what()).find("line " + std::to_string(line) + ":") != std::string::npos)
        ++rejected;
      else
        missed += " " + file + "(" + e.what() + ")";
    }
  }
  const bool pass = worst <= kRoundTripTol && rejected == static_cast<int>(fixtures.size());
  Report(3, "ARPA round trip", pass,
         std::to_string(queries) + " queries, max |diff| " + Sci(worst) + " (tol " +
             Sci(kRoundTripTol) + "); " + std::to_string(rejected) + "/" +
             std::to_string(fixtures.size()) + " malformed fixtures rejected with line numbers" +
             missed);
}

void PerplexitySanity(const std::vector<TestCorpus>& corpora) {
  double uniform_worst = 0.0, oracle_worst = 0.0;
  int below_k = 0;
  for (const auto& t : corpora) {
    const int k = t.charset.size();
    std::vector<std::map<Ngram, NgramEntry>> tables(1);
    for (Symbol s = 0; s < k; ++s) tables[0][{s}] = {std::log10(1.0 / k), std::nullopt};
    const NgramModel uniform(1, t.charset, tables);
    uniform_worst = std::max(uniform_worst, std::fabs(Perplexity(uniform, t.corpus) - k) / k);

    const NgramModel m = EstimateWittenBell(t.corpus, t.charset, t.order);
    const double ppl = Perplexity(m, t.corpus);
    const double expect =
        std::pow(10.0, oracle::WittenBell(t.symbols, k, t.order).LogPerplexity10(t.symbols));
    oracle_worst = std::max(oracle_worst, std::fabs(ppl - expect) / expect);
    if (ppl < k) ++below_k;
  }
  const bool pass = uniform_worst <= 1e-12 && oracle_worst <= kOracleTol &&
                    below_k == static_cast<int>(corpora.size());
  Report(4, "perplexity sanity", pass,
         "uniform PPL = K (max rel err " + Sci(uniform_worst) + "); self-PPL < K on " +
             std::to_string(below_k) + "/" + std::to_string(corpora.size()) +
             " corpora; oracle max rel err " + Sci(oracle_worst));
}

void Splitter() {
  int disjoint = 0, partitions = 0, deterministic = 0, runs = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Corpus c = BenchmarkCorpus({}, seed);
    for (SplitStrategy s : {SplitStrategy::kLexicon, SplitStrategy::kKMeans}) {
      ++runs;
      const SplitManifest m = Split(c, s, seed);
      if (Split(c, s, seed).ToJson() == m.ToJson()) ++deterministic;
      try {
        ValidateManifest(m, c.size());
        ++partitions;
      } catch (const DataError&) {
      }
      std::set<std::u32string> src, tgt;
      for (size_t i : m.source_dev()) src.insert(c.words()[i]);
      for (size_t i : m.source_test) src.insert(c.words()[i]);
      for (size_t i : m.target_ng) tgt.insert(c.words()[i]);
      for (size_t i : m.target_test) tgt.insert(c.words()[i]);
      bool ok = true;
      for (const auto& w : tgt) ok &= src.count(w) == 0;
      if (ok) ++disjoint;
    }
  }

  std::mt19937_64 g(5);
  std::uniform_int_distribution<int> npts(2, 12), dim(1, 6);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution bit(0.4);
  int optimal = 0, instances = 0, kmeans_deterministic = 0;
  double worst = 0.0;
  while (instances < kKMeansInstances) {
    const size_t n = static_cast<size_t>(npts(g)), d = static_cast<size_t>(dim(g));
    const bool binary = instances % 2 == 0;
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
      for (double& x : p) x = binary ? (bit(g) ? 1.0 : 0.0) : normal(g);
    bool distinct = false;
    for (const auto& p : pts) distinct |= p != pts[0];
    if (!distinct) continue;
    ++instances;
    const auto a = KMeans2(pts, static_cast<uint64_t>(instances));
    if (KMeans2(pts, static_cast<uint64_t>(instances)) == a) ++kmeans_deterministic;
    const double best = oracle::BestTwoPartitionSse(pts);
    const double gap = WithinClusterSse(pts, a) - best;
    worst = std::max(worst, gap);
    if (gap <= 1e-9 * std::max(1.0, best)) ++optimal;
  }
  const bool pass = disjoint == runs && partitions == runs && deterministic == runs &&
                    optimal == instances && kmeans_deterministic == instances;
  Report(5, "splitter", pass,
         "type-disjoint " + std::to_string(disjoint) + "/" + std::to_string(runs) +
             ", partitions " + std::to_string(partitions) + "/" + std::to_string(runs) +
             ", byte-identical reruns " + std::to_string(deterministic) + "/" +
             std::to_string(runs) + "; 2-means optimal on " + std::to_string(optimal) + "/" +
             std::to_string(instances) + " instances (max SSE gap " + Sci(worst) +
             "), deterministic " + std::to_string(kmeans_deterministic) + "/" +
             std::to_string(instances));
}

DecoderConfig Tiny(bool ngi) {
  DecoderConfig c;
  c.charset_size = 6;
  c.feature_dim = 4;
  c.d = 8;
  c.heads = 2;
  c.layers = 1;
  c.ffn_dim = 16;
  c.dropout = 0.0;
  c.ngi = ngi;
  return c;
}

nn::Matrix RandomMatrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  nn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-1.0, 1.0);
  return m;
}

nn::Matrix RandomDistributions(Eigen::Index r, int k, Rng& rng) {
  nn::Matrix s(r, k);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 0.05 + rng.Uniform();
  for (Eigen::Index i = 0; i < r; ++i) s.row(i) /= s.row(i).sum();
  return s;
}

void RandomizeAll(DecoderParams& p, Rng& rng) {
  p.ForEach([&](const std::string& name, nn::Matrix& m) {
    const double center = name.find("gain") != std::string::npos ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = center + rng.Uniform(-0.5, 0.5);
  });
}

void Gradients() {
  const auto t0 = Clock::now();
  const DecoderConfig cfg = Tiny(true);
  size_t checked = 0, failed = 0;
  double worst = 0.0;
  std::set<std::string> groups;
  for (uint64_t trial = 0; trial < 3; ++trial) {
    Rng rng(100 + trial);
    DecoderParams p = DecoderParams::Zeros(cfg);
    RandomizeAll(p, rng);
    const nn::Matrix frames = RandomMatrix(5, cfg.feature_dim, rng);
    SampleInput in;
    in.frames = &frames;
    in.prev = {cfg.charset_size, static_cast<Symbol>(trial), 2};
    in.targets = {static_cast<Symbol>(trial), 2, cfg.charset_size - 1};
    in.sngi = RandomDistributions(3, cfg.charset_size, rng);

    DecoderParams grad = p;
    grad.SetZero();
    SampleLoss(p, cfg, in, 1.0, &grad);
    std::vector<const nn::Matrix*> analytic;
    grad.ForEach([&](const std::string&, const nn::Matrix& m) { analytic.push_back(&m); });
    const auto loss = [&] { return SampleLoss(p, cfg, in, 1.0, nullptr); };
    size_t index = 0;
    p.ForEach([&](const std::string& name, nn::Matrix& m) {
      const nn::Matrix& g = *analytic[index++];
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double numeric = oracle::CentralDifference(loss, m.data()[i], 1e-5);
        const double a = g.data()[i];
        const double scale = std::max(std::fabs(a), std::fabs(numeric));
        if (scale > 1e-7) worst = std::max(worst, std::fabs(a - numeric) / scale);
        ++checked;
        if (!oracle::GradientsAgree(a, numeric, kGradientRelTol)) ++failed;
        groups.insert(name.substr(0, name.find('.')));
      }
    });
  }
  const double secs = Since(t0);
  Report(6, "gradient correctness", failed == 0 && secs < kGradientSeconds,
         std::to_string(checked) + " parameters over " + std::to_string(groups.size()) +
             " groups (d=8, heads=2, layers=1, t=3), " + std::to_string(failed) +
             " outside rel " + Sci(kGradientRelTol) + ", max rel err " + Sci(worst) + ", " +
             Fix(secs, 2) + " s (limit " + Fix(kGradientSeconds, 0) + " s)");
}

void CausalityAndBaseline() {
  const DecoderConfig with = Tiny(true), without = Tiny(false);
  int causal_ok = 0, causal_total = 0, baseline_ok = 0, baseline_total = 0;
  for (uint64_t trial = 0; trial < 5; ++trial) {
    Rng rng(200 + trial);
    DecoderParams p = DecoderParams::Init(with, 300 + trial);
    p.out_w = RandomMatrix(with.d, with.charset_size, rng);
    const nn::Matrix frames = RandomMatrix(6, with.feature_dim, rng);
    SampleInput in;
    in.frames = &frames;
    in.prev = {with.charset_size, 0, 1, 2, 3, 4};
    in.targets = {0, 1, 2, 3, 4, 5};
    in.sngi = RandomDistributions(6, with.charset_size, rng);
    const nn::Matrix ref = SampleLogits(p, with, in);
    for (size_t j = 1; j < in.prev.size(); ++j) {
      // Change both the fed symbol and the n-gram row at step j.
      SampleInput alt = in;
      alt.prev[j] = (alt.prev[j] + 1) % (with.charset_size - 1);
      alt.sngi.row(static_cast<Eigen::Index>(j)) = RandomDistributions(1, with.charset_size, rng);
      const nn::Matrix out = SampleLogits(p, with, alt);
      bool same = true;
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(j); ++i) same &= out.row(i) == ref.row(i);
      ++causal_total;
      if (same) ++causal_ok;
    }
    p.proj = ProjectionParams::Zeros(with.charset_size, with.d);
    const nn::Matrix ngi = SampleLogits(p, with, in);
    SampleInput plain = in;
    plain.sngi = nn::Matrix(0, with.charset_size);
    ++baseline_total;
    if (ngi == SampleLogits(p, without, plain)) ++baseline_ok;
  }
  Report(7, "causality and baseline recovery",
         causal_ok == causal_total && baseline_ok == baseline_total,
         "earlier logits bit-identical under " + std::to_string(causal_ok) + "/" +
             std::to_string(causal_total) + " future perturbations; zero projection equals " +
             "the baseline bit for bit in " + std::to_string(baseline_ok) + "/" +
             std::to_string(baseline_total) + " models");
}

// Degenerate beam on a desk-scale NGI model of the first benchmark seed.
std::pair<size_t, size_t> BeamOneMatchesGreedy(const ExperimentConfig& cfg) {
  const uint64_t seed = cfg.seeds.front();
  const Corpus corpus = BenchmarkCorpus(cfg.corpus, Rng::Derive(seed, 7));
  const Charset cs = Charset::FromCorpus(corpus);
  const SplitManifest m = Split(corpus, cfg.strategy, Rng::Derive(seed, 8));
  const auto samples = SynthGenerate(cfg.synth, cs, corpus.words(), Rng::Derive(seed, 11));
  const NgramModel source = EstimateWittenBell(corpus.Subset(m.source_dev()), cs, cfg.order);
  const NgramModel target = EstimateWittenBell(corpus.Subset(m.target_ng), cs, cfg.order);
  std::vector<const TrainExample*> train;
  for (size_t i : m.source_train) train.push_back(&samples[i]);
  TrainConfig tc = cfg.train;
  tc.decoder.ngi = true;
  tc.seed = Rng::Derive(seed, 21);
  const Checkpoint model = TrainModel(train, cs, &source, tc);
  const int cap = DecodeLengthCap(train);
  size_t same = 0, total = 0;
  for (const auto* part : {&m.source_test, &m.target_test})
    for (size_t i : *part)
      for (const NgramModel* lm : {&source, &target}) {
        const auto greedy = GreedyDecode(model, samples[i].frames, lm, cap);
        const auto beam = BeamRescore(model, samples[i].frames, lm, lm, {1, 0.0}, cap);
        ++total;
        if (beam.symbols == greedy) ++same;
      }
  return {same, total};
}

void Benchmark(int jobs) {
  ExperimentConfig cfg = ExperimentConfig::Preset("desk");
  cfg.seeds = {1, 2, 3};
  cfg.jobs = jobs;
  std::fprintf(stderr, "running the desk benchmark (3 seeds); this takes a few minutes\n");
  const ExperimentResult r = RunExperiment(cfg, [](const std::string& line) {
    std::fprintf(stderr, "  %s\n", line.c_str());
  });
  std::fputs(r.ToTable().c_str(), stderr);
  std::map<std::string, ExperimentCheck> checks;
  for (const auto& c : r.Checks()) checks[c.name] = c;
  const auto detail = [&](std::initializer_list<const char*> names) {
    std::string s;
    for (const char* n : names) {
      const auto& c = checks.at(n);
      s += (s.empty() ? "" : "; ") + c.name + " " + (c.pass ? "ok" : "FAILS") + " (" + c.detail + ")";
    }
    return s;
  };
  const bool in_time = r.seconds <= kExperimentSeconds;
  Report(8, "directional reproduction",
         checks.at("target gap").pass && checks.at("source kept").pass &&
             checks.at("lm switch").pass && in_time,
         detail({"target gap", "source kept", "lm switch"}) + "; runtime " + Fix(r.seconds, 1) +
             " s (limit " + Fix(kExperimentSeconds, 0) + " s)");
  Report(9, "ablation directionality",
         checks.at("order ablation").pass && checks.at("tfe ablation").pass,
         detail({"order ablation", "tfe ablation"}));

  const auto [same, total] = BeamOneMatchesGreedy(cfg);
  Report(10, "rescoring guard", checks.at("beam guard").pass && same == total,
         "beam=1, lambda=0 equals greedy on " + std::to_string(same) + "/" +
             std::to_string(total) + " decodes; " + detail({"beam guard"}));
}

}  // namespace

int main(int argc, char** argv) {
  std::string data = NGI_TEST_DATA;
  int jobs = 1;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--data" && i + 1 < argc) {
      data = argv[++i];
    } else if (a == "--jobs" && i + 1 < argc) {
      jobs = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--data DIR] [--jobs N]\n", argv[0]);
      return 2;
    }
  }
  try {
    const auto corpora = RandomCorpora();
    OracleEquivalence(corpora);
    Normalization(corpora);
    ArpaRoundTrip(corpora, data);
    PerplexitySanity(corpora);
    Splitter();
    Gradients();
    CausalityAndBaseline();
    Benchmark(jobs);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 10 criteria pass\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}

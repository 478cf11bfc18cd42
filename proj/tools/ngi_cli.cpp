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
// ngi command line. Exit codes: 0 success, 1 usage error, 2 data or I/O
// error, 3 internal error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ngi/ngi.h"

namespace {

namespace fs = std::filesystem;

struct Failure {
  int code;
  std::string message;
};

int ExitCode(ngi_status s) {
  switch (s) {
    case NGI_OK: return 0;
    case NGI_ERR_USAGE: return 1;
    case NGI_ERR_DATA:
    case NGI_ERR_IO: return 2;
    default: return 3;
  }
}

void Check(ngi_status s) {
  if (s != NGI_OK) throw Failure{ExitCode(s), ngi_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<ngi_corpus, Deleter<ngi_corpus, ngi_corpus_free>>;
using Lm = std::unique_ptr<ngi_lm, Deleter<ngi_lm, ngi_lm_free>>;
using Manifest = std::unique_ptr<ngi_manifest, Deleter<ngi_manifest, ngi_manifest_free>>;
using Dataset = std::unique_ptr<ngi_dataset, Deleter<ngi_dataset, ngi_dataset_free>>;
using Model = std::unique_ptr<ngi_model, Deleter<ngi_model, ngi_model_free>>;
using Text = std::unique_ptr<char, Deleter<char, ngi_string_free>>;

Corpus LoadCorpus(const std::string& path) {
  ngi_corpus* c = nullptr;
  Check(ngi_corpus_load(path.c_str(), &c));
  return Corpus(c);
}

Lm LoadLm(const std::string& path) {
  ngi_lm* lm = nullptr;
  Check(ngi_lm_load(path.c_str(), &lm));
  return Lm(lm);
}

Manifest LoadManifest(const std::string& path) {
  ngi_manifest* m = nullptr;
  Check(ngi_manifest_load(path.c_str(), &m));
  return Manifest(m);
}

Model LoadModel(const std::string& path) {
  ngi_model* m = nullptr;
  Check(ngi_model_load(path.c_str(), &m));
  return Model(m);
}

void WriteFile(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{2, "cannot write " + path};
}

struct SynthFlags {
  int proto_dim = 16;
  int frames_per_char = 1;
  double noise_sigma = 0.3;
  std::string confusion = "ao,ei";
  bool no_terminator = false;

  void Add(CLI::App* app) {
    app->add_option("--proto-dim", proto_dim, "feature dimension per frame")->capture_default_str();
    app->add_option("--frames-per-char", frames_per_char, "frames per character")->capture_default_str();
    app->add_option("--noise-sigma", noise_sigma, "Gaussian feature noise")->capture_default_str();
    app->add_option("--confusion", confusion, "confusable symbol pairs, e.g. ao,ei")->capture_default_str();
    app->add_flag("--no-terminator", no_terminator, "omit the end-of-word frame");
  }

  ngi_synth_config Config() const {
    ngi_synth_config cfg;
    ngi_synth_config_default(&cfg);
    cfg.proto_dim = proto_dim;
    cfg.frames_per_char = frames_per_char;
    cfg.noise_sigma = noise_sigma;
    cfg.confusion_pairs = confusion.c_str();
    cfg.terminator = no_terminator ? 0 : 1;
    return cfg;
  }
};

// Samples come from --dataset when given, otherwise they are synthesized
// from the corpus with the run seed (the same seed reproduces the frames).
Dataset OpenDataset(const std::string& dir, const ngi_corpus* corpus,
                    const SynthFlags& synth, uint64_t seed) {
  ngi_dataset* d = nullptr;
  if (!dir.empty()) {
    Check(ngi_dataset_load(dir.c_str(), &d));
  } else {
    const ngi_synth_config cfg = synth.Config();
    Check(ngi_dataset_synthesize(corpus, &cfg, seed, &d));
  }
  return Dataset(d);
}

std::string Str(char* s) { return Text(s) ? std::string(s) : std::string(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-gram injection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML file with flag values (flags take precedence)");

  uint64_t seed = 1;
  std::string out;
  app.add_option("--seed", seed, "random seed (fallback: NGI_SEED)")
      ->envname("NGI_SEED")
      ->capture_default_str();
  app.add_option("--out", out, "output file or directory");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "corpus -> Witten-Bell ARPA model");
  std::string est_corpus, est_charset;
  int order = 5;
  estimate->add_option("corpus", est_corpus, "word list, one word per line")->required();
  estimate->add_option("--order", order, "n-gram order")->capture_default_str();
  estimate->add_option("--charset-from", est_charset, "take the charset from this corpus");

  // ppl
  auto* ppl = app.add_subcommand("ppl", "perplexity of an ARPA model on a corpus");
  std::string ppl_lm, ppl_corpus;
  ppl->add_option("lm", ppl_lm, "ARPA file")->required();
  ppl->add_option("corpus", ppl_corpus, "word list")->required();

  // split
  auto* split = app.add_subcommand("split", "corpus -> source/target split manifest");
  std::string split_corpus, strategy = "lexicon";
  split->add_option("corpus", split_corpus, "word list")->required();
  split->add_option("--strategy", strategy, "lexicon or kmeans")
      ->check(CLI::IsMember({"lexicon", "kmeans"}))
      ->capture_default_str();

  // audit
  auto* audit = app.add_subcommand("audit", "cross-perplexity report of a manifest");
  std::string audit_manifest, audit_corpus;
  audit->add_option("manifest", audit_manifest, "manifest JSON")->required();
  audit->add_option("corpus", audit_corpus, "word list the manifest indexes")->required();
  audit->add_option("--order", order, "n-gram order")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "corpus -> synthetic feature dataset");
  std::string synth_corpus;
  SynthFlags synth_flags;
  synth->add_option("corpus", synth_corpus, "word list")->required();
  synth_flags.Add(synth);

  // train
  auto* train = app.add_subcommand("train", "train a decoder on source_train");
  std::string corpus_path, manifest_path, dataset_dir, lm_path, ngi_switch = "on",
                                                                preset = "paper";
  ngi_train_config tc;
  ngi_train_config_default(&tc);
  SynthFlags train_synth;
  train->add_option("--corpus", corpus_path, "word list")->required();
  train->add_option("--manifest", manifest_path, "split manifest")->required();
  train->add_option("--dataset", dataset_dir, "dataset directory (default: synthesize)");
  train_synth.Add(train);
  train->add_option("--ngi", ngi_switch, "n-gram injection")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  train->add_option("--order", order, "order of the source n-gram")->capture_default_str();
  train->add_option("--lm", lm_path, "injected ARPA model (default: estimated on source dev)");
  train->add_option("--preset", preset, "paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
  auto* o_d = train->add_option("--d", tc.d, "internal dimension");
  auto* o_heads = train->add_option("--heads", tc.heads, "attention heads");
  auto* o_layers = train->add_option("--layers", tc.layers, "decoder layers");
  auto* o_ffn = train->add_option("--ffn", tc.ffn_dim, "feed-forward width");
  auto* o_dropout = train->add_option("--dropout", tc.dropout, "dropout probability");
  auto* o_epochs = train->add_option("--epochs", tc.epochs, "training epochs");
  auto* o_batch = train->add_option("--batch-size", tc.batch_size, "batch size");
  auto* o_lr = train->add_option("--lr", tc.lr, "learning rate");
  train->add_option("--tfe", tc.tfe, "teacher forcing error probability")->capture_default_str();
  train->add_option("--noise-a", tc.noise_a, "noise lower bound")->capture_default_str();
  train->add_option("--noise-b", tc.noise_b, "noise upper bound")->capture_default_str();
  train->add_option("--noise-tau", tc.noise_tau, "noise probability per step")->capture_default_str();

  // eval and rescore
  struct EvalFlags {
    std::string checkpoint, corpus, manifest, dataset, subset = "target_test", lm, fusion_lm;
    SynthFlags synth;
    int beam = 150;
    double lambda = 0.5;
  } ev;
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("checkpoint", ev.checkpoint, "model checkpoint")->required();
    sub->add_option("--corpus", ev.corpus, "word list")->required();
    sub->add_option("--manifest", ev.manifest, "split manifest")->required();
    sub->add_option("--subset", ev.subset, "manifest part")
        ->check(CLI::IsMember({"source_train", "source_val", "source_test", "target_ng",
                               "target_test"}))
        ->capture_default_str();
    sub->add_option("--dataset", ev.dataset, "dataset directory (default: synthesize)");
    sub->add_option("--lm", ev.lm, "ARPA model (injected when the model uses NGI)");
    ev.synth.Add(sub);
  };
  auto* eval = app.add_subcommand("eval", "greedy CER on a manifest part");
  add_eval(eval);
  auto* rescore = app.add_subcommand("rescore", "beam search with shallow fusion");
  add_eval(rescore);
  rescore->add_option("--beam", ev.beam, "beam width")->capture_default_str();
  rescore->add_option("--lambda", ev.lambda, "n-gram weight")->capture_default_str();
  rescore->add_option("--fusion-lm", ev.fusion_lm, "fused ARPA model (default: --lm)");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "synthetic benchmark grid");
  std::string exp_preset = "desk", seeds_text;
  int num_seeds = 3, jobs = 1, exp_beam = 0;
  bool ablate3 = false, ablate_noise = false;
  experiment->add_option("--preset", exp_preset, "desk, paper or smoke")
      ->check(CLI::IsMember({"desk", "paper", "smoke"}))
      ->capture_default_str();
  experiment->add_option("--seeds", seeds_text, "comma-separated seeds (default: --seed and successors)");
  experiment->add_option("--num-seeds", num_seeds, "seeds when --seeds is absent")->capture_default_str();
  experiment->add_option("--strategy", strategy, "lexicon or kmeans")
      ->check(CLI::IsMember({"lexicon", "kmeans"}))
      ->capture_default_str();
  experiment->add_option("--beam", exp_beam, "beam width (0: preset)")->capture_default_str();
  experiment->add_flag("--ablate-order3", ablate3, "also train with a 3-gram");
  experiment->add_flag("--ablate-noise", ablate_noise, "also train without noise");
  experiment->add_option("--jobs", jobs, "parallel runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // Resolved configuration, written next to (or inside) the output.
  // Only the global options and the active subcommand are kept; unset
  // options without a default are dropped so the file loads via --config.
  const auto log_config = [&](const std::string& path) {
    const std::string prefix = app.get_subcommands().front()->get_name() + ".";
    std::istringstream all(app.config_to_str(true, false));
    std::string kept;
    for (std::string line; std::getline(all, line);) {
      const size_t eq = line.find('=');
      if (eq == std::string::npos || line.compare(eq + 1, std::string::npos, "\"\"") == 0) continue;
      const std::string key = line.substr(0, eq);
      if (key.find('.') == std::string::npos || key.rfind(prefix, 0) == 0) kept += line + "\n";
    }
    WriteFile(path, kept);
  };
  const auto need_out = [&]() {
    if (out.empty()) throw Failure{1, "--out is required for this subcommand"};
  };

  try {
    if (estimate->parsed()) {
      need_out();
      Corpus corpus = LoadCorpus(est_corpus);
      Corpus charset = est_charset.empty() ? nullptr : LoadCorpus(est_charset);
      ngi_lm* lm = nullptr;
      Check(ngi_lm_estimate(corpus.get(), charset.get(), order, &lm));
      Lm owned(lm);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      Check(ngi_lm_save(lm, out.c_str()));
      log_config(out + ".config.toml");
      std::cout << "wrote " << out << " (order " << order << ", K=" << ngi_lm_charset_size(lm)
                << ")\n";
    } else if (ppl->parsed()) {
      Lm lm = LoadLm(ppl_lm);
      Corpus corpus = LoadCorpus(ppl_corpus);
      double value = 0.0;
      Check(ngi_lm_perplexity(lm.get(), corpus.get(), &value));
      std::printf("ppl %.6f tokens %zu\n", value, ngi_corpus_token_count(corpus.get()));
      if (!out.empty()) {
        std::ostringstream j;
        j.precision(17);
        j << "{\"lm\": \"" << ppl_lm << "\", \"corpus\": \"" << ppl_corpus
          << "\", \"tokens\": " << ngi_corpus_token_count(corpus.get()) << ", \"ppl\": " << value
          << "}\n";
        WriteFile(out, j.str());
        log_config(out + ".config.toml");
      }
    } else if (split->parsed()) {
      need_out();
      Corpus corpus = LoadCorpus(split_corpus);
      ngi_manifest* m = nullptr;
      Check(ngi_split(corpus.get(), strategy.c_str(), seed, &m));
      Manifest owned(m);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      Check(ngi_manifest_save(m, out.c_str()));
      log_config(out + ".config.toml");
      std::cout << "wrote " << out << ":";
      for (const char* part : {"source_train", "source_val", "source_test", "target_ng", "target_test"})
        std::cout << ' ' << part << '=' << ngi_manifest_part_size(m, part);
      std::cout << '\n';
    } else if (audit->parsed()) {
      Manifest m = LoadManifest(audit_manifest);
      Corpus corpus = LoadCorpus(audit_corpus);
      char *json = nullptr, *table = nullptr;
      Check(ngi_audit(m.get(), corpus.get(), order, &json, &table));
      const std::string j = Str(json), t = Str(table);
      std::cout << t;
      if (!out.empty()) {
        WriteFile(out, j);
        log_config(out + ".config.toml");
      }
    } else if (synth->parsed()) {
      need_out();
      Corpus corpus = LoadCorpus(synth_corpus);
      Dataset d = OpenDataset("", corpus.get(), synth_flags, seed);
      Check(ngi_dataset_save(d.get(), out.c_str()));
      log_config((fs::path(out) / "config.toml").string());
      std::cout << "wrote " << ngi_dataset_size(d.get()) << " samples to " << out << '\n';
    } else if (train->parsed()) {
      need_out();
      const ngi_train_config flags = tc;
      Check(ngi_train_config_preset(preset.c_str(), &tc));
      // Explicit flags override the preset.
      if (o_d->count()) tc.d = flags.d;
      if (o_heads->count()) tc.heads = flags.heads;
      if (o_layers->count()) tc.layers = flags.layers;
      if (o_ffn->count()) tc.ffn_dim = flags.ffn_dim;
      if (o_dropout->count()) tc.dropout = flags.dropout;
      if (o_epochs->count()) tc.epochs = flags.epochs;
      if (o_batch->count()) tc.batch_size = flags.batch_size;
      if (o_lr->count()) tc.lr = flags.lr;
      tc.tfe = flags.tfe;
      tc.noise_a = flags.noise_a;
      tc.noise_b = flags.noise_b;
      tc.noise_tau = flags.noise_tau;
      tc.ngi = ngi_switch == "on" ? 1 : 0;
      tc.seed = seed;

      Corpus corpus = LoadCorpus(corpus_path);
      Manifest m = LoadManifest(manifest_path);
      Dataset d = OpenDataset(dataset_dir, corpus.get(), train_synth, seed);
      Lm lm;
      if (tc.ngi) {
        if (!lm_path.empty()) {
          lm = LoadLm(lm_path);
        } else {
          ngi_corpus* dev = nullptr;
          Check(ngi_corpus_subset(corpus.get(), m.get(), "source_dev", &dev));
          Corpus owned(dev);
          ngi_lm* est = nullptr;
          Check(ngi_lm_estimate(dev, corpus.get(), order, &est));
          lm.reset(est);
        }
      } else if (!lm_path.empty()) {
        throw Failure{1, "--lm needs --ngi on"};
      }
      ngi_model* model = nullptr;
      Check(ngi_train(d.get(), m.get(), lm.get(), &tc,
                      [](const char* line, void*) { std::cerr << line << '\n'; }, nullptr,
                      &model));
      Model owned(model);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      Check(ngi_model_save(model, out.c_str()));
      log_config(out + ".config.toml");
      std::cout << "wrote " << out << '\n';
    } else if (eval->parsed() || rescore->parsed()) {
      const bool beam = rescore->parsed();
      Model model = LoadModel(ev.checkpoint);
      Corpus corpus = LoadCorpus(ev.corpus);
      Manifest m = LoadManifest(ev.manifest);
      Dataset d = OpenDataset(ev.dataset, corpus.get(), ev.synth, seed);
      Lm lm = ev.lm.empty() ? nullptr : LoadLm(ev.lm);
      Lm fusion = ev.fusion_lm.empty() ? nullptr : LoadLm(ev.fusion_lm);
      const bool ngi = ngi_model_uses_ngi(model.get()) != 0;
      const ngi_lm* inject = ngi ? lm.get() : nullptr;
      if (!ngi && lm && !beam) throw Failure{1, "the model does not use n-gram injection; drop --lm"};
      const ngi_lm* fused = beam ? (fusion ? fusion.get() : lm.get()) : nullptr;
      double cer = 0.0;
      char* report = nullptr;
      Check(ngi_evaluate(model.get(), d.get(), m.get(), ev.subset.c_str(), inject, fused,
                         beam ? ev.beam : 0, beam ? ev.lambda : 0.0, &cer, &report));
      const std::string r = Str(report);
      std::printf("%s CER %.6f\n", ev.subset.c_str(), cer);
      if (!out.empty()) {
        WriteFile(out, r + "\n");
        log_config(out + ".config.toml");
      }
    } else if (experiment->parsed()) {
      std::vector<uint64_t> seeds;
      if (!seeds_text.empty()) {
        std::stringstream ss(seeds_text);
        for (std::string item; std::getline(ss, item, ',');) {
          try {
            seeds.push_back(std::stoull(item));
          } catch (const std::exception&) {
            throw Failure{1, "bad seed '" + item + "' in --seeds"};
          }
        }
      } else {
        if (num_seeds < 1) throw Failure{1, "--num-seeds must be positive"};
        for (int i = 0; i < num_seeds; ++i) seeds.push_back(seed + static_cast<uint64_t>(i));
      }
      ngi_experiment_config ec;
      ngi_experiment_config_default(&ec);
      ec.preset = exp_preset.c_str();
      ec.seeds = seeds.data();
      ec.n_seeds = seeds.size();
      ec.strategy = strategy.c_str();
      ec.beam_width = exp_beam;
      ec.ablate_order3 = ablate3;
      ec.ablate_noise = ablate_noise;
      ec.jobs = jobs;
      if (!out.empty()) {
        fs::create_directories(out);
        log_config((fs::path(out) / "config.toml").string());
      }
      char *json = nullptr, *table = nullptr;
      int pass = 0;
      Check(ngi_experiment(&ec, [](const char* line, void*) { std::cerr << line << '\n'; },
                           nullptr, &json, &table, &pass));
      const std::string j = Str(json), t = Str(table);
      if (!out.empty()) {
        WriteFile((fs::path(out) / "report.json").string(), j);
        WriteFile((fs::path(out) / "report.txt").string(), t);
      }
      std::cout << t;
      if (!pass) std::cerr << "note: not every directional check holds\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

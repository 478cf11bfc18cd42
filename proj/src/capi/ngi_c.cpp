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

#include "ngi/ngi.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"

struct ngi_corpus {
  ngi::Corpus corpus;
};
struct ngi_lm {
  ngi::NgramModel model;
};
struct ngi_manifest {
  ngi::SplitManifest manifest;
};
struct ngi_dataset {
  ngi::Charset charset;
  std::vector<ngi::TrainExample> samples;
};
struct ngi_model {
  ngi::Checkpoint ck;
};

namespace {

thread_local std::string last_error;

template <class F>
ngi_status Guard(F&& f) {
  try {
    f();
    last_error.clear();
    return NGI_OK;
  } catch (const ngi::UsageError& e) {
    last_error = e.what();
    return NGI_ERR_USAGE;
  } catch (const ngi::DataError& e) {
    last_error = e.what();
    return NGI_ERR_DATA;
  } catch (const ngi::Error& e) {
    last_error = e.what();
    return NGI_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NGI_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NGI_ERR_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (!p) throw ngi::UsageError(std::string(what) + " must not be null");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<ngi::Symbol> Context(const ngi::NgramModel& lm, const char* context,
                                 int at_word_start) {
  std::vector<ngi::Symbol> out;
  if (at_word_start) out.push_back(lm.charset().sos());
  for (char32_t c : ngi::DecodeUtf8(context ? context : ""))
    out.push_back(lm.charset().Index(c));
  return out;
}

std::vector<const ngi::TrainExample*> Part(const ngi_dataset* d, const ngi_manifest* m,
                                           const char* part) {
  std::vector<const ngi::TrainExample*> out;
  if (!m) {
    for (const auto& ex : d->samples) out.push_back(&ex);
    return out;
  }
  Require(part, "part");
  ngi::ValidateManifest(m->manifest, d->samples.size());
  for (size_t i : m->manifest.part(part)) out.push_back(&d->samples[i]);
  return out;
}

int MaxLen(const ngi_model* model, const ngi_dataset* d) {
  const auto meta = nlohmann::json::parse(model->ck.metadata_json);
  if (meta.contains("max_len")) return meta.at("max_len").get<int>();
  std::vector<const ngi::TrainExample*> all;
  for (const auto& ex : d->samples) all.push_back(&ex);
  return ngi::DecodeLengthCap(all);
}

void CheckDataset(const ngi_model* model, const ngi_dataset* d) {
  if (!(d->charset == model->ck.charset))
    throw ngi::DataError("charset mismatch between the dataset and the checkpoint");
}

}  // namespace

extern "C" {

const char* ngi_version(void) { return "1.0.0"; }

const char* ngi_last_error(void) { return last_error.c_str(); }

void ngi_string_free(char* s) { std::free(s); }

ngi_status ngi_corpus_load(const char* path, ngi_corpus** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ngi_corpus{ngi::Corpus::Load(path)};
  });
}

ngi_status ngi_corpus_from_words(const char* const* words, size_t n, ngi_corpus** out) {
  return Guard([&] {
    Require(out, "out");
    if (n) Require(words, "words");
    std::vector<std::string> w;
    for (size_t i = 0; i < n; ++i) {
      Require(words[i], "word");
      w.emplace_back(words[i]);
    }
    *out = new ngi_corpus{ngi::Corpus::FromUtf8(w)};
  });
}

size_t ngi_corpus_size(const ngi_corpus* c) { return c ? c->corpus.size() : 0; }

size_t ngi_corpus_token_count(const ngi_corpus* c) {
  return c ? c->corpus.token_count() : 0;
}

ngi_status ngi_corpus_charset(const ngi_corpus* c, char** out) {
  return Guard([&] {
    Require(c, "corpus");
    Require(out, "out");
    const auto cs = ngi::Charset::FromCorpus(c->corpus);
    *out = Dup(ngi::EncodeUtf8(std::u32string(cs.symbols().begin(), cs.symbols().end())));
  });
}

void ngi_corpus_free(ngi_corpus* c) { delete c; }

ngi_status ngi_lm_estimate(const ngi_corpus* corpus, const ngi_corpus* charset_source,
                           int order, ngi_lm** out) {
  return Guard([&] {
    Require(corpus, "corpus");
    Require(out, "out");
    const auto cs = ngi::Charset::FromCorpus(charset_source ? charset_source->corpus
                                                            : corpus->corpus);
    *out = new ngi_lm{ngi::EstimateWittenBell(corpus->corpus, cs, order)};
  });
}

ngi_status ngi_lm_load(const char* path, ngi_lm** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ngi_lm{ngi::LoadArpa(path)};
  });
}

ngi_status ngi_lm_save(const ngi_lm* lm, const char* path) {
  return Guard([&] {
    Require(lm, "lm");
    Require(path, "path");
    ngi::SaveArpa(lm->model, path);
  });
}

int ngi_lm_order(const ngi_lm* lm) { return lm ? lm->model.order() : 0; }

int ngi_lm_charset_size(const ngi_lm* lm) { return lm ? lm->model.charset().size() : 0; }

ngi_status ngi_lm_fingerprint(const ngi_lm* lm, char** out) {
  return Guard([&] {
    Require(lm, "lm");
    Require(out, "out");
    *out = Dup(ngi::Fingerprint(lm->model));
  });
}

ngi_status ngi_lm_score(const ngi_lm* lm, const char* context, int at_word_start,
                        const char* next, double* out) {
  return Guard([&] {
    Require(lm, "lm");
    Require(next, "next");
    Require(out, "out");
    const auto& cs = lm->model.charset();
    const auto w = cs.Parse(next);
    if (!w) throw ngi::DataError(std::string("symbol '") + next + "' is not in the charset");
    *out = lm->model.Score(Context(lm->model, context, at_word_start), *w);
  });
}

ngi_status ngi_lm_dist_vector(const ngi_lm* lm, const char* context, int at_word_start,
                              double* out, size_t k) {
  return Guard([&] {
    Require(lm, "lm");
    Require(out, "out");
    const auto v = lm->model.DistVector(Context(lm->model, context, at_word_start));
    if (k < v.size())
      throw ngi::UsageError("output has room for " + std::to_string(k) + " values, " +
                            std::to_string(v.size()) + " needed");
    std::copy(v.begin(), v.end(), out);
  });
}

ngi_status ngi_lm_perplexity(const ngi_lm* lm, const ngi_corpus* c, double* out) {
  return Guard([&] {
    Require(lm, "lm");
    Require(c, "corpus");
    Require(out, "out");
    *out = ngi::Perplexity(lm->model, c->corpus);
  });
}

void ngi_lm_free(ngi_lm* lm) { delete lm; }

ngi_status ngi_split(const ngi_corpus* c, const char* strategy, uint64_t seed,
                     ngi_manifest** out) {
  return Guard([&] {
    Require(c, "corpus");
    Require(strategy, "strategy");
    Require(out, "out");
    *out = new ngi_manifest{ngi::Split(c->corpus, ngi::ParseSplitStrategy(strategy), seed)};
  });
}

ngi_status ngi_manifest_load(const char* path, ngi_manifest** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ngi_manifest{ngi::SplitManifest::Load(path)};
  });
}

ngi_status ngi_manifest_save(const ngi_manifest* m, const char* path) {
  return Guard([&] {
    Require(m, "manifest");
    Require(path, "path");
    m->manifest.Save(path);
  });
}

ngi_status ngi_manifest_to_json(const ngi_manifest* m, char** out) {
  return Guard([&] {
    Require(m, "manifest");
    Require(out, "out");
    *out = Dup(m->manifest.ToJson());
  });
}

size_t ngi_manifest_part_size(const ngi_manifest* m, const char* part) {
  if (!m || !part) return 0;
  for (const char* name : ngi::kSplitParts)
    if (std::strcmp(name, part) == 0) return m->manifest.part(name).size();
  return 0;
}

ngi_status ngi_corpus_subset(const ngi_corpus* c, const ngi_manifest* m, const char* part,
                             ngi_corpus** out) {
  return Guard([&] {
    Require(c, "corpus");
    Require(m, "manifest");
    Require(part, "part");
    Require(out, "out");
    ngi::ValidateManifest(m->manifest, c->corpus.size());
    const auto idx = std::strcmp(part, "source_dev") == 0 ? m->manifest.source_dev()
                                                          : m->manifest.part(part);
    *out = new ngi_corpus{c->corpus.Subset(idx)};
  });
}

void ngi_manifest_free(ngi_manifest* m) { delete m; }

ngi_status ngi_audit(const ngi_manifest* m, const ngi_corpus* c, int order, char** json,
                     char** table) {
  return Guard([&] {
    Require(m, "manifest");
    Require(c, "corpus");
    const auto report = ngi::Audit(m->manifest, c->corpus, order);
    std::string j = report.ToJson(), t = report.ToTable();
    char* jp = json ? Dup(j) : nullptr;
    if (table) *table = Dup(t);
    if (json) *json = jp;
  });
}

void ngi_synth_config_default(ngi_synth_config* cfg) {
  if (!cfg) return;
  const ngi::SynthConfig d;
  cfg->proto_dim = d.proto_dim;
  cfg->frames_per_char = d.frames_per_char;
  cfg->noise_sigma = d.noise_sigma;
  cfg->confusion_pairs = "ao,ei";
  cfg->terminator = d.terminator ? 1 : 0;
}

ngi_status ngi_dataset_synthesize(const ngi_corpus* c, const ngi_synth_config* cfg,
                                  uint64_t seed, ngi_dataset** out) {
  return Guard([&] {
    Require(c, "corpus");
    Require(cfg, "config");
    Require(out, "out");
    ngi::SynthConfig sc;
    sc.proto_dim = cfg->proto_dim;
    sc.frames_per_char = cfg->frames_per_char;
    sc.noise_sigma = cfg->noise_sigma;
    sc.terminator = cfg->terminator != 0;
    sc.confusion_pairs.clear();
    const std::u32string pairs = ngi::DecodeUtf8(cfg->confusion_pairs ? cfg->confusion_pairs : "");
    size_t start = 0;
    while (start <= pairs.size() && !pairs.empty()) {
      const size_t comma = std::min(pairs.find(U',', start), pairs.size());
      const std::u32string item = pairs.substr(start, comma - start);
      if (item.size() != 2)
        throw ngi::UsageError("confusion pairs are two characters each, comma separated");
      sc.confusion_pairs.emplace_back(item[0], item[1]);
      start = comma + 1;
    }
    auto* d = new ngi_dataset{ngi::Charset::FromCorpus(c->corpus), {}};
    try {
      d->samples = ngi::SynthGenerate(sc, d->charset, c->corpus.words(), seed);
    } catch (...) {
      delete d;
      throw;
    }
    *out = d;
  });
}

ngi_status ngi_dataset_load(const char* dir, ngi_dataset** out) {
  return Guard([&] {
    Require(dir, "dir");
    Require(out, "out");
    auto* d = new ngi_dataset;
    try {
      d->samples = ngi::LoadDataset(dir, &d->charset);
    } catch (...) {
      delete d;
      throw;
    }
    *out = d;
  });
}

ngi_status ngi_dataset_save(const ngi_dataset* d, const char* dir) {
  return Guard([&] {
    Require(d, "dataset");
    Require(dir, "dir");
    ngi::SaveDataset(dir, d->charset, d->samples);
  });
}

size_t ngi_dataset_size(const ngi_dataset* d) { return d ? d->samples.size() : 0; }

void ngi_dataset_free(ngi_dataset* d) { delete d; }

void ngi_train_config_default(ngi_train_config* cfg) {
  if (!cfg) return;
  const ngi::DecoderConfig dc;
  const ngi::NoiseConfig noise;
  cfg->ngi = 1;
  cfg->d = dc.d;
  cfg->heads = dc.heads;
  cfg->layers = dc.layers;
  cfg->ffn_dim = dc.ffn_dim;
  cfg->dropout = dc.dropout;
  cfg->epochs = 60;
  cfg->batch_size = 128;
  cfg->lr = ngi::AdamConfig{}.lr;
  cfg->tfe = 0.1;
  cfg->noise_a = noise.a;
  cfg->noise_b = noise.b;
  cfg->noise_tau = noise.tau;
  cfg->seed = 1;
}

ngi_status ngi_train_config_preset(const char* name, ngi_train_config* cfg) {
  return Guard([&] {
    Require(name, "name");
    Require(cfg, "config");
    const auto preset = ngi::ExperimentConfig::Preset(name);
    const int ngi = cfg->ngi;
    const uint64_t seed = cfg->seed;
    ngi_train_config_default(cfg);
    const auto& t = preset.train;
    cfg->ngi = ngi;
    cfg->seed = seed;
    cfg->d = t.decoder.d;
    cfg->heads = t.decoder.heads;
    cfg->layers = t.decoder.layers;
    cfg->ffn_dim = t.decoder.ffn_dim;
    cfg->dropout = t.decoder.dropout;
    cfg->epochs = t.epochs;
    cfg->batch_size = t.batch_size;
    cfg->lr = t.adam.lr;
  });
}

ngi_status ngi_train(const ngi_dataset* d, const ngi_manifest* m, const ngi_lm* lm,
                     const ngi_train_config* cfg, ngi_log_fn log, void* user,
                     ngi_model** out) {
  return Guard([&] {
    Require(d, "dataset");
    Require(m, "manifest");
    Require(cfg, "config");
    Require(out, "out");
    ngi::TrainConfig tc;
    tc.decoder.ngi = cfg->ngi != 0;
    tc.decoder.d = cfg->d;
    tc.decoder.heads = cfg->heads;
    tc.decoder.layers = cfg->layers;
    tc.decoder.ffn_dim = cfg->ffn_dim;
    tc.decoder.dropout = cfg->dropout;
    tc.epochs = cfg->epochs;
    tc.batch_size = cfg->batch_size;
    tc.adam.lr = cfg->lr;
    tc.tfe = cfg->tfe;
    tc.noise = {cfg->noise_a, cfg->noise_b, cfg->noise_tau};
    tc.seed = cfg->seed;
    const auto train = Part(d, m, "source_train");
    ngi::TrainLog cb;
    if (log)
      cb = [&](int epoch, double loss) {
        const std::string line = "epoch " + std::to_string(epoch) + " loss " + std::to_string(loss);
        log(line.c_str(), user);
      };
    *out = new ngi_model{ngi::TrainModel(train, d->charset, lm ? &lm->model : nullptr, tc, cb)};
  });
}

ngi_status ngi_model_load(const char* path, ngi_model** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ngi_model{ngi::Checkpoint::Load(path)};
  });
}

ngi_status ngi_model_save(const ngi_model* model, const char* path) {
  return Guard([&] {
    Require(model, "model");
    Require(path, "path");
    model->ck.Save(path);
  });
}

int ngi_model_uses_ngi(const ngi_model* model) {
  return model && model->ck.config.ngi ? 1 : 0;
}

ngi_status ngi_model_info(const ngi_model* model, char** out) {
  return Guard([&] {
    Require(model, "model");
    Require(out, "out");
    const auto& c = model->ck.config;
    nlohmann::ordered_json j{
        {"config", {{"charset_size", c.charset_size}, {"feature_dim", c.feature_dim},
                    {"d", c.d}, {"heads", c.heads}, {"layers", c.layers},
                    {"ffn_dim", c.ffn_dim}, {"dropout", c.dropout}, {"ngi", c.ngi}}},
        {"parameters", model->ck.params.ParameterCount()},
        {"seed", model->ck.seed},
        {"lm_fingerprint", model->ck.lm_fingerprint},
        {"lm_order", model->ck.lm_order},
        {"metadata", nlohmann::ordered_json::parse(model->ck.metadata_json)}};
    *out = Dup(j.dump(2));
  });
}

ngi_status ngi_model_param_hash(const ngi_model* model, char** out) {
  return Guard([&] {
    Require(model, "model");
    Require(out, "out");
    std::string bytes;
    model->ck.params.ForEach([&](const std::string&, const ngi::nn::Matrix& m) {
      bytes.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
    });
    *out = Dup(ngi::Fnv1aHex(bytes));
  });
}

void ngi_model_free(ngi_model* model) { delete model; }

ngi_status ngi_decode(const ngi_model* model, const ngi_dataset* d, size_t index,
                      const ngi_lm* inject_lm, const ngi_lm* fusion_lm, int beam_width,
                      double lambda, char** out) {
  return Guard([&] {
    Require(model, "model");
    Require(d, "dataset");
    Require(out, "out");
    CheckDataset(model, d);
    if (index >= d->samples.size()) throw ngi::UsageError("sample index out of range");
    if (beam_width < 0) throw ngi::UsageError("beam width must be >= 0");
    const auto& frames = d->samples[index].frames;
    const int max_len = MaxLen(model, d);
    const ngi::NgramModel* inject = inject_lm ? &inject_lm->model : nullptr;
    const auto symbols =
        beam_width == 0
            ? ngi::GreedyDecode(model->ck, frames, inject, max_len)
            : ngi::BeamRescore(model->ck, frames, inject, fusion_lm ? &fusion_lm->model : nullptr,
                               {beam_width, lambda}, max_len)
                  .symbols;
    *out = Dup(ngi::EncodeUtf8(model->ck.charset.Decode(symbols)));
  });
}

ngi_status ngi_evaluate(const ngi_model* model, const ngi_dataset* d, const ngi_manifest* m,
                        const char* part, const ngi_lm* inject_lm, const ngi_lm* fusion_lm,
                        int beam_width, double lambda, double* cer, char** report) {
  return Guard([&] {
    Require(model, "model");
    Require(d, "dataset");
    CheckDataset(model, d);
    if (beam_width < 0) throw ngi::UsageError("beam width must be >= 0");
    const auto samples = Part(d, m, part);
    const auto mode = beam_width == 0 ? ngi::DecodeMode::kGreedy : ngi::DecodeMode::kBeam;
    const auto r = ngi::Evaluate(model->ck, samples, d->charset,
                                 inject_lm ? &inject_lm->model : nullptr,
                                 fusion_lm ? &fusion_lm->model : nullptr, mode,
                                 {beam_width, lambda}, MaxLen(model, d));
    if (cer) *cer = r.cer;
    if (report) {
      nlohmann::ordered_json j{{"subset", m ? part : "all"},
                               {"mode", ngi::ToString(r.mode)},
                               {"inject_lm", r.inject_lm},
                               {"fusion_lm", r.fusion_lm},
                               {"beam", r.beam},
                               {"lambda", r.lambda},
                               {"samples", r.samples},
                               {"errors", r.errors},
                               {"ref_chars", r.ref_chars},
                               {"cer", r.cer}};
      *report = Dup(j.dump(2));
    }
  });
}

void ngi_experiment_config_default(ngi_experiment_config* cfg) {
  if (!cfg) return;
  cfg->preset = "desk";
  cfg->seeds = nullptr;
  cfg->n_seeds = 0;
  cfg->strategy = nullptr;
  cfg->beam_width = 0;
  cfg->ablate_order3 = 0;
  cfg->ablate_noise = 0;
  cfg->jobs = 1;
}

ngi_status ngi_experiment(const ngi_experiment_config* cfg, ngi_log_fn log, void* user,
                          char** json, char** table, int* all_pass) {
  return Guard([&] {
    Require(cfg, "config");
    auto ec = ngi::ExperimentConfig::Preset(cfg->preset ? cfg->preset : "desk");
    if (cfg->seeds && cfg->n_seeds) ec.seeds.assign(cfg->seeds, cfg->seeds + cfg->n_seeds);
    if (cfg->strategy) ec.strategy = ngi::ParseSplitStrategy(cfg->strategy);
    if (cfg->beam_width < 0) throw ngi::UsageError("beam width must be >= 0");
    if (cfg->beam_width > 0) ec.beam_width = cfg->beam_width;
    ec.ablate_order3 = cfg->ablate_order3 != 0;
    ec.ablate_noise = cfg->ablate_noise != 0;
    ec.jobs = cfg->jobs;
    ngi::ExperimentLog cb;
    if (log) cb = [&](const std::string& line) { log(line.c_str(), user); };
    const auto result = ngi::RunExperiment(ec, cb);
    if (all_pass) {
      *all_pass = 1;
      for (const auto& c : result.Checks()) *all_pass &= c.pass ? 1 : 0;
    }
    char* jp = json ? Dup(result.ToJson()) : nullptr;
    if (table) *table = Dup(result.ToTable());
    if (json) *json = jp;
  });
}

}  // extern "C"

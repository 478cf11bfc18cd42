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
// Desk-scale recognition task: synthetic feature frames stand in for word
// images, the decoder reads them, and n-gram models are switched at
// inference time.

#ifndef NGI_HARNESS_HPP_
#define NGI_HARNESS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ngi/charset.hpp"
#include "ngi/decoder.hpp"
#include "ngi/injection.hpp"
#include "ngi/ngram.hpp"
#include "ngi/splitter.hpp"

namespace ngi {

struct SynthConfig {
  int proto_dim = 16;
  int frames_per_char = 1;
  double noise_sigma = 0.3;
  // The second symbol's prototype sits at distance 0.5 * noise_sigma from
  // the first one's.
  std::vector<std::pair<char32_t, char32_t>> confusion_pairs = {{U'a', U'o'},
                                                                {U'e', U'i'}};
  // Append frames_per_char frames of the end-of-word prototype.
  bool terminator = true;

  void Validate() const;  // throws UsageError
};

// One prototype row per predictable symbol (K rows, last one is EOS).
nn::Matrix SynthPrototypes(const SynthConfig& cfg, const Charset& charset,
                           uint64_t seed);

// Sample i uses its own stream, so a dataset is a pure function of
// (cfg, words, seed).
std::vector<TrainExample> SynthGenerate(const SynthConfig& cfg,
                                        const Charset& charset,
                                        const std::vector<std::u32string>& words,
                                        uint64_t seed);

// Per-character nearest prototype; the decoding floor without a model.
std::vector<Symbol> NearestPrototypeDecode(const nn::Matrix& frames,
                                           const nn::Matrix& prototypes,
                                           int frames_per_char);

// Dataset cache: features.bin (float64 frames) plus index.tsv
// (word, first row, row count) and dataset.json (width, charset).
void SaveDataset(const std::string& dir, const Charset& charset,
                 const std::vector<TrainExample>& samples);
std::vector<TrainExample> LoadDataset(const std::string& dir,
                                      Charset* charset);

size_t EditDistance(std::u32string_view a, std::u32string_view b);
// Levenshtein distance / |reference|; empty reference is a UsageError.
double Cer(std::u32string_view reference, std::u32string_view hypothesis);

// Word corpus for the synthetic benchmark: random letter strings over
// `letters`, each type repeated a uniform 2..7 times.
struct BenchmarkCorpusConfig {
  std::u32string letters = U"abcdefghiklmnoprstu";
  int types = 127;
  int min_length = 3;
  int max_length = 8;
  int min_count = 2;
  int max_count = 7;
};

Corpus BenchmarkCorpus(const BenchmarkCorpusConfig& cfg, uint64_t seed);

// 2 x longest word + 2.
int DecodeLengthCap(const std::vector<const TrainExample*>& train);

// Argmax decoding, ties to the lower symbol. The model reads the clean
// distribution vector of lm for the current prefix; lm must be given iff
// the model uses injection.
std::vector<Symbol> GreedyDecode(const Checkpoint& model,
                                 const nn::Matrix& frames,
                                 const NgramModel* lm, int max_len);

struct BeamConfig {
  int width = 150;
  double lambda = 0.5;
};

struct BeamResult {
  std::vector<Symbol> symbols;  // without EOS
  double nn_score = 0.0;        // sum of ln P_nn, EOS included
  double lm_score = 0.0;        // sum of log10 P_lm, EOS included
  double fused = 0.0;           // nn_score + lambda ln(10) lm_score
  bool finished = false;        // ended with EOS before the cap
};

// Shallow fusion: inject_lm feeds the model (required iff it uses
// injection); fusion_lm adds lambda ln(10) log10 P per emitted symbol. The
// returned hypothesis maximizes fused / (length + 1).
BeamResult BeamRescore(const Checkpoint& model, const nn::Matrix& frames,
                       const NgramModel* inject_lm, const NgramModel* fusion_lm,
                       const BeamConfig& cfg, int max_len);

struct TrainConfig {
  DecoderConfig decoder;  // charset_size and feature_dim are filled in
  AdamConfig adam;
  int epochs = 30;
  int batch_size = 16;
  double tfe = 0.1;
  NoiseConfig noise;
  uint64_t seed = 1;
};

using TrainLog = std::function<void(int epoch, double loss)>;

// Trains on `train` (batches in a seeded per-epoch order). lm feeds the
// injection and must be given iff cfg.decoder.ngi.
Checkpoint TrainModel(const std::vector<const TrainExample*>& train,
                      const Charset& charset, const NgramModel* lm,
                      const TrainConfig& cfg, const TrainLog& log = nullptr);

enum class DecodeMode { kGreedy, kBeam };
std::string ToString(DecodeMode m);

struct EvalReport {
  std::string model;     // row label
  std::string lm;        // source, target or none
  std::string subset;    // source_test, target_test, ...
  DecodeMode mode = DecodeMode::kGreedy;
  std::string inject_lm;  // fingerprint or empty
  std::string fusion_lm;  // fingerprint or empty (beam only)
  double lambda = 0.0;
  int beam = 0;
  size_t samples = 0;
  size_t errors = 0;      // summed edit distance
  size_t ref_chars = 0;
  double cer = 0.0;       // errors / ref_chars
};

EvalReport Evaluate(const Checkpoint& model,
                    const std::vector<const TrainExample*>& samples,
                    const Charset& charset, const NgramModel* inject_lm,
                    const NgramModel* fusion_lm, DecodeMode mode,
                    const BeamConfig& beam, int max_len);

struct ExperimentConfig {
  std::string preset = "desk";
  std::vector<uint64_t> seeds = {1, 2, 3};
  BenchmarkCorpusConfig corpus;
  SynthConfig synth;
  TrainConfig train;
  SplitStrategy strategy = SplitStrategy::kLexicon;
  int order = 5;
  int low_order = 2;
  bool ablate_order3 = false;
  bool ablate_noise = false;
  int beam_width = 16;
  std::vector<double> lambda_grid = {0.0, 0.1, 0.25, 0.5, 1.0};
  int jobs = 1;

  // desk: d=64 profile and a small beam; paper: paper-scale decoder, beam
  // 150 (slow on a laptop).
  static ExperimentConfig Preset(const std::string& name);
};

// One seed of the benchmark: corpus, lexicon split, synthetic frames, the
// n-gram models, every training run and the evaluation grid.
struct SeedResult {
  uint64_t seed = 0;
  std::array<size_t, 5> sizes{};  // per kSplitParts
  AuditReport audit;
  std::vector<std::pair<std::string, std::string>> lms;  // label, fingerprint
  std::vector<std::pair<std::string, double>> lambdas;   // model, tuned lambda
  std::vector<std::pair<std::string, double>> train_seconds;
  std::vector<EvalReport> cells;
};

struct ExperimentCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  double seconds = 0.0;

  // Mean CER over seeds of the matching cell; NaN when absent.
  double MeanCer(const std::string& model, const std::string& lm,
                 const std::string& subset, DecodeMode mode) const;
  std::vector<ExperimentCheck> Checks() const;
  std::string ToJson() const;
  std::string ToTable() const;
};

using ExperimentLog = std::function<void(const std::string& line)>;

SeedResult RunExperimentSeed(const Corpus& corpus, const SplitManifest& manifest,
                             const ExperimentConfig& cfg, uint64_t seed,
                             const ExperimentLog& log = nullptr);
ExperimentResult RunExperiment(const ExperimentConfig& cfg,
                               const ExperimentLog& log = nullptr);

}  // namespace ngi

#endif  // NGI_HARNESS_HPP_

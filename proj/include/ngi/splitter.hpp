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
// Perplexity-controlled source/target splits of a word corpus.
//
// Both strategies allocate word *types* to a source or a target pool first,
// then shuffle and cut the samples of each pool:
//   source pool -> train / val / test
//   target pool -> NG (text for the target n-gram) / test
// Cuts use cumulative rounding: the boundary after part i sits at
// round(pool_size * sum_{j<=i} r_j / sum_pool r), so every part is within
// one sample of its share of the pool.

#ifndef NGI_SPLITTER_HPP_
#define NGI_SPLITTER_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ngi/charset.hpp"

namespace ngi {

enum class SplitStrategy { kLexicon, kKMeans };

std::string ToString(SplitStrategy s);
SplitStrategy ParseSplitStrategy(const std::string& s);  // throws UsageError

// source_train, source_val, source_test, target_ng, target_test.
using SplitRatios = std::array<double, 5>;
inline constexpr SplitRatios kDefaultRatios = {0.70, 0.075, 0.075, 0.075,
                                               0.075};

struct SplitManifest {
  SplitStrategy strategy = SplitStrategy::kLexicon;
  uint64_t seed = 0;
  SplitRatios ratios = kDefaultRatios;
  // Sorted sample indices into the input corpus.
  std::vector<size_t> source_train;
  std::vector<size_t> source_val;
  std::vector<size_t> source_test;
  std::vector<size_t> target_ng;
  std::vector<size_t> target_test;

  // train + val, sorted.
  std::vector<size_t> source_dev() const;
  const std::vector<size_t>& part(const std::string& name) const;

  // Stable key order: strategy, seed, ratios, then the five lists.
  std::string ToJson() const;
  static SplitManifest FromJson(const std::string& text);
  void Save(const std::string& path) const;
  static SplitManifest Load(const std::string& path);

  bool operator==(const SplitManifest&) const = default;
};

inline constexpr std::array<const char*, 5> kSplitParts = {
    "source_train", "source_val", "source_test", "target_ng", "target_test"};

// Throws DataError when a manifest does not partition [0, corpus_size).
void ValidateManifest(const SplitManifest& m, size_t corpus_size);

struct TwoGramEmbedding {
  std::vector<std::pair<char32_t, char32_t>> index;  // sorted
  std::vector<std::vector<double>> vectors;          // 0/1 per word
};

TwoGramEmbedding TwoGramEmbed(const std::vector<std::u32string>& lexicon);

struct KMeansOptions {
  int max_iters = 100;
  // Seeded k-means++ restarts; the lowest-SSE run wins.
  int restarts = 10;
  // Inputs this small are also solved by exhaustive search.
  size_t exact_up_to = 16;
};

// 2-means: k-means++ seeding, Lloyd iterations, empty-cluster repair and a
// final single-point-move refinement; inputs of at most exact_up_to points
// are confirmed by exhaustive search. Throws DataError when all vectors
// are identical.
std::vector<int> KMeans2(const std::vector<std::vector<double>>& points,
                         uint64_t seed, const KMeansOptions& opts = {});

// Within-cluster sum of squared distances to the cluster means.
double WithinClusterSse(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& assignment);

SplitManifest LexiconSplit(const Corpus& corpus, uint64_t seed,
                           const SplitRatios& ratios = kDefaultRatios);
SplitManifest KMeansSplit(const Corpus& corpus, uint64_t seed,
                          const SplitRatios& ratios = kDefaultRatios,
                          const KMeansOptions& opts = {});
SplitManifest Split(const Corpus& corpus, SplitStrategy strategy,
                    uint64_t seed, const SplitRatios& ratios = kDefaultRatios);

struct AuditReport {
  int order = 5;
  std::array<size_t, 5> sizes{};  // per kSplitParts
  size_t source_dev_size = 0;
  double source_dev_on_source_test = 0.0;
  double source_dev_on_target_test = 0.0;
  double target_ng_on_target_test = 0.0;

  std::string ToJson() const;
  std::string ToTable() const;
};

// n-grams over the full-corpus charset, estimated on source dev and on
// target NG, scored on the two test sets.
AuditReport Audit(const SplitManifest& manifest, const Corpus& corpus,
                  int order = 5);

}  // namespace ngi

#endif  // NGI_SPLITTER_HPP_

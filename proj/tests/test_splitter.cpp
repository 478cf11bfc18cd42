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

#include <doctest.h>

#include <random>
#include <set>

#include "ngi/error.hpp"
#include "ngi/splitter.hpp"
#include "oracles.hpp"

using namespace ngi;

namespace {

Corpus Repeat(const std::vector<std::pair<std::string, int>>& types) {
  std::vector<std::string> words;
  for (const auto& [w, n] : types)
    for (int i = 0; i < n; ++i) words.push_back(w);
  return Corpus::FromUtf8(words);
}

std::set<std::u32string> Types(const Corpus& c, const std::vector<size_t>& idx) {
  std::set<std::u32string> out;
  for (size_t i : idx) out.insert(c.words()[i]);
  return out;
}

std::vector<size_t> Concat(std::initializer_list<const std::vector<size_t>*> parts) {
  std::vector<size_t> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

void CheckPartition(const SplitManifest& m, size_t n) {
  std::vector<size_t> all = Concat({&m.source_train, &m.source_val, &m.source_test,
                                    &m.target_ng, &m.target_test});
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == n);
  for (size_t i = 0; i < n; ++i) CHECK(all[i] == i);
  CHECK_NOTHROW(ValidateManifest(m, n));
}

// Two vocabularies that share no 2-gram.
Corpus TwoVocabularies() {
  return Repeat({{"abab", 10}, {"baba", 10}, {"aabb", 10}, {"abba", 10}, {"bbaa", 10},
                 {"bab", 10}, {"xyxy", 5}, {"yxyx", 5}, {"xxyy", 5}, {"yxxy", 5}});
}

}  // namespace

TEST_CASE("lexicon split: mass rule, disjoint types, partition") {
  const Corpus c = Repeat({{"abc", 25}, {"bca", 25}, {"cab", 25}, {"acb", 25}});
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    const SplitManifest m = LexiconSplit(c, seed);
    const auto src = Types(c, Concat({&m.source_train, &m.source_val, &m.source_test}));
    const auto tgt = Types(c, Concat({&m.target_ng, &m.target_test}));
    CHECK(tgt.size() == 1);
    CHECK(src.size() == 3);
    for (const auto& t : tgt) CHECK(src.count(t) == 0);
    CheckPartition(m, c.size());
    CHECK(m.target_ng.size() + m.target_test.size() == 25);
  }
}

TEST_CASE("splits are deterministic under a fixed seed") {
  const Corpus c = TwoVocabularies();
  CHECK(LexiconSplit(c, 9).ToJson() == LexiconSplit(c, 9).ToJson());
  CHECK(KMeansSplit(c, 9).ToJson() == KMeansSplit(c, 9).ToJson());
  const SplitManifest m = KMeansSplit(c, 9);
  CHECK(SplitManifest::FromJson(m.ToJson()) == m);
}

TEST_CASE("2-gram embedding") {
  const TwoGramEmbedding e = TwoGramEmbed({U"ab", U"ba"});
  REQUIRE(e.index.size() == 2);
  CHECK(e.vectors[0] == std::vector<double>{1, 0});
  CHECK(e.vectors[1] == std::vector<double>{0, 1});

  const TwoGramEmbedding f = TwoGramEmbed({U"aaa", U"x", U"ab"});
  REQUIRE(f.index.size() == 2);
  CHECK(f.index[0] == std::make_pair(U'a', U'a'));
  CHECK(f.vectors[0] == std::vector<double>{1, 0});
  CHECK(f.vectors[1] == std::vector<double>{0, 0});
  CHECK(f.vectors[2] == std::vector<double>{0, 1});
}

TEST_CASE("2-means on separated points") {
  const std::vector<std::vector<double>> pts = {{0, 0}, {0, 0.1}, {10, 10}, {10, 9.9}};
  const auto a = KMeans2(pts, 3);
  CHECK(a[0] == a[1]);
  CHECK(a[2] == a[3]);
  CHECK(a[0] != a[2]);
  CHECK(WithinClusterSse(pts, a) == doctest::Approx(oracle::BestTwoPartitionSse(pts)));
  CHECK(KMeans2(pts, 3) == a);
  CHECK_THROWS_AS(KMeans2({{1, 1}, {1, 1}, {1, 1}}, 3), DataError);
}

TEST_CASE("2-means reaches the exhaustive optimum") {
  std::mt19937_64 g(77);
  std::uniform_int_distribution<int> npts(2, 12), dim(1, 4);
  std::bernoulli_distribution bit(0.4);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = npts(g), d = dim(g);
    std::vector<std::vector<double>> pts(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(d)));
    bool distinct = false;
    for (auto& p : pts)
      for (double& x : p) x = bit(g) ? 1.0 : 0.0;
    for (const auto& p : pts) distinct |= p != pts[0];
    if (!distinct) continue;
    const auto a = KMeans2(pts, static_cast<uint64_t>(trial));
    CHECK(WithinClusterSse(pts, a) == doctest::Approx(oracle::BestTwoPartitionSse(pts)).epsilon(1e-9));
  }
}

TEST_CASE("k-means split separates two vocabularies") {
  const Corpus c = TwoVocabularies();
  const SplitManifest m = KMeansSplit(c, 5);
  CheckPartition(m, c.size());
  const auto src = Types(c, Concat({&m.source_train, &m.source_val, &m.source_test}));
  const auto tgt = Types(c, Concat({&m.target_ng, &m.target_test}));
  // The larger-mass cluster (the a/b words, 60 of 80 samples) is the source.
  for (const auto& w : src) CHECK(w.find_first_of(U"xy") == std::u32string::npos);
  for (const auto& w : tgt) CHECK(w.find_first_of(U"ab") == std::u32string::npos);
  CHECK(src.size() == 6);
  CHECK(tgt.size() == 4);

  const AuditReport r = Audit(m, c, 5);
  CHECK(r.source_dev_on_target_test > r.source_dev_on_source_test);
  CHECK(r.target_ng_on_target_test < r.source_dev_on_target_test);
  CHECK(r.sizes[0] == m.source_train.size());
  CHECK(r.sizes[3] == m.target_ng.size());
  CHECK(r.sizes[4] == m.target_test.size());
  CHECK(r.source_dev_size == m.source_dev().size());
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(LexiconSplit(Repeat({{"ab", 10}}), 1), DataError);
  CHECK_THROWS_AS(LexiconSplit(Repeat({{"ab", 1}, {"ba", 1}}), 1), DataError);
  CHECK_THROWS_AS(ParseSplitStrategy("random"), UsageError);
  const SplitManifest m = LexiconSplit(TwoVocabularies(), 1);
  CHECK_THROWS_AS(m.part("dev"), UsageError);
  CHECK_THROWS_AS(ValidateManifest(m, 10), DataError);
  CHECK_THROWS_AS(SplitManifest::FromJson("{"), DataError);
}

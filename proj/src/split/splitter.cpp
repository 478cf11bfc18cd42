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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/ngram.hpp"
#include "ngi/rng.hpp"
#include "ngi/splitter.hpp"

namespace ngi {
namespace {

using Json = nlohmann::ordered_json;

struct Lexicon {
  std::vector<std::u32string> types;         // sorted
  std::vector<std::vector<size_t>> samples;  // per type, ascending
};

Lexicon BuildLexicon(const Corpus& corpus) {
  std::map<std::u32string, std::vector<size_t>> by_type;
  for (size_t i = 0; i < corpus.size(); ++i)
    by_type[corpus.words()[i]].push_back(i);
  Lexicon lex;
  for (auto& [t, s] : by_type) {
    lex.types.push_back(t);
    lex.samples.push_back(std::move(s));
  }
  return lex;
}

void CheckRatios(const SplitRatios& r) {
  double sum = 0.0;
  for (double x : r) {
    if (!(x >= 0.0)) throw UsageError("split ratios must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw UsageError("split ratios must sum to 1");
  if (r[0] + r[1] + r[2] <= 0.0 || r[3] + r[4] <= 0.0)
    throw UsageError("both source and target ratios must be positive");
}

// Cuts a shuffled pool into parts proportional to `weights`.
std::vector<std::vector<size_t>> CutPool(std::vector<size_t> pool,
                                         const std::vector<double>& weights,
                                         Rng& rng) {
  rng.Shuffle(pool);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::vector<size_t>> parts(weights.size());
  double cum = 0.0;
  size_t begin = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    size_t end = i + 1 == weights.size()
                     ? pool.size()
                     : static_cast<size_t>(std::floor(
                           double(pool.size()) * cum / total + 0.5));
    end = std::clamp(end, begin, pool.size());
    parts[i].assign(pool.begin() + static_cast<long>(begin),
                    pool.begin() + static_cast<long>(end));
    std::sort(parts[i].begin(), parts[i].end());
    if (parts[i].empty() && weights[i] > 0.0)
      throw DataError("corpus too small: a split part came out empty");
    begin = end;
  }
  return parts;
}

SplitManifest CutPools(const Lexicon& lex, const std::vector<bool>& is_target,
                       SplitStrategy strategy, uint64_t seed,
                       const SplitRatios& ratios, Rng& rng) {
  std::vector<size_t> source, target;
  for (size_t t = 0; t < lex.types.size(); ++t) {
    auto& dst = is_target[t] ? target : source;
    dst.insert(dst.end(), lex.samples[t].begin(), lex.samples[t].end());
  }
  if (source.empty() || target.empty())
    throw DataError("corpus too small: one pool received no word types");
  std::sort(source.begin(), source.end());
  std::sort(target.begin(), target.end());
  auto s = CutPool(std::move(source), {ratios[0], ratios[1], ratios[2]}, rng);
  auto t = CutPool(std::move(target), {ratios[3], ratios[4]}, rng);
  SplitManifest m;
  m.strategy = strategy;
  m.seed = seed;
  m.ratios = ratios;
  m.source_train = std::move(s[0]);
  m.source_val = std::move(s[1]);
  m.source_test = std::move(s[2]);
  m.target_ng = std::move(t[0]);
  m.target_test = std::move(t[1]);
  return m;
}

double SquaredDistance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

struct KMeansRun {
  std::vector<int> assignment;
  double sse = 0.0;
};

void Centroids(const std::vector<std::vector<double>>& pts,
               const std::vector<int>& a,
               std::array<std::vector<double>, 2>& c,
               std::array<size_t, 2>& n) {
  const size_t dim = pts[0].size();
  for (int k = 0; k < 2; ++k) {
    c[k].assign(dim, 0.0);
    n[k] = 0;
  }
  for (size_t i = 0; i < pts.size(); ++i) {
    auto& ck = c[static_cast<size_t>(a[i])];
    for (size_t j = 0; j < dim; ++j) ck[j] += pts[i][j];
    ++n[static_cast<size_t>(a[i])];
  }
  for (int k = 0; k < 2; ++k)
    if (n[k])
      for (double& x : c[k]) x /= double(n[k]);
}

KMeansRun RunOnce(const std::vector<std::vector<double>>& pts, Rng& rng,
                  int max_iters) {
  const size_t n = pts.size();
  // k-means++ seeding.
  std::array<std::vector<double>, 2> c;
  c[0] = pts[rng.Below(n)];
  std::vector<double> d2(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) total += d2[i] = SquaredDistance(pts[i], c[0]);
  double u = rng.Uniform() * total;
  size_t pick = n - 1;
  for (size_t i = 0; i < n; ++i) {
    if (d2[i] <= 0.0) continue;
    if (u < d2[i]) {
      pick = i;
      break;
    }
    u -= d2[i];
  }
  while (d2[pick] <= 0.0) --pick;  // rounding at the tail
  c[1] = pts[pick];

  std::vector<int> a(n, -1);
  std::array<size_t, 2> count{};
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      const int k =
          SquaredDistance(pts[i], c[1]) < SquaredDistance(pts[i], c[0]) ? 1 : 0;
      if (k != a[i]) {
        a[i] = k;
        changed = true;
      }
    }
    Centroids(pts, a, c, count);
    for (int k = 0; k < 2; ++k) {
      if (count[k]) continue;
      // Empty cluster: hand it the point farthest from its centroid.
      size_t far = 0;
      double best = -1.0;
      for (size_t i = 0; i < n; ++i) {
        const double d = SquaredDistance(pts[i], c[static_cast<size_t>(a[i])]);
        if (d > best) {
          best = d;
          far = i;
        }
      }
      a[far] = k;
      changed = true;
      Centroids(pts, a, c, count);
    }
    if (!changed) break;
  }

  // Single-point moves that strictly lower the SSE (Hartigan refinement).
  // Moving x from A to B changes SSE by
  //   |B|/(|B|+1) |x - mu_B|^2 - |A|/(|A|-1) |x - mu_A|^2.
  for (bool moved = true; moved;) {
    moved = false;
    for (size_t i = 0; i < n; ++i) {
      const size_t from = static_cast<size_t>(a[i]), to = 1 - from;
      if (count[from] < 2) continue;
      const double gain =
          double(count[from]) / double(count[from] - 1) *
              SquaredDistance(pts[i], c[from]) -
          double(count[to]) / double(count[to] + 1) *
              SquaredDistance(pts[i], c[to]);
      if (gain > 1e-12 * (1.0 + SquaredDistance(c[0], c[1]))) {
        a[i] = static_cast<int>(to);
        Centroids(pts, a, c, count);
        moved = true;
      }
    }
  }
  return {a, WithinClusterSse(pts, a)};
}

// Exhaustive 2-partition search; point 0 stays in cluster 0. SSE of a split
// is sum |x|^2 - |S_A|^2 / |A| - |S_B|^2 / |B| with S the cluster sums.
KMeansRun ExactTwoPartition(const std::vector<std::vector<double>>& pts) {
  const size_t n = pts.size(), dim = pts[0].size();
  std::vector<double> total(dim, 0.0);
  double norms = 0.0;
  for (const auto& p : pts)
    for (size_t j = 0; j < dim; ++j) {
      total[j] += p[j];
      norms += p[j] * p[j];
    }
  KMeansRun best;
  std::vector<double> sum(dim);
  for (uint64_t mask = 1; mask < (uint64_t{1} << (n - 1)); ++mask) {
    std::fill(sum.begin(), sum.end(), 0.0);
    size_t size = 0;
    for (size_t i = 1; i < n; ++i) {
      if (!((mask >> (i - 1)) & 1)) continue;
      ++size;
      for (size_t j = 0; j < dim; ++j) sum[j] += pts[i][j];
    }
    double in = 0.0, out = 0.0;
    for (size_t j = 0; j < dim; ++j) {
      in += sum[j] * sum[j];
      out += (total[j] - sum[j]) * (total[j] - sum[j]);
    }
    const double sse = norms - in / double(size) - out / double(n - size);
    if (best.assignment.empty() || sse < best.sse) {
      best.sse = sse;
      best.assignment.assign(n, 0);
      for (size_t i = 1; i < n; ++i) best.assignment[i] = int((mask >> (i - 1)) & 1);
    }
  }
  best.sse = WithinClusterSse(pts, best.assignment);
  return best;
}

}  // namespace

std::string ToString(SplitStrategy s) {
  return s == SplitStrategy::kLexicon ? "lexicon" : "kmeans";
}

SplitStrategy ParseSplitStrategy(const std::string& s) {
  if (s == "lexicon") return SplitStrategy::kLexicon;
  if (s == "kmeans") return SplitStrategy::kKMeans;
  throw UsageError("unknown split strategy '" + s + "' (lexicon|kmeans)");
}

std::vector<size_t> SplitManifest::source_dev() const {
  std::vector<size_t> dev = source_train;
  dev.insert(dev.end(), source_val.begin(), source_val.end());
  std::sort(dev.begin(), dev.end());
  return dev;
}

const std::vector<size_t>& SplitManifest::part(const std::string& name) const {
  if (name == "source_train") return source_train;
  if (name == "source_val") return source_val;
  if (name == "source_test") return source_test;
  if (name == "target_ng") return target_ng;
  if (name == "target_test") return target_test;
  throw UsageError("unknown subset '" + name + "'");
}

std::string SplitManifest::ToJson() const {
  Json j;
  j["strategy"] = ToString(strategy);
  j["seed"] = seed;
  j["ratios"] = ratios;
  for (const char* p : kSplitParts) j[p] = part(p);
  return j.dump() + "\n";
}

SplitManifest SplitManifest::FromJson(const std::string& text) {
  SplitManifest m;
  try {
    const Json j = Json::parse(text);
    m.strategy = ParseSplitStrategy(j.at("strategy").get<std::string>());
    m.seed = j.at("seed").get<uint64_t>();
    m.ratios = j.at("ratios").get<SplitRatios>();
    m.source_train = j.at("source_train").get<std::vector<size_t>>();
    m.source_val = j.at("source_val").get<std::vector<size_t>>();
    m.source_test = j.at("source_test").get<std::vector<size_t>>();
    m.target_ng = j.at("target_ng").get<std::vector<size_t>>();
    m.target_test = j.at("target_test").get<std::vector<size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void SplitManifest::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest '" + path + "'");
  out << ToJson();
}

SplitManifest SplitManifest::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

void ValidateManifest(const SplitManifest& m, size_t corpus_size) {
  std::vector<int> seen(corpus_size, 0);
  for (const char* p : kSplitParts) {
    for (size_t i : m.part(p)) {
      if (i >= corpus_size)
        throw DataError(std::string("manifest index out of range in ") + p);
      if (seen[i]++)
        throw DataError("manifest index " + std::to_string(i) +
                        " appears twice");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw DataError("manifest does not cover the whole corpus");
}

TwoGramEmbedding TwoGramEmbed(const std::vector<std::u32string>& lexicon) {
  if (lexicon.empty()) throw UsageError("2-gram embedding of an empty lexicon");
  TwoGramEmbedding e;
  for (const auto& w : lexicon)
    for (size_t i = 0; i + 1 < w.size(); ++i) e.index.emplace_back(w[i], w[i + 1]);
  std::sort(e.index.begin(), e.index.end());
  e.index.erase(std::unique(e.index.begin(), e.index.end()), e.index.end());
  for (const auto& w : lexicon) {
    std::vector<double> v(e.index.size(), 0.0);
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      auto it = std::lower_bound(e.index.begin(), e.index.end(),
                                 std::make_pair(w[i], w[i + 1]));
      v[static_cast<size_t>(it - e.index.begin())] = 1.0;
    }
    e.vectors.push_back(std::move(v));
  }
  return e;
}

double WithinClusterSse(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& assignment) {
  std::array<std::vector<double>, 2> c;
  std::array<size_t, 2> n{};
  Centroids(points, assignment, c, n);
  double sse = 0.0;
  for (size_t i = 0; i < points.size(); ++i)
    sse += SquaredDistance(points[i], c[static_cast<size_t>(assignment[i])]);
  return sse;
}

std::vector<int> KMeans2(const std::vector<std::vector<double>>& points,
                         uint64_t seed, const KMeansOptions& opts) {
  if (points.size() < 2) throw DataError("k-means needs at least 2 points");
  for (const auto& p : points)
    if (p.size() != points[0].size())
      throw UsageError("k-means points must share one dimension");
  const bool all_same = std::all_of(points.begin(), points.end(),
                                    [&](const auto& p) { return p == points[0]; });
  if (all_same)
    throw DataError("k-means: all vectors are identical, no meaningful split");
  KMeansRun best;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Rng rng(Rng::Derive(seed, static_cast<uint64_t>(r)));
    KMeansRun run = RunOnce(points, rng, opts.max_iters);
    if (best.assignment.empty() || run.sse < best.sse) best = std::move(run);
  }
  // Lloyd can stall in a local optimum; small inputs are checked exactly.
  if (points.size() <= opts.exact_up_to) {
    KMeansRun exact = ExactTwoPartition(points);
    if (exact.sse < best.sse - 1e-12 * (1.0 + best.sse)) best = std::move(exact);
  }
  return best.assignment;
}

SplitManifest LexiconSplit(const Corpus& corpus, uint64_t seed,
                           const SplitRatios& ratios) {
  CheckRatios(ratios);
  const Lexicon lex = BuildLexicon(corpus);
  if (lex.types.size() < 2)
    throw DataError("lexicon split needs at least 2 distinct word types");
  Rng rng(seed);
  std::vector<size_t> order(lex.types.size());
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order);
  const double threshold = (ratios[3] + ratios[4]) * double(corpus.size());
  std::vector<bool> is_target(lex.types.size(), false);
  size_t mass = 0;
  for (size_t t : order) {
    if (double(mass) >= threshold) break;
    is_target[t] = true;
    mass += lex.samples[t].size();
  }
  return CutPools(lex, is_target, SplitStrategy::kLexicon, seed, ratios, rng);
}

SplitManifest KMeansSplit(const Corpus& corpus, uint64_t seed,
                          const SplitRatios& ratios, const KMeansOptions& opts) {
  CheckRatios(ratios);
  const Lexicon lex = BuildLexicon(corpus);
  if (lex.types.size() < 2)
    throw DataError("k-means split needs at least 2 distinct word types");
  const TwoGramEmbedding emb = TwoGramEmbed(lex.types);
  const std::vector<int> a = KMeans2(emb.vectors, seed, opts);
  std::array<size_t, 2> mass{};
  for (size_t t = 0; t < lex.types.size(); ++t)
    mass[static_cast<size_t>(a[t])] += lex.samples[t].size();
  // The heavier cluster is the source pool.
  const int source_cluster = mass[1] > mass[0] ? 1 : 0;
  std::vector<bool> is_target(lex.types.size());
  for (size_t t = 0; t < lex.types.size(); ++t)
    is_target[t] = a[t] != source_cluster;
  Rng rng(Rng::Derive(seed, 0x5EEDu));
  return CutPools(lex, is_target, SplitStrategy::kKMeans, seed, ratios, rng);
}

SplitManifest Split(const Corpus& corpus, SplitStrategy strategy,
                    uint64_t seed, const SplitRatios& ratios) {
  return strategy == SplitStrategy::kLexicon
             ? LexiconSplit(corpus, seed, ratios)
             : KMeansSplit(corpus, seed, ratios);
}

AuditReport Audit(const SplitManifest& manifest, const Corpus& corpus,
                  int order) {
  ValidateManifest(manifest, corpus.size());
  const Charset cs = Charset::FromCorpus(corpus);
  const Corpus dev = corpus.Subset(manifest.source_dev());
  const Corpus ng = corpus.Subset(manifest.target_ng);
  const Corpus src_test = corpus.Subset(manifest.source_test);
  const Corpus tgt_test = corpus.Subset(manifest.target_test);
  const NgramModel dev_lm = EstimateWittenBell(dev, cs, order);
  const NgramModel ng_lm = EstimateWittenBell(ng, cs, order);

  AuditReport r;
  r.order = order;
  for (size_t i = 0; i < kSplitParts.size(); ++i)
    r.sizes[i] = manifest.part(kSplitParts[i]).size();
  r.source_dev_size = dev.size();
  r.source_dev_on_source_test = Perplexity(dev_lm, src_test);
  r.source_dev_on_target_test = Perplexity(dev_lm, tgt_test);
  r.target_ng_on_target_test = Perplexity(ng_lm, tgt_test);
  return r;
}

std::string AuditReport::ToJson() const {
  Json j;
  j["order"] = order;
  Json sz;
  for (size_t i = 0; i < kSplitParts.size(); ++i) sz[kSplitParts[i]] = sizes[i];
  sz["source_dev"] = source_dev_size;
  j["sizes"] = sz;
  j["ppl"] = {{"source_dev_on_source_test", source_dev_on_source_test},
              {"source_dev_on_target_test", source_dev_on_target_test},
              {"target_ng_on_target_test", target_ng_on_target_test}};
  return j.dump(2) + "\n";
}

std::string AuditReport::ToTable() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-10s %-10s %-10s %-10s | %-12s %-12s %-12s\n"
                "%-10zu %-10zu %-10zu %-10zu | %-12.3f %-12.3f %-12.3f\n",
                "dev", "src_test", "tgt_ng", "tgt_test", "dev->src",
                "dev->tgt", "ng->tgt", source_dev_size, sizes[2], sizes[3],
                sizes[4], source_dev_on_source_test, source_dev_on_target_test,
                target_ng_on_target_test);
  return std::string("size / ") + std::to_string(order) + "-gram PPL\n" + buf;
}

}  // namespace ngi

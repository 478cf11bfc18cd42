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

#include "ngi/ngram.hpp"

#include <cmath>
#include <mutex>

#include "ngi/error.hpp"

namespace ngi {

struct NgramModel::Cache {
  std::mutex mu;
  std::map<Ngram, std::vector<double>> vectors;
  std::atomic<uint64_t> hits{0};
  std::atomic<uint64_t> misses{0};
};

CountTable CountNgrams(const Corpus& corpus, const Charset& charset,
                       int order) {
  if (order < 1)
    throw UsageError("n-gram order must be >= 1, got " + std::to_string(order));
  CountTable table;
  table.order = order;
  table.counts.resize(static_cast<size_t>(order));
  table.contexts.resize(static_cast<size_t>(order));

  Ngram padded;
  for (const auto& word : corpus.words()) {
    padded.clear();
    padded.push_back(charset.sos());
    for (Symbol s : charset.Encode(word)) padded.push_back(s);
    padded.push_back(charset.eos());
    // Position 0 is <s>: context only.
    for (size_t i = 1; i < padded.size(); ++i) {
      for (size_t m = 1; m <= static_cast<size_t>(order) && m <= i + 1; ++m) {
        Ngram key(padded.begin() + static_cast<std::ptrdiff_t>(i + 1 - m),
                  padded.begin() + static_cast<std::ptrdiff_t>(i + 1));
        ++table.counts[m - 1][key];
      }
    }
  }
  for (size_t m = 1; m <= static_cast<size_t>(order); ++m) {
    for (const auto& [key, c] : table.counts[m - 1]) {
      Ngram h(key.begin(), key.end() - 1);
      auto& st = table.contexts[m - 1][h];
      st.total += c;
      st.distinct += 1;
    }
  }
  return table;
}

NgramModel EstimateWittenBell(const CountTable& counts,
                              const Charset& charset) {
  const int order = counts.order;
  if (order < 1 || counts.counts.size() != static_cast<size_t>(order))
    throw UsageError("malformed count table");
  const int k = charset.size();
  std::vector<std::map<Ngram, NgramEntry>> tables(static_cast<size_t>(order));

  // Unigrams, interpolated with the uniform floor. Every predictable symbol
  // gets an explicit entry, seen or not.
  {
    const auto& root = counts.contexts[0];
    const auto it = root.find(Ngram{});
    const double total = it == root.end() ? 0.0 : double(it->second.total);
    const double distinct =
        it == root.end() ? 0.0 : double(it->second.distinct);
    for (Symbol w = 0; w < k; ++w) {
      const auto c = counts.counts[0].find(Ngram{w});
      const double cw = c == counts.counts[0].end() ? 0.0 : double(c->second);
      const double p = total + distinct > 0.0
                           ? (cw + distinct / k) / (total + distinct)
                           : 1.0 / k;
      tables[0][Ngram{w}].logp = std::log10(p);
    }
  }

  // Higher orders in ascending order: P(w|h') is already in tables[m-2]
  // because h'w is a suffix of hw and was counted with it.
  for (int m = 2; m <= order; ++m) {
    const auto& ctx = counts.contexts[static_cast<size_t>(m - 1)];
    auto& lower = tables[static_cast<size_t>(m - 2)];
    for (const auto& [key, c] : counts.counts[static_cast<size_t>(m - 1)]) {
      const Ngram h(key.begin(), key.end() - 1);
      const auto& st = ctx.at(h);
      const Ngram lower_key(key.begin() + 1, key.end());
      const double p_lower = std::pow(10.0, lower.at(lower_key).logp);
      const double p = (double(c) + double(st.distinct) * p_lower) /
                       double(st.total + st.distinct);
      tables[static_cast<size_t>(m - 1)][key].logp = std::log10(p);
    }
  }

  // Back-off weights: lambda(h) = N1+(h.) / (c(h.) + N1+(h.)).
  for (int m = 2; m <= order; ++m) {
    for (const auto& [h, st] : counts.contexts[static_cast<size_t>(m - 1)]) {
      if (st.distinct == 0) continue;
      const double bow =
          std::log10(double(st.distinct) / double(st.total + st.distinct));
      auto& lower = tables[static_cast<size_t>(m - 2)];
      if (h.size() == 1 && h[0] == charset.sos()) {
        auto& e = lower[h];
        e.logp = -99.0;
        e.bow = bow;
      } else {
        lower.at(h).bow = bow;
      }
    }
  }
  return NgramModel(order, charset, std::move(tables));
}

NgramModel EstimateWittenBell(const Corpus& corpus, const Charset& charset,
                              int order) {
  return EstimateWittenBell(CountNgrams(corpus, charset, order), charset);
}

NgramModel::NgramModel(int order, Charset charset,
                       std::vector<std::map<Ngram, NgramEntry>> tables)
    : order_(order),
      charset_(std::move(charset)),
      tables_(std::move(tables)),
      cache_(std::make_shared<Cache>()) {
  if (order_ < 1) throw UsageError("n-gram order must be >= 1");
  if (tables_.size() != static_cast<size_t>(order_))
    throw DataError("model has " + std::to_string(tables_.size()) +
                    " tables for order " + std::to_string(order_));
  for (Symbol w = 0; w < charset_.size(); ++w)
    if (!tables_[0].count(Ngram{w}))
      throw DataError("missing unigram for symbol '" + charset_.Render(w) +
                      "'");
}

std::span<const Symbol> NgramModel::Truncate(
    std::span<const Symbol> context) const {
  const size_t keep = static_cast<size_t>(order_ - 1);
  if (context.size() > keep) context = context.last(keep);
  for (Symbol s : context)
    if (s < 0 || s > charset_.sos() || s == charset_.eos())
      throw UsageError("invalid context symbol " + std::to_string(s));
  return context;
}

double NgramModel::Score(std::span<const Symbol> context, Symbol w) const {
  if (w < 0 || w >= charset_.size())
    throw UsageError(w == charset_.sos()
                         ? std::string("<s> is never predicted")
                         : "symbol index " + std::to_string(w) +
                               " is not in the charset");
  context = Truncate(context);
  double backoff = 0.0;
  Ngram key;
  for (size_t start = 0; start <= context.size(); ++start) {
    const auto h = context.subspan(start);
    key.assign(h.begin(), h.end());
    key.push_back(w);
    const auto& table = tables_[key.size() - 1];
    if (auto it = table.find(key); it != table.end())
      return backoff + it->second.logp;
    if (!h.empty()) {
      key.pop_back();
      const auto& ctable = tables_[key.size() - 1];
      if (auto c = ctable.find(key); c != ctable.end() && c->second.bow)
        backoff += *c->second.bow;
    }
  }
  // Every predictable symbol has a unigram, so the loop always returns.
  throw DataError("no unigram for symbol " + std::to_string(w));
}

std::vector<double> NgramModel::DistVector(
    std::span<const Symbol> context) const {
  context = Truncate(context);
  Ngram key(context.begin(), context.end());
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (auto it = cache_->vectors.find(key); it != cache_->vectors.end()) {
      cache_->hits.fetch_add(1);
      return it->second;
    }
  }
  std::vector<double> v(static_cast<size_t>(charset_.size()));
  for (Symbol w = 0; w < charset_.size(); ++w)
    v[static_cast<size_t>(w)] = std::pow(10.0, Score(context, w));
  cache_->misses.fetch_add(1);
  std::lock_guard<std::mutex> lock(cache_->mu);
  cache_->vectors.emplace(std::move(key), v);
  return v;
}

uint64_t NgramModel::cache_hits() const { return cache_->hits.load(); }
uint64_t NgramModel::cache_misses() const { return cache_->misses.load(); }

double Perplexity(const NgramModel& model, const Corpus& corpus) {
  const Charset& cs = model.charset();
  double sum = 0.0;
  size_t n = 0;
  Ngram padded;
  for (const auto& word : corpus.words()) {
    padded.clear();
    padded.push_back(cs.sos());
    for (Symbol s : cs.Encode(word)) padded.push_back(s);
    padded.push_back(cs.eos());
    for (size_t i = 1; i < padded.size(); ++i) {
      sum += model.Score(std::span<const Symbol>(padded.data(), i), padded[i]);
      ++n;
    }
  }
  if (n == 0) throw DataError("perplexity of an empty corpus is undefined");
  return std::pow(10.0, -sum / static_cast<double>(n));
}

}  // namespace ngi

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
// Character-level back-off n-gram models with interpolated Witten-Bell
// smoothing, stored and exchanged in ARPA format.
//
// Every word is padded as  <s> c1 ... cL </s> . <s> only ever appears as
// the first context symbol and is never predicted; </s> is predicted once
// per word. Contexts never cross word boundaries.

#ifndef NGI_NGRAM_HPP_
#define NGI_NGRAM_HPP_

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ngi/charset.hpp"

namespace ngi {

using Ngram = std::vector<Symbol>;

// Occurrence counts of every m-gram, m = 1..order, over padded words.
struct CountTable {
  // Per context h: c(h.) and N1+(h.).
  struct ContextStats {
    uint64_t total = 0;
    uint64_t distinct = 0;
  };

  int order = 0;
  // counts[m - 1]: m-gram -> occurrences.
  std::vector<std::map<Ngram, uint64_t>> counts;
  // contexts[m - 1]: (m-1)-symbol context of an m-gram -> successor stats.
  std::vector<std::map<Ngram, ContextStats>> contexts;
};

// Throws UsageError for order < 1, DataError for out-of-charset symbols.
CountTable CountNgrams(const Corpus& corpus, const Charset& charset, int order);

struct NgramEntry {
  double logp = 0.0;          // log10 P(w | h)
  std::optional<double> bow;  // log10 back-off weight of this entry as context
};

// Immutable ARPA-isomorphic back-off model. Queries are thread-safe; the
// distribution-vector memo is internally synchronized.
class NgramModel {
 public:
  // tables[m - 1] holds the m-grams. Every predictable symbol must have a
  // unigram entry; <s> may carry a unigram entry (logp -99) for its bow.
  NgramModel(int order, Charset charset,
             std::vector<std::map<Ngram, NgramEntry>> tables);

  int order() const { return order_; }
  const Charset& charset() const { return charset_; }
  const std::map<Ngram, NgramEntry>& table(int m) const {
    return tables_.at(static_cast<size_t>(m - 1));
  }

  // log10 P(w | context). Only the last order-1 symbols of the context are
  // used. Throws UsageError when w is not predictable or the context holds
  // an invalid symbol.
  double Score(std::span<const Symbol> context, Symbol w) const;

  // Linear-space distribution over all K predictable symbols, memoized per
  // truncated context.
  std::vector<double> DistVector(std::span<const Symbol> context) const;

  uint64_t cache_hits() const;
  uint64_t cache_misses() const;

 private:
  struct Cache;

  std::span<const Symbol> Truncate(std::span<const Symbol> context) const;

  int order_;
  Charset charset_;
  std::vector<std::map<Ngram, NgramEntry>> tables_;
  std::shared_ptr<Cache> cache_;
};

// Interpolated Witten-Bell estimate over a uniform 1/K floor, materialized
// in back-off form so that unseen extensions get 10^bow(h) * P(w | h').
NgramModel EstimateWittenBell(const CountTable& counts, const Charset& charset);

// Convenience: CountNgrams + EstimateWittenBell.
NgramModel EstimateWittenBell(const Corpus& corpus, const Charset& charset,
                              int order);

// 10^(-(1/N) sum log10 P) over every predictable token of the padded words.
// Throws DataError naming the symbol and word when a character is unknown.
double Perplexity(const NgramModel& model, const Corpus& corpus);

void WriteArpa(const NgramModel& model, std::ostream& out);
std::string ArpaText(const NgramModel& model);
void SaveArpa(const NgramModel& model, const std::string& path);

// Throws DataError citing the line number on malformed input.
NgramModel ReadArpa(std::istream& in);
NgramModel LoadArpa(const std::string& path);

// 64-bit FNV-1a over the ARPA bytes, as 16 hex digits.
std::string Fingerprint(const NgramModel& model);
std::string Fnv1aHex(std::string_view bytes);

}  // namespace ngi

#endif  // NGI_NGRAM_HPP_

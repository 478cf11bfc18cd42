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

#ifndef NGI_CHARSET_HPP_
#define NGI_CHARSET_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngi {

// Index into a Charset. Predictable symbols occupy [0, K); EOS is K-1 and
// the context-only SOS is K.
using Symbol = int;

inline constexpr std::string_view kSosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";

std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);
std::string EncodeUtf8(char32_t c);

// Word list, one word per line on disk. Words are non-empty and free of
// whitespace (ARPA lines separate symbols with spaces).
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<std::u32string> words);

  static Corpus FromUtf8(const std::vector<std::string>& words);
  static Corpus Load(const std::string& path);
  void Save(const std::string& path) const;

  const std::vector<std::u32string>& words() const { return words_; }
  size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  // Predictable tokens: every character plus one EOS per word.
  size_t token_count() const;

  // Sub-corpus made of the given word indices, in that order.
  Corpus Subset(std::span<const size_t> indices) const;

 private:
  std::vector<std::u32string> words_;
};

class Charset {
 public:
  Charset() = default;

  // Distinct characters sorted by code point. Throws DataError on an empty
  // corpus.
  static Charset FromCorpus(const Corpus& corpus);
  static Charset FromSymbols(std::vector<char32_t> symbols);

  // K: corpus symbols plus EOS.
  int size() const { return static_cast<int>(symbols_.size()) + 1; }
  Symbol eos() const { return static_cast<int>(symbols_.size()); }
  Symbol sos() const { return size(); }

  std::optional<Symbol> Find(char32_t c) const;
  Symbol Index(char32_t c) const;  // throws DataError when absent
  char32_t At(Symbol s) const { return symbols_.at(static_cast<size_t>(s)); }

  // "<s>", "</s>" or the UTF-8 character.
  std::string Render(Symbol s) const;
  // Inverse of Render; nullopt for anything that is not a known symbol.
  std::optional<Symbol> Parse(std::string_view token) const;

  // Word to symbol indices (no padding). Throws DataError naming the word
  // and offending character.
  std::vector<Symbol> Encode(std::u32string_view word) const;
  // Symbol indices back to a word; EOS/SOS are skipped.
  std::u32string Decode(std::span<const Symbol> symbols) const;

  const std::vector<char32_t>& symbols() const { return symbols_; }

  bool operator==(const Charset& other) const = default;

 private:
  std::vector<char32_t> symbols_;
};

}  // namespace ngi

#endif  // NGI_CHARSET_HPP_

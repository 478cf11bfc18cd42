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

#include "ngi/charset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "ngi/error.hpp"
#include "ngi/rng.hpp"

namespace ngi {

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + static_cast<size_t>(len) > s.size())
      throw DataError("truncated UTF-8 sequence at offset " +
                      std::to_string(i));
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<size_t>(k)]);
      if ((b & 0xC0) != 0x80)
        throw DataError("invalid UTF-8 continuation byte at offset " +
                        std::to_string(i + static_cast<size_t>(k)));
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<size_t>(len);
  }
  return out;
}

std::string EncodeUtf8(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string EncodeUtf8(std::u32string_view s) {
  std::string out;
  for (char32_t c : s) out += EncodeUtf8(c);
  return out;
}

namespace {

bool IsSpace(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f';
}

void CheckWord(const std::u32string& w, size_t index) {
  if (w.empty())
    throw DataError("empty word at index " + std::to_string(index));
  for (char32_t c : w)
    if (IsSpace(c))
      throw DataError("word '" + EncodeUtf8(w) + "' at index " +
                      std::to_string(index) + " contains whitespace");
}

}  // namespace

Corpus::Corpus(std::vector<std::u32string> words) : words_(std::move(words)) {
  for (size_t i = 0; i < words_.size(); ++i) CheckWord(words_[i], i);
}

Corpus Corpus::FromUtf8(const std::vector<std::string>& words) {
  std::vector<std::u32string> w;
  w.reserve(words.size());
  for (const auto& s : words) w.push_back(DecodeUtf8(s));
  return Corpus(std::move(w));
}

Corpus Corpus::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus '" + path + "'");
  std::vector<std::u32string> words;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      words.push_back(DecodeUtf8(line));
      CheckWord(words.back(), words.size() - 1);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Corpus(std::move(words));
}

void Corpus::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus '" + path + "'");
  for (const auto& w : words_) out << EncodeUtf8(w) << '\n';
}

size_t Corpus::token_count() const {
  size_t n = 0;
  for (const auto& w : words_) n += w.size() + 1;
  return n;
}

Corpus Corpus::Subset(std::span<const size_t> indices) const {
  std::vector<std::u32string> w;
  w.reserve(indices.size());
  for (size_t i : indices) w.push_back(words_.at(i));
  Corpus c;
  c.words_ = std::move(w);
  return c;
}

Charset Charset::FromCorpus(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("cannot build a charset from an empty corpus");
  std::set<char32_t> seen;
  for (const auto& w : corpus.words()) seen.insert(w.begin(), w.end());
  return FromSymbols({seen.begin(), seen.end()});
}

Charset Charset::FromSymbols(std::vector<char32_t> symbols) {
  std::sort(symbols.begin(), symbols.end());
  if (std::adjacent_find(symbols.begin(), symbols.end()) != symbols.end())
    throw DataError("charset symbols must be unique");
  for (char32_t c : symbols)
    if (IsSpace(c)) throw DataError("charset cannot contain whitespace");
  Charset cs;
  cs.symbols_ = std::move(symbols);
  return cs;
}

std::optional<Symbol> Charset::Find(char32_t c) const {
  auto it = std::lower_bound(symbols_.begin(), symbols_.end(), c);
  if (it == symbols_.end() || *it != c) return std::nullopt;
  return static_cast<Symbol>(it - symbols_.begin());
}

Symbol Charset::Index(char32_t c) const {
  if (auto s = Find(c)) return *s;
  throw DataError("symbol '" + EncodeUtf8(c) + "' is not in the charset");
}

std::string Charset::Render(Symbol s) const {
  if (s == sos()) return std::string(kSosToken);
  if (s == eos()) return std::string(kEosToken);
  return EncodeUtf8(At(s));
}

std::optional<Symbol> Charset::Parse(std::string_view token) const {
  if (token == kSosToken) return sos();
  if (token == kEosToken) return eos();
  std::u32string u;
  try {
    u = DecodeUtf8(token);
  } catch (const DataError&) {
    return std::nullopt;
  }
  if (u.size() != 1) return std::nullopt;
  return Find(u[0]);
}

std::vector<Symbol> Charset::Encode(std::u32string_view word) const {
  std::vector<Symbol> out;
  out.reserve(word.size());
  for (char32_t c : word) {
    auto s = Find(c);
    if (!s)
      throw DataError("symbol '" + EncodeUtf8(c) + "' in word '" +
                      EncodeUtf8(word) + "' is not in the charset");
    out.push_back(*s);
  }
  return out;
}

std::u32string Charset::Decode(std::span<const Symbol> symbols) const {
  std::u32string out;
  for (Symbol s : symbols)
    if (s >= 0 && s < eos()) out.push_back(At(s));
  return out;
}

}  // namespace ngi

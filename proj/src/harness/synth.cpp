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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"
#include "ngi/rng.hpp"

namespace ngi {

void SynthConfig::Validate() const {
  if (proto_dim < 2) throw UsageError("proto_dim must be at least 2");
  if (frames_per_char < 1) throw UsageError("frames_per_char must be positive");
  if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be >= 0");
}

nn::Matrix SynthPrototypes(const SynthConfig& cfg, const Charset& charset,
                           uint64_t seed) {
  cfg.Validate();
  Rng rng(Rng::Derive(seed, 0));
  nn::Matrix protos(charset.size(), cfg.proto_dim);
  for (Eigen::Index i = 0; i < protos.size(); ++i) protos.data()[i] = rng.Normal();
  const double delta = 0.5 * cfg.noise_sigma;
  // Pairs whose symbols are absent from the charset are skipped.
  for (const auto& [x, y] : cfg.confusion_pairs) {
    const auto sx = charset.Find(x), sy = charset.Find(y);
    if (!sx || !sy || *sx == *sy) continue;
    nn::RowVector u(cfg.proto_dim);
    for (int j = 0; j < cfg.proto_dim; ++j) u(j) = rng.Normal();
    u /= u.norm();
    protos.row(*sy) = protos.row(*sx) + delta * u;
  }
  return protos;
}

std::vector<TrainExample> SynthGenerate(const SynthConfig& cfg,
                                        const Charset& charset,
                                        const std::vector<std::u32string>& words,
                                        uint64_t seed) {
  if (words.empty()) throw UsageError("no words to synthesize");
  const nn::Matrix protos = SynthPrototypes(cfg, charset, seed);
  const int fpc = cfg.frames_per_char;
  std::vector<TrainExample> out;
  out.reserve(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    TrainExample ex;
    ex.word = charset.Encode(words[i]);
    std::vector<Symbol> shown = ex.word;
    if (cfg.terminator) shown.push_back(charset.eos());
    Rng rng(Rng::Derive(seed, i + 1));
    ex.frames.resize(static_cast<Eigen::Index>(shown.size()) * fpc, cfg.proto_dim);
    Eigen::Index r = 0;
    for (Symbol s : shown) {
      for (int f = 0; f < fpc; ++f, ++r) {
        for (int j = 0; j < cfg.proto_dim; ++j)
          ex.frames(r, j) = protos(s, j) + cfg.noise_sigma * rng.Normal();
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Symbol> NearestPrototypeDecode(const nn::Matrix& frames,
                                           const nn::Matrix& prototypes,
                                           int frames_per_char) {
  if (frames_per_char < 1) throw UsageError("frames_per_char must be positive");
  if (frames.cols() != prototypes.cols())
    throw UsageError("frame width does not match the prototypes");
  const Symbol eos = static_cast<Symbol>(prototypes.rows()) - 1;
  std::vector<Symbol> out;
  for (Eigen::Index r = 0; r + frames_per_char <= frames.rows(); r += frames_per_char) {
    const nn::RowVector mean = frames.middleRows(r, frames_per_char).colwise().mean();
    Eigen::Index best = 0;
    (prototypes.rowwise() - mean).rowwise().squaredNorm().minCoeff(&best);
    if (best == eos) break;
    out.push_back(static_cast<Symbol>(best));
  }
  return out;
}

void SaveDataset(const std::string& dir, const Charset& charset,
                 const std::vector<TrainExample>& samples) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Eigen::Index width = samples.empty() ? 0 : samples[0].frames.cols();
  std::ofstream bin(fs::path(dir) / "features.bin", std::ios::binary);
  std::ofstream index(fs::path(dir) / "index.tsv");
  if (!bin || !index) throw Error("cannot write dataset under " + dir);
  Eigen::Index row = 0;
  for (const auto& ex : samples) {
    if (ex.frames.cols() != width) throw UsageError("ragged feature widths");
    bin.write(reinterpret_cast<const char*>(ex.frames.data()),
              static_cast<std::streamsize>(ex.frames.size() * sizeof(double)));
    index << EncodeUtf8(charset.Decode(ex.word)) << '\t' << row << '\t'
          << ex.frames.rows() << '\n';
    row += ex.frames.rows();
  }
  std::vector<uint32_t> symbols(charset.symbols().begin(), charset.symbols().end());
  nlohmann::ordered_json meta{{"feature_dim", width},
                              {"samples", samples.size()},
                              {"rows", row},
                              {"charset", symbols}};
  std::ofstream(fs::path(dir) / "dataset.json") << meta.dump(2) << '\n';
  if (!bin || !index) throw Error("cannot write dataset under " + dir);
}

std::vector<TrainExample> LoadDataset(const std::string& dir, Charset* charset) {
  namespace fs = std::filesystem;
  std::ifstream meta_in(fs::path(dir) / "dataset.json");
  if (!meta_in) throw Error("cannot open " + (fs::path(dir) / "dataset.json").string());
  nlohmann::json meta;
  Eigen::Index width = 0;
  Charset cs;
  try {
    meta = nlohmann::json::parse(meta_in);
    width = meta.at("feature_dim").get<Eigen::Index>();
    std::vector<char32_t> symbols;
    for (uint32_t c : meta.at("charset").get<std::vector<uint32_t>>())
      symbols.push_back(static_cast<char32_t>(c));
    cs = Charset::FromSymbols(std::move(symbols));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir + "/dataset.json: " + e.what());
  }
  std::ifstream bin(fs::path(dir) / "features.bin", std::ios::binary);
  std::ifstream index(fs::path(dir) / "index.tsv");
  if (!bin || !index) throw Error("cannot open dataset under " + dir);
  std::vector<TrainExample> out;
  std::string line;
  Eigen::Index expected_row = 0;
  for (size_t lineno = 1; std::getline(index, line); ++lineno) {
    std::istringstream fields(line);
    std::string word;
    Eigen::Index first = -1, rows = -1;
    if (!std::getline(fields, word, '\t') || !(fields >> first >> rows) ||
        first != expected_row || rows < 1)
      throw DataError(dir + "/index.tsv line " + std::to_string(lineno) +
                      ": malformed entry");
    TrainExample ex;
    ex.word = cs.Encode(DecodeUtf8(word));
    ex.frames.resize(rows, width);
    if (!bin.read(reinterpret_cast<char*>(ex.frames.data()),
                  static_cast<std::streamsize>(ex.frames.size() * sizeof(double))))
      throw DataError(dir + "/features.bin: truncated at sample " +
                      std::to_string(lineno));
    expected_row += rows;
    out.push_back(std::move(ex));
  }
  if (charset) *charset = std::move(cs);
  return out;
}

size_t EditDistance(std::u32string_view a, std::u32string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double Cer(std::u32string_view reference, std::u32string_view hypothesis) {
  if (reference.empty()) throw UsageError("CER needs a non-empty reference");
  return static_cast<double>(EditDistance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

Corpus BenchmarkCorpus(const BenchmarkCorpusConfig& cfg, uint64_t seed) {
  if (cfg.letters.size() < 2 || cfg.types < 2 || cfg.min_length < 1 ||
      cfg.max_length < cfg.min_length || cfg.min_count < 1 ||
      cfg.max_count < cfg.min_count)
    throw UsageError("invalid benchmark corpus configuration");
  Rng rng(seed);
  std::set<std::u32string> seen;
  std::vector<std::u32string> words;
  const auto span = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.Below(static_cast<uint64_t>(hi - lo + 1)));
  };
  for (int guard = 0; static_cast<int>(seen.size()) < cfg.types; ++guard) {
    if (guard > 1000 * cfg.types) throw UsageError("cannot draw enough distinct word types");
    std::u32string w(static_cast<size_t>(span(cfg.min_length, cfg.max_length)), U' ');
    for (auto& c : w) c = cfg.letters[rng.Below(cfg.letters.size())];
    if (!seen.insert(w).second) continue;
    const int count = span(cfg.min_count, cfg.max_count);
    for (int i = 0; i < count; ++i) words.push_back(w);
  }
  rng.Shuffle(words);
  return Corpus(std::move(words));
}

int DecodeLengthCap(const std::vector<const TrainExample*>& train) {
  size_t longest = 0;
  for (const auto* ex : train) longest = std::max(longest, ex->word.size());
  return static_cast<int>(2 * longest + 2);
}

}  // namespace ngi

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
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ngi/error.hpp"
#include "ngi/ngram.hpp"

namespace ngi {
namespace {

std::string FormatLog(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string RenderNgram(const Charset& cs, const Ngram& key) {
  std::string out;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) out += ' ';
    out += cs.Render(key[i]);
  }
  return out;
}

std::vector<std::string> SplitWs(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void Fail(size_t lineno, const std::string& what) {
  throw DataError("ARPA line " + std::to_string(lineno) + ": " + what);
}

bool ParseDouble(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void WriteArpa(const NgramModel& model, std::ostream& out) {
  const Charset& cs = model.charset();
  out << "\\data\\\n";
  for (int m = 1; m <= model.order(); ++m)
    out << "ngram " << m << '=' << model.table(m).size() << '\n';
  for (int m = 1; m <= model.order(); ++m) {
    out << "\n\\" << m << "-grams:\n";
    for (const auto& [key, e] : model.table(m)) {
      out << FormatLog(e.logp) << '\t' << RenderNgram(cs, key);
      if (e.bow && m < model.order()) out << '\t' << FormatLog(*e.bow);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

std::string ArpaText(const NgramModel& model) {
  std::ostringstream os;
  WriteArpa(model, os);
  return os.str();
}

void SaveArpa(const NgramModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ARPA file '" + path + "'");
  WriteArpa(model, out);
}

NgramModel ReadArpa(std::istream& in) {
  std::string raw;
  size_t lineno = 0;
  auto next = [&](std::string* line) {
    if (!std::getline(in, raw)) return false;
    ++lineno;
    *line = Trim(raw);
    return true;
  };

  std::string line;
  bool found = false;
  while (next(&line)) {
    if (line == "\\data\\") {
      found = true;
      break;
    }
  }
  if (!found) throw DataError("ARPA: missing \\data\\ header");

  std::vector<size_t> declared;
  size_t header_line = lineno;
  while (next(&line)) {
    if (line.empty()) {
      if (!declared.empty()) break;
      continue;
    }
    if (line.rfind("ngram ", 0) != 0) {
      if (line.front() == '\\' && !declared.empty()) break;
      Fail(lineno, "expected 'ngram m=COUNT' in header, got '" + line + "'");
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) Fail(lineno, "malformed header line '" + line + "'");
    int m = 0;
    long long count = -1;
    try {
      m = std::stoi(line.substr(6, eq - 6));
      count = std::stoll(line.substr(eq + 1));
    } catch (const std::exception&) {
      Fail(lineno, "malformed header line '" + line + "'");
    }
    if (m != static_cast<int>(declared.size()) + 1 || count < 0)
      Fail(lineno, "header orders must be 1..n in sequence with counts >= 0");
    declared.push_back(static_cast<size_t>(count));
    header_line = lineno;
  }
  if (declared.empty()) Fail(header_line, "no 'ngram m=COUNT' lines in header");
  const int order = static_cast<int>(declared.size());

  // Raw entries per order, symbols still as tokens until the unigram
  // section has fixed the charset.
  struct RawEntry {
    size_t line;
    double logp;
    std::vector<std::string> tokens;
    std::optional<double> bow;
  };
  std::vector<std::vector<RawEntry>> raw_tables(static_cast<size_t>(order));

  int section = 0;
  size_t section_line = 0;
  bool ended = false;
  auto close_section = [&](size_t at) {
    if (section == 0) return;
    const auto& t = raw_tables[static_cast<size_t>(section - 1)];
    if (t.size() != declared[static_cast<size_t>(section - 1)])
      Fail(at, "\\" + std::to_string(section) + "-grams: section (line " +
                   std::to_string(section_line) + ") has " +
                   std::to_string(t.size()) + " entries but header declares " +
                   std::to_string(declared[static_cast<size_t>(section - 1)]));
  };
  // The first section header may already be in `line`.
  bool pending = !line.empty() && line.front() == '\\';
  while (pending || next(&line)) {
    pending = false;
    if (line.empty()) continue;
    if (line.front() == '\\') {
      close_section(lineno);
      if (line == "\\end\\") {
        ended = true;
        break;
      }
      const std::string suffix = "-grams:";
      if (line.size() <= 1 + suffix.size() ||
          line.compare(line.size() - suffix.size(), suffix.size(), suffix) != 0)
        Fail(lineno, "unexpected section marker '" + line + "'");
      int m = 0;
      try {
        m = std::stoi(line.substr(1, line.size() - 1 - suffix.size()));
      } catch (const std::exception&) {
        Fail(lineno, "unexpected section marker '" + line + "'");
      }
      if (m != section + 1 || m > order)
        Fail(lineno, "section '" + line + "' out of order");
      section = m;
      section_line = lineno;
      continue;
    }
    if (section == 0) Fail(lineno, "entry outside of any n-gram section");
    auto toks = SplitWs(line);
    const size_t m = static_cast<size_t>(section);
    if (toks.size() != 1 + m && toks.size() != 2 + m)
      Fail(lineno, "expected LOGP, " + std::to_string(m) +
                       " symbols and an optional BOW");
    RawEntry e;
    e.line = lineno;
    if (!ParseDouble(toks[0], &e.logp))
      Fail(lineno, "bad log-probability '" + toks[0] + "'");
    if (e.logp > 0.0) Fail(lineno, "log-probability must be <= 0");
    if (toks.size() == 2 + m) {
      double bow = 0.0;
      if (!ParseDouble(toks.back(), &bow))
        Fail(lineno, "bad back-off weight '" + toks.back() + "'");
      if (section == order)
        Fail(lineno, "back-off weight on a highest-order entry");
      e.bow = bow;
    }
    e.tokens.assign(toks.begin() + 1, toks.begin() + 1 + static_cast<long>(m));
    raw_tables[m - 1].push_back(std::move(e));
  }
  if (!ended) {
    close_section(lineno);
    Fail(lineno, "missing \\end\\ marker");
  }
  if (section != order)
    Fail(lineno, "expected " + std::to_string(order) + " sections, found " +
                     std::to_string(section));

  // The unigram section defines the charset.
  std::vector<char32_t> symbols;
  bool has_eos = false;
  for (const auto& e : raw_tables[0]) {
    const std::string& tok = e.tokens[0];
    if (tok == kSosToken) continue;
    if (tok == kEosToken) {
      has_eos = true;
      continue;
    }
    std::u32string u;
    try {
      u = DecodeUtf8(tok);
    } catch (const DataError& err) {
      Fail(e.line, err.what());
    }
    if (u.size() != 1)
      Fail(e.line, "unknown symbol '" + tok + "' (character-level models only)");
    symbols.push_back(u[0]);
  }
  if (!has_eos) throw DataError("ARPA: unigram section lacks </s>");
  {
    std::set<std::string> seen;
    for (const auto& e : raw_tables[0])
      if (!seen.insert(e.tokens[0]).second)
        Fail(e.line, "duplicate 1-gram '" + e.tokens[0] + "'");
  }
  Charset cs = Charset::FromSymbols(std::move(symbols));

  std::vector<std::map<Ngram, NgramEntry>> tables(static_cast<size_t>(order));
  for (size_t m = 1; m <= static_cast<size_t>(order); ++m) {
    for (const auto& e : raw_tables[m - 1]) {
      Ngram key;
      for (size_t i = 0; i < e.tokens.size(); ++i) {
        auto s = cs.Parse(e.tokens[i]);
        if (!s) Fail(e.line, "unknown symbol '" + e.tokens[i] + "'");
        if (*s == cs.sos() && i != 0)
          Fail(e.line, "<s> may only start an n-gram");
        if (*s == cs.eos() && i + 1 != e.tokens.size())
          Fail(e.line, "</s> may only end an n-gram");
        key.push_back(*s);
      }
      NgramEntry entry{e.logp, e.bow};
      if (!tables[m - 1].emplace(std::move(key), entry).second) {
        std::string joined;
        for (const auto& t : e.tokens) joined += (joined.empty() ? "" : " ") + t;
        Fail(e.line, "duplicate " + std::to_string(m) + "-gram '" + joined + "'");
      }
    }
  }
  return NgramModel(order, std::move(cs), std::move(tables));
}

NgramModel LoadArpa(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ARPA file '" + path + "'");
  try {
    return ReadArpa(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string Fnv1aHex(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Fingerprint(const NgramModel& model) {
  return Fnv1aHex(ArpaText(model));
}

}  // namespace ngi

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
#include <numbers>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"

namespace ngi {

namespace {

void CheckInjection(const Checkpoint& model, const NgramModel* lm) {
  if (model.config.ngi && !lm)
    throw UsageError("the model was trained with n-gram injection; an n-gram model is required");
  if (!model.config.ngi && lm)
    throw UsageError("the model was trained without n-gram injection; no n-gram model may be given");
  if (lm && !(lm->charset() == model.charset))
    throw DataError("charset mismatch between the n-gram model and the checkpoint");
}

std::vector<double> InjectRow(const NgramModel* lm, std::span<const Symbol> prefix) {
  return lm ? lm->DistVector(prefix) : std::vector<double>{};
}

}  // namespace

std::vector<Symbol> GreedyDecode(const Checkpoint& model,
                                 const nn::Matrix& frames,
                                 const NgramModel* lm, int max_len) {
  CheckInjection(model, lm);
  const IncrementalDecoder dec(model.params, model.config, frames);
  auto state = dec.Start();
  std::vector<Symbol> prefix = {model.charset.sos()};
  const Symbol eos = model.charset.eos();
  while (static_cast<int>(prefix.size()) - 1 < max_len) {
    const nn::RowVector logits = dec.Step(state, prefix.back(), InjectRow(lm, prefix));
    Eigen::Index best = 0;
    logits.maxCoeff(&best);  // first maximum
    if (best == eos) break;
    prefix.push_back(static_cast<Symbol>(best));
  }
  return {prefix.begin() + 1, prefix.end()};
}

BeamResult BeamRescore(const Checkpoint& model, const nn::Matrix& frames,
                       const NgramModel* inject_lm, const NgramModel* fusion_lm,
                       const BeamConfig& cfg, int max_len) {
  CheckInjection(model, inject_lm);
  if (cfg.width < 1) throw UsageError("beam width must be at least 1");
  if (!(cfg.lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  if (fusion_lm && !(fusion_lm->charset() == model.charset))
    throw DataError("charset mismatch between the fusion n-gram model and the checkpoint");

  struct Hyp {
    std::vector<Symbol> prefix;
    IncrementalDecoder::State state;
    double nn = 0.0, lm = 0.0;
  };
  struct Candidate {
    size_t hyp;
    Symbol symbol;
    double nn, lm, fused;
  };

  const IncrementalDecoder dec(model.params, model.config, frames);
  const int k = model.charset.size();
  const Symbol eos = model.charset.eos();
  const double weight = cfg.lambda * std::numbers::ln10;
  const auto fuse = [&](double nn, double lm) { return fusion_lm ? nn + weight * lm : nn; };

  std::vector<BeamResult> finished;
  std::vector<Hyp> active;
  active.push_back({{model.charset.sos()}, dec.Start(), 0.0, 0.0});
  std::vector<Candidate> cands;
  while (!active.empty()) {
    cands.clear();
    for (size_t i = 0; i < active.size(); ++i) {
      Hyp& h = active[i];
      if (static_cast<int>(h.prefix.size()) - 1 >= max_len) {
        finished.push_back({{h.prefix.begin() + 1, h.prefix.end()}, h.nn, h.lm,
                            fuse(h.nn, h.lm), false});
        continue;
      }
      const nn::RowVector logits = dec.Step(h.state, h.prefix.back(), InjectRow(inject_lm, h.prefix));
      const double lse = std::log((logits.array() - logits.maxCoeff()).exp().sum()) + logits.maxCoeff();
      for (Symbol s = 0; s < k; ++s) {
        const double nn = h.nn + (logits(s) - lse);
        const double lm = fusion_lm ? h.lm + fusion_lm->Score(h.prefix, s) : 0.0;
        cands.push_back({i, s, nn, lm, fuse(nn, lm)});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.fused > b.fused; });
    if (cands.size() > static_cast<size_t>(cfg.width)) cands.resize(static_cast<size_t>(cfg.width));
    std::vector<Hyp> next;
    for (const Candidate& c : cands) {
      const Hyp& h = active[c.hyp];
      if (c.symbol == eos) {
        finished.push_back({{h.prefix.begin() + 1, h.prefix.end()}, c.nn, c.lm, c.fused, true});
        continue;
      }
      Hyp child{h.prefix, h.state, c.nn, c.lm};
      child.prefix.push_back(c.symbol);
      next.push_back(std::move(child));
    }
    active = std::move(next);
  }

  const auto normalized = [](const BeamResult& r) {
    const double len = static_cast<double>(r.symbols.size() + (r.finished ? 1 : 0));
    return r.fused / std::max(1.0, len);
  };
  size_t best = 0;
  for (size_t i = 1; i < finished.size(); ++i)
    if (normalized(finished[i]) > normalized(finished[best])) best = i;
  return finished[best];
}

std::string ToString(DecodeMode m) {
  return m == DecodeMode::kGreedy ? "greedy" : "beam";
}

EvalReport Evaluate(const Checkpoint& model,
                    const std::vector<const TrainExample*>& samples,
                    const Charset& charset, const NgramModel* inject_lm,
                    const NgramModel* fusion_lm, DecodeMode mode,
                    const BeamConfig& beam, int max_len) {
  EvalReport r;
  r.mode = mode;
  r.inject_lm = inject_lm ? Fingerprint(*inject_lm) : "";
  if (mode == DecodeMode::kBeam) {
    r.fusion_lm = fusion_lm ? Fingerprint(*fusion_lm) : "";
    r.lambda = fusion_lm ? beam.lambda : 0.0;
    r.beam = beam.width;
  }
  r.samples = samples.size();
  for (const TrainExample* ex : samples) {
    const std::vector<Symbol> hyp =
        mode == DecodeMode::kGreedy
            ? GreedyDecode(model, ex->frames, inject_lm, max_len)
            : BeamRescore(model, ex->frames, inject_lm, fusion_lm, beam, max_len).symbols;
    const std::u32string ref = charset.Decode(ex->word);
    r.errors += EditDistance(ref, charset.Decode(hyp));
    r.ref_chars += ref.size();
  }
  r.cer = r.ref_chars ? static_cast<double>(r.errors) / static_cast<double>(r.ref_chars) : 0.0;
  return r;
}

}  // namespace ngi

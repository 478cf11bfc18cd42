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

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/harness.hpp"
#include "ngi/rng.hpp"

namespace ngi {

Checkpoint TrainModel(const std::vector<const TrainExample*>& train,
                      const Charset& charset, const NgramModel* lm,
                      const TrainConfig& cfg, const TrainLog& log) {
  if (train.empty()) throw UsageError("no training samples");
  if (cfg.epochs < 0 || cfg.batch_size < 1)
    throw UsageError("epochs must be >= 0 and batch size >= 1");
  cfg.noise.Validate();
  DecoderConfig dc = cfg.decoder;
  dc.charset_size = charset.size();
  dc.feature_dim = static_cast<int>(train.front()->frames.cols());
  dc.Validate();
  if (dc.ngi && !lm) throw UsageError("injection training needs an n-gram model");
  if (!dc.ngi && lm) throw UsageError("an n-gram model was given for a run without injection");
  if (lm && !(lm->charset() == charset))
    throw DataError("charset mismatch between the n-gram model and the training data");

  Checkpoint ck;
  ck.config = dc;
  ck.charset = charset;
  ck.seed = cfg.seed;
  if (lm) {
    ck.lm_fingerprint = Fingerprint(*lm);
    ck.lm_order = lm->order();
  }
  ck.params = DecoderParams::Init(dc, Rng::Derive(cfg.seed, 1));
  Adam opt(ck.params, cfg.adam);
  Rng order(Rng::Derive(cfg.seed, 2));
  Rng steps(Rng::Derive(cfg.seed, 3));

  std::vector<const TrainExample*> shuffled = train;
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.Shuffle(shuffled);
    double loss = 0.0;
    size_t positions = 0;
    for (size_t start = 0; start < shuffled.size(); start += batch) {
      const size_t n = std::min(batch, shuffled.size() - start);
      const StepStats s = TrainStep(std::span(shuffled).subspan(start, n), ck.params,
                                    opt, dc, cfg.tfe, cfg.noise, lm, steps);
      loss += s.loss * static_cast<double>(s.positions);
      positions += s.positions;
    }
    if (log) log(epoch, loss / static_cast<double>(positions));
  }

  nlohmann::ordered_json meta{
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"lr", cfg.adam.lr},
      {"tfe", cfg.tfe},
      {"noise", {{"a", cfg.noise.a}, {"b", cfg.noise.b}, {"tau", cfg.noise.tau}}},
      {"train_samples", train.size()},
      {"max_len", DecodeLengthCap(train)}};
  ck.metadata_json = meta.dump();
  return ck;
}

}  // namespace ngi

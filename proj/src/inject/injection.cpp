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

#include "ngi/injection.hpp"

#include "ngi/error.hpp"
#include "ngi/ngram.hpp"
#include "ngi/rng.hpp"

namespace ngi {

void NoiseConfig::Validate() const {
  if (!(a <= b)) throw UsageError("noise bounds need a <= b");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw UsageError("noise probability tau must lie in [0, 1]");
}

std::vector<double> Renormalize(std::vector<double> v) {
  double sum = 0.0;
  for (double& x : v) {
    if (!(x >= kNoiseFloor)) x = kNoiseFloor;
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

std::vector<double> ApplyNoiseWith(std::span<const double> s,
                                   std::span<const double> eps) {
  if (s.size() != eps.size())
    throw UsageError("noise vector length does not match the distribution");
  std::vector<double> v(s.begin(), s.end());
  for (size_t k = 0; k < v.size(); ++k) v[k] += eps[k];
  return Renormalize(std::move(v));
}

std::vector<double> ApplyNoise(std::span<const double> s,
                               const NoiseConfig& cfg, Rng& rng) {
  std::vector<double> out(s.begin(), s.end());
  if (!(rng.Uniform() < cfg.tau)) return out;
  if (cfg.a == 0.0 && cfg.b == 0.0) return out;
  std::vector<double> eps(s.size());
  for (double& e : eps) e = rng.Uniform(cfg.a, cfg.b);
  return ApplyNoiseWith(s, eps);
}

nn::Matrix AssembleSngi(const NgramModel& model,
                        std::span<const Symbol> prefix,
                        const NoiseConfig& cfg, Rng* rng, bool train_mode) {
  const Charset& cs = model.charset();
  if (prefix.empty() || prefix[0] != cs.sos())
    throw UsageError("n-gram injection prefix must start with <s>");
  if (train_mode && cfg.enabled() && !rng)
    throw UsageError("noisy assembly needs a random generator");
  const int k = cs.size();
  nn::Matrix s(static_cast<Eigen::Index>(prefix.size()), k);
  for (size_t t = 0; t < prefix.size(); ++t) {
    if (t > 0 && (prefix[t] < 0 || prefix[t] >= cs.eos()))
      throw DataError("prefix symbol " + std::to_string(prefix[t]) +
                      " is outside the charset");
    std::vector<double> row = model.DistVector(prefix.first(t + 1));
    if (train_mode && cfg.enabled()) row = ApplyNoise(row, cfg, *rng);
    for (int j = 0; j < k; ++j) s(static_cast<Eigen::Index>(t), j) = row[static_cast<size_t>(j)];
  }
  return s;
}

ProjectionParams ProjectionParams::Zeros(int k, int d) {
  return {nn::Matrix::Zero(k, d), nn::Matrix::Zero(1, d),
          nn::Matrix::Zero(1, d), nn::Matrix::Zero(1, d)};
}

nn::Matrix ProjectF(const nn::Matrix& s, const ProjectionParams& p,
                    ProjectionCache* cache) {
  if (s.cols() != p.w.rows())
    throw UsageError("projection expects " + std::to_string(p.w.rows()) +
                     " columns, got " + std::to_string(s.cols()));
  nn::LayerNormCache ln;
  nn::Matrix out =
      nn::Relu(nn::LayerNorm(nn::Linear(s, p.w, p.bias), p.gain, p.offset, &ln));
  if (cache) {
    cache->s = s;
    cache->ln = std::move(ln);
    cache->out = out;
  }
  return out;
}

nn::Matrix ProjectFBackward(const nn::Matrix& dy, const ProjectionParams& p,
                            const ProjectionCache& cache,
                            ProjectionParams& grad) {
  const nn::Matrix dnorm = nn::ReluBackward(cache.out, dy);
  const nn::Matrix dlin =
      nn::LayerNormBackward(dnorm, p.gain, cache.ln, grad.gain, grad.offset);
  nn::Matrix ds;
  nn::LinearBackward(cache.s, p.w, dlin, &ds, grad.w, grad.bias);
  return ds;
}

nn::Matrix BuildDecoderInput(const nn::Matrix& s, const ProjectionParams& p,
                             std::span<const Symbol> prev,
                             const nn::Matrix& embed, const nn::Matrix& pos,
                             ProjectionCache* cache) {
  const auto t = static_cast<Eigen::Index>(prev.size());
  if (t == 0) throw UsageError("decoder input needs at least one step");
  if (s.rows() != 0 && s.rows() != t)
    throw UsageError("n-gram matrix has " + std::to_string(s.rows()) +
                     " rows for " + std::to_string(t) + " previous symbols");
  if (pos.rows() < t || pos.cols() != embed.cols())
    throw UsageError("positional encoding too short for the decoder input");
  nn::Matrix x(t, embed.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    const Symbol c = prev[static_cast<size_t>(i)];
    if (c < 0 || c >= embed.rows())
      throw UsageError("previous symbol " + std::to_string(c) +
                       " has no embedding");
    x.row(i) = embed.row(c);
  }
  if (s.rows() != 0) x = ProjectF(s, p, cache) + x;
  x += pos.topRows(t);
  return x;
}

}  // namespace ngi

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
// n-gram injection into the decoder input:
//
//   X = f(phi(S)) + embed(prev) + P
//
// S stacks one n-gram distribution vector per decoding step, phi perturbs
// each row with uniform white noise (training only) and renormalizes, f is
// a linear map followed by layer normalization and ReLU.

#ifndef NGI_INJECTION_HPP_
#define NGI_INJECTION_HPP_

#include <span>
#include <vector>

#include "ngi/charset.hpp"
#include "ngi/nn.hpp"

namespace ngi {

class NgramModel;
class Rng;

struct NoiseConfig {
  double a = -0.1;
  double b = 0.1;
  double tau = 0.2;

  void Validate() const;  // throws UsageError
  bool enabled() const { return tau > 0.0 && !(a == 0.0 && b == 0.0); }
};

inline constexpr double kNoiseFloor = 1e-8;

// Clamps entries below kNoiseFloor up to it and divides by the new sum.
std::vector<double> Renormalize(std::vector<double> v);

// psi(s + eps).
std::vector<double> ApplyNoiseWith(std::span<const double> s,
                                   std::span<const double> eps);

// One Bernoulli(tau) draw for the whole vector; when it fires, eps_k ~
// U(a, b) i.i.d. and the result is renormalized. Identity otherwise.
std::vector<double> ApplyNoise(std::span<const double> s,
                               const NoiseConfig& cfg, Rng& rng);

// Row t is the (possibly noised) distribution vector for the context
// prefix[0..t]; prefix[0] must be <s>. Noise is applied only when
// train_mode is set (rng required then).
nn::Matrix AssembleSngi(const NgramModel& model,
                        std::span<const Symbol> prefix,
                        const NoiseConfig& cfg, Rng* rng, bool train_mode);

// f: K x d linear map, then layer normalization, then ReLU.
struct ProjectionParams {
  nn::Matrix w, bias, gain, offset;

  static ProjectionParams Zeros(int k, int d);
};

struct ProjectionCache {
  nn::Matrix s;
  nn::LayerNormCache ln;
  nn::Matrix out;
};

nn::Matrix ProjectF(const nn::Matrix& s, const ProjectionParams& p,
                    ProjectionCache* cache);
// Accumulates parameter gradients; returns dL/dS.
nn::Matrix ProjectFBackward(const nn::Matrix& dy, const ProjectionParams& p,
                            const ProjectionCache& cache,
                            ProjectionParams& grad);

// f(S) + embed[prev] + pos[0..t). S may be empty (0 rows): the baseline
// decoder input without injection.
nn::Matrix BuildDecoderInput(const nn::Matrix& s, const ProjectionParams& p,
                             std::span<const Symbol> prev,
                             const nn::Matrix& embed, const nn::Matrix& pos,
                             ProjectionCache* cache);

}  // namespace ngi

#endif  // NGI_INJECTION_HPP_

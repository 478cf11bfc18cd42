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

#include <doctest.h>

#include <cmath>

#include "ngi/error.hpp"
#include "ngi/injection.hpp"
#include "ngi/ngram.hpp"
#include "ngi/rng.hpp"
#include "oracles.hpp"

using namespace ngi;

namespace {

nn::Matrix RandomMatrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  nn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-scale, scale);
  return m;
}

NgramModel AbBigram() {
  const Corpus c = Corpus::FromUtf8({"ab"});
  return EstimateWittenBell(c, Charset::FromCorpus(c), 2);
}

}  // namespace

TEST_CASE("noise: identity when it does not fire") {
  Rng rng(1);
  const std::vector<double> s = {0.2, 0.3, 0.5};
  NoiseConfig off;
  off.tau = 0.0;
  for (int i = 0; i < 100; ++i) CHECK(ApplyNoise(s, off, rng) == s);
}

TEST_CASE("noise: pinned perturbation and renormalization") {
  const std::vector<double> a = ApplyNoiseWith(std::vector<double>{0.5, 0.5},
                                               std::vector<double>{-0.1, 0.1});
  CHECK(a[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.6).epsilon(1e-15));

  const std::vector<double> b = ApplyNoiseWith(std::vector<double>{0.05, 0.95},
                                               std::vector<double>{-0.1, 0.1});
  const double sum = kNoiseFloor + 1.05;
  CHECK(b[0] == doctest::Approx(kNoiseFloor / sum).epsilon(1e-12));
  CHECK(b[0] == doctest::Approx(9.52e-9).epsilon(1e-3));
  CHECK(b[1] == doctest::Approx(1.05 / sum).epsilon(1e-12));
  CHECK_THROWS_AS(ApplyNoiseWith(std::vector<double>{1.0}, std::vector<double>{0.0, 0.0}), UsageError);
}

TEST_CASE("noise: firing rate and perturbation range") {
  Rng rng(42);
  NoiseConfig cfg;  // a=-0.1, b=0.1, tau=0.2
  const std::vector<double> s(10, 0.1);
  int fired = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto out = ApplyNoise(s, cfg, rng);
    double sum = 0.0;
    for (double x : out) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    if (out != s) {
      ++fired;
      // The floor keeps every renormalized entry strictly positive.
      for (double x : out) CHECK((x > 0.0 && x <= 1.0));
    }
  }
  const double rate = static_cast<double>(fired) / n;
  // Binomial standard deviation is 0.0028; allow five of them.
  CHECK(std::fabs(rate - 0.2) < 0.015);
  CHECK_THROWS_AS((NoiseConfig{0.1, -0.1, 0.2}.Validate()), UsageError);
  CHECK_THROWS_AS((NoiseConfig{-0.1, 0.1, 1.5}.Validate()), UsageError);
}

TEST_CASE("assembly of the n-gram matrix") {
  const Charset cs = Charset::FromSymbols({U'a', U'b'});
  std::vector<std::map<Ngram, NgramEntry>> t(1);
  for (Symbol s = 0; s < 3; ++s) t[0][{s}] = {std::log10(1.0 / 3.0), std::nullopt};
  const NgramModel uniform(1, cs, t);
  const std::vector<Symbol> sos{cs.sos()};
  const nn::Matrix u = AssembleSngi(uniform, sos, {}, nullptr, false);
  REQUIRE(u.rows() == 1);
  for (int k = 0; k < 3; ++k) CHECK(u(0, k) == doctest::Approx(1.0 / 3));

  const NgramModel m = AbBigram();
  const std::vector<Symbol> prefix{3, 0};
  const nn::Matrix s = AssembleSngi(m, prefix, {}, nullptr, false);
  REQUIRE(s.rows() == 2);
  CHECK(s(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(s(0, 1) == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(s(0, 2) == doctest::Approx(1.0 / 6).epsilon(1e-12));
  const oracle::WittenBell o({{0, 1}}, 3, 2);
  for (int k = 0; k < 3; ++k) CHECK(s(1, k) == doctest::Approx(o.Prob({0}, k)).epsilon(1e-12));

  CHECK(AssembleSngi(m, prefix, {}, nullptr, false) == s);
  CHECK_THROWS_AS(AssembleSngi(m, std::vector<Symbol>{0}, {}, nullptr, false), UsageError);
  CHECK_THROWS_AS(AssembleSngi(m, prefix, {}, nullptr, true), UsageError);

  // Noise applies only in training mode.
  NoiseConfig always;
  always.tau = 1.0;
  Rng rng(3);
  CHECK(AssembleSngi(m, prefix, always, &rng, false) == s);
  CHECK_FALSE(AssembleSngi(m, prefix, always, &rng, true) == s);
}

TEST_CASE("projection f") {
  const int k = 4, d = 6;
  const ProjectionParams zero = ProjectionParams::Zeros(k, d);
  ProjectionParams unit = zero;
  unit.gain.setOnes();
  Rng rng(5);
  const nn::Matrix s = RandomMatrix(3, k, rng).cwiseAbs();
  const nn::Matrix y = ProjectF(s, unit, nullptr);
  CHECK(y.rows() == 3);
  CHECK(y.cols() == d);
  CHECK(y.isZero(0.0));
  CHECK_THROWS_AS(ProjectF(RandomMatrix(3, k + 1, rng), unit, nullptr), UsageError);
}

TEST_CASE("projection f gradients match central differences") {
  const int k = 5, d = 6;
  Rng rng(11);
  ProjectionParams p{RandomMatrix(k, d, rng), RandomMatrix(1, d, rng, 0.3),
                     RandomMatrix(1, d, rng, 0.5), RandomMatrix(1, d, rng, 0.5)};
  p.gain.array() += 1.0;
  nn::Matrix s = RandomMatrix(3, k, rng).cwiseAbs();
  const nn::Matrix weights = RandomMatrix(3, d, rng);
  const auto loss = [&] { return ProjectF(s, p, nullptr).cwiseProduct(weights).sum(); };

  ProjectionCache cache;
  ProjectF(s, p, &cache);
  ProjectionParams grad = ProjectionParams::Zeros(k, d);
  const nn::Matrix ds = ProjectFBackward(weights, p, cache, grad);

  const auto check = [&](nn::Matrix& param, const nn::Matrix& analytic) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double numeric = oracle::CentralDifference(loss, param.data()[i]);
      CHECK(oracle::GradientsAgree(analytic.data()[i], numeric));
    }
  };
  check(p.w, grad.w);
  check(p.bias, grad.bias);
  check(p.gain, grad.gain);
  check(p.offset, grad.offset);
  check(s, ds);
}

TEST_CASE("decoder input") {
  const int k = 3, d = 4;
  Rng rng(8);
  const nn::Matrix embed = RandomMatrix(k + 1, d, rng);
  const nn::Matrix pos = nn::PositionalEncoding(5, d);
  const std::vector<Symbol> prev{k, 0, 1};
  nn::Matrix s(3, k);
  s.setConstant(1.0 / k);

  // Zero projection: the plain embedding plus positions.
  const ProjectionParams zero = ProjectionParams::Zeros(k, d);
  const nn::Matrix x0 = BuildDecoderInput(s, zero, prev, embed, pos, nullptr);
  const nn::Matrix base = BuildDecoderInput(nn::Matrix(0, k), zero, prev, embed, pos, nullptr);
  CHECK(x0 == base);
  for (int t = 0; t < 3; ++t)
    CHECK(base.row(t) == embed.row(prev[static_cast<size_t>(t)]) + pos.row(t));

  ProjectionParams p{RandomMatrix(k, d, rng), RandomMatrix(1, d, rng), RandomMatrix(1, d, rng),
                     RandomMatrix(1, d, rng)};
  const std::vector<Symbol> first{k};
  const nn::Matrix one = BuildDecoderInput(s.topRows(1), p, first, embed, pos, nullptr);
  REQUIRE(one.rows() == 1);
  const nn::Matrix expect = ProjectF(s.topRows(1), p, nullptr) + embed.row(k) + pos.row(0);
  CHECK((one - expect).isZero(0.0));

  nn::Matrix doubled(6, k);
  doubled.setConstant(1.0 / k);
  CHECK_THROWS_AS(BuildDecoderInput(doubled, p, prev, embed, pos, nullptr), UsageError);
}

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

#include <cmath>

#include "ngi/error.hpp"
#include "ngi/nn.hpp"
#include "ngi/rng.hpp"

namespace ngi::nn {

Matrix PositionalEncoding(int steps, int d) {
  if (d <= 0 || d % 2 != 0)
    throw UsageError("positional encoding needs an even dimension, got " +
                     std::to_string(d));
  if (steps < 0) throw UsageError("negative step count");
  Matrix pe(steps, d);
  for (int pos = 0; pos < steps; ++pos) {
    for (int i = 0; i < d / 2; ++i) {
      const double angle =
          pos / std::pow(10000.0, 2.0 * i / static_cast<double>(d));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Matrix Linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

void LinearBackward(const Matrix& x, const Matrix& w, const Matrix& dy,
                    Matrix* dx, Matrix& dw, Matrix& db) {
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  if (dx) *dx = dy * w.transpose();
}

Matrix LayerNorm(const Matrix& x, const Matrix& gain, const Matrix& offset,
                 LayerNormCache* cache) {
  const Eigen::Index n = x.cols();
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / static_cast<double>(n);
    inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = centered * inv_std(r);
  }
  Matrix y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += offset.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNormBackward(const Matrix& dy, const Matrix& gain,
                         const LayerNormCache& cache, Matrix& dgain,
                         Matrix& doffset) {
  dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  doffset += dy.colwise().sum();
  const double n = static_cast<double>(dy.cols());
  Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / n;
    const double mean_dx =
        dxhat.row(r).dot(cache.xhat.row(r)) / n;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d -
                 cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

Matrix Relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix ReluBackward(const Matrix& y, const Matrix& dy) {
  return (y.array() > 0.0).select(dy, 0.0);
}

void SoftmaxRows(Matrix& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    x.row(r) = (x.row(r).array() - mx).exp();
    x.row(r) /= x.row(r).sum();
  }
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.Uniform() < p ? 0.0 : keep;
  return m;
}

Matrix Attention(const Matrix& xq, const Matrix& xkv, const AttentionParams& p,
                 int heads, bool causal, AttentionCache* cache) {
  const Eigen::Index d = p.wq.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (causal && xq.rows() != xkv.rows())
    throw UsageError("causal attention needs matching query/key lengths");
  Matrix q = Linear(xq, p.wq, p.bq);
  Matrix k = Linear(xkv, p.wk, p.bk);
  Matrix v = Linear(xkv, p.wv, p.bv);
  Matrix concat(xq.rows(), d);
  std::vector<Matrix> probs(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Matrix s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const auto visible = s.row(i).head(i + 1);
        const double mx = visible.maxCoeff();
        s.row(i).head(i + 1) = (visible.array() - mx).exp();
        s.row(i).head(i + 1) /= s.row(i).head(i + 1).sum();
        s.row(i).tail(s.cols() - i - 1).setZero();
      }
    } else {
      SoftmaxRows(s);
    }
    concat.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
    probs[static_cast<size_t>(h)] = std::move(s);
  }
  Matrix y = Linear(concat, p.wo, p.bo);
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->probs = std::move(probs);
  }
  return y;
}

void AttentionBackward(const Matrix& dy, const AttentionParams& p, int heads,
                       const AttentionCache& c, AttentionParams& g,
                       Matrix* dxq, Matrix* dxkv) {
  const Eigen::Index d = p.wq.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix dconcat;
  LinearBackward(c.concat, p.wo, dy, &dconcat, g.wo, g.bo);
  Matrix dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Matrix& a = c.probs[static_cast<size_t>(h)];
    const auto doh = dconcat.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh) = a.transpose() * doh;
    Matrix da = doh * c.v.middleCols(h * dh, dh).transpose();
    Matrix ds = a.array() *
                (da.array().colwise() - (a.array() * da.array()).rowwise().sum());
    dq.middleCols(h * dh, dh) = (ds * c.k.middleCols(h * dh, dh)) * scale;
    dk.middleCols(h * dh, dh) = (ds.transpose() * c.q.middleCols(h * dh, dh)) * scale;
  }
  Matrix dxq_local, dk_x, dv_x;
  LinearBackward(c.xq, p.wq, dq, &dxq_local, g.wq, g.bq);
  LinearBackward(c.xkv, p.wk, dk, &dk_x, g.wk, g.bk);
  LinearBackward(c.xkv, p.wv, dv, &dv_x, g.wv, g.bv);
  if (dxq) *dxq = std::move(dxq_local);
  if (dxkv) *dxkv = dk_x + dv_x;
}

double SoftmaxCrossEntropy(const Matrix& logits,
                           const std::vector<int>& targets, double scale,
                           Matrix* dlogits) {
  if (static_cast<size_t>(logits.rows()) != targets.size())
    throw UsageError("cross-entropy: one target per logits row");
  Matrix p = logits;
  SoftmaxRows(p);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const auto t = static_cast<Eigen::Index>(targets[static_cast<size_t>(r)]);
    // log-sum-exp form keeps tiny probabilities finite.
    const double mx = logits.row(r).maxCoeff();
    const double lse =
        mx + std::log((logits.row(r).array() - mx).exp().sum());
    loss += lse - logits(r, t);
    if (dlogits) p(r, t) -= 1.0;
  }
  if (dlogits) *dlogits = p * scale;
  return loss;
}

}  // namespace ngi::nn

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
// Differentiable building blocks with explicit forward caches and
// hand-written backward passes. Rows are sequence positions; gradients are
// accumulated (+=) into caller-provided buffers.

#ifndef NGI_NN_HPP_
#define NGI_NN_HPP_

#include <vector>

#include <Eigen/Core>

namespace ngi {
class Rng;
}

namespace ngi::nn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr double kLayerNormEps = 1e-5;

// Sinusoidal encoding: PE[p, 2i] = sin(p / 10000^(2i/d)),
// PE[p, 2i+1] = cos(p / 10000^(2i/d)). Throws UsageError for odd d.
Matrix PositionalEncoding(int steps, int d);

// y = x w + b (b broadcast over rows).
Matrix Linear(const Matrix& x, const Matrix& w, const Matrix& b);
// Accumulates dw, db; writes dx when non-null.
void LinearBackward(const Matrix& x, const Matrix& w, const Matrix& dy,
                    Matrix* dx, Matrix& dw, Matrix& db);

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

// Row-wise normalization over the columns. A constant row normalizes to
// the offset.
Matrix LayerNorm(const Matrix& x, const Matrix& gain, const Matrix& offset,
                 LayerNormCache* cache);
Matrix LayerNormBackward(const Matrix& dy, const Matrix& gain,
                         const LayerNormCache& cache, Matrix& dgain,
                         Matrix& doffset);

Matrix Relu(const Matrix& x);
// dy masked by y > 0.
Matrix ReluBackward(const Matrix& y, const Matrix& dy);

void SoftmaxRows(Matrix& x);

// Inverted dropout mask: 0 with probability p, 1/(1-p) otherwise.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng);

struct AttentionParams {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
};

struct AttentionCache {
  Matrix xq, xkv, q, k, v, concat;
  std::vector<Matrix> probs;  // per head, rows sum to 1
};

// Multi-head scaled dot-product attention of xq (t x d) over xkv (m x d).
// With `causal`, row i only sees rows j <= i (requires t == m).
Matrix Attention(const Matrix& xq, const Matrix& xkv, const AttentionParams& p,
                 int heads, bool causal, AttentionCache* cache);
void AttentionBackward(const Matrix& dy, const AttentionParams& p, int heads,
                       const AttentionCache& cache, AttentionParams& grad,
                       Matrix* dxq, Matrix* dxkv);

// Sum over rows of -log softmax(logits)[target]; writes d(sum)/d(logits)
// scaled by `scale` into dlogits when non-null.
double SoftmaxCrossEntropy(const Matrix& logits,
                           const std::vector<int>& targets, double scale,
                           Matrix* dlogits);

}  // namespace ngi::nn

#endif  // NGI_NN_HPP_

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
// Word attention network decoder: a small post-norm transformer decoder
// (masked self-attention, cross-attention over encoder frames, ReLU
// feed-forward) fed with optional n-gram injection. The encoder is a
// single linear map of feature frames plus positional encoding.

#ifndef NGI_DECODER_HPP_
#define NGI_DECODER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ngi/charset.hpp"
#include "ngi/injection.hpp"
#include "ngi/nn.hpp"

namespace ngi {

class NgramModel;
class Rng;

struct DecoderConfig {
  int charset_size = 0;  // K, predictable symbols incl. EOS
  int feature_dim = 16;  // encoder frame width
  int d = 256;
  int heads = 8;
  int layers = 2;
  int ffn_dim = 1024;
  double dropout = 0.1;
  bool ngi = true;

  // Paper-scale defaults (d=256, 8 heads, 2 layers, ffn 4d, dropout 0.1).
  static DecoderConfig Paper(int k, int feature_dim);
  // Desk-scale profile: d=64, 4 heads, 2 layers, ffn 4d, no dropout.
  static DecoderConfig Desk(int k, int feature_dim);

  void Validate() const;  // throws UsageError
  bool operator==(const DecoderConfig&) const = default;
};

struct LayerParams {
  nn::AttentionParams self_attn, cross_attn;
  nn::Matrix ln1_gain, ln1_offset;
  nn::Matrix ln2_gain, ln2_offset;
  nn::Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  nn::Matrix ln3_gain, ln3_offset;
};

struct DecoderParams {
  nn::Matrix embed;  // (K + 1) x d, last row is <s>
  ProjectionParams proj;
  nn::Matrix enc_w, enc_b;
  std::vector<LayerParams> layers;
  nn::Matrix out_w, out_b;  // d x K

  static DecoderParams Zeros(const DecoderConfig& cfg);
  // Scaled uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases and
  // offsets, unit gains. The output head starts at zero so that the first
  // predictions are uniform. The projection stays zero without NGI.
  static DecoderParams Init(const DecoderConfig& cfg, uint64_t seed);

  // f(name, matrix) over every parameter in a fixed order.
  template <class F>
  void ForEach(F&& f) {
    Visit(*this, f);
  }
  template <class F>
  void ForEach(F&& f) const {
    Visit(*this, f);
  }

  size_t ParameterCount() const;
  void SetZero();
  bool operator==(const DecoderParams& other) const;

 private:
  template <class Self, class F>
  static void Visit(Self& p, F& f) {
    f("embed", p.embed);
    f("proj.w", p.proj.w);
    f("proj.bias", p.proj.bias);
    f("proj.gain", p.proj.gain);
    f("proj.offset", p.proj.offset);
    f("enc.w", p.enc_w);
    f("enc.b", p.enc_b);
    for (size_t l = 0; l < p.layers.size(); ++l) {
      auto& L = p.layers[l];
      const std::string pre = "layer" + std::to_string(l) + ".";
      for (auto* a : {&L.self_attn, &L.cross_attn}) {
        const std::string ap = pre + (a == &L.self_attn ? "self." : "cross.");
        f(ap + "wq", a->wq);
        f(ap + "bq", a->bq);
        f(ap + "wk", a->wk);
        f(ap + "bk", a->bk);
        f(ap + "wv", a->wv);
        f(ap + "bv", a->bv);
        f(ap + "wo", a->wo);
        f(ap + "bo", a->bo);
      }
      f(pre + "ln1.gain", L.ln1_gain);
      f(pre + "ln1.offset", L.ln1_offset);
      f(pre + "ln2.gain", L.ln2_gain);
      f(pre + "ln2.offset", L.ln2_offset);
      f(pre + "ffn.w1", L.ffn_w1);
      f(pre + "ffn.b1", L.ffn_b1);
      f(pre + "ffn.w2", L.ffn_w2);
      f(pre + "ffn.b2", L.ffn_b2);
      f(pre + "ln3.gain", L.ln3_gain);
      f(pre + "ln3.offset", L.ln3_offset);
    }
    f("out.w", p.out_w);
    f("out.b", p.out_b);
  }
};

// Encoder stand-in: frames (m x feature_dim) -> m x d.
nn::Matrix Encode(const DecoderParams& p, const nn::Matrix& frames);

struct DecoderCache {
  struct Layer {
    nn::AttentionCache self_attn, cross_attn;
    nn::LayerNormCache ln1, ln2, ln3;
    nn::Matrix mask1, mask2, mask3;  // dropout, empty when off
    nn::Matrix ffn_in, ffn_hidden;
  };
  std::vector<Layer> layers;
  nn::Matrix last;  // input of the output head
};

// Logits (t x K) for decoder input x (t x d) attending to enc (m x d).
// Row i depends only on x rows <= i. Dropout applies when dropout_rng is
// given and cfg.dropout > 0.
nn::Matrix DecoderForward(const nn::Matrix& x, const nn::Matrix& enc,
                          const DecoderParams& p, const DecoderConfig& cfg,
                          DecoderCache* cache, Rng* dropout_rng);
void DecoderBackward(const nn::Matrix& dlogits, const DecoderParams& p,
                     const DecoderConfig& cfg, const DecoderCache& cache,
                     DecoderParams& grad, nn::Matrix* dx, nn::Matrix* denc);

// One teacher-forced training sequence.
struct SampleInput {
  const nn::Matrix* frames = nullptr;
  std::vector<Symbol> prev;     // <s> c1 .. cL (possibly corrupted)
  std::vector<Symbol> targets;  // c1 .. cL </s>
  nn::Matrix sngi;              // t x K, or 0 rows without NGI
};

// Full-pipeline logits for one sequence.
nn::Matrix SampleLogits(const DecoderParams& p, const DecoderConfig& cfg,
                        const SampleInput& in);

// Summed cross-entropy over the sequence. When grad is non-null,
// accumulates scale * d(loss)/d(params).
double SampleLoss(const DecoderParams& p, const DecoderConfig& cfg,
                  const SampleInput& in, double scale, DecoderParams* grad,
                  Rng* dropout_rng = nullptr);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const DecoderParams& like, AdamConfig cfg);
  void Step(DecoderParams& params, const DecoderParams& grad);
  int64_t step() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  DecoderParams m_, v_;
  int64_t step_ = 0;
};

struct TrainExample {
  nn::Matrix frames;
  std::vector<Symbol> word;  // without padding
};

struct StepStats {
  double loss = 0.0;  // mean cross-entropy per target position
  size_t positions = 0;
  size_t substitutions = 0;  // teacher-forcing errors injected
};

// Teacher forcing error: each previous symbol after <s> is replaced with
// probability tfe_prob by a uniform draw over the non-EOS symbols, before
// both the embedding lookup and the n-gram context. lm is required iff
// cfg.ngi. One Adam update on the batch-mean loss.
StepStats TrainStep(std::span<const TrainExample* const> batch,
                    DecoderParams& params, Adam& opt, const DecoderConfig& cfg,
                    double tfe_prob, const NoiseConfig& noise,
                    const NgramModel* lm, Rng& rng);

// Step-by-step inference with per-layer key/value caches; matches
// DecoderForward row by row.
class IncrementalDecoder {
 public:
  struct State {
    std::vector<nn::Matrix> keys, values;  // per layer, steps x d
    int steps = 0;
  };

  IncrementalDecoder(const DecoderParams& p, const DecoderConfig& cfg,
                     const nn::Matrix& frames);

  State Start() const;
  // prev: symbol fed at this step; sngi_row: distribution vector (K) or
  // empty without NGI. Returns the logits row (1 x K).
  nn::RowVector Step(State& state, Symbol prev,
                     std::span<const double> sngi_row) const;

 private:
  const DecoderParams& p_;
  const DecoderConfig& cfg_;
  std::vector<nn::Matrix> cross_k_, cross_v_;
};

// Self-describing checkpoint: magic line, JSON header (config, charset,
// seed, n-gram fingerprint, free-form metadata, array directory), then the
// arrays as little-endian float64 in directory order.
struct Checkpoint {
  static constexpr const char* kMagic = "NGICKPT1";

  DecoderConfig config;
  Charset charset;
  uint64_t seed = 0;
  std::string lm_fingerprint;  // empty without NGI
  int lm_order = 0;
  std::string metadata_json = "{}";
  DecoderParams params;

  void Save(const std::string& path) const;
  static Checkpoint Load(const std::string& path);
};

}  // namespace ngi

#endif  // NGI_DECODER_HPP_

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

#include "ngi/decoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ngi/error.hpp"
#include "ngi/ngram.hpp"
#include "ngi/rng.hpp"

namespace ngi {

using nn::Matrix;

namespace {

// Positional table grown on demand, one per dimension and thread.
const Matrix& Positions(int d, Eigen::Index steps) {
  thread_local std::map<int, Matrix> tables;
  Matrix& m = tables[d];
  if (m.rows() < steps)
    m = nn::PositionalEncoding(static_cast<int>(std::max<Eigen::Index>(steps, 32)), d);
  return m;
}

nn::AttentionParams AttentionZeros(int d) {
  return {Matrix::Zero(d, d), Matrix::Zero(1, d), Matrix::Zero(d, d),
          Matrix::Zero(1, d), Matrix::Zero(d, d), Matrix::Zero(1, d),
          Matrix::Zero(d, d), Matrix::Zero(1, d)};
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<Matrix*> Flatten(DecoderParams& p) {
  std::vector<Matrix*> out;
  p.ForEach([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> Flatten(const DecoderParams& p) {
  std::vector<const Matrix*> out;
  p.ForEach([&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

}  // namespace

DecoderConfig DecoderConfig::Paper(int k, int feature_dim) {
  DecoderConfig c;
  c.charset_size = k;
  c.feature_dim = feature_dim;
  return c;
}

DecoderConfig DecoderConfig::Desk(int k, int feature_dim) {
  DecoderConfig c;
  c.charset_size = k;
  c.feature_dim = feature_dim;
  c.d = 64;
  c.heads = 4;
  c.layers = 2;
  c.ffn_dim = 256;
  c.dropout = 0.0;
  return c;
}

void DecoderConfig::Validate() const {
  if (charset_size < 1) throw UsageError("decoder needs a non-empty charset");
  if (feature_dim < 1 || d < 2 || heads < 1 || layers < 1 || ffn_dim < 1)
    throw UsageError("decoder dimensions must be positive");
  if (d % heads != 0) throw UsageError("d must be divisible by heads");
  if (d % 2 != 0) throw UsageError("d must be even for positional encoding");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw UsageError("dropout must lie in [0, 1)");
}

DecoderParams DecoderParams::Zeros(const DecoderConfig& cfg) {
  cfg.Validate();
  const int k = cfg.charset_size, d = cfg.d;
  DecoderParams p;
  p.embed = Matrix::Zero(k + 1, d);
  p.proj = ProjectionParams::Zeros(k, d);
  p.enc_w = Matrix::Zero(cfg.feature_dim, d);
  p.enc_b = Matrix::Zero(1, d);
  p.layers.resize(static_cast<size_t>(cfg.layers));
  for (auto& L : p.layers) {
    L.self_attn = AttentionZeros(d);
    L.cross_attn = AttentionZeros(d);
    for (auto* m : {&L.ln1_gain, &L.ln1_offset, &L.ln2_gain, &L.ln2_offset,
                    &L.ln3_gain, &L.ln3_offset})
      *m = Matrix::Zero(1, d);
    L.ffn_w1 = Matrix::Zero(d, cfg.ffn_dim);
    L.ffn_b1 = Matrix::Zero(1, cfg.ffn_dim);
    L.ffn_w2 = Matrix::Zero(cfg.ffn_dim, d);
    L.ffn_b2 = Matrix::Zero(1, d);
  }
  p.out_w = Matrix::Zero(d, k);
  p.out_b = Matrix::Zero(1, k);
  return p;
}

DecoderParams DecoderParams::Init(const DecoderConfig& cfg, uint64_t seed) {
  DecoderParams p = Zeros(cfg);
  Rng rng(seed);
  p.ForEach([&](const std::string& name, Matrix& m) {
    const bool proj = name.rfind("proj.", 0) == 0;
    if (proj && !cfg.ngi) return;
    if (EndsWith(name, "gain")) {
      m.setOnes();
    } else if (m.rows() > 1 && name != "out.w") {
      const double limit = std::sqrt(6.0 / double(m.rows() + m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.Uniform(-limit, limit);
    }
  });
  return p;
}

size_t DecoderParams::ParameterCount() const {
  size_t n = 0;
  ForEach([&](const std::string&, const Matrix& m) { n += static_cast<size_t>(m.size()); });
  return n;
}

void DecoderParams::SetZero() {
  ForEach([](const std::string&, Matrix& m) { m.setZero(); });
}

bool DecoderParams::operator==(const DecoderParams& other) const {
  const auto a = Flatten(*this);
  const auto b = Flatten(other);
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() ||
        *a[i] != *b[i])
      return false;
  return true;
}

Matrix Encode(const DecoderParams& p, const Matrix& frames) {
  if (frames.cols() != p.enc_w.rows())
    throw UsageError("feature frames have " + std::to_string(frames.cols()) +
                     " columns, encoder expects " +
                     std::to_string(p.enc_w.rows()));
  Matrix enc = nn::Linear(frames, p.enc_w, p.enc_b);
  enc += Positions(static_cast<int>(p.enc_w.cols()), frames.rows()).topRows(frames.rows());
  return enc;
}

Matrix DecoderForward(const Matrix& x, const Matrix& enc,
                      const DecoderParams& p, const DecoderConfig& cfg,
                      DecoderCache* cache, Rng* dropout_rng) {
  if (x.cols() != cfg.d || enc.cols() != cfg.d)
    throw UsageError("decoder inputs must have d columns");
  if (p.layers.size() != static_cast<size_t>(cfg.layers))
    throw UsageError("parameter layer count does not match the config");
  DecoderCache local;
  DecoderCache& c = cache ? *cache : local;
  c.layers.resize(p.layers.size());
  const bool drop = dropout_rng && cfg.dropout > 0.0;
  auto dropout = [&](Matrix& m, Matrix& mask) {
    if (!drop) {
      mask.resize(0, 0);
      return;
    }
    mask = nn::DropoutMask(m.rows(), m.cols(), cfg.dropout, *dropout_rng);
    m.array() *= mask.array();
  };

  Matrix h = x;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& L = p.layers[l];
    auto& lc = c.layers[l];
    Matrix a = nn::Attention(h, h, L.self_attn, cfg.heads, true, &lc.self_attn);
    dropout(a, lc.mask1);
    h = nn::LayerNorm(h + a, L.ln1_gain, L.ln1_offset, &lc.ln1);
    Matrix cr = nn::Attention(h, enc, L.cross_attn, cfg.heads, false, &lc.cross_attn);
    dropout(cr, lc.mask2);
    h = nn::LayerNorm(h + cr, L.ln2_gain, L.ln2_offset, &lc.ln2);
    lc.ffn_in = h;
    lc.ffn_hidden = nn::Relu(nn::Linear(h, L.ffn_w1, L.ffn_b1));
    Matrix f = nn::Linear(lc.ffn_hidden, L.ffn_w2, L.ffn_b2);
    dropout(f, lc.mask3);
    h = nn::LayerNorm(h + f, L.ln3_gain, L.ln3_offset, &lc.ln3);
  }
  c.last = h;
  return nn::Linear(h, p.out_w, p.out_b);
}

void DecoderBackward(const Matrix& dlogits, const DecoderParams& p,
                     const DecoderConfig& cfg, const DecoderCache& c,
                     DecoderParams& g, Matrix* dx, Matrix* denc) {
  auto undrop = [](Matrix m, const Matrix& mask) {
    if (mask.size()) m.array() *= mask.array();
    return m;
  };
  Matrix dh;
  nn::LinearBackward(c.last, p.out_w, dlogits, &dh, g.out_w, g.out_b);
  Matrix denc_total;
  for (size_t l = p.layers.size(); l-- > 0;) {
    const LayerParams& L = p.layers[l];
    LayerParams& G = g.layers[l];
    const auto& lc = c.layers[l];

    Matrix dsum = nn::LayerNormBackward(dh, L.ln3_gain, lc.ln3, G.ln3_gain, G.ln3_offset);
    Matrix dhidden, dh2;
    nn::LinearBackward(lc.ffn_hidden, L.ffn_w2, undrop(dsum, lc.mask3), &dhidden,
                       G.ffn_w2, G.ffn_b2);
    dhidden = nn::ReluBackward(lc.ffn_hidden, dhidden);
    nn::LinearBackward(lc.ffn_in, L.ffn_w1, dhidden, &dh2, G.ffn_w1, G.ffn_b1);
    dh2 += dsum;

    dsum = nn::LayerNormBackward(dh2, L.ln2_gain, lc.ln2, G.ln2_gain, G.ln2_offset);
    Matrix dq, denc_l;
    nn::AttentionBackward(undrop(dsum, lc.mask2), L.cross_attn, cfg.heads,
                          lc.cross_attn, G.cross_attn, &dq, &denc_l);
    if (denc_total.size() == 0)
      denc_total = std::move(denc_l);
    else
      denc_total += denc_l;
    Matrix dh1 = dsum + dq;

    dsum = nn::LayerNormBackward(dh1, L.ln1_gain, lc.ln1, G.ln1_gain, G.ln1_offset);
    Matrix dself_q, dself_kv;
    nn::AttentionBackward(undrop(dsum, lc.mask1), L.self_attn, cfg.heads,
                          lc.self_attn, G.self_attn, &dself_q, &dself_kv);
    dh = dsum + dself_q + dself_kv;
  }
  if (dx) *dx = std::move(dh);
  if (denc) *denc = std::move(denc_total);
}

namespace {

void CheckSample(const DecoderConfig& cfg, const SampleInput& in) {
  if (!in.frames) throw UsageError("sample has no feature frames");
  if (in.prev.size() != in.targets.size())
    throw UsageError("one target per previous symbol");
  if (cfg.ngi && in.sngi.rows() != static_cast<Eigen::Index>(in.prev.size()))
    throw UsageError("NGI decoder needs one n-gram row per step");
  if (!cfg.ngi && in.sngi.rows() != 0)
    throw UsageError("n-gram rows given to a decoder trained without NGI");
}

}  // namespace

Matrix SampleLogits(const DecoderParams& p, const DecoderConfig& cfg,
                    const SampleInput& in) {
  CheckSample(cfg, in);
  const Matrix enc = Encode(p, *in.frames);
  const Matrix x = BuildDecoderInput(
      in.sngi, p.proj, in.prev, p.embed,
      Positions(cfg.d, static_cast<Eigen::Index>(in.prev.size())), nullptr);
  return DecoderForward(x, enc, p, cfg, nullptr, nullptr);
}

double SampleLoss(const DecoderParams& p, const DecoderConfig& cfg,
                  const SampleInput& in, double scale, DecoderParams* grad,
                  Rng* dropout_rng) {
  CheckSample(cfg, in);
  const Matrix enc = Encode(p, *in.frames);
  ProjectionCache pcache;
  const Matrix x = BuildDecoderInput(
      in.sngi, p.proj, in.prev, p.embed,
      Positions(cfg.d, static_cast<Eigen::Index>(in.prev.size())), &pcache);
  DecoderCache cache;
  const Matrix logits = DecoderForward(x, enc, p, cfg, &cache, dropout_rng);
  Matrix dlogits;
  const double loss = nn::SoftmaxCrossEntropy(logits, in.targets, scale,
                                              grad ? &dlogits : nullptr);
  if (!grad) return loss;

  Matrix dx, denc;
  DecoderBackward(dlogits, p, cfg, cache, *grad, &dx, &denc);
  grad->enc_w.noalias() += in.frames->transpose() * denc;
  grad->enc_b += denc.colwise().sum();
  for (size_t i = 0; i < in.prev.size(); ++i)
    grad->embed.row(in.prev[i]) += dx.row(static_cast<Eigen::Index>(i));
  if (in.sngi.rows() != 0) ProjectFBackward(dx, p.proj, pcache, grad->proj);
  return loss;
}

Adam::Adam(const DecoderParams& like, AdamConfig cfg)
    : cfg_(cfg), m_(like), v_(like) {
  m_.SetZero();
  v_.SetZero();
}

void Adam::Step(DecoderParams& params, const DecoderParams& grad) {
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, double(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, double(step_));
  auto ps = Flatten(params);
  auto gs = Flatten(grad);
  auto ms = Flatten(m_);
  auto vs = Flatten(v_);
  if (ps.size() != gs.size()) throw UsageError("gradient layout mismatch");
  for (size_t i = 0; i < ps.size(); ++i) {
    auto g = gs[i]->array();
    auto m = ms[i]->array();
    auto v = vs[i]->array();
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
    ps[i]->array() -=
        cfg_.lr * (m / c1) / ((v / c2).sqrt() + cfg_.eps);
  }
}

StepStats TrainStep(std::span<const TrainExample* const> batch,
                    DecoderParams& params, Adam& opt, const DecoderConfig& cfg,
                    double tfe_prob, const NoiseConfig& noise,
                    const NgramModel* lm, Rng& rng) {
  if (batch.empty()) throw UsageError("empty training batch");
  if (cfg.ngi && !lm) throw UsageError("NGI training needs an n-gram model");
  if (!(tfe_prob >= 0.0 && tfe_prob <= 1.0))
    throw UsageError("teacher forcing error probability must lie in [0, 1]");
  const int k = cfg.charset_size;
  if (cfg.ngi && lm->charset().size() != k)
    throw UsageError("n-gram charset does not match the decoder");

  StepStats stats;
  for (const auto* ex : batch) stats.positions += ex->word.size() + 1;
  const double scale = 1.0 / double(stats.positions);
  DecoderParams grad = params;
  grad.SetZero();
  const uint64_t step_seed = rng.Next();
  double loss = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const TrainExample& ex = *batch[i];
    Rng item(Rng::Derive(step_seed, i));
    SampleInput in;
    in.frames = &ex.frames;
    in.prev.push_back(k);  // <s>
    in.prev.insert(in.prev.end(), ex.word.begin(), ex.word.end());
    for (size_t j = 1; j < in.prev.size(); ++j) {
      if (item.Uniform() < tfe_prob) {
        in.prev[j] = static_cast<Symbol>(item.Below(static_cast<uint64_t>(k - 1)));
        ++stats.substitutions;
      }
    }
    in.targets.assign(ex.word.begin(), ex.word.end());
    in.targets.push_back(k - 1);  // </s>
    if (cfg.ngi) in.sngi = AssembleSngi(*lm, in.prev, noise, &item, true);
    loss += SampleLoss(params, cfg, in, scale, &grad, &item);
  }
  opt.Step(params, grad);
  stats.loss = loss * scale;
  return stats;
}

IncrementalDecoder::IncrementalDecoder(const DecoderParams& p,
                                       const DecoderConfig& cfg,
                                       const Matrix& frames)
    : p_(p), cfg_(cfg) {
  const Matrix enc = Encode(p, frames);
  for (const auto& L : p.layers) {
    cross_k_.push_back(nn::Linear(enc, L.cross_attn.wk, L.cross_attn.bk));
    cross_v_.push_back(nn::Linear(enc, L.cross_attn.wv, L.cross_attn.bv));
  }
}

IncrementalDecoder::State IncrementalDecoder::Start() const {
  State s;
  s.keys.assign(p_.layers.size(), Matrix(0, cfg_.d));
  s.values.assign(p_.layers.size(), Matrix(0, cfg_.d));
  return s;
}

namespace {

// Attention of one query row over keys/values (rows = positions).
Matrix AttendRow(const Matrix& q, const Matrix& k, const Matrix& v, int heads) {
  const Eigen::Index d = q.cols(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix out(1, d);
  for (int h = 0; h < heads; ++h) {
    Matrix s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    nn::SoftmaxRows(s);
    out.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
  }
  return out;
}

}  // namespace

nn::RowVector IncrementalDecoder::Step(State& st, Symbol prev,
                                       std::span<const double> sngi_row) const {
  if (prev < 0 || prev >= p_.embed.rows())
    throw UsageError("previous symbol has no embedding");
  Matrix x = p_.embed.row(prev);
  if (cfg_.ngi) {
    if (static_cast<int>(sngi_row.size()) != cfg_.charset_size)
      throw UsageError("NGI decoder needs a distribution vector per step");
    Matrix s(1, cfg_.charset_size);
    for (int j = 0; j < cfg_.charset_size; ++j) s(0, j) = sngi_row[static_cast<size_t>(j)];
    x = ProjectF(s, p_.proj, nullptr) + x;
  } else if (!sngi_row.empty()) {
    throw UsageError("distribution vector given to a decoder trained without NGI");
  }
  x += Positions(cfg_.d, st.steps + 1).row(st.steps);

  for (size_t l = 0; l < p_.layers.size(); ++l) {
    const LayerParams& L = p_.layers[l];
    const auto& sa = L.self_attn;
    const Matrix q = nn::Linear(x, sa.wq, sa.bq);
    Matrix& keys = st.keys[l];
    Matrix& values = st.values[l];
    keys.conservativeResize(keys.rows() + 1, Eigen::NoChange);
    values.conservativeResize(values.rows() + 1, Eigen::NoChange);
    keys.row(keys.rows() - 1) = nn::Linear(x, sa.wk, sa.bk);
    values.row(values.rows() - 1) = nn::Linear(x, sa.wv, sa.bv);
    Matrix a = nn::Linear(AttendRow(q, keys, values, cfg_.heads), sa.wo, sa.bo);
    Matrix h = nn::LayerNorm(x + a, L.ln1_gain, L.ln1_offset, nullptr);

    const auto& ca = L.cross_attn;
    const Matrix cq = nn::Linear(h, ca.wq, ca.bq);
    Matrix c = nn::Linear(AttendRow(cq, cross_k_[l], cross_v_[l], cfg_.heads), ca.wo, ca.bo);
    h = nn::LayerNorm(h + c, L.ln2_gain, L.ln2_offset, nullptr);

    Matrix f = nn::Linear(nn::Relu(nn::Linear(h, L.ffn_w1, L.ffn_b1)), L.ffn_w2, L.ffn_b2);
    x = nn::LayerNorm(h + f, L.ln3_gain, L.ln3_offset, nullptr);
  }
  ++st.steps;
  return nn::Linear(x, p_.out_w, p_.out_b).row(0);
}

namespace {

using Json = nlohmann::ordered_json;

Json ConfigJson(const DecoderConfig& c) {
  return Json{{"charset_size", c.charset_size}, {"feature_dim", c.feature_dim},
              {"d", c.d}, {"heads", c.heads}, {"layers", c.layers},
              {"ffn_dim", c.ffn_dim}, {"dropout", c.dropout}, {"ngi", c.ngi}};
}

DecoderConfig ConfigFromJson(const Json& j) {
  DecoderConfig c;
  c.charset_size = j.at("charset_size").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.d = j.at("d").get<int>();
  c.heads = j.at("heads").get<int>();
  c.layers = j.at("layers").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.ngi = j.at("ngi").get<bool>();
  return c;
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint arrays are stored little-endian");

}  // namespace

void Checkpoint::Save(const std::string& path) const {
  Json arrays = Json::array();
  params.ForEach([&](const std::string& name, const Matrix& m) {
    arrays.push_back(Json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  std::vector<uint32_t> symbols(charset.symbols().begin(), charset.symbols().end());
  Json header{{"config", ConfigJson(config)},
              {"charset", symbols},
              {"seed", seed},
              {"lm_fingerprint", lm_fingerprint},
              {"lm_order", lm_order},
              {"metadata", Json::parse(metadata_json)},
              {"arrays", arrays}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << kMagic << '\n' << text.size() << '\n' << text;
  params.ForEach([&](const std::string&, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw Error("cannot write checkpoint " + path);
}

Checkpoint Checkpoint::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::string magic;
  size_t length = 0;
  std::getline(in, magic);
  if (magic != kMagic) throw DataError(path + ": not a checkpoint");
  if (!(in >> length) || in.get() != '\n')
    throw DataError(path + ": malformed checkpoint header");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw DataError(path + ": truncated checkpoint header");
  Checkpoint ck;
  try {
    const Json header = Json::parse(text);
    ck.config = ConfigFromJson(header.at("config"));
    ck.config.Validate();
    std::vector<char32_t> symbols;
    for (uint32_t c : header.at("charset").get<std::vector<uint32_t>>())
      symbols.push_back(static_cast<char32_t>(c));
    ck.charset = Charset::FromSymbols(std::move(symbols));
    ck.seed = header.at("seed").get<uint64_t>();
    ck.lm_fingerprint = header.at("lm_fingerprint").get<std::string>();
    ck.lm_order = header.at("lm_order").get<int>();
    ck.metadata_json = header.at("metadata").dump();
    if (ck.charset.size() != ck.config.charset_size)
      throw DataError(path + ": charset does not match the config");
    ck.params = DecoderParams::Zeros(ck.config);
    const Json& arrays = header.at("arrays");
    size_t i = 0;
    ck.params.ForEach([&](const std::string& name, Matrix& m) {
      if (i >= arrays.size() || arrays[i].at("name") != name ||
          arrays[i].at("rows").get<Eigen::Index>() != m.rows() ||
          arrays[i].at("cols").get<Eigen::Index>() != m.cols())
        throw DataError(path + ": array " + name + " missing or misshapen");
      ++i;
      if (!in.read(reinterpret_cast<char*>(m.data()),
                   static_cast<std::streamsize>(m.size() * sizeof(double))))
        throw DataError(path + ": truncated array " + name);
    });
    if (i != arrays.size()) throw DataError(path + ": unexpected extra arrays");
  } catch (const Json::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }
  return ck;
}

}  // namespace ngi

#include "gak/toy_aed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gak/array_io.hpp"
#include "gak/error.hpp"
#include "gak/tse.hpp"

namespace gak::toy {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL)); }

// Stream tags keep the prototype, init and utterance generators independent.
constexpr std::uint64_t kPrototypeStream = 0x70726f746fULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kUtteranceStream = 0x75747465ULL;
constexpr std::uint64_t kCheckStream = 0x636865636bULL;

std::size_t bos_row(const ToyConfig& cfg) { return cfg.vocab; }

std::size_t previous_input(const ToyConfig& cfg, const ToyBatch& batch, std::size_t step) {
  return step == 0 ? bos_row(cfg) : batch.targets[step - 1];
}

std::size_t hard_center_frame(std::size_t frames) { return (frames + 1) / 2 - 1; }

void check_batch(const ToyBatch& batch, const ToyConfig& cfg) {
  if (batch.features.rows() != cfg.frames || batch.features.cols() != cfg.input_dim) {
    throw Error(ErrorKind::ShapeError,
                fmt::format("features are {}x{}, config expects {}x{}", batch.features.rows(),
                            batch.features.cols(), cfg.frames, cfg.input_dim));
  }
  if (batch.targets.size() != cfg.decoder_steps()) {
    throw Error(ErrorKind::ShapeError, fmt::format("{} targets for {} decoder steps", batch.targets.size(),
                                                   cfg.decoder_steps()));
  }
  for (std::size_t id : batch.targets) {
    if (id >= cfg.vocab) throw Error(ErrorKind::ShapeError, fmt::format("target id {} >= vocab", id));
  }
}

// out (rows x n) += a (rows x k) * w (k x n), w row-major.
void add_matmul(const Matrix& a, const double* w, std::size_t n, Matrix& out) {
  const std::size_t k = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* dst = out.row(r).data();
    for (std::size_t i = 0; i < k; ++i) {
      const double ai = a(r, i);
      if (ai == 0.0) continue;
      const double* wi = w + i * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += ai * wi[j];
    }
  }
}

// grad_w (k x n) += a^T (k x rows) * d (rows x n).
void add_outer(const Matrix& a, const Matrix& d, double* grad_w) {
  const std::size_t k = a.cols();
  const std::size_t n = d.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const double ai = a(r, i);
      if (ai == 0.0) continue;
      double* gi = grad_w + i * n;
      for (std::size_t j = 0; j < n; ++j) gi[j] += ai * d(r, j);
    }
  }
}

// out (rows x k) += d (rows x n) * w^T, w is k x n row-major.
void add_matmul_transposed(const Matrix& d, const double* w, std::size_t k, Matrix& out) {
  const std::size_t n = d.cols();
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const double* wi = w + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += d(r, j) * wi[j];
      out(r, i) += acc;
    }
  }
}

void log_softmax_inplace(std::span<double> v) {
  const double max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - max);
  const double norm = max + std::log(sum);
  for (double& x : v) x -= norm;
}

void softmax_inplace(std::span<double> v) {
  const double max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) sum += (x = std::exp(x - max));
  for (double& x : v) x /= sum;
}

Matrix row_vector(const double* data, std::size_t n) {
  return Matrix(1, n, std::vector<double>(data, data + n));
}

}  // namespace

std::string_view to_string(EncoderMode mode) noexcept {
  switch (mode) {
    case EncoderMode::Standard: return "standard";
    case EncoderMode::Reversed: return "reversed";
    case EncoderMode::IdentitySelfAttention: return "identity_self_attention";
  }
  return "standard";
}

std::string_view to_string(CrossAttentionMode mode) noexcept {
  return mode == CrossAttentionMode::HardCenter ? "hard_center" : "learned_mlp";
}

EncoderMode parse_encoder_mode(std::string_view text) {
  for (auto m : {EncoderMode::Standard, EncoderMode::Reversed, EncoderMode::IdentitySelfAttention}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown encoder mode '" + std::string(text) + "'");
}

CrossAttentionMode parse_cross_mode(std::string_view text) {
  for (auto m : {CrossAttentionMode::LearnedMlp, CrossAttentionMode::HardCenter}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown cross-attention mode '" + std::string(text) + "'");
}

void ToyConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (frames == 0 || frames > 200) fail("frames must be in 1..200");
  if (labels == 0 || decoder_steps() > 20) fail("labels must be in 1..19 (EOS included: at most 20)");
  if (vocab < 2 || vocab > 64) fail("vocab must be in 2..64");
  if (labels > vocab - 1) fail("labels per utterance cannot exceed vocab - 1");
  if (input_dim == 0 || input_dim > 32) fail("input_dim must be in 1..32");
  if (model_dim == 0 || model_dim > 32) fail("model_dim must be in 1..32");
  if (attention_dim == 0 || attention_dim > 32) fail("attention_dim must be in 1..32");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be positive");
  if (batch_size == 0) fail("batch size must be positive");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be non-negative");
  if (frame_shift_ms <= 0 || encoder_frame_shift_ms <= 0) fail("frame shifts must be positive");
}

std::string token_name(std::size_t vocab_id) {
  if (vocab_id == kEos) return "</s>";
  static constexpr std::string_view kOnset = "bdfgklmnprstvz";
  static constexpr std::string_view kNucleus = "aeiou";
  const std::size_t k = vocab_id - 1;
  std::string name{kOnset[k % kOnset.size()], kNucleus[(k / kOnset.size()) % kNucleus.size()]};
  if (k >= kOnset.size() * kNucleus.size()) name += std::to_string(k / (kOnset.size() * kNucleus.size()));
  return name;
}

LabelSequence ToyBatch::label_sequence() const {
  std::vector<std::size_t> ids(targets.begin(), targets.end() - 1);
  auto seq = LabelSequence::from_tokens(tokens);
  std::vector<bool> flags;
  for (std::size_t i = 0; i < seq.size(); ++i) flags.push_back(seq.continues_word(i));
  return LabelSequence(tokens, std::move(flags), std::move(ids));
}

std::vector<WordSegment> ToyBatch::reference_words(int frame_shift_ms) const {
  AlignmentPath path;
  path.label_segments = segments;
  return path_to_words(path, label_sequence(), frame_shift_ms);
}

Prototypes prototypes(const ToyConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(mix(cfg.seed, kPrototypeStream));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.input_dim)));
  Prototypes p{Matrix(cfg.vocab, cfg.input_dim), Matrix(cfg.vocab + 1, cfg.input_dim)};
  for (double& v : p.content.values()) v = normal(rng);
  for (double& v : p.context.values()) v = normal(rng);
  return p;
}

ToyBatch gen_synthetic(const ToyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t T = cfg.frames;
  const std::size_t L = cfg.labels;
  if (T < 2 * L + 4) {
    throw Error(ErrorKind::InfeasibleLength,
                fmt::format("{} frames cannot hold {} labels with silence (need {})", T, L, 2 * L + 4));
  }
  const Prototypes proto = prototypes(cfg);
  std::mt19937_64 rng(mix(mix(cfg.seed, kUtteranceStream), seed));

  ToyBatch batch;
  std::vector<std::size_t> pool(cfg.vocab - 1);
  std::iota(pool.begin(), pool.end(), 1);
  std::shuffle(pool.begin(), pool.end(), rng);
  batch.targets.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(L));
  batch.targets.push_back(kEos);

  // Minimum lengths: 2 leading silence, 1 trailing, 1 per label. Spare
  // frames go to leading silence with weight 1.5, to every other span with 1.
  std::vector<std::size_t> length(L + 2, 1);
  length[0] = 2;
  std::vector<double> weight(L + 2, 1.0);
  weight[0] = 1.5;
  std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
  for (std::size_t spare = T - (L + 3); spare > 0; --spare) ++length[pick(rng)];
  batch.leading_silence = length[0];
  batch.trailing_silence = length[L + 1];

  std::size_t frame = batch.leading_silence;
  for (std::size_t k = 0; k < L; ++k) {
    batch.segments.push_back({k, frame, frame + length[k + 1] - 1});
    frame += length[k + 1];
  }

  std::uniform_int_distribution<std::size_t> word_len(1, 3);
  std::size_t left_in_word = 0;
  for (std::size_t k = 0; k < L; ++k) {
    if (left_in_word == 0) left_in_word = std::min(word_len(rng), L - k);
    --left_in_word;
    batch.tokens.push_back(token_name(batch.targets[k]) + (left_in_word > 0 ? "@@" : ""));
  }

  batch.features = Matrix(T, cfg.input_dim);
  std::normal_distribution<double> noise(0.0, cfg.noise > 0.0 ? cfg.noise : 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t content = 0;
    std::optional<std::size_t> context;
    if (t >= batch.leading_silence) {
      const auto it = std::find_if(batch.segments.begin(), batch.segments.end(),
                                   [t](const LabelSegment& s) { return t <= s.end_frame; });
      if (it != batch.segments.end()) {
        content = batch.targets[it->label_index];
        context = it->label_index == 0 ? bos_row(cfg) : batch.targets[it->label_index - 1];
      } else {
        context = batch.targets[L - 1];
      }
    }
    auto row = batch.features.row(t);
    for (std::size_t d = 0; d < cfg.input_dim; ++d) {
      row[d] = proto.content(content, d) + (context ? proto.context(*context, d) : 0.0);
      if (cfg.noise > 0.0) row[d] += noise(rng);
    }
  }
  return batch;
}

ToyParams::ToyParams(const ToyConfig& cfg) {
  cfg.validate();
  const std::size_t D = cfg.model_dim;
  const std::size_t A = cfg.attention_dim;
  const std::size_t V = cfg.vocab;
  const auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    const std::size_t offset = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size();
    blocks_.push_back({std::move(name), offset, rows, cols});
  };
  add("enc.in.weight", cfg.input_dim, D);
  add("enc.in.bias", 1, D);
  add("enc.att.query", D, D);
  add("enc.att.key", D, D);
  add("enc.att.value", D, D);
  add("dec.embedding", V + 1, D);
  add("dec.att.query", D, A);
  add("dec.att.key", D, A);
  add("dec.att.bias", 1, A);
  add("dec.att.v", 1, A);
  add("dec.out.context", D, V);
  add("dec.out.prev", D, V);
  add("dec.out.bias", 1, V);
  flat_.assign(blocks_.back().offset + blocks_.back().size(), 0.0);
}

ToyParams ToyParams::initial(const ToyConfig& cfg) {
  ToyParams p(cfg);
  std::mt19937_64 rng(mix(cfg.seed, kInitStream));
  for (const ParamBlock& b : p.blocks_) {
    if (b.name.ends_with(".bias")) continue;
    // Embedding rows are inputs, everything else maps rows -> cols.
    const double fan_in = b.name == "dec.embedding" || b.name == "dec.att.v" ? static_cast<double>(b.cols)
                                                                             : static_cast<double>(b.rows);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(fan_in));
    for (std::size_t i = 0; i < b.size(); ++i) p.flat_[b.offset + i] = normal(rng);
  }
  return p;
}

const ParamBlock& ToyParams::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw Error(ErrorKind::InvalidArgument, "no parameter block '" + std::string(name) + "'");
}

const ParamBlock& ToyParams::block_at(std::size_t flat_index) const {
  for (const auto& b : blocks_) {
    if (flat_index < b.offset + b.size()) return b;
  }
  throw Error(ErrorKind::InvalidArgument, "flat index out of range");
}

ForwardPass forward(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg) {
  check_batch(batch, cfg);
  const std::size_t T = cfg.frames;
  const std::size_t D = cfg.model_dim;
  const std::size_t A = cfg.attention_dim;
  const std::size_t V = cfg.vocab;
  const std::size_t S = cfg.decoder_steps();

  ForwardPass f;
  f.input_proj = Matrix(T, D);
  add_matmul(batch.features, params.data("enc.in.weight"), D, f.input_proj);
  const double* b_in = params.data("enc.in.bias");
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < D; ++j) f.input_proj(t, j) += b_in[j];

  f.value = Matrix(T, D);
  add_matmul(f.input_proj, params.data("enc.att.value"), D, f.value);
  f.self_attention = Matrix(T, T);
  if (cfg.encoder_mode == EncoderMode::IdentitySelfAttention) {
    for (std::size_t t = 0; t < T; ++t) f.self_attention(t, t) = 1.0;
  } else {
    f.query = Matrix(T, D);
    f.key = Matrix(T, D);
    add_matmul(f.input_proj, params.data("enc.att.query"), D, f.query);
    add_matmul(f.input_proj, params.data("enc.att.key"), D, f.key);
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    for (std::size_t i = 0; i < T; ++i) {
      auto row = f.self_attention.row(i);
      for (std::size_t j = 0; j < T; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < D; ++d) dot += f.query(i, d) * f.key(j, d);
        row[j] = dot * scale;
      }
      softmax_inplace(row);
    }
  }

  f.encoder_out = f.input_proj;
  add_matmul(f.self_attention, f.value.values().data(), D, f.encoder_out);
  for (double& v : f.encoder_out.values()) v = std::tanh(v);

  f.decoder_view = f.encoder_out;
  if (cfg.encoder_mode == EncoderMode::Reversed) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(f.encoder_out.row(T - 1 - t).begin(), D, f.decoder_view.row(t).begin());
    }
  }
  const Matrix& h = f.decoder_view;

  // Keys are shared by every decoder step.
  Matrix keys(T, A);
  if (cfg.cross_mode == CrossAttentionMode::LearnedMlp) add_matmul(h, params.data("dec.att.key"), A, keys);

  f.cross_attention = Matrix(S, T);
  f.context = Matrix(S, D);
  f.log_probs = Matrix(S, V);
  f.target_log_probs.resize(S);
  const double* emb = params.data("dec.embedding");
  for (std::size_t s = 0; s < S; ++s) {
    const Matrix q = row_vector(emb + previous_input(cfg, batch, s) * D, D);
    auto alpha = f.cross_attention.row(s);
    if (cfg.cross_mode == CrossAttentionMode::HardCenter) {
      alpha[hard_center_frame(T)] = 1.0;
      f.attention_hidden.emplace_back();
    } else {
      Matrix qa = row_vector(params.data("dec.att.bias"), A);
      add_matmul(q, params.data("dec.att.query"), A, qa);
      Matrix hidden(T, A);
      const double* v = params.data("dec.att.v");
      for (std::size_t t = 0; t < T; ++t) {
        double e = 0.0;
        for (std::size_t j = 0; j < A; ++j) {
          hidden(t, j) = std::tanh(qa(0, j) + keys(t, j));
          e += v[j] * hidden(t, j);
        }
        alpha[t] = e;
      }
      softmax_inplace(alpha);
      f.attention_hidden.push_back(std::move(hidden));
    }
    auto c = f.context.row(s);
    for (std::size_t t = 0; t < T; ++t) {
      if (alpha[t] == 0.0) continue;
      for (std::size_t d = 0; d < D; ++d) c[d] += alpha[t] * h(t, d);
    }
    Matrix logits = row_vector(params.data("dec.out.bias"), V);
    add_matmul(row_vector(c.data(), D), params.data("dec.out.context"), V, logits);
    add_matmul(q, params.data("dec.out.prev"), V, logits);
    log_softmax_inplace(logits.row(0));
    std::copy_n(logits.row(0).begin(), V, f.log_probs.row(s).begin());
    f.target_log_probs[s] = logits(0, batch.targets[s]);
  }
  return f;
}

Gradients backward(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                   const ForwardPass& f, std::span<const double> step_weights) {
  const std::size_t T = cfg.frames;
  const std::size_t D = cfg.model_dim;
  const std::size_t A = cfg.attention_dim;
  const std::size_t V = cfg.vocab;
  const std::size_t S = cfg.decoder_steps();
  if (step_weights.size() != S) throw Error(ErrorKind::ShapeError, "one weight per decoder step required");

  ToyParams grad(cfg);
  const Matrix& h = f.decoder_view;
  Matrix dh(T, D);
  const double* emb = params.data("dec.embedding");
  const double* att_v = params.data("dec.att.v");
  double* g_out_context = grad.data("dec.out.context");
  double* g_out_prev = grad.data("dec.out.prev");
  double* g_out_bias = grad.data("dec.out.bias");
  double* g_att_v = grad.data("dec.att.v");
  double* g_att_key = grad.data("dec.att.key");
  double* g_att_bias = grad.data("dec.att.bias");
  double* g_att_query = grad.data("dec.att.query");
  double* g_embedding = grad.data("dec.embedding");

  for (std::size_t s = 0; s < S; ++s) {
    const double w = step_weights[s];
    if (w == 0.0) continue;
    const std::size_t prev = previous_input(cfg, batch, s);
    const Matrix q = row_vector(emb + prev * D, D);
    const Matrix c = row_vector(f.context.row(s).data(), D);

    Matrix dz(1, V);
    for (std::size_t j = 0; j < V; ++j) dz(0, j) = -w * std::exp(f.log_probs(s, j));
    dz(0, batch.targets[s]) += w;
    add_outer(c, dz, g_out_context);
    add_outer(q, dz, g_out_prev);
    for (std::size_t j = 0; j < V; ++j) g_out_bias[j] += dz(0, j);

    Matrix dc(1, D);
    Matrix dq(1, D);
    add_matmul_transposed(dz, params.data("dec.out.context"), D, dc);
    add_matmul_transposed(dz, params.data("dec.out.prev"), D, dq);

    const auto alpha = f.cross_attention.row(s);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d) dh(t, d) += alpha[t] * dc(0, d);

    if (cfg.cross_mode == CrossAttentionMode::LearnedMlp) {
      std::vector<double> de(T);
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        double da = 0.0;
        for (std::size_t d = 0; d < D; ++d) da += h(t, d) * dc(0, d);
        de[t] = da;
        mean += alpha[t] * da;
      }
      for (std::size_t t = 0; t < T; ++t) de[t] = alpha[t] * (de[t] - mean);

      const Matrix& hidden = f.attention_hidden[s];
      Matrix dpre(T, A);
      Matrix dqa(1, A);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < A; ++j) {
          g_att_v[j] += de[t] * hidden(t, j);
          const double g = de[t] * att_v[j] * (1.0 - hidden(t, j) * hidden(t, j));
          dpre(t, j) = g;
          dqa(0, j) += g;
        }
      }
      add_outer(h, dpre, g_att_key);
      add_matmul_transposed(dpre, params.data("dec.att.key"), D, dh);
      for (std::size_t j = 0; j < A; ++j) g_att_bias[j] += dqa(0, j);
      add_outer(q, dqa, g_att_query);
      add_matmul_transposed(dqa, params.data("dec.att.query"), D, dq);
    }
    double* demb = g_embedding + prev * D;
    for (std::size_t d = 0; d < D; ++d) demb[d] += dq(0, d);
  }

  // Back through the optional time reversal and tanh.
  Matrix dz_enc(T, D);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t src = cfg.encoder_mode == EncoderMode::Reversed ? T - 1 - t : t;
    for (std::size_t d = 0; d < D; ++d) {
      const double y = f.encoder_out(src, d);
      dz_enc(src, d) = dh(t, d) * (1.0 - y * y);
    }
  }

  Matrix dp = dz_enc;
  Matrix dvalue(T, D);
  add_matmul(f.self_attention.transposed(), dz_enc.values().data(), D, dvalue);
  add_outer(f.input_proj, dvalue, grad.data("enc.att.value"));
  add_matmul_transposed(dvalue, params.data("enc.att.value"), D, dp);

  if (cfg.encoder_mode != EncoderMode::IdentitySelfAttention) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    Matrix dscore(T, T);
    for (std::size_t i = 0; i < T; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        double da = 0.0;
        for (std::size_t d = 0; d < D; ++d) da += dz_enc(i, d) * f.value(j, d);
        dscore(i, j) = da;
        mean += f.self_attention(i, j) * da;
      }
      for (std::size_t j = 0; j < T; ++j) dscore(i, j) = f.self_attention(i, j) * (dscore(i, j) - mean) * scale;
    }
    Matrix dquery(T, D);
    Matrix dkey(T, D);
    add_matmul(dscore, f.key.values().data(), D, dquery);
    add_matmul(dscore.transposed(), f.query.values().data(), D, dkey);
    add_outer(f.input_proj, dquery, grad.data("enc.att.query"));
    add_outer(f.input_proj, dkey, grad.data("enc.att.key"));
    add_matmul_transposed(dquery, params.data("enc.att.query"), D, dp);
    add_matmul_transposed(dkey, params.data("enc.att.key"), D, dp);
  }

  add_outer(batch.features, dp, grad.data("enc.in.weight"));
  double* g_in_bias = grad.data("enc.in.bias");
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) g_in_bias[d] += dp(t, d);

  Gradients out{std::move(grad.flat()), Matrix(T, cfg.input_dim), Matrix()};
  add_matmul_transposed(dp, params.data("enc.in.weight"), cfg.input_dim, out.inputs);
  out.encoder_inputs = std::move(dp);
  return out;
}

LossAndGradients loss_and_gradients(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                                    double loss_scale) {
  const ForwardPass f = forward(params, batch, cfg);
  const std::size_t S = cfg.decoder_steps();
  LossAndGradients out;
  const double sum = std::accumulate(f.target_log_probs.begin(), f.target_log_probs.end(), 0.0);
  out.loss = -loss_scale * sum / static_cast<double>(S);
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::NumericalError, "loss is not finite");

  const std::vector<double> weights(S, -loss_scale / static_cast<double>(S));
  out.param_gradients = backward(params, batch, cfg, f, weights).params;

  out.input_gradients = Tensor3(S, cfg.frames, cfg.input_dim);
  out.encoder_input_gradients = Tensor3(S, cfg.frames, cfg.model_dim);
  std::vector<double> one_hot(S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    one_hot[s] = 1.0;
    const Gradients g = backward(params, batch, cfg, f, one_hot);
    one_hot[s] = 0.0;
    for (std::size_t t = 0; t < cfg.frames; ++t) {
      std::copy_n(g.inputs.row(t).begin(), cfg.input_dim, out.input_gradients.fiber(s, t).begin());
      std::copy_n(g.encoder_inputs.row(t).begin(), cfg.model_dim, out.encoder_input_gradients.fiber(s, t).begin());
    }
  }
  return out;
}

double loss_only(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg) {
  const ForwardPass f = forward(params, batch, cfg);
  const double sum = std::accumulate(f.target_log_probs.begin(), f.target_log_probs.end(), 0.0);
  return -sum / static_cast<double>(cfg.decoder_steps());
}

TrainResult train(const ToyConfig& cfg, const std::function<void(std::size_t, double)>& on_step) {
  cfg.validate();
  TrainResult result{ToyParams::initial(cfg), {}};
  auto& theta = result.params.flat();
  const std::size_t S = cfg.decoder_steps();
  const std::vector<double> weights(S, -1.0 / (static_cast<double>(S) * static_cast<double>(cfg.batch_size)));
  std::vector<double> grad(theta.size());
  result.losses.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const ToyBatch batch = gen_synthetic(cfg, step * cfg.batch_size + b);
      const ForwardPass f = forward(result.params, batch, cfg);
      for (double lp : f.target_log_probs) loss -= lp;
      const auto g = backward(result.params, batch, cfg, f, weights).params;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
    loss /= static_cast<double>(S * cfg.batch_size);
    if (!std::isfinite(loss)) throw Error(ErrorKind::NumericalError, fmt::format("loss diverged at step {}", step));
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.learning_rate * grad[i];
    result.losses.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  return result;
}

GradCheckReport finite_diff_check(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0) || !std::isfinite(options.eps)) {
    throw Error(ErrorKind::InvalidEpsilon, "finite-difference step must be positive");
  }
  const LossAndGradients analytic = loss_and_gradients(params, batch, cfg);
  std::mt19937_64 rng(mix(options.sample_seed, kCheckStream));

  GradCheckReport report;
  report.tolerance = options.tolerance;
  double total = 0.0;
  const auto record = [&](double numeric, double exact, const std::string& where) {
    const double rel = std::abs(numeric - exact) / std::max(std::abs(exact), 1e-8);
    total += rel;
    ++report.coordinates;
    if (report.coordinates == 1 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = where;
    }
  };

  const std::size_t n = params.flat().size();
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  if (options.param_samples < n) {
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(options.param_samples);
    std::sort(indices.begin(), indices.end());
  }
  ToyParams probe = params;
  for (std::size_t i : indices) {
    const double saved = probe.flat()[i];
    probe.flat()[i] = saved + options.eps;
    const double up = loss_only(probe, batch, cfg);
    probe.flat()[i] = saved - options.eps;
    const double down = loss_only(probe, batch, cfg);
    probe.flat()[i] = saved;
    const ParamBlock& b = params.block_at(i);
    const std::size_t local = i - b.offset;
    record((up - down) / (2.0 * options.eps), analytic.param_gradients[i],
           fmt::format("{}[{},{}]", b.name, local / b.cols, local % b.cols));
  }

  std::uniform_int_distribution<std::size_t> pick_s(0, cfg.decoder_steps() - 1);
  std::uniform_int_distribution<std::size_t> pick_t(0, cfg.frames - 1);
  std::uniform_int_distribution<std::size_t> pick_d(0, cfg.input_dim - 1);
  ToyBatch moved = batch;
  for (std::size_t k = 0; k < options.input_samples; ++k) {
    const std::size_t s = pick_s(rng);
    const std::size_t t = pick_t(rng);
    const std::size_t d = pick_d(rng);
    const double saved = moved.features(t, d);
    moved.features(t, d) = saved + options.eps;
    const double up = forward(params, moved, cfg).target_log_probs[s];
    moved.features(t, d) = saved - options.eps;
    const double down = forward(params, moved, cfg).target_log_probs[s];
    moved.features(t, d) = saved;
    record((up - down) / (2.0 * options.eps), analytic.input_gradients(s, t, d),
           fmt::format("input[s={},t={},d={}]", s, t, d));
  }

  report.mean_rel_error = report.coordinates ? total / static_cast<double>(report.coordinates) : 0.0;
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

void save_params(const ToyParams& params, const std::filesystem::path& path) {
  store_array(Array({1, params.flat().size()}, params.flat()), path);
}

ToyParams load_params(const ToyConfig& cfg, const std::filesystem::path& path) {
  ToyParams params(cfg);
  const Array a = load_array(path);
  if (a.rank() != 2 || a.shape()[0] != 1 || a.shape()[1] != params.flat().size()) {
    throw Error(ErrorKind::ShapeError, fmt::format("{} does not hold {} parameters for this config",
                                                   path.string(), params.flat().size()));
  }
  params.flat() = a.to_f64();
  return params;
}

void export_artifacts(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                      const std::filesystem::path& out_dir, std::string_view utterance_id) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string());

  const ForwardPass f = forward(params, batch, cfg);
  const LossAndGradients lg = loss_and_gradients(params, batch, cfg);

  store_array(lg.input_gradients.to_array(), out_dir / "input_grads.gak");
  store_array(lg.encoder_input_gradients.to_array(), out_dir / "encoder_grads.gak");
  store_array(f.cross_attention.to_array(), out_dir / "cross_attention.gak");
  store_array(f.self_attention.to_array(), out_dir / "self_attention.gak");
  store_array(batch.features.to_array(), out_dir / "features.gak");
  store_labels(batch.label_sequence(), out_dir / "labels.txt");
  store_alignment(batch.reference_words(cfg.frame_shift_ms), out_dir / "reference.tsv");
  store_alignment(batch.reference_words(cfg.encoder_frame_shift_ms), out_dir / "reference_encoder.tsv");

  const auto layer = [](const char* tag, int shift, std::size_t dim, const char* grads, const char* ref) {
    return nlohmann::ordered_json{{"layer_tag", tag}, {"frame_shift_ms", shift}, {"D", dim},
                                  {"grads", grads},   {"reference", ref}};
  };
  nlohmann::ordered_json manifest;
  manifest["schema"] = 1;
  manifest["utterance"] = utterance_id;
  manifest["S"] = cfg.decoder_steps();
  manifest["T"] = cfg.frames;
  manifest["encoder_mode"] = to_string(cfg.encoder_mode);
  manifest["cross_mode"] = to_string(cfg.cross_mode);
  manifest["seed"] = cfg.seed;
  manifest["loss"] = lg.loss;
  manifest["labels"] = batch.tokens;
  manifest["layers"] = {
      layer("x", cfg.frame_shift_ms, cfg.input_dim, "input_grads.gak", "reference.tsv"),
      layer("enc_in", cfg.encoder_frame_shift_ms, cfg.model_dim, "encoder_grads.gak", "reference_encoder.tsv")};
  manifest["files"] = {{"cross_attention", "cross_attention.gak"},
                       {"self_attention", "self_attention.gak"},
                       {"features", "features.gak"},
                       {"labels", "labels.txt"}};
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace gak::toy

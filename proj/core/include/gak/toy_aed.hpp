#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gak/alignment.hpp"
#include "gak/labels.hpp"
#include "gak/matrix.hpp"

namespace gak::toy {

enum class EncoderMode { Standard, Reversed, IdentitySelfAttention };
enum class CrossAttentionMode { LearnedMlp, HardCenter };

std::string_view to_string(EncoderMode mode) noexcept;
std::string_view to_string(CrossAttentionMode mode) noexcept;
EncoderMode parse_encoder_mode(std::string_view text);
CrossAttentionMode parse_cross_mode(std::string_view text);

/// Vocabulary id 0 is EOS; real labels use 1..vocab-1. The decoder's
/// previous-label embedding has one extra row for the begin-of-sequence
/// input.
inline constexpr std::size_t kEos = 0;

struct ToyConfig {
  std::size_t frames = 48;
  /// Real labels per utterance; the decoder runs labels + 1 steps (EOS last).
  std::size_t labels = 5;
  std::size_t vocab = 10;
  std::size_t input_dim = 16;
  std::size_t model_dim = 16;
  std::size_t attention_dim = 16;
  EncoderMode encoder_mode = EncoderMode::Standard;
  CrossAttentionMode cross_mode = CrossAttentionMode::LearnedMlp;
  /// Seeds the prototype vectors, the initial parameters and the training data.
  std::uint64_t seed = 1;
  double learning_rate = 0.5;
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  /// Std-dev of Gaussian noise added to every feature.
  double noise = 0.0;
  /// Shifts declared for gradients w.r.t. the features x and w.r.t. the
  /// encoder input (the input projection output). There is no downsampling
  /// frontend, so both layers have the same frames; only the metadata differs.
  int frame_shift_ms = 10;
  int encoder_frame_shift_ms = 60;

  std::size_t decoder_steps() const noexcept { return labels + 1; }
  /// Throws InvalidArgument on out-of-range sizes.
  void validate() const;
};

/// One synthetic utterance.
///
/// Frame t carries the prototype of its own label (or silence) plus a
/// context prototype of the label that precedes its segment. Leading
/// silence carries no context; the first label carries the sequence-start
/// context; trailing silence carries the last label's context.
struct ToyBatch {
  Matrix features;                       // T x input_dim
  std::vector<std::size_t> targets;      // labels then kEos
  std::vector<std::string> tokens;       // per real label, "@@" marks word-internal
  std::vector<LabelSegment> segments;    // ground truth, per real label
  std::size_t leading_silence = 0;
  std::size_t trailing_silence = 0;

  LabelSequence label_sequence() const;
  std::vector<WordSegment> reference_words(int frame_shift_ms) const;
};

/// Feature prototypes, fixed by cfg.seed.
struct Prototypes {
  Matrix content;  // vocab x input_dim; row 0 is silence, row k label k
  Matrix context;  // (vocab + 1) x input_dim; row k: label k precedes, row vocab: sequence start
};
Prototypes prototypes(const ToyConfig& cfg);

/// Utterance seed never drawn by train(), whose seeds are step * batch + b.
inline constexpr std::uint64_t kHeldOutUtterance = std::uint64_t{1} << 40;

/// Deterministic in (cfg.seed, seed). Needs frames >= 2 * labels + 4
/// (InfeasibleLength otherwise).
ToyBatch gen_synthetic(const ToyConfig& cfg, std::uint64_t seed);

/// Printable name of a vocabulary id.
std::string token_name(std::size_t vocab_id);

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

/// All trainable weights in one flat buffer with named row-major blocks.
class ToyParams {
 public:
  explicit ToyParams(const ToyConfig& cfg);

  /// Scaled Gaussian initialization from cfg.seed.
  static ToyParams initial(const ToyConfig& cfg);

  std::vector<double>& flat() noexcept { return flat_; }
  const std::vector<double>& flat() const noexcept { return flat_; }
  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
  const ParamBlock& block(std::string_view name) const;
  /// Block that owns a flat index.
  const ParamBlock& block_at(std::size_t flat_index) const;

  double* data(std::string_view name) { return flat_.data() + block(name).offset; }
  const double* data(std::string_view name) const { return flat_.data() + block(name).offset; }

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> flat_;
};

/// Everything the forward pass computed; the backward pass reuses it.
struct ForwardPass {
  Matrix input_proj;        // T x D, x W_in + b
  Matrix query, key, value; // T x D
  Matrix self_attention;    // T x T row-stochastic (identity in that mode)
  Matrix encoder_out;       // T x D, tanh(input_proj + self_attention * value)
  Matrix decoder_view;      // encoder_out, time-reversed in reversed mode
  std::vector<Matrix> attention_hidden;  // per step, T x attention_dim
  Matrix cross_attention;   // S x T
  Matrix context;           // S x D
  Matrix log_probs;         // S x V
  std::vector<double> target_log_probs;  // log p(target_s | ...)
};

ForwardPass forward(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg);

struct Gradients {
  std::vector<double> params;  // same layout as ToyParams::flat()
  Matrix inputs;               // T x input_dim
  Matrix encoder_inputs;       // T x model_dim, w.r.t. input_proj
};

/// Gradients of sum_s weights[s] * log p(target_s | ...).
Gradients backward(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                   const ForwardPass& pass, std::span<const double> step_weights);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<double> param_gradients;
  /// S x T x input_dim; slice s is grad_x log p(target_s | ...), one
  /// backward pass per label position.
  Tensor3 input_gradients;
  /// S x T x model_dim, the same per-label gradients w.r.t. the encoder input.
  Tensor3 encoder_input_gradients;
};

/// loss = -loss_scale * mean_s log p(target_s | ...). Throws NumericalError
/// for a non-finite loss.
LossAndGradients loss_and_gradients(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                                    double loss_scale = 1.0);

double loss_only(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg);

struct TrainResult {
  ToyParams params;
  std::vector<double> losses;  // mean batch loss per step
};

/// Plain gradient descent on freshly generated utterances, cfg.batch_size
/// per step. Single-threaded and bit-reproducible for a given config.
TrainResult train(const ToyConfig& cfg,
                  const std::function<void(std::size_t, double)>& on_step = {});

struct GradCheckReport {
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string worst_coordinate;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Parameter coordinates to sample (all of them when there are fewer).
  std::size_t param_samples = 200;
  /// (label, frame, feature) coordinates of the per-label input gradients.
  std::size_t input_samples = 50;
  std::uint64_t sample_seed = 7;
};

/// Central differences against the analytic gradients. Relative error is
/// |numeric - analytic| / max(|analytic|, 1e-8). Throws InvalidEpsilon for
/// eps <= 0.
GradCheckReport finite_diff_check(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                                  const GradCheckOptions& options = {});

/// Writes input_grads.gak (x, frame_shift_ms), encoder_grads.gak (encoder
/// input, encoder_frame_shift_ms), a reference.tsv for each shift
/// (reference_encoder.tsv for the latter), cross_attention.gak,
/// self_attention.gak, features.gak, labels.txt and manifest.json.
void export_artifacts(const ToyParams& params, const ToyBatch& batch, const ToyConfig& cfg,
                      const std::filesystem::path& out_dir, std::string_view utterance_id = "toy");

void save_params(const ToyParams& params, const std::filesystem::path& path);
ToyParams load_params(const ToyConfig& cfg, const std::filesystem::path& path);

}  // namespace gak::toy

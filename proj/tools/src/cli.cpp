#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "gak/array_io.hpp"
#include "gak/ctc_align.hpp"
#include "gak/error.hpp"
#include "gak/flip.hpp"
#include "gak/grad_align.hpp"
#include "gak/heatmap.hpp"
#include "gak/labels.hpp"
#include "gak/log.hpp"
#include "gak/saliency.hpp"
#include "gak/toy_aed.hpp"
#include "gak/tse.hpp"

namespace gak::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kSchema = 1;

/// Bad flag combinations that CLI11 cannot express; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes JSON to a file, or to `out` when the target is "-".
void emit_json(const ordered_json& j, const std::string& target, std::ostream& out) {
  if (target == "-") {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream file(target, std::ios::trunc);
  if (!file) throw Error(ErrorKind::IoError, "cannot write " + target);
  file << j.dump(2) << '\n';
}

ordered_json path_json(const AlignmentPath& path, const LabelSequence& labels) {
  ordered_json frame_labels = ordered_json::array();
  for (std::size_t t = 0; t < path.num_frames(); ++t) {
    const auto k = path.frame_label(t);
    frame_labels.push_back(k ? ordered_json(labels.token(*k)) : ordered_json(nullptr));
  }
  ordered_json segments = ordered_json::array();
  for (const LabelSegment& s : path.label_segments) {
    segments.push_back({{"label", s.label_index},
                        {"token", labels.token(s.label_index)},
                        {"start_frame", s.start_frame},
                        {"end_frame", s.end_frame}});
  }
  return {{"states", path.states}, {"frame_labels", frame_labels}, {"segments", segments},
          {"score", path.score}};
}

void write_alignment(const std::vector<WordSegment>& words, const std::string& target, std::ostream& out) {
  if (target.empty() || target == "-") {
    out << format_alignment(words);
  } else {
    store_alignment(words, target);
  }
}

// ---------------------------------------------------------------- saliency

struct SaliencyArgs {
  std::string grads, out, layer_tag;
  double floor = kDefaultSaliencyFloor;
  int frame_shift_ms = 0;
  bool allow_any_shift = false;
};

void add_saliency(CLI::App& app, SaliencyArgs& a) {
  app.add_option("--grads", a.grads, "S x T x D gradient tensor (.gak or .npy)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "Output S x T saliency matrix")->required();
  app.add_option("--floor", a.floor, "Value stored where a gradient norm is exactly zero")->capture_default_str();
  app.add_option("--frame-shift-ms", a.frame_shift_ms, "Frame shift of the gradient layer (10 or 60)")->required();
  app.add_flag("--allow-any-shift", a.allow_any_shift, "Accept frame shifts other than 10 and 60 ms");
  app.add_option("--layer-tag", a.layer_tag, "Layer name kept for logging");
}

int run_saliency(const SaliencyArgs& a) {
  if (!a.allow_any_shift && a.frame_shift_ms != 10 && a.frame_shift_ms != 60) {
    throw UsageError(fmt::format("--frame-shift-ms {} needs --allow-any-shift", a.frame_shift_ms));
  }
  GradientTensor g{Tensor3::from_array(load_array(a.grads)), a.frame_shift_ms, a.layer_tag};
  const SaliencyMatrix s = reduce_gradients(g, {a.floor, a.allow_any_shift});
  log().info("saliency {} x {} from {}", s.values.rows(), s.values.cols(), a.grads);
  store_array(s.values.to_array(), a.out);
  return 0;
}

// ------------------------------------------------------------- align grad

struct AlignGradArgs {
  std::string scores, labels, out, path_out;
  int frame_shift_ms = 0;
  std::optional<double> blank_score;
  double floor = kDefaultSaliencyFloor;
  bool no_softmax = false;
  bool dump_config = false;
};

void add_align_grad(CLI::App& app, AlignGradArgs& a) {
  app.add_option("--scores", a.scores, "Saliency matrix, S' or S'+1 (EOS) rows by T frames (required)")
      ->check(CLI::ExistingFile);
  app.add_option("--labels", a.labels, "Label file, one token per line (required)")->check(CLI::ExistingFile);
  app.add_option("--frame-shift-ms", a.frame_shift_ms, "Frame shift of the score matrix")->required();
  app.add_option("--blank-score", a.blank_score,
                 "Fixed per-frame blank score [default: -4 for --frame-shift-ms 60, -6 for 10; "
                 "required for any other shift]");
  app.add_option("--floor", a.floor, "Sentinel that marks zero-gradient cells")->capture_default_str();
  app.add_flag("--no-softmax", a.no_softmax, "Align the scores as given, without the time log-softmax");
  app.add_option("--out", a.out, "Word alignment TSV (stdout when omitted)");
  app.add_option("--path-out", a.path_out, "JSON with states, per-frame labels and score");
  app.add_flag("--dump-config", a.dump_config, "Print the resolved configuration as JSON and exit");
}

double resolve_blank(std::optional<double> given, int frame_shift_ms) {
  if (given) return *given;
  if (frame_shift_ms != 10 && frame_shift_ms != 60) {
    throw UsageError(fmt::format("no default blank score for a {} ms shift; pass --blank-score", frame_shift_ms));
  }
  return default_blank_score(frame_shift_ms);
}

int run_align_grad(const AlignGradArgs& a, std::ostream& out) {
  const double blank = resolve_blank(a.blank_score, a.frame_shift_ms);
  if (a.dump_config) {
    ordered_json cfg{{"schema", kSchema},
                     {"command", "align grad"},
                     {"frame_shift_ms", a.frame_shift_ms},
                     {"blank_score", blank},
                     {"blank_score_source", a.blank_score ? "flag" : "default"},
                     {"softmax", !a.no_softmax},
                     {"floor", a.floor},
                     {"scores", a.scores},
                     {"labels", a.labels}};
    out << cfg.dump(2) << '\n';
    return 0;
  }
  if (a.scores.empty() || a.labels.empty()) throw UsageError("--scores and --labels are required");

  const LabelSequence labels = load_labels(a.labels);
  SaliencyMatrix s{Matrix::from_array(load_array(a.scores)), a.frame_shift_ms, a.floor};
  const AlignmentPath path = align_saliency(s, labels, {blank, a.no_softmax});
  write_alignment(path_to_words(path, labels, a.frame_shift_ms), a.out, out);
  if (!a.path_out.empty()) {
    ordered_json j{{"schema", kSchema}, {"frame_shift_ms", a.frame_shift_ms}, {"blank_score", blank}};
    j.update(path_json(path, labels));
    emit_json(j, a.path_out, out);
  }
  return 0;
}

// -------------------------------------------------------------- align ctc

struct AlignCtcArgs {
  std::string logprobs, labels, out, path_out;
  int frame_shift_ms = 0;
};

void add_align_ctc(CLI::App& app, AlignCtcArgs& a) {
  app.add_option("--logprobs", a.logprobs, "T x V frame log-posteriors, blank in column 0")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--labels", a.labels, "Label file with \"token<TAB>vocab_id\" lines")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--frame-shift-ms", a.frame_shift_ms, "Frame shift of the posteriors")
      ->required()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", a.out, "Word alignment TSV (stdout when omitted)");
  app.add_option("--path-out", a.path_out, "JSON with states, per-frame labels and score");
}

int run_align_ctc(const AlignCtcArgs& a, std::ostream& out) {
  const LabelSequence labels = load_labels(a.labels);
  PosteriorMatrix p{Matrix::from_array(load_array(a.logprobs)), a.frame_shift_ms};
  const AlignmentPath path = ctc_viterbi_align(p, labels);
  write_alignment(path_to_words(path, labels, a.frame_shift_ms), a.out, out);
  if (!a.path_out.empty()) {
    ordered_json j{{"schema", kSchema}, {"frame_shift_ms", a.frame_shift_ms}};
    j.update(path_json(path, labels));
    emit_json(j, a.path_out, out);
  }
  return 0;
}

// -------------------------------------------------------------------- tse

struct TseArgs {
  std::string hyp, ref, json;
  MatchMode match = MatchMode::StrictText;
  std::size_t jobs = 0;
};

void add_tse(CLI::App& app, TseArgs& a) {
  app.add_option("--hyp", a.hyp, "Hypothesis alignment TSV, or a directory of them")
      ->required()
      ->check(CLI::ExistingPath);
  app.add_option("--ref", a.ref, "Reference alignment TSV, or a directory of them")
      ->required()
      ->check(CLI::ExistingPath);
  const std::map<std::string, MatchMode> modes{{"strict-text", MatchMode::StrictText},
                                               {"by-index", MatchMode::ByIndex}};
  app.add_option("--match", a.match, "Word matching: strict-text or by-index [default: strict-text]")
      ->transform(CLI::CheckedTransformer(modes));
  app.add_option("--json", a.json, "Write the JSON report here (\"-\" for stdout)");
  app.add_option("--jobs", a.jobs, "Worker threads in directory mode (0: one per core)")->capture_default_str();
}

ordered_json word_errors_json(const TseReport& r) {
  ordered_json words = ordered_json::array();
  for (const WordError& w : r.per_word) {
    words.push_back({{"word", w.word}, {"start_ms", w.start_ms}, {"end_ms", w.end_ms}, {"center_ms", w.center_ms}});
  }
  return words;
}

int run_tse(const TseArgs& a, std::ostream& out) {
  const bool hyp_dir = fs::is_directory(a.hyp);
  if (hyp_dir != fs::is_directory(a.ref)) throw UsageError("--hyp and --ref must both be files or both directories");
  const char* mode = a.match == MatchMode::StrictText ? "strict-text" : "by-index";

  ordered_json j{{"schema", kSchema}, {"match", mode}};
  double boundary = 0.0, center = 0.0;
  std::size_t words = 0;
  if (hyp_dir) {
    const CorpusTseReport c = compute_corpus_tse(a.hyp, a.ref, a.match, a.jobs);
    boundary = c.boundary_tse_ms;
    center = c.center_tse_ms;
    words = c.n_words;
    j["boundary_tse_ms"] = boundary;
    j["center_tse_ms"] = center;
    j["n_words"] = words;
    j["n_utterances"] = c.utterances.size();
    ordered_json utts = ordered_json::array();
    for (std::size_t i = 0; i < c.utterances.size(); ++i) {
      const TseReport& r = c.reports[i];
      utts.push_back({{"utterance", c.utterances[i]},
                      {"boundary_tse_ms", r.boundary_tse_ms},
                      {"center_tse_ms", r.center_tse_ms},
                      {"n_words", r.n_words}});
    }
    j["utterances"] = utts;
  } else {
    const TseReport r = compute_tse(load_alignment(a.hyp), load_alignment(a.ref), a.match);
    boundary = r.boundary_tse_ms;
    center = r.center_tse_ms;
    words = r.n_words;
    j["boundary_tse_ms"] = boundary;
    j["center_tse_ms"] = center;
    j["n_words"] = words;
    j["per_word"] = word_errors_json(r);
  }
  if (!a.json.empty()) emit_json(j, a.json, out);
  if (a.json != "-") {
    out << fmt::format("boundary TSE {:.2f} ms, center TSE {:.2f} ms over {} words\n", boundary, center, words);
  }
  return 0;
}

// ------------------------------------------------------------------- flip

struct FlipArgs {
  std::string att, json, heatmap;
  AttentionKind kind = AttentionKind::Cross;
  double threshold = kDefaultTauThreshold;
  double band_frac = kDefaultBandFraction;
  bool energies = false;
  ColorMap color = ColorMap::Viridis;
  double clip_percentile = 0.0;
};

void add_flip(CLI::App& app, FlipArgs& a) {
  app.add_option("--att", a.att, "Attention matrix: S x T cross or T x T self")->required()->check(CLI::ExistingFile);
  const std::map<std::string, AttentionKind> kinds{{"cross", AttentionKind::Cross}, {"self", AttentionKind::Self}};
  app.add_option("--kind", a.kind, "cross or self")->required()->transform(CLI::CheckedTransformer(kinds));
  app.add_option("--threshold", a.threshold, "|tau| needed for a monotonic verdict (cross)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--band-frac", a.band_frac, "Diagonal band width as a fraction of T (self)")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_flag("--energies", a.energies, "Self-attention file holds pre-softmax energies");
  app.add_option("--json", a.json, "Write the JSON report here (\"-\" for stdout)");
  app.add_option("--heatmap", a.heatmap, "Render the matrix as SVG");
  const std::map<std::string, ColorMap> maps{{"viridis", ColorMap::Viridis}, {"grayscale", ColorMap::Grayscale}};
  app.add_option("--colormap", a.color, "viridis or grayscale [default: viridis]")
      ->transform(CLI::CheckedTransformer(maps));
  app.add_option("--clip-percentile", a.clip_percentile, "Heatmap values below this percentile are clipped")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 100.0));
}

int run_flip(const FlipArgs& a, std::ostream& out) {
  if (a.energies && a.kind == AttentionKind::Cross) throw UsageError("--energies only applies to --kind self");
  const Matrix m = Matrix::from_array(load_array(a.att));
  ordered_json j{{"schema", kSchema}, {"kind", a.kind == AttentionKind::Cross ? "cross" : "self"},
                 {"rows", m.rows()}, {"cols", m.cols()}};
  std::string summary;
  if (a.kind == AttentionKind::Cross) {
    const MonotonicityReport r = monotonicity(m, a.threshold);
    j["verdict"] = to_string(r.verdict);
    j["kendall_tau"] = r.kendall_tau;
    j["threshold"] = r.threshold;
    j["argmax_frames"] = r.argmax_frames;
    j["ambiguous_rows"] = r.ambiguous_rows;
    j["max_row_sum_error"] = r.max_row_sum_error;
    summary = fmt::format("{} (tau {:.4f})", to_string(r.verdict), r.kendall_tau);
  } else {
    if (m.rows() != m.cols()) {
      throw Error(ErrorKind::ShapeError, fmt::format("self-attention must be square, got {} x {}", m.rows(), m.cols()));
    }
    const ReversalReport r =
        reversal_report(m, a.band_frac, a.energies ? SelfAttentionValues::Energies : SelfAttentionValues::Weights);
    j["reversal_score"] = r.score;
    j["diagonal_mass"] = r.diagonal_mass;
    j["anti_diagonal_mass"] = r.anti_diagonal_mass;
    j["band"] = r.band;
    summary = fmt::format("reversal score {:.4f} (band {})", r.score, r.band);
  }
  if (!a.heatmap.empty()) render_heatmap(m, a.heatmap, {a.color, a.clip_percentile});
  if (!a.json.empty()) emit_json(j, a.json, out);
  if (a.json != "-") out << summary << '\n';
  return 0;
}

// -------------------------------------------------------------------- toy

struct ToyArgs {
  toy::ToyConfig cfg;
  std::string out_dir, params, json;
  std::string encoder_mode = "standard";
  std::string cross_mode = "learned_mlp";
  std::uint64_t utterance = toy::kHeldOutUtterance;
  toy::GradCheckOptions check;
};

void add_toy_common(CLI::App& app, ToyArgs& a) {
  auto& c = a.cfg;
  app.add_option("--seed", c.seed, "Seeds prototypes, initialization and training data")->capture_default_str();
  app.add_option("--mode", a.encoder_mode, "Encoder mode")
      ->capture_default_str()
      ->check(CLI::IsMember({"standard", "reversed", "identity_self_attention"}));
  app.add_option("--cross-mode", a.cross_mode, "Cross-attention mode")
      ->capture_default_str()
      ->check(CLI::IsMember({"learned_mlp", "hard_center"}));
  app.add_option("--frames", c.frames, "Frames per utterance")->capture_default_str();
  app.add_option("--labels", c.labels, "Real labels per utterance")->capture_default_str();
  app.add_option("--vocab", c.vocab, "Vocabulary size including EOS")->capture_default_str();
  app.add_option("--noise", c.noise, "Feature noise std-dev")->capture_default_str();
  app.add_option("--frame-shift-ms", c.frame_shift_ms, "Shift attached to exported frames")->capture_default_str();
  app.add_option("--utterance", a.utterance, "Utterance seed for gen, gradcheck and export")
      ->capture_default_str();
}

void add_toy_training(CLI::App& app, ToyArgs& a) {
  app.add_option("--steps", a.cfg.steps, "Gradient descent steps")->capture_default_str();
  app.add_option("--lr", a.cfg.learning_rate, "Learning rate")->capture_default_str();
  app.add_option("--batch-size", a.cfg.batch_size, "Utterances per step")->capture_default_str();
}

void require_out_dir(const ToyArgs& a) {
  if (a.out_dir.empty()) throw UsageError("--out-dir is required");
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + a.out_dir);
}

int run_toy_gen(const ToyArgs& a, std::ostream& out) {
  require_out_dir(a);
  const fs::path dir = a.out_dir;
  const toy::ToyBatch b = toy::gen_synthetic(a.cfg, a.utterance);
  store_array(b.features.to_array(), dir / "features.gak");
  store_labels(b.label_sequence(), dir / "labels.txt");
  store_alignment(b.reference_words(a.cfg.frame_shift_ms), dir / "reference.tsv");
  out << fmt::format("{} frames, {} labels, silence {}+{} -> {}\n", b.features.rows(), b.tokens.size(),
                     b.leading_silence, b.trailing_silence, a.out_dir);
  return 0;
}

toy::TrainResult train_logged(const toy::ToyConfig& cfg) {
  const std::size_t every = std::max<std::size_t>(1, cfg.steps / 10);
  return toy::train(cfg, [&](std::size_t step, double loss) {
    if (step % every == 0 || step + 1 == cfg.steps) log().info("step {} loss {:.6f}", step, loss);
  });
}

int run_toy_train(const ToyArgs& a, std::ostream& out) {
  require_out_dir(a);
  const fs::path dir = a.out_dir;
  const toy::TrainResult r = train_logged(a.cfg);
  toy::save_params(r.params, dir / "params.gak");
  ordered_json j{{"schema", kSchema},
                 {"seed", a.cfg.seed},
                 {"encoder_mode", toy::to_string(a.cfg.encoder_mode)},
                 {"cross_mode", toy::to_string(a.cfg.cross_mode)},
                 {"steps", a.cfg.steps},
                 {"learning_rate", a.cfg.learning_rate},
                 {"batch_size", a.cfg.batch_size},
                 {"losses", r.losses}};
  emit_json(j, (dir / "train.json").string(), out);
  out << fmt::format("loss {:.6f} -> {:.6f} after {} steps\n", r.losses.empty() ? 0.0 : r.losses.front(),
                     r.losses.empty() ? 0.0 : r.losses.back(), r.losses.size());
  return 0;
}

toy::ToyParams params_for(const ToyArgs& a) {
  return a.params.empty() ? toy::ToyParams::initial(a.cfg) : toy::load_params(a.cfg, a.params);
}

int run_toy_gradcheck(const ToyArgs& a, std::ostream& out, std::ostream& err) {
  const toy::ToyBatch b = toy::gen_synthetic(a.cfg, a.utterance);
  const toy::GradCheckReport r = toy::finite_diff_check(params_for(a), b, a.cfg, a.check);
  ordered_json j{{"schema", kSchema},
                 {"encoder_mode", toy::to_string(a.cfg.encoder_mode)},
                 {"cross_mode", toy::to_string(a.cfg.cross_mode)},
                 {"eps", a.check.eps},
                 {"tolerance", r.tolerance},
                 {"coordinates", r.coordinates},
                 {"max_rel_error", r.max_rel_error},
                 {"mean_rel_error", r.mean_rel_error},
                 {"worst_coordinate", r.worst_coordinate},
                 {"passed", r.passed}};
  if (!a.json.empty()) emit_json(j, a.json, out);
  if (a.json != "-") {
    out << fmt::format("{} coordinates, max relative error {:.3e} ({}) -> {}\n", r.coordinates, r.max_rel_error,
                       r.worst_coordinate, r.passed ? "PASS" : "FAIL");
  }
  if (!r.passed) {
    err << fmt::format("error: gradient check failed: {:.3e} > {:.3e} at {}\n", r.max_rel_error, r.tolerance,
                       r.worst_coordinate);
    return 1;
  }
  return 0;
}

int run_toy_export(const ToyArgs& a, std::ostream& out) {
  require_out_dir(a);
  const toy::ToyParams params = a.params.empty() ? train_logged(a.cfg).params : toy::load_params(a.cfg, a.params);
  const toy::ToyBatch b = toy::gen_synthetic(a.cfg, a.utterance);
  toy::export_artifacts(params, b, a.cfg, a.out_dir, fmt::format("toy-{}-{}", a.cfg.seed, a.utterance));
  out << fmt::format("exported {} -> {}\n", toy::to_string(a.cfg.encoder_mode), a.out_dir);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-based forced alignment, time-stamp error and attention flip diagnostics", "gak"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gak 0.1.0");
  std::string log_level;
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off (overrides GAK_LOG)")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SaliencyArgs sal;
  auto* sal_cmd = app.add_subcommand("saliency", "Log L2 norm of per-label gradients");
  add_saliency(*sal_cmd, sal);

  auto* align_cmd = app.add_subcommand("align", "Forced alignment");
  align_cmd->require_subcommand(1);
  AlignGradArgs grad;
  auto* grad_cmd = align_cmd->add_subcommand("grad", "Align a saliency matrix on the gradient topology");
  add_align_grad(*grad_cmd, grad);
  AlignCtcArgs ctc;
  auto* ctc_cmd = align_cmd->add_subcommand("ctc", "CTC Viterbi alignment of frame posteriors");
  add_align_ctc(*ctc_cmd, ctc);

  TseArgs tse;
  auto* tse_cmd = app.add_subcommand("tse", "Time-stamp error against a reference alignment");
  add_tse(*tse_cmd, tse);

  FlipArgs flip;
  auto* flip_cmd = app.add_subcommand("flip", "Monotonicity and time-reversal diagnostics for attention");
  add_flip(*flip_cmd, flip);

  auto* toy_cmd = app.add_subcommand("toy", "Synthetic encoder-decoder");
  toy_cmd->require_subcommand(1);
  ToyArgs toy_args;
  auto* gen_cmd = toy_cmd->add_subcommand("gen", "Write one synthetic utterance");
  add_toy_common(*gen_cmd, toy_args);
  gen_cmd->add_option("--out-dir", toy_args.out_dir, "Output directory (required)");
  auto* train_cmd = toy_cmd->add_subcommand("train", "Train and save params.gak and train.json");
  add_toy_common(*train_cmd, toy_args);
  add_toy_training(*train_cmd, toy_args);
  train_cmd->add_option("--out-dir", toy_args.out_dir, "Output directory (required)");
  auto* check_cmd = toy_cmd->add_subcommand("gradcheck", "Finite-difference check of the backward pass");
  add_toy_common(*check_cmd, toy_args);
  check_cmd->add_option("--params", toy_args.params, "Parameters to check (fresh initialization when omitted)")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--eps", toy_args.check.eps, "Central-difference step")->capture_default_str();
  check_cmd->add_option("--tol", toy_args.check.tolerance, "Relative error tolerance")->capture_default_str();
  check_cmd->add_option("--param-samples", toy_args.check.param_samples, "Sampled parameter coordinates")
      ->capture_default_str();
  check_cmd->add_option("--input-samples", toy_args.check.input_samples, "Sampled input-gradient coordinates")
      ->capture_default_str();
  check_cmd->add_option("--json", toy_args.json, "Write the JSON report here (\"-\" for stdout)");
  auto* export_cmd = toy_cmd->add_subcommand("export", "Export gradients and attention for one utterance");
  add_toy_common(*export_cmd, toy_args);
  add_toy_training(*export_cmd, toy_args);
  auto* params_opt =
      export_cmd->add_option("--params", toy_args.params, "Trained parameters (trains from scratch when omitted)")
          ->check(CLI::ExistingFile);
  for (const char* flag : {"--steps", "--lr", "--batch-size"}) params_opt->excludes(export_cmd->get_option(flag));
  export_cmd->add_option("--out-dir", toy_args.out_dir, "Output directory (required)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }
  if (!log_level.empty()) log().set_level(spdlog::level::from_str(log_level));
  toy_args.cfg.encoder_mode = toy::parse_encoder_mode(toy_args.encoder_mode);
  toy_args.cfg.cross_mode = toy::parse_cross_mode(toy_args.cross_mode);

  try {
    if (sal_cmd->parsed()) return run_saliency(sal);
    if (grad_cmd->parsed()) return run_align_grad(grad, out);
    if (ctc_cmd->parsed()) return run_align_ctc(ctc, out);
    if (tse_cmd->parsed()) return run_tse(tse, out);
    if (flip_cmd->parsed()) return run_flip(flip, out);
    if (gen_cmd->parsed()) return run_toy_gen(toy_args, out);
    if (train_cmd->parsed()) return run_toy_train(toy_args, out);
    if (check_cmd->parsed()) return run_toy_gradcheck(toy_args, out, err);
    if (export_cmd->parsed()) return run_toy_export(toy_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gak::cli

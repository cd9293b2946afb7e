#include "gak/flip.hpp"

#include <algorithm>
#include <cmath>

#include "gak/error.hpp"
#include "gak/log.hpp"

namespace gak {

std::string_view to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::ForwardMonotonic: return "FORWARD_MONOTONIC";
    case Verdict::TimeReversed: return "TIME_REVERSED";
    case Verdict::NonMonotonic: return "NON_MONOTONIC";
  }
  return "NON_MONOTONIC";
}

double kendall_tau_a(std::span<const std::size_t> values) {
  const std::size_t n = values.size();
  if (n < 2) throw Error(ErrorKind::ShapeError, "Kendall tau needs at least two values");
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (values[j] > values[i]) ++concordant;
      else if (values[j] < values[i]) ++discordant;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(concordant - discordant) / pairs;
}

MonotonicityReport monotonicity(const Matrix& cross_attention, double threshold) {
  const Matrix& a = cross_attention;
  if (a.rows() < 2 || a.cols() == 0) {
    throw Error(ErrorKind::ShapeError, "cross-attention needs at least 2 rows");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1]");
  }
  MonotonicityReport report;
  report.threshold = threshold;
  for (std::size_t s = 0; s < a.rows(); ++s) {
    const auto row = a.row(s);
    double sum = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteInput, "row " + std::to_string(s));
      sum += v;
    }
    report.max_row_sum_error = std::max(report.max_row_sum_error, std::abs(sum - 1.0));
    const auto best = std::max_element(row.begin(), row.end());
    report.argmax_frames.push_back(static_cast<std::size_t>(best - row.begin()));
    const auto ties = std::count(row.begin(), row.end(), *best);
    if (ties == static_cast<std::ptrdiff_t>(row.size()) && row.size() > 1) {
      report.ambiguous_rows.push_back(s);
    } else if (ties > 1) {
      log().debug("row {} has {} tied maxima, first frame taken", s, ties);
    }
  }
  if (report.max_row_sum_error > 1e-6) {
    log().warn("cross-attention rows do not sum to 1 (max error {:.3g})", report.max_row_sum_error);
  }
  if (!report.ambiguous_rows.empty()) {
    log().warn("ArgmaxAmbiguous: {} row(s) with all-equal values, first frame taken",
               report.ambiguous_rows.size());
  }
  report.kendall_tau = kendall_tau_a(report.argmax_frames);
  if (report.kendall_tau >= threshold) {
    report.verdict = Verdict::ForwardMonotonic;
  } else if (report.kendall_tau <= -threshold) {
    report.verdict = Verdict::TimeReversed;
  } else {
    report.verdict = Verdict::NonMonotonic;
  }
  return report;
}

std::size_t band_width(std::size_t frames, double band_frac) {
  const double b = std::ceil(band_frac * static_cast<double>(frames));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, b)));
}

ReversalReport reversal_report(const Matrix& self_attention, double band_frac, SelfAttentionValues values) {
  const std::size_t T = self_attention.rows();
  if (T != self_attention.cols()) {
    throw Error(ErrorKind::ShapeError, "self-attention must be square, got " + std::to_string(T) +
                                           "x" + std::to_string(self_attention.cols()));
  }
  if (T < 2) throw Error(ErrorKind::ShapeError, "self-attention needs T >= 2");
  if (!(band_frac >= 0.0 && band_frac <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "band fraction must lie in [0, 1]");
  }

  Matrix w = self_attention;
  for (double v : w.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteInput, "self-attention holds NaN or Inf");
  }
  if (values == SelfAttentionValues::Energies) {
    for (std::size_t i = 0; i < T; ++i) {
      auto row = w.row(i);
      const double max = *std::max_element(row.begin(), row.end());
      double sum = 0.0;
      for (double& v : row) sum += (v = std::exp(v - max));
      for (double& v : row) v /= sum;
    }
  }
  double total = 0.0;
  for (double v : w.values()) {
    if (v < 0.0) throw Error(ErrorKind::InvalidArgument, "attention weights must be non-negative");
    total += v;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "attention weights sum to zero");

  ReversalReport report;
  report.band = band_width(T, band_frac);
  const auto b = static_cast<long long>(report.band);
  const auto last = static_cast<long long>(T) - 1;
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = 0; j < T; ++j) {
      const auto ii = static_cast<long long>(i);
      const auto jj = static_cast<long long>(j);
      if (std::llabs(ii - jj) < b) report.diagonal_mass += w(i, j);
      if (std::llabs(ii + jj - last) < b) report.anti_diagonal_mass += w(i, j);
    }
  }
  report.diagonal_mass /= total;
  report.anti_diagonal_mass /= total;
  report.score = report.anti_diagonal_mass - report.diagonal_mass;
  return report;
}

Matrix reverse_columns(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, m.cols() - 1 - c) = m(r, c);
  return out;
}

}  // namespace gak

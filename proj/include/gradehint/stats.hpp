#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gradehint {

enum class MwuMethod { exact, normal_approx };

std::string_view to_string(MwuMethod m) noexcept;

struct StatTestResult {
  /// U of the first sample: #{a > b} + 0.5 * #{a == b}. Reported as W.
  double statistic = 0;
  double p_value = 1;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  MwuMethod method = MwuMethod::exact;
};

struct MwuOptions {
  /// Exact permutation p-values are used when n_a + n_b is at most this.
  std::size_t exact_max_total = 12;
};

/// Two-sided Mann-Whitney U test. Exact enumeration of all labelings of the
/// pooled sample (ties included) for small samples, otherwise the normal
/// approximation with tie-corrected variance and a 0.5 continuity
/// correction. Throws Error(empty_sample).
StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, const MwuOptions& options = {});

struct LabeledP {
  std::string label;
  double p = 0;
};

struct BHRow {
  std::string label;
  double p = 0;
  std::size_t rank = 0;
  double threshold = 0;
  bool rejected = false;
};

struct BHDecision {
  double q = 0.05;
  /// Ascending by p; ties keep label order.
  std::vector<BHRow> ranked;

  std::size_t rejections() const;
};

/// Benjamini-Hochberg step-up procedure. Thresholds rank/m*q are rounded to
/// 15 significant digits so decimal levels compare exactly. Throws
/// Error(invalid_p) or Error(invalid_q).
BHDecision benjamini_hochberg(std::span<const LabeledP> labeled, double q);

double median(std::vector<double> values);
double mean(std::span<const double> values);

/// Ordinary least squares for y = b0 + b1*x. Throws Error(degenerate_design)
/// when every x is equal.
struct LineFit {
  double intercept = 0;
  double slope = 0;
  double sse = 0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace gradehint

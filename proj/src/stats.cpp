#include "gradehint/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

std::string_view to_string(MwuMethod m) noexcept { return m == MwuMethod::exact ? "exact" : "normal_approx"; }

namespace {

/// Doubled midranks of the pooled sample (so every rank is an integer).
std::vector<long long> doubled_midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<long long> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // Ranks i+1..j+1 share (i+1 + j+1)/2; doubled gives i+j+2.
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = static_cast<long long>(i + j + 2);
    i = j + 1;
  }
  return ranks;
}

double exact_p(const std::vector<long long>& ranks2, std::size_t n_a, long long observed_dev) {
  // Enumerate every subset of size n_a as the first sample.
  const std::size_t n = ranks2.size();
  const long long na = static_cast<long long>(n_a);
  const long long nb = static_cast<long long>(n - n_a);
  const long long offset = na * (na + 1);  // doubled n_a(n_a+1)/2
  std::vector<std::size_t> idx(n_a);
  std::iota(idx.begin(), idx.end(), 0);
  std::uint64_t total = 0, extreme = 0;
  for (;;) {
    long long sum = 0;
    for (auto i : idx) sum += ranks2[i];
    long long u2 = sum - offset;  // 2U
    if (std::llabs(u2 - na * nb) >= observed_dev) ++extreme;
    ++total;
    // next combination
    std::size_t k = n_a;
    while (k > 0 && idx[k - 1] == n - n_a + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < n_a; ++j) idx[j] = idx[j - 1] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, const MwuOptions& options) {
  if (a.empty() || b.empty()) fail(Errc::empty_sample, "Mann-Whitney U needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (std::isnan(v)) fail(Errc::invalid_argument, "samples must not contain NaN");

  auto ranks2 = doubled_midranks(pooled);
  const long long na = static_cast<long long>(a.size());
  const long long nb = static_cast<long long>(b.size());
  long long rank_sum2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum2 += ranks2[i];
  const long long u2 = rank_sum2 - na * (na + 1);

  StatTestResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.statistic = static_cast<double>(u2) / 2.0;

  if (pooled.size() <= options.exact_max_total) {
    r.method = MwuMethod::exact;
    r.p_value = exact_p(ranks2, a.size(), std::llabs(u2 - na * nb));
    return r;
  }

  r.method = MwuMethod::normal_approx;
  const double n = static_cast<double>(na + nb);
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mu = static_cast<double>(na * nb) / 2.0;
  const double var = static_cast<double>(na * nb) / 12.0 * ((n + 1) - tie_term / (n * (n - 1)));
  if (var <= 0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.statistic - mu) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

std::size_t BHDecision::rejections() const {
  return static_cast<std::size_t>(std::count_if(ranked.begin(), ranked.end(), [](const auto& r) { return r.rejected; }));
}

BHDecision benjamini_hochberg(std::span<const LabeledP> labeled, double q) {
  if (!(q > 0 && q < 1)) fail(Errc::invalid_q, fmt::format("q must lie in (0,1), got {}", q));
  for (const auto& lp : labeled)
    if (!(lp.p >= 0 && lp.p <= 1)) fail(Errc::invalid_p, fmt::format("p for '{}' must lie in [0,1], got {}", lp.label, lp.p));

  std::vector<LabeledP> sorted(labeled.begin(), labeled.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.label < y.label; });
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.p < y.p; });

  BHDecision d;
  d.q = q;
  const double m = static_cast<double>(sorted.size());
  std::size_t cutoff = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double raw = static_cast<double>(i + 1) * q / m;
    double threshold = std::stod(fmt::format("{:.15g}", raw));
    d.ranked.push_back(BHRow{sorted[i].label, sorted[i].p, i + 1, threshold, false});
    if (sorted[i].p <= threshold) cutoff = i + 1;
  }
  for (std::size_t i = 0; i < cutoff; ++i) d.ranked[i].rejected = true;
  return d;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(Errc::empty_sample, "median of an empty sample");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(Errc::empty_sample, "mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(Errc::degenerate_design, "line fit needs at least two paired points");
  double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) fail(Errc::degenerate_design, "all x values are equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    f.sse += e * e;
  }
  return f;
}

}  // namespace gradehint

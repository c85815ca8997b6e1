#include <doctest.h>

#include <array>
#include <cmath>

#include "gradehint/analytics.hpp"
#include "gradehint/error.hpp"
#include "support.hpp"

using namespace gradehint;
using testing::LogBuilder;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::invalid_argument;
}

AttemptCurve curve_from(const std::vector<double>& ys, Condition g = Condition::control) {
  AttemptCurve c;
  c.group = g;
  for (std::size_t i = 0; i < ys.size(); ++i) c.points.push_back({int(i + 1), 10, 5, ys[i]});
  return c;
}

/// Solves (X'X) b = X'y for the four-column design by Gaussian elimination.
std::array<double, 4> normal_equations(const std::vector<double>& ya, const std::vector<double>& yb) {
  std::array<std::array<double, 5>, 4> m{};
  auto add = [&](double g, double k, double y) {
    std::array<double, 4> row{1, g, k, g * k};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) m[i][j] += row[i] * row[j];
      m[i][4] += row[i] * y;
    }
  };
  for (std::size_t i = 0; i < ya.size(); ++i) add(0, double(i + 1), ya[i]);
  for (std::size_t i = 0; i < yb.size(); ++i) add(1, double(i + 1), yb[i]);
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      double f = m[r][c] / m[c][c];
      for (int j = c; j < 5; ++j) m[r][j] -= f * m[c][j];
    }
  }
  return {m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]};
}

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("curve: everyone passes first time") {
  LogBuilder b;
  for (auto p : {"p1", "p2", "p3"}) {
    b.enroll(p, Condition::control);
    b.pass(p, "t1");
    b.pass(p, "t2");
  }
  auto events = b.events();
  auto c = cumulative_success_curve(events, TaskFilter::all_tasks(), Condition::control);
  REQUIRE(c.points.size() == 15);
  for (const auto& p : c.points) CHECK(p.pct == 100.0);
}

TEST_CASE("curve: hand-counted four-submission fixture") {
  LogBuilder b;
  b.enroll("s", Condition::experimental);
  b.enroll("f", Condition::experimental);
  b.pass("s", "t1");
  b.fail_test("f", "t1");
  b.fail_test("f", "t1");
  b.pass("f", "t1");
  auto events = b.events();
  auto c = cumulative_success_curve(events, TaskFilter::all_tasks(), Condition::experimental);
  CHECK(c.points[0].pct == 50.0);
  CHECK(c.points[1].pct == 33.3);
  CHECK(c.points[2].pct == 50.0);
  CHECK(c.points[2].n_submissions == 4);
  CHECK(c.points[14].pct == 50.0);
}

TEST_CASE("curve: one-decimal rounding") {
  CHECK(one_decimal_pct(29, 60) == 48.3);
  CHECK(one_decimal_pct(1, 3) == 33.3);
  CHECK(one_decimal_pct(2, 3) == 66.7);
  CHECK(one_decimal_pct(1, 8) == 12.5);
  CHECK(one_decimal_pct(1, 16) == 6.3);   // 6.25 rounds half up
  CHECK(one_decimal_pct(0, 5) == 0.0);
  CHECK(code_of([] { one_decimal_pct(1, 0); }) == Errc::no_data);
}

TEST_CASE("curve: filters, groups and consent") {
  LogBuilder b;
  b.enroll("c1", Condition::control);
  b.enroll("x1", Condition::experimental);
  b.enroll("nc", Condition::control, 0, false);
  b.pass("c1", "hinted", true);
  b.fail_test("c1", "plain", false);
  b.pass("x1", "plain", false);
  b.pass("nc", "hinted", true);
  auto events = b.events();
  auto all = cumulative_success_curve(events, TaskFilter::all_tasks(), Condition::control);
  CHECK(all.points[0].n_submissions == 2);
  CHECK(all.points[0].pct == 50.0);
  auto hinted = cumulative_success_curve(events, TaskFilter::hint_tasks(), Condition::control);
  CHECK(hinted.points[0].n_submissions == 1);
  CHECK(hinted.filter == "hint_enabled");
  auto only = cumulative_success_curve(events, TaskFilter::only({"plain"}), Condition::experimental);
  CHECK(only.points[0].pct == 100.0);
  CHECK(only.filter == "ids:plain");
  CHECK(code_of([&] { cumulative_success_curve(events, TaskFilter::hint_tasks(), Condition::experimental); }) ==
        Errc::no_data);
}

TEST_CASE("time to solve: subtraction, cap and solver threshold") {
  LogBuilder b;
  std::vector<std::string> ctrl{"c1", "c2", "c3"}, expt{"x1", "x2", "x3"};
  for (auto& p : ctrl) b.enroll(p, Condition::control);
  for (auto& p : expt) b.enroll(p, Condition::experimental);

  // c1 on t1: 10:00:00 first, 10:05:30 success.
  b.clock().set(testing::at("2023-03-01T10:00:00Z"));
  b.fail_test("c1", "t1");
  b.clock().set(testing::at("2023-03-01T10:05:30Z"));
  b.pass("c1", "t1");
  // c2 on t1: 9000 s.
  b.clock().set(testing::at("2023-03-01T11:00:00Z"));
  b.fail_test("c2", "t1");
  b.advance(9000);
  b.pass("c2", "t1");
  b.pass("c3", "t1");
  for (auto& p : expt) b.pass(p, "t1");
  // t2: 2 control solvers and 3 experimental.
  b.pass("c1", "t2");
  b.pass("c2", "t2");
  b.fail_test("c3", "t2");
  for (auto& p : expt) b.pass(p, "t2");

  auto events = b.events();
  auto d = time_to_solve(events, 7200, 3);
  REQUIRE(d.size() == 6);
  for (const auto& s : d) CHECK(s.assignment == "t1");
  CHECK(d[0].participant == "c1");
  CHECK(d[0].seconds == 330);
  CHECK_FALSE(d[0].capped);
  CHECK(d[1].participant == "c2");
  CHECK(d[1].seconds == 7200);
  CHECK(d[1].capped);
  for (const auto& s : d) {
    CHECK(s.seconds >= 0);
    CHECK(s.seconds <= 7200);
  }
  // With a threshold of two, t2 comes back.
  CHECK(time_to_solve(events, 7200, 2).size() == 11);
}

TEST_CASE("time to solve: unsolved pairs are skipped") {
  LogBuilder b;
  b.enroll("c", Condition::control);
  b.enroll("x", Condition::experimental);
  b.fail_test("c", "t");
  b.fail_test("x", "t");
  auto events = b.events();
  CHECK(time_to_solve(events, 7200, 1).empty());
}

TEST_CASE("click fraction: ratio, exclusions and dedup") {
  LogBuilder b;
  b.enroll("p", Condition::experimental);
  b.enroll("compile_only", Condition::control);
  b.enroll("solver", Condition::control);
  std::vector<std::string> sids;
  for (int i = 0; i < 10; ++i) sids.push_back(b.fail_test("p", "t"));
  for (int i = 0; i < 7; ++i) b.click("p", sids[i]);
  b.submit("compile_only", "t", OutcomeClass::compile_error, 0);
  b.pass("solver", "t");
  auto events = b.events();
  auto rows = feedback_click_fraction(events);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].participant == "p");
  CHECK(rows[0].fraction == doctest::Approx(0.7));

  LogBuilder d;
  d.enroll("q", Condition::control);
  auto s1 = d.fail_test("q", "t");
  d.submit("q", "t", OutcomeClass::runtime_error, 0);
  auto s3 = d.fail_test("q", "t");
  d.click("q", s1);
  d.click("q", s1);
  d.click("q", s3);
  auto ev2 = d.events();
  auto r2 = feedback_click_fraction(ev2);
  REQUIRE(r2.size() == 1);
  CHECK(r2[0].eligible == 3);
  CHECK(r2[0].clicked == 2);
  CHECK(r2[0].fraction == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("rating medians and histogram") {
  LogBuilder b;
  // Medians: 4 for three users, 5 for two, 2 for one.
  std::vector<std::pair<std::string, std::vector<int>>> users{
      {"u1", {4, 5, 4}}, {"u2", {4}}, {"u3", {3, 4, 5}}, {"u4", {5, 5}}, {"u5", {5}}, {"u6", {1, 2, 3}}};
  for (auto& [u, rs] : users) {
    b.enroll(u, Condition::experimental);
    for (int r : rs) b.rate(u, r);
  }
  b.enroll("half", Condition::experimental);
  b.rate("half", 4);
  b.rate("half", 5);
  auto events = b.events();
  auto hist = median_rating_histogram(events);
  REQUIRE(hist.size() == 9);
  std::map<double, std::size_t> got(hist.begin(), hist.end());
  CHECK(got[4.0] == 3);
  CHECK(got[5.0] == 2);
  CHECK(got[2.0] == 1);
  CHECK(got[4.5] == 1);
  CHECK(got[1.0] == 0);
  CHECK(hist.front().first == 1.0);
  CHECK(hist.back().first == 5.0);
}

TEST_CASE("affect report: fractions, threshold and exclusions") {
  LogBuilder b;
  b.enroll("p", Condition::control);
  b.enroll("two", Condition::control);
  b.enroll("x", Condition::experimental);
  b.affect("p", AffectState::focused);
  b.affect("p", AffectState::focused);
  b.affect("p", AffectState::bored);
  b.affect("two", AffectState::anxious);
  b.affect("two", AffectState::anxious);
  for (int i = 0; i < 3; ++i) b.affect("x", AffectState::other);
  auto events = b.events();
  auto rep = affect_frequency_report(events);
  CHECK(rep.n_control == 1);
  CHECK(rep.n_experimental == 1);
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.rows[0].state == AffectState::focused);
  CHECK(rep.rows[0].control_mean == doctest::Approx(2.0 / 3.0));
  CHECK(rep.rows[2].state == AffectState::bored);
  CHECK(rep.rows[2].control_mean == doctest::Approx(1.0 / 3.0));
  CHECK(rep.rows[1].control_mean == 0);
  CHECK(rep.rows[5].state == AffectState::other);
  CHECK_FALSE(rep.rows[5].test.has_value());
  CHECK(rep.rows[5].experimental_mean == 1.0);
  REQUIRE(rep.decision.has_value());
  CHECK(rep.decision->ranked.size() == 5);
}

TEST_CASE("affect report: identical groups give p = 1 and no rejections") {
  LogBuilder b;
  std::vector<AffectState> pattern{AffectState::focused, AffectState::confused, AffectState::bored,
                                   AffectState::focused};
  for (int i = 0; i < 4; ++i) {
    auto c = fmt::format("c{}", i), x = fmt::format("x{}", i);
    b.enroll(c, Condition::control);
    b.enroll(x, Condition::experimental);
    for (std::size_t k = 0; k < pattern.size(); ++k) {
      auto st = pattern[(k + i) % pattern.size()];
      b.affect(c, i % 2 ? st : AffectState::frustrated);
      b.affect(x, i % 2 ? st : AffectState::frustrated);
    }
  }
  auto events = b.events();
  auto rep = affect_frequency_report(events);
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(rep.rows[i].test.has_value());
    CHECK(rep.rows[i].test->p_value == 1.0);
  }
  CHECK(rep.decision->rejections() == 0);
}

TEST_CASE("trend fit: exact linear data") {
  std::vector<double> ya, yb, yc;
  for (int k = 1; k <= 15; ++k) {
    ya.push_back(50 - k);
    yb.push_back(55 - k);
    yc.push_back(50 - 2 * k);
  }
  auto t = fit_group_attempt_trend(curve_from(ya), curve_from(yb));
  CHECK(t.interaction == doctest::Approx(0).epsilon(1e-12));
  CHECK(t.group_effect == doctest::Approx(5));
  CHECK(t.attempt_slope == doctest::Approx(-1));
  CHECK(t.intercept == doctest::Approx(50));
  CHECK(t.residual_sse == doctest::Approx(0).epsilon(1e-12));
  auto u = fit_group_attempt_trend(curve_from(ya), curve_from(yc));
  CHECK(u.interaction == doctest::Approx(-1));
  CHECK(u.group_effect == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("trend fit: random curves match the normal equations") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 100);
  for (int it = 0; it < 200; ++it) {
    std::size_t n = 3 + rng() % 13;
    std::vector<double> ya(n), yb(n);
    for (auto& y : ya) y = u(rng);
    for (auto& y : yb) y = u(rng);
    auto t = fit_group_attempt_trend(curve_from(ya), curve_from(yb));
    auto ref = normal_equations(ya, yb);
    CHECK(std::abs(t.intercept - ref[0]) <= 1e-9);
    CHECK(std::abs(t.group_effect - ref[1]) <= 1e-9);
    CHECK(std::abs(t.attempt_slope - ref[2]) <= 1e-9);
    CHECK(std::abs(t.interaction - ref[3]) <= 1e-9);
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double k = double(i + 1);
      sse += std::pow(ya[i] - (ref[0] + ref[2] * k), 2);
      sse += std::pow(yb[i] - (ref[0] + ref[1] + (ref[2] + ref[3]) * k), 2);
    }
    CHECK(t.residual_sse == doctest::Approx(sse).epsilon(1e-9));
  }
}

TEST_CASE("trend fit: degenerate designs") {
  CHECK(code_of([] { fit_group_attempt_trend(curve_from({1, 2}), curve_from({1, 2})); }) == Errc::degenerate_design);
  auto flat = curve_from({1, 2, 3});
  for (auto& p : flat.points) p.attempt = 1;
  CHECK(code_of([&] { fit_group_attempt_trend(flat, flat); }) == Errc::degenerate_design);
  CHECK(code_of([] { fit_group_attempt_trend(curve_from({1, 2, 3}), curve_from({1, 2, 3, 4})); }) ==
        Errc::invalid_argument);
}

}  // TEST_SUITE

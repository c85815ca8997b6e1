#include <doctest.h>

#include <atomic>
#include <thread>

#include "gradehint/harness.hpp"
#include "support.hpp"

using namespace gradehint;
using testing::code_of;
using testing::fixtures;
using testing::slurp;
using namespace std::chrono_literals;

namespace {

TestSpec returns(std::string method, std::vector<Literal> args, Literal expected) {
  std::vector<Literal> all{Literal(method)};
  all.insert(all.end(), args.begin(), args.end());
  return TestSpec{"Test" + method, TestKind::method_returns, std::move(all), std::move(expected)};
}

TestSpec evaluates(std::string expr, Literal expected) {
  return TestSpec{"Eval " + expr, TestKind::expression_evaluates, {Literal(expr)}, std::move(expected)};
}

Evaluation grade(std::string_view code, std::vector<TestSpec> suite, Limits limits = {}) {
  MockBackend b;
  return evaluate_submission(code, suite, b, limits);
}

/// Backend whose toolchain is reported missing.
class MissingBackend final : public LanguageBackend {
 public:
  std::string name() const override { return "missing"; }
  bool available() const override { return false; }
  BackendCompileResult compile(std::string_view, std::chrono::milliseconds) const override {
    FAIL("compile called on an unavailable backend");
    return {};
  }
};

/// Backend that always times out.
class StuckBackend final : public LanguageBackend {
 public:
  std::string name() const override { return "stuck"; }
  bool available() const override { return true; }
  BackendCompileResult compile(std::string_view, std::chrono::milliseconds t) const override {
    fail(Errc::compile_timeout, fmt::format("exceeded {} ms", t.count()));
  }
};

/// Mock backend that records how many compiles overlap.
class CountingBackend final : public LanguageBackend {
 public:
  explicit CountingBackend(bool safe) : safe_(safe) {}
  std::string name() const override { return "counting"; }
  bool available() const override { return true; }
  bool thread_safe() const override { return safe_; }
  BackendCompileResult compile(std::string_view code, std::chrono::milliseconds t) const override {
    int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(5ms);
    auto r = inner_.compile(code, t);
    --active_;
    return r;
  }
  int peak() const { return peak_; }

 private:
  bool safe_;
  MockBackend inner_;
  mutable std::atomic<int> active_{0};
  mutable std::atomic<int> peak_{0};
};

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("missing semicolon is CS1002 on line 5") {
  MockBackend b;
  auto out = compile_submission(slurp(fixtures() / "bad_missing_semicolon.cs"), b);
  CHECK(out.status == CompileStatus::failed);
  REQUIRE(out.diagnostics.size() == 1);
  CHECK(out.diagnostics[0] == Diagnostic{5, "CS1002", "; expected"});
  CHECK(out.target == nullptr);
  CHECK(out.raw_output.find("error CS1002") != std::string::npos);
}

TEST_CASE("two independent errors are both reported") {
  MockBackend b;
  auto out = compile_submission(slurp(fixtures() / "bad_two_errors.cs"), b);
  REQUIRE(out.diagnostics.size() == 2);
  CHECK(out.diagnostics[0].line == 3);
  CHECK(out.diagnostics[1].line == 7);
  CHECK(out.diagnostics[0].code == "CS1002");
  CHECK(out.diagnostics[1].code == "CS1002");
}

TEST_CASE("diagnostic parser on toolchain output") {
  auto d = parse_compiler_diagnostics(
      "Program.cs(12,5): error CS0103: The name 'x' does not exist in the current context [/w/p.csproj]\n"
      "Program.cs(3,1): warning CS0168: unused\n"
      "Program.cs(12,5): error CS0103: The name 'x' does not exist in the current context [/w/p.csproj]\n"
      "Build FAILED.\n"
      "Program.cs(0,1): error CS1513: } expected\n");
  REQUIRE(d.size() == 2);
  CHECK(d[0] == Diagnostic{12, "CS0103", "The name 'x' does not exist in the current context"});
  CHECK(d[1] == Diagnostic{1, "CS1513", "} expected"});
}

TEST_CASE("empty code is rejected, an empty program compiles") {
  MockBackend b;
  CHECK(code_of([&] { compile_submission("", b); }) == Errc::invalid_argument);
  auto ev = grade("using System;\n", {TestSpec{"c", TestKind::class_defined, {"User"}, true}});
  CHECK(ev.compile.status == CompileStatus::ok);
  CHECK(ev.outcome == OutcomeClass::test_failure);
  CHECK(ev.score == 0.0);
  REQUIRE(ev.results.size() == 1);
  CHECK(ev.results[0].observed == Literal(false));
}

TEST_CASE("divide by zero faults but later specs still run") {
  const char* code = R"(public static class M
{
    public static int Div(int a, int b) { return a / b; }
    public static int One() { return 1; }
})";
  auto ev = grade(code, {returns("M.Div", {6, 3}, 2), returns("M.Div", {1, 0}, 0), returns("M.One", {}, 1)});
  CHECK(ev.outcome == OutcomeClass::runtime_error);
  REQUIRE(ev.fault.has_value());
  CHECK(ev.fault->exception_type == "System.DivideByZeroException");
  CHECK(ev.fault->during == "TestM.Div");
  REQUIRE(ev.results.size() == 3);
  CHECK(ev.results[0].passed);
  CHECK_FALSE(ev.results[1].passed);
  CHECK_FALSE(ev.results[1].observed.has_value());
  CHECK(ev.results[2].passed);
  CHECK(ev.score == 66.7);
}

TEST_CASE("ten specs with the second and ninth failing") {
  std::string code = "public static class K\n{\n";
  std::vector<TestSpec> suite;
  for (int i = 1; i <= 10; ++i) {
    int value = (i == 2 || i == 9) ? -i : i;
    code += fmt::format("    public static int F{}() {{ return {}; }}\n", i, value);
    auto s = returns(fmt::format("K.F{}", i), {}, i);
    s.name = fmt::format("TestF{}", i);
    suite.push_back(s);
  }
  code += "}\n";
  auto ev = grade(code, suite);
  CHECK(ev.outcome == OutcomeClass::test_failure);
  CHECK(ev.score == 80.0);
  REQUIRE(ev.results.size() == 10);
  for (int i = 1; i <= 10; ++i) {
    const auto& r = ev.results[i - 1];
    CHECK(r.spec_name == fmt::format("TestF{}", i));
    CHECK(r.passed == (i != 2 && i != 9));
    CHECK(r.expected_desc == std::to_string(i));
  }
  CHECK(ev.results[1].observed == Literal(-2));
}

TEST_CASE("fixture variants land in their outcome class") {
  const std::pair<const char*, OutcomeClass> table[] = {{"correct", OutcomeClass::all_passed},
                                                        {"failing", OutcomeClass::test_failure},
                                                        {"compile_error", OutcomeClass::compile_error},
                                                        {"runtime_error", OutcomeClass::runtime_error}};
  for (const auto& a : load_assignment_bundle(fixtures() / "bundle")) {
    for (const auto& [variant, expected] : table) {
      auto ev = grade(slurp(fixtures() / "bundle" / a.id / "variants" / (std::string(variant) + ".cs")), a.suite);
      CHECK_MESSAGE(ev.outcome == expected, a.id << " " << variant);
      CHECK((ev.score == 100.0) == (expected == OutcomeClass::all_passed));
      if (expected == OutcomeClass::compile_error) CHECK(ev.results.empty());
      else CHECK(ev.results.size() == a.suite.size());
    }
  }
}

TEST_CASE("classification table") {
  CompileOutcome ok;
  ok.status = CompileStatus::ok;
  CompileOutcome bad;
  std::vector<TestResult> pass{{"a", true, {}, "", ""}};
  std::vector<TestResult> mixed{{"a", true, {}, "", ""}, {"b", false, {}, "", ""}};
  RuntimeFault fault{"System.Exception", "x", "a"};
  CHECK(classify_outcome(bad, {}, std::nullopt) == OutcomeClass::compile_error);
  CHECK(classify_outcome(ok, pass, std::nullopt) == OutcomeClass::all_passed);
  CHECK(classify_outcome(ok, mixed, std::nullopt) == OutcomeClass::test_failure);
  CHECK(classify_outcome(ok, pass, fault) == OutcomeClass::runtime_error);
  CHECK(classify_outcome(ok, mixed, fault) == OutcomeClass::runtime_error);
  CHECK(code_of([&] { classify_outcome(bad, pass, std::nullopt); }) == Errc::inconsistent_inputs);
  CHECK(code_of([&] { classify_outcome(bad, {}, fault); }) == Errc::inconsistent_inputs);
  CHECK(code_of([&] { classify_outcome(ok, {}, std::nullopt); }) == Errc::inconsistent_inputs);
}

TEST_CASE("a looping test times out as a fault") {
  const char* code = R"(public static class L
{
    public static int Spin() { while (true) { } return 0; }
    public static int Two() { return 2; }
})";
  Limits limits;
  limits.test_timeout = 100ms;
  auto start = std::chrono::steady_clock::now();
  auto ev = grade(code, {returns("L.Spin", {}, 0), returns("L.Two", {}, 2)}, limits);
  CHECK(std::chrono::steady_clock::now() - start < 5s);
  CHECK(ev.outcome == OutcomeClass::runtime_error);
  REQUIRE(ev.fault.has_value());
  CHECK(ev.fault->during == "TestL.Spin");
  CHECK(ev.results[1].passed);
}

TEST_CASE("unbounded recursion is a stack overflow fault") {
  auto ev = grade("public static class R { public static int F(int n) { return F(n + 1); } }",
                  {returns("R.F", {0}, 0)});
  REQUIRE(ev.fault.has_value());
  CHECK(ev.fault->exception_type == "System.StackOverflowException");
}

TEST_CASE("unavailable and stuck backends") {
  MissingBackend missing;
  CHECK(code_of([&] { compile_submission("class A {}", missing); }) == Errc::backend_unavailable);
  StuckBackend stuck;
  CHECK(code_of([&] { compile_submission("class A {}", stuck); }) == Errc::compile_timeout);
}

TEST_CASE("mock language semantics") {
  const char* code = R"cs(using System;

public class Point
{
    private int x;
    public int Y { get; set; }
    public string Label = "p";
    public Point(int x, int y) { this.x = x; Y = y; }
    public int X() { return x; }
    public string Show() { return Label + "(" + x + "," + Y + ")"; }
}

public class Point3 : Point
{
    public Point3(int x, int y) : base(x, y) { }
}

public static class U
{
    public static double Half(int n) { return n / 2.0; }
    public static bool Even(int n) { return n % 2 == 0 ? true : false; }
    public static string Up(string s) { return s.ToUpper(); }
    public static int Len(string s) { return s.Length; }
    public static int Sum(int n) { int t = 0; for (int i = 1; i <= n; i++) { if (i == 3) continue; t += i; } return t; }
    public static int NullLen() { string s = null; return s.Length; }
    public static int Boom() { throw new ArgumentException("bad"); }
})cs";
  std::vector<TestSpec> suite{
      TestSpec{"priv", TestKind::member_exists, {"Point", "x", "private"}, true},
      TestSpec{"pubx", TestKind::member_exists, {"Point", "x", "public"}, false},
      TestSpec{"prop", TestKind::member_exists, {"Point", "Y", "public"}, true},
      TestSpec{"ctor", TestKind::constructor_exists, {"Point", "public", "int", "int"}, true},
      TestSpec{"noctor", TestKind::constructor_exists, {"Point", "public"}, false},
      evaluates("new Point(3, 4).Show()", "p(3,4)"),
      evaluates("new Point3(1, 2).X()", 1),
      returns("U.Half", {3}, 1.5),
      returns("U.Even", {4}, true),
      returns("U.Up", {"abc"}, "ABC"),
      returns("U.Len", {"abcd"}, 4),
      returns("U.Sum", {5}, 12),
      evaluates("7 / 2", 3),
      evaluates("7 / 2 == 3.5", false),
  };
  auto ev = grade(code, suite);
  for (const auto& r : ev.results) CHECK_MESSAGE(r.passed, r.spec_name);
  CHECK(ev.outcome == OutcomeClass::all_passed);

  auto n = grade(code, {returns("U.NullLen", {}, 0)});
  REQUIRE(n.fault.has_value());
  CHECK(n.fault->exception_type == "System.NullReferenceException");
  auto t = grade(code, {returns("U.Boom", {}, 0)});
  REQUIRE(t.fault.has_value());
  CHECK(t.fault->exception_type == "System.ArgumentException");
  CHECK(t.fault->message == "bad");
}

TEST_CASE("undefined name is a compile error") {
  MockBackend b;
  auto out = compile_submission("public class A\n{\n    public int F() { return y; }\n}\n", b);
  REQUIRE(out.diagnostics.size() == 1);
  CHECK(out.diagnostics[0].code == "CS0103");
  CHECK(out.diagnostics[0].line == 3);
}

TEST_CASE("evaluation pool matches sequential grading") {
  auto tasks = load_assignment_bundle(fixtures() / "bundle");
  std::vector<std::pair<std::string, const Assignment*>> jobs;
  for (const auto& a : tasks)
    for (const char* v : {"correct", "failing", "compile_error", "runtime_error"})
      jobs.emplace_back(slurp(fixtures() / "bundle" / a.id / "variants" / (std::string(v) + ".cs")), &a);

  auto safe = std::make_shared<CountingBackend>(true);
  EvaluationPool pool(safe, 4);
  std::vector<std::future<Evaluation>> futures;
  for (const auto& [code, a] : jobs) futures.push_back(pool.submit(code, a->suite));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto got = futures[i].get();
    auto want = grade(jobs[i].first, jobs[i].second->suite);
    CHECK(got.outcome == want.outcome);
    CHECK(got.score == want.score);
    CHECK(got.results == want.results);
    CHECK(got.fault == want.fault);
  }
  CHECK(safe->peak() > 1);

  auto serial = std::make_shared<CountingBackend>(false);
  EvaluationPool one_at_a_time(serial, 4);
  futures.clear();
  for (const auto& [code, a] : jobs) futures.push_back(one_at_a_time.submit(code, a->suite));
  for (auto& f : futures) f.get();
  CHECK(serial->peak() == 1);
}

}  // TEST_SUITE

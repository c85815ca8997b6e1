#include <doctest.h>

#include <cstdlib>
#include <random>

#include "gradehint/hint.hpp"
#include "support.hpp"

using namespace gradehint;
using testing::code_of;
using testing::fixtures;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

TestSpec spec(std::string name, TestKind kind, std::vector<Literal> args, Literal expected) {
  return TestSpec{std::move(name), kind, std::move(args), std::move(expected)};
}

std::vector<TestResult> results(int passed, int failed) {
  std::vector<TestResult> out;
  for (int i = 0; i < passed + failed; ++i) out.push_back(TestResult{fmt::format("t{}", i), i < passed, {}, "", ""});
  return out;
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

const char* kManifest = R"({"id":"x1","title":"X","tier":"standard","hint_policy":{"control":false,"experimental":true},
"body":"body.md","tests":"tests.jsonl"})";
const char* kTest = R"({"name":"A","kind":"class_defined","arguments":["A"],"expected":true})";

/// One-assignment bundle with the given files overriding the defaults.
void small_bundle(const fs::path& root, std::string manifest = kManifest, std::string tests = kTest) {
  write(root / "x1" / "manifest", manifest);
  write(root / "x1" / "body.md", "Write class A.");
  write(root / "x1" / "tests.jsonl", tests + "\n");
}

/// Course-sized bundle: 38 hint-enabled standard tasks and 8 capstones.
std::vector<Assignment> course(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Assignment> out;
  for (int i = 0; i < 46; ++i) {
    Assignment a;
    a.id = fmt::format("t{:02}", i);
    a.title = fmt::format("Task {}", i);
    a.body = std::string(rng() % 2000 + 1, 'w');
    bool capstone = i >= 38;
    a.tier = capstone ? DifficultyTier::capstone : DifficultyTier::standard;
    a.hint_policy = {false, !capstone};
    int n = int(rng() % 8) + 1;
    for (int k = 0; k < n; ++k) {
      switch (rng() % 5) {
        case 0: a.suite.push_back(spec(fmt::format("c{}", k), TestKind::class_defined, {"C"}, true)); break;
        case 1:
          a.suite.push_back(spec(fmt::format("m{}", k), TestKind::member_exists, {"C", "X", "private"}, false));
          break;
        case 2:
          a.suite.push_back(spec(fmt::format("k{}", k), TestKind::constructor_exists, {"C", "public", "int", "string"}, true));
          break;
        case 3:
          a.suite.push_back(spec(fmt::format("r{}", k), TestKind::method_returns,
                                 {"C.F", Literal(int(rng() % 9)), Literal("s\"q")}, Literal(0.5)));
          break;
        default:
          a.suite.push_back(spec(fmt::format("e{}", k), TestKind::expression_evaluates, {"new C().X"}, Literal{}));
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

TEST_SUITE("assignment") {

TEST_CASE("score is the passed fraction rounded to one decimal") {
  CHECK(compute_score(results(7, 1)) == 87.5);
  CHECK(compute_score(results(1, 2)) == 33.3);
  CHECK(compute_score(results(2, 1)) == 66.7);
  CHECK(compute_score(results(3, 0)) == 100.0);
  CHECK(compute_score(results(0, 4)) == 0.0);
  CHECK(compute_score(results(1, 15)) == 6.3);
  CHECK(code_of([] { compute_score(std::vector<TestResult>{}); }) == Errc::empty_results);
}

TEST_CASE("score property: bounded, monotone, 100 iff all passed") {
  for (int n = 1; n <= 60; ++n) {
    double prev = -1;
    for (int p = 0; p <= n; ++p) {
      double s = compute_score(results(p, n - p));
      CHECK(s >= 0.0);
      CHECK(s <= 100.0);
      CHECK(s >= prev);
      CHECK((s == 100.0) == (p == n));
      // Independent rounding: integer tenths, half up.
      CHECK(s == static_cast<double>((2000 * p + n) / (2 * n)) / 10.0);
      prev = s;
    }
  }
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(validate_spec(spec("a", TestKind::class_defined, {"A"}, true), "ctx"));
  CHECK_NOTHROW(validate_spec(spec("a", TestKind::constructor_exists, {"A", "public"}, true), "ctx"));
  CHECK_NOTHROW(validate_spec(spec("a", TestKind::method_returns, {"A.F"}, Literal{}), "ctx"));
  const TestSpec bad[] = {
      spec("a", TestKind::class_defined, {}, true),
      spec("a", TestKind::class_defined, {"A"}, 1),
      spec("a", TestKind::class_defined, {""}, true),
      spec("a", TestKind::member_exists, {"A", "B", "friend"}, true),
      spec("a", TestKind::member_exists, {"A", "B"}, true),
      spec("a", TestKind::constructor_exists, {"A", "public", 3}, true),
      spec("a", TestKind::method_returns, {5}, 1),
      spec("a", TestKind::expression_evaluates, {"x", "y"}, 1),
  };
  for (const auto& s : bad) CHECK(code_of([&] { validate_spec(s, "ctx"); }) == Errc::invalid_spec);
}

TEST_CASE("assignment validation") {
  auto a = testing::make_assignment("t");
  CHECK_NOTHROW(validate_assignment(a));
  auto dup = a;
  dup.suite[1].name = dup.suite[0].name;
  CHECK(code_of([&] { validate_assignment(dup); }) == Errc::invalid_spec);
  auto empty = a;
  empty.suite.clear();
  CHECK(code_of([&] { validate_assignment(empty); }) == Errc::invalid_spec);
  auto cap = a;
  cap.tier = DifficultyTier::capstone;
  CHECK(code_of([&] { validate_assignment(cap); }) == Errc::invalid_spec);
  cap.hint_policy = {false, false};
  CHECK_NOTHROW(validate_assignment(cap));
}

TEST_CASE("fixture bundle") {
  auto tasks = load_assignment_bundle(fixtures() / "bundle");
  REQUIRE(tasks.size() == 6);
  std::size_t specs = 0, hinted = 0;
  for (const auto& a : tasks) {
    specs += a.suite.size();
    hinted += a.hint_policy.experimental;
    CHECK_FALSE(a.hint_policy.control);
  }
  CHECK(specs >= 30);
  CHECK(hinted == 5);
  CHECK(tasks.front().id == "a01-user");
  CHECK(tasks.back().tier == DifficultyTier::capstone);
}

TEST_CASE("course-sized bundle roundtrips structurally") {
  TempDir dir;
  auto tasks = course(46);
  write_assignment_bundle(dir.path(), tasks);
  auto back = load_assignment_bundle(dir.path());
  REQUIRE(back.size() == 46);
  CHECK(back == tasks);
  CHECK(std::count_if(back.begin(), back.end(), [](const auto& a) { return a.hint_policy.experimental; }) == 38);
}

TEST_CASE("tar archive loads like the directory") {
  TempDir dir;
  auto tar = dir / "bundle.tar";
  auto cmd = fmt::format("tar --format=ustar -cf '{}' -C '{}' . 2>/dev/null", tar.string(),
                         (fixtures() / "bundle").string());
  if (std::system(cmd.c_str()) != 0) {
    MESSAGE("tar unavailable; archive case skipped");
    return;
  }
  CHECK(load_assignment_bundle(tar) == load_assignment_bundle(fixtures() / "bundle"));
  std::ofstream(dir / "junk.tar", std::ios::binary) << std::string(700, 'x');
  CHECK(code_of([&] { load_assignment_bundle(dir / "junk.tar"); }) == Errc::malformed_manifest);
}

TEST_CASE("oversized body is rejected at load") {
  TempDir dir;
  small_bundle(dir.path());
  write(dir / "x1" / "body.md", std::string(14000, 'b'));
  CHECK(code_of([&] { load_assignment_bundle(dir.path()); }) == Errc::oversized_body);
  write(dir / "x1" / "body.md", std::string(13000, 'b'));
  CHECK_NOTHROW(load_assignment_bundle(dir.path()));
}

TEST_CASE("malformed bundles") {
  struct Case {
    const char* label;
    std::string manifest;
    std::string tests;
    Errc code;
  };
  const std::string m = kManifest;
  auto with = [&](const std::string& from, const std::string& to) {
    auto s = m;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  const Case cases[] = {
      {"not json", "{", kTest, Errc::malformed_manifest},
      {"array", "[]", kTest, Errc::malformed_manifest},
      {"unknown field", with("\"id\"", "\"extra\":1,\"id\""), kTest, Errc::malformed_manifest},
      {"bad tier", with("standard", "legendary"), kTest, Errc::malformed_manifest},
      {"policy type", with("\"control\":false", "\"control\":0"), kTest, Errc::malformed_manifest},
      {"path escape", with("body.md", "../body.md"), kTest, Errc::malformed_manifest},
      {"missing body", with("body.md", "nope.md"), kTest, Errc::malformed_manifest},
      {"capstone with hints", with("standard", "capstone"), kTest, Errc::invalid_spec},
      {"no expected", m, R"({"name":"A","kind":"class_defined","arguments":["A"]})", Errc::invalid_spec},
      {"unknown kind", m, R"({"name":"A","kind":"guess","arguments":["A"],"expected":true})", Errc::invalid_spec},
      {"test line garbage", m, "{nope", Errc::malformed_manifest},
      {"empty suite", m, "", Errc::invalid_spec},
  };
  for (const auto& c : cases) {
    TempDir dir;
    small_bundle(dir.path(), c.manifest, c.tests);
    CHECK_MESSAGE(code_of([&] { load_assignment_bundle(dir.path()); }) == c.code, c.label);
  }
}

TEST_CASE("empty or missing source") {
  TempDir dir;
  CHECK(code_of([&] { load_assignment_bundle(dir.path()); }) == Errc::malformed_manifest);
  CHECK(code_of([&] { load_assignment_bundle(dir / "absent"); }) == Errc::malformed_manifest);
}

TEST_CASE("duplicate ids across directories") {
  TempDir dir;
  small_bundle(dir / "one");
  small_bundle(dir / "two");
  fs::rename(dir / "one" / "x1", dir / "a");
  fs::rename(dir / "two" / "x1", dir / "b");
  CHECK(code_of([&] { load_assignment_bundle(dir.path()); }) == Errc::malformed_manifest);
}

TEST_CASE("input descriptions") {
  CHECK(input_description(spec("a", TestKind::class_defined, {"User"}, true)) == "\"User\"");
  CHECK(input_description(spec("a", TestKind::method_returns, {"Calc.Add", 2, 3}, 5)) == "Calc.Add(2, 3)");
}

}  // TEST_SUITE

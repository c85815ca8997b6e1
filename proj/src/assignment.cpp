#include "gradehint/assignment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gradehint/error.hpp"
#include "gradehint/hint.hpp"
#include "tar_reader.hpp"

namespace gradehint {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Condition c) noexcept {
  return c == Condition::control ? "control" : "experimental";
}

std::optional<Condition> parse_condition(std::string_view s) noexcept {
  if (s == "control") return Condition::control;
  if (s == "experimental") return Condition::experimental;
  return std::nullopt;
}

std::string_view to_string(TestKind k) noexcept {
  switch (k) {
    case TestKind::class_defined: return "class_defined";
    case TestKind::member_exists: return "member_exists";
    case TestKind::constructor_exists: return "constructor_exists";
    case TestKind::method_returns: return "method_returns";
    case TestKind::expression_evaluates: return "expression_evaluates";
  }
  return "unknown";
}

std::optional<TestKind> parse_test_kind(std::string_view s) noexcept {
  for (auto k : {TestKind::class_defined, TestKind::member_exists, TestKind::constructor_exists,
                 TestKind::method_returns, TestKind::expression_evaluates}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(DifficultyTier t) noexcept {
  return t == DifficultyTier::standard ? "standard" : "capstone";
}

namespace {

bool is_access_modifier(const Literal& l) {
  const auto* s = std::get_if<std::string>(&l.value);
  return s && (*s == "public" || *s == "private" || *s == "protected" || *s == "internal");
}

bool is_nonempty_string(const Literal& l) {
  const auto* s = std::get_if<std::string>(&l.value);
  return s && !s->empty();
}

[[noreturn]] void invalid(std::string_view context, const TestSpec& spec, std::string_view why) {
  fail(Errc::invalid_spec, fmt::format("{}: test '{}' ({}): {}", context, spec.name, to_string(spec.kind), why));
}

}  // namespace

void validate_spec(const TestSpec& spec, std::string_view context) {
  if (spec.name.empty()) invalid(context, spec, "empty test name");
  const auto& args = spec.arguments;
  auto expect_bool = [&] {
    if (!std::holds_alternative<bool>(spec.expected.value)) invalid(context, spec, "expected value must be a boolean");
  };
  switch (spec.kind) {
    case TestKind::class_defined:
      if (args.size() != 1 || !is_nonempty_string(args[0])) invalid(context, spec, "takes exactly [class name]");
      expect_bool();
      break;
    case TestKind::member_exists:
      if (args.size() != 3 || !is_nonempty_string(args[0]) || !is_nonempty_string(args[1]) ||
          !is_access_modifier(args[2]))
        invalid(context, spec, "takes exactly [class, member, access modifier]");
      expect_bool();
      break;
    case TestKind::constructor_exists:
      if (args.size() < 2 || !is_nonempty_string(args[0]) || !is_access_modifier(args[1]))
        invalid(context, spec, "takes [class, access modifier, parameter type...]");
      for (std::size_t i = 2; i < args.size(); ++i)
        if (!is_nonempty_string(args[i])) invalid(context, spec, "parameter types must be non-empty strings");
      expect_bool();
      break;
    case TestKind::method_returns: {
      if (args.empty() || !is_nonempty_string(args[0])) invalid(context, spec, "first argument must be Class.Method");
      const auto& target = std::get<std::string>(args[0].value);
      auto dot = target.rfind('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 == target.size())
        invalid(context, spec, "target must have the form Class.Method");
      break;
    }
    case TestKind::expression_evaluates:
      if (args.size() != 1 || !is_nonempty_string(args[0])) invalid(context, spec, "takes exactly [expression]");
      break;
  }
}

void validate_assignment(const Assignment& a) {
  if (a.id.empty()) fail(Errc::invalid_spec, "assignment with empty id");
  if (a.suite.empty()) fail(Errc::invalid_spec, fmt::format("{}: test suite is empty", a.id));
  std::set<std::string> names;
  for (const auto& spec : a.suite) {
    validate_spec(spec, a.id);
    if (!names.insert(spec.name).second)
      fail(Errc::invalid_spec, fmt::format("{}: duplicate test name '{}'", a.id, spec.name));
  }
  if (a.tier == DifficultyTier::capstone && (a.hint_policy.control || a.hint_policy.experimental))
    fail(Errc::invalid_spec, fmt::format("{}: capstone tasks cannot enable hints", a.id));
}

std::string input_description(const TestSpec& spec) {
  std::vector<std::string> parts;
  switch (spec.kind) {
    case TestKind::method_returns: {
      for (std::size_t i = 1; i < spec.arguments.size(); ++i) parts.push_back(describe(spec.arguments[i]));
      return fmt::format("{}({})", std::get<std::string>(spec.arguments[0].value), fmt::join(parts, ", "));
    }
    case TestKind::expression_evaluates:
      return std::get<std::string>(spec.arguments[0].value);
    default:
      for (const auto& a : spec.arguments) parts.push_back(describe(a));
      return fmt::format("{}", fmt::join(parts, ", "));
  }
}

SpecEvaluation evaluate_test_spec(const TestSpec& spec, const ReflectionTarget& target, Deadline deadline) {
  if (!target.supports(spec.kind))
    fail(Errc::unsupported_kind, fmt::format("backend cannot evaluate {} ('{}')", to_string(spec.kind), spec.name));

  auto str = [&](std::size_t i) -> std::string_view { return std::get<std::string>(spec.arguments[i].value); };
  Invocation inv;
  switch (spec.kind) {
    case TestKind::class_defined:
      inv = target.has_class(str(0), deadline);
      break;
    case TestKind::member_exists:
      inv = target.has_member(str(0), str(1), str(2), deadline);
      break;
    case TestKind::constructor_exists: {
      std::vector<std::string> params;
      for (std::size_t i = 2; i < spec.arguments.size(); ++i) params.emplace_back(str(i));
      inv = target.has_constructor(str(0), str(1), params, deadline);
      break;
    }
    case TestKind::method_returns:
      inv = target.invoke_method(str(0), std::span(spec.arguments).subspan(1), deadline);
      break;
    case TestKind::expression_evaluates:
      inv = target.evaluate_expression(str(0), deadline);
      break;
  }

  SpecEvaluation out;
  out.result.spec_name = spec.name;
  out.result.input_desc = input_description(spec);
  out.result.expected_desc = describe(spec.expected);
  out.result.observed = inv.value;
  out.result.passed = inv.value.has_value() && *inv.value == spec.expected;
  out.fault = inv.fault;
  out.timed_out = inv.timed_out;
  return out;
}

TestResult evaluate_test_spec(const TestSpec& spec, const ReflectionTarget& target) {
  return evaluate_test_spec(spec, target, Deadline::max()).result;
}

double compute_score(std::span<const TestResult> results) {
  if (results.empty()) fail(Errc::empty_results, "cannot score an empty result list");
  const auto total = static_cast<long long>(results.size());
  const auto passed = static_cast<long long>(std::count_if(results.begin(), results.end(), [](const auto& r) {
    return r.passed;
  }));
  // tenths = round_half_up(1000 * passed / total)
  const long long tenths = (2000 * passed + total) / (2 * total);
  return static_cast<double>(tenths) / 10.0;
}

// ---------------------------------------------------------------------------
// Bundle I/O

namespace {

constexpr std::string_view kManifestName = "manifest";

struct RawAssignment {
  std::string where;
  std::string manifest;
  std::function<std::optional<std::string>(const std::string&)> read_sibling;
};

[[noreturn]] void malformed(const std::string& where, const std::string& why) {
  fail(Errc::malformed_manifest, fmt::format("{}: {}", where, why));
}

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      malformed(where, fmt::format("unknown field '{}'", key));
  }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) malformed(where, fmt::format("field '{}' must be a string", key));
  return it->get<std::string>();
}

bool plain_filename(const std::string& s) {
  return !s.empty() && s.find('/') == std::string::npos && s != "." && s != "..";
}

TestSpec parse_spec_line(const std::string& line, const std::string& where, const std::string& assignment_id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    malformed(where, fmt::format("unparsable test line: {}", e.what()));
  }
  if (!j.is_object()) malformed(where, "test line is not an object");
  reject_unknown_fields(j, {"name", "kind", "arguments", "expected"}, where);

  TestSpec spec;
  if (auto it = j.find("name"); it != j.end() && it->is_string()) spec.name = it->get<std::string>();
  if (spec.name.empty()) fail(Errc::invalid_spec, fmt::format("{}: test without a name", assignment_id));

  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string())
    fail(Errc::invalid_spec, fmt::format("{}: test '{}' has no kind", assignment_id, spec.name));
  auto kind = parse_test_kind(kind_it->get<std::string>());
  if (!kind)
    fail(Errc::invalid_spec,
         fmt::format("{}: test '{}' has unknown kind '{}'", assignment_id, spec.name, kind_it->get<std::string>()));
  spec.kind = *kind;

  if (auto it = j.find("arguments"); it != j.end()) {
    if (!it->is_array()) fail(Errc::invalid_spec, fmt::format("{}: test '{}': arguments must be an array", assignment_id, spec.name));
    for (const auto& a : *it) {
      try {
        spec.arguments.push_back(literal_from_json(a));
      } catch (const Error& e) {
        fail(Errc::invalid_spec, fmt::format("{}: test '{}': {}", assignment_id, spec.name, e.what()));
      }
    }
  }

  auto exp_it = j.find("expected");
  if (exp_it == j.end())
    fail(Errc::invalid_spec, fmt::format("{}: test '{}' ({}) is missing its expected value", assignment_id, spec.name,
                                         to_string(spec.kind)));
  try {
    spec.expected = literal_from_json(*exp_it);
  } catch (const Error& e) {
    fail(Errc::invalid_spec, fmt::format("{}: test '{}': {}", assignment_id, spec.name, e.what()));
  }
  return spec;
}

Assignment parse_raw(const RawAssignment& raw, const BundleOptions& options) {
  json m;
  try {
    m = json::parse(raw.manifest);
  } catch (const json::parse_error& e) {
    malformed(raw.where, fmt::format("unparsable manifest: {}", e.what()));
  }
  if (!m.is_object()) malformed(raw.where, "manifest is not an object");
  reject_unknown_fields(m, {"id", "title", "tier", "hint_policy", "body", "tests"}, raw.where);

  Assignment a;
  a.id = require_string(m, "id", raw.where);
  a.title = require_string(m, "title", raw.where);
  auto tier = require_string(m, "tier", raw.where);
  if (tier == "standard") {
    a.tier = DifficultyTier::standard;
  } else if (tier == "capstone") {
    a.tier = DifficultyTier::capstone;
  } else {
    malformed(raw.where, fmt::format("unknown tier '{}'", tier));
  }

  auto hp = m.find("hint_policy");
  if (hp == m.end() || !hp->is_object()) malformed(raw.where, "hint_policy must be an object");
  reject_unknown_fields(*hp, {"control", "experimental"}, raw.where);
  for (const char* key : {"control", "experimental"}) {
    auto it = hp->find(key);
    if (it == hp->end() || !it->is_boolean()) malformed(raw.where, fmt::format("hint_policy.{} must be a boolean", key));
  }
  a.hint_policy.control = (*hp)["control"].get<bool>();
  a.hint_policy.experimental = (*hp)["experimental"].get<bool>();

  auto body_file = require_string(m, "body", raw.where);
  auto tests_file = require_string(m, "tests", raw.where);
  if (!plain_filename(body_file) || !plain_filename(tests_file))
    malformed(raw.where, "body and tests must name files next to the manifest");

  auto body = raw.read_sibling(body_file);
  if (!body) malformed(raw.where, fmt::format("missing body file '{}'", body_file));
  a.body = std::move(*body);

  auto tests = raw.read_sibling(tests_file);
  if (!tests) malformed(raw.where, fmt::format("missing tests file '{}'", tests_file));
  std::istringstream lines(*tests);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    a.suite.push_back(parse_spec_line(line, raw.where + "/" + tests_file, a.id));
  }

  validate_assignment(a);

  const auto prompt = render_prompt_text(PromptScenario::compile_error, a.body, "", "", options.locale_word);
  const int estimate = estimate_tokens(prompt);
  if (estimate + options.max_tokens > options.token_budget)
    fail(Errc::oversized_body,
         fmt::format("{}: body needs {} prompt tokens with empty code; budget leaves {}", a.id, estimate,
                     options.token_budget - options.max_tokens));
  return a;
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RawAssignment> collect_from_directory(const fs::path& root) {
  std::vector<RawAssignment> out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / kManifestName)) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    RawAssignment raw;
    raw.where = dir.filename().string();
    raw.manifest = read_file(dir / kManifestName).value_or("");
    raw.read_sibling = [dir](const std::string& name) { return read_file(dir / name); };
    out.push_back(std::move(raw));
  }
  return out;
}

std::vector<RawAssignment> collect_from_archive(const fs::path& archive) {
  auto content = read_file(archive);
  if (!content) malformed(archive.string(), "cannot read archive");
  std::map<std::string, std::string> files;
  try {
    files = detail::read_tar(*content);
  } catch (const std::exception& e) {
    malformed(archive.string(), e.what());
  }
  auto shared = std::make_shared<std::map<std::string, std::string>>(std::move(files));

  std::vector<RawAssignment> out;
  for (const auto& [path, data] : *shared) {
    auto slash = path.rfind('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (base != kManifestName || slash == std::string::npos) continue;
    std::string dir = path.substr(0, slash);
    RawAssignment raw;
    raw.where = dir;
    raw.manifest = data;
    raw.read_sibling = [shared, dir](const std::string& name) -> std::optional<std::string> {
      auto it = shared->find(dir + "/" + name);
      if (it == shared->end()) return std::nullopt;
      return it->second;
    };
    out.push_back(std::move(raw));
  }
  return out;
}

}  // namespace

std::vector<Assignment> load_assignment_bundle(const fs::path& source, const BundleOptions& options) {
  if (!fs::exists(source)) malformed(source.string(), "bundle source does not exist");
  auto raws = fs::is_directory(source) ? collect_from_directory(source) : collect_from_archive(source);
  if (raws.empty()) malformed(source.string(), "bundle contains no assignment manifests");

  std::vector<Assignment> out;
  out.reserve(raws.size());
  std::set<std::string> ids;
  for (const auto& raw : raws) {
    auto a = parse_raw(raw, options);
    if (!ids.insert(a.id).second) malformed(raw.where, fmt::format("duplicate assignment id '{}'", a.id));
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
  return out;
}

void write_assignment_bundle(const fs::path& dir, std::span<const Assignment> assignments) {
  fs::create_directories(dir);
  for (const auto& a : assignments) {
    auto sub = dir / a.id;
    fs::create_directories(sub);
    json m = json::object();
    m["id"] = a.id;
    m["title"] = a.title;
    m["tier"] = std::string(to_string(a.tier));
    m["hint_policy"] = {{"control", a.hint_policy.control}, {"experimental", a.hint_policy.experimental}};
    m["body"] = "body.md";
    m["tests"] = "tests.jsonl";
    std::ofstream(sub / kManifestName, std::ios::binary) << m.dump(2) << '\n';
    std::ofstream(sub / "body.md", std::ios::binary) << a.body;
    std::ofstream tests(sub / "tests.jsonl", std::ios::binary);
    for (const auto& s : a.suite) {
      json line = json::object();
      line["name"] = s.name;
      line["kind"] = std::string(to_string(s.kind));
      line["arguments"] = json::array();
      for (const auto& arg : s.arguments) line["arguments"].push_back(to_json(arg));
      line["expected"] = to_json(s.expected);
      tests << line.dump() << '\n';
    }
  }
}

}  // namespace gradehint

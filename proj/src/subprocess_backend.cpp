#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gradehint/error.hpp"
#include "gradehint/harness.hpp"
#include "process.hpp"

namespace gradehint {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Scratch directory removed with its last owner.
class WorkDir {
 public:
  WorkDir() {
    std::random_device rd;
    for (int tries = 0; tries < 16; ++tries) {
      auto candidate = fs::temp_directory_path() / fmt::format("gradehint-{:016x}", (std::uint64_t{rd()} << 32) | rd());
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    fail(Errc::backend_unavailable, "cannot create a scratch directory");
  }
  ~WorkDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<std::string> substitute(const std::vector<std::string>& wrapper, const std::vector<std::string>& cmd,
                                    const fs::path& src, const fs::path& out) {
  std::vector<std::string> argv(wrapper);
  for (auto arg : cmd) {
    for (auto [key, value] : {std::pair{std::string("{src}"), src.string()}, std::pair{std::string("{out}"), out.string()}}) {
      for (auto pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size()))
        arg.replace(pos, key.size(), value);
    }
    argv.push_back(std::move(arg));
  }
  return argv;
}

/// Reflective queries go to a runner process, one process per query, so
/// every invocation starts from fresh program state.
class RunnerTarget final : public ReflectionTarget {
 public:
  RunnerTarget(std::shared_ptr<WorkDir> dir, std::vector<std::string> argv)
      : dir_(std::move(dir)), argv_(std::move(argv)) {}

  bool supports(TestKind) const override { return true; }

  Invocation has_class(std::string_view name, Deadline d) const override {
    return ask({{"op", "has_class"}, {"class", name}}, d);
  }
  Invocation has_member(std::string_view cls, std::string_view member, std::string_view access,
                        Deadline d) const override {
    return ask({{"op", "has_member"}, {"class", cls}, {"member", member}, {"access", access}}, d);
  }
  Invocation has_constructor(std::string_view cls, std::string_view access, std::span<const std::string> types,
                             Deadline d) const override {
    return ask({{"op", "has_constructor"},
                {"class", cls},
                {"access", access},
                {"params", std::vector<std::string>(types.begin(), types.end())}},
               d);
  }
  Invocation invoke_method(std::string_view qualified, std::span<const Literal> args, Deadline d) const override {
    json a = json::array();
    for (const auto& l : args) a.push_back(to_json(l));
    return ask({{"op", "invoke"}, {"method", qualified}, {"args", std::move(a)}}, d);
  }
  Invocation evaluate_expression(std::string_view expression, Deadline d) const override {
    return ask({{"op", "evaluate"}, {"expression", expression}}, d);
  }

 private:
  Invocation ask(const json& query, Deadline deadline) const {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (deadline == Deadline::max()) left = std::chrono::milliseconds(60'000);
    if (left.count() <= 0) return Invocation::timeout();
    auto res = process::run(argv_, query.dump() + "\n", left, dir_->path());
    if (res.timed_out) return Invocation::timeout();
    // The reply is the last non-empty line; anything before it is program output.
    std::string last;
    std::istringstream in(res.output);
    for (std::string line; std::getline(in, line);)
      if (line.find_first_not_of(" \t\r") != std::string::npos) last = line;
    json reply;
    try {
      reply = json::parse(last);
    } catch (const json::exception&) {
      return Invocation::thrown("RunnerProtocolError",
                                fmt::format("runner exited with {} and no reply", res.exit_code));
    }
    if (!reply.is_object()) return Invocation::thrown("RunnerProtocolError", "reply is not an object");
    if (auto v = reply.find("value"); v != reply.end()) {
      try {
        return Invocation::of(literal_from_json(*v));
      } catch (const Error& e) {
        return Invocation::thrown("RunnerProtocolError", e.what());
      }
    }
    if (auto f = reply.find("fault"); f != reply.end() && f->is_object())
      return Invocation::thrown(f->value("type", "Exception"), f->value("message", ""));
    if (reply.value("missing", false)) return Invocation{};
    return Invocation::thrown("RunnerProtocolError", "reply has neither value, fault nor missing");
  }

  std::shared_ptr<WorkDir> dir_;
  std::vector<std::string> argv_;
};

std::vector<std::string> string_list(const json& j, const char* key, const std::string& path, bool required) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) fail(Errc::invalid_argument, fmt::format("{}: missing '{}'", path, key));
    return {};
  }
  if (!it->is_array()) fail(Errc::invalid_argument, fmt::format("{}: '{}' must be an array of strings", path, key));
  std::vector<std::string> out;
  for (const auto& s : *it) {
    if (!s.is_string()) fail(Errc::invalid_argument, fmt::format("{}: '{}' must be an array of strings", path, key));
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

SubprocessConfig SubprocessConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::not_found, fmt::format("cannot open {}", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, fmt::format("{}: {}", path, e.what()));
  }
  if (!j.is_object()) fail(Errc::invalid_argument, fmt::format("{}: expected an object", path));
  SubprocessConfig c;
  c.wrapper = string_list(j, "wrapper", path, false);
  c.compile_command = string_list(j, "compile", path, true);
  c.runner_command = string_list(j, "runner", path, true);
  if (c.compile_command.empty() || c.runner_command.empty())
    fail(Errc::invalid_argument, fmt::format("{}: compile and runner commands must not be empty", path));
  if (j.contains("source_name")) c.source_name = j.at("source_name").get<std::string>();
  if (j.contains("output_name")) c.output_name = j.at("output_name").get<std::string>();
  return c;
}

SubprocessBackend::SubprocessBackend(SubprocessConfig config) : config_(std::move(config)) {
  if (config_.compile_command.empty() || config_.runner_command.empty())
    fail(Errc::invalid_argument, "subprocess backend needs compile and runner commands");
}

bool SubprocessBackend::available() const {
  const auto& first = config_.wrapper.empty() ? config_.compile_command.front() : config_.wrapper.front();
  return process::on_path(first) && process::on_path(config_.runner_command.front());
}

BackendCompileResult SubprocessBackend::compile(std::string_view code, std::chrono::milliseconds timeout) const {
  auto dir = std::make_shared<WorkDir>();
  const fs::path src = dir->path() / config_.source_name;
  const fs::path out = dir->path() / config_.output_name;
  {
    std::ofstream f(src, std::ios::binary);
    f << code;
    if (!f) fail(Errc::backend_unavailable, fmt::format("cannot write {}", src.string()));
  }
  auto res = process::run(substitute(config_.wrapper, config_.compile_command, src, out), "", timeout, dir->path());
  if (res.timed_out) fail(Errc::compile_timeout, fmt::format("compilation exceeded {} ms", timeout.count()));
  BackendCompileResult r;
  r.raw_output = std::move(res.output);
  r.success = res.exit_code == 0;
  if (r.success)
    r.target = std::make_shared<RunnerTarget>(dir, substitute(config_.wrapper, config_.runner_command, src, out));
  return r;
}

}  // namespace gradehint

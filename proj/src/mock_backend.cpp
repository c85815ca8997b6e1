#include <fmt/format.h>

#include "gradehint/harness.hpp"
#include "mock_language.hpp"

namespace gradehint {
namespace {

using mocklang::ClassDecl;
using mocklang::Program;

bool access_matches(std::string_view declared, std::string_view wanted) { return wanted.empty() || declared == wanted; }

class MockTarget final : public ReflectionTarget {
 public:
  explicit MockTarget(std::shared_ptr<const Program> program) : program_(std::move(program)) {}

  bool supports(TestKind) const override { return true; }

  Invocation has_class(std::string_view name, Deadline) const override {
    return Invocation::of(program_->find(name) != nullptr);
  }

  Invocation has_member(std::string_view cls_name, std::string_view member, std::string_view access,
                        Deadline) const override {
    const ClassDecl* cls = program_->find(cls_name);
    if (!cls) return Invocation::of(false);
    for (const auto& f : cls->fields)
      if (f.name == member && access_matches(f.access, access)) return Invocation::of(true);
    for (const auto& m : cls->methods)
      if (m.name == member && access_matches(m.access, access)) return Invocation::of(true);
    return Invocation::of(false);
  }

  Invocation has_constructor(std::string_view cls_name, std::string_view access, std::span<const std::string> types,
                             Deadline) const override {
    const ClassDecl* cls = program_->find(cls_name);
    if (!cls) return Invocation::of(false);
    if (cls->ctors.empty())
      return Invocation::of(types.empty() && !cls->is_static && access_matches("public", access));
    for (const auto& c : cls->ctors) {
      if (!access_matches(c.access, access) || c.params.size() != types.size()) continue;
      bool same = true;
      for (std::size_t i = 0; i < types.size(); ++i) same = same && c.params[i].type == types[i];
      if (same) return Invocation::of(true);
    }
    return Invocation::of(false);
  }

  Invocation invoke_method(std::string_view qualified, std::span<const Literal> args, Deadline deadline) const override {
    return mocklang::invoke(*program_, qualified, args, deadline);
  }

  Invocation evaluate_expression(std::string_view expression, Deadline deadline) const override {
    return mocklang::evaluate(*program_, expression, deadline);
  }

 private:
  std::shared_ptr<const Program> program_;
};

}  // namespace

BackendCompileResult MockBackend::compile(std::string_view code, std::chrono::milliseconds timeout) const {
  auto compiled = mocklang::compile(code, std::chrono::steady_clock::now() + timeout);
  BackendCompileResult out;
  if (compiled.diagnostics.empty()) {
    out.success = true;
    out.raw_output = "Build succeeded.\n    0 Error(s)\n";
    out.target = std::make_shared<MockTarget>(compiled.program);
    return out;
  }
  for (const auto& d : compiled.diagnostics)
    out.raw_output += fmt::format("Program.cs({},{}): error {}: {}\n", d.line, d.col, d.code, d.message);
  out.raw_output += fmt::format("Build FAILED.\n    {} Error(s)\n", compiled.diagnostics.size());
  return out;
}

}  // namespace gradehint

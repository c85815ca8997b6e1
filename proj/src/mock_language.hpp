#pragma once

// Small C#-like class language used by the mock backend. Grammar and
// runtime rules are documented in docs/mock-language.md.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gradehint/reflection.hpp"

namespace gradehint::mocklang {

struct SourceDiagnostic {
  int line = 1;
  int col = 1;
  std::string code;
  std::string message;
};

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

struct Expr {
  enum class Kind { integer, real, string, boolean, null, name, self, unary, binary, ternary, member, call, construct };
  Kind kind = Kind::null;
  int line = 1;
  std::int64_t ival = 0;
  double dval = 0;
  bool bval = false;
  std::string text;  // name, member name, operator, class name, string value
  ExprPtr lhs;       // unary operand, member object, call callee, ternary condition
  ExprPtr rhs;       // binary rhs, ternary "then"
  ExprPtr extra;     // ternary "else"
  std::vector<ExprPtr> args;
};

struct Stmt {
  enum class Kind { block, var_decl, assign, incdec, ret, if_, while_, for_, brk, cont, throw_, expr };
  Kind kind = Kind::expr;
  int line = 1;
  std::string type;
  std::string name;
  std::string op;  // "=", "+=", ..., "++", "--"
  ExprPtr target;
  ExprPtr value;
  ExprPtr cond;
  std::vector<StmtPtr> body;
  StmtPtr init;
  StmtPtr step;
  StmtPtr then_branch;
  StmtPtr else_branch;
};

struct Param {
  std::string type;
  std::string name;
};

struct FieldDecl {
  std::string access;
  std::string type;
  std::string name;
  bool is_static = false;
  bool is_property = false;
  ExprPtr init;
  int line = 1;
};

struct MethodDecl {
  std::string access;
  std::string return_type;
  std::string name;
  bool is_static = false;
  bool is_abstract = false;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  int line = 1;
};

struct CtorDecl {
  std::string access;
  std::vector<Param> params;
  std::vector<StmtPtr> body;
  bool has_base_call = false;
  std::vector<ExprPtr> base_args;
  int line = 1;
};

struct ClassDecl {
  std::string name;
  std::string access;
  std::string base;
  bool is_static = false;
  bool is_abstract = false;
  std::vector<FieldDecl> fields;
  std::vector<MethodDecl> methods;
  std::vector<CtorDecl> ctors;
  int line = 1;
};

struct Program {
  std::vector<std::unique_ptr<ClassDecl>> classes;

  const ClassDecl* find(std::string_view name) const;
  const ClassDecl* base_of(const ClassDecl& cls) const { return cls.base.empty() ? nullptr : find(cls.base); }
};

struct CompileResult {
  std::shared_ptr<const Program> program;
  std::vector<SourceDiagnostic> diagnostics;
};

/// Parses and checks a compilation unit. `program` is set only when there are
/// no diagnostics. Throws Error(compile_timeout) once `deadline` passes.
CompileResult compile(std::string_view source, Deadline deadline);

/// Parses a standalone expression; returns null and fills `diagnostics` on
/// a syntax error.
ExprPtr parse_expression(std::string_view text, std::vector<SourceDiagnostic>& diagnostics);

// ---------------------------------------------------------------------------
// Runtime

struct Object;
using ObjectRef = std::shared_ptr<Object>;
using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string, ObjectRef>;

struct Object {
  const ClassDecl* cls = nullptr;
  std::unordered_map<std::string, Value> fields;
};

/// Runs reflective queries against a compiled program. Each query builds a
/// fresh interpreter, so static state never leaks between tests.
Invocation invoke(const Program& program, std::string_view qualified, std::span<const Literal> args, Deadline deadline);
Invocation evaluate(const Program& program, std::string_view expression, Deadline deadline);

}  // namespace gradehint::mocklang

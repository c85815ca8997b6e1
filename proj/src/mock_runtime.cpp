#include <cmath>
#include <map>

#include <fmt/format.h>

#include "mock_language.hpp"

namespace gradehint::mocklang {
namespace {

constexpr int kMaxDepth = 200;
constexpr std::uint64_t kDeadlineStride = 1024;

struct Thrown {
  std::string type;
  std::string message;
};
struct TimedOut {};
/// A class, member or constructor named by the query does not exist. Turned
/// into an absent value so the test simply fails.
struct Missing {};

const std::string kNullMessage = "Object reference not set to an instance of an object.";

bool is_real_type(std::string_view t) { return t == "double" || t == "float" || t == "decimal"; }

Value coerce(std::string_view type, Value v) {
  if (is_real_type(type))
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return v;
}

std::string format_real(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "∞" : "-∞";
  return fmt::format("{}", d);
}

std::string to_display(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "True" : "False";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          if (!x->cls) {
            auto it = x->fields.find("__type");
            return it != x->fields.end() ? std::get<std::string>(it->second) : "System.Object";
          }
          return x->cls->name;
        }
      },
      v);
}

Literal to_literal(const Value& v) {
  return std::visit(
      [&](const auto& x) -> Literal {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return Literal{};
        } else if constexpr (std::is_same_v<T, ObjectRef>) {
          return Literal{to_display(v)};
        } else {
          return Literal{x};
        }
      },
      v);
}

Value from_literal(const Literal& l) {
  return std::visit([](const auto& x) -> Value { return x; }, l.value);
}

[[noreturn]] void throw_cast(std::string_view what) {
  throw Thrown{"System.InvalidCastException", fmt::format("Specified cast is not valid ({}).", what)};
}

bool as_bool(const Value& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw_cast("expected bool");
}

bool is_numeric(const Value& v) { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v); }

double as_real(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw_cast("expected number");
}

std::int64_t as_int(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw_cast("expected integer");
}

const std::string& as_string(const Value& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (std::holds_alternative<std::monostate>(v)) throw Thrown{"System.NullReferenceException", kNullMessage};
  throw_cast("expected string");
}

std::int64_t wrap(unsigned __int128 x) { return static_cast<std::int64_t>(static_cast<std::uint64_t>(x)); }

bool values_equal(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) {
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    return as_real(a) == as_real(b);
  }
  if (a.index() != b.index()) return false;
  if (auto* o = std::get_if<ObjectRef>(&a)) return o->get() == std::get<ObjectRef>(b).get();
  return a == b;
}

struct Local {
  std::string type;
  Value value;
};

struct Frame {
  ObjectRef self;
  const ClassDecl* cls = nullptr;
  std::vector<std::map<std::string, Local, std::less<>>> scopes;

  Local* find(std::string_view name) {
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }
};

enum class Flow { normal, brk, cont, ret };

class Interpreter {
 public:
  Interpreter(const Program& prog, Deadline deadline) : prog_(prog), deadline_(deadline) {}

  Value call_static_or_instance(const ClassDecl& cls, std::string_view method, std::vector<Value> args) {
    const MethodDecl* m = find_method(&cls, method, args.size());
    if (!m) throw Missing{};
    ObjectRef self;
    if (!m->is_static) {
      if (cls.is_abstract || cls.is_static) throw Missing{};
      if (!has_ctor_with_arity(cls, 0)) throw Missing{};
      self = construct(cls, {});
    }
    return call(*m, find_owner(&cls, *m), self, std::move(args));
  }

  Value eval_standalone(const Expr& e) {
    Frame frame;
    frame.scopes.emplace_back();
    return eval(e, frame);
  }

 private:
  // -- bookkeeping ----------------------------------------------------------
  void tick() {
    if (++steps_ % kDeadlineStride == 0 && std::chrono::steady_clock::now() > deadline_) throw TimedOut{};
  }

  const ClassDecl* find_owner(const ClassDecl* cls, const MethodDecl& m) const {
    for (int guard = 0; cls && guard < 64; cls = prog_.base_of(*cls), ++guard)
      for (const auto& cand : cls->methods)
        if (&cand == &m) return cls;
    return nullptr;
  }

  const MethodDecl* find_method(const ClassDecl* cls, std::string_view name, std::size_t arity) const {
    for (int guard = 0; cls && guard < 64; cls = prog_.base_of(*cls), ++guard)
      for (const auto& m : cls->methods)
        if (m.name == name && m.params.size() == arity && !m.is_abstract) return &m;
    return nullptr;
  }

  const FieldDecl* find_field(const ClassDecl* cls, std::string_view name, bool want_static) const {
    for (int guard = 0; cls && guard < 64; cls = prog_.base_of(*cls), ++guard)
      for (const auto& f : cls->fields)
        if (f.name == name && f.is_static == want_static) return &f;
    return nullptr;
  }

  const ClassDecl* field_owner(const ClassDecl* cls, const FieldDecl& fd) const {
    for (int guard = 0; cls && guard < 64; cls = prog_.base_of(*cls), ++guard)
      for (const auto& f : cls->fields)
        if (&f == &fd) return cls;
    return nullptr;
  }

  static bool has_ctor_with_arity(const ClassDecl& cls, std::size_t n) {
    if (cls.ctors.empty()) return n == 0;
    for (const auto& c : cls.ctors)
      if (c.params.size() == n) return true;
    return false;
  }

  std::map<std::string, Value, std::less<>>& statics(const ClassDecl& cls) {
    auto [it, inserted] = statics_.try_emplace(&cls);
    if (inserted) {
      Frame frame;
      frame.cls = &cls;
      frame.scopes.emplace_back();
      for (const auto& f : cls.fields) {
        if (!f.is_static) continue;
        it->second[f.name] = f.init ? coerce(f.type, eval(*f.init, frame)) : default_value(f.type);
      }
    }
    return it->second;
  }

  static Value default_value(std::string_view type) {
    if (type == "int" || type == "long" || type == "short" || type == "byte") return std::int64_t{0};
    if (is_real_type(type)) return 0.0;
    if (type == "bool") return false;
    return std::monostate{};
  }

  // -- objects --------------------------------------------------------------
  ObjectRef construct(const ClassDecl& cls, std::vector<Value> args) {
    if (cls.is_abstract || cls.is_static)
      throw Thrown{"System.MemberAccessException", fmt::format("Cannot create an instance of '{}'.", cls.name)};
    auto obj = std::make_shared<Object>();
    obj->cls = &cls;
    init_fields(cls, obj);
    run_ctor(cls, obj, std::move(args));
    return obj;
  }

  void init_fields(const ClassDecl& cls, const ObjectRef& obj) {
    if (auto* base = prog_.base_of(cls)) init_fields(*base, obj);
    Frame frame;
    frame.self = obj;
    frame.cls = &cls;
    frame.scopes.emplace_back();
    for (const auto& f : cls.fields) {
      if (f.is_static) continue;
      obj->fields[f.name] = f.init ? coerce(f.type, eval(*f.init, frame)) : default_value(f.type);
    }
  }

  void run_ctor(const ClassDecl& cls, const ObjectRef& obj, std::vector<Value> args) {
    const CtorDecl* ctor = nullptr;
    for (const auto& c : cls.ctors)
      if (c.params.size() == args.size()) ctor = &c;
    if (!ctor) {
      if (!cls.ctors.empty() || !args.empty())
        throw Thrown{"System.MissingMethodException",
                     fmt::format("Constructor on type '{}' with {} argument(s) not found.", cls.name, args.size())};
      if (auto* base = prog_.base_of(cls)) run_ctor(*base, obj, {});
      return;
    }
    enter();
    Frame frame;
    frame.self = obj;
    frame.cls = &cls;
    frame.scopes.emplace_back();
    for (std::size_t i = 0; i < args.size(); ++i)
      frame.scopes.back()[ctor->params[i].name] = Local{ctor->params[i].type, coerce(ctor->params[i].type, args[i])};
    if (auto* base = prog_.base_of(cls)) {
      std::vector<Value> base_args;
      for (const auto& a : ctor->base_args) base_args.push_back(eval(*a, frame));
      run_ctor(*base, obj, std::move(base_args));
    } else if (ctor->has_base_call && !cls.base.empty()) {
      // Built-in base such as Exception(message).
      if (!ctor->base_args.empty()) obj->fields["Message"] = eval(*ctor->base_args.front(), frame);
    }
    Value ignored;
    exec_body(ctor->body, frame, ignored);
    --depth_;
  }

  void enter() {
    if (++depth_ > kMaxDepth)
      throw Thrown{"System.StackOverflowException", "Exception of type 'System.StackOverflowException' was thrown."};
  }

  Value call(const MethodDecl& m, const ClassDecl* owner, const ObjectRef& self, std::vector<Value> args) {
    enter();
    Frame frame;
    frame.self = m.is_static ? nullptr : self;
    frame.cls = owner;
    frame.scopes.emplace_back();
    for (std::size_t i = 0; i < args.size(); ++i)
      frame.scopes.back()[m.params[i].name] = Local{m.params[i].type, coerce(m.params[i].type, std::move(args[i]))};
    Value result;
    exec_body(m.body, frame, result);
    --depth_;
    return coerce(m.return_type, std::move(result));
  }

  /// Virtual dispatch: start the lookup at the runtime class.
  Value call_on_object(const ObjectRef& obj, std::string_view name, std::vector<Value> args) {
    const MethodDecl* m = find_method(obj->cls, name, args.size());
    if (!m) throw Missing{};
    return call(*m, find_owner(obj->cls, *m), obj, std::move(args));
  }

  // -- statements -----------------------------------------------------------
  Flow exec_body(const std::vector<StmtPtr>& body, Frame& frame, Value& result) {
    frame.scopes.emplace_back();
    Flow flow = Flow::normal;
    for (const auto& s : body) {
      flow = exec(*s, frame, result);
      if (flow != Flow::normal) break;
    }
    frame.scopes.pop_back();
    return flow;
  }

  Flow exec_scoped(const Stmt& s, Frame& frame, Value& result) {
    frame.scopes.emplace_back();
    Flow f = exec(s, frame, result);
    frame.scopes.pop_back();
    return f;
  }

  Flow exec(const Stmt& s, Frame& frame, Value& result) {
    tick();
    switch (s.kind) {
      case Stmt::Kind::block: return exec_body(s.body, frame, result);
      case Stmt::Kind::var_decl: {
        Value v = s.value ? eval(*s.value, frame) : default_value(s.type);
        frame.scopes.back()[s.name] = Local{s.type, coerce(s.type, std::move(v))};
        return Flow::normal;
      }
      case Stmt::Kind::assign: {
        Value rhs = eval(*s.value, frame);
        if (s.op != "=") rhs = binary(s.op.substr(0, 1), eval(*s.target, frame), rhs);
        store(*s.target, std::move(rhs), frame);
        return Flow::normal;
      }
      case Stmt::Kind::incdec: {
        Value cur = eval(*s.target, frame);
        store(*s.target, binary(s.op == "++" ? "+" : "-", cur, std::int64_t{1}), frame);
        return Flow::normal;
      }
      case Stmt::Kind::ret:
        result = s.value ? eval(*s.value, frame) : Value{};
        return Flow::ret;
      case Stmt::Kind::if_:
        if (as_bool(eval(*s.cond, frame))) return exec_scoped(*s.then_branch, frame, result);
        if (s.else_branch) return exec_scoped(*s.else_branch, frame, result);
        return Flow::normal;
      case Stmt::Kind::while_:
        while (as_bool(eval(*s.cond, frame))) {
          tick();
          Flow f = exec_scoped(*s.then_branch, frame, result);
          if (f == Flow::brk) break;
          if (f == Flow::ret) return f;
        }
        return Flow::normal;
      case Stmt::Kind::for_: {
        frame.scopes.emplace_back();
        Flow out = Flow::normal;
        if (s.init) exec(*s.init, frame, result);
        while (!s.cond || as_bool(eval(*s.cond, frame))) {
          tick();
          Flow f = exec_scoped(*s.then_branch, frame, result);
          if (f == Flow::brk) break;
          if (f == Flow::ret) {
            out = f;
            break;
          }
          if (s.step) exec(*s.step, frame, result);
        }
        frame.scopes.pop_back();
        return out;
      }
      case Stmt::Kind::brk: return Flow::brk;
      case Stmt::Kind::cont: return Flow::cont;
      case Stmt::Kind::throw_: {
        Value v = eval(*s.value, frame);
        auto* obj = std::get_if<ObjectRef>(&v);
        if (!obj) throw Thrown{"System.NullReferenceException", kNullMessage};
        std::string type = to_display(v);
        auto msg = (*obj)->fields.find("Message");
        std::string message = msg != (*obj)->fields.end() && std::holds_alternative<std::string>(msg->second)
                                  ? std::get<std::string>(msg->second)
                                  : fmt::format("Exception of type '{}' was thrown.", type);
        throw Thrown{type, message};
      }
      case Stmt::Kind::expr:
        eval(*s.value, frame);
        return Flow::normal;
    }
    return Flow::normal;
  }

  void store(const Expr& target, Value v, Frame& frame) {
    if (target.kind == Expr::Kind::name) {
      if (Local* l = frame.find(target.text)) {
        l->value = coerce(l->type, std::move(v));
        return;
      }
      if (frame.self) {
        if (const FieldDecl* f = find_field(frame.self->cls, target.text, false)) {
          frame.self->fields[target.text] = coerce(f->type, std::move(v));
          return;
        }
      }
      if (const FieldDecl* f = find_field(frame.cls, target.text, true)) {
        statics(*field_owner(frame.cls, *f))[target.text] = coerce(f->type, std::move(v));
        return;
      }
      throw Missing{};
    }
    if (target.kind == Expr::Kind::member) {
      if (target.lhs->kind == Expr::Kind::name && !frame.find(target.lhs->text) && !instance_field(frame, target.lhs->text)) {
        if (const ClassDecl* cls = prog_.find(target.lhs->text)) {
          const FieldDecl* f = find_field(cls, target.text, true);
          if (!f) throw Missing{};
          statics(*field_owner(cls, *f))[target.text] = coerce(f->type, std::move(v));
          return;
        }
      }
      Value obj = eval(*target.lhs, frame);
      auto* ref = std::get_if<ObjectRef>(&obj);
      if (!ref) throw Thrown{"System.NullReferenceException", kNullMessage};
      const FieldDecl* f = find_field((*ref)->cls, target.text, false);
      if (!f) throw Missing{};
      (*ref)->fields[target.text] = coerce(f->type, std::move(v));
      return;
    }
    throw Missing{};
  }

  bool instance_field(const Frame& frame, std::string_view name) const {
    return frame.self && find_field(frame.self->cls, name, false);
  }

  // -- expressions ----------------------------------------------------------
  Value eval(const Expr& e, Frame& frame) {
    tick();
    switch (e.kind) {
      case Expr::Kind::integer: return e.ival;
      case Expr::Kind::real: return e.dval;
      case Expr::Kind::string: return e.text;
      case Expr::Kind::boolean: return e.bval;
      case Expr::Kind::null: return std::monostate{};
      case Expr::Kind::self:
        if (!frame.self) throw Missing{};
        return frame.self;
      case Expr::Kind::name: return load_name(e.text, frame);
      case Expr::Kind::unary: {
        Value v = eval(*e.lhs, frame);
        if (e.text == "!") return !as_bool(v);
        if (auto* i = std::get_if<std::int64_t>(&v)) return wrap(-static_cast<unsigned __int128>(*i));
        return -as_real(v);
      }
      case Expr::Kind::binary: {
        if (e.text == "&&") return as_bool(eval(*e.lhs, frame)) && as_bool(eval(*e.rhs, frame));
        if (e.text == "||") return as_bool(eval(*e.lhs, frame)) || as_bool(eval(*e.rhs, frame));
        Value l = eval(*e.lhs, frame);
        Value r = eval(*e.rhs, frame);
        return binary(e.text, l, r);
      }
      case Expr::Kind::ternary:
        return as_bool(eval(*e.lhs, frame)) ? eval(*e.rhs, frame) : eval(*e.extra, frame);
      case Expr::Kind::member: return load_member(e, frame);
      case Expr::Kind::call: return eval_call(e, frame);
      case Expr::Kind::construct: {
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(*a, frame));
        if (const ClassDecl* cls = prog_.find(e.text)) {
          if (!has_ctor_with_arity(*cls, args.size()) && !frame.cls) throw Missing{};
          return construct(*cls, std::move(args));
        }
        if (e.text.ends_with("Exception")) {
          auto obj = std::make_shared<Object>();
          obj->fields["__type"] = e.text.find('.') == std::string::npos ? "System." + e.text : e.text;
          obj->fields["Message"] = args.empty() ? fmt::format("Exception of type 'System.{}' was thrown.", e.text)
                                                : to_display(args.front());
          return obj;
        }
        throw Missing{};
      }
    }
    throw Missing{};
  }

  Value load_name(std::string_view name, Frame& frame) {
    if (Local* l = frame.find(name)) return l->value;
    if (frame.self) {
      auto it = frame.self->fields.find(std::string(name));
      if (it != frame.self->fields.end()) return it->second;
    }
    if (frame.cls) {
      if (const FieldDecl* f = find_field(frame.cls, name, true)) return statics(*field_owner(frame.cls, *f))[f->name];
    }
    throw Missing{};
  }

  Value load_member(const Expr& e, Frame& frame) {
    if (e.lhs->kind == Expr::Kind::name && !frame.find(e.lhs->text) && !instance_field(frame, e.lhs->text)) {
      if (const ClassDecl* cls = prog_.find(e.lhs->text)) {
        const FieldDecl* f = find_field(cls, e.text, true);
        if (!f) throw Missing{};
        return statics(*field_owner(cls, *f))[f->name];
      }
      if (e.lhs->text == "int" && e.text == "MaxValue") return std::int64_t{2147483647};
      if (e.lhs->text == "int" && e.text == "MinValue") return std::int64_t{-2147483648LL};
      if (e.lhs->text == "Math" && e.text == "PI") return M_PI;
      if ((e.lhs->text == "string" || e.lhs->text == "String") && e.text == "Empty") return std::string();
    }
    Value obj = eval(*e.lhs, frame);
    if (std::holds_alternative<std::monostate>(obj)) throw Thrown{"System.NullReferenceException", kNullMessage};
    if (auto* s = std::get_if<std::string>(&obj)) {
      if (e.text == "Length") return static_cast<std::int64_t>(s->size());
      throw Missing{};
    }
    if (auto* ref = std::get_if<ObjectRef>(&obj)) {
      auto it = (*ref)->fields.find(e.text);
      if (it != (*ref)->fields.end()) return it->second;
    }
    throw Missing{};
  }

  std::vector<Value> eval_args(const Expr& call, Frame& frame) {
    std::vector<Value> args;
    args.reserve(call.args.size());
    for (const auto& a : call.args) args.push_back(eval(*a, frame));
    return args;
  }

  Value eval_call(const Expr& e, Frame& frame) {
    const Expr& callee = *e.lhs;
    if (callee.kind == Expr::Kind::name) {
      auto args = eval_args(e, frame);
      if (callee.text == "__truncate") {
        if (auto* d = std::get_if<double>(&args.at(0))) {
          if (!std::isfinite(*d) || std::abs(*d) > 9.2e18) return std::int64_t{std::numeric_limits<std::int64_t>::min()};
          return static_cast<std::int64_t>(*d);
        }
        return args.at(0);
      }
      if (!frame.cls) throw Missing{};
      if (frame.self) {
        if (const MethodDecl* m = find_method(frame.self->cls, callee.text, args.size()))
          return call(*m, find_owner(frame.self->cls, *m), frame.self, std::move(args));
      }
      const MethodDecl* m = find_method(frame.cls, callee.text, args.size());
      if (!m || (!m->is_static && !frame.self)) throw Missing{};
      return call(*m, find_owner(frame.cls, *m), frame.self, std::move(args));
    }
    if (callee.kind != Expr::Kind::member) throw Missing{};
    const Expr& recv = *callee.lhs;
    const std::string& name = callee.text;

    if (recv.kind == Expr::Kind::name && !frame.find(recv.text) && !instance_field(frame, recv.text)) {
      if (const ClassDecl* cls = prog_.find(recv.text)) {
        auto args = eval_args(e, frame);
        const MethodDecl* m = find_method(cls, name, args.size());
        if (!m || !m->is_static) throw Missing{};
        return call(*m, find_owner(cls, *m), nullptr, std::move(args));
      }
      if (recv.text == "base" && frame.self && frame.cls) {
        auto args = eval_args(e, frame);
        const ClassDecl* base = prog_.base_of(*frame.cls);
        const MethodDecl* m = base ? find_method(base, name, args.size()) : nullptr;
        if (!m) throw Missing{};
        return call(*m, find_owner(base, *m), frame.self, std::move(args));
      }
      if (recv.text == "Console" || recv.text == "Math" || recv.text == "string" || recv.text == "String" ||
          recv.text == "int" || recv.text == "double")
        return builtin_static(recv.text, name, eval_args(e, frame));
    }

    Value obj = eval(recv, frame);
    auto args = eval_args(e, frame);
    if (std::holds_alternative<std::monostate>(obj)) throw Thrown{"System.NullReferenceException", kNullMessage};
    if (auto* ref = std::get_if<ObjectRef>(&obj)) {
      if ((*ref)->cls) {
        if (find_method((*ref)->cls, name, args.size())) return call_on_object(*ref, name, std::move(args));
      }
      if (name == "ToString" && args.empty()) return to_display(obj);
      if (name == "Equals" && args.size() == 1) return values_equal(obj, args[0]);
      throw Missing{};
    }
    return builtin_instance(obj, name, args);
  }

  Value builtin_static(std::string_view type, std::string_view name, const std::vector<Value>& a) {
    auto need = [&](std::size_t n) {
      if (a.size() != n) throw Missing{};
    };
    if (type == "Console") {
      if (name == "WriteLine" || name == "Write") return std::monostate{};
      throw Missing{};
    }
    if (type == "Math") {
      if (name == "Abs") {
        need(1);
        if (auto* i = std::get_if<std::int64_t>(&a[0])) return *i < 0 ? -*i : *i;
        return std::abs(as_real(a[0]));
      }
      if (name == "Max" || name == "Min") {
        need(2);
        bool max = name == "Max";
        if (std::holds_alternative<std::int64_t>(a[0]) && std::holds_alternative<std::int64_t>(a[1])) {
          auto x = std::get<std::int64_t>(a[0]), y = std::get<std::int64_t>(a[1]);
          return max ? std::max(x, y) : std::min(x, y);
        }
        return max ? std::max(as_real(a[0]), as_real(a[1])) : std::min(as_real(a[0]), as_real(a[1]));
      }
      if (name == "Sqrt") return (need(1), std::sqrt(as_real(a[0])));
      if (name == "Pow") return (need(2), std::pow(as_real(a[0]), as_real(a[1])));
      if (name == "Floor") return (need(1), std::floor(as_real(a[0])));
      if (name == "Ceiling") return (need(1), std::ceil(as_real(a[0])));
      if (name == "Round") {
        if (a.size() == 1) return std::nearbyint(as_real(a[0]));
        need(2);
        double scale = std::pow(10.0, static_cast<double>(as_int(a[1])));
        return std::nearbyint(as_real(a[0]) * scale) / scale;
      }
      throw Missing{};
    }
    if (type == "int" && name == "Parse") {
      need(1);
      const std::string& s = as_string(a[0]);
      std::size_t used = 0;
      try {
        auto v = std::stoll(s, &used);
        if (used == s.size()) return static_cast<std::int64_t>(v);
      } catch (const std::exception&) {
      }
      throw Thrown{"System.FormatException", fmt::format("The input string '{}' was not in a correct format.", s)};
    }
    if ((type == "string" || type == "String") && name == "IsNullOrEmpty") {
      need(1);
      if (std::holds_alternative<std::monostate>(a[0])) return true;
      return as_string(a[0]).empty();
    }
    if ((type == "string" || type == "String") && name == "Concat") {
      std::string out;
      for (const auto& v : a) out += to_display(v);
      return out;
    }
    throw Missing{};
  }

  Value builtin_instance(const Value& recv, std::string_view name, const std::vector<Value>& a) {
    if (name == "ToString" && a.empty()) return to_display(recv);
    if (name == "Equals" && a.size() == 1) return values_equal(recv, a[0]);
    auto* sp = std::get_if<std::string>(&recv);
    if (!sp) throw Missing{};
    const std::string& s = *sp;
    auto out_of_range = [] {
      return Thrown{"System.ArgumentOutOfRangeException", "Index and length must refer to a location within the string."};
    };
    if (name == "ToUpper" || name == "ToLower") {
      std::string r = s;
      for (char& c : r) c = static_cast<char>(name == "ToUpper" ? std::toupper(static_cast<unsigned char>(c))
                                                                : std::tolower(static_cast<unsigned char>(c)));
      return r;
    }
    if (name == "Trim" && a.empty()) {
      auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
    }
    if (name == "Contains" && a.size() == 1) return s.find(as_string(a[0])) != std::string::npos;
    if (name == "StartsWith" && a.size() == 1) return s.starts_with(as_string(a[0]));
    if (name == "EndsWith" && a.size() == 1) return s.ends_with(as_string(a[0]));
    if (name == "IndexOf" && a.size() == 1) {
      auto p = s.find(as_string(a[0]));
      return p == std::string::npos ? std::int64_t{-1} : static_cast<std::int64_t>(p);
    }
    if (name == "Replace" && a.size() == 2) {
      const std::string& from = as_string(a[0]);
      const std::string& to = as_string(a[1]);
      if (from.empty()) throw Thrown{"System.ArgumentException", "String cannot be of zero length."};
      std::string r;
      std::size_t i = 0;
      for (std::size_t p; (p = s.find(from, i)) != std::string::npos; i = p + from.size()) r += s.substr(i, p - i) + to;
      return r + s.substr(i);
    }
    if (name == "Substring" && (a.size() == 1 || a.size() == 2)) {
      auto start = as_int(a[0]);
      auto len = a.size() == 2 ? as_int(a[1]) : static_cast<std::int64_t>(s.size()) - start;
      if (start < 0 || len < 0 || start + len > static_cast<std::int64_t>(s.size())) throw out_of_range();
      return s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
    }
    throw Missing{};
  }

  Value binary(std::string_view op, const Value& l, const Value& r) {
    if (op == "==") return values_equal(l, r);
    if (op == "!=") return !values_equal(l, r);
    if (op == "+" && (std::holds_alternative<std::string>(l) || std::holds_alternative<std::string>(r)))
      return to_display(l) + to_display(r);
    if (op == "<" || op == ">" || op == "<=" || op == ">=") {
      if (std::holds_alternative<std::int64_t>(l) && std::holds_alternative<std::int64_t>(r)) {
        auto x = std::get<std::int64_t>(l), y = std::get<std::int64_t>(r);
        return op == "<" ? x < y : op == ">" ? x > y : op == "<=" ? x <= y : x >= y;
      }
      double x = as_real(l), y = as_real(r);
      return op == "<" ? x < y : op == ">" ? x > y : op == "<=" ? x <= y : x >= y;
    }
    if (std::holds_alternative<std::int64_t>(l) && std::holds_alternative<std::int64_t>(r)) {
      auto x = std::get<std::int64_t>(l), y = std::get<std::int64_t>(r);
      using U = unsigned __int128;
      if (op == "+") return wrap(U(x) + U(y));
      if (op == "-") return wrap(U(x) - U(y));
      if (op == "*") return wrap(U(x) * U(y));
      if (op == "/" || op == "%") {
        if (y == 0) throw Thrown{"System.DivideByZeroException", "Attempted to divide by zero."};
        if (y == -1) return op == "/" ? wrap(-U(x)) : std::int64_t{0};
        return op == "/" ? x / y : x % y;
      }
    }
    if (is_numeric(l) && is_numeric(r)) {
      double x = as_real(l), y = as_real(r);
      if (op == "+") return x + y;
      if (op == "-") return x - y;
      if (op == "*") return x * y;
      if (op == "/") return x / y;
      if (op == "%") return std::fmod(x, y);
    }
    if (std::holds_alternative<std::monostate>(l) || std::holds_alternative<std::monostate>(r))
      throw Thrown{"System.NullReferenceException", kNullMessage};
    throw_cast(fmt::format("operator {}", op));
  }

  const Program& prog_;
  Deadline deadline_;
  std::uint64_t steps_ = 0;
  int depth_ = 0;
  std::map<const ClassDecl*, std::map<std::string, Value, std::less<>>> statics_;
};

template <class F>
Invocation guarded(F&& body) {
  try {
    return Invocation::of(to_literal(body()));
  } catch (const Thrown& t) {
    return Invocation::thrown(t.type, t.message);
  } catch (const TimedOut&) {
    return Invocation::timeout();
  } catch (const Missing&) {
    return Invocation{};
  }
}

}  // namespace

Invocation invoke(const Program& program, std::string_view qualified, std::span<const Literal> args, Deadline deadline) {
  auto dot = qualified.rfind('.');
  if (dot == std::string_view::npos) return Invocation{};
  const ClassDecl* cls = program.find(qualified.substr(0, dot));
  if (!cls) return Invocation{};
  std::vector<Value> values;
  for (const auto& a : args) values.push_back(from_literal(a));
  return guarded([&] {
    Interpreter interp(program, deadline);
    return interp.call_static_or_instance(*cls, qualified.substr(dot + 1), std::move(values));
  });
}

Invocation evaluate(const Program& program, std::string_view expression, Deadline deadline) {
  std::vector<SourceDiagnostic> diags;
  auto expr = parse_expression(expression, diags);
  if (!expr) return Invocation{};
  return guarded([&] {
    Interpreter interp(program, deadline);
    return interp.eval_standalone(*expr);
  });
}

}  // namespace gradehint::mocklang

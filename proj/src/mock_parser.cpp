#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "gradehint/error.hpp"
#include "mock_language.hpp"

namespace gradehint::mocklang {

const ClassDecl* Program::find(std::string_view name) const {
  for (const auto& c : classes)
    if (c->name == name) return c.get();
  return nullptr;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct Token {
  enum class Kind { ident, integer, real, string, interpolated, punct, end };
  Kind kind = Kind::end;
  std::string text;
  std::int64_t ival = 0;
  double dval = 0;
  int line = 1;
  int col = 1;
  int end_line = 1;
  int end_col = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "class", "public", "private", "protected", "internal", "static", "new", "return", "if", "else",
    "while", "for", "true", "false", "null", "this", "throw", "using", "namespace", "void", "int",
    "long", "short", "byte", "bool", "string", "double", "float", "decimal", "char", "var", "object",
    "break", "continue", "base", "abstract", "virtual", "override", "sealed", "readonly", "const"};

const std::set<std::string, std::less<>> kTypeKeywords = {"int", "long", "short", "byte", "bool", "string", "double",
                                                          "float", "decimal", "char", "var", "object", "void"};

const std::set<std::string, std::less<>> kModifiers = {"public",   "private", "protected", "internal",
                                                       "static",   "abstract", "virtual",  "override",
                                                       "sealed",   "readonly", "const"};

bool is_access(std::string_view s) {
  return s == "public" || s == "private" || s == "protected" || s == "internal";
}

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<SourceDiagnostic>& diags) : src_(src), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Token::Kind::end;
        t.end_line = line_;
        t.end_col = col_;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
        t.kind = Token::Kind::ident;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (c == '"' || (c == '$' && peek(1) == '"')) {
        bool interp = c == '$';
        if (interp) take();
        lex_string(t, '"');
        t.kind = interp ? Token::Kind::interpolated : Token::Kind::string;
      } else if (c == '\'') {
        lex_string(t, '\'');
        t.kind = Token::Kind::string;
      } else {
        static const char* kTwo[] = {"==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "=>"};
        bool matched = false;
        for (const char* op : kTwo) {
          if (src_.substr(pos_, 2) == op) {
            t.text += take();
            t.text += take();
            matched = true;
            break;
          }
        }
        if (!matched) {
          static const std::string_view kSingle = "{}()[];,.+-*/%<>=!?:";
          if (kSingle.find(c) == std::string_view::npos) {
            diags_.push_back({line_, col_, "CS1056", fmt::format("Unexpected character '{}'", c)});
            take();
            continue;
          }
          t.text += take();
        }
        t.kind = Token::Kind::punct;
      }
      t.end_line = line_;
      t.end_col = col_;
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_trivia() {
    for (;;) {
      if (pos_ >= src_.size()) return;
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (c == '/' && peek(1) == '*') {
        take();
        take();
        while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) take();
        if (pos_ < src_.size()) {
          take();
          take();
        }
      } else if (c == '#' && at_line_start()) {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else {
        return;
      }
    }
  }

  bool at_line_start() const {
    for (std::size_t i = pos_; i > 0; --i) {
      char p = src_[i - 1];
      if (p == '\n') return true;
      if (p != ' ' && p != '\t') return false;
    }
    return true;
  }

  void lex_number(Token& t) {
    std::string digits;
    while (std::isdigit(static_cast<unsigned char>(peek()))) digits += take();
    bool real = false;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      real = true;
      digits += take();
      while (std::isdigit(static_cast<unsigned char>(peek()))) digits += take();
    }
    char suffix = static_cast<char>(std::tolower(static_cast<unsigned char>(peek())));
    if (suffix == 'd' || suffix == 'f' || suffix == 'm') {
      real = true;
      take();
    } else if (suffix == 'l') {
      take();
    }
    t.text = digits;
    if (real) {
      t.kind = Token::Kind::real;
      t.dval = std::stod(digits);
    } else {
      t.kind = Token::Kind::integer;
      try {
        t.ival = std::stoll(digits);
      } catch (const std::out_of_range&) {
        diags_.push_back({t.line, t.col, "CS1021", "Integral constant is too large"});
      }
    }
  }

  void lex_string(Token& t, char quote) {
    take();
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') {
        diags_.push_back({t.line, t.col, "CS1010", "Newline in constant"});
        return;
      }
      char c = take();
      if (c == quote) return;
      if (c == '\\' && pos_ < src_.size()) {
        char e = take();
        switch (e) {
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          case '0': t.text += '\0'; break;
          default: t.text += e;
        }
      } else {
        t.text += c;
      }
    }
  }

  std::string_view src_;
  std::vector<SourceDiagnostic>& diags_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

struct SyntaxAbort {};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<SourceDiagnostic>& diags, Deadline deadline)
      : toks_(std::move(tokens)), diags_(diags), deadline_(deadline) {}

  std::unique_ptr<Program> program() {
    auto prog = std::make_unique<Program>();
    while (!at_end()) {
      check_deadline();
      if (is_word("using")) {
        while (!at_end() && !is_punct(";")) advance();
        expect_semicolon();
      } else if (is_word("namespace")) {
        advance();
        qualified_name();
        if (is_punct(";")) {
          advance();
        } else {
          expect("{", "CS1514", "{ expected");
          while (!at_end() && !is_punct("}")) {
            if (!class_or_skip(*prog)) continue;
          }
          expect("}", "CS1513", "} expected");
        }
      } else {
        class_or_skip(*prog);
      }
    }
    return prog;
  }

  ExprPtr standalone_expression() {
    auto e = expression();
    if (!at_end()) error_here("CS1002", "; expected");
    return e;
  }

 private:
  // -- token helpers --------------------------------------------------------
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t n = 1) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
  bool at_end() const { return cur().kind == Token::Kind::end; }
  void advance() {
    if (!at_end()) ++pos_;
  }
  bool is_punct(std::string_view p) const { return cur().kind == Token::Kind::punct && cur().text == p; }
  bool is_word(std::string_view w) const { return cur().kind == Token::Kind::ident && cur().text == w; }
  bool is_plain_ident(const Token& t) const { return t.kind == Token::Kind::ident && !kKeywords.contains(t.text); }
  bool is_type_token(const Token& t) const {
    return t.kind == Token::Kind::ident && (kTypeKeywords.contains(t.text) || !kKeywords.contains(t.text));
  }

  void check_deadline() {
    if (std::chrono::steady_clock::now() > deadline_) fail(Errc::compile_timeout, "compilation exceeded its time limit");
  }

  void error_at(int line, int col, std::string code, std::string msg) {
    if (diags_.size() < 100) diags_.push_back({line, col, std::move(code), std::move(msg)});
  }
  void error_here(std::string code, std::string msg) { error_at(cur().line, cur().col, std::move(code), std::move(msg)); }
  /// Missing-token errors are reported right after the previous token.
  void error_after_prev(std::string code, std::string msg) {
    if (pos_ == 0) {
      error_here(std::move(code), std::move(msg));
    } else {
      error_at(prev().end_line, prev().end_col, std::move(code), std::move(msg));
    }
  }

  bool expect(std::string_view p, const char* code, const char* msg) {
    if (is_punct(p)) {
      advance();
      return true;
    }
    error_after_prev(code, msg);
    return false;
  }
  void expect_semicolon() { expect(";", "CS1002", "; expected"); }

  std::string identifier() {
    if (is_plain_ident(cur())) {
      std::string s = cur().text;
      advance();
      return s;
    }
    if (cur().kind == Token::Kind::ident) {
      error_here("CS1041", fmt::format("Identifier expected; '{}' is a keyword", cur().text));
    } else {
      error_here("CS1001", "Identifier expected");
    }
    throw SyntaxAbort{};
  }

  std::string qualified_name() {
    std::string name = identifier();
    while (is_punct(".")) {
      advance();
      name += "." + identifier();
    }
    return name;
  }

  std::string type_name() {
    if (!is_type_token(cur())) {
      error_here("CS1001", "Identifier expected");
      throw SyntaxAbort{};
    }
    std::string t = cur().text;
    advance();
    if (is_punct("[") && peek().kind == Token::Kind::punct && peek().text == "]") {
      advance();
      advance();
      t += "[]";
    }
    return t;
  }

  /// Skips to just past the next ';' or to (not past) the next '}' at the
  /// current nesting level.
  void sync_statement() {
    int depth = 0;
    while (!at_end()) {
      if (is_punct("{")) ++depth;
      if (is_punct("}")) {
        if (depth == 0) return;
        --depth;
      }
      if (is_punct(";") && depth == 0) {
        advance();
        return;
      }
      advance();
    }
  }

  // -- declarations ---------------------------------------------------------
  bool class_or_skip(Program& prog) {
    check_deadline();
    std::size_t start = pos_;
    std::string access;
    bool is_static = false;
    bool is_abstract = false;
    while (cur().kind == Token::Kind::ident && kModifiers.contains(cur().text)) {
      if (is_access(cur().text)) access = cur().text;
      if (cur().text == "static") is_static = true;
      if (cur().text == "abstract") is_abstract = true;
      advance();
    }
    if (!is_word("class")) {
      if (is_punct("}") && pos_ == start) return false;
      error_here("CS1022", "Type or namespace definition, or end-of-file expected");
      advance();
      return false;
    }
    advance();
    auto cls = std::make_unique<ClassDecl>();
    cls->line = prev().line;
    cls->access = access.empty() ? "internal" : access;
    cls->is_static = is_static;
    cls->is_abstract = is_abstract;
    try {
      cls->name = identifier();
      if (is_punct(":")) {
        advance();
        cls->base = qualified_name();
      }
    } catch (const SyntaxAbort&) {
      while (!at_end() && !is_punct("{")) advance();
    }
    if (!expect("{", "CS1514", "{ expected")) {
      // Recover by treating the rest as the class body.
    }
    while (!at_end() && !is_punct("}")) {
      check_deadline();
      std::size_t before = pos_;
      try {
        member(*cls);
      } catch (const SyntaxAbort&) {
        sync_member();
      }
      if (pos_ == before) advance();
    }
    expect("}", "CS1513", "} expected");
    prog.classes.push_back(std::move(cls));
    return true;
  }

  void sync_member() {
    int depth = 0;
    while (!at_end()) {
      if (is_punct("{")) ++depth;
      if (is_punct("}")) {
        if (depth == 0) return;
        --depth;
        if (depth == 0) {
          advance();
          return;
        }
      }
      if (is_punct(";") && depth == 0) {
        advance();
        return;
      }
      advance();
    }
  }

  void member(ClassDecl& cls) {
    std::string access;
    bool is_static = false;
    bool is_abstract = false;
    int line = cur().line;
    while (cur().kind == Token::Kind::ident && kModifiers.contains(cur().text)) {
      if (is_access(cur().text)) access = cur().text;
      if (cur().text == "static" || cur().text == "const") is_static = true;
      if (cur().text == "abstract") is_abstract = true;
      advance();
    }
    if (access.empty()) access = "private";

    if (is_word("class")) {
      error_here("CS1519", "Nested classes are not supported");
      throw SyntaxAbort{};
    }

    // Constructor: ClassName '('
    if (cur().kind == Token::Kind::ident && cur().text == cls.name && peek().kind == Token::Kind::punct &&
        peek().text == "(") {
      advance();
      CtorDecl ctor;
      ctor.line = line;
      ctor.access = access;
      ctor.params = parameters();
      if (is_punct(":")) {
        advance();
        if (!is_word("base")) {
          error_here("CS1018", "Keyword 'this' or 'base' expected");
          throw SyntaxAbort{};
        }
        advance();
        ctor.has_base_call = true;
        ctor.base_args = arguments();
      }
      ctor.body = block_body();
      cls.ctors.push_back(std::move(ctor));
      return;
    }

    if (!is_type_token(cur())) {
      error_here("CS1519",
                 fmt::format("Invalid token '{}' in class, record, struct, or interface member declaration", cur().text));
      throw SyntaxAbort{};
    }
    std::string type = type_name();
    std::string name = identifier();

    if (is_punct("(")) {
      MethodDecl m;
      m.line = line;
      m.access = access;
      m.return_type = type;
      m.name = name;
      m.is_static = is_static;
      m.is_abstract = is_abstract;
      m.params = parameters();
      if (is_abstract && is_punct(";")) {
        advance();
      } else if (is_punct("=>")) {
        advance();
        auto s = std::make_unique<Stmt>();
        s->line = cur().line;
        s->kind = type == "void" ? Stmt::Kind::expr : Stmt::Kind::ret;
        s->value = expression();
        expect_semicolon();
        m.body.push_back(std::move(s));
      } else {
        m.body = block_body();
      }
      cls.methods.push_back(std::move(m));
      return;
    }

    FieldDecl f;
    f.line = line;
    f.access = access;
    f.type = type;
    f.name = name;
    f.is_static = is_static;
    if (is_punct("{")) {
      f.is_property = true;
      auto_property_accessors();
      if (is_punct("=")) {
        advance();
        f.init = expression();
        expect_semicolon();
      }
    } else {
      if (is_punct("=")) {
        advance();
        f.init = expression();
      }
      expect_semicolon();
    }
    cls.fields.push_back(std::move(f));
  }

  void auto_property_accessors() {
    advance();  // {
    while (!at_end() && !is_punct("}")) {
      if (cur().kind == Token::Kind::ident && is_access(cur().text)) advance();
      if (!(is_word("get") || is_word("set") || is_word("init"))) {
        error_here("CS1014", "A get or set accessor expected");
        throw SyntaxAbort{};
      }
      advance();
      expect_semicolon();
    }
    expect("}", "CS1513", "} expected");
  }

  std::vector<Param> parameters() {
    std::vector<Param> ps;
    expect("(", "CS1003", "Syntax error, '(' expected");
    if (is_punct(")")) {
      advance();
      return ps;
    }
    for (;;) {
      Param p;
      p.type = type_name();
      p.name = identifier();
      ps.push_back(std::move(p));
      if (is_punct(",")) {
        advance();
        continue;
      }
      break;
    }
    expect(")", "CS1026", ") expected");
    return ps;
  }

  std::vector<ExprPtr> arguments() {
    std::vector<ExprPtr> args;
    expect("(", "CS1003", "Syntax error, '(' expected");
    if (is_punct(")")) {
      advance();
      return args;
    }
    for (;;) {
      args.push_back(expression());
      if (is_punct(",")) {
        advance();
        continue;
      }
      break;
    }
    expect(")", "CS1026", ") expected");
    return args;
  }

  std::vector<StmtPtr> block_body() {
    std::vector<StmtPtr> body;
    if (!expect("{", "CS1514", "{ expected")) throw SyntaxAbort{};
    while (!at_end() && !is_punct("}")) {
      check_deadline();
      std::size_t before = pos_;
      try {
        body.push_back(statement());
      } catch (const SyntaxAbort&) {
        sync_statement();
      }
      if (pos_ == before) advance();
    }
    expect("}", "CS1513", "} expected");
    return body;
  }

  // -- statements -----------------------------------------------------------
  bool looks_like_declaration() const {
    const Token& t = cur();
    if (t.kind != Token::Kind::ident) return false;
    if (kTypeKeywords.contains(t.text) && t.text != "void") return true;
    if (kKeywords.contains(t.text)) return false;
    const Token& n = peek();
    if (is_plain_ident(n)) return true;
    // T[] name
    return n.kind == Token::Kind::punct && n.text == "[" && peek(2).kind == Token::Kind::punct && peek(2).text == "]";
  }

  StmtPtr statement() {
    auto s = std::make_unique<Stmt>();
    s->line = cur().line;
    if (is_punct("{")) {
      s->kind = Stmt::Kind::block;
      s->body = block_body();
      return s;
    }
    if (is_punct(";")) {
      advance();
      s->kind = Stmt::Kind::block;
      return s;
    }
    if (is_word("return")) {
      advance();
      s->kind = Stmt::Kind::ret;
      if (!is_punct(";")) s->value = expression();
      expect_semicolon();
      return s;
    }
    if (is_word("if")) {
      advance();
      s->kind = Stmt::Kind::if_;
      expect("(", "CS1003", "Syntax error, '(' expected");
      s->cond = expression();
      expect(")", "CS1026", ") expected");
      s->then_branch = statement();
      if (is_word("else")) {
        advance();
        s->else_branch = statement();
      }
      return s;
    }
    if (is_word("while")) {
      advance();
      s->kind = Stmt::Kind::while_;
      expect("(", "CS1003", "Syntax error, '(' expected");
      s->cond = expression();
      expect(")", "CS1026", ") expected");
      s->then_branch = statement();
      return s;
    }
    if (is_word("for")) {
      advance();
      s->kind = Stmt::Kind::for_;
      expect("(", "CS1003", "Syntax error, '(' expected");
      if (!is_punct(";")) s->init = simple_statement();
      expect_semicolon();
      if (!is_punct(";")) s->cond = expression();
      expect_semicolon();
      if (!is_punct(")")) s->step = simple_statement();
      expect(")", "CS1026", ") expected");
      s->then_branch = statement();
      return s;
    }
    if (is_word("break") || is_word("continue")) {
      s->kind = is_word("break") ? Stmt::Kind::brk : Stmt::Kind::cont;
      advance();
      expect_semicolon();
      return s;
    }
    if (is_word("throw")) {
      advance();
      s->kind = Stmt::Kind::throw_;
      s->value = expression();
      expect_semicolon();
      return s;
    }
    auto simple = simple_statement();
    expect_semicolon();
    return simple;
  }

  /// Declaration, assignment, increment or expression, without the ';'.
  StmtPtr simple_statement() {
    auto s = std::make_unique<Stmt>();
    s->line = cur().line;
    if (looks_like_declaration()) {
      s->kind = Stmt::Kind::var_decl;
      s->type = type_name();
      s->name = identifier();
      if (is_punct("=")) {
        advance();
        s->value = expression();
      }
      return s;
    }
    auto e = expression();
    if (cur().kind == Token::Kind::punct) {
      const std::string& op = cur().text;
      if (op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "%=") {
        check_assignable(*e);
        s->kind = Stmt::Kind::assign;
        s->op = op;
        advance();
        s->target = std::move(e);
        s->value = expression();
        return s;
      }
      if (op == "++" || op == "--") {
        check_assignable(*e);
        s->kind = Stmt::Kind::incdec;
        s->op = op;
        advance();
        s->target = std::move(e);
        return s;
      }
    }
    s->kind = Stmt::Kind::expr;
    s->value = std::move(e);
    return s;
  }

  void check_assignable(const Expr& e) {
    if (e.kind != Expr::Kind::name && e.kind != Expr::Kind::member)
      error_at(e.line, 1, "CS0131", "The left-hand side of an assignment must be a variable, property or indexer");
  }

  // -- expressions ----------------------------------------------------------
  ExprPtr make(Expr::Kind k, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = line;
    return e;
  }

  ExprPtr expression() {
    auto cond = binary(0);
    if (is_punct("?")) {
      int line = cur().line;
      advance();
      auto t = make(Expr::Kind::ternary, line);
      t->lhs = std::move(cond);
      t->rhs = expression();
      expect(":", "CS1003", "Syntax error, ':' expected");
      t->extra = expression();
      return t;
    }
    return cond;
  }

  static int precedence(std::string_view op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return -1;
  }

  ExprPtr binary(int min_prec) {
    auto lhs = unary();
    for (;;) {
      if (cur().kind != Token::Kind::punct) return lhs;
      int p = precedence(cur().text);
      if (p < 0 || p <= min_prec - 1 || p < min_prec) return lhs;
      auto e = make(Expr::Kind::binary, cur().line);
      e->text = cur().text;
      advance();
      e->lhs = std::move(lhs);
      e->rhs = binary(p + 1);
      lhs = std::move(e);
    }
  }

  ExprPtr unary() {
    if (is_punct("!") || is_punct("-")) {
      auto e = make(Expr::Kind::unary, cur().line);
      e->text = cur().text;
      advance();
      e->lhs = unary();
      return e;
    }
    if (is_punct("(") && peek().kind == Token::Kind::ident && kTypeKeywords.contains(peek().text) &&
        peek(2).kind == Token::Kind::punct && peek(2).text == ")") {
      // Casts such as (double)x are accepted and ignored, except (int) which truncates.
      std::string type = peek().text;
      advance();
      advance();
      advance();
      auto operand = unary();
      if (type == "int" || type == "long") {
        auto call = make(Expr::Kind::call, operand->line);
        auto callee = make(Expr::Kind::name, operand->line);
        callee->text = "__truncate";
        call->lhs = std::move(callee);
        call->args.push_back(std::move(operand));
        return call;
      }
      return operand;
    }
    return postfix(primary());
  }

  ExprPtr postfix(ExprPtr e) {
    for (;;) {
      if (is_punct(".")) {
        advance();
        auto m = make(Expr::Kind::member, cur().line);
        m->text = identifier();
        m->lhs = std::move(e);
        e = std::move(m);
      } else if (is_punct("(") && (e->kind == Expr::Kind::name || e->kind == Expr::Kind::member)) {
        auto c = make(Expr::Kind::call, e->line);
        c->args = arguments();
        c->lhs = std::move(e);
        e = std::move(c);
      } else {
        return e;
      }
    }
  }

  ExprPtr primary() {
    const Token& t = cur();
    switch (t.kind) {
      case Token::Kind::integer: {
        auto e = make(Expr::Kind::integer, t.line);
        e->ival = t.ival;
        advance();
        return e;
      }
      case Token::Kind::real: {
        auto e = make(Expr::Kind::real, t.line);
        e->dval = t.dval;
        advance();
        return e;
      }
      case Token::Kind::string: {
        auto e = make(Expr::Kind::string, t.line);
        e->text = t.text;
        advance();
        return e;
      }
      case Token::Kind::interpolated: {
        auto e = interpolation(t);
        advance();
        return e;
      }
      case Token::Kind::ident: {
        if (t.text == "true" || t.text == "false") {
          auto e = make(Expr::Kind::boolean, t.line);
          e->bval = t.text == "true";
          advance();
          return e;
        }
        if (t.text == "null") {
          advance();
          return make(Expr::Kind::null, t.line);
        }
        if (t.text == "this") {
          advance();
          return make(Expr::Kind::self, t.line);
        }
        if (t.text == "new") {
          int line = t.line;
          advance();
          auto e = make(Expr::Kind::construct, line);
          e->text = qualified_name();
          e->args = arguments();
          return e;
        }
        if (!kKeywords.contains(t.text) || t.text == "string" || t.text == "int" || t.text == "double" ||
            t.text == "base") {
          // `string`/`int` allowed as receivers for static helpers (string.IsNullOrEmpty, int.Parse).
          auto e = make(Expr::Kind::name, t.line);
          e->text = t.text;
          advance();
          return e;
        }
        break;
      }
      case Token::Kind::punct:
        if (t.text == "(") {
          advance();
          auto e = expression();
          expect(")", "CS1026", ") expected");
          return e;
        }
        break;
      case Token::Kind::end:
        break;
    }
    error_here("CS1525", fmt::format("Invalid expression term '{}'", t.kind == Token::Kind::end ? "" : t.text));
    throw SyntaxAbort{};
  }

  /// `$"a {x} b"` becomes ("a " + x) + " b".
  ExprPtr interpolation(const Token& t) {
    auto concat = [&](ExprPtr l, ExprPtr r) {
      if (!l) return r;
      auto b = make(Expr::Kind::binary, t.line);
      b->text = "+";
      b->lhs = std::move(l);
      b->rhs = std::move(r);
      return b;
    };
    ExprPtr acc = make(Expr::Kind::string, t.line);
    std::string lit;
    const std::string& s = t.text;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '{' && i + 1 < s.size() && s[i + 1] == '{') {
        lit += '{';
        ++i;
      } else if (s[i] == '}' && i + 1 < s.size() && s[i + 1] == '}') {
        lit += '}';
        ++i;
      } else if (s[i] == '{') {
        auto close = s.find('}', i);
        if (close == std::string::npos) {
          error_at(t.line, t.col, "CS8076", "Missing close delimiter '}' for interpolated expression");
          throw SyntaxAbort{};
        }
        std::string hole = s.substr(i + 1, close - i - 1);
        if (auto colon = hole.find(':'); colon != std::string::npos) hole.resize(colon);
        auto lit_expr = make(Expr::Kind::string, t.line);
        lit_expr->text = std::move(lit);
        lit.clear();
        acc = concat(std::move(acc), std::move(lit_expr));
        std::vector<SourceDiagnostic> inner;
        auto e = parse_expression(hole, inner);
        if (!e) {
          error_at(t.line, t.col, "CS1525", "Invalid expression term in interpolated string");
          throw SyntaxAbort{};
        }
        fix_lines(*e, t.line);
        acc = concat(std::move(acc), std::move(e));
        i = close;
      } else {
        lit += s[i];
      }
    }
    auto tail = make(Expr::Kind::string, t.line);
    tail->text = std::move(lit);
    return concat(std::move(acc), std::move(tail));
  }

  static void fix_lines(Expr& e, int line) {
    e.line = line;
    for (Expr* c : {e.lhs.get(), e.rhs.get(), e.extra.get()})
      if (c) fix_lines(*c, line);
    for (auto& a : e.args) fix_lines(*a, line);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<SourceDiagnostic>& diags_;
  Deadline deadline_;
};

// ---------------------------------------------------------------------------
// Semantic checks

const std::set<std::string, std::less<>> kBuiltinTypes = {"int",   "long", "short",  "byte", "bool",
                                                          "string", "double", "float", "decimal", "char",
                                                          "var",   "object", "void"};
const std::set<std::string, std::less<>> kBuiltinStatics = {"Console", "Math", "string", "int", "double", "String"};

class Checker {
 public:
  Checker(const Program& prog, std::vector<SourceDiagnostic>& diags) : prog_(prog), diags_(diags) {}

  void run() {
    std::set<std::string> seen;
    for (const auto& c : prog_.classes) {
      if (!seen.insert(c->name).second)
        report(c->line, "CS0101", fmt::format("The namespace '<global namespace>' already contains a definition for '{}'", c->name));
      if (!c->base.empty() && !prog_.find(c->base) && !c->base.ends_with("Exception"))
        report(c->line, "CS0246", fmt::format("The type or namespace name '{}' could not be found", c->base));
    }
    for (const auto& c : prog_.classes) check_class(*c);
  }

 private:
  void report(int line, std::string code, std::string msg) {
    diags_.push_back({line, 1, std::move(code), std::move(msg)});
  }

  bool known_type(std::string_view t) const {
    std::string base(t);
    if (base.size() > 2 && base.ends_with("[]")) base.resize(base.size() - 2);
    return kBuiltinTypes.contains(base) || prog_.find(base) != nullptr;
  }

  void check_type(std::string_view t, int line) {
    if (!known_type(t))
      report(line, "CS0246", fmt::format("The type or namespace name '{}' could not be found", t));
  }

  bool has_field(const ClassDecl* c, std::string_view name) const {
    for (int guard = 0; c && guard < 64; c = prog_.base_of(*c), ++guard)
      for (const auto& f : c->fields)
        if (f.name == name) return true;
    return false;
  }

  bool has_method(const ClassDecl* c, std::string_view name) const {
    for (int guard = 0; c && guard < 64; c = prog_.base_of(*c), ++guard)
      for (const auto& m : c->methods)
        if (m.name == name) return true;
    return false;
  }

  void check_class(const ClassDecl& c) {
    cls_ = &c;
    std::set<std::string> fields;
    for (const auto& f : c.fields) {
      if (!fields.insert(f.name).second)
        report(f.line, "CS0102", fmt::format("The type '{}' already contains a definition for '{}'", c.name, f.name));
      check_type(f.type, f.line);
      if (f.init) {
        scopes_.clear();
        expr(*f.init);
      }
    }
    std::set<std::pair<std::string, std::size_t>> sigs;
    for (const auto& m : c.methods) {
      if (!sigs.insert({m.name, m.params.size()}).second)
        report(m.line, "CS0111",
               fmt::format("Type '{}' already defines a member called '{}' with the same parameter types", c.name, m.name));
      check_type(m.return_type, m.line);
      open_callable(m.params, m.line);
      for (const auto& s : m.body) stmt(*s);
      if (!m.is_abstract && m.return_type != "void" && !always_exits(m.body))
        report(m.line, "CS0161", fmt::format("'{}.{}': not all code paths return a value", c.name, m.name));
    }
    for (const auto& ctor : c.ctors) {
      open_callable(ctor.params, ctor.line);
      for (const auto& a : ctor.base_args) expr(*a);
      for (const auto& s : ctor.body) stmt(*s);
    }
  }

  void open_callable(const std::vector<Param>& params, int line) {
    scopes_.clear();
    scopes_.emplace_back();
    for (const auto& p : params) {
      check_type(p.type, line);
      scopes_.back().insert(p.name);
    }
  }

  static bool always_exits(const std::vector<StmtPtr>& body) {
    for (const auto& s : body)
      if (exits(*s)) return true;
    return false;
  }

  static bool exits(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::ret:
      case Stmt::Kind::throw_: return true;
      case Stmt::Kind::block: return always_exits(s.body);
      case Stmt::Kind::if_: return s.else_branch && exits(*s.then_branch) && exits(*s.else_branch);
      case Stmt::Kind::while_:
        return s.cond && s.cond->kind == Expr::Kind::boolean && s.cond->bval && !contains_break(*s.then_branch);
      default: return false;
    }
  }

  static bool contains_break(const Stmt& s) {
    if (s.kind == Stmt::Kind::brk) return true;
    if (s.kind == Stmt::Kind::while_ || s.kind == Stmt::Kind::for_) return false;
    for (const auto& b : s.body)
      if (contains_break(*b)) return true;
    if (s.then_branch && contains_break(*s.then_branch)) return true;
    if (s.else_branch && contains_break(*s.else_branch)) return true;
    return false;
  }

  bool local(std::string_view name) const {
    for (const auto& sc : scopes_)
      if (sc.contains(std::string(name))) return true;
    return false;
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::block:
        scopes_.emplace_back();
        for (const auto& b : s.body) stmt(*b);
        scopes_.pop_back();
        break;
      case Stmt::Kind::var_decl:
        check_type(s.type, s.line);
        if (s.value) expr(*s.value);
        if (local(s.name))
          report(s.line, "CS0128", fmt::format("A local variable named '{}' is already defined in this scope", s.name));
        scopes_.back().insert(s.name);
        break;
      case Stmt::Kind::assign:
      case Stmt::Kind::incdec:
        expr(*s.target);
        if (s.value) expr(*s.value);
        break;
      case Stmt::Kind::if_:
        expr(*s.cond);
        scoped(*s.then_branch);
        if (s.else_branch) scoped(*s.else_branch);
        break;
      case Stmt::Kind::while_:
        expr(*s.cond);
        scoped(*s.then_branch);
        break;
      case Stmt::Kind::for_:
        scopes_.emplace_back();
        if (s.init) stmt(*s.init);
        if (s.cond) expr(*s.cond);
        if (s.step) stmt(*s.step);
        scoped(*s.then_branch);
        scopes_.pop_back();
        break;
      case Stmt::Kind::ret:
      case Stmt::Kind::throw_:
      case Stmt::Kind::expr:
        if (s.value) expr(*s.value);
        break;
      case Stmt::Kind::brk:
      case Stmt::Kind::cont:
        break;
    }
  }

  void scoped(const Stmt& s) {
    scopes_.emplace_back();
    stmt(s);
    scopes_.pop_back();
  }

  void expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::name:
        if (!local(e.text) && !has_field(cls_, e.text) && !prog_.find(e.text) && !kBuiltinStatics.contains(e.text) &&
            e.text != "base")
          report(e.line, "CS0103", fmt::format("The name '{}' does not exist in the current context", e.text));
        break;
      case Expr::Kind::call:
        if (e.lhs->kind == Expr::Kind::name) {
          const auto& n = e.lhs->text;
          if (n != "__truncate" && !has_method(cls_, n) && !local(n))
            report(e.line, "CS0103", fmt::format("The name '{}' does not exist in the current context", n));
        } else {
          expr(*e.lhs);
        }
        for (const auto& a : e.args) expr(*a);
        break;
      case Expr::Kind::construct:
        if (!prog_.find(e.text) && !e.text.ends_with("Exception"))
          report(e.line, "CS0246", fmt::format("The type or namespace name '{}' could not be found", e.text));
        for (const auto& a : e.args) expr(*a);
        break;
      default:
        for (const Expr* c : {e.lhs.get(), e.rhs.get(), e.extra.get()})
          if (c) expr(*c);
        for (const auto& a : e.args) expr(*a);
    }
  }

  const Program& prog_;
  std::vector<SourceDiagnostic>& diags_;
  const ClassDecl* cls_ = nullptr;
  std::vector<std::set<std::string>> scopes_;
};

}  // namespace

CompileResult compile(std::string_view source, Deadline deadline) {
  CompileResult out;
  Lexer lexer(source, out.diagnostics);
  auto tokens = lexer.run();
  Parser parser(std::move(tokens), out.diagnostics, deadline);
  std::unique_ptr<Program> prog = parser.program();
  if (out.diagnostics.empty()) Checker(*prog, out.diagnostics).run();
  std::stable_sort(out.diagnostics.begin(), out.diagnostics.end(), [](const auto& a, const auto& b) {
    return std::tie(a.line, a.col) < std::tie(b.line, b.col);
  });
  if (out.diagnostics.empty()) out.program = std::move(prog);
  return out;
}

ExprPtr parse_expression(std::string_view text, std::vector<SourceDiagnostic>& diagnostics) {
  std::size_t before = diagnostics.size();
  Lexer lexer(text, diagnostics);
  auto tokens = lexer.run();
  if (diagnostics.size() != before) return nullptr;
  Parser parser(std::move(tokens), diagnostics, Deadline::max());
  try {
    auto e = parser.standalone_expression();
    if (diagnostics.size() != before) return nullptr;
    return e;
  } catch (const SyntaxAbort&) {
    return nullptr;
  }
}

}  // namespace gradehint::mocklang

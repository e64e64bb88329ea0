#include "hcsp/parser.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hcsp {

namespace {

enum class Tok {
  Ident, Number,
  Assign,    // :=
  Define,    // ::=
  Arrow,     // ->
  Pipe,      // |> (interrupt)
  Box,       // []
  IntCh,     // |~|
  Par,       // || (also boolean or, by context)
  AndAnd,    // &&
  Lt, Le, Gt, Ge, EqEq, Ne,
  Eq,        // =
  Bang, Question,
  LParen, RParen, LBrack, RBrack, LBrace, RBrace,
  Comma, Semi, Star, Amp, At,
  Plus, Minus, Slash, Caret,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double num = 0;
  int line = 1, col = 1;
};

std::vector<Token> tokenize(const std::string& src, int line0 = 1) {
  std::vector<Token> out;
  int line = line0, col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string t) {
    out.push_back({k, std::move(t), 0, line, col});
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') { ++line; col = 1; ++i; continue; }
    if (std::isspace(static_cast<unsigned char>(c))) { ++col; ++i; continue; }
    if (c == '#') {  // comment to end of line
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    auto two = src.substr(i, 2);
    auto three = src.substr(i, 3);
    if (three == "::=") { push(Tok::Define, three); i += 3; col += 3; continue; }
    if (three == "|~|") { push(Tok::IntCh, three); i += 3; col += 3; continue; }
    if (two == ":=") { push(Tok::Assign, two); i += 2; col += 2; continue; }
    if (two == "->") { push(Tok::Arrow, two); i += 2; col += 2; continue; }
    if (two == "|>") { push(Tok::Pipe, two); i += 2; col += 2; continue; }
    if (two == "[]") { push(Tok::Box, two); i += 2; col += 2; continue; }
    if (two == "||") { push(Tok::Par, two); i += 2; col += 2; continue; }
    if (two == "&&") { push(Tok::AndAnd, two); i += 2; col += 2; continue; }
    if (two == "<=") { push(Tok::Le, two); i += 2; col += 2; continue; }
    if (two == ">=") { push(Tok::Ge, two); i += 2; col += 2; continue; }
    if (two == "==") { push(Tok::EqEq, two); i += 2; col += 2; continue; }
    if (two == "!=") { push(Tok::Ne, two); i += 2; col += 2; continue; }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
        ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          ++k;
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      Token t{Tok::Number, src.substr(i, j - i), 0, line, col};
      t.num = std::stod(t.text);
      out.push_back(t);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) ||
                                src[j] == '_' || src[j] == '$' || src[j] == ':'))
        ++j;
      // ':' only allowed inside $-internal names, never at the end
      if (src[i] != '$')
        while (j > i && src[j - 1] == ':') --j;
      push(Tok::Ident, src.substr(i, j - i));
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    Tok k;
    switch (c) {
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '=': k = Tok::Eq; break;
      case '!': k = Tok::Bang; break;
      case '?': k = Tok::Question; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBrack; break;
      case ']': k = Tok::RBrack; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case ',': k = Tok::Comma; break;
      case ';': k = Tok::Semi; break;
      case '*': k = Tok::Star; break;
      case '&': k = Tok::Amp; break;
      case '@': k = Tok::At; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    push(k, std::string(1, c));
    ++i;
    ++col;
  }
  out.push_back({Tok::End, "", 0, line, col});
  return out;
}

/// Rewrite non-strict comparisons in an ODE domain to strict ones
/// (open-domain assumption); reports whether anything changed.
BoolPtr open_domain(const BoolPtr& b, bool& changed) {
  switch (b->kind) {
    case BoolExpr::Kind::Cmp:
      if (b->cmp == Cmp::Le) { changed = true; return bcmp(Cmp::Lt, b->lhs, b->rhs); }
      if (b->cmp == Cmp::Ge) { changed = true; return bcmp(Cmp::Gt, b->lhs, b->rhs); }
      return b;
    case BoolExpr::Kind::And:
      return band(open_domain(b->a, changed), open_domain(b->b, changed));
    case BoolExpr::Kind::Or:
      return bor(open_domain(b->a, changed), open_domain(b->b, changed));
    case BoolExpr::Kind::Not:
      return bnot(open_domain(b->a, changed));
    default:
      return b;
  }
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const std::map<std::string, double>& consts,
         const std::map<std::string, TermPtr>& defs,
         const std::map<std::string, StabilityCert>& certs,
         std::vector<std::string>* warnings)
      : toks_(std::move(toks)), consts_(consts), defs_(defs), certs_(certs),
        warnings_(warnings) {}

  TermPtr parse_term_all() {
    auto t = parse_par();
    expect(Tok::End, "end of input");
    return t;
  }
  BoolPtr parse_bool_all() {
    auto b = parse_or();
    expect(Tok::End, "end of input");
    return b;
  }
  ExprPtr parse_expr_all() {
    auto e = parse_add();
    expect(Tok::End, "end of input");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const std::map<std::string, double>& consts_;
  const std::map<std::string, TermPtr>& defs_;
  const std::map<std::string, StabilityCert>& certs_;
  std::vector<std::string>* warnings_;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(int k = 1) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() { return toks_[pos_++]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool accept(Tok k) {
    if (at(k)) { ++pos_; return true; }
    return false;
  }
  Token expect(Tok k, const std::string& what) {
    if (!at(k))
      throw ParseError("expected " + what + ", got '" + cur().text + "'",
                       cur().line, cur().col);
    return next();
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, cur().line, cur().col);
  }
  void warn(const std::string& msg) {
    if (warnings_) warnings_->push_back(msg);
  }

  // ---- arithmetic expressions ----

  ExprPtr parse_add() {
    auto e = parse_mul();
    for (;;) {
      if (accept(Tok::Plus)) e = eadd(e, parse_mul());
      else if (accept(Tok::Minus)) e = esub(e, parse_mul());
      else return e;
    }
  }
  ExprPtr parse_mul() {
    auto e = parse_unary();
    for (;;) {
      if (accept(Tok::Star)) e = emul(e, parse_unary());
      else if (accept(Tok::Slash)) e = ediv(e, parse_unary());
      else return e;
    }
  }
  ExprPtr parse_unary() {
    if (accept(Tok::Minus)) return eneg(parse_unary());
    return parse_pow();
  }
  ExprPtr parse_pow() {
    auto e = parse_atom();
    if (accept(Tok::Caret)) return epow(e, parse_unary());
    return e;
  }
  ExprPtr parse_atom() {
    if (at(Tok::Number)) return econst(next().num);
    if (accept(Tok::LParen)) {
      auto e = parse_add();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (at(Tok::Ident)) {
      auto name = next().text;
      if (name == "sqrt") {
        expect(Tok::LParen, "'(' after sqrt");
        auto e = parse_add();
        expect(Tok::RParen, "')'");
        return esqrt(e);
      }
      auto it = consts_.find(name);
      if (it != consts_.end()) return econst(it->second);
      return evar(name);
    }
    fail("expected expression");
  }

  // ---- boolean expressions ----

  BoolPtr parse_or() {
    auto b = parse_and();
    while (accept(Tok::Par)) b = bor(b, parse_and());
    return b;
  }
  BoolPtr parse_and() {
    auto b = parse_not();
    while (accept(Tok::AndAnd)) b = band(b, parse_not());
    return b;
  }
  BoolPtr parse_not() {
    if (accept(Tok::Bang)) return bnot(parse_not());
    return parse_batom();
  }
  BoolPtr parse_batom() {
    if (at(Tok::Ident) && cur().text == "true") { next(); return btrue(); }
    if (at(Tok::Ident) && cur().text == "false") { next(); return bfalse(); }
    // readiness flag atom: ch? or ch!
    if (at(Tok::Ident) &&
        (peek().kind == Tok::Question || peek().kind == Tok::Bang)) {
      auto name = next().text;
      name += next().kind == Tok::Question ? "?" : "!";
      return bflag(name);
    }
    // comparison, with backtracking for parenthesized booleans
    std::size_t save = pos_;
    try {
      auto l = parse_add();
      Cmp c;
      if (accept(Tok::Lt)) c = Cmp::Lt;
      else if (accept(Tok::Le)) c = Cmp::Le;
      else if (accept(Tok::Gt)) c = Cmp::Gt;
      else if (accept(Tok::Ge)) c = Cmp::Ge;
      else if (accept(Tok::Eq) || accept(Tok::EqEq)) c = Cmp::Eq;
      else if (accept(Tok::Ne)) c = Cmp::Ne;
      else fail("expected comparison operator");
      return bcmp(c, l, parse_add());
    } catch (const ParseError&) {
      pos_ = save;
    }
    if (accept(Tok::LParen)) {
      auto b = parse_or();
      expect(Tok::RParen, "')'");
      return b;
    }
    fail("expected boolean expression");
  }

  // ---- process terms ----
  // precedence: ||  <  |~|  <  ;  <  guard/prefix

  TermPtr parse_par() {
    auto t = parse_intchoice();
    while (accept(Tok::Par)) t = t_parallel(t, parse_intchoice());
    return t;
  }
  TermPtr parse_intchoice() {
    auto t = parse_seq();
    while (accept(Tok::IntCh)) t = t_intchoice(t, parse_seq());
    return t;
  }
  TermPtr parse_seq() {
    auto t = parse_prefix();
    while (accept(Tok::Semi)) t = t_seq(t, parse_prefix());
    return t;
  }

  TermPtr parse_prefix() {
    // try a guard B -> P (backtrack if no arrow follows a boolean)
    std::size_t save = pos_;
    try {
      auto b = parse_or();
      if (accept(Tok::Arrow)) return t_guard(b, parse_prefix());
    } catch (const ParseError&) {
    }
    pos_ = save;
    return parse_postfix();
  }

  TermPtr parse_postfix() {
    auto t = parse_primary();
    while (at(Tok::Star) && peek().kind == Tok::LBrace) {
      next();
      next();
      Token n = cur();
      double bound;
      if (accept(Tok::Number)) {
        bound = n.num;
      } else if (at(Tok::Ident) && consts_.count(cur().text)) {
        bound = consts_.at(next().text);
      } else {
        fail("expected repetition bound (number or constant)");
      }
      if (bound < 1 || bound != std::floor(bound))
        throw ParseError("repetition bound must be a positive integer",
                         n.line, n.col);
      expect(Tok::RBrace, "'}'");
      t = t_repeat(t, static_cast<long>(bound));
    }
    return t;
  }

  CommEvent parse_comm() {
    auto chan = expect(Tok::Ident, "channel name").text;
    CommEvent ev;
    ev.chan = chan;
    if (accept(Tok::Question)) {
      ev.is_input = true;
      ev.var = expect(Tok::Ident, "input variable").text;
    } else if (accept(Tok::Bang)) {
      ev.is_input = false;
      ev.expr = parse_add();
    } else {
      fail("expected '?' or '!' after channel name");
    }
    return ev;
  }

  std::vector<std::pair<CommEvent, TermPtr>> parse_branches(Tok close) {
    std::vector<std::pair<CommEvent, TermPtr>> bs;
    do {
      auto ev = parse_comm();
      expect(Tok::Arrow, "'->'");
      bs.emplace_back(std::move(ev), parse_seq());
    } while (accept(Tok::Box));
    expect(close, "']'");
    return bs;
  }

  TermPtr parse_ode() {
    // '<' already consumed
    std::string label;
    if (accept(Tok::At)) label = expect(Tok::Ident, "ODE label").text;
    OdeSpec spec;
    spec.label = label;
    do {
      auto name = expect(Tok::Ident, "ODE variable").text;
      if (name.size() < 5 || name.substr(name.size() - 4) != "_dot")
        fail("ODE variable must end in _dot");
      name = name.substr(0, name.size() - 4);
      expect(Tok::Eq, "'='");
      spec.eqs.emplace_back(name, parse_add());
    } while (accept(Tok::Comma));
    BoolPtr dom = btrue();
    if (accept(Tok::Amp)) dom = parse_or();
    expect(Tok::Gt, "'>'");
    bool changed = false;
    dom = open_domain(dom, changed);
    if (changed)
      warn("non-strict comparison in ODE domain treated as strict");
    if (!label.empty()) {
      auto it = certs_.find(label);
      if (it != certs_.end()) spec.cert = it->second;
    }
    auto ode = std::make_shared<const OdeSpec>(std::move(spec));
    if (accept(Tok::Pipe)) {
      expect(Tok::LBrack, "'['");
      return t_interrupt(ode, dom, parse_branches(Tok::RBrack));
    }
    return t_ode(ode, dom);
  }

  TermPtr parse_primary() {
    if (at(Tok::Ident)) {
      const auto& name = cur().text;
      if (name == "skip") { next(); return t_skip(); }
      if (name == "stop") { next(); return t_stop(); }
      if (name == "wait") { next(); return t_wait(parse_add()); }
      // communication or flag-aware assignment
      if (peek().kind == Tok::Question) {
        if (peek(2).kind == Tok::Assign || peek(2).kind == Tok::Comma)
          return parse_assign();
        auto chan = next().text;
        next();  // '?'
        auto var = expect(Tok::Ident, "input variable").text;
        return t_input(chan, var);
      }
      if (peek().kind == Tok::Bang) {
        if (peek(2).kind == Tok::Assign || peek(2).kind == Tok::Comma)
          return parse_assign();
        auto chan = next().text;
        next();  // '!'
        return t_output(chan, parse_add());
      }
      if (peek().kind == Tok::Assign || peek().kind == Tok::Comma)
        return parse_assign();
      // process reference
      auto it = defs_.find(name);
      if (it != defs_.end()) { next(); return it->second; }
      fail("undefined process name '" + name + "'");
    }
    if (accept(Tok::LParen)) {
      auto t = parse_par();
      expect(Tok::RParen, "')'");
      return t;
    }
    if (accept(Tok::LBrack)) return t_extchoice(parse_branches(Tok::RBrack));
    if (accept(Tok::Lt)) return parse_ode();
    fail("expected process term");
  }

  TermPtr parse_assign() {
    std::vector<std::string> names;
    do {
      auto n = expect(Tok::Ident, "variable name").text;
      if (accept(Tok::Question)) n += "?";
      else if (accept(Tok::Bang)) n += "!";
      names.push_back(n);
    } while (accept(Tok::Comma));
    expect(Tok::Assign, "':='");
    std::vector<std::pair<std::string, ExprPtr>> as;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) expect(Tok::Comma, "','");
      as.emplace_back(names[i], parse_add());
    }
    return t_assign_multi(std::move(as));
  }
};

std::map<std::string, double> kEmptyConsts;
std::map<std::string, TermPtr> kEmptyDefs;
std::map<std::string, StabilityCert> kEmptyCerts;

// ---- model-file directives ----

void trim(std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, double>> parse_kv_list(
    const std::string& body, int line) {
  std::vector<std::pair<std::string, double>> out;
  auto toks = tokenize(body, line);
  std::size_t i = 0;
  while (toks[i].kind != Tok::End) {
    if (toks[i].kind != Tok::Ident)
      throw ParseError("expected name", toks[i].line, toks[i].col);
    std::string name = toks[i++].text;
    if (toks[i].kind == Tok::Question) { name += "?"; ++i; }
    else if (toks[i].kind == Tok::Bang) { name += "!"; ++i; }
    if (toks[i].kind == Tok::Ne) {
      // "ch!=0" lexes as Ident Ne Number: the readiness suffix plus '='
      name += "!";
      ++i;
    } else if (toks[i].kind == Tok::Eq) {
      ++i;
    } else {
      throw ParseError("expected '='", toks[i].line, toks[i].col);
    }
    double sign = 1;
    if (toks[i].kind == Tok::Minus) { sign = -1; ++i; }
    if (toks[i].kind != Tok::Number)
      throw ParseError("expected number", toks[i].line, toks[i].col);
    out.emplace_back(name, sign * toks[i++].num);
    if (toks[i].kind == Tok::Comma) ++i;
  }
  return out;
}

StabilityCert parse_cert_body(const std::string& body, int line,
                              std::string* name_out) {
  auto toks = tokenize(body, line);
  std::size_t i = 0;
  if (toks[i].kind != Tok::Ident)
    throw ParseError("expected ODE label after #ode", toks[i].line, toks[i].col);
  *name_out = toks[i++].text;
  StabilityCert cert;
  auto number = [&]() {
    double sign = 1;
    if (toks[i].kind == Tok::Minus) { sign = -1; ++i; }
    if (toks[i].kind != Tok::Number)
      throw ParseError("expected number", toks[i].line, toks[i].col);
    return sign * toks[i++].num;
  };
  while (toks[i].kind != Tok::End) {
    if (toks[i].kind == Tok::Comma) { ++i; continue; }
    if (toks[i].kind != Tok::Ident)
      throw ParseError("expected field name", toks[i].line, toks[i].col);
    std::string field = toks[i++].text;
    if (toks[i].kind != Tok::Eq)
      throw ParseError("expected '='", toks[i].line, toks[i].col);
    ++i;
    if (field == "equilibrium") {
      if (toks[i].kind != Tok::LBrack)
        throw ParseError("expected '['", toks[i].line, toks[i].col);
      ++i;
      while (toks[i].kind != Tok::RBrack) {
        cert.equilibrium.push_back(number());
        if (toks[i].kind == Tok::Comma) ++i;
      }
      ++i;
    } else if (field == "T") {
      cert.T = number();
    } else if (field == "L") {
      cert.L = number();
    } else if (field == "M2") {
      cert.M2 = number();
    } else {
      throw ParseError("unknown stability field '" + field + "'",
                       toks[i].line, toks[i].col);
    }
  }
  return cert;
}

}  // namespace

TermPtr parse_term(const std::string& src) {
  Parser p(tokenize(src), kEmptyConsts, kEmptyDefs, kEmptyCerts, nullptr);
  return p.parse_term_all();
}

BoolPtr parse_bool(const std::string& src) {
  Parser p(tokenize(src), kEmptyConsts, kEmptyDefs, kEmptyCerts, nullptr);
  return p.parse_bool_all();
}

ExprPtr parse_expr(const std::string& src) {
  Parser p(tokenize(src), kEmptyConsts, kEmptyDefs, kEmptyCerts, nullptr);
  return p.parse_expr_all();
}

Model parse_model(const std::string& src,
                  const std::map<std::string, double>& overrides) {
  Model m;
  // Pass 1: split into directive lines and definition blocks.
  struct Def {
    std::string name, body;
    int line;
  };
  std::vector<Def> defs;
  std::istringstream is(src);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    // strip comments, but keep directive markers
    if (auto h = line.find('#'); h != std::string::npos) {
      auto rest = line.substr(h);
      if (rest.rfind("#vars", 0) == 0 || rest.rfind("#const", 0) == 0 ||
          rest.rfind("#ode", 0) == 0) {
        line = rest;
      } else {
        line = line.substr(0, h);
      }
    }
    trim(line);
    if (line.empty()) continue;
    if (line.rfind("#vars", 0) == 0) {
      for (auto& [k, v] : parse_kv_list(line.substr(5), lineno)) m.init[k] = v;
      continue;
    }
    if (line.rfind("#const", 0) == 0) {
      for (auto& [k, v] : parse_kv_list(line.substr(6), lineno)) m.consts[k] = v;
      continue;
    }
    if (line.rfind("#ode", 0) == 0) {
      std::string name;
      auto cert = parse_cert_body(line.substr(4), lineno, &name);
      m.certs[name] = cert;
      continue;
    }
    if (auto d = line.find("::="); d != std::string::npos) {
      Def def;
      def.name = line.substr(0, d);
      trim(def.name);
      def.body = line.substr(d + 3);
      def.line = lineno;
      defs.push_back(std::move(def));
      continue;
    }
    if (defs.empty())
      throw ParseError("expected a directive or a definition", lineno, 1);
    defs.back().body += "\n" + line;
  }

  for (auto& [k, v] : overrides) m.consts[k] = v;

  // Pass 2: parse each definition with the defs so far in scope.
  for (auto& d : defs) {
    Parser p(tokenize(d.body, d.line), m.consts, m.defs, m.certs, &m.warnings);
    auto t = p.parse_term_all();
    if (d.name == "system")
      m.system = t;
    else
      m.defs[d.name] = t;
  }
  if (!m.system) {
    if (defs.empty()) throw ParseError("model has no definitions", lineno, 1);
    m.system = m.defs[defs.back().name];
  }

  // Stability data sanity: a declared equilibrium must actually be one.
  for (auto& ode : collect_odes(m.system)) {
    if (!ode->cert) continue;
    Valuation v;
    for (std::size_t i = 0; i < ode->eqs.size(); ++i)
      v[ode->eqs[i].first] = ode->cert->equilibrium[i];
    try {
      double norm = 0;
      for (auto& [var, rhs] : ode->eqs)
        norm = std::max(norm, std::abs(eval(rhs, v)));
      if (norm > 1e-9)
        throw ParseError("declared equilibrium for ODE '" + ode_key(*ode) +
                             "' is not an equilibrium (residual " +
                             std::to_string(norm) + ")",
                         0, 0);
    } catch (const EvalError&) {
      m.warnings.push_back("could not verify equilibrium for ODE '" +
                           ode_key(*ode) + "'");
    }
  }

  // Validation diagnostics become errors/warnings.
  if (m.system) {
    for (auto& d : validate(m.system)) {
      if (d.warning)
        m.warnings.push_back(d.message);
      else
        throw ParseError(d.message, 0, 0);
    }
  }
  return m;
}

Model parse_model_file(const std::string& path,
                       const std::map<std::string, double>& overrides) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open model file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_model(ss.str(), overrides);
}

}  // namespace hcsp

#include "hcsp/ast.hpp"

#include <functional>
#include <sstream>

namespace hcsp {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t comm_hash(const CommEvent& c) {
  std::size_t h = std::hash<std::string>{}(c.chan);
  h = mix(h, c.is_input ? 1 : 2);
  if (c.is_input) h = mix(h, std::hash<std::string>{}(c.var));
  if (c.expr) h = mix(h, c.expr->hash);
  return h;
}

std::size_t ode_hash(const OdePtr& o) {
  std::size_t h = 77;
  for (auto& [v, e] : o->eqs) {
    h = mix(h, std::hash<std::string>{}(v));
    h = mix(h, e->hash);
  }
  return h;
}

TermPtr make(Term t) {
  std::size_t h = 500009 + static_cast<std::size_t>(t.kind) * 257;
  for (auto& [v, e] : t.assigns) {
    h = mix(h, std::hash<std::string>{}(v));
    h = mix(h, e->hash);
  }
  if (t.expr) h = mix(h, t.expr->hash);
  if (!t.chan.empty()) h = mix(h, std::hash<std::string>{}(t.chan));
  if (!t.var.empty()) h = mix(h, std::hash<std::string>{}(t.var));
  if (t.left) h = mix(h, t.left->hash);
  if (t.right) h = mix(h, t.right->hash);
  if (t.cond) h = mix(h, t.cond->hash);
  h = mix(h, static_cast<std::size_t>(t.bound));
  for (auto& [c, p] : t.branches) {
    h = mix(h, comm_hash(c));
    if (p) h = mix(h, p->hash);
  }
  if (t.ode) h = mix(h, ode_hash(t.ode));
  t.hash = h;
  return std::make_shared<Term>(std::move(t));
}

}  // namespace

TermPtr t_skip() {
  static TermPtr t = make({Term::Kind::Skip});
  return t;
}
TermPtr t_stop() {
  static TermPtr t = make({Term::Kind::Stop});
  return t;
}
TermPtr t_assign(const std::string& var, ExprPtr e) {
  Term t{Term::Kind::Assign};
  t.assigns.emplace_back(var, std::move(e));
  return make(std::move(t));
}
TermPtr t_assign_multi(std::vector<std::pair<std::string, ExprPtr>> as) {
  Term t{Term::Kind::Assign};
  t.assigns = std::move(as);
  return make(std::move(t));
}
TermPtr t_wait(ExprPtr e) {
  Term t{Term::Kind::Wait};
  t.expr = std::move(e);
  return make(std::move(t));
}
TermPtr t_input(const std::string& chan, const std::string& var) {
  Term t{Term::Kind::Input};
  t.chan = chan;
  t.var = var;
  return make(std::move(t));
}
TermPtr t_output(const std::string& chan, ExprPtr e) {
  Term t{Term::Kind::Output};
  t.chan = chan;
  t.expr = std::move(e);
  return make(std::move(t));
}
TermPtr t_seq(TermPtr p, TermPtr q) {
  Term t{Term::Kind::Seq};
  t.left = std::move(p);
  t.right = std::move(q);
  return make(std::move(t));
}
TermPtr t_guard(BoolPtr b, TermPtr p) {
  Term t{Term::Kind::Guard};
  t.cond = std::move(b);
  t.left = std::move(p);
  return make(std::move(t));
}
TermPtr t_intchoice(TermPtr p, TermPtr q) {
  Term t{Term::Kind::IntChoice};
  t.left = std::move(p);
  t.right = std::move(q);
  return make(std::move(t));
}
TermPtr t_repeat(TermPtr p, long bound) {
  Term t{Term::Kind::Repeat};
  t.left = std::move(p);
  t.bound = bound;
  return make(std::move(t));
}
TermPtr t_extchoice(std::vector<std::pair<CommEvent, TermPtr>> branches) {
  Term t{Term::Kind::ExtChoice};
  t.branches = std::move(branches);
  return make(std::move(t));
}
TermPtr t_ode(OdePtr spec, BoolPtr domain) {
  Term t{Term::Kind::Ode};
  t.ode = std::move(spec);
  t.cond = std::move(domain);
  return make(std::move(t));
}
TermPtr t_interrupt(OdePtr spec, BoolPtr domain,
                    std::vector<std::pair<CommEvent, TermPtr>> handlers) {
  Term t{Term::Kind::OdeInterrupt};
  t.ode = std::move(spec);
  t.cond = std::move(domain);
  t.branches = std::move(handlers);
  return make(std::move(t));
}
TermPtr t_parallel(TermPtr p, TermPtr q) {
  Term t{Term::Kind::Parallel};
  t.left = std::move(p);
  t.right = std::move(q);
  return make(std::move(t));
}

namespace {

bool comm_equal(const CommEvent& a, const CommEvent& b) {
  return a.chan == b.chan && a.is_input == b.is_input && a.var == b.var &&
         expr_equal(a.expr, b.expr);
}

bool ode_equal(const OdePtr& a, const OdePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->eqs.size() != b->eqs.size()) return false;
  for (std::size_t i = 0; i < a->eqs.size(); ++i) {
    if (a->eqs[i].first != b->eqs[i].first) return false;
    if (!expr_equal(a->eqs[i].second, b->eqs[i].second)) return false;
  }
  return true;
}

}  // namespace

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->kind != b->kind) return false;
  if (a->assigns.size() != b->assigns.size()) return false;
  for (std::size_t i = 0; i < a->assigns.size(); ++i) {
    if (a->assigns[i].first != b->assigns[i].first) return false;
    if (!expr_equal(a->assigns[i].second, b->assigns[i].second)) return false;
  }
  if (!expr_equal(a->expr, b->expr)) return false;
  if (a->chan != b->chan || a->var != b->var) return false;
  if (!term_equal(a->left, b->left) || !term_equal(a->right, b->right)) return false;
  if (!bool_equal(a->cond, b->cond)) return false;
  if (a->bound != b->bound) return false;
  if (a->branches.size() != b->branches.size()) return false;
  for (std::size_t i = 0; i < a->branches.size(); ++i) {
    if (!comm_equal(a->branches[i].first, b->branches[i].first)) return false;
    if (!term_equal(a->branches[i].second, b->branches[i].second)) return false;
  }
  if (!ode_equal(a->ode, b->ode)) return false;
  return true;
}

std::size_t term_hash(const TermPtr& t) { return t ? t->hash : 0xe1e1e1e1; }

bool is_readiness_var(const std::string& name) {
  return !name.empty() && (name.back() == '?' || name.back() == '!');
}
bool is_aux_var(const std::string& name) {
  return is_readiness_var(name) || (!name.empty() && name.front() == '$');
}

namespace {

void collect(const TermPtr& t, std::set<std::string>* vs, std::set<std::string>* cs) {
  if (!t) return;
  switch (t->kind) {
    case Term::Kind::Skip:
    case Term::Kind::Stop:
      break;
    case Term::Kind::Assign:
      if (vs)
        for (auto& [v, e] : t->assigns) {
          vs->insert(v);
          collect_vars(e, *vs);
        }
      break;
    case Term::Kind::Wait:
      if (vs) collect_vars(t->expr, *vs);
      break;
    case Term::Kind::Input:
      if (vs) vs->insert(t->var);
      if (cs) cs->insert(t->chan);
      break;
    case Term::Kind::Output:
      if (vs) collect_vars(t->expr, *vs);
      if (cs) cs->insert(t->chan);
      break;
    case Term::Kind::Seq:
    case Term::Kind::IntChoice:
    case Term::Kind::Parallel:
      collect(t->left, vs, cs);
      collect(t->right, vs, cs);
      break;
    case Term::Kind::Guard:
      if (vs) collect_vars(t->cond, *vs);
      collect(t->left, vs, cs);
      break;
    case Term::Kind::Repeat:
      collect(t->left, vs, cs);
      break;
    case Term::Kind::ExtChoice:
    case Term::Kind::OdeInterrupt:
      if (t->kind == Term::Kind::OdeInterrupt) {
        if (vs) {
          for (auto& [v, e] : t->ode->eqs) {
            vs->insert(v);
            collect_vars(e, *vs);
          }
          collect_vars(t->cond, *vs);
        }
      }
      for (auto& [c, p] : t->branches) {
        if (cs) cs->insert(c.chan);
        if (vs) {
          if (c.is_input)
            vs->insert(c.var);
          else
            collect_vars(c.expr, *vs);
        }
        collect(p, vs, cs);
      }
      break;
    case Term::Kind::Ode:
      if (vs) {
        for (auto& [v, e] : t->ode->eqs) {
          vs->insert(v);
          collect_vars(e, *vs);
        }
        collect_vars(t->cond, *vs);
      }
      break;
  }
}

}  // namespace

std::set<std::string> vars(const TermPtr& t) {
  std::set<std::string> vs;
  collect(t, &vs, nullptr);
  // Readiness flags are auxiliary, not process variables.
  for (auto it = vs.begin(); it != vs.end();) {
    if (it->front() == '$')
      it = vs.erase(it);
    else
      ++it;
  }
  return vs;
}

std::set<std::string> channels(const TermPtr& t) {
  std::set<std::string> cs;
  collect(t, nullptr, &cs);
  return cs;
}

std::string ode_key(const OdeSpec& spec) {
  if (!spec.label.empty()) return spec.label;
  std::ostringstream os;
  for (auto& [v, e] : spec.eqs) os << v << "'=" << to_string(e) << ";";
  return os.str();
}

namespace {

void collect_odes_rec(const TermPtr& t, std::vector<OdePtr>& out) {
  if (!t) return;
  if (t->kind == Term::Kind::Ode || t->kind == Term::Kind::OdeInterrupt) {
    bool seen = false;
    for (auto& o : out)
      if (ode_key(*o) == ode_key(*t->ode)) seen = true;
    if (!seen) out.push_back(t->ode);
  }
  collect_odes_rec(t->left, out);
  collect_odes_rec(t->right, out);
  for (auto& [c, p] : t->branches) collect_odes_rec(p, out);
}

}  // namespace

std::vector<OdePtr> collect_odes(const TermPtr& t) {
  std::vector<OdePtr> out;
  collect_odes_rec(t, out);
  return out;
}

namespace {

struct ChanUse {
  std::set<std::string> in, out;
};

void chan_dirs(const TermPtr& t, ChanUse& u) {
  if (!t) return;
  switch (t->kind) {
    case Term::Kind::Input: u.in.insert(t->chan); break;
    case Term::Kind::Output: u.out.insert(t->chan); break;
    case Term::Kind::ExtChoice:
    case Term::Kind::OdeInterrupt:
      for (auto& [c, p] : t->branches) {
        if (c.is_input)
          u.in.insert(c.chan);
        else
          u.out.insert(c.chan);
        chan_dirs(p, u);
      }
      break;
    default:
      chan_dirs(t->left, u);
      chan_dirs(t->right, u);
      for (auto& [c, p] : t->branches) chan_dirs(p, u);
  }
}

std::set<std::string> assigned_readiness(const TermPtr& t) {
  std::set<std::string> out;
  if (!t) return out;
  if (t->kind == Term::Kind::Assign) {
    for (auto& [v, e] : t->assigns)
      if (is_readiness_var(v)) out.insert(v);
  }
  auto merge = [&out](std::set<std::string> s) { out.insert(s.begin(), s.end()); };
  merge(assigned_readiness(t->left));
  merge(assigned_readiness(t->right));
  for (auto& [c, p] : t->branches) merge(assigned_readiness(p));
  return out;
}

void validate_rec(const TermPtr& t, const std::string& path, std::vector<Diagnostic>& out) {
  if (!t) return;
  switch (t->kind) {
    case Term::Kind::Parallel: {
      auto vl = vars(t->left), vr = vars(t->right);
      for (auto& v : vl)
        if (vr.count(v) && !is_readiness_var(v))
          out.push_back({path, "parallel components share variable " + v});
      auto rl = assigned_readiness(t->left), rr = assigned_readiness(t->right);
      for (auto& v : rl)
        if (rr.count(v))
          out.push_back({path, "readiness variable " + v + " written by both sides"});
      ChanUse ul, ur;
      chan_dirs(t->left, ul);
      chan_dirs(t->right, ur);
      for (auto& c : ul.in)
        if (ur.in.count(c))
          out.push_back({path, "parallel components share input channel " + c});
      for (auto& c : ul.out)
        if (ur.out.count(c))
          out.push_back({path, "parallel components share output channel " + c});
      validate_rec(t->left, path + ".left", out);
      validate_rec(t->right, path + ".right", out);
      break;
    }
    case Term::Kind::Repeat:
      if (t->bound < 1)
        out.push_back({path, "repetition bound must be a positive integer"});
      validate_rec(t->left, path + ".body", out);
      break;
    case Term::Kind::ExtChoice:
      if (t->branches.empty())
        out.push_back({path, "external choice must have a nonempty index set"});
      for (std::size_t i = 0; i < t->branches.size(); ++i)
        validate_rec(t->branches[i].second, path + ".branch" + std::to_string(i), out);
      break;
    case Term::Kind::Ode:
    case Term::Kind::OdeInterrupt: {
      std::set<std::string> lhs;
      for (auto& [v, e] : t->ode->eqs)
        if (!lhs.insert(v).second)
          out.push_back({path, "duplicate ODE variable " + v});
      if (t->ode->cert && t->ode->cert->equilibrium.size() != t->ode->eqs.size())
        out.push_back({path, "equilibrium dimension does not match ODE"});
      for (std::size_t i = 0; i < t->branches.size(); ++i)
        validate_rec(t->branches[i].second, path + ".branch" + std::to_string(i), out);
      break;
    }
    default:
      validate_rec(t->left, path + (t->kind == Term::Kind::Seq ? ".first"
                                    : t->kind == Term::Kind::Guard ? ".body"
                                                                   : ".left"),
                   out);
      validate_rec(t->right, path + (t->kind == Term::Kind::Seq ? ".second" : ".right"), out);
  }
}

}  // namespace

std::vector<Diagnostic> validate(const TermPtr& t) {
  std::vector<Diagnostic> out;
  validate_rec(t, "", out);
  // Closed-system check: a channel used in only one direction cannot
  // synchronize; exploration of such a process needs a value menu.
  ChanUse u;
  chan_dirs(t, u);
  for (auto& c : u.in)
    if (!u.out.count(c))
      out.push_back({"", "channel " + c + " has no output end (open system)", true});
  for (auto& c : u.out)
    if (!u.in.count(c))
      out.push_back({"", "channel " + c + " has no input end (open system)", true});
  return out;
}

namespace {

// Precedence: parallel 1, internal choice 2, seq 3, guard/prefix 4.
void pp(std::ostream& os, const TermPtr& t, int parent) {
  if (!t) {
    os << "skip";  // terminated marker never printed in practice
    return;
  }
  auto paren = [&](int p, auto&& body) {
    if (p < parent) {
      os << "(";
      body();
      os << ")";
    } else {
      body();
    }
  };
  switch (t->kind) {
    case Term::Kind::Skip: os << "skip"; break;
    case Term::Kind::Stop: os << "stop"; break;
    case Term::Kind::Assign: {
      for (std::size_t i = 0; i < t->assigns.size(); ++i)
        os << (i ? ", " : "") << t->assigns[i].first;
      os << " := ";
      for (std::size_t i = 0; i < t->assigns.size(); ++i)
        os << (i ? ", " : "") << to_string(t->assigns[i].second);
      break;
    }
    case Term::Kind::Wait:
      os << "wait " << to_string(t->expr);
      break;
    case Term::Kind::Input:
      os << t->chan << "?" << t->var;
      break;
    case Term::Kind::Output:
      os << t->chan << "!" << to_string(t->expr);
      break;
    case Term::Kind::Seq:
      paren(3, [&] {
        pp(os, t->left, 4);
        os << "; ";
        pp(os, t->right, 3);
      });
      break;
    case Term::Kind::Guard:
      paren(4, [&] {
        os << to_string(t->cond) << " -> ";
        pp(os, t->left, 5);
      });
      break;
    case Term::Kind::IntChoice:
      paren(2, [&] {
        pp(os, t->left, 3);
        os << " |~| ";
        pp(os, t->right, 2);
      });
      break;
    case Term::Kind::Repeat:
      os << "(";
      pp(os, t->left, 0);
      os << ")*{" << t->bound << "}";
      break;
    case Term::Kind::ExtChoice: {
      os << "[";
      for (std::size_t i = 0; i < t->branches.size(); ++i) {
        if (i) os << " [] ";
        auto& c = t->branches[i].first;
        if (c.is_input)
          os << c.chan << "?" << c.var;
        else
          os << c.chan << "!" << to_string(c.expr);
        os << " -> ";
        pp(os, t->branches[i].second, 5);
      }
      os << "]";
      break;
    }
    case Term::Kind::Ode:
    case Term::Kind::OdeInterrupt: {
      os << "<";
      if (!t->ode->label.empty()) os << "@" << t->ode->label << " ";
      for (std::size_t i = 0; i < t->ode->eqs.size(); ++i) {
        if (i) os << ", ";
        os << t->ode->eqs[i].first << "_dot = " << to_string(t->ode->eqs[i].second);
      }
      os << " & " << to_string(t->cond) << ">";
      if (t->kind == Term::Kind::OdeInterrupt) {
        os << " |> [";
        for (std::size_t i = 0; i < t->branches.size(); ++i) {
          if (i) os << " [] ";
          auto& c = t->branches[i].first;
          if (c.is_input)
            os << c.chan << "?" << c.var;
          else
            os << c.chan << "!" << to_string(c.expr);
          os << " -> ";
          pp(os, t->branches[i].second, 5);
        }
        os << "]";
      }
      break;
    }
    case Term::Kind::Parallel:
      paren(1, [&] {
        pp(os, t->left, 2);
        os << " || ";
        pp(os, t->right, 1);
      });
      break;
  }
}

}  // namespace

std::string pretty_print(const TermPtr& t) {
  std::ostringstream os;
  pp(os, t, 0);
  return os.str();
}

}  // namespace hcsp

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hcsp/discretize.hpp"
#include "hcsp/json_io.hpp"
#include "hcsp/parser.hpp"
#include "hcsp/reach.hpp"

namespace {

using namespace hcsp;

std::size_t state_cap() {
  if (const char* s = std::getenv("HCSP_STATE_CAP")) {
    char* end = nullptr;
    auto v = std::strtoull(s, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 200000;
}

Valuation seeded_init(const Model& m, const TermPtr& extra = nullptr) {
  Valuation init = m.init;
  auto seed = [&](const TermPtr& p) {
    if (!p) return;
    for (auto& v : vars(p))
      if (is_readiness_var(v) && !init.count(v)) init[v] = 0.0;
  };
  seed(m.system);
  seed(extra);
  return init;
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream f(path);
  f << text << "\n";
}

/// Emit a discretized model as re-parseable .hcsp text.
std::string emit_model(const Model& m, const TermPtr& system) {
  std::ostringstream os;
  os << "#vars ";
  bool first = true;
  for (auto& [k, v] : seeded_init(m, system)) {
    if (is_aux_var(k) && !is_readiness_var(k)) continue;
    os << (first ? "" : ", ") << k << "=" << v;
    first = false;
  }
  os << "\n\nsystem ::=\n  " << pretty_print(system) << "\n";
  return os.str();
}

struct Options {
  std::string model;
  double h = 0.05, eps = 0.1, d = 0, delta = 0.5;
  double step = 0.1, horizon = 40, sim_time = 45;
  std::string safe_spec, out, emit_json, emit_csv;
  bool explain = false;
};

int cmd_parse(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  for (auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << pretty_print(m.system) << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  auto trace = simulate(m.system, seeded_init(m), o.step, o.sim_time);
  std::ostringstream os;
  write_trace_csv(os, trace);
  write_out(o.emit_csv.empty() ? o.out : o.emit_csv, os.str());
  return 0;
}

int cmd_discretize(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  auto Tmap = equilibrium_times(m.system, m.init, o.eps);
  if (o.explain) {
    for (auto& ode : collect_odes(m.system)) {
      auto key = ode_key(*ode);
      if (!Tmap.count(key)) continue;
      VectorField f(*ode);
      f.params = m.init;
      std::vector<double> x0;
      for (auto& [var, rhs] : ode->eqs) x0.push_back(m.init.at(var));
      if (auto b = choose_step(f, x0, Tmap.at(key), o.eps))
        std::cerr << "ODE " << key << " (T=" << Tmap.at(key) << "): "
                  << budget_json(*b) << "\n";
      else
        std::cerr << "ODE " << key << ": no step from the menu satisfies the bound\n";
    }
  }
  auto D = discretize(m.system, o.h, o.eps, Tmap);
  write_out(o.out, emit_model(m, D));
  return 0;
}

int cmd_bisim(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  auto Tmap = equilibrium_times(m.system, m.init, o.eps);
  auto D = discretize(m.system, o.h, o.eps, Tmap);
  double d = o.d > 0 ? o.d : o.h;
  auto res = approx_bisimilar(m.system, D, seeded_init(m, D), d, o.h, o.eps,
                              Tmap, state_cap());
  if (!res.error.empty()) {
    std::cerr << "error: " << res.error << "\n";
    return 2;
  }
  std::cout << "verdict: " << (res.bisimilar ? "bisimilar" : "not-bisimilar")
            << "\nstates: " << res.t1.states.size() << " / "
            << res.t2.states.size() << "\nrelation: " << res.relation.size()
            << " pairs\n";
  if (!o.emit_json.empty()) write_out(o.emit_json, relation_json(res.relation));
  return res.bisimilar ? 0 : 1;
}

std::pair<ReachBox, BoundedTS> discrete_reach(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  auto Tmap = equilibrium_times(m.system, m.init, o.eps);
  auto D = discretize(m.system, o.h, o.eps, Tmap);
  double d = o.d > 0 ? o.d : o.h;
  auto ts = build_ts(D, seeded_init(m, D), d, Tmap, state_cap());
  if (ts.capped) throw std::runtime_error("state cap reached");
  return {reachable(ts), std::move(ts)};
}

int cmd_reach(const Options& o) {
  auto [box, ts] = discrete_reach(o);
  std::ostringstream os;
  os << "discrete:\n" << reach_json(box) << "\nwidened:\n"
     << reach_json(widen(box, o.eps));
  write_out(o.emit_json.empty() ? o.out : o.emit_json, os.str());
  return 0;
}

std::map<std::string, std::pair<double, double>> parse_safe(
    const std::string& spec) {
  // var=lo:hi[,var=lo:hi...]
  std::map<std::string, std::pair<double, double>> out;
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    auto eq = item.find('=');
    auto colon = item.find(':', eq);
    if (eq == std::string::npos || colon == std::string::npos)
      throw std::runtime_error("bad --safe spec: " + item);
    out[item.substr(0, eq)] = {std::stod(item.substr(eq + 1, colon - eq - 1)),
                               std::stod(item.substr(colon + 1))};
  }
  return out;
}

int cmd_verify(const Options& o) {
  auto safe = parse_safe(o.safe_spec);
  auto [box, ts] = discrete_reach(o);
  auto verdict = safety(box, safe, o.eps);
  bool ok = verdict == SafetyVerdict::Safe;
  std::cout << reach_json(widen(box, o.eps), ok ? "safe" : "not-proven") << "\n";
  return ok ? 0 : 1;
}

int cmd_robust(const Options& o) {
  auto m = parse_model_file(o.model, {{"HORIZON", o.horizon}});
  RobustBudget b;
  b.horizon = o.sim_time;
  auto rep = check_robust_safety(m.system, m.init, o.delta, o.eps, b);
  auto text = robust_json(rep);
  std::cout << text << "\n";
  if (!o.emit_json.empty()) write_out(o.emit_json, text);
  return rep.verdict == RobustSafetyReport::Verdict::Robust ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HCSP analysis: parsing, simulation, discretization, "
               "approximate bisimulation, reachability, robust safety"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");
  Options o;

  auto add_common = [&](CLI::App* c, bool needs_prec) {
    c->set_help_flag("--help", "print help");
    c->add_option("model", o.model, "model file (.hcsp)")->required();
    c->add_option("--horizon", o.horizon, "repetition bound for HORIZON");
    if (needs_prec) {
      c->add_option("--h", o.h, "discretization step");
      c->add_option("--eps", o.eps, "value precision");
      c->add_option("--d", o.d, "exploration delay step (default: --h)");
    }
    return c;
  };

  add_common(app.add_subcommand("parse", "parse and pretty-print"), false);
  auto* sim = add_common(app.add_subcommand("simulate", "deterministic run"), false);
  sim->add_option("--step", o.step, "delay quantum");
  sim->add_option("--time", o.sim_time, "simulated time");
  sim->add_option("--emit-csv", o.emit_csv, "CSV output path");
  auto* disc = add_common(app.add_subcommand("discretize", "emit ODE-free model"), true);
  disc->add_option("--out", o.out, "output path");
  disc->add_flag("--explain-step", o.explain, "print error budgets per ODE");
  auto* bis = add_common(app.add_subcommand("bisim", "decide approximate bisimulation"), true);
  bis->add_option("--emit-json", o.emit_json, "relation output path");
  auto* rch = add_common(app.add_subcommand("reach", "reachable interval hull"), true);
  rch->add_option("--emit-json", o.emit_json, "report output path");
  auto* ver = add_common(app.add_subcommand("verify", "reach + safety verdict"), true);
  ver->add_option("--safe", o.safe_spec, "safe box, e.g. d=3.3:6.6")->required();
  auto* rob = add_common(app.add_subcommand("robust", "robust-safety check"), false);
  rob->add_option("--delta", o.delta, "time slack");
  rob->add_option("--eps", o.eps, "value margin");
  rob->add_option("--time", o.sim_time, "exploration horizon");
  rob->add_option("--emit-json", o.emit_json, "report output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("parse")) return cmd_parse(o);
    if (app.got_subcommand("simulate")) return cmd_simulate(o);
    if (app.got_subcommand("discretize")) return cmd_discretize(o);
    if (app.got_subcommand("bisim")) return cmd_bisim(o);
    if (app.got_subcommand("reach")) return cmd_reach(o);
    if (app.got_subcommand("verify")) return cmd_verify(o);
    if (app.got_subcommand("robust")) return cmd_robust(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

#include "hcsp/json_io.hpp"

#include <ostream>

#include "json.hpp"

namespace hcsp {

namespace {
using nlohmann::json;

json label_obj(const Label& l) {
  switch (l.kind) {
    case Label::Kind::Tau:
      return {{"kind", "tau"}};
    case Label::Kind::Delay:
      return {{"kind", "delay"}, {"d", l.d}};
    case Label::Kind::Comm:
      return {{"kind", "comm"},
              {"chan", l.chan},
              {"dir", l.is_input ? "?" : "!"},
              {"value", l.value}};
  }
  return {};
}

}  // namespace

std::string label_json(const Label& l) { return label_obj(l).dump(); }

std::string reach_json(const ReachBox& r, const std::string& verdict) {
  json j;
  for (auto& [var, iv] : r.intervals) j["reach"][var] = {iv.first, iv.second};
  if (!verdict.empty()) j["verdict"] = verdict;
  return j.dump(2);
}

std::string relation_json(const Relation& rel) {
  json j = json::array();
  for (auto& [a, b] : rel) j.push_back({a, b});
  return j.dump();
}

std::string robust_json(const RobustSafetyReport& rep) {
  json j;
  switch (rep.verdict) {
    case RobustSafetyReport::Verdict::Robust: j["verdict"] = "robust"; break;
    case RobustSafetyReport::Verdict::Violated: j["verdict"] = "violated"; break;
    case RobustSafetyReport::Verdict::Inconclusive:
      j["verdict"] = "inconclusive";
      break;
  }
  j["explored_time"] = rep.explored_time;
  j["steps"] = rep.steps;
  j["witnesses"] = json::array();
  for (auto& w : rep.witnesses) {
    json wj{{"location", w.location}, {"time", w.time}, {"margin", w.margin}};
    for (auto& [k, v] : w.state)
      if (!is_aux_var(k)) wj["state"][k] = v;
    j["witnesses"].push_back(wj);
  }
  return j.dump(2);
}

std::string budget_json(const ErrorBudget& b) {
  json j{{"h", b.h},   {"eps1", b.eps1}, {"L", b.L},
         {"M2", b.M2}, {"M", b.M},       {"bound", b.bound}};
  return j.dump(2);
}

void write_ts_jsonl(std::ostream& os, const BoundedTS& ts) {
  for (auto& t : ts.compressed) {
    json j{{"src", ts.index.at(t.src)},
           {"label", label_obj(t.label)},
           {"dst", ts.index.at(t.dst)}};
    os << j.dump() << "\n";
  }
  for (std::size_t i = 0; i < ts.states.size(); ++i) {
    json j;
    j["id"] = i;
    j["term"] = term_hash(ts.states[i].term);
    for (auto& [k, v] : ts.states[i].val) j["val"][k] = v;
    os << j.dump() << "\n";
  }
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  os << "time,variable,value\n";
  for (auto& p : trace)
    for (auto& [k, v] : p.state.val)
      if (!is_aux_var(k)) os << p.time << "," << k << "," << v << "\n";
}

}  // namespace hcsp

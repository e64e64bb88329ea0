#pragma once

#include <iosfwd>
#include <string>

#include "hcsp/discretize.hpp"
#include "hcsp/reach.hpp"

namespace hcsp {

/// JSON object for a label / reach box / relation / robust-safety report;
/// returned as serialized text to keep nlohmann out of the public headers.
std::string label_json(const Label& l);
std::string reach_json(const ReachBox& r, const std::string& verdict = "");
std::string relation_json(const Relation& rel);
std::string robust_json(const RobustSafetyReport& rep);
std::string budget_json(const ErrorBudget& b);

/// Transition-system export: one JSON line per transition
/// {"src": id, "label": {...}, "dst": id}, followed by a state table
/// mapping id -> {"term": hash, "val": {...}}.
void write_ts_jsonl(std::ostream& os, const BoundedTS& ts);

/// CSV trace export: time,variable,value rows for each trace point.
void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

}  // namespace hcsp

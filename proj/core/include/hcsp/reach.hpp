#pragma once

#include <map>
#include <string>

#include "hcsp/bisim.hpp"

namespace hcsp {

/// Interval hull of the observations of a bounded transition system.
struct ReachBox {
  std::map<std::string, std::pair<double, double>> intervals;  // var -> [lo, hi]

  bool contains(const ReachBox& inner) const;
};

/// Componentwise min/max of the observations over all states reachable
/// from the initial state (over compressed transitions), restricted to
/// observed_vars (empty = all observation variables). Unknown variable
/// names raise an error.
ReachBox reachable(const BoundedTS& ts,
                   const std::vector<std::string>& observed_vars = {});

/// [lo, hi] -> [lo - eps, hi + eps], exact arithmetic on the endpoints.
ReachBox widen(const ReachBox& r, double eps);

enum class SafetyVerdict { Safe, NotProven };

/// Safe iff widen(r, eps) lies inside the safe box (sound direction only).
SafetyVerdict safety(const ReachBox& r,
                     const std::map<std::string, std::pair<double, double>>& safe,
                     double eps);

}  // namespace hcsp

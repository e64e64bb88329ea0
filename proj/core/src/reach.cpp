#include "hcsp/reach.hpp"

#include <algorithm>
#include <stdexcept>

namespace hcsp {

bool ReachBox::contains(const ReachBox& inner) const {
  for (auto& [var, iv] : inner.intervals) {
    auto it = intervals.find(var);
    if (it == intervals.end()) return false;
    if (iv.first < it->second.first || iv.second > it->second.second)
      return false;
  }
  return true;
}

ReachBox reachable(const BoundedTS& ts,
                   const std::vector<std::string>& observed_vars) {
  std::vector<std::string> vars =
      observed_vars.empty() ? ts.obs_vars : observed_vars;
  std::vector<std::size_t> cols;
  for (auto& v : vars) {
    auto it = std::find(ts.obs_vars.begin(), ts.obs_vars.end(), v);
    if (it == ts.obs_vars.end())
      throw std::runtime_error("unknown observed variable: " + v);
    cols.push_back(static_cast<std::size_t>(it - ts.obs_vars.begin()));
  }
  ReachBox box;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    double lo = 0, hi = 0;
    bool first = true;
    for (int id : ts.reachable) {
      double x = ts.obs[id][cols[k]];
      if (first) {
        lo = hi = x;
        first = false;
      } else {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    box.intervals[vars[k]] = {lo, hi};
  }
  return box;
}

ReachBox widen(const ReachBox& r, double eps) {
  ReachBox out;
  for (auto& [var, iv] : r.intervals)
    out.intervals[var] = {iv.first - eps, iv.second + eps};
  return out;
}

SafetyVerdict safety(const ReachBox& r,
                     const std::map<std::string, std::pair<double, double>>& safe,
                     double eps) {
  auto w = widen(r, eps);
  for (auto& [var, iv] : safe) {
    auto it = w.intervals.find(var);
    if (it == w.intervals.end()) return SafetyVerdict::NotProven;
    if (it->second.first < iv.first || it->second.second > iv.second)
      return SafetyVerdict::NotProven;
  }
  return SafetyVerdict::Safe;
}

}  // namespace hcsp

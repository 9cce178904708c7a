#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "replaykit/core_model.hpp"

namespace replaykit {

/// Per-class availability counts, keyed by class label.
using ClassCounts = std::map<std::string, std::uint64_t>;

ClassCounts class_counts(const ClassInventory& inventory);

struct CapParams {
  std::uint64_t m_min = 3;
  std::uint64_t m_max = 20;
  double p_max = 0.30;
};

/// min(m_max, n, floor(p_max * n))
std::uint64_t effective_cap(std::uint64_t n, std::uint64_t m_max, double p_max);

/// Nearest integer, halves rounded away from zero. Requires x >= 0.
std::uint64_t round_half_away(double x);

/// Quota a class of size n receives at scale alpha before greedy
/// adjustment: round(alpha * sqrt(n)) clipped to [m_min, cap], where the
/// cap wins when cap < m_min.
std::uint64_t scaled_quota(std::uint64_t n, double alpha, const CapParams& caps);

/// Sum of scaled_quota over all classes.
std::uint64_t total_for_alpha(const ClassCounts& counts, double alpha, const CapParams& caps);

/// Count-aware square-root allocation of `budget` replay slots.
///
/// alpha is bracketed by doubling from 1.0 (at most 60 doublings) and then
/// refined with 64 bisection steps, keeping the largest tested alpha whose
/// total fits the budget. Quotas are then nudged one unit at a time until
/// they sum to the budget: increments go to the smallest quota that still
/// has headroom, decrements come off the largest quota and never go below
/// one. Ties prefer the larger class, then the lexicographically smaller
/// label.
///
/// Throws InfeasibleBudget when budget < number of classes, or
/// InvalidArgument on an empty inventory or bad caps.
AllocationPlan allocate_budget(const ClassCounts& counts, std::uint64_t budget, const CapParams& caps);

inline AllocationPlan allocate_budget(const ClassInventory& inventory, std::uint64_t budget,
                                      const CapParams& caps) {
  return allocate_budget(class_counts(inventory), budget, caps);
}

}  // namespace replaykit

#include "replaykit/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "replaykit/error.hpp"

namespace replaykit {

namespace {

// Absorbs representation error in p_max * n (e.g. 0.29 * 100 = 28.999...).
constexpr double kFloorSlack = 1e-9;
constexpr int kMaxDoublings = 60;
constexpr int kBisectionSteps = 64;

void check_caps(const CapParams& caps) {
  if (caps.m_min < 1) throw Error(ErrorCode::InvalidArgument, "m_min must be positive");
  if (caps.m_max < caps.m_min) throw Error(ErrorCode::InvalidArgument, "m_max must be >= m_min");
  if (!(caps.p_max > 0.0 && caps.p_max <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p_max must be in (0, 1]");
}

// Total order used for every greedy choice: larger class first, then the
// lexicographically smaller label.
bool tie_precedes(const ClassAllocation& a, const ClassAllocation& b) {
  if (a.n != b.n) return a.n > b.n;
  return a.class_label < b.class_label;
}

}  // namespace

ClassCounts class_counts(const ClassInventory& inventory) {
  ClassCounts counts;
  for (const auto& [label, records] : inventory.classes()) counts.emplace(label, records.size());
  return counts;
}

std::uint64_t effective_cap(std::uint64_t n, std::uint64_t m_max, double p_max) {
  const auto share = static_cast<std::uint64_t>(std::floor(p_max * static_cast<double>(n) + kFloorSlack));
  return std::min({m_max, n, share});
}

std::uint64_t round_half_away(double x) {
  return static_cast<std::uint64_t>(std::round(x));
}

std::uint64_t scaled_quota(std::uint64_t n, double alpha, const CapParams& caps) {
  const std::uint64_t cap = effective_cap(n, caps.m_max, caps.p_max);
  const std::uint64_t raw = round_half_away(alpha * std::sqrt(static_cast<double>(n)));
  return std::min(std::max(raw, caps.m_min), cap);
}

std::uint64_t total_for_alpha(const ClassCounts& counts, double alpha, const CapParams& caps) {
  std::uint64_t total = 0;
  for (const auto& [label, n] : counts) total += scaled_quota(n, alpha, caps);
  return total;
}

AllocationPlan allocate_budget(const ClassCounts& counts, std::uint64_t budget, const CapParams& caps) {
  check_caps(caps);
  if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "inventory has no classes");
  for (const auto& [label, n] : counts)
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "class '" + label + "' has no assets");
  if (budget < counts.size())
    throw Error(ErrorCode::InfeasibleBudget, "budget " + std::to_string(budget) + " is below the class count " +
                                                 std::to_string(counts.size()));

  auto fits = [&](double alpha) { return total_for_alpha(counts, alpha, caps) <= budget; };

  double lo = 0.0;
  double hi = 1.0;
  bool bracketed = false;
  if (!fits(1.0)) {
    bracketed = true;
  } else {
    lo = 1.0;
    for (int i = 0; i < kMaxDoublings; ++i) {
      const double next = lo * 2.0;
      if (!fits(next)) {
        hi = next;
        bracketed = true;
        break;
      }
      lo = next;
    }
  }
  if (bracketed) {
    for (int i = 0; i < kBisectionSteps; ++i) {
      const double mid = lo + (hi - lo) / 2.0;
      if (fits(mid))
        lo = mid;
      else
        hi = mid;
    }
  }

  AllocationPlan plan;
  plan.budget = budget;
  plan.alpha = lo;
  for (const auto& [label, n] : counts)
    plan.classes.push_back({label, n, effective_cap(n, caps.m_max, caps.p_max), scaled_quota(n, lo, caps)});

  std::uint64_t total = plan.total_quota();
  while (total < budget) {
    ClassAllocation* pick = nullptr;
    for (auto& c : plan.classes) {
      if (c.quota >= c.cap) continue;
      if (!pick || c.quota < pick->quota || (c.quota == pick->quota && tie_precedes(c, *pick))) pick = &c;
    }
    if (!pick) break;
    ++pick->quota;
    ++total;
  }
  while (total > budget) {
    ClassAllocation* pick = nullptr;
    for (auto& c : plan.classes) {
      if (c.quota <= 1) continue;
      if (!pick || c.quota > pick->quota || (c.quota == pick->quota && tie_precedes(c, *pick))) pick = &c;
    }
    if (!pick)
      throw Error(ErrorCode::InfeasibleBudget, "every quota is already 1 but the total exceeds the budget");
    --pick->quota;
    --total;
  }
  plan.shortfall = budget - total;
  return plan;
}

}  // namespace replaykit

#pragma once

#include <cstddef>
#include <vector>

#include "cyclone/community.hpp"
#include "cyclone/graph.hpp"

namespace cyclone {

struct FilterConfig {
  /// Edges survive the time filter when year_last - year_first < t0_years.
  int t0_years = 1;
  /// Edges survive the amount filter when amount < amount_threshold.
  Amount amount_threshold = Amount::from_major_units(10'000);
  std::size_t min_community_order = 3;

  void validate() const;
};

inline bool passes_time(const TransactionEdge& e, int t0_years) {
  return e.period() < t0_years;
}

inline bool passes_amount(const TransactionEdge& e, Amount threshold) {
  return e.amount < threshold;
}

/// Edge subgraph of edges whose period is strictly below t0_years.
TransactionGraph time_filter(const TransactionGraph& graph, int t0_years);

/// Edge subgraph of edges whose amount is strictly below `threshold`.
TransactionGraph amount_filter(const TransactionGraph& graph, Amount threshold);

/// Labels of communities with at least `min_order` members, ascending.
std::vector<CommunityId> community_order_filter(const Partition& partition,
                                                std::size_t min_order);

}  // namespace cyclone

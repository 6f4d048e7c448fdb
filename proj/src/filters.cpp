#include "cyclone/filters.hpp"

#include "cyclone/error.hpp"

namespace cyclone {

void FilterConfig::validate() const {
  if (t0_years < 1) throw InputError("t0_years must be >= 1");
  if (amount_threshold <= Amount{}) throw InputError("amount_threshold must be > 0");
  if (min_community_order < 1) throw InputError("min_community_order must be >= 1");
}

TransactionGraph time_filter(const TransactionGraph& graph, int t0_years) {
  return edge_subgraph(graph, [t0_years](const TransactionEdge& e) { return passes_time(e, t0_years); });
}

TransactionGraph amount_filter(const TransactionGraph& graph, Amount threshold) {
  return edge_subgraph(graph,
                       [threshold](const TransactionEdge& e) { return passes_amount(e, threshold); });
}

std::vector<CommunityId> community_order_filter(const Partition& partition,
                                                std::size_t min_order) {
  std::vector<CommunityId> kept;
  const auto sizes = partition.sizes();
  for (CommunityId c = 0; c < sizes.size(); ++c)
    if (sizes[c] >= min_order) kept.push_back(c);
  return kept;
}

}  // namespace cyclone

#pragma once

// Independent reference implementations. They share no code with the
// library beyond plain data: dense matrices, brute-force enumeration.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

struct WeightedArc {
  std::size_t src;
  std::size_t dst;
  double weight;
};

/// Dense symmetric A with A_ij = w(i->j) + w(j->i).
inline std::vector<std::vector<long double>> symmetric_matrix(std::size_t n,
                                                              const std::vector<WeightedArc>& arcs) {
  std::vector<std::vector<long double>> a(n, std::vector<long double>(n, 0.0L));
  for (const auto& e : arcs) {
    a[e.src][e.dst] += e.weight;
    a[e.dst][e.src] += e.weight;
  }
  return a;
}

/// Q = 1/(2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j), evaluated as a
/// plain double loop.
inline long double modularity(const std::vector<std::vector<long double>>& a,
                              const std::vector<std::size_t>& community) {
  const std::size_t n = a.size();
  std::vector<long double> k(n, 0.0L);
  long double two_m = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  long double q = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (community[i] == community[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

/// Visits every set partition of {0..n-1} as a restricted growth string.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> rgs(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
    if (i == n) {
      visit(rgs);
      return;
    }
    for (std::size_t c = 0; c <= blocks; ++c) {
      rgs[i] = c;
      rec(i + 1, std::max(blocks, c + 1));
    }
  };
  if (n == 0)
    visit(rgs);
  else
    rec(1, 1);
}

struct BestPartition {
  long double q = -1.0L;
  std::vector<std::size_t> community;
  std::size_t partitions_seen = 0;
};

inline BestPartition best_partition(const std::vector<std::vector<long double>>& a) {
  BestPartition best;
  for_each_partition(a.size(), [&](const std::vector<std::size_t>& c) {
    ++best.partitions_seen;
    const long double q = modularity(a, c);
    if (q > best.q) {
      best.q = q;
      best.community = c;
    }
  });
  return best;
}

/// All simple directed cycles with min_len <= length <= max_len, each
/// listed once starting at its smallest node. Extends paths from every
/// start node through larger nodes only.
inline std::set<std::vector<std::size_t>> simple_cycles(std::size_t n,
                                                        const std::set<std::pair<std::size_t, std::size_t>>& arcs,
                                                        std::size_t min_len, std::size_t max_len) {
  std::set<std::vector<std::size_t>> out;
  std::vector<std::size_t> path;
  std::vector<char> on_path(n, 0);
  std::function<void(std::size_t)> extend = [&](std::size_t start) {
    const std::size_t tail = path.back();
    if (arcs.count({tail, start}) && path.size() >= min_len && path.size() <= max_len) out.insert(path);
    if (path.size() == max_len) return;
    for (std::size_t w = start + 1; w < n; ++w) {
      if (on_path[w] || !arcs.count({tail, w})) continue;
      path.push_back(w);
      on_path[w] = 1;
      extend(start);
      on_path[w] = 0;
      path.pop_back();
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    path = {s};
    on_path[s] = 1;
    extend(s);
    on_path[s] = 0;
  }
  return out;
}

}  // namespace oracle

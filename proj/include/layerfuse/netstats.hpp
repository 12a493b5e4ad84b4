#pragma once

// Per-graph summary statistics, averaged over the active nodes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace layerfuse {

struct NetworkStats {
  std::size_t active_nodes = 0;
  std::size_t edges = 0;
  double avg_weighted_degree = 0.0;
  double avg_clustering = 0.0;         ///< weighted, geometric mean of normalized triangle weights
  double avg_binary_clustering = 0.0;  ///< on the unweighted support
  double avg_closeness = 0.0;          ///< distances 1/w
};

namespace detail {

inline double closeness(const WeightedGraph& g, NodeId src, std::size_t n_active) {
  std::vector<double> dist(g.node_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  std::size_t reached = 0;
  double total = 0.0;
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    ++reached;
    total += d;
    for (const auto& nb : g.neighbors(u)) {
      const double nd = d + 1.0 / nb.w;
      if (nd < dist[nb.node]) {
        dist[nb.node] = nd;
        pq.push({nd, nb.node});
      }
    }
  }
  if (reached <= 1 || !(total > 0.0)) return 0.0;
  const double r = static_cast<double>(reached - 1);
  return (r / total) * (r / static_cast<double>(n_active - 1));
}

}  // namespace detail

inline NetworkStats network_stats(const WeightedGraph& g) {
  if (g.empty()) throw validation_error("network_stats: graph has no edges");
  const auto nodes = active_nodes(g);
  double max_w = 0.0;
  for (const auto& e : g.edges()) max_w = std::max(max_w, e.w);

  NetworkStats s;
  s.active_nodes = nodes.size();
  s.edges = g.edge_count();
  for (auto u : nodes) {
    s.avg_weighted_degree += g.strength(u);
    const auto nbrs = g.neighbors(u);
    const auto k = nbrs.size();
    if (k >= 2) {
      double weighted = 0.0;
      std::size_t closed = 0;
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
          const double w_jk = g.weight(nbrs[a].node, nbrs[b].node);
          if (w_jk <= 0.0) continue;
          ++closed;
          weighted += std::cbrt((nbrs[a].w / max_w) * (nbrs[b].w / max_w) * (w_jk / max_w));
        }
      const double pairs = static_cast<double>(k) * static_cast<double>(k - 1) / 2.0;
      s.avg_clustering += weighted / pairs;
      s.avg_binary_clustering += static_cast<double>(closed) / pairs;
    }
    s.avg_closeness += detail::closeness(g, u, nodes.size());
  }
  const double n = static_cast<double>(nodes.size());
  s.avg_weighted_degree /= n;
  s.avg_clustering /= n;
  s.avg_binary_clustering /= n;
  s.avg_closeness /= n;
  return s;
}

}  // namespace layerfuse

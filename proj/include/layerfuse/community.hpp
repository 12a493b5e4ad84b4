#pragma once

// Weighted modularity and a Leiden-style maximizer (local moving, refinement,
// aggregation), best of several randomized runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace layerfuse {

/// Community assignment over a set of nodes (normally the active nodes of one
/// graph). Ids are renumbered 0..K-1 in order of first appearance along the
/// ascending node list, so equal partitions compare equal.
class Partition {
 public:
  Partition() = default;

  Partition(RegistryPtr registry, std::vector<NodeId> nodes, const std::vector<std::uint32_t>& labels)
      : registry_(std::move(registry)), nodes_(std::move(nodes)) {
    if (!registry_) throw validation_error("partition: missing registry");
    if (labels.size() != nodes_.size()) throw validation_error("partition: one label per node required");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i] >= registry_->size()) throw validation_error("partition: node id out of range");
      if (i > 0 && nodes_[i] <= nodes_[i - 1]) throw validation_error("partition: nodes must be strictly ascending");
    }
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    community_.reserve(labels.size());
    for (auto l : labels) {
      auto [it, fresh] = remap.try_emplace(l, static_cast<std::uint32_t>(sizes_.size()));
      if (fresh) sizes_.push_back(0);
      ++sizes_[it->second];
      community_.push_back(it->second);
    }
  }

  const RegistryPtr& registry() const noexcept { return registry_; }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  const std::vector<std::uint32_t>& communities() const noexcept { return community_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t K() const noexcept { return sizes_.size(); }
  std::size_t n() const noexcept { return nodes_.size(); }

  std::optional<std::uint32_t> community_of(NodeId u) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), u);
    if (it == nodes_.end() || *it != u) return std::nullopt;
    return community_[static_cast<std::size_t>(it - nodes_.begin())];
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.nodes_ == b.nodes_ && a.community_ == b.community_;
  }

 private:
  RegistryPtr registry_;
  std::vector<NodeId> nodes_;
  std::vector<std::uint32_t> community_;
  std::vector<std::size_t> sizes_;
};

/// Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j).
inline double modularity(const WeightedGraph& g, const Partition& part, double gamma = 1.0) {
  const double m = g.total_weight();
  if (!(m > 0.0)) throw validation_error("modularity: graph has no edge weight");
  if (!same_registry(g.registry(), part.registry())) throw validation_error("modularity: registry mismatch");
  std::vector<double> in(part.K(), 0.0), tot(part.K(), 0.0);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (g.degree(u) == 0) continue;
    const auto cu = part.community_of(u);
    if (!cu) throw validation_error("modularity: partition does not cover node '" + g.registry()->label(u) + "'");
    for (const auto& nb : g.neighbors(u)) {
      tot[*cu] += nb.w;
      if (part.community_of(nb.node) == cu) in[*cu] += nb.w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < part.K(); ++c) q += in[c] / (2.0 * m) - gamma * (tot[c] / (2.0 * m)) * (tot[c] / (2.0 * m));
  return q;
}

struct DetectOptions {
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  double theta = 0.01;  ///< refinement randomness
  double gamma = 1.0;   ///< resolution
  unsigned threads = 1;
};

struct DetectResult {
  Partition partition;
  double Q = 0.0;
  std::size_t run = 0;              ///< index of the winning run
  std::vector<double> pass_quality;  ///< Q after each local-moving pass of that run
};

namespace leiden {

/// Working graph: nodes may carry self-loops after aggregation.
struct Net {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
  std::vector<double> self;                                        // internal weight, each edge once
  std::vector<double> k;                                           // strength incl. 2 * self
  double two_m = 0.0;
  double gamma = 1.0;

  std::size_t size() const { return adj.size(); }
};

inline double quality(const Net& g, const std::vector<std::uint32_t>& c) {
  const std::size_t K = c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
  std::vector<double> in(K, 0.0), tot(K, 0.0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    tot[c[v]] += g.k[v];
    in[c[v]] += 2.0 * g.self[v];
    for (auto [u, w] : g.adj[v])
      if (c[u] == c[v]) in[c[v]] += w;
  }
  double q = 0.0;
  for (std::size_t i = 0; i < K; ++i) q += in[i] / g.two_m - g.gamma * (tot[i] / g.two_m) * (tot[i] / g.two_m);
  return q;
}

inline std::uint32_t renumber(std::vector<std::uint32_t>& c) {
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (auto& x : c) x = remap.try_emplace(x, static_cast<std::uint32_t>(remap.size())).first->second;
  return static_cast<std::uint32_t>(remap.size());
}

inline std::vector<std::uint32_t> random_order(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(order);
  return order;
}

constexpr double kMinGain = 1e-12;

/// Queue-based local moving. Gains are in edge-weight units:
/// k_{v,C} - k_v tot_C / 2m.
inline bool move_nodes(const Net& g, std::vector<std::uint32_t>& c, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<double> tot(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    tot[c[v]] += g.k[v];
    ++count[c[v]];
  }
  std::vector<std::uint32_t> empty;
  for (std::size_t i = n; i-- > 0;)
    if (count[i] == 0) empty.push_back(static_cast<std::uint32_t>(i));

  std::deque<std::uint32_t> queue;
  std::vector<char> queued(n, 1);
  for (auto v : random_order(n, rng)) queue.push_back(v);

  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  bool changed = false;
  const double scale = g.gamma / g.two_m;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    const auto old = c[v];

    for (auto [u, w] : g.adj[v]) {
      if (link[c[u]] == 0.0) touched.push_back(c[u]);
      link[c[u]] += w;
    }
    tot[old] -= g.k[v];
    const double stay = link[old] - g.k[v] * tot[old] * scale;
    double best_gain = stay;
    std::uint32_t best = old;
    for (auto cand : touched) {
      if (cand == old) continue;
      const double gain = link[cand] - g.k[v] * tot[cand] * scale;
      if (gain > best_gain + kMinGain) {
        best_gain = gain;
        best = cand;
      }
    }
    // an empty community has gain 0; one exists whenever v is not alone
    if (count[old] > 1 && 0.0 > best_gain + kMinGain) best = empty.back();
    for (auto t : touched) link[t] = 0.0;
    touched.clear();

    tot[best] += g.k[v];
    if (best == old) continue;
    if (!empty.empty() && best == empty.back()) empty.pop_back();
    --count[old];
    ++count[best];
    if (count[old] == 0) empty.push_back(old);
    c[v] = best;
    changed = true;
    for (auto [u, w] : g.adj[v])
      if (!queued[u] && c[u] != best) {
        queued[u] = 1;
        queue.push_back(u);
      }
  }
  return changed;
}

/// Splits each community of `c` into well-connected sub-communities.
inline std::vector<std::uint32_t> refine(const Net& g, const std::vector<std::uint32_t>& c, double theta, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> r(n);
  for (std::size_t v = 0; v < n; ++v) r[v] = static_cast<std::uint32_t>(v);
  std::vector<double> tot_c(n, 0.0), tot_r(g.k), ext_r(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) tot_c[c[v]] += g.k[v];
  // ext_r: weight from a refined cluster to the rest of its community
  for (std::size_t v = 0; v < n; ++v)
    for (auto [u, w] : g.adj[v])
      if (c[u] == c[v]) ext_r[v] += w;
  std::vector<char> singleton(n, 1);
  const double scale = g.gamma / g.two_m;

  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<std::uint32_t, double>> cands;
  for (auto v : random_order(n, rng)) {
    if (!singleton[v]) continue;
    const auto C = c[v];
    // v must be well connected to its community
    if (ext_r[v] < g.k[v] * (tot_c[C] - g.k[v]) * scale) continue;

    for (auto [u, w] : g.adj[v]) {
      if (c[u] != C) continue;
      if (link[r[u]] == 0.0) touched.push_back(r[u]);
      link[r[u]] += w;
    }
    cands.clear();
    cands.push_back({r[v], 0.0});
    double best = 0.0;
    for (auto t : touched) {
      if (t == r[v]) continue;
      if (ext_r[t] < tot_r[t] * (tot_c[C] - tot_r[t]) * scale) continue;
      const double gain = link[t] - g.k[v] * tot_r[t] * scale;
      if (gain >= 0.0) {
        cands.push_back({t, gain});
        best = std::max(best, gain);
      }
    }
    std::uint32_t chosen = r[v];
    if (cands.size() > 1) {
      double mass = 0.0;
      for (auto& [t, gain] : cands) mass += gain = std::exp((gain - best) / theta);
      double x = rng.uniform() * mass;
      chosen = cands.back().first;
      for (auto [t, p] : cands) {
        if (x < p) {
          chosen = t;
          break;
        }
        x -= p;
      }
    }
    if (chosen != r[v]) {
      // update the cluster's outgoing weight within C: gains v's outside links, loses the internal ones
      const double to_chosen = link[chosen];
      ext_r[chosen] += ext_r[v] - 2.0 * to_chosen;
      tot_r[chosen] += g.k[v];
      tot_r[r[v]] = 0.0;
      r[v] = chosen;
      singleton[v] = 0;
      singleton[chosen] = 0;  // cluster ids are the ids of their unmoved founding node
    }
    for (auto t : touched) link[t] = 0.0;
    touched.clear();
  }
  return r;
}

/// Collapses each cluster of `r` into one node.
inline Net aggregate(const Net& g, const std::vector<std::uint32_t>& r, std::uint32_t K) {
  Net a;
  a.adj.resize(K);
  a.self.assign(K, 0.0);
  a.k.assign(K, 0.0);
  a.two_m = g.two_m;
  a.gamma = g.gamma;
  std::vector<std::unordered_map<std::uint32_t, double>> acc(K);
  for (std::size_t v = 0; v < g.size(); ++v) {
    a.self[r[v]] += g.self[v];
    a.k[r[v]] += g.k[v];
    for (auto [u, w] : g.adj[v]) {
      if (r[u] == r[v]) {
        if (u > v) a.self[r[v]] += w;
      } else {
        acc[r[v]][r[u]] += w;
      }
    }
  }
  for (std::uint32_t i = 0; i < K; ++i) {
    a.adj[i].assign(acc[i].begin(), acc[i].end());
    std::sort(a.adj[i].begin(), a.adj[i].end());
  }
  return a;
}

struct RunResult {
  std::vector<std::uint32_t> labels;
  double Q = 0.0;
  std::vector<double> pass_quality;
};

/// One randomized run on `base`, iterated until Q stops improving.
inline RunResult run(const Net& base, double theta, Rng& rng) {
  const std::size_t n = base.size();
  RunResult out;
  out.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) out.labels[v] = static_cast<std::uint32_t>(v);
  out.Q = quality(base, out.labels);

  for (;;) {
    const double before = out.Q;
    Net g = base;
    std::vector<std::uint32_t> c = out.labels;  // partition of g's nodes
    renumber(c);
    std::vector<std::uint32_t> member(n);  // original node -> node of g
    for (std::size_t v = 0; v < n; ++v) member[v] = static_cast<std::uint32_t>(v);
    for (;;) {
      move_nodes(g, c, rng);
      const auto K = renumber(c);
      std::vector<std::uint32_t> flat(n);
      for (std::size_t v = 0; v < n; ++v) flat[v] = c[member[v]];
      const double q = quality(base, flat);
      out.pass_quality.push_back(q);
      if (q >= out.Q) {
        out.Q = q;
        out.labels = flat;
      }
      if (K == g.size()) break;
      auto r = refine(g, c, theta, rng);
      auto R = renumber(r);
      if (R == g.size()) {
        // refinement merged nothing: aggregate on the coarse partition
        r = c;
        R = K;
      }
      std::vector<std::uint32_t> next_c(R);
      for (std::size_t v = 0; v < g.size(); ++v) next_c[r[v]] = c[v];
      g = aggregate(g, r, R);
      for (auto& m : member) m = r[m];
      c = std::move(next_c);
    }
    if (!(out.Q > before + kMinGain)) break;
  }
  return out;
}

inline Net from_graph(const WeightedGraph& g, const std::vector<NodeId>& nodes) {
  std::vector<std::uint32_t> pos(g.node_count(), UINT32_MAX);
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<std::uint32_t>(i);
  Net net;
  net.adj.resize(nodes.size());
  net.self.assign(nodes.size(), 0.0);
  net.k.assign(nodes.size(), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& nb : g.neighbors(nodes[i])) {
      net.adj[i].push_back({pos[nb.node], nb.w});
      net.k[i] += nb.w;
    }
  net.two_m = 2.0 * g.total_weight();
  return net;
}

}  // namespace leiden

/// Best-of-`runs` modularity partition of the active nodes of `g`. Run r uses
/// the sub-seed derive_seed(seed, r); ties go to the lowest run index.
inline DetectResult detect(const WeightedGraph& g, const DetectOptions& opt = {}) {
  if (g.empty()) throw validation_error("detect: graph has no edges");
  if (opt.runs == 0) throw validation_error("detect: runs must be >= 1");
  if (!(opt.theta > 0.0)) throw validation_error("detect: theta must be > 0");
  if (!(opt.gamma > 0.0) || !std::isfinite(opt.gamma)) throw validation_error("detect: gamma must be > 0");
  const auto nodes = active_nodes(g);
  auto net = leiden::from_graph(g, nodes);
  net.gamma = opt.gamma;

  std::vector<leiden::RunResult> results(opt.runs);
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(opt.runs)));
  auto work = [&](unsigned worker) {
    for (std::size_t r = worker; r < opt.runs; r += workers) {
      Rng rng(derive_seed(opt.seed, r));
      results[r] = leiden::run(net, opt.theta, rng);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work, k);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r)
    if (results[r].Q > results[best].Q) best = r;
  DetectResult out;
  out.run = best;
  out.partition = Partition(g.registry(), nodes, results[best].labels);
  out.Q = modularity(g, out.partition, opt.gamma);
  out.pass_quality = std::move(results[best].pass_quality);
  return out;
}

/// One community partition per time step.
struct TimedPartition {
  std::string t;
  Partition partition;
  double Q = 0.0;
};

using PartitionSeries = std::vector<TimedPartition>;

}  // namespace layerfuse

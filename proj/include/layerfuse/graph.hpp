#pragma once

// Core graph types shared by every stage: node registry, sparse symmetric
// weighted graphs, multiplex snapshots/series and the layer-fusion rule
//
//   A(t) = sum_h W_h * (raw(h,t) + w_add * add(h,t)),   W_h = w_1 + ... + w_h
//
// plus the restricted dense features (row cosine similarity, normalized
// degree) the fusion loss is built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace layerfuse {

using NodeId = std::uint32_t;

// ---------------------------------------------------------------------------
// NodeRegistry
// ---------------------------------------------------------------------------

class NodeRegistry {
 public:
  NodeRegistry() = default;

  explicit NodeRegistry(std::vector<std::string> labels) : labels_(std::move(labels)) {
    index_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) throw validation_error("empty node label");
      auto [it, inserted] = index_.emplace(labels_[i], static_cast<NodeId>(i));
      if (!inserted) throw validation_error("duplicate node label '" + labels_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(NodeId id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(std::string_view label) const { return index_.count(std::string(label)) != 0; }

  NodeId id(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) throw validation_error("unknown node label '" + std::string(label) + "'");
    return it->second;
  }

  friend bool operator==(const NodeRegistry& a, const NodeRegistry& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
};

using RegistryPtr = std::shared_ptr<const NodeRegistry>;

inline RegistryPtr make_registry(std::vector<std::string> labels) {
  return std::make_shared<const NodeRegistry>(std::move(labels));
}

inline bool same_registry(const RegistryPtr& a, const RegistryPtr& b) {
  return a == b || (a && b && *a == *b);
}

// ---------------------------------------------------------------------------
// WeightedGraph
// ---------------------------------------------------------------------------

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  double w = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node = 0;
  double w = 0.0;
};

/// Undirected, nonnegative, loop-free weighted graph over a shared registry.
/// Immutable once built; only edges with weight > 0 are stored.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Empty graph over `registry`.
  explicit WeightedGraph(RegistryPtr registry)
      : registry_(std::move(registry)), adj_(registry_ ? registry_->size() : 0) {
    if (!registry_) throw validation_error("graph requires a node registry");
  }

  /// Builds from an edge list. Repeated (u,v) entries are summed; zero weights
  /// are dropped. Throws on self-loops, negative/non-finite weights, bad ids.
  WeightedGraph(RegistryPtr registry, std::span<const Edge> edges) : WeightedGraph(std::move(registry)) {
    const auto n = static_cast<NodeId>(registry_->size());
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.u >= n || e.v >= n) throw validation_error("edge endpoint out of range");
      if (e.u == e.v) throw validation_error("self-loop on node '" + registry_->label(e.u) + "'");
      if (!std::isfinite(e.w) || e.w < 0.0) throw validation_error("edge weight must be finite and nonnegative");
      canon.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.w});
    }
    // stable: equal keys keep input order so repeated-edge sums are reproducible
    std::stable_sort(canon.begin(), canon.end(),
                     [](const Edge& a, const Edge& b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
    for (std::size_t i = 0; i < canon.size();) {
      double w = 0.0;
      std::size_t j = i;
      for (; j < canon.size() && canon[j].u == canon[i].u && canon[j].v == canon[i].v; ++j) w += canon[j].w;
      if (w > 0.0) {
        adj_[canon[i].u].push_back({canon[i].v, w});
        adj_[canon[i].v].push_back({canon[i].u, w});
        ++edge_count_;
        total_weight_ += w;
      }
      i = j;
    }
    for (auto& row : adj_)
      std::sort(row.begin(), row.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }

  WeightedGraph(RegistryPtr registry, std::initializer_list<Edge> edges)
      : WeightedGraph(std::move(registry), std::span<const Edge>(edges.begin(), edges.size())) {}

  const RegistryPtr& registry() const noexcept { return registry_; }
  std::size_t node_count() const noexcept { return adj_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  bool empty() const noexcept { return edge_count_ == 0; }

  /// Sum of undirected edge weights (m in modularity notation).
  double total_weight() const noexcept { return total_weight_; }

  std::span<const Neighbor> neighbors(NodeId u) const { return adj_.at(u); }
  std::size_t degree(NodeId u) const { return adj_.at(u).size(); }

  double strength(NodeId u) const {
    double s = 0.0;
    for (const auto& nb : adj_.at(u)) s += nb.w;
    return s;
  }

  double weight(NodeId u, NodeId v) const {
    const auto& row = adj_.at(u);
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const Neighbor& nb, NodeId x) { return nb.node < x; });
    return (it != row.end() && it->node == v) ? it->w : 0.0;
  }

  /// Edges with u < v, ordered by (u, v).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < adj_.size(); ++u)
      for (const auto& nb : adj_[u])
        if (u < nb.node) out.push_back({u, nb.node, nb.w});
    return out;
  }

  WeightedGraph scaled(double c) const {
    if (!(c >= 0.0) || !std::isfinite(c)) throw validation_error("scale factor must be finite and nonnegative");
    auto es = edges();
    for (auto& e : es) e.w *= c;
    return WeightedGraph(registry_, es);
  }

  /// Same support, every weight set to 1.
  WeightedGraph binarized() const {
    auto es = edges();
    for (auto& e : es) e.w = 1.0;
    return WeightedGraph(registry_, es);
  }

  /// Keeps only edges with both endpoints in `keep` (a sorted id list).
  WeightedGraph induced(std::span<const NodeId> keep) const {
    std::vector<char> in(node_count(), 0);
    for (NodeId v : keep) in.at(v) = 1;
    std::vector<Edge> es;
    for (const auto& e : edges())
      if (in[e.u] && in[e.v]) es.push_back(e);
    return WeightedGraph(registry_, es);
  }

 private:
  RegistryPtr registry_;
  std::vector<std::vector<Neighbor>> adj_;
  std::size_t edge_count_ = 0;
  double total_weight_ = 0.0;
};

// ---------------------------------------------------------------------------
// Time labels
// ---------------------------------------------------------------------------

namespace detail {
inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}
}  // namespace detail

/// Orders time labels numerically when both are plain integers, otherwise
/// lexicographically (ISO dates and "YYYY-MM" buckets sort correctly).
inline bool time_label_less(std::string_view a, std::string_view b) {
  if (detail::all_digits(a) && detail::all_digits(b)) {
    auto strip = [](std::string_view s) {
      auto p = s.find_first_not_of('0');
      return p == std::string_view::npos ? std::string_view("0") : s.substr(p);
    };
    auto sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    return sa < sb;
  }
  return a < b;
}

// ---------------------------------------------------------------------------
// Multiplex snapshot / series
// ---------------------------------------------------------------------------

/// One time step: H raw layers and H ancillary ("add") layers.
class MultiplexSnapshot {
 public:
  MultiplexSnapshot(std::string t, std::vector<WeightedGraph> raw, std::vector<WeightedGraph> add)
      : t_(std::move(t)), raw_(std::move(raw)), add_(std::move(add)) {
    if (raw_.empty()) throw validation_error("snapshot needs at least one layer");
    if (raw_.size() != add_.size()) throw validation_error("raw/add layer count mismatch");
    const auto& reg = raw_.front().registry();
    for (std::size_t h = 0; h < raw_.size(); ++h) {
      if (!same_registry(raw_[h].registry(), reg) || !same_registry(add_[h].registry(), reg))
        throw validation_error("snapshot layers must share one node registry");
    }
  }

  const std::string& t() const noexcept { return t_; }
  std::size_t H() const noexcept { return raw_.size(); }
  const RegistryPtr& registry() const noexcept { return raw_.front().registry(); }
  const WeightedGraph& raw(std::size_t h) const { return raw_.at(h); }
  const WeightedGraph& add(std::size_t h) const { return add_.at(h); }
  const std::vector<WeightedGraph>& raw_layers() const noexcept { return raw_; }
  const std::vector<WeightedGraph>& add_layers() const noexcept { return add_; }

 private:
  std::string t_;
  std::vector<WeightedGraph> raw_;
  std::vector<WeightedGraph> add_;
};

class MultiplexSeries {
 public:
  explicit MultiplexSeries(std::vector<MultiplexSnapshot> snapshots) : snapshots_(std::move(snapshots)) {
    if (snapshots_.size() < 2) throw validation_error("a series needs at least two time steps");
    const auto& first = snapshots_.front();
    for (std::size_t i = 1; i < snapshots_.size(); ++i) {
      const auto& s = snapshots_[i];
      if (s.H() != first.H()) throw validation_error("all snapshots must have the same layer count");
      if (!same_registry(s.registry(), first.registry()))
        throw validation_error("all snapshots must share one node registry");
      if (!time_label_less(snapshots_[i - 1].t(), s.t()))
        throw validation_error("time labels must be strictly increasing ('" + snapshots_[i - 1].t() + "' then '" +
                               s.t() + "')");
    }
  }

  std::size_t T() const noexcept { return snapshots_.size(); }
  std::size_t H() const noexcept { return snapshots_.front().H(); }
  const RegistryPtr& registry() const noexcept { return snapshots_.front().registry(); }
  const MultiplexSnapshot& operator[](std::size_t t) const { return snapshots_.at(t); }
  const std::vector<MultiplexSnapshot>& snapshots() const noexcept { return snapshots_; }

 private:
  std::vector<MultiplexSnapshot> snapshots_;
};

// ---------------------------------------------------------------------------
// FusionWeights
// ---------------------------------------------------------------------------

/// Nonnegative layer increments w_1..w_H (w_1 == 1) and the ancillary weight
/// w_add in [0, 1]. Layer h enters the fused graph with W_h = w_1 + ... + w_h.
class FusionWeights {
 public:
  FusionWeights(std::vector<double> w, double w_add) : w_(std::move(w)), w_add_(w_add) {
    if (w_.empty()) throw validation_error("fusion weights need at least one layer");
    if (w_.front() != 1.0) throw validation_error("w_1 is fixed to 1");
    for (double x : w_)
      if (!std::isfinite(x) || x < 0.0) throw validation_error("layer increments must be finite and >= 0");
    if (!std::isfinite(w_add) || w_add < 0.0 || w_add > 1.0) throw validation_error("w_add must lie in [0, 1]");
  }

  /// Skips the normalization checks (w_1 free, any nonnegative values). Test
  /// and analysis use only, e.g. to verify linearity under c * w.
  static FusionWeights unnormalized(std::vector<double> w, double w_add) {
    FusionWeights f;
    f.w_ = std::move(w);
    f.w_add_ = w_add;
    return f;
  }

  std::size_t H() const noexcept { return w_.size(); }
  const std::vector<double>& increments() const noexcept { return w_; }
  double w(std::size_t h) const { return w_.at(h); }
  double w_add() const noexcept { return w_add_; }

  std::vector<double> cumulative() const {
    std::vector<double> W(w_.size());
    double acc = 0.0;
    for (std::size_t h = 0; h < w_.size(); ++h) W[h] = acc += w_[h];
    return W;
  }

 private:
  FusionWeights() = default;
  std::vector<double> w_;
  double w_add_ = 0.0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline WeightedGraph fuse(const MultiplexSnapshot& snapshot, const FusionWeights& weights) {
  if (snapshot.H() != weights.H())
    throw validation_error("snapshot has " + std::to_string(snapshot.H()) + " layers but weights have " +
                           std::to_string(weights.H()));
  const auto W = weights.cumulative();
  std::vector<Edge> acc;
  for (std::size_t h = 0; h < snapshot.H(); ++h) {
    for (auto e : snapshot.raw(h).edges()) {
      e.w *= W[h];
      acc.push_back(e);
    }
    if (weights.w_add() == 0.0) continue;
    for (auto e : snapshot.add(h).edges()) {
      e.w *= W[h] * weights.w_add();
      acc.push_back(e);
    }
  }
  return WeightedGraph(snapshot.registry(), acc);
}

/// Nodes with at least one incident positive-weight edge, ascending.
inline std::vector<NodeId> active_nodes(const WeightedGraph& g) {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (g.degree(u) > 0) out.push_back(u);
  return out;
}

struct Restriction {
  std::vector<NodeId> nodes;  ///< co-existing nodes, ascending
  WeightedGraph current;      ///< g_t induced on `nodes`
  WeightedGraph next;         ///< g_{t+1} induced on `nodes`
};

inline Restriction coexist_restrict(const WeightedGraph& g_t, const WeightedGraph& g_next) {
  if (!same_registry(g_t.registry(), g_next.registry()))
    throw validation_error("coexist_restrict: graphs must share a registry");
  auto a = active_nodes(g_t);
  auto b = active_nodes(g_next);
  std::vector<NodeId> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  auto cur = g_t.induced(both);
  auto nxt = g_next.induced(both);
  return {std::move(both), std::move(cur), std::move(nxt)};
}

/// Dense |nodes| x |nodes| adjacency of `g` restricted to `nodes`.
inline Eigen::MatrixXd dense_adjacency(const WeightedGraph& g, std::span<const NodeId> nodes) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  std::vector<Eigen::Index> pos(g.node_count(), -1);
  for (Eigen::Index i = 0; i < m; ++i) pos.at(nodes[i]) = i;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (const auto& nb : g.neighbors(nodes[i]))
      if (pos[nb.node] >= 0) a(i, pos[nb.node]) = nb.w;
  return a;
}

/// Row-wise cosine similarity. A zero row has similarity 0 with every row,
/// itself included.
inline Eigen::MatrixXd cosine_similarity_matrix(const Eigen::MatrixXd& adj) {
  if (adj.rows() != adj.cols()) throw validation_error("cosine_similarity_matrix: matrix must be square");
  Eigen::MatrixXd s = adj * adj.transpose();
  Eigen::VectorXd inv(adj.rows());
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    const double q = s(i, i);
    inv(i) = q > 0.0 ? 1.0 / std::sqrt(q) : 0.0;
  }
  s = inv.asDiagonal() * s * inv.asDiagonal();
  for (Eigen::Index i = 0; i < adj.rows(); ++i)
    if (inv(i) > 0.0) s(i, i) = 1.0;
  return s;
}

/// d_i = rowsum_i / total; all zeros when the total weight is zero.
inline Eigen::VectorXd normalized_degrees(const Eigen::MatrixXd& adj) {
  Eigen::VectorXd d = adj.rowwise().sum();
  const double total = d.sum();
  if (total > 0.0) d /= total;
  else d.setZero();
  return d;
}

}  // namespace layerfuse

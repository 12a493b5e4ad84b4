#pragma once

// Long-term pair similarity over a partition series.
//
// For a pair (i, j), each step where both are active gives a bit (same
// community or not) and a null success probability from that step's community
// sizes. The count statistic is the number of ones, the duration statistic the
// longest run of ones; their exact null laws are the Poisson-binomial and the
// longest-run distribution of independent non-identical Bernoulli trials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "community.hpp"
#include "errors.hpp"
#include "graph.hpp"

namespace layerfuse {

/// Probability mass function over {0..T}.
struct Pmf {
  std::vector<double> values;

  std::size_t T() const noexcept { return values.empty() ? 0 : values.size() - 1; }
  double operator[](std::size_t k) const { return k < values.size() ? values[k] : 0.0; }
};

namespace detail {
inline void check_probs(std::span<const double> p) {
  if (p.empty()) throw validation_error("distribution: need at least one trial");
  for (double x : p)
    if (!(x >= 0.0 && x <= 1.0)) throw validation_error("distribution: probabilities must lie in [0, 1]");
}

/// Neumaier compensated sum.
inline double stable_sum(std::span<const double> xs) {
  double s = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}
}  // namespace detail

/// Law of the number of successes.
inline Pmf count_dist(std::span<const double> p) {
  detail::check_probs(p);
  std::vector<double> cur{1.0};
  for (double pt : p) {
    std::vector<double> nxt(cur.size() + 1, 0.0);
    for (std::size_t L = 0; L < cur.size(); ++L) {
      nxt[L] += (1.0 - pt) * cur[L];
      nxt[L + 1] += pt * cur[L];
    }
    cur = std::move(nxt);
  }
  return {std::move(cur)};
}

/// Law of the longest run of successes, by recursion over the prefix length t.
inline Pmf longest_run_dist(std::span<const double> p) {
  detail::check_probs(p);
  const std::size_t T = p.size();
  // P[t][L] = P(D_t = L), t = 1..T; p is 1-based below via q(s) = p[s-1]
  auto q = [&](std::size_t s) { return p[s - 1]; };
  auto succ = [&](std::size_t from, std::size_t to) {  // prod_{s=from}^{to} p_s
    double r = 1.0;
    for (std::size_t s = from; s <= to; ++s) r *= q(s);
    return r;
  };
  std::vector<std::vector<double>> P(T + 1);
  auto at = [&](std::size_t t, std::size_t L) { return L <= t ? P[t][L] : 0.0; };  // P(D_t = L) = 0 for L > t
  for (std::size_t t = 1; t <= T; ++t) {
    auto& row = P[t];
    row.assign(t + 1, 0.0);
    row[t] = succ(1, t);
    double fail = 1.0;
    for (std::size_t s = 1; s <= t; ++s) fail *= 1.0 - q(s);
    row[0] = fail;
    if (t >= 2) row[t - 1] = (1.0 - q(t)) * succ(1, t - 1) + (1.0 - q(1)) * succ(2, t);
    if (t >= 3) row[1] = (P[t - 2][0] + P[t - 2][1]) * (1.0 - q(t - 1)) * q(t) + (1.0 - q(t)) * P[t - 1][1];
    for (std::size_t L = 2; t >= 4 && L <= t - 2; ++L) {
      double head = 0.0;
      for (std::size_t l = 0; l <= L; ++l) head += at(t - L - 1, l);
      double v = head * (1.0 - q(t - L)) * succ(t - L + 1, t);
      for (std::size_t s = t - L + 1; s <= t - 1; ++s) v += (1.0 - q(s)) * succ(s + 1, t) * at(s - 1, L);
      v += (1.0 - q(t)) * P[t - 1][L];
      row[L] = v;
    }
  }
  return {std::move(P[T])};
}

/// Upper tail P(X >= stat). stat <= 0 gives exactly 1.
inline double p_value(long long stat, const Pmf& dist) {
  if (stat <= 0) return 1.0;
  if (static_cast<std::size_t>(stat) >= dist.values.size()) return 0.0;
  const std::span<const double> tail(dist.values.begin() + stat, dist.values.end());
  return std::clamp(detail::stable_sum(tail), 0.0, 1.0);
}

/// Chance that two distinct nodes share a community when labels are shuffled
/// over the observed community sizes.
inline double same_community_prob(const Partition& part) {
  const double n = static_cast<double>(part.n());
  if (part.n() < 2) throw validation_error("same_community_prob: need at least 2 nodes");
  double s = 0.0;
  for (auto size : part.sizes()) s += static_cast<double>(size) * static_cast<double>(size - 1);
  return s / (n * (n - 1.0));
}

inline std::size_t count_ones(std::span<const std::uint8_t> bits) {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

inline std::size_t longest_run(std::span<const std::uint8_t> bits) {
  std::size_t best = 0, cur = 0;
  for (auto b : bits) {
    cur = b ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

struct PairSequences {
  std::vector<std::size_t> steps;  ///< indices into the partition series
  std::vector<std::uint8_t> bits;
  std::vector<double> null_probs;
};

inline PairSequences pair_sequences(const PartitionSeries& series, NodeId i, NodeId j) {
  PairSequences out;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& part = series[s].partition;
    const auto ci = part.community_of(i), cj = part.community_of(j);
    if (!ci || !cj) continue;
    out.steps.push_back(s);
    out.bits.push_back(*ci == *cj ? 1 : 0);
    out.null_probs.push_back(same_community_prob(part));
  }
  return out;
}

struct PairTestResult {
  NodeId i = 0;
  NodeId j = 0;
  PairSequences seq;
  std::size_t count_stat = 0;
  std::size_t duration_stat = 0;
  double count_p = 1.0;
  double duration_p = 1.0;
};

/// Tests every pair (i < j) that co-exists at least once, in (i, j) order.
inline std::vector<PairTestResult> test_pairs(const PartitionSeries& series) {
  if (series.empty()) return {};
  const auto& reg = series.front().partition.registry();
  for (const auto& tp : series)
    if (!same_registry(reg, tp.partition.registry())) throw validation_error("test_pairs: registry mismatch");
  std::vector<double> probs(series.size());
  for (std::size_t s = 0; s < series.size(); ++s)
    probs[s] = series[s].partition.n() >= 2 ? same_community_prob(series[s].partition) : 0.0;

  std::vector<PairTestResult> out;
  const auto n = static_cast<NodeId>(reg->size());
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) {
      PairTestResult r;
      r.i = i;
      r.j = j;
      for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& part = series[s].partition;
        const auto ci = part.community_of(i);
        if (!ci) continue;
        const auto cj = part.community_of(j);
        if (!cj) continue;
        r.seq.steps.push_back(s);
        r.seq.bits.push_back(*ci == *cj ? 1 : 0);
        r.seq.null_probs.push_back(probs[s]);
      }
      if (r.seq.steps.empty()) continue;
      r.count_stat = count_ones(r.seq.bits);
      r.duration_stat = longest_run(r.seq.bits);
      r.count_p = p_value(static_cast<long long>(r.count_stat), count_dist(r.seq.null_probs));
      r.duration_p = p_value(static_cast<long long>(r.duration_stat), longest_run_dist(r.seq.null_probs));
      out.push_back(std::move(r));
    }
  return out;
}

struct Significance {
  double alpha = 0.05;
  std::size_t tests = 0;   ///< M, the number of tested pairs
  double threshold = 0.0;  ///< alpha / M
  std::vector<std::uint8_t> count;
  std::vector<std::uint8_t> duration;
};

inline Significance bonferroni_select(const std::vector<PairTestResult>& results, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("bonferroni: alpha must lie in (0, 1)");
  Significance s;
  s.alpha = alpha;
  s.tests = results.size();
  s.threshold = s.tests == 0 ? 0.0 : alpha / static_cast<double>(s.tests);
  for (const auto& r : results) {
    s.count.push_back(r.count_p <= s.threshold ? 1 : 0);
    s.duration.push_back(r.duration_p <= s.threshold ? 1 : 0);
  }
  return s;
}

enum class Statistic { count, duration };
enum class GraphMode { full, thresholded };

inline Statistic parse_statistic(std::string_view s) {
  if (s == "count") return Statistic::count;
  if (s == "duration") return Statistic::duration;
  throw validation_error("unknown statistic '" + std::string(s) + "' (expected count or duration)");
}

inline GraphMode parse_graph_mode(std::string_view s) {
  if (s == "full") return GraphMode::full;
  if (s == "thresholded") return GraphMode::thresholded;
  throw validation_error("unknown mode '" + std::string(s) + "' (expected full or thresholded)");
}

inline std::string_view to_string(Statistic s) { return s == Statistic::count ? "count" : "duration"; }
inline std::string_view to_string(GraphMode m) { return m == GraphMode::full ? "full" : "thresholded"; }

/// Edge weight = the statistic; thresholded mode keeps Bonferroni-significant pairs only.
inline WeightedGraph similarity_graph(const RegistryPtr& registry, const std::vector<PairTestResult>& results,
                                      Statistic stat, GraphMode mode, double alpha = 0.05) {
  const auto sig = bonferroni_select(results, alpha);
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const auto value = stat == Statistic::count ? r.count_stat : r.duration_stat;
    if (value == 0) continue;
    if (mode == GraphMode::thresholded && !(stat == Statistic::count ? sig.count[k] : sig.duration[k])) continue;
    edges.push_back({r.i, r.j, static_cast<double>(value)});
  }
  return WeightedGraph(registry, edges);
}

namespace detail {
inline bool clique_order(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  return a < b;
}

inline void bron_kerbosch(const WeightedGraph& g, std::vector<NodeId>& R, std::vector<NodeId> P, std::vector<NodeId> X,
                          std::vector<std::vector<NodeId>>& out) {
  if (P.empty() && X.empty()) {
    if (R.size() >= 2) {
      auto c = R;
      std::sort(c.begin(), c.end());
      out.push_back(std::move(c));
    }
    return;
  }
  auto adjacent = [&](NodeId u, NodeId v) { return g.weight(u, v) > 0.0; };
  // pivot: the vertex of P u X with most neighbours in P
  NodeId pivot = P.empty() ? X.front() : P.front();
  std::size_t best = 0;
  auto consider = [&](NodeId u) {
    std::size_t k = 0;
    for (auto v : P) k += adjacent(u, v) ? 1 : 0;
    if (k > best) {
      best = k;
      pivot = u;
    }
  };
  for (auto u : P) consider(u);
  for (auto u : X) consider(u);
  std::vector<NodeId> candidates;
  for (auto v : P)
    if (!adjacent(pivot, v)) candidates.push_back(v);
  for (auto v : candidates) {
    std::vector<NodeId> P2, X2;
    for (auto u : P)
      if (adjacent(u, v)) P2.push_back(u);
    for (auto u : X)
      if (adjacent(u, v)) X2.push_back(u);
    R.push_back(v);
    bron_kerbosch(g, R, std::move(P2), std::move(X2), out);
    R.pop_back();
    P.erase(std::find(P.begin(), P.end(), v));
    X.push_back(v);
  }
}
}  // namespace detail

/// Maximal cliques (two or more nodes) of the unweighted support, largest first,
/// ties in lexicographic order of node ids.
inline std::vector<std::vector<NodeId>> maximal_cliques(const WeightedGraph& g) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> R;
  detail::bron_kerbosch(g, R, active_nodes(g), {}, out);
  std::sort(out.begin(), out.end(), detail::clique_order);
  return out;
}

/// Connected components with two or more nodes, ordered like maximal_cliques.
inline std::vector<std::vector<NodeId>> connected_components(const WeightedGraph& g) {
  std::vector<std::vector<NodeId>> out;
  std::vector<char> seen(g.node_count(), 0);
  for (NodeId s = 0; s < g.node_count(); ++s) {
    if (seen[s] || g.degree(s) == 0) continue;
    std::vector<NodeId> comp{s}, stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(u))
        if (!seen[nb.node]) {
          seen[nb.node] = 1;
          comp.push_back(nb.node);
          stack.push_back(nb.node);
        }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(), detail::clique_order);
  return out;
}

}  // namespace layerfuse

#pragma once

// Structural-consistency loss for fused series.
//
// For each consecutive pair (t, t+1) the fused graphs are restricted to the
// nodes active at both steps; the pair contributes
//   sim: sum over ordered (i, j), diagonal included, of (S_t - S_t+1)_ij^2
//   deg: sum over i of (d_t - d_t+1)_i^2
// with S the row cosine similarity and d the normalized degree. With mean
// reduction the two sums are divided by m^2 and m, m the restricted node
// count. Pair losses are averaged over the pairs considered. The regularizer is
//   (w_add^2 + sum_{h>=2} w_h^2) / H.
//
// Two implementations: the free functions fuse the graphs and go through
// graph_core directly; LossModel precomputes restricted layer matrices once
// and returns analytic gradients, for use inside the optimizer.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "../errors.hpp"
#include "../graph.hpp"

namespace layerfuse::fusion {

/// How a pair's squared differences are combined: summed, or averaged over
/// the matrix and vector entries.
enum class Reduction { sum, mean };

inline Reduction parse_reduction(std::string_view s) {
  if (s == "sum") return Reduction::sum;
  if (s == "mean") return Reduction::mean;
  throw validation_error("reduction must be 'sum' or 'mean'");
}

inline std::string_view to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

/// Per-pair factors (sim, deg) for `m` restricted nodes.
inline std::pair<double, double> reduction_factors(Reduction r, std::size_t m) {
  if (r == Reduction::sum || m == 0) return {1.0, 1.0};
  const double md = static_cast<double>(m);
  return {1.0 / (md * md), 1.0 / md};
}

struct LossWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 0.001;
  Reduction reduction = Reduction::sum;

  void validate() const {
    for (double a : {alpha1, alpha2, alpha3})
      if (!std::isfinite(a) || a < 0.0) throw validation_error("loss weights must be finite and >= 0");
  }
};

struct PairLoss {
  double sim = 0.0;
  double deg = 0.0;
};

/// Loss contribution of one consecutive pair of fused graphs.
inline PairLoss pair_loss(const WeightedGraph& g_t, const WeightedGraph& g_next, Reduction red = Reduction::sum) {
  const auto r = coexist_restrict(g_t, g_next);
  if (r.nodes.empty()) return {};
  const auto a = dense_adjacency(r.current, r.nodes);
  const auto b = dense_adjacency(r.next, r.nodes);
  const auto [fs, fd] = reduction_factors(red, r.nodes.size());
  return {fs * (cosine_similarity_matrix(a) - cosine_similarity_matrix(b)).squaredNorm(),
          fd * (normalized_degrees(a) - normalized_degrees(b)).squaredNorm()};
}

inline std::vector<WeightedGraph> fuse_series(const MultiplexSeries& series, const FusionWeights& weights) {
  std::vector<WeightedGraph> out;
  out.reserve(series.T());
  for (const auto& s : series.snapshots()) out.push_back(fuse(s, weights));
  return out;
}

/// Pair-start indices are 0-based: index t stands for the pair (t, t+1).
inline std::vector<std::size_t> all_pairs(std::size_t T) {
  std::vector<std::size_t> v(T - 1);
  for (std::size_t i = 0; i + 1 < T; ++i) v[i] = i;
  return v;
}

namespace detail {
inline PairLoss averaged(const std::vector<WeightedGraph>& fused, std::span<const std::size_t> pairs,
                         Reduction red = Reduction::sum) {
  if (pairs.empty()) throw validation_error("loss subset is empty");
  PairLoss acc;
  for (auto t : pairs) {
    if (t + 1 >= fused.size()) throw validation_error("pair index out of range");
    const auto p = pair_loss(fused[t], fused[t + 1], red);
    acc.sim += p.sim;
    acc.deg += p.deg;
  }
  acc.sim /= static_cast<double>(pairs.size());
  acc.deg /= static_cast<double>(pairs.size());
  return acc;
}
}  // namespace detail

inline double loss_sim(const MultiplexSeries& series, const FusionWeights& weights, Reduction red = Reduction::sum) {
  const auto pairs = all_pairs(series.T());
  return detail::averaged(fuse_series(series, weights), pairs, red).sim;
}

inline double loss_deg(const MultiplexSeries& series, const FusionWeights& weights, Reduction red = Reduction::sum) {
  const auto pairs = all_pairs(series.T());
  return detail::averaged(fuse_series(series, weights), pairs, red).deg;
}

inline double loss_reg(const FusionWeights& weights) {
  double s = weights.w_add() * weights.w_add();
  for (std::size_t h = 1; h < weights.H(); ++h) s += weights.w(h) * weights.w(h);
  return s / static_cast<double>(weights.H());
}

inline double total_loss(const MultiplexSeries& series, const FusionWeights& weights, const LossWeights& lw,
                         std::span<const std::size_t> pairs) {
  lw.validate();
  const auto p = detail::averaged(fuse_series(series, weights), pairs, lw.reduction);
  return lw.alpha1 * p.sim + lw.alpha2 * p.deg + lw.alpha3 * loss_reg(weights);
}

// ---------------------------------------------------------------------------
// LossModel
// ---------------------------------------------------------------------------

/// Precomputed form of the data losses over a fixed series.
///
/// The fused graph at step t is linear in the 2H layer coefficients
///   c = (W_1..W_H, W_1 w_add..W_H w_add)
/// so each restricted step ("view") stores its layers as sparse entries and
/// is assembled densely per evaluation. A view is shared by every pair that
/// restricts step t to the same node set, so it is evaluated once per call.
class LossModel {
 public:
  struct SubsetLoss {
    double sim = 0.0;
    double deg = 0.0;
  };

  struct Evaluation {
    std::vector<SubsetLoss> subsets;
    /// Gradient of alpha1 * sim + alpha2 * deg of the gradient subset with
    /// respect to the increments w_1..w_H (w_1 entry included) and w_add.
    std::vector<double> grad_w;
    double grad_w_add = 0.0;
  };

  /// Reusable buffers; pass the same workspace to repeated calls to avoid
  /// reallocating the dense matrices. Not shareable between threads.
  class Workspace;

  explicit LossModel(const MultiplexSeries& series, Reduction reduction = Reduction::sum)
      : T_(series.T()), H_(series.H()), n_(series.registry()->size()), reduction_(reduction) {
    const std::size_t K = 2 * H_;
    layer_strength_.resize(T_);
    layers_.resize(T_);
    std::vector<std::vector<char>> support(T_);
    for (std::size_t t = 0; t < T_; ++t) {
      const auto& snap = series[t];
      layer_strength_[t] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(K));
      support[t].assign(n_, 0);
      layers_[t].resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        const auto& g = k < H_ ? snap.raw(k) : snap.add(k - H_);
        layers_[t][k] = g.edges();
        for (NodeId u = 0; u < n_; ++u) {
          if (g.degree(u) == 0) continue;
          support[t][u] = 1;
          layer_strength_[t](u, static_cast<Eigen::Index>(k)) = g.strength(u);
        }
      }
    }
    std::map<std::pair<std::size_t, std::vector<NodeId>>, std::size_t> index;
    auto view_for = [&](std::size_t t, const std::vector<NodeId>& nodes) {
      auto [it, fresh] = index.try_emplace({t, nodes}, views_.size());
      if (fresh) views_.push_back(build_view(t, nodes));
      return it->second;
    };
    for (std::size_t t = 0; t + 1 < T_; ++t) {
      std::vector<NodeId> both;
      for (NodeId u = 0; u < n_; ++u)
        if (support[t][u] && support[t + 1][u]) both.push_back(u);
      pairs_.push_back({view_for(t, both), view_for(t + 1, both)});
    }
  }

  std::size_t T() const noexcept { return T_; }
  std::size_t H() const noexcept { return H_; }
  std::size_t view_count() const noexcept { return views_.size(); }
  Reduction reduction() const noexcept { return reduction_; }

  /// Averaged sim/deg losses for each subset of pair starts, and optionally the
  /// gradient for `grad_subset` (an index into `subsets`).
  Evaluation evaluate(const FusionWeights& weights, std::span<const std::vector<std::size_t>> subsets,
                      std::optional<std::size_t> grad_subset = std::nullopt, double alpha1 = 1.0,
                      double alpha2 = 1.0) const;

  Evaluation evaluate(Workspace& ws, const FusionWeights& weights, std::span<const std::vector<std::size_t>> subsets,
                      std::optional<std::size_t> grad_subset = std::nullopt, double alpha1 = 1.0,
                      double alpha2 = 1.0) const {
    if (weights.H() != H_) throw validation_error("weights do not match the series layer count");
    for (const auto& s : subsets) {
      if (s.empty()) throw validation_error("loss subset is empty");
      for (auto p : s)
        if (p >= pairs_.size()) throw validation_error("pair index out of range");
    }
    if (grad_subset && *grad_subset >= subsets.size()) throw validation_error("gradient subset out of range");

    const auto c = coefficients(weights);
    const bool all_positive = std::all_of(c.begin(), c.end(), [](double x) { return x > 0.0; });
    std::vector<std::vector<char>> active;
    if (!all_positive) active = active_masks(c);

    // Each used pair gets a (view_a, view_b) into `views`; pairs whose actual
    // active set is narrower than the structural one get private views.
    std::vector<const View*> views;
    std::vector<View> scratch;
    scratch.reserve(2 * pairs_.size());
    std::vector<std::ptrdiff_t> slot(views_.size(), -1);
    std::vector<std::pair<std::size_t, std::size_t>> pair_views(pairs_.size(), {SIZE_MAX, SIZE_MAX});
    auto shared_slot = [&](std::size_t v) {
      if (slot[v] < 0) {
        slot[v] = static_cast<std::ptrdiff_t>(views.size());
        views.push_back(&views_[v]);
      }
      return static_cast<std::size_t>(slot[v]);
    };
    for (const auto& s : subsets)
      for (auto p : s) {
        if (pair_views[p].first != SIZE_MAX) continue;
        const auto& [va, vb] = pairs_[p];
        std::vector<Eigen::Index> keep;
        if (!all_positive) {
          const auto& nodes = views_[va].nodes;
          for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(nodes.size()); ++i)
            if (active[p][nodes[i]] && active[p + 1][nodes[i]]) keep.push_back(i);
        }
        if (all_positive || keep.size() == views_[va].nodes.size()) {
          pair_views[p] = {shared_slot(va), shared_slot(vb)};
        } else {
          scratch.push_back(subview(views_[va], keep));
          scratch.push_back(subview(views_[vb], keep));
          pair_views[p] = {views.size(), views.size() + 1};
          views.push_back(&scratch[scratch.size() - 2]);
          views.push_back(&scratch[scratch.size() - 1]);
        }
      }

    auto& fwd = ws.fwd;
    if (fwd.size() < views.size()) fwd.resize(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) forward(*views[v], c, fwd[v]);

    Evaluation out;
    out.subsets.resize(subsets.size());
    for (std::size_t si = 0; si < subsets.size(); ++si) {
      SubsetLoss acc;
      for (auto p : subsets[si]) {
        const auto& [a, b] = pair_views[p];
        const auto [fs, fd] = reduction_factors(reduction_, views[a]->nodes.size());
        acc.sim += fs * (fwd[a].sim - fwd[b].sim).squaredNorm();
        acc.deg += fd * (fwd[a].deg - fwd[b].deg).squaredNorm();
      }
      const auto count = static_cast<double>(subsets[si].size());
      out.subsets[si] = {acc.sim / count, acc.deg / count};
    }
    if (!grad_subset) return out;

    const auto& gs = subsets[*grad_subset];
    const double scale = 1.0 / static_cast<double>(gs.size());
    auto& up_sim = ws.up_sim;
    auto& up_deg = ws.up_deg;
    if (up_sim.size() < views.size()) {
      up_sim.resize(views.size());
      up_deg.resize(views.size());
    }
    std::vector<char> used(views.size(), 0);
    auto touch = [&](std::size_t v) {
      if (used[v]) return;
      used[v] = 1;
      const auto m = static_cast<Eigen::Index>(views[v]->nodes.size());
      up_sim[v].setZero(m, m);
      up_deg[v].setZero(m);
    };
    for (auto p : gs) {
      const auto& [a, b] = pair_views[p];
      if (views[a]->nodes.empty()) continue;
      touch(a);
      touch(b);
      const auto [fs, fd] = reduction_factors(reduction_, views[a]->nodes.size());
      ws.ds.noalias() = (2.0 * alpha1 * scale * fs) * (fwd[a].sim - fwd[b].sim);
      ws.dd.noalias() = (2.0 * alpha2 * scale * fd) * (fwd[a].deg - fwd[b].deg);
      up_sim[a] += ws.ds;
      up_deg[a] += ws.dd;
      up_sim[b] -= ws.ds;
      up_deg[b] -= ws.dd;
    }
    std::vector<double> grad_c(2 * H_, 0.0);
    for (std::size_t v = 0; v < views.size(); ++v)
      if (used[v]) backward(*views[v], fwd[v], up_sim[v], up_deg[v], ws, grad_c);

    const auto W = weights.cumulative();
    std::vector<double> grad_W(H_);
    out.grad_w_add = 0.0;
    for (std::size_t h = 0; h < H_; ++h) {
      grad_W[h] = grad_c[h] + weights.w_add() * grad_c[H_ + h];
      out.grad_w_add += W[h] * grad_c[H_ + h];
    }
    out.grad_w.assign(H_, 0.0);
    double tail = 0.0;
    for (std::size_t j = H_; j-- > 0;) out.grad_w[j] = tail += grad_W[j];
    return out;
  }

 private:
  struct Entry {
    Eigen::Index i;
    Eigen::Index j;
    double w;
  };

  struct View {
    std::vector<NodeId> nodes;
    std::vector<std::vector<Entry>> layers;  // per coefficient, both (i,j) and (j,i)
    Eigen::MatrixXd row_sums;                // m x 2H
  };

  struct Forward {
    Eigen::MatrixXd adj;
    Eigen::VectorXd inv_norm;
    Eigen::MatrixXd sim;
    Eigen::VectorXd strength;
    double total = 0.0;
    Eigen::VectorXd deg;
  };

  View build_view(std::size_t t, const std::vector<NodeId>& nodes) const {
    const std::size_t K = 2 * H_;
    View v;
    v.nodes = nodes;
    std::vector<Eigen::Index> pos(n_, -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<Eigen::Index>(i);
    const auto m = static_cast<Eigen::Index>(nodes.size());
    v.row_sums = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(K));
    v.layers.resize(K);
    for (std::size_t k = 0; k < K; ++k)
      for (const auto& e : layers_[t][k]) {
        const auto a = pos[e.u], b = pos[e.v];
        if (a < 0 || b < 0) continue;
        v.layers[k].push_back({a, b, e.w});
        v.layers[k].push_back({b, a, e.w});
        v.row_sums(a, static_cast<Eigen::Index>(k)) += e.w;
        v.row_sums(b, static_cast<Eigen::Index>(k)) += e.w;
      }
    return v;
  }

  static View subview(const View& src, const std::vector<Eigen::Index>& keep) {
    std::vector<Eigen::Index> pos(src.nodes.size(), -1);
    View v;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      pos[static_cast<std::size_t>(keep[i])] = static_cast<Eigen::Index>(i);
      v.nodes.push_back(src.nodes[static_cast<std::size_t>(keep[i])]);
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    v.row_sums = Eigen::MatrixXd::Zero(m, src.row_sums.cols());
    v.layers.resize(src.layers.size());
    for (std::size_t k = 0; k < src.layers.size(); ++k)
      for (const auto& e : src.layers[k]) {
        const auto a = pos[static_cast<std::size_t>(e.i)], b = pos[static_cast<std::size_t>(e.j)];
        if (a < 0 || b < 0) continue;
        v.layers[k].push_back({a, b, e.w});
        v.row_sums(a, static_cast<Eigen::Index>(k)) += e.w;
      }
    return v;
  }

  std::vector<double> coefficients(const FusionWeights& weights) const {
    const auto W = weights.cumulative();
    std::vector<double> c(2 * H_);
    for (std::size_t h = 0; h < H_; ++h) {
      c[h] = W[h];
      c[H_ + h] = W[h] * weights.w_add();
    }
    return c;
  }

  std::vector<std::vector<char>> active_masks(const std::vector<double>& c) const {
    // a node is active in the fused graph iff some incident layer has c_k > 0
    std::vector<std::vector<char>> act(T_, std::vector<char>(n_, 0));
    for (std::size_t t = 0; t < T_; ++t) {
      for (std::size_t u = 0; u < n_; ++u)
        for (std::size_t k = 0; k < c.size(); ++k)
          if (c[k] > 0.0 && layer_strength_[t](static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k)) > 0.0) {
            act[t][u] = 1;
            break;
          }
    }
    return act;
  }

  static void forward(const View& v, const std::vector<double>& c, Forward& f) {
    const auto m = static_cast<Eigen::Index>(v.nodes.size());
    f.adj.setZero(m, m);
    for (std::size_t k = 0; k < v.layers.size(); ++k) {
      if (c[k] == 0.0) continue;
      for (const auto& e : v.layers[k]) f.adj(e.i, e.j) += c[k] * e.w;
    }
    f.sim.resize(m, m);
    f.sim.noalias() = f.adj * f.adj;  // adj is symmetric: A A^T = A A
    f.inv_norm.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double q = f.sim(i, i);
      f.inv_norm(i) = q > 0.0 ? 1.0 / std::sqrt(q) : 0.0;
    }
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) f.sim(i, j) *= f.inv_norm(i) * f.inv_norm(j);
    for (Eigen::Index i = 0; i < m; ++i)
      if (f.inv_norm(i) > 0.0) f.sim(i, i) = 1.0;
    const Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
    f.strength = v.row_sums * cv;
    f.total = f.strength.sum();
    if (f.total > 0.0) f.deg = f.strength / f.total;
    else f.deg.setZero(m);
  }

  static void backward(const View& v, const Forward& f, const Eigen::MatrixXd& up_sim, const Eigen::VectorXd& up_deg,
                       Workspace& ws, std::vector<double>& grad_c) {
    const auto m = static_cast<Eigen::Index>(v.nodes.size());
    // S_ij = G_ij / sqrt(G_ii G_jj), G = A A^T
    auto& gbar = ws.gbar;
    gbar.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) gbar(i, j) = up_sim(i, j) * f.inv_norm(i) * f.inv_norm(j);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (f.inv_norm(i) == 0.0) continue;
      const double q_inv = f.inv_norm(i) * f.inv_norm(i);
      gbar(i, i) -= q_inv * up_sim.row(i).dot(f.sim.row(i));
    }
    auto& abar = ws.abar;
    abar.resize(m, m);
    abar.noalias() = 2.0 * gbar * f.adj;  // gbar symmetric: (gbar + gbar^T) A

    Eigen::VectorXd sbar = Eigen::VectorXd::Zero(m);
    if (f.total > 0.0) {
      const double proj = up_deg.dot(f.strength) / (f.total * f.total);
      sbar = up_deg / f.total - Eigen::VectorXd::Constant(m, proj);
    }
    const Eigen::VectorXd from_deg = v.row_sums.transpose() * sbar;
    for (std::size_t k = 0; k < v.layers.size(); ++k) {
      double g = from_deg(static_cast<Eigen::Index>(k));
      for (const auto& e : v.layers[k]) g += abar(e.i, e.j) * e.w;
      grad_c[k] += g;
    }
  }

  std::size_t T_;
  std::size_t H_;
  std::size_t n_;
  Reduction reduction_;
  std::vector<Eigen::MatrixXd> layer_strength_;        // per t: n x 2H
  std::vector<std::vector<std::vector<Edge>>> layers_;  // per t, per coefficient
  std::vector<View> views_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;

 public:
  class Workspace {
    friend class LossModel;
    std::vector<Forward> fwd;
    std::vector<Eigen::MatrixXd> up_sim;
    std::vector<Eigen::VectorXd> up_deg;
    Eigen::MatrixXd ds, gbar, abar;
    Eigen::VectorXd dd;
  };
};

inline LossModel::Evaluation LossModel::evaluate(const FusionWeights& weights,
                                                 std::span<const std::vector<std::size_t>> subsets,
                                                 std::optional<std::size_t> grad_subset, double alpha1,
                                                 double alpha2) const {
  Workspace ws;
  return evaluate(ws, weights, subsets, grad_subset, alpha1, alpha2);
}

}  // namespace layerfuse::fusion

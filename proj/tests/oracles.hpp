#pragma once

// Independent reference computations used as test oracles.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "layerfuse/fusion/loss.hpp"
#include "layerfuse/graph.hpp"

namespace oracles {

using namespace layerfuse;

/// Exhaustive enumeration of all 2^T outcomes: PMFs of the success count and
/// of the longest success run.
struct BruteDists {
  std::vector<double> count;
  std::vector<double> run;
};

inline BruteDists brute_force(const std::vector<double>& p) {
  const std::size_t T = p.size();
  BruteDists out{std::vector<double>(T + 1, 0.0), std::vector<double>(T + 1, 0.0)};
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << T); ++mask) {
    double prob = 1.0;
    std::size_t ones = 0, run = 0, best = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const bool bit = (mask >> t) & 1;
      prob *= bit ? p[t] : 1.0 - p[t];
      ones += bit;
      run = bit ? run + 1 : 0;
      best = std::max(best, run);
    }
    out.count[ones] += prob;
    out.run[best] += prob;
  }
  return out;
}

inline double binomial_pmf(std::size_t T, double p, std::size_t k) {
  return std::exp(std::lgamma(T + 1.0) - std::lgamma(k + 1.0) - std::lgamma(T - k + 1.0)) * std::pow(p, k) *
         std::pow(1.0 - p, T - k);
}

/// Modularity from the dense definition.
inline double dense_modularity(const Eigen::MatrixXd& a, const std::vector<int>& label, double gamma = 1.0) {
  const Eigen::VectorXd k = a.rowwise().sum();
  const double two_m = k.sum();
  double q = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.rows(); ++j)
      if (label[i] == label[j]) q += a(i, j) - gamma * k(i) * k(j) / two_m;
  return q / two_m;
}

/// Best modularity over every set partition of the active nodes.
inline double exhaustive_modularity(const WeightedGraph& g, double gamma = 1.0) {
  const auto nodes = active_nodes(g);
  const auto a = dense_adjacency(g, nodes);
  const std::size_t m = nodes.size();
  std::vector<int> rgs(m, 0);
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int max_label) {
    if (i == m) {
      best = std::max(best, dense_modularity(a, rgs, gamma));
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      rgs[i] = l;
      rec(i + 1, std::max(max_label, l));
    }
  };
  if (m > 0) {
    rgs[0] = 0;
    rec(1, 0);
  }
  return best;
}

/// d total / d (w_2..w_H, w_add) by central differences through the graph route.
inline std::vector<double> fd_gradient(const MultiplexSeries& s, const FusionWeights& w, const fusion::LossWeights& lw,
                                       const std::vector<std::size_t>& pairs, double step = 1e-5) {
  auto f = [&](std::vector<double> inc, double a) {
    return fusion::total_loss(s, FusionWeights(std::move(inc), a), lw, pairs);
  };
  std::vector<double> g;
  for (std::size_t h = 1; h < w.H(); ++h) {
    auto up = w.increments(), dn = w.increments();
    up[h] += step;
    dn[h] -= step;
    g.push_back((f(up, w.w_add()) - f(dn, w.w_add())) / (2 * step));
  }
  g.push_back((f(w.increments(), w.w_add() + step) - f(w.increments(), w.w_add() - step)) / (2 * step));
  return g;
}

/// The same gradient from the analytic model plus the regularizer term.
inline std::vector<double> analytic_gradient(const MultiplexSeries& s, const FusionWeights& w,
                                             const fusion::LossWeights& lw, const std::vector<std::size_t>& pairs) {
  const fusion::LossModel model(s, lw.reduction);
  const std::vector<std::vector<std::size_t>> subsets{pairs};
  const auto ev = model.evaluate(w, subsets, 0, lw.alpha1, lw.alpha2);
  const double H = static_cast<double>(w.H());
  std::vector<double> g;
  for (std::size_t h = 1; h < w.H(); ++h) g.push_back(ev.grad_w[h] + lw.alpha3 * 2.0 * w.w(h) / H);
  g.push_back(ev.grad_w_add + lw.alpha3 * 2.0 * w.w_add() / H);
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& ref) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - ref[i]));
    scale = std::max(scale, std::abs(ref[i]));
  }
  return diff / std::max(scale, 1e-8);
}

}  // namespace oracles

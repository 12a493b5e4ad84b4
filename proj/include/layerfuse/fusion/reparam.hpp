#pragma once

// Unconstrained parameterization of FusionWeights:
//   w_h   = softplus(w~_h)  for h >= 2   (w_1 stays fixed at 1)
//   w_add = logistic(w~_add)

#include <cmath>
#include <vector>

#include "../errors.hpp"
#include "../graph.hpp"

namespace layerfuse::fusion {

/// Values substituted for boundary weights before the inverse transforms.
inline constexpr double kWeightFloor = 1e-4;
inline constexpr double kAddCeiling = 1.0 - 1e-4;

struct FreeParams {
  std::vector<double> w_tilde;  ///< H - 1 entries, for w_2..w_H
  double w_add_tilde = 0.0;

  std::size_t H() const noexcept { return w_tilde.size() + 1; }
  std::size_t size() const noexcept { return w_tilde.size() + 1; }
};

inline double softplus(double x) {
  // log(1 + e^x) without overflow for large x or underflow for very negative x
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double inverse_softplus(double y) {
  // log(e^y - 1)
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline FreeParams reparam_to_free(const FusionWeights& weights) {
  FreeParams f;
  f.w_tilde.reserve(weights.H() - 1);
  for (std::size_t h = 1; h < weights.H(); ++h) {
    const double w = weights.w(h) == 0.0 ? kWeightFloor : weights.w(h);
    f.w_tilde.push_back(inverse_softplus(w));
  }
  double a = weights.w_add();
  if (a == 0.0) a = kWeightFloor;
  else if (a == 1.0) a = kAddCeiling;
  f.w_add_tilde = logit(a);
  return f;
}

inline FusionWeights reparam_to_constrained(const FreeParams& free) {
  std::vector<double> w;
  w.reserve(free.H());
  w.push_back(1.0);
  for (double x : free.w_tilde) {
    if (!std::isfinite(x)) throw validation_error("free parameter is not finite");
    w.push_back(softplus(x));
  }
  if (!std::isfinite(free.w_add_tilde)) throw validation_error("free parameter is not finite");
  return FusionWeights(std::move(w), logistic(free.w_add_tilde));
}

/// dw_h/dw~_h = logistic(w~_h); dw_add/dw~_add = w_add (1 - w_add).
inline std::vector<double> reparam_jacobian(const FreeParams& free) {
  std::vector<double> j;
  j.reserve(free.size());
  for (double x : free.w_tilde) j.push_back(logistic(x));
  const double a = logistic(free.w_add_tilde);
  j.push_back(a * (1.0 - a));
  return j;
}

}  // namespace layerfuse::fusion

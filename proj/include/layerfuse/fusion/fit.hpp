#pragma once

// Weight fitting: Adam on the free parameters, early stopping on the
// validation loss, a grid of initializations, and selection by test loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "../errors.hpp"
#include "../graph.hpp"
#include "loss.hpp"
#include "reparam.hpp"

namespace layerfuse::fusion {

/// Partition of the pair starts into train / validation / test. Pair t (0-based,
/// standing for steps t and t+1) belongs to the split containing step t.
struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  /// `train_end` and `val_end` are 1-based time steps: steps 1..train_end start
  /// training pairs, train_end+1..val_end validation pairs, the rest test pairs.
  static SplitSpec from_bounds(std::size_t T, std::size_t train_end, std::size_t val_end) {
    if (T < 4) throw validation_error("split: need at least 4 time steps");
    if (!(train_end >= 1 && train_end < val_end && val_end <= T - 2))
      throw validation_error("split: require 1 <= train_end < val_end <= T-2");
    SplitSpec s;
    for (std::size_t t = 1; t <= T - 1; ++t) {
      auto& dst = t <= train_end ? s.train : t <= val_end ? s.val : s.test;
      dst.push_back(t - 1);
    }
    return s;
  }

  /// Proportional 8:3:3 split of the T time steps.
  static SplitSpec by_ratio(std::size_t T) {
    if (T < 4) throw validation_error("split: need at least 4 time steps");
    const auto round_at = [T](double frac) { return static_cast<std::size_t>(std::lround(frac * static_cast<double>(T))); };
    const std::size_t train_end = std::clamp<std::size_t>(round_at(8.0 / 14.0), 1, T - 3);
    const std::size_t val_end = std::clamp<std::size_t>(round_at(11.0 / 14.0), train_end + 1, T - 2);
    return from_bounds(T, train_end, val_end);
  }

  std::size_t train_end() const { return train.back() + 1; }
  std::size_t val_end() const { return val.back() + 1; }
};

struct FitConfig {
  LossWeights loss;
  double learning_rate = 0.1;
  std::size_t max_epochs = 5000;
  std::size_t patience = 3000;
  double tiny_weight_threshold = 0.05;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::optional<std::size_t> train_end;  ///< 1-based; default from the 8:3:3 ratio
  std::optional<std::size_t> val_end;
  std::optional<std::vector<FreeParams>> inits;  ///< default init_grid(H)
  unsigned threads = 1;
  bool record_trajectories = true;

  void validate() const {
    loss.validate();
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw validation_error("fit: learning_rate must be > 0");
    if (max_epochs == 0) throw validation_error("fit: max_epochs must be >= 1");
    if (patience > max_epochs) throw validation_error("fit: patience must not exceed max_epochs");
    if (!(tiny_weight_threshold >= 0.0)) throw validation_error("fit: tiny_weight_threshold must be >= 0");
    if (seeds.empty()) throw validation_error("fit: at least one seed is required");
    if (train_end.has_value() != val_end.has_value())
      throw validation_error("fit: train_end and val_end must be given together");
  }

  SplitSpec split(std::size_t T) const {
    return train_end ? SplitSpec::from_bounds(T, *train_end, *val_end) : SplitSpec::by_ratio(T);
  }
};

struct SplitLosses {
  double train = 0.0;  ///< total loss with the configured alphas
  double val = 0.0;
  double test = 0.0;  ///< alpha3 = 0
};

struct FitResult {
  FusionWeights weights{{1.0}, 0.0};
  std::vector<double> train_loss;  ///< per epoch, before the update
  std::vector<double> val_loss;
  std::vector<double> test_loss;
  std::size_t selected_epoch = 0;
  std::size_t epochs_run = 0;
  std::size_t init_id = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  SplitLosses final_loss;
};

/// 6 uniform starts plus one one-hot start per free slot (w_2..w_H, w_add).
inline std::vector<FreeParams> init_grid(std::size_t H) {
  if (H < 1) throw validation_error("init_grid: H must be >= 1");
  std::vector<FreeParams> grid;
  auto make = [H](auto value_of) {
    std::vector<double> w{1.0};
    for (std::size_t h = 1; h < H; ++h) w.push_back(value_of(h - 1));
    return reparam_to_free(FusionWeights(std::move(w), std::min(value_of(H - 1), 1.0)));
  };
  for (double v : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) grid.push_back(make([v](std::size_t) { return v; }));
  for (std::size_t k = 0; k < H; ++k) grid.push_back(make([k](std::size_t slot) { return slot == k ? 1.0 : 0.1; }));
  return grid;
}

/// Sets w_h (h >= 2) and w_add to 0 when below `threshold`.
inline FusionWeights zero_tiny(const FusionWeights& w, double threshold) {
  auto inc = w.increments();
  for (std::size_t h = 1; h < inc.size(); ++h)
    if (inc[h] < threshold) inc[h] = 0.0;
  const double a = w.w_add() < threshold ? 0.0 : w.w_add();
  return FusionWeights(std::move(inc), a);
}

namespace detail {

struct Adam {
  explicit Adam(std::size_t n, double lr) : lr(lr), m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& x, const std::vector<double>& g) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      x[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
  static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr;
  std::vector<double> m, v;
  std::size_t t = 0;
};

inline std::vector<double> flatten(const FreeParams& p) {
  auto x = p.w_tilde;
  x.push_back(p.w_add_tilde);
  return x;
}

inline FreeParams unflatten(const std::vector<double>& x) {
  FreeParams p;
  p.w_tilde.assign(x.begin(), x.end() - 1);
  p.w_add_tilde = x.back();
  return p;
}

}  // namespace detail

/// Train, validation (configured alphas) and test (alpha3 = 0) loss of fixed weights.
inline SplitLosses split_losses(const LossModel& model, const SplitSpec& split, const FusionWeights& w,
                                const LossWeights& lw) {
  const std::vector<std::vector<std::size_t>> subsets{split.train, split.val, split.test};
  const auto ev = model.evaluate(w, subsets);
  const double reg = lw.alpha3 * loss_reg(w);
  auto data = [&](std::size_t i) { return lw.alpha1 * ev.subsets[i].sim + lw.alpha2 * ev.subsets[i].deg; };
  return {data(0) + reg, data(1) + reg, data(2)};
}

/// One optimization run from `init`.
inline FitResult fit_one(const LossModel& model, const SplitSpec& split, const FitConfig& cfg, const FreeParams& init,
                         std::size_t init_id, std::uint64_t seed) {
  const auto& lw = cfg.loss;
  const std::size_t H = model.H();
  if (init.H() != H) throw validation_error("fit: initialization does not match the layer count");
  const std::vector<std::vector<std::size_t>> subsets{split.train, split.val, split.test};

  FitResult r;
  r.init_id = init_id;
  r.seed = seed;
  auto x = detail::flatten(init);
  auto best_x = x;
  double best_val = std::numeric_limits<double>::infinity();
  detail::Adam adam(x.size(), cfg.learning_rate);
  LossModel::Workspace ws;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto free = detail::unflatten(x);
    const auto w = reparam_to_constrained(free);
    const auto ev = model.evaluate(ws, w, subsets, 0, lw.alpha1, lw.alpha2);
    const double reg = loss_reg(w);
    const double train = lw.alpha1 * ev.subsets[0].sim + lw.alpha2 * ev.subsets[0].deg + lw.alpha3 * reg;
    const double val = lw.alpha1 * ev.subsets[1].sim + lw.alpha2 * ev.subsets[1].deg + lw.alpha3 * reg;
    const double test = ev.subsets[2].sim + ev.subsets[2].deg;
    if (!std::isfinite(train) || !std::isfinite(val) || !std::isfinite(test)) {
      r.failed = true;
      r.failure = "non-finite loss at epoch " + std::to_string(epoch);
      break;
    }
    if (cfg.record_trajectories) {
      r.train_loss.push_back(train);
      r.val_loss.push_back(val);
      r.test_loss.push_back(test);
    }
    r.epochs_run = epoch + 1;
    if (val < best_val) {
      best_val = val;
      best_x = x;
      r.selected_epoch = epoch;
    } else if (epoch - r.selected_epoch >= cfg.patience) {
      break;
    }

    // d total / d free
    const auto jac = reparam_jacobian(free);
    std::vector<double> g(x.size());
    for (std::size_t h = 1; h < H; ++h)
      g[h - 1] = (ev.grad_w[h] + lw.alpha3 * 2.0 * w.w(h) / static_cast<double>(H)) * jac[h - 1];
    g.back() = (ev.grad_w_add + lw.alpha3 * 2.0 * w.w_add() / static_cast<double>(H)) * jac.back();
    if (!std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); })) {
      r.failed = true;
      r.failure = "non-finite gradient at epoch " + std::to_string(epoch);
      break;
    }
    adam.step(x, g);
  }
  if (r.epochs_run == 0) return r;

  try {
    r.weights = zero_tiny(reparam_to_constrained(detail::unflatten(best_x)), cfg.tiny_weight_threshold);
    r.final_loss = split_losses(model, split, r.weights, lw);
    if (!std::isfinite(r.final_loss.train) || !std::isfinite(r.final_loss.val) || !std::isfinite(r.final_loss.test)) {
      r.failed = true;
      r.failure = "non-finite final loss";
    }
  } catch (const validation_error& e) {
    r.failed = true;
    r.failure = e.what();
  }
  return r;
}

/// All (initialization, seed) runs, ordered by initialization then seed.
///
/// Full-batch Adam draws no random numbers, so a run does not depend on its
/// seed; each initialization is optimized once and the result is reported
/// under every seed.
inline std::vector<FitResult> fit(const MultiplexSeries& series, const FitConfig& cfg) {
  cfg.validate();
  const auto split = cfg.split(series.T());
  const auto inits = cfg.inits ? *cfg.inits : init_grid(series.H());
  if (inits.empty()) throw validation_error("fit: no initializations");
  const LossModel model(series, cfg.loss.reduction);

  std::vector<FitResult> per_init(inits.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(inits.size())));
  auto work = [&](unsigned worker) {
    for (std::size_t i = worker; i < inits.size(); i += workers)
      per_init[i] = fit_one(model, split, cfg, inits[i], i, cfg.seeds.front());
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work, k);
  }

  std::vector<FitResult> out;
  out.reserve(inits.size() * cfg.seeds.size());
  for (auto& r : per_init)
    for (auto seed : cfg.seeds) {
      out.push_back(r);
      out.back().seed = seed;
    }
  return out;
}

/// Index of the successful run with the lowest test loss; ties by validation
/// loss, then initialization id, then seed.
inline std::size_t select_best_index(const std::vector<FitResult>& results) {
  std::optional<std::size_t> best;
  auto key = [&](std::size_t i) {
    const auto& r = results[i];
    return std::tuple(r.final_loss.test, r.final_loss.val, r.init_id, r.seed);
  };
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].failed) continue;
    if (!best || key(i) < key(*best)) best = i;
  }
  if (!best) throw std::runtime_error("fit: every run failed");
  return *best;
}

inline const FitResult& select_best(const std::vector<FitResult>& results) {
  return results[select_best_index(results)];
}
const FitResult& select_best(std::vector<FitResult>&&) = delete;

enum class BaselineKind { unlearned, binary };

inline BaselineKind parse_baseline_kind(std::string_view s) {
  if (s == "unlearned") return BaselineKind::unlearned;
  if (s == "binary") return BaselineKind::binary;
  throw validation_error("unknown baseline kind '" + std::string(s) + "' (expected unlearned or binary)");
}

/// w_1 = 1, w_j = 0.1 for j > 1, w_add = 0.1.
inline FusionWeights unlearned_weights(std::size_t H) {
  if (H < 1) throw validation_error("baseline: H must be >= 1");
  std::vector<double> w(H, 0.1);
  w[0] = 1.0;
  return FusionWeights(std::move(w), 0.1);
}

/// Baseline graph for one step. The binary baseline fuses with the unlearned
/// weights and then sets every positive edge to 1.
inline WeightedGraph baseline_graph(const MultiplexSnapshot& snapshot, BaselineKind kind) {
  const auto g = fuse(snapshot, unlearned_weights(snapshot.H()));
  return kind == BaselineKind::binary ? g.binarized() : g;
}

}  // namespace layerfuse::fusion

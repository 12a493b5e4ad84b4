#pragma once

// Synthetic benchmark with known fusion weights.
//
// Step 1 draws H independent Bernoulli(p_h) raw layers with integer weights in
// {1..H}, and ancillary layers on a Bernoulli(p_add) subset of each raw
// layer's support. The fused graph A1 = fuse(step 1, ground truth) is then
// held fixed: every later step reshuffles A1's edges into disjoint layers
// (multinomial layer sizes ~ p_h / sum p) and splits each edge weight
// A1_ij / W_h into raw + w_add * add, so fusing with the ground truth
// reproduces A1 at every step.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace layerfuse::synth {

struct SynthConfig {
  std::size_t n = 100;
  std::size_t T = 14;
  std::size_t H = 5;
  std::vector<double> p_h = std::vector<double>(5, 0.1);
  double p_add = 0.1;
  std::vector<double> gt_w = {1.0, 0.0, 1.0, 0.0, 1.0};
  double gt_w_add = 0.0;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;

  FusionWeights ground_truth() const { return FusionWeights(gt_w, gt_w_add); }

  void validate() const {
    if (n < 2) throw validation_error("synth: n must be >= 2");
    if (T < 2) throw validation_error("synth: T must be >= 2");
    if (H < 1) throw validation_error("synth: H must be >= 1");
    if (p_h.size() != H) throw validation_error("synth: p_h needs H entries");
    for (double p : p_h)
      if (!(p >= 0.0 && p <= 1.0)) throw validation_error("synth: p_h entries must lie in [0, 1]");
    if (!(p_add >= 0.0 && p_add <= 1.0)) throw validation_error("synth: p_add must lie in [0, 1]");
    if (!(epsilon > 0.0)) throw validation_error("synth: epsilon must be > 0");
    if (gt_w.size() != H) throw validation_error("synth: ground-truth w needs H entries");
    (void)ground_truth();
  }
};

inline RegistryPtr synth_registry(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  const auto width = std::to_string(n - 1).size();
  for (std::size_t i = 0; i < n; ++i) {
    auto s = std::to_string(i);
    labels.push_back("n" + std::string(width - s.size(), '0') + s);
  }
  return make_registry(std::move(labels));
}

inline std::string step_label(std::size_t t) { return std::to_string(t); }

namespace detail {
inline double random_level(Rng& rng, std::size_t H) { return static_cast<double>(rng.uniform_int(1, H)); }
}  // namespace detail

/// Time step 1. Draw order: layer by layer, node pairs (i < j) in
/// lexicographic order; per pair the edge coin, its weight, the add coin and
/// the add weight.
inline MultiplexSnapshot init_snapshot(const SynthConfig& cfg, Rng& rng, const RegistryPtr& registry) {
  cfg.validate();
  std::vector<WeightedGraph> raw, add;
  for (std::size_t h = 0; h < cfg.H; ++h) {
    std::vector<Edge> re, ae;
    for (NodeId i = 0; i < cfg.n; ++i)
      for (NodeId j = i + 1; j < cfg.n; ++j) {
        if (!rng.bernoulli(cfg.p_h[h])) continue;
        re.push_back({i, j, detail::random_level(rng, cfg.H)});
        if (rng.bernoulli(cfg.p_add)) ae.push_back({i, j, detail::random_level(rng, cfg.H)});
      }
    raw.emplace_back(registry, re);
    add.emplace_back(registry, ae);
  }
  return MultiplexSnapshot(step_label(1), std::move(raw), std::move(add));
}

inline MultiplexSnapshot init_snapshot(const SynthConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0));
  return init_snapshot(cfg, rng, synth_registry(cfg.n));
}

/// Time step t > 1: a randomized raw/add decomposition of `fused_initial`.
inline MultiplexSnapshot redistribute(std::size_t t, const WeightedGraph& fused_initial, const SynthConfig& cfg,
                                      Rng& rng) {
  if (t < 2) throw validation_error("redistribute: t must be > 1");
  if (fused_initial.empty()) throw validation_error("redistribute: initial fused graph has no edges");
  const auto gt = cfg.ground_truth();
  const auto W = gt.cumulative();
  const double w_add = gt.w_add();

  auto edges = fused_initial.edges();
  const auto sizes = rng.multinomial(edges.size(), cfg.p_h);
  rng.shuffle(edges);

  std::vector<WeightedGraph> raw, add;
  std::size_t next = 0;
  for (std::size_t h = 0; h < cfg.H; ++h) {
    std::vector<Edge> re, ae;
    for (std::uint64_t k = 0; k < sizes[h]; ++k, ++next) {
      const Edge& e = edges[next];
      const double layer_w = e.w / W[h];
      double add_w = 0.0;
      if (rng.bernoulli(cfg.p_add)) {
        const double temp = detail::random_level(rng, cfg.H);
        add_w = w_add == 0.0 ? temp : std::max(0.0, std::min(temp, layer_w / w_add - cfg.epsilon));
      }
      re.push_back({e.u, e.v, layer_w - w_add * add_w});
      if (add_w > 0.0) ae.push_back({e.u, e.v, add_w});
    }
    raw.emplace_back(fused_initial.registry(), re);
    add.emplace_back(fused_initial.registry(), ae);
  }
  return MultiplexSnapshot(step_label(t), std::move(raw), std::move(add));
}

struct SynthData {
  MultiplexSeries series;
  FusionWeights ground_truth;
};

inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto gt = cfg.ground_truth();
  auto registry = synth_registry(cfg.n);
  Rng init_rng(derive_seed(cfg.seed, 0));
  std::vector<MultiplexSnapshot> snaps;
  snaps.push_back(init_snapshot(cfg, init_rng, registry));
  const auto a1 = fuse(snaps.front(), gt);
  if (a1.empty())
    throw validation_error("synth: the initial combined graph has no edges; increase n or the layer probabilities p_h");
  for (std::size_t t = 2; t <= cfg.T; ++t) {
    Rng rng(derive_seed(cfg.seed, t));
    snaps.push_back(redistribute(t, a1, cfg, rng));
  }
  return {MultiplexSeries(std::move(snaps)), gt};
}

}  // namespace layerfuse::synth

#pragma once

// Stage functions shared by the CLI subcommands, and the end-to-end run.

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "community.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "fusion/fit.hpp"
#include "graph.hpp"
#include "ingest.hpp"
#include "io.hpp"
#include "netstats.hpp"
#include "simstats.hpp"
#include "synth.hpp"

namespace layerfuse::pipeline {

inline io::GraphSeries fuse_all(const MultiplexSeries& series, const FusionWeights& w, std::string method) {
  io::GraphSeries gs{std::move(method), series.registry(), {}};
  for (const auto& s : series.snapshots()) gs.graphs.push_back({s.t(), fuse(s, w)});
  return gs;
}

inline io::GraphSeries baseline_all(const MultiplexSeries& series, fusion::BaselineKind kind) {
  io::GraphSeries gs{kind == fusion::BaselineKind::binary ? "binary" : "unlearned", series.registry(), {}};
  for (const auto& s : series.snapshots()) gs.graphs.push_back({s.t(), fusion::baseline_graph(s, kind)});
  return gs;
}

/// Communities per step; a step whose graph has no edges gets an empty partition.
inline PartitionSeries detect_all(const io::GraphSeries& gs, const DetectOptions& opt) {
  PartitionSeries out;
  for (const auto& [t, g] : gs.graphs) {
    if (g.empty()) {
      out.push_back({t, Partition(gs.registry, {}, {}), 0.0});
      continue;
    }
    auto r = detect(g, opt);
    out.push_back({t, std::move(r.partition), r.Q});
  }
  return out;
}

inline std::vector<io::SimilarityRow> similarity(const RegistryPtr& reg, const PartitionSeries& ps, double alpha) {
  const auto results = test_pairs(ps);
  const auto sig = bonferroni_select(results, alpha);
  return io::similarity_rows(*reg, results, sig);
}

struct CliqueReport {
  RegistryPtr registry;
  std::vector<std::vector<NodeId>> cliques;
  std::vector<std::vector<NodeId>> components;
};

/// Similarity graph rebuilt from result rows (weights = statistic, significance
/// from the stored flags), then its maximal cliques and components.
inline CliqueReport cliques(const std::vector<io::SimilarityRow>& rows, Statistic stat, GraphMode mode,
                            RegistryPtr registry = nullptr) {
  if (!registry) {
    std::set<std::string> labels;
    for (const auto& r : rows) {
      labels.insert(r.node_i);
      labels.insert(r.node_j);
    }
    registry = make_registry(std::vector<std::string>(labels.begin(), labels.end()));
  }
  std::vector<Edge> edges;
  for (const auto& r : rows) {
    const auto value = stat == Statistic::count ? r.count_stat : r.duration_stat;
    const bool sig = stat == Statistic::count ? r.count_sig : r.duration_sig;
    if (value == 0 || (mode == GraphMode::thresholded && !sig)) continue;
    edges.push_back({registry->id(r.node_i), registry->id(r.node_j), static_cast<double>(value)});
  }
  const WeightedGraph g(registry, edges);
  return {registry, maximal_cliques(g), connected_components(g)};
}

inline std::string stats_csv(const io::GraphSeries& gs) {
  std::string out = std::string(io::kStatsHeader) + "\n";
  for (const auto& [t, g] : gs.graphs)
    if (!g.empty()) out += io::stats_csv_row(gs.method, t, network_stats(g));
  return out;
}

// ---------------------------------------------------------------------------

struct PipelineResult {
  std::vector<std::filesystem::path> files;
  std::string report;
};

namespace detail {

template <class F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const validation_error& e) {
    throw validation_error(std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace detail

/// Runs every stage and writes its outputs under cfg.out_dir.
inline PipelineResult run_pipeline(const config::PipelineConfig& cfg, unsigned threads = 1) {
  PipelineResult res;
  std::ostringstream rep;
  const auto& dir = cfg.out_dir;
  auto emit = [&](const std::string& name, const std::string& text) {
    io::write_text(dir / name, text);
    res.files.push_back(dir / name);
  };

  std::optional<FusionWeights> gt;
  const auto series = detail::stage("input", [&] {
    if (cfg.input == config::InputKind::synth) {
      auto d = synth::generate(cfg.synth);
      gt = d.ground_truth;
      return std::move(d.series);
    }
    const auto records = ingest::parse_observations(cfg.observations.string());
    return ingest::aggregate_period(ingest::daily_counts(records), cfg.bucket);
  });
  emit("series.json", io::series_to_json(series).dump(2) + "\n");
  if (gt) emit("gt.json", io::weights_to_json(*gt).dump(2) + "\n");
  rep << "input: " << (cfg.input == config::InputKind::synth ? "synthetic" : "observations") << ", "
      << series.registry()->size() << " nodes, T = " << series.T() << ", H = " << series.H() << "\n";
  if (gt) rep << "ground truth: " << io::weights_to_json(*gt).dump() << "\n";

  const auto graphs = detail::stage("fusion", [&] {
    switch (cfg.method) {
      case config::FusionMethod::unlearned: return baseline_all(series, fusion::BaselineKind::unlearned);
      case config::FusionMethod::binary: return baseline_all(series, fusion::BaselineKind::binary);
      case config::FusionMethod::weights: return fuse_all(series, io::read_weights(cfg.weights), "weights");
      case config::FusionMethod::fit: break;
    }
    auto fc = cfg.fit;
    fc.threads = threads;
    fc.record_trajectories = false;
    const auto runs = fusion::fit(series, fc);
    const auto best = fusion::select_best_index(runs);
    const auto split = fc.split(series.T());
    emit("fit_results.json", io::fit_results_to_json(runs, best, split, fc).dump(2) + "\n");
    emit("weights.json", io::weights_to_json(runs[best].weights).dump(2) + "\n");
    rep << "fit: " << runs.size() << " runs, selected run " << best << ", test loss "
        << io::format_number(runs[best].final_loss.test) << "\n";
    rep << "weights: " << io::weights_to_json(runs[best].weights).dump() << "\n";
    return fuse_all(series, runs[best].weights, "fit");
  });
  emit("graphs.json", io::graphs_to_json(graphs).dump(2) + "\n");
  rep << "fusion: " << graphs.method << "\n";

  const auto parts = detail::stage("communities", [&] {
    return detect_all(graphs, DetectOptions{.runs = cfg.community_runs, .seed = cfg.community_seed, .gamma = cfg.community_gamma, .threads = threads});
  });
  emit("partitions.json", io::partitions_to_json(series.registry(), parts).dump(2) + "\n");
  for (const auto& tp : parts)
    rep << "communities t=" << tp.t << ": K = " << tp.partition.K() << ", Q = " << io::format_number(tp.Q) << "\n";

  const auto rows = detail::stage("similarity", [&] { return similarity(series.registry(), parts, cfg.alpha); });
  emit("results.csv", io::similarity_csv(rows));
  std::size_t n_count = 0, n_dur = 0;
  for (const auto& r : rows) {
    n_count += r.count_sig;
    n_dur += r.duration_sig;
  }
  rep << "similarity: " << rows.size() << " pairs tested, alpha = " << io::format_number(cfg.alpha) << ", "
      << n_count << " count-significant, " << n_dur << " duration-significant\n";

  const auto cl = detail::stage("cliques", [&] { return cliques(rows, cfg.statistic, cfg.mode, series.registry()); });
  emit("cliques.json", io::cliques_to_json(*cl.registry, cfg.statistic, cfg.mode, cl.cliques, cl.components).dump(2) + "\n");
  rep << "cliques (" << to_string(cfg.statistic) << ", " << to_string(cfg.mode) << "): " << cl.cliques.size()
      << " maximal cliques, " << cl.components.size() << " components\n";

  const auto stats = detail::stage("stats", [&] { return stats_csv(graphs); });
  emit("stats.csv", stats);

  res.report = rep.str();
  emit("report.txt", res.report);
  return res;
}

}  // namespace layerfuse::pipeline

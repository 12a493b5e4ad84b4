// layerfuse command-line interface.
//
// Exit codes: 0 success, 1 invalid input or arguments, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "layerfuse/layerfuse.hpp"

namespace fs = std::filesystem;
using namespace layerfuse;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir;
};

fs::path output_path(const Globals& g, const std::string& p) {
  const fs::path path(p);
  if (g.out_dir.empty() || path.is_absolute()) return path;
  return fs::path(g.out_dir) / path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuse multiplex network time series and test long-term pair similarity."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for randomized stages (overrides config files)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");

  // ingest
  std::string obs_in, bucket = "year", ingest_out;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a multiplex series from an observation CSV");
  ingest_cmd->add_option("--input", obs_in, "Observation CSV")->required();
  ingest_cmd->add_option("--bucket", bucket, "year or month");
  ingest_cmd->add_option("--out", ingest_out, "Series JSON")->required();

  // synth
  std::string synth_cfg, synth_out, gt_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic series with known weights");
  synth_cmd->add_option("--config", synth_cfg, "synth.toml")->required();
  synth_cmd->add_option("--out", synth_out, "Series JSON")->required();
  synth_cmd->add_option("--gt-out", gt_out, "Ground-truth weights JSON");

  // fit
  std::string fit_series, fit_cfg, fit_out, fit_weights_out, fit_traj;
  auto* fit_cmd = app.add_subcommand("fit", "Learn fusion weights");
  fit_cmd->add_option("--series", fit_series, "Series JSON")->required();
  fit_cmd->add_option("--config", fit_cfg, "fit.toml (defaults apply when omitted)");
  fit_cmd->add_option("--out", fit_out, "Fit results JSON")->required();
  fit_cmd->add_option("--weights-out", fit_weights_out, "Selected weights JSON");
  fit_cmd->add_option("--trajectories", fit_traj, "Per-epoch loss CSV");

  // baseline
  std::string base_series, base_kind, base_out;
  auto* base_cmd = app.add_subcommand("baseline", "Fuse with a fixed baseline rule");
  base_cmd->add_option("--series", base_series, "Series JSON")->required();
  base_cmd->add_option("--kind", base_kind, "unlearned or binary")->required();
  base_cmd->add_option("--out", base_out, "Graphs JSON")->required();

  // fuse
  std::string fuse_series, fuse_weights, fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse every step with given weights");
  fuse_cmd->add_option("--series", fuse_series, "Series JSON")->required();
  fuse_cmd->add_option("--weights", fuse_weights, "Weights or fit results JSON")->required();
  fuse_cmd->add_option("--out", fuse_out, "Graphs JSON")->required();

  // communities
  std::string comm_graphs, comm_out;
  std::size_t comm_runs = 100;
  double comm_gamma = 1.0;
  std::optional<std::uint64_t> comm_seed;
  auto* comm_cmd = app.add_subcommand("communities", "Detect communities per step");
  comm_cmd->add_option("--graphs", comm_graphs, "Graphs JSON")->required();
  comm_cmd->add_option("--runs", comm_runs, "Randomized runs per step")->check(CLI::PositiveNumber);
  comm_cmd->add_option("--seed", comm_seed, "Seed");
  comm_cmd->add_option("--gamma", comm_gamma, "Modularity resolution")->check(CLI::PositiveNumber);
  comm_cmd->add_option("--out", comm_out, "Partitions JSON")->required();

  // similarity
  std::string sim_parts, sim_out;
  double sim_alpha = 0.05;
  auto* sim_cmd = app.add_subcommand("similarity", "Test count and duration similarity of node pairs");
  sim_cmd->add_option("--partitions", sim_parts, "Partitions JSON")->required();
  sim_cmd->add_option("--alpha", sim_alpha, "Family-wise significance level");
  sim_cmd->add_option("--out", sim_out, "Results CSV")->required();

  // cliques
  std::string cl_in, cl_stat = "count", cl_mode = "thresholded", cl_out;
  auto* cl_cmd = app.add_subcommand("cliques", "Maximal cliques of a similarity graph");
  cl_cmd->add_option("--similarity", cl_in, "Results CSV")->required();
  cl_cmd->add_option("--statistic", cl_stat, "count or duration");
  cl_cmd->add_option("--mode", cl_mode, "thresholded or full");
  cl_cmd->add_option("--out", cl_out, "Cliques JSON")->required();

  // stats
  std::string st_graphs, st_out;
  auto* st_cmd = app.add_subcommand("stats", "Summary statistics per step");
  st_cmd->add_option("--graphs", st_graphs, "Graphs JSON")->required();
  st_cmd->add_option("--out", st_out, "Stats CSV")->required();

  // pipeline
  std::string pipe_cfg;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage from one config");
  pipe_cmd->add_option("--config", pipe_cfg, "pipeline.toml")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest_cmd) {
      const auto b = ingest::parse_bucket(bucket);
      if (!b) throw validation_error("--bucket must be 'year' or 'month'");
      const auto records = ingest::parse_observations(obs_in);
      const auto series = ingest::aggregate_period(ingest::daily_counts(records), *b);
      io::write_series(output_path(g, ingest_out), series);
    } else if (*synth_cmd) {
      auto cfg = config::load_synth(synth_cfg);
      if (g.seed) cfg.seed = *g.seed;
      const auto d = synth::generate(cfg);
      io::write_series(output_path(g, synth_out), d.series);
      if (!gt_out.empty()) io::write_weights(output_path(g, gt_out), d.ground_truth);
    } else if (*fit_cmd) {
      const auto series = io::read_series(fit_series);
      auto cfg = fit_cfg.empty() ? fusion::FitConfig{} : config::load_fit(fit_cfg);
      cfg.threads = g.threads;
      cfg.record_trajectories = !fit_traj.empty();
      const auto runs = fusion::fit(series, cfg);
      const auto best = fusion::select_best_index(runs);
      io::write_json(output_path(g, fit_out), io::fit_results_to_json(runs, best, cfg.split(series.T()), cfg));
      if (!fit_weights_out.empty()) io::write_weights(output_path(g, fit_weights_out), runs[best].weights);
      if (!fit_traj.empty()) io::write_text(output_path(g, fit_traj), io::trajectories_csv(runs));
      std::cout << io::weights_to_json(runs[best].weights).dump() << "\n";
    } else if (*base_cmd) {
      const auto series = io::read_series(base_series);
      io::write_graphs(output_path(g, base_out), pipeline::baseline_all(series, fusion::parse_baseline_kind(base_kind)));
    } else if (*fuse_cmd) {
      const auto series = io::read_series(fuse_series);
      io::write_graphs(output_path(g, fuse_out), pipeline::fuse_all(series, io::read_weights(fuse_weights), "weights"));
    } else if (*comm_cmd) {
      const auto graphs = io::read_graphs(comm_graphs);
      const DetectOptions opt{.runs = comm_runs, .seed = comm_seed ? *comm_seed : g.seed.value_or(0), .gamma = comm_gamma,
                              .threads = g.threads};
      io::write_partitions(output_path(g, comm_out), graphs.registry, pipeline::detect_all(graphs, opt));
    } else if (*sim_cmd) {
      const auto [reg, parts] = io::read_partitions(sim_parts);
      io::write_text(output_path(g, sim_out), io::similarity_csv(pipeline::similarity(reg, parts, sim_alpha)));
    } else if (*cl_cmd) {
      const auto stat = parse_statistic(cl_stat);
      const auto mode = parse_graph_mode(cl_mode);
      const auto rows = io::parse_similarity_csv(io::read_text(cl_in));
      const auto r = pipeline::cliques(rows, stat, mode);
      io::write_json(output_path(g, cl_out), io::cliques_to_json(*r.registry, stat, mode, r.cliques, r.components));
    } else if (*st_cmd) {
      io::write_text(output_path(g, st_out), pipeline::stats_csv(io::read_graphs(st_graphs)));
    } else if (*pipe_cmd) {
      auto cfg = config::load_pipeline(pipe_cfg);
      if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
      if (g.seed) {
        cfg.synth.seed = *g.seed;
        cfg.community_seed = *g.seed;
      }
      std::cout << pipeline::run_pipeline(cfg, g.threads).report;
    }
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

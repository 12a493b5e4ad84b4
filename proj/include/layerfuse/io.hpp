#pragma once

// File formats. JSON numbers and CSV values are written with 12 significant
// digits; files end with a newline and use LF line endings.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "community.hpp"
#include "errors.hpp"
#include "fusion/fit.hpp"
#include "graph.hpp"
#include "netstats.hpp"
#include "simstats.hpp"

namespace layerfuse::io {

using json = nlohmann::ordered_json;

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// `x` rounded to 12 significant digits, so JSON output is stable.
inline double round12(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

// ---------------------------------------------------------------------------
// Plain file helpers
// ---------------------------------------------------------------------------

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw validation_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

namespace detail {

inline bool canonical_integer(const std::string& s) {
  return !s.empty() && s.size() <= 15 && (s == "0" || s[0] != '0') &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline json time_value(const std::string& t) {
  if (canonical_integer(t)) return std::stoll(t);
  return t;
}

inline std::string time_label(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw validation_error("time label must be a string or an integer");
}

template <class F>
auto field(const json& j, const char* key, F&& get) {
  if (!j.is_object() || !j.contains(key)) throw validation_error(std::string("missing field '") + key + "'");
  try {
    return get(j.at(key));
  } catch (const json::exception& e) {
    throw validation_error(std::string("bad field '") + key + "': " + e.what());
  }
}

inline RegistryPtr read_nodes(const json& j) {
  return make_registry(field(j, "nodes", [](const json& v) { return v.get<std::vector<std::string>>(); }));
}

inline json node_list(const NodeRegistry& reg) { return reg.labels(); }

inline json edge_list(const WeightedGraph& g) {
  json arr = json::array();
  const auto& reg = *g.registry();
  for (const auto& e : g.edges()) arr.push_back(json::array({reg.label(e.u), reg.label(e.v), round12(e.w)}));
  return arr;
}

inline WeightedGraph read_edges(const RegistryPtr& reg, const json& arr) {
  if (!arr.is_array()) throw validation_error("edge list must be an array");
  std::vector<Edge> edges;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string() || !e[2].is_number())
      throw validation_error("edge must be [u, v, w] with string labels and a number");
    const auto u = e[0].get<std::string>(), v = e[1].get<std::string>();
    if (!reg->contains(u)) throw validation_error("unknown node '" + u + "'");
    if (!reg->contains(v)) throw validation_error("unknown node '" + v + "'");
    edges.push_back({reg->id(u), reg->id(v), e[2].get<double>()});
  }
  return WeightedGraph(reg, edges);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Multiplex series
// ---------------------------------------------------------------------------

inline json series_to_json(const MultiplexSeries& s) {
  json j;
  j["nodes"] = detail::node_list(*s.registry());
  j["H"] = s.H();
  json snaps = json::array();
  for (const auto& snap : s.snapshots()) {
    json layers = json::array();
    for (std::size_t h = 0; h < snap.H(); ++h)
      layers.push_back({{"h", h + 1}, {"raw", detail::edge_list(snap.raw(h))}, {"add", detail::edge_list(snap.add(h))}});
    snaps.push_back({{"t", detail::time_value(snap.t())}, {"layers", std::move(layers)}});
  }
  j["snapshots"] = std::move(snaps);
  return j;
}

inline MultiplexSeries series_from_json(const json& j) {
  const auto reg = detail::read_nodes(j);
  const auto H = detail::field(j, "H", [](const json& v) { return v.get<std::size_t>(); });
  if (H < 1) throw validation_error("H must be >= 1");
  const auto& snaps = detail::field(j, "snapshots", [](const json& v) -> const json& { return v; });
  if (!snaps.is_array()) throw validation_error("'snapshots' must be an array");
  std::vector<MultiplexSnapshot> out;
  for (const auto& s : snaps) {
    const auto t = detail::field(s, "t", [](const json& v) { return detail::time_label(v); });
    const auto& layers = detail::field(s, "layers", [](const json& v) -> const json& { return v; });
    if (!layers.is_array() || layers.size() != H)
      throw validation_error("snapshot " + t + ": expected " + std::to_string(H) + " layers");
    std::vector<std::optional<WeightedGraph>> raw(H), add(H);
    for (const auto& l : layers) {
      const auto h = detail::field(l, "h", [](const json& v) { return v.get<std::size_t>(); });
      if (h < 1 || h > H || raw[h - 1]) throw validation_error("snapshot " + t + ": bad or repeated layer index");
      raw[h - 1] = detail::read_edges(reg, detail::field(l, "raw", [](const json& v) -> const json& { return v; }));
      add[h - 1] = detail::read_edges(reg, detail::field(l, "add", [](const json& v) -> const json& { return v; }));
    }
    std::vector<WeightedGraph> rg, ag;
    for (std::size_t h = 0; h < H; ++h) {
      rg.push_back(std::move(*raw[h]));
      ag.push_back(std::move(*add[h]));
    }
    out.emplace_back(t, std::move(rg), std::move(ag));
  }
  return MultiplexSeries(std::move(out));
}

inline void write_series(const std::filesystem::path& p, const MultiplexSeries& s) { write_json(p, series_to_json(s)); }
inline MultiplexSeries read_series(const std::filesystem::path& p) { return series_from_json(read_json(p)); }

// ---------------------------------------------------------------------------
// Fused graph series
// ---------------------------------------------------------------------------

struct TimedGraph {
  std::string t;
  WeightedGraph graph;
};

struct GraphSeries {
  std::string method;
  RegistryPtr registry;
  std::vector<TimedGraph> graphs;
};

inline json graphs_to_json(const GraphSeries& gs) {
  json j;
  j["nodes"] = detail::node_list(*gs.registry);
  j["method"] = gs.method;
  json arr = json::array();
  for (const auto& [t, g] : gs.graphs) arr.push_back({{"t", detail::time_value(t)}, {"edges", detail::edge_list(g)}});
  j["graphs"] = std::move(arr);
  return j;
}

inline GraphSeries graphs_from_json(const json& j) {
  GraphSeries gs;
  gs.registry = detail::read_nodes(j);
  gs.method = j.contains("method") && j["method"].is_string() ? j["method"].get<std::string>() : "";
  const auto& arr = detail::field(j, "graphs", [](const json& v) -> const json& { return v; });
  if (!arr.is_array()) throw validation_error("'graphs' must be an array");
  for (const auto& g : arr)
    gs.graphs.push_back({detail::field(g, "t", [](const json& v) { return detail::time_label(v); }),
                         detail::read_edges(gs.registry, detail::field(g, "edges", [](const json& v) -> const json& { return v; }))});
  return gs;
}

inline void write_graphs(const std::filesystem::path& p, const GraphSeries& gs) { write_json(p, graphs_to_json(gs)); }
inline GraphSeries read_graphs(const std::filesystem::path& p) { return graphs_from_json(read_json(p)); }

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

inline json partitions_to_json(const RegistryPtr& reg, const PartitionSeries& ps) {
  json j;
  j["nodes"] = detail::node_list(*reg);
  json arr = json::array();
  for (const auto& tp : ps) {
    json assignment = json::object();
    const auto& p = tp.partition;
    for (std::size_t k = 0; k < p.n(); ++k) assignment[reg->label(p.nodes()[k])] = p.communities()[k];
    arr.push_back({{"t", detail::time_value(tp.t)},
                   {"K", p.K()},
                   {"Q", round12(tp.Q)},
                   {"sizes", p.sizes()},
                   {"assignment", std::move(assignment)}});
  }
  j["partitions"] = std::move(arr);
  return j;
}

inline std::pair<RegistryPtr, PartitionSeries> partitions_from_json(const json& j) {
  const auto reg = detail::read_nodes(j);
  const auto& arr = detail::field(j, "partitions", [](const json& v) -> const json& { return v; });
  if (!arr.is_array()) throw validation_error("'partitions' must be an array");
  PartitionSeries ps;
  for (const auto& e : arr) {
    TimedPartition tp;
    tp.t = detail::field(e, "t", [](const json& v) { return detail::time_label(v); });
    tp.Q = e.contains("Q") && e["Q"].is_number() ? e["Q"].get<double>() : 0.0;
    const auto& a = detail::field(e, "assignment", [](const json& v) -> const json& { return v; });
    if (!a.is_object()) throw validation_error("'assignment' must be an object");
    std::vector<std::pair<NodeId, std::uint32_t>> items;
    for (const auto& [label, cid] : a.items()) {
      if (!reg->contains(label)) throw validation_error("unknown node '" + label + "'");
      if (!cid.is_number_unsigned()) throw validation_error("community ids must be nonnegative integers");
      items.push_back({reg->id(label), cid.get<std::uint32_t>()});
    }
    std::sort(items.begin(), items.end());
    std::vector<NodeId> nodes;
    std::vector<std::uint32_t> labels;
    for (const auto& [u, c] : items) {
      nodes.push_back(u);
      labels.push_back(c);
    }
    tp.partition = Partition(reg, std::move(nodes), labels);
    ps.push_back(std::move(tp));
  }
  return {reg, std::move(ps)};
}

inline void write_partitions(const std::filesystem::path& p, const RegistryPtr& reg, const PartitionSeries& ps) {
  write_json(p, partitions_to_json(reg, ps));
}
inline std::pair<RegistryPtr, PartitionSeries> read_partitions(const std::filesystem::path& p) {
  return partitions_from_json(read_json(p));
}

// ---------------------------------------------------------------------------
// Weights and fit results
// ---------------------------------------------------------------------------

inline json weights_to_json(const FusionWeights& w) {
  json j;
  json inc = json::array(), cum = json::array();
  for (double x : w.increments()) inc.push_back(round12(x));
  for (double x : w.cumulative()) cum.push_back(round12(x));
  j["w"] = std::move(inc);
  j["w_add"] = round12(w.w_add());
  j["W"] = std::move(cum);
  return j;
}

/// Accepts a weights object or a fit_results document (uses its "weights").
inline FusionWeights weights_from_json(const json& j) {
  const json& src = j.contains("runs") && j.contains("weights") ? j["weights"] : j;
  const auto w = detail::field(src, "w", [](const json& v) { return v.get<std::vector<double>>(); });
  const auto a = detail::field(src, "w_add", [](const json& v) { return v.get<double>(); });
  return FusionWeights(w, a);
}

inline FusionWeights read_weights(const std::filesystem::path& p) { return weights_from_json(read_json(p)); }
inline void write_weights(const std::filesystem::path& p, const FusionWeights& w) { write_json(p, weights_to_json(w)); }

inline json fit_results_to_json(const std::vector<fusion::FitResult>& runs, std::size_t selected,
                                const fusion::SplitSpec& split, const fusion::FitConfig& cfg) {
  auto one_based = [](const std::vector<std::size_t>& v) {
    json a = json::array();
    for (auto t : v) a.push_back(t + 1);
    return a;
  };
  json j;
  j["split"] = {{"train", one_based(split.train)}, {"val", one_based(split.val)}, {"test", one_based(split.test)}};
  j["loss"] = {{"alpha1", round12(cfg.loss.alpha1)}, {"alpha2", round12(cfg.loss.alpha2)}, {"alpha3", round12(cfg.loss.alpha3)},
               {"reduction", fusion::to_string(cfg.loss.reduction)}};
  j["selected"] = selected;
  j["weights"] = weights_to_json(runs.at(selected).weights);
  json arr = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    json e = {{"id", k}, {"init_id", r.init_id}, {"seed", r.seed}, {"failed", r.failed}};
    if (r.failed) e["failure"] = r.failure;
    const auto w = weights_to_json(r.weights);
    e["w"] = w["w"];
    e["w_add"] = w["w_add"];
    e["W"] = w["W"];
    e["selected_epoch"] = r.selected_epoch;
    e["epochs_run"] = r.epochs_run;
    e["losses"] = {{"train", round12(r.final_loss.train)},
                   {"val", round12(r.final_loss.val)},
                   {"test", round12(r.final_loss.test)}};
    arr.push_back(std::move(e));
  }
  j["runs"] = std::move(arr);
  return j;
}

inline std::string trajectories_csv(const std::vector<fusion::FitResult>& runs) {
  std::string out = "run,epoch,train,val,test\n";
  for (std::size_t k = 0; k < runs.size(); ++k)
    for (std::size_t e = 0; e < runs[k].train_loss.size(); ++e)
      out += std::to_string(k) + "," + std::to_string(e) + "," + format_number(runs[k].train_loss[e]) + "," +
             format_number(runs[k].val_loss[e]) + "," + format_number(runs[k].test_loss[e]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Similarity results (CSV)
// ---------------------------------------------------------------------------

struct SimilarityRow {
  std::string node_i;
  std::string node_j;
  std::size_t n_coexist = 0;
  std::size_t count_stat = 0;
  double count_p = 1.0;
  std::size_t duration_stat = 0;
  double duration_p = 1.0;
  bool count_sig = false;
  bool duration_sig = false;
};

inline const char* kSimilarityHeader =
    "node_i,node_j,n_coexist,count_stat,count_p,duration_stat,duration_p,count_sig,duration_sig";

inline std::vector<SimilarityRow> similarity_rows(const NodeRegistry& reg, const std::vector<PairTestResult>& results,
                                                  const Significance& sig) {
  std::vector<SimilarityRow> rows;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    rows.push_back({reg.label(r.i), reg.label(r.j), r.seq.steps.size(), r.count_stat, r.count_p, r.duration_stat,
                    r.duration_p, sig.count[k] != 0, sig.duration[k] != 0});
  }
  return rows;
}

inline std::string similarity_csv(const std::vector<SimilarityRow>& rows) {
  std::string out = std::string(kSimilarityHeader) + "\n";
  for (const auto& r : rows)
    out += r.node_i + "," + r.node_j + "," + std::to_string(r.n_coexist) + "," + std::to_string(r.count_stat) + "," +
           format_number(r.count_p) + "," + std::to_string(r.duration_stat) + "," + format_number(r.duration_p) + "," +
           (r.count_sig ? "1" : "0") + "," + (r.duration_sig ? "1" : "0") + "\n";
  return out;
}

inline std::vector<SimilarityRow> parse_similarity_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<SimilarityRow> rows;
  auto to_size = [&](const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  };
  auto to_double = [&](const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  };
  auto to_flag = [&](const std::string& s) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw std::invalid_argument(s);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kSimilarityHeader) throw parse_error(1, std::string("expected header ") + kSimilarityHeader);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    if (f.size() != 9) throw parse_error(lineno, "expected 9 fields");
    try {
      rows.push_back({f[0], f[1], to_size(f[2]), to_size(f[3]), to_double(f[4]), to_size(f[5]), to_double(f[6]),
                      to_flag(f[7]), to_flag(f[8])});
    } catch (const std::logic_error&) {
      throw parse_error(lineno, "malformed value");
    }
  }
  if (lineno == 0) throw parse_error(1, "empty file");
  return rows;
}

// ---------------------------------------------------------------------------
// Cliques and stats
// ---------------------------------------------------------------------------

inline json cliques_to_json(const NodeRegistry& reg, Statistic stat, GraphMode mode,
                            const std::vector<std::vector<NodeId>>& cliques,
                            const std::vector<std::vector<NodeId>>& components) {
  auto labelled = [&](const std::vector<std::vector<NodeId>>& sets) {
    json arr = json::array();
    for (const auto& s : sets) {
      json a = json::array();
      for (auto u : s) a.push_back(reg.label(u));
      arr.push_back(std::move(a));
    }
    return arr;
  };
  json j;
  j["statistic"] = to_string(stat);
  j["mode"] = to_string(mode);
  j["cliques"] = labelled(cliques);
  j["components"] = labelled(components);
  return j;
}

inline const char* kStatsHeader =
    "method,t,active_nodes,edges,avg_weighted_degree,avg_clustering,avg_binary_clustering,avg_closeness";

inline std::string stats_csv_row(const std::string& method, const std::string& t, const NetworkStats& s) {
  return method + "," + t + "," + std::to_string(s.active_nodes) + "," + std::to_string(s.edges) + "," +
         format_number(s.avg_weighted_degree) + "," + format_number(s.avg_clustering) + "," +
         format_number(s.avg_binary_clustering) + "," + format_number(s.avg_closeness) + "\n";
}

}  // namespace layerfuse::io

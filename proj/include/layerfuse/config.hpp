#pragma once

// TOML configuration for the generator, the fitter and the pipeline.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <tomlplusplus/toml.hpp>

#include "errors.hpp"
#include "fusion/fit.hpp"
#include "ingest.hpp"
#include "simstats.hpp"
#include "synth.hpp"

namespace layerfuse::config {

namespace detail {

inline toml::table parse_file(const std::filesystem::path& path) {
  try {
    return toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    const auto& src = e.source();
    throw parse_error(src.begin.line, path.string() + ": " + std::string(e.description()));
  }
}

inline void only_keys(const toml::table& t, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k.str() == a;
    if (!ok) throw validation_error(std::string(where) + ": unknown key '" + std::string(k.str()) + "'");
  }
}

inline double number(const toml::node& n, std::string_view key) {
  if (auto v = n.value<double>()) return *v;
  throw validation_error("'" + std::string(key) + "' must be a number");
}

inline std::int64_t integer(const toml::node& n, std::string_view key) {
  if (auto v = n.as_integer()) return v->get();
  throw validation_error("'" + std::string(key) + "' must be an integer");
}

inline std::size_t count(const toml::node& n, std::string_view key) {
  const auto v = integer(n, key);
  if (v < 0) throw validation_error("'" + std::string(key) + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

inline std::string string(const toml::node& n, std::string_view key) {
  if (auto v = n.value<std::string>()) return *v;
  throw validation_error("'" + std::string(key) + "' must be a string");
}

inline std::vector<double> numbers(const toml::node& n, std::string_view key) {
  const auto* arr = n.as_array();
  if (!arr) throw validation_error("'" + std::string(key) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : *arr) out.push_back(number(x, key));
  return out;
}

inline const toml::table* subtable(const toml::table& t, std::string_view key) {
  const auto* n = t.get(key);
  if (!n) return nullptr;
  if (const auto* tt = n->as_table()) return tt;
  throw validation_error("'" + std::string(key) + "' must be a table");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline synth::SynthConfig synth_from_table(const toml::table& t) {
  detail::only_keys(t, "synth config", {"n", "T", "H", "p_h", "p_add", "w", "w_add", "epsilon", "seed"});
  synth::SynthConfig c;
  if (auto n = t.get("n")) c.n = detail::count(*n, "n");
  if (auto n = t.get("T")) c.T = detail::count(*n, "T");
  if (auto n = t.get("H")) c.H = detail::count(*n, "H");
  if (auto n = t.get("p_h")) {
    if (n->is_array()) c.p_h = detail::numbers(*n, "p_h");
    else c.p_h.assign(c.H, detail::number(*n, "p_h"));
  } else {
    c.p_h.assign(c.H, 0.1);
  }
  if (auto n = t.get("p_add")) c.p_add = detail::number(*n, "p_add");
  if (auto n = t.get("w")) c.gt_w = detail::numbers(*n, "w");
  else if (c.H != 5) throw validation_error("synth config: 'w' is required when H != 5");
  if (auto n = t.get("w_add")) c.gt_w_add = detail::number(*n, "w_add");
  if (auto n = t.get("epsilon")) c.epsilon = detail::number(*n, "epsilon");
  if (auto n = t.get("seed")) c.seed = static_cast<std::uint64_t>(detail::count(*n, "seed"));
  c.validate();
  return c;
}

inline synth::SynthConfig load_synth(const std::filesystem::path& path) {
  return synth_from_table(detail::parse_file(path));
}

inline fusion::FitConfig fit_from_table(const toml::table& t) {
  detail::only_keys(t, "fit config", {"loss", "optimizer", "split"});
  fusion::FitConfig c;
  if (const auto* l = detail::subtable(t, "loss")) {
    detail::only_keys(*l, "[loss]", {"alpha1", "alpha2", "alpha3", "reduction"});
    if (auto n = l->get("alpha1")) c.loss.alpha1 = detail::number(*n, "alpha1");
    if (auto n = l->get("alpha2")) c.loss.alpha2 = detail::number(*n, "alpha2");
    if (auto n = l->get("alpha3")) c.loss.alpha3 = detail::number(*n, "alpha3");
    if (auto n = l->get("reduction")) c.loss.reduction = fusion::parse_reduction(detail::string(*n, "reduction"));
  }
  if (const auto* o = detail::subtable(t, "optimizer")) {
    detail::only_keys(*o, "[optimizer]",
                      {"learning_rate", "max_epochs", "patience", "tiny_weight_threshold", "seeds"});
    if (auto n = o->get("learning_rate")) c.learning_rate = detail::number(*n, "learning_rate");
    if (auto n = o->get("max_epochs")) c.max_epochs = detail::count(*n, "max_epochs");
    if (auto n = o->get("patience")) c.patience = detail::count(*n, "patience");
    if (auto n = o->get("tiny_weight_threshold")) c.tiny_weight_threshold = detail::number(*n, "tiny_weight_threshold");
    if (auto n = o->get("seeds")) {
      const auto* arr = n->as_array();
      if (!arr) throw validation_error("'seeds' must be an array of integers");
      c.seeds.clear();
      for (const auto& s : *arr) c.seeds.push_back(static_cast<std::uint64_t>(detail::count(s, "seeds")));
    }
  }
  if (const auto* s = detail::subtable(t, "split")) {
    detail::only_keys(*s, "[split]", {"train_end", "val_end"});
    if (auto n = s->get("train_end")) c.train_end = detail::count(*n, "train_end");
    if (auto n = s->get("val_end")) c.val_end = detail::count(*n, "val_end");
  }
  c.validate();
  return c;
}

inline fusion::FitConfig load_fit(const std::filesystem::path& path) { return fit_from_table(detail::parse_file(path)); }

// ---------------------------------------------------------------------------

enum class InputKind { synth, observations };
enum class FusionMethod { fit, unlearned, binary, weights };

inline std::string_view to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::fit: return "fit";
    case FusionMethod::unlearned: return "unlearned";
    case FusionMethod::binary: return "binary";
    case FusionMethod::weights: return "weights";
  }
  return "?";
}

struct PipelineConfig {
  std::filesystem::path out_dir = "out";
  InputKind input = InputKind::synth;
  synth::SynthConfig synth;
  std::filesystem::path observations;
  ingest::Bucket bucket = ingest::Bucket::year;
  FusionMethod method = FusionMethod::fit;
  fusion::FitConfig fit;
  std::filesystem::path weights;
  std::size_t community_runs = 100;
  std::uint64_t community_seed = 0;
  double community_gamma = 1.0;
  double alpha = 0.05;
  Statistic statistic = Statistic::count;
  GraphMode mode = GraphMode::thresholded;
};

/// Relative paths in the file are resolved against `base`.
inline PipelineConfig pipeline_from_table(const toml::table& t, const std::filesystem::path& base) {
  detail::only_keys(t, "pipeline config",
                    {"out_dir", "input", "synth", "fusion", "fit", "communities", "similarity", "cliques"});
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  PipelineConfig c;
  if (auto n = t.get("out_dir")) c.out_dir = resolve(detail::string(*n, "out_dir"));
  else c.out_dir = base / "out";

  const auto* in = detail::subtable(t, "input");
  if (!in) throw validation_error("pipeline config: missing [input]");
  detail::only_keys(*in, "[input]", {"kind", "config", "path", "bucket"});
  const auto kind = in->get("kind") ? detail::string(*in->get("kind"), "kind") : std::string("synth");
  if (kind == "synth") {
    c.input = InputKind::synth;
    if (auto n = in->get("config")) c.synth = load_synth(resolve(detail::string(*n, "config")));
    else if (const auto* s = detail::subtable(t, "synth")) c.synth = synth_from_table(*s);
    else throw validation_error("pipeline config: synth input needs [input].config or a [synth] table");
  } else if (kind == "observations") {
    c.input = InputKind::observations;
    if (!in->get("path")) throw validation_error("pipeline config: observations input needs [input].path");
    c.observations = resolve(detail::string(*in->get("path"), "path"));
    if (auto n = in->get("bucket")) {
      const auto b = ingest::parse_bucket(detail::string(*n, "bucket"));
      if (!b) throw validation_error("pipeline config: bucket must be 'year' or 'month'");
      c.bucket = *b;
    }
  } else {
    throw validation_error("pipeline config: [input].kind must be 'synth' or 'observations'");
  }

  if (const auto* f = detail::subtable(t, "fusion")) {
    detail::only_keys(*f, "[fusion]", {"method", "fit_config", "weights"});
    if (auto n = f->get("method")) {
      const auto m = detail::string(*n, "method");
      if (m == "fit") c.method = FusionMethod::fit;
      else if (m == "unlearned") c.method = FusionMethod::unlearned;
      else if (m == "binary") c.method = FusionMethod::binary;
      else if (m == "weights") c.method = FusionMethod::weights;
      else throw validation_error("pipeline config: [fusion].method must be fit, unlearned, binary or weights");
    }
    if (auto n = f->get("fit_config")) c.fit = load_fit(resolve(detail::string(*n, "fit_config")));
    if (auto n = f->get("weights")) c.weights = resolve(detail::string(*n, "weights"));
  }
  if (const auto* ft = detail::subtable(t, "fit")) c.fit = fit_from_table(*ft);
  if (c.method == FusionMethod::weights && c.weights.empty())
    throw validation_error("pipeline config: method 'weights' needs [fusion].weights");

  if (const auto* cm = detail::subtable(t, "communities")) {
    detail::only_keys(*cm, "[communities]", {"runs", "seed", "gamma"});
    if (auto n = cm->get("runs")) c.community_runs = detail::count(*n, "runs");
    if (auto n = cm->get("seed")) c.community_seed = static_cast<std::uint64_t>(detail::count(*n, "seed"));
    if (auto n = cm->get("gamma")) c.community_gamma = detail::number(*n, "gamma");
    if (!(c.community_gamma > 0.0)) throw validation_error("pipeline config: [communities].gamma must be > 0");
    if (c.community_runs == 0) throw validation_error("pipeline config: [communities].runs must be >= 1");
  }
  if (const auto* s = detail::subtable(t, "similarity")) {
    detail::only_keys(*s, "[similarity]", {"alpha"});
    if (auto n = s->get("alpha")) c.alpha = detail::number(*n, "alpha");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw validation_error("pipeline config: alpha must lie in (0, 1)");
  }
  if (const auto* q = detail::subtable(t, "cliques")) {
    detail::only_keys(*q, "[cliques]", {"statistic", "mode"});
    if (auto n = q->get("statistic")) c.statistic = parse_statistic(detail::string(*n, "statistic"));
    if (auto n = q->get("mode")) c.mode = parse_graph_mode(detail::string(*n, "mode"));
  }
  return c;
}

inline PipelineConfig load_pipeline(const std::filesystem::path& path) {
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return pipeline_from_table(detail::parse_file(path), base);
}

}  // namespace layerfuse::config

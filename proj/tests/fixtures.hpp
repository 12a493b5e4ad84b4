#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "layerfuse/graph.hpp"
#include "layerfuse/rng.hpp"

namespace fixtures {

/// Table of proximity types, written out cell by cell. Index order:
/// party, prox5, prox2, groom, focal. 0 marks the impossible cell.
inline constexpr int kTypeTable[5][5] = {
    {1, 2, 3, 3, 4},
    {2, 5, 6, 6, 7},
    {3, 6, 8, 8, 9},
    {3, 6, 8, 8, 10},
    {4, 7, 9, 10, 0},
};

inline const char* kRelationNames[4] = {"party", "prox5", "prox2", "groom"};

using CountKey = std::tuple<std::string, std::string, std::string, int>;  // year, a < b, type

struct ObservationFixture {
  std::string csv;
  std::size_t records = 0;
  std::map<CountKey, long long> occurrences;  ///< expected total per (year, pair, type)
};

/// Random focal sessions. Each occurrence lists distinct individuals once, so
/// the expected counts follow from the table without any grouping logic.
inline ObservationFixture observation_fixture(std::uint64_t seed, std::size_t target_records = 1000) {
  layerfuse::Rng rng(seed);
  const std::vector<std::string> ids{"A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"};
  ObservationFixture fx;
  std::ostringstream out;
  out << "date,focal,individual,relation,occurrence\n";
  std::set<std::tuple<std::string, std::string, std::uint64_t>> used;
  while (fx.records < target_records) {
    const int year = 2004 + static_cast<int>(rng.uniform_int(0, 3));
    const int month = 1 + static_cast<int>(rng.uniform_int(0, 11));
    const int day = 1 + static_cast<int>(rng.uniform_int(0, 27));
    char date[40];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", year, month, day);
    const auto focal = ids[rng.uniform_int(0, ids.size() - 1)];
    const auto occ = rng.uniform_int(0, 5);
    // one occurrence per (date, focal, occ)
    if (!used.insert({date, focal, occ}).second) continue;

    std::vector<std::pair<std::string, int>> members{{focal, 4}};
    std::vector<std::string> others;
    for (const auto& id : ids)
      if (id != focal) others.push_back(id);
    rng.shuffle(others);
    const auto k = rng.uniform_int(1, 4);
    for (std::uint64_t i = 0; i < k; ++i) {
      const int rel = static_cast<int>(rng.uniform_int(0, 3));
      members.push_back({others[i], rel});
      out << date << "," << focal << "," << others[i] << "," << kRelationNames[rel] << "," << occ << "\n";
      ++fx.records;
    }
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        auto a = members[i].first, b = members[j].first;
        if (b < a) std::swap(a, b);
        ++fx.occurrences[{std::to_string(year), a, b, kTypeTable[members[i].second][members[j].second]}];
      }
  }
  fx.csv = out.str();
  return fx;
}

/// 25 weighted graphs with at most 8 active nodes, over a 9-node registry so
/// that some nodes stay isolated.
inline std::vector<layerfuse::WeightedGraph> small_graphs() {
  using namespace layerfuse;
  Rng rng(2024);
  std::vector<std::string> labels;
  for (int i = 0; i < 9; ++i) labels.push_back("v" + std::to_string(i));
  const auto reg = make_registry(labels);
  std::vector<WeightedGraph> out;
  while (out.size() < 25) {
    const auto m = static_cast<NodeId>(rng.uniform_int(3, 8));
    const double p = 0.25 + 0.5 * rng.uniform();
    const bool weighted = out.size() % 2 == 1;
    std::vector<Edge> edges;
    for (NodeId u = 0; u < m; ++u)
      for (NodeId v = u + 1; v < m; ++v)
        if (rng.bernoulli(p)) edges.push_back({u, v, weighted ? 0.5 + 4.0 * rng.uniform() : 1.0});
    WeightedGraph g(reg, edges);
    if (!g.empty()) out.push_back(std::move(g));
  }
  return out;
}

inline layerfuse::WeightedGraph two_triangles() {
  using namespace layerfuse;
  const auto reg = make_registry({"a", "b", "c", "d", "e", "f"});
  const std::vector<Edge> e{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}};
  return WeightedGraph(reg, e);
}

}  // namespace fixtures

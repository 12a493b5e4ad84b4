#pragma once

// Focal-observation ingestion.
//
// Input CSV (header required, optional fifth column):
//
//   date,focal,individual,relation[,occurrence]
//   2006-08-01,F,B,groom,0
//
// Rows sharing (date, focal, occurrence) form one occurrence; a row with no
// occurrence value is an occurrence on its own. Every unordered pair among
// the focal and the individuals seen in an occurrence gets one count of its
// proximity type (1..10). Per bucket, the raw layer counts distinct days with
// an occurrence and the add layer counts same-day repeats, so raw + add is
// the total occurrence count.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace layerfuse::ingest {

inline constexpr std::size_t kProximityTypes = 10;

enum class Relation { party, prox5, prox2, groom };

/// A pair member's standing relative to the focal of an occurrence.
enum class Status { party, prox5, prox2, groom, focal };

inline Status to_status(Relation r) {
  switch (r) {
    case Relation::party: return Status::party;
    case Relation::prox5: return Status::prox5;
    case Relation::prox2: return Status::prox2;
    case Relation::groom: return Status::groom;
  }
  return Status::party;
}

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::party: return "party";
    case Relation::prox5: return "prox5";
    case Relation::prox2: return "prox2";
    case Relation::groom: return "groom";
  }
  return "?";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
  if (s == "party") return Relation::party;
  if (s == "prox5") return Relation::prox5;
  if (s == "prox2") return Relation::prox2;
  if (s == "groom") return Relation::groom;
  return std::nullopt;
}

struct Date {
  int year = 0;
  unsigned month = 0;
  unsigned day = 0;

  auto operator<=>(const Date&) const = default;

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
  }
};

inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = from; i < from + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d)};
}

struct ObservationRecord {
  Date date;
  std::string focal;
  std::string individual;
  Relation relation = Relation::party;
  std::optional<std::int64_t> occurrence;  ///< index within the focal session
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline std::vector<ObservationRecord> parse_observations(std::istream& in) {
  std::vector<ObservationRecord> records;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool has_occurrence = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = detail::trim(line);
    if (view.empty()) continue;
    auto f = detail::split_fields(view);
    if (!have_header) {
      if (lineno == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) {
        view.remove_prefix(3);  // UTF-8 BOM
        f = detail::split_fields(view);
      }
      const bool base = f.size() >= 4 && f[0] == "date" && f[1] == "focal" && f[2] == "individual" &&
                        f[3] == "relation";
      if (!base || f.size() > 5 || (f.size() == 5 && f[4] != "occurrence"))
        throw parse_error(lineno, "expected header 'date,focal,individual,relation[,occurrence]'");
      has_occurrence = f.size() == 5;
      have_header = true;
      continue;
    }
    const std::size_t expected = has_occurrence ? 5 : 4;
    if (f.size() != expected)
      throw parse_error(lineno, "expected " + std::to_string(expected) + " fields, got " + std::to_string(f.size()));
    ObservationRecord r;
    auto date = parse_date(f[0]);
    if (!date) throw parse_error(lineno, "invalid date '" + std::string(f[0]) + "' (want YYYY-MM-DD)");
    r.date = *date;
    if (f[1].empty() || f[2].empty()) throw parse_error(lineno, "empty focal or individual");
    r.focal = std::string(f[1]);
    r.individual = std::string(f[2]);
    auto rel = parse_relation(f[3]);
    if (!rel) throw parse_error(lineno, "unknown relation '" + std::string(f[3]) + "'");
    r.relation = *rel;
    if (r.focal == r.individual) throw parse_error(lineno, "individual equals focal '" + r.focal + "'");
    if (has_occurrence && !f[4].empty()) {
      std::int64_t occ = 0;
      std::istringstream ss{std::string(f[4])};
      if (!(ss >> occ) || !ss.eof()) throw parse_error(lineno, "invalid occurrence '" + std::string(f[4]) + "'");
      r.occurrence = occ;
    }
    records.push_back(std::move(r));
  }
  if (!have_header) throw parse_error(lineno == 0 ? 1 : lineno, "missing header");
  return records;
}

inline std::vector<ObservationRecord> parse_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open observations file '" + path + "'");
  return parse_observations(in);
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Proximity type (1..10) for two individuals given their standing relative to
/// the focal. Symmetric. Grooming between two non-focal individuals counts as
/// prox2.
inline int classify_pair_type(Status a, Status b) {
  if (a == Status::focal && b == Status::focal) throw validation_error("two focals in one pair is impossible");
  if (b == Status::focal) std::swap(a, b);
  if (a == Status::focal) {
    switch (b) {
      case Status::party: return 4;
      case Status::prox5: return 7;
      case Status::prox2: return 9;
      case Status::groom: return 10;
      case Status::focal: break;
    }
  }
  auto rank = [](Status s) { return s == Status::groom ? Status::prox2 : s; };
  a = rank(a);
  b = rank(b);
  if (b < a) std::swap(a, b);
  // a <= b in party < prox5 < prox2
  static constexpr int table[3][3] = {{1, 2, 3}, {2, 5, 6}, {3, 6, 8}};
  return table[static_cast<int>(a)][static_cast<int>(b)];
}

// ---------------------------------------------------------------------------
// Daily counts
// ---------------------------------------------------------------------------

/// Statuses seen in one occurrence of a focal session.
struct SessionStatusMap {
  Date date;
  std::string focal;
  std::optional<std::int64_t> occurrence;
  std::map<std::string, Relation> status;
};

using PairKey = std::pair<std::string, std::string>;  ///< first < second

inline PairKey make_pair_key(const std::string& a, const std::string& b) {
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

struct DailyTypeCounts {
  Date date;
  std::map<std::pair<PairKey, int>, std::int64_t> counts;  ///< (pair, type) -> occurrences
};

/// Groups records into occurrences. When an individual is listed more than
/// once in an occurrence the closest relation wins (groom > prox2 > prox5 > party).
inline std::vector<SessionStatusMap> group_occurrences(const std::vector<ObservationRecord>& records) {
  using Key = std::tuple<Date, std::string, std::int64_t>;
  std::map<Key, SessionStatusMap> grouped;
  std::vector<SessionStatusMap> singles;
  for (const auto& r : records) {
    if (!r.occurrence) {
      SessionStatusMap s{r.date, r.focal, std::nullopt, {}};
      s.status.emplace(r.individual, r.relation);
      singles.push_back(std::move(s));
      continue;
    }
    auto [it, fresh] = grouped.try_emplace(Key{r.date, r.focal, *r.occurrence});
    if (fresh) it->second = SessionStatusMap{r.date, r.focal, r.occurrence, {}};
    auto& st = it->second.status;
    auto found = st.find(r.individual);
    if (found == st.end()) st.emplace(r.individual, r.relation);
    else if (static_cast<int>(r.relation) > static_cast<int>(found->second)) found->second = r.relation;
  }
  std::vector<SessionStatusMap> out;
  out.reserve(grouped.size() + singles.size());
  for (auto& [k, s] : grouped) out.push_back(std::move(s));
  for (auto& s : singles) out.push_back(std::move(s));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
  return out;
}

inline std::vector<DailyTypeCounts> daily_counts(const std::vector<ObservationRecord>& records) {
  std::map<Date, DailyTypeCounts> days;
  for (const auto& occ : group_occurrences(records)) {
    auto& day = days.try_emplace(occ.date, DailyTypeCounts{occ.date, {}}).first->second;
    std::vector<std::pair<std::string, Status>> members;
    members.emplace_back(occ.focal, Status::focal);
    for (const auto& [who, rel] : occ.status) {
      if (who == occ.focal) continue;
      members.emplace_back(who, to_status(rel));
    }
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const int type = classify_pair_type(members[i].second, members[j].second);
        ++day.counts[{make_pair_key(members[i].first, members[j].first), type}];
      }
  }
  std::vector<DailyTypeCounts> out;
  out.reserve(days.size());
  for (auto& [d, c] : days) out.push_back(std::move(c));
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

enum class Bucket { year, month };

inline std::optional<Bucket> parse_bucket(std::string_view s) {
  if (s == "year") return Bucket::year;
  if (s == "month") return Bucket::month;
  return std::nullopt;
}

inline std::string bucket_label(const Date& d, Bucket b) {
  char buf[16];
  if (b == Bucket::year) std::snprintf(buf, sizeof buf, "%04d", d.year);
  else std::snprintf(buf, sizeof buf, "%04d-%02u", d.year, d.month);
  return buf;
}

/// Builds the H = 10 raw/add multiplex series, one snapshot per bucket.
/// `extra_nodes` are added to the registry even if never observed.
inline MultiplexSeries aggregate_period(const std::vector<DailyTypeCounts>& daily, Bucket bucket = Bucket::year,
                                        const std::set<std::string>& extra_nodes = {}) {
  struct Acc {
    std::int64_t days = 0;
    std::int64_t repeats = 0;
  };
  std::map<std::string, std::map<std::pair<PairKey, int>, Acc>, bool (*)(const std::string&, const std::string&)>
      buckets([](const std::string& a, const std::string& b) { return time_label_less(a, b); });
  std::set<std::string> labels = extra_nodes;
  for (const auto& day : daily) {
    auto& b = buckets[bucket_label(day.date, bucket)];
    for (const auto& [key, count] : day.counts) {
      if (count < 1) throw validation_error("daily counts must be positive");
      auto& a = b[key];
      a.days += 1;
      a.repeats += count - 1;
      labels.insert(key.first.first);
      labels.insert(key.first.second);
    }
  }
  if (buckets.size() < 2)
    throw validation_error("observations span " + std::to_string(buckets.size()) +
                           " time bucket(s); at least two are required");
  auto registry = make_registry(std::vector<std::string>(labels.begin(), labels.end()));
  std::vector<MultiplexSnapshot> snaps;
  for (const auto& [label, pairs] : buckets) {
    std::vector<std::vector<Edge>> raw(kProximityTypes), add(kProximityTypes);
    for (const auto& [key, acc] : pairs) {
      const auto u = registry->id(key.first.first);
      const auto v = registry->id(key.first.second);
      const auto h = static_cast<std::size_t>(key.second - 1);
      raw[h].push_back({u, v, static_cast<double>(acc.days)});
      if (acc.repeats > 0) add[h].push_back({u, v, static_cast<double>(acc.repeats)});
    }
    std::vector<WeightedGraph> rg, ag;
    for (std::size_t h = 0; h < kProximityTypes; ++h) {
      rg.emplace_back(registry, raw[h]);
      ag.emplace_back(registry, add[h]);
    }
    snaps.emplace_back(label, std::move(rg), std::move(ag));
  }
  return MultiplexSeries(std::move(snaps));
}

}  // namespace layerfuse::ingest

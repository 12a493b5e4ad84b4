#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "layerfuse/ingest.hpp"

using namespace layerfuse;
using namespace layerfuse::ingest;

namespace {

std::vector<ObservationRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_observations(in);
}

constexpr Status kStatuses[5] = {Status::party, Status::prox5, Status::prox2, Status::groom, Status::focal};

std::int64_t count_of(const DailyTypeCounts& d, const std::string& a, const std::string& b, int type) {
  auto it = d.counts.find({make_pair_key(a, b), type});
  return it == d.counts.end() ? 0 : it->second;
}

}  // namespace

TEST(Parse, SingleRecord) {
  const auto r = parse("date,focal,individual,relation\n2006-08-01,F,B,groom\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].date, (Date{2006, 8, 1}));
  EXPECT_EQ(r[0].focal, "F");
  EXPECT_EQ(r[0].individual, "B");
  EXPECT_EQ(r[0].relation, Relation::groom);
  EXPECT_FALSE(r[0].occurrence);
}

TEST(Parse, HeaderOnlyIsEmpty) { EXPECT_TRUE(parse("date,focal,individual,relation\n").empty()); }

TEST(Parse, SelfObservationRejected) {
  EXPECT_THROW(parse("date,focal,individual,relation\n2006-08-01,F,F,party\n"), validation_error);
}

TEST(Parse, MalformedRowsCarryLineNumbers) {
  const std::string header = "date,focal,individual,relation\n";
  const std::vector<std::pair<std::string, std::size_t>> bad{
      {header + "2006-08-01,F,B,groom\n2006-13-01,F,B,groom\n", 3},
      {header + "2006-08-01,F,B,hug\n", 2},
      {header + "2006-08-01,F,B\n", 2},
      {"date,focal,who,relation\n", 1},
      {"", 1},
  };
  for (const auto& [text, line] : bad) {
    try {
      parse(text);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const parse_error& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  }
}

TEST(Parse, OccurrenceColumn) {
  const auto r = parse("date,focal,individual,relation,occurrence\n2006-08-01,F,B,prox5,3\n2006-08-01,F,C,party,\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].occurrence, 3);
  EXPECT_FALSE(r[1].occurrence);
  EXPECT_THROW(parse("date,focal,individual,relation,occurrence\n2006-08-01,F,B,prox5,x\n"), parse_error);
}

TEST(Classify, TableCells) {
  EXPECT_EQ(classify_pair_type(Status::party, Status::party), 1);
  EXPECT_EQ(classify_pair_type(Status::prox5, Status::party), 2);
  EXPECT_EQ(classify_pair_type(Status::prox2, Status::party), 3);
  EXPECT_EQ(classify_pair_type(Status::focal, Status::party), 4);
  EXPECT_EQ(classify_pair_type(Status::prox5, Status::prox5), 5);
  EXPECT_EQ(classify_pair_type(Status::prox2, Status::prox5), 6);
  EXPECT_EQ(classify_pair_type(Status::focal, Status::prox5), 7);
  EXPECT_EQ(classify_pair_type(Status::prox2, Status::prox2), 8);
  EXPECT_EQ(classify_pair_type(Status::focal, Status::prox2), 9);
  EXPECT_EQ(classify_pair_type(Status::focal, Status::groom), 10);
  EXPECT_THROW(classify_pair_type(Status::focal, Status::focal), validation_error);
}

TEST(Classify, MatchesTableAndIsSymmetric) {
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      if (a == 4 && b == 4) continue;
      EXPECT_EQ(classify_pair_type(kStatuses[a], kStatuses[b]), fixtures::kTypeTable[a][b]) << a << "," << b;
      EXPECT_EQ(classify_pair_type(kStatuses[a], kStatuses[b]), classify_pair_type(kStatuses[b], kStatuses[a]));
    }
}

TEST(DailyCounts, FocalGrooming) {
  const auto d = daily_counts(parse("date,focal,individual,relation\n2006-08-01,F,B,groom\n"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].counts.size(), 1u);
  EXPECT_EQ(count_of(d[0], "F", "B", 10), 1);
}

TEST(DailyCounts, ThreeMemberOccurrence) {
  const auto d = daily_counts(parse(
      "date,focal,individual,relation,occurrence\n"
      "2006-08-01,F,A,prox2,0\n"
      "2006-08-01,F,H,prox5,0\n"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].counts.size(), 3u);
  EXPECT_EQ(count_of(d[0], "F", "A", 9), 1);
  EXPECT_EQ(count_of(d[0], "F", "H", 7), 1);
  EXPECT_EQ(count_of(d[0], "A", "H", 6), 1);
}

TEST(DailyCounts, RepeatsOnOneDayAccumulate) {
  const auto d = daily_counts(parse(
      "date,focal,individual,relation\n"
      "2006-08-01,F,B,party\n"
      "2006-08-01,F,B,party\n"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(count_of(d[0], "F", "B", 4), 2);
}

TEST(DailyCounts, DuplicateListingKeepsClosestRelation) {
  const auto d = daily_counts(parse(
      "date,focal,individual,relation,occurrence\n"
      "2006-08-01,F,B,prox2,1\n"
      "2006-08-01,F,B,groom,1\n"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].counts.size(), 1u);
  EXPECT_EQ(count_of(d[0], "F", "B", 10), 1);
}

TEST(Aggregate, RawCountsDaysAddCountsRepeats) {
  // type 5 pair (B, C) seen 1, 2 and 4 times on three days
  std::string csv = "date,focal,individual,relation,occurrence\n";
  int occ = 0;
  for (auto [day, times] : std::vector<std::pair<std::string, int>>{{"2006-03-01", 1}, {"2006-03-02", 2}, {"2006-03-05", 4}})
    for (int k = 0; k < times; ++k, ++occ) {
      csv += day + ",F,B,prox5," + std::to_string(occ) + "\n";
      csv += day + ",F,C,prox5," + std::to_string(occ) + "\n";
    }
  csv += "2007-01-01,F,B,party," + std::to_string(occ) + "\n";
  const auto series = aggregate_period(daily_counts(parse(csv)));
  ASSERT_EQ(series.T(), 2u);
  EXPECT_EQ(series.H(), 10u);
  EXPECT_EQ(series[0].t(), "2006");
  const auto& reg = *series.registry();
  const auto b = reg.id("B"), c = reg.id("C"), f = reg.id("F");
  EXPECT_DOUBLE_EQ(series[0].raw(4).weight(b, c), 3.0);
  EXPECT_DOUBLE_EQ(series[0].add(4).weight(b, c), 4.0);
  EXPECT_DOUBLE_EQ(series[1].raw(3).weight(f, b), 1.0);
  EXPECT_DOUBLE_EQ(series[1].add(3).weight(f, b), 0.0);
  EXPECT_DOUBLE_EQ(series[1].raw(4).weight(b, c), 0.0);
}

TEST(Aggregate, MonthBuckets) {
  const auto series = aggregate_period(daily_counts(parse(
                                           "date,focal,individual,relation\n"
                                           "2006-01-03,F,B,party\n"
                                           "2006-02-03,F,B,party\n")),
                                       Bucket::month);
  ASSERT_EQ(series.T(), 2u);
  EXPECT_EQ(series[0].t(), "2006-01");
  EXPECT_EQ(series[1].t(), "2006-02");
}

TEST(Aggregate, SingleBucketRejected) {
  EXPECT_THROW(aggregate_period(daily_counts(parse("date,focal,individual,relation\n2006-01-03,F,B,party\n"))),
               validation_error);
}

TEST(Aggregate, RawPlusAddEqualsOccurrencesOnRandomFixture) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto fx = fixtures::observation_fixture(seed, 400);
    const auto series = aggregate_period(daily_counts(parse(fx.csv)));
    const auto& reg = *series.registry();
    std::size_t edges = 0;
    for (const auto& s : series.snapshots())
      for (std::size_t h = 0; h < 10; ++h) edges += s.raw(h).edge_count();
    EXPECT_EQ(edges, fx.occurrences.size());
    for (const auto& [key, total] : fx.occurrences) {
      const auto& [year, a, b, type] = key;
      const MultiplexSnapshot* snap = nullptr;
      for (const auto& s : series.snapshots())
        if (s.t() == year) snap = &s;
      ASSERT_NE(snap, nullptr);
      const auto u = reg.id(a), v = reg.id(b);
      const auto h = static_cast<std::size_t>(type - 1);
      EXPECT_EQ(snap->raw(h).weight(u, v) + snap->add(h).weight(u, v), static_cast<double>(total));
    }
  }
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "irs/irs.hpp"
#include "support.hpp"

using namespace irs;

namespace {

RawTable table(std::vector<std::string> names, std::size_t rows, std::vector<double> values) {
  RawTable t;
  t.cols = names.size();
  t.names = std::move(names);
  t.rows = rows;
  t.values = std::move(values);
  return t;
}

}  // namespace

TEST(Ingest, FourRowCsvPassesDiscreteFactorsThrough) {
  const auto raw = parse_csv("z_0,z_1,g_0,g_1\n0.1,1.0,0,0\n0.2,2.0,0,1\n0.3,3.0,1,0\n0.4,4.0,1,1\n");
  const auto d = ingest(select_columns(raw, {}, "z_", "--code-cols"), select_columns(raw, {}, "g_", "--factor-cols"));
  EXPECT_EQ(d.rows(), 4u);
  EXPECT_EQ(d.factor_count(), 2u);
  EXPECT_EQ(d.feature_count(), 2u);
  EXPECT_EQ(std::vector<std::int32_t>(d.cardinalities().begin(), d.cardinalities().end()),
            (std::vector<std::int32_t>{2, 2}));
  EXPECT_EQ(d.factor(2, 0), 1);
  EXPECT_DOUBLE_EQ(d.code(3, 1), 4.0);
}

TEST(Ingest, ThreeDistinctValuesIntoThreeQuantileBins) {
  DiscretizationPlan plan;
  plan.factors.push_back({"g_0", BinStrategy::quantile, 3});
  const auto d = ingest(table({"z_0"}, 6, {1, 2, 3, 4, 5, 6}),
                        table({"g_0"}, 6, {0.0, 0.5, 1.0, 1.0, 0.5, 0.0}), plan);
  EXPECT_EQ(d.cardinalities()[0], 3);
  const std::vector<std::int32_t> expect{0, 1, 2, 2, 1, 0};
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(d.factor(r, 0), expect[r]);
}

TEST(Ingest, EqualWidthMatchesIndependentHistogram) {
  PortableRng rng(11);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform();
  const auto disc = equal_width_bins(v, 10);

  // Independent recount: bucket b holds values in (lo + b*w, lo + (b+1)*w],
  // the first bucket also holds lo.
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double w = (hi - lo) / 10.0;
  std::vector<int> oracle(10, 0);
  for (double x : v) {
    int b = 0;
    while (b < 9 && x > lo + (b + 1) * w) ++b;
    ++oracle[b];
  }
  std::vector<int> got(disc.binning.levels.size(), 0);
  for (auto idx : disc.indices) ++got[static_cast<std::size_t>(idx)];
  ASSERT_EQ(got.size(), 10u);
  EXPECT_EQ(got, oracle);
}

TEST(Ingest, QuantileBinsAreNonEmptyWithEnoughDistinctValues) {
  PortableRng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int bins = 2 + trial % 9;
    std::vector<double> v;
    for (int k = 0; k < 200; ++k) v.push_back(std::floor(rng.uniform() * (bins + trial % 4)));
    for (int b = 0; b < bins; ++b) v.push_back(b);
    const auto disc = quantile_bins(v, bins);
    EXPECT_EQ(static_cast<int>(disc.binning.levels.size()), bins) << "trial " << trial;
    EXPECT_TRUE(std::is_sorted(disc.binning.edges.begin(), disc.binning.edges.end()));
    EXPECT_EQ(std::adjacent_find(disc.binning.edges.begin(), disc.binning.edges.end()), disc.binning.edges.end());
  }
}

TEST(Ingest, QuantileTiesGoToLowerBin) {
  const std::vector<double> v{1, 2, 2, 2, 3, 4};
  const auto disc = quantile_bins(v, 2);
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (v[r] <= 2) EXPECT_EQ(disc.indices[r], 0);
    else EXPECT_EQ(disc.indices[r], 1);
  }
}

TEST(Ingest, CanonicalizesBySortedValue) {
  const auto d = ingest(table({"z"}, 4, {0, 0, 0, 0}), table({"g"}, 4, {7, 5, 9, 5}));
  EXPECT_EQ(d.factor(0, 0), 1);
  EXPECT_EQ(d.factor(1, 0), 0);
  EXPECT_EQ(d.factor(2, 0), 2);
  EXPECT_EQ(d.binning()[0].levels, (std::vector<double>{5, 7, 9}));
}

TEST(Ingest, UnplannedContinuousColumnUsesDefaultQuantileBins) {
  std::vector<double> g, z;
  for (int k = 0; k < 100; ++k) {
    g.push_back(k * 0.01);
    z.push_back(k);
  }
  const auto d = ingest(table({"z"}, 100, z), table({"g"}, 100, g));
  EXPECT_EQ(d.cardinalities()[0], 10);
  EXPECT_EQ(d.binning()[0].strategy, BinStrategy::quantile);
}

TEST(Ingest, IsIdempotentOnDiscreteInput) {
  std::mt19937_64 rng(5);
  const auto d = fixtures::random_dataset(rng, 300, 3, 2);
  RawTable codes = table({"z_0", "z_1"}, d.rows(), std::vector<double>(d.codes().begin(), d.codes().end()));
  RawTable factors = table({"g_0", "g_1", "g_2"}, d.rows(), std::vector<double>(d.factors().begin(), d.factors().end()));
  const auto once = ingest(codes, factors);
  RawTable again = factors;
  again.values.assign(once.factors().begin(), once.factors().end());
  const auto twice = ingest(codes, again);
  EXPECT_TRUE(std::equal(once.factors().begin(), once.factors().end(), twice.factors().begin()));
  EXPECT_TRUE(std::equal(once.codes().begin(), once.codes().end(), twice.codes().begin()));
  EXPECT_TRUE(std::equal(once.cardinalities().begin(), once.cardinalities().end(), twice.cardinalities().begin()));
  EXPECT_TRUE(std::equal(once.factors().begin(), once.factors().end(), d.factors().begin()));
}

TEST(Ingest, RejectsRowMismatch) {
  EXPECT_THROW(ingest(table({"z"}, 2, {1, 2}), table({"g"}, 3, {0, 1, 0})), ValidationError);
}

TEST(Ingest, RejectsNonFiniteCodes) {
  EXPECT_THROW(ingest(table({"z"}, 2, {1, NAN}), table({"g"}, 2, {0, 1})), ValidationError);
  EXPECT_THROW(ingest(table({"z"}, 2, {1, INFINITY}), table({"g"}, 2, {0, 1})), ValidationError);
}

TEST(Ingest, RejectsConstantFactor) {
  try {
    ingest(table({"z"}, 3, {1, 2, 3}), table({"g_flat"}, 3, {4, 4, 4}));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("g_flat"), std::string::npos);
  }
}

TEST(Ingest, RejectsPlanForUnknownColumn) {
  DiscretizationPlan plan;
  plan.factors.push_back({"g_missing", BinStrategy::quantile, 3});
  EXPECT_THROW(ingest(table({"z"}, 2, {1, 2}), table({"g"}, 2, {0, 1}), plan), ValidationError);
}

TEST(Ingest, PreservesRowOrderAndCount) {
  DiscretizationPlan plan;
  plan.factors.push_back({"g", BinStrategy::equal_width, 4});
  const std::vector<double> g{0.9, 0.1, 0.5, 0.3, 0.7, 0.2};
  const auto d = ingest(table({"z"}, 6, {0, 1, 2, 3, 4, 5}), table({"g"}, 6, g), plan);
  ASSERT_EQ(d.rows(), 6u);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_DOUBLE_EQ(d.code(r, 0), static_cast<double>(r));
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < 6; ++b)
      if (g[a] < g[b]) {
        EXPECT_LE(d.factor(a, 0), d.factor(b, 0));
      }
}

TEST(LabeledDataset, RejectsLooseCardinalities) {
  EXPECT_THROW(LabeledDataset(3, 1, {1, 2, 3}, 1, {0, 2, 0}), ValidationError);
  EXPECT_THROW(LabeledDataset(2, 1, {1, 2}, 1, {0, -1}), ValidationError);
  EXPECT_THROW(LabeledDataset(0, 1, {}, 1, {}), ValidationError);
}

TEST(Crossed, DetectsExactlyOnceGrids) {
  const auto six = fixtures::crossed({2, 3}, [](const auto& g) { return std::vector<double>{double(g[0])}; });
  EXPECT_TRUE(is_fully_crossed(six));

  std::vector<std::vector<std::int32_t>> g{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}, {1, 2}};
  std::vector<std::vector<double>> z(7, std::vector<double>{0.0});
  EXPECT_FALSE(is_fully_crossed(fixtures::from_rows(g, z)));

  std::vector<std::vector<std::int32_t>> mini;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        if (!(a == 2 && b == 1 && c == 1)) mini.push_back({a, b, c});
  EXPECT_FALSE(is_fully_crossed(fixtures::from_rows(mini, std::vector<std::vector<double>>(11, {0.0}))));

  // right row count, wrong tuples
  std::vector<std::vector<std::int32_t>> swapped{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {0, 0}};
  EXPECT_FALSE(is_fully_crossed(fixtures::from_rows(swapped, std::vector<std::vector<double>>(6, {0.0}))));
}

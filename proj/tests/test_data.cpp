// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "naga/data.hpp"
#include "naga/rng.hpp"

using naga::Rng;
using naga::SeriesTable;
using naga::Shape;
using naga::SplitSpec;
using naga::Tensor;

namespace {

SeriesTable ramp(std::size_t rows, std::size_t features = 1) {
  SeriesTable t;
  t.values = Tensor(Shape{rows, features});
  for (std::size_t f = 0; f < features; ++f) t.feature_names.push_back("f" + std::to_string(f));
  for (std::size_t r = 0; r < rows; ++r) {
    t.timestamps.push_back(std::to_string(r));
    t.time_keys.push_back(static_cast<std::int64_t>(r));
    for (std::size_t f = 0; f < features; ++f) t.values.at(r, f) = static_cast<double>(r + 1 + 10 * f);
  }
  return t;
}

}  // namespace

TEST(Csv, ToyFile) {
  const auto s = naga::parse_csv("date,a,b\n2020-01-01 00:00,1,2\n2020-01-01 01:00,3,4\n2020-01-01 02:00,5,6\n");
  EXPECT_EQ(s.table.rows(), 3u);
  EXPECT_EQ(s.table.features(), 2u);
  EXPECT_EQ(s.table.values, Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(s.report.filled_cells, 0u);
  EXPECT_EQ(s.report.target_index, 1u);
}

TEST(Csv, BlankCellIsForwardFilledAndCounted) {
  const auto s = naga::parse_csv("t,a,b\n0,1,2\n1,,4\n2,5,6\n");
  EXPECT_EQ(s.table.values.at(1, 0), 1.0);
  EXPECT_EQ(s.report.filled_cells, 1u);
  const auto lead = naga::parse_csv("t,a\n0,\n1,7\n");
  EXPECT_EQ(lead.table.values.at(0, 0), 7.0);
  EXPECT_EQ(lead.report.filled_cells, 1u);
}

TEST(Csv, EttHeaderDefaultsTargetToLastColumn) {
  const auto s = naga::parse_csv(
      "date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT\n"
      "2016-07-01 00:00:00,5.8,2.0,1.5,0.4,4.2,1.3,30.5\n"
      "2016-07-01 01:00:00,5.6,2.1,1.4,0.4,4.1,1.3,27.8\n");
  EXPECT_EQ(s.table.features(), 7u);
  EXPECT_EQ(s.report.feature_names.at(s.report.target_index), "OT");
  naga::CsvSchema schema;
  schema.target = "HULL";
  EXPECT_EQ(naga::parse_csv("d,HUFL,HULL,OT\n0,1,2,3\n", schema).report.target_index, 1u);
}

TEST(Csv, ErrorsCarryRowNumbers) {
  try {
    naga::parse_csv("t,a\n0,1\n2,2\n1,3\n");
    FAIL();
  } catch (const naga::IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(naga::parse_csv("t\n0\n1\n"), naga::IngestionError);
  EXPECT_THROW(naga::parse_csv("t,a\nnot-a-time,1\n"), naga::IngestionError);
  EXPECT_THROW(naga::load_csv("/nonexistent/file.csv"), naga::IngestionError);
}

TEST(Csv, ReportIsJson) {
  const auto s = naga::parse_csv("t,a\n0,1\n1,\n", {}, "toy.csv");
  const std::string j = s.report.to_json();
  EXPECT_NE(j.find("\"filled_cells\": 1"), std::string::npos) << j;
  EXPECT_NE(j.find("toy.csv"), std::string::npos);
}

TEST(TimeKey, IsoAndInteger) {
  EXPECT_EQ(naga::parse_time_key("1970-01-01 00:01:00"), 60);
  EXPECT_EQ(naga::parse_time_key("1970-01-02T00:00"), 86400);
  EXPECT_EQ(naga::parse_time_key("42"), 42);
  EXPECT_FALSE(naga::parse_time_key("yesterday").has_value());
}

TEST(Split, DocumentedLengths) {
  auto lens = [](std::size_t n, const SplitSpec& s) {
    const auto parts = naga::split_series(ramp(n), s);
    return std::vector<std::size_t>{parts.train.rows(), parts.val.rows(), parts.test.rows()};
  };
  EXPECT_EQ(lens(100, SplitSpec::ratio(0.7, 0.15, 0.15)), (std::vector<std::size_t>{70, 15, 15}));
  EXPECT_EQ(lens(10, SplitSpec::ratio(0.6, 0.2, 0.2)), (std::vector<std::size_t>{6, 2, 2}));
  EXPECT_EQ(lens(100, SplitSpec::ratio(0.6, 0.2, 0.2)), (std::vector<std::size_t>{60, 20, 20}));
  EXPECT_EQ(lens(41984, SplitSpec::counts(33792, 4096, 4096)), (std::vector<std::size_t>{33792, 4096, 4096}));
}

TEST(Split, Errors) {
  EXPECT_THROW(naga::split_series(ramp(3), SplitSpec::ratio(0.7, 0.15, 0.15)), naga::SplitError);
  EXPECT_THROW(SplitSpec::ratio(0.5, 0.2, 0.2).validate(), naga::SplitError);
  EXPECT_THROW(naga::split_series(ramp(10), SplitSpec::counts(8, 2, 2)), naga::SplitError);
}

TEST(Norm, PopulationStatsAndClamp) {
  const auto stats = naga::fit_norm(ramp(3));
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_NEAR(stats.std[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(stats.std[0], 0.8165, 1e-4);

  SeriesTable flat = ramp(4);
  for (std::size_t r = 0; r < 4; ++r) flat.values.at(r, 0) = 3.0;
  const auto fs = naga::fit_norm(flat);
  EXPECT_TRUE(fs.clamped[0]);
  EXPECT_EQ(fs.std[0], 1.0);
  EXPECT_EQ(naga::apply_norm(flat, fs).values, Tensor::zeros(Shape{4, 1}));
}

TEST(Norm, ValAndTestUseTrainStatistics) {
  const SeriesTable t = ramp(100, 2);
  const auto parts = naga::split_series(t, SplitSpec::ratio(0.7, 0.15, 0.15));
  const naga::WindowedDataset ds = naga::build_dataset(t, SplitSpec::ratio(0.7, 0.15, 0.15), 3, 1, 1);
  const auto stats = naga::fit_norm(parts.train);
  EXPECT_EQ(ds.stats.mean, stats.mean);
  // The first test window starts at raw row 85; its first value is (86 - mean) / std.
  EXPECT_NEAR(ds.test.x.at(0, 0, 0), (86.0 - stats.mean[0]) / stats.std[0], 1e-12);
  EXPECT_GT(std::abs(ds.test.x.at(0, 0, 0)), 1.0);
}

TEST(Norm, TrainMomentsAndInverse) {
  Rng rng(1);
  SeriesTable t = ramp(500, 3);
  t.values = rng.normal_tensor(Shape{500, 3}, 7.0);
  for (std::size_t r = 0; r < 500; ++r) t.values.at(r, 1) += 100.0;
  const auto stats = naga::fit_norm(t);
  const SeriesTable z = naga::apply_norm(t, stats);
  for (std::size_t f = 0; f < 3; ++f) {
    double m = 0.0, v = 0.0;
    for (std::size_t r = 0; r < 500; ++r) m += z.values.at(r, f);
    m /= 500.0;
    for (std::size_t r = 0; r < 500; ++r) v += (z.values.at(r, f) - m) * (z.values.at(r, f) - m);
    EXPECT_LT(std::abs(m), 1e-10);
    EXPECT_LT(std::abs(std::sqrt(v / 500.0) - 1.0), 1e-10);
  }
  EXPECT_LT(naga::max_abs_diff(naga::invert_norm(z, stats).values, t.values), 1e-10);
}

TEST(Windows, CountsAndContents) {
  const auto w = naga::make_windows(ramp(5), 3, 1, 0);
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.x.slab(0), Tensor::matrix({{1}, {2}, {3}}));
  EXPECT_EQ(w.y.slab(0), Tensor::vector({4}));
  EXPECT_THROW(naga::make_windows(ramp(3), 3, 1, 0), naga::WindowError);
  try {
    naga::make_windows(ramp(3), 3, 2, 0);
  } catch (const naga::WindowError& e) {
    EXPECT_NE(std::string(e.what()).find("5"), std::string::npos) << e.what();
  }
}

TEST(Windows, FuzzedConfigurationsNeverLeak) {
  Rng rng(2);
  int checked = 0;
  for (int n = 0; n < 1000; ++n) {
    const std::size_t rows = 20 + rng.below(300), d = 1 + rng.below(12), h = 1 + rng.below(6);
    SplitSpec spec;
    switch (rng.below(3)) {
      case 0: spec = SplitSpec::ratio(0.7, 0.15, 0.15); break;
      case 1: spec = SplitSpec::ratio(0.6, 0.2, 0.2); break;
      default: {
        const std::size_t a = 1 + rng.below(rows / 2), b = 1 + rng.below(rows / 4);
        spec = SplitSpec::counts(a, b, 1 + rng.below(rows - a - b));
      }
    }
    naga::WindowedDataset ds;
    try {
      ds = naga::build_dataset(ramp(rows), spec, d, h, 0);
    } catch (const naga::WindowError&) {
      continue;
    }
    const auto parts = naga::split_series(ramp(rows), spec);
    const naga::WindowSet* sets[3] = {&ds.train, &ds.val, &ds.test};
    const SeriesTable* tables[3] = {&parts.train, &parts.val, &parts.test};
    std::set<std::size_t> seen[3];
    for (int s = 0; s < 3; ++s) {
      const std::size_t lo = tables[s]->first_row, hi = lo + tables[s]->rows();
      ASSERT_EQ(sets[s]->size(), tables[s]->rows() - d - h + 1);
      for (std::size_t start : sets[s]->start_rows) {
        ASSERT_GE(start, lo);
        ASSERT_LE(start + d + h, hi);
        for (std::size_t r = start; r < start + d + h; ++r) seen[s].insert(r);
      }
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        for (std::size_t r : seen[a]) ASSERT_EQ(seen[b].count(r), 0u);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Synth, ZeroTargetAndDeterminism) {
  naga::SynthSpec s;
  s.rank = 0;
  s.linear_scale = 0.0;
  s.noise = 0.0;
  s.rows = 50;
  const auto z = naga::synth_bilinear(s);
  for (std::size_t r = 0; r < 50; ++r) EXPECT_EQ(z.table.values.at(r, s.d_in), 0.0);

  naga::SynthSpec q;
  q.noise = 0.0;
  q.rows = 60;
  const auto a = naga::synth_bilinear(q), b = naga::synth_bilinear(q);
  EXPECT_EQ(a.table.values, b.table.values);
  for (std::size_t r = q.window; r < q.rows; ++r) {
    Tensor w(Shape{q.window, q.d_in});
    for (std::size_t t = 0; t < q.window; ++t)
      for (std::size_t j = 0; j < q.d_in; ++j) w.at(t, j) = a.table.values.at(r - q.window + t, j);
    EXPECT_EQ(a.table.values.at(r, q.d_in), a.target.evaluate(w));
  }
}

TEST(Synth, RankOneMatchesOuterProduct) {
  Rng rng(3);
  naga::BilinearTarget t;
  const Tensor u = rng.normal_tensor(Shape{3}), v = rng.normal_tensor(Shape{3});
  t.C = Tensor(Shape{3, 3});
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) t.C.at(a, b) = u[a] * v[b];
  t.rank = 1;
  t.t = 4;
  t.t_prime = 1;
  t.linear = Tensor::zeros(Shape{6, 3});
  const Tensor x = rng.normal_tensor(Shape{6, 3});
  double ux = 0.0, vx = 0.0;
  for (std::size_t a = 0; a < 3; ++a) ux += u[a] * x.at(4, a), vx += v[a] * x.at(1, a);
  EXPECT_NEAR(t.evaluate(x), ux * vx, 1e-12);
  EXPECT_TRUE(t.mirrored());
}

TEST(Synth, RandomRankMatrixHasRequestedRank) {
  for (std::size_t r = 0; r <= 4; ++r) {
    const Tensor c = naga::random_rank_matrix(4, r, 10 + r);
    // Row-reduce to count pivots.
    Tensor m = c;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < 4 && rank < 4; ++col) {
      std::size_t piv = rank;
      for (std::size_t i = rank; i < 4; ++i)
        if (std::abs(m.at(i, col)) > std::abs(m.at(piv, col))) piv = i;
      if (std::abs(m.at(piv, col)) < 1e-9) continue;
      for (std::size_t j = 0; j < 4; ++j) std::swap(m.at(piv, j), m.at(rank, j));
      for (std::size_t i = rank + 1; i < 4; ++i) {
        const double f = m.at(i, col) / m.at(rank, col);
        for (std::size_t j = 0; j < 4; ++j) m.at(i, j) -= f * m.at(rank, j);
      }
      ++rank;
    }
    EXPECT_EQ(rank, r);
  }
}

TEST(Csv, WriteThenLoadRoundTrips) {
  naga::SynthSpec s;
  s.rows = 40;
  const auto series = naga::synth_bilinear(s);
  const auto path = std::filesystem::temp_directory_path() / "naga_synth_roundtrip.csv";
  naga::write_csv(series.table, path);
  const auto back = naga::load_csv(path);
  EXPECT_EQ(back.table.values, series.table.values);
  EXPECT_EQ(back.table.feature_names, series.table.feature_names);
  std::filesystem::remove(path);
}

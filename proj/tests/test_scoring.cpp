#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"

using namespace aae;

namespace {

Matrix random_points(Eigen::Index n, Rng& rng, double span = 12) {
  Matrix z(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    z(i, 0) = rng.uniform(-span, span);
    z(i, 1) = rng.uniform(-span, span);
  }
  return z;
}

struct Trained {
  EntryTable table;
  EncodedMatrix data;
  AaeModel model;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    out.table = inject_global_anomalies(oracle::small_ledger(1500, 30), 5, 1);
    out.data = encode_entries(out.table, fit_encoding_spec(out.table));
    TrainConfig cfg;
    cfg.arch = ArchProfile::B;
    cfg.epochs_max = 5;
    cfg.lr_disc = 1e-4;
    out.model = train(out.data, cfg).model;
    return out;
  }();
  return t;
}

}  // namespace

TEST(ModeDivergence, MatchesExhaustiveArgmin) {
  Rng rng(1);
  for (std::size_t tau : {1u, 3u, 5u, 10u}) {
    const Matrix centers = default_mode_centers(tau);
    const Matrix z = random_points(1000, rng);
    const auto d = mode_divergence(z, centers);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const auto best = oracle::nearest_center({z(i, 0), z(i, 1)}, centers);
      EXPECT_EQ(d.closest[static_cast<std::size_t>(i)], best + 1);
      EXPECT_NEAR(d.divergence[static_cast<std::size_t>(i)], (z.row(i) - centers.row(static_cast<Eigen::Index>(best))).squaredNorm(),
                  1e-12);
    }
  }
}

TEST(ModeDivergence, TiesGoToLowestModeAndPermutationsCommute) {
  Matrix centers(2, 2);
  centers << -1, 0, 1, 0;
  Matrix z(1, 2);
  z << 0, 5;
  EXPECT_EQ(mode_divergence(z, centers).closest[0], 1u);

  Rng rng(2);
  const Matrix pts = random_points(50, rng);
  std::vector<Eigen::Index> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Matrix shuffled(50, 2);
  for (Eigen::Index i = 0; i < 50; ++i) shuffled.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);
  const auto a = mode_divergence(pts, default_mode_centers(5));
  const auto b = mode_divergence(shuffled, default_mode_centers(5));
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(b.closest[i], a.closest[static_cast<std::size_t>(perm[i])]);
    EXPECT_EQ(b.divergence[i], a.divergence[static_cast<std::size_t>(perm[i])]);
  }
}

TEST(ModeDivergence, Errors) {
  EXPECT_THROW(mode_divergence(Matrix::Zero(2, 2), Matrix::Zero(0, 2)), ArgumentError);
  EXPECT_THROW(mode_divergence(Matrix::Zero(2, 3), default_mode_centers(2)), ShapeError);
}

TEST(ReconstructionError, MeanOverAllColumns) {
  Matrix x(2, 4), y(2, 4);
  x << 1, 0, 0, 0.5, 0, 1, 0, 0.25;
  y << 0.5, 0.5, 0, 0.5, 0, 1, 0, 0.25;
  const auto e = reconstruction_error(x, y);
  EXPECT_DOUBLE_EQ(e[0], 0.5 / 4);
  EXPECT_EQ(e[1], 0.0);
  EXPECT_THROW(reconstruction_error(x, Matrix::Zero(3, 4)), ShapeError);
}

TEST(Normalization, MatchesGroupSplitOracle) {
  Rng rng(3);
  std::vector<double> v(400);
  std::vector<std::size_t> g(400);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform(-5, 20);
    g[i] = rng.index(4);
  }
  g[0] = 6;  // singleton group
  const auto got = normalize_per_mode(v, g);
  const auto want = oracle::split_min_max(v, g);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  EXPECT_EQ(got[0], 0.0);
  for (std::size_t grp = 0; grp < 4; ++grp) {
    std::size_t zeros = 0, ones = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (g[i] == grp) {
        zeros += got[i] == 0.0;
        ones += got[i] == 1.0;
      }
    EXPECT_EQ(zeros, 1u);
    EXPECT_EQ(ones, 1u);
  }
}

TEST(Normalization, DegenerateGroupsAndGlobal) {
  const std::vector<double> flat = {3, 3, 3};
  for (double x : normalize_global(flat)) EXPECT_EQ(x, 0.0);
  const std::vector<double> v = {2, 4, 6};
  EXPECT_EQ(normalize_global(v), (std::vector<double>{0, 0.5, 1}));
  const std::vector<std::size_t> g = {0, 1};
  EXPECT_THROW(normalize_per_mode(v, g), ShapeError);
}

TEST(AnomalyScore, BlendAndMonotonicity) {
  const std::vector<double> re = {0.2, 0.9}, md = {0.6, 0.1};
  const auto as = anomaly_score(re, md, 0.25);
  EXPECT_DOUBLE_EQ(as[0], 0.25 * 0.2 + 0.75 * 0.6);
  EXPECT_THROW(anomaly_score(re, md, 1.01), ArgumentError);
  EXPECT_THROW(anomaly_score(re, md, -0.1), ArgumentError);
  for (double alpha : {0.1, 0.5, 1.0}) EXPECT_LT(blend(0.3, 0.5, alpha), blend(0.31, 0.5, alpha));
}

TEST(ScoreTable, InvariantsOnTrainedModel) {
  const auto& t = trained();
  const auto s = score_table(t.model, t.table, t.data, 0.8);
  ASSERT_EQ(s.size(), t.table.size());
  EXPECT_TRUE(s.has_labels());
  for (const auto& r : s.rows) {
    EXPECT_GE(r.mode, 1u);
    EXPECT_LE(r.mode, 5u);
    for (double x : {r.md, r.re, r.as}) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
    EXPECT_NEAR(r.as, 0.8 * r.re + 0.2 * r.md, 1e-12);
  }
  // Per-mode endpoints attained.
  for (std::size_t m = 1; m <= 5; ++m) {
    std::vector<double> re, md;
    for (const auto& r : s.rows)
      if (r.mode == m) {
        re.push_back(r.re);
        md.push_back(r.md);
      }
    if (re.size() < 2) continue;
    EXPECT_EQ(*std::min_element(re.begin(), re.end()), 0.0);
    EXPECT_EQ(*std::max_element(re.begin(), re.end()), 1.0);
    EXPECT_EQ(*std::min_element(md.begin(), md.end()), 0.0);
    EXPECT_EQ(*std::max_element(md.begin(), md.end()), 1.0);
  }
  // Same frozen model and data: bit-identical.
  const auto again = score_table(t.model, t.table, t.data, 0.8);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(again.rows[i].as, s.rows[i].as);
}

TEST(ScoreTable, AlphaOneRanksByRawErrorWithinMode) {
  const auto& t = trained();
  const auto s = score_table(t.model, t.table, t.data, 1.0);
  for (std::size_t m = 1; m <= 5; ++m) {
    std::vector<const ScoreRow*> rows;
    for (const auto& r : s.rows)
      if (r.mode == m) rows.push_back(&r);
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i - 1]->error < rows[i]->error) EXPECT_LE(rows[i - 1]->as, rows[i]->as);
  }
}

TEST(ScoreTable, ReblendAndGlobalNormalization) {
  const auto& t = trained();
  const auto s = score_table(t.model, t.table, t.data, 0.8);
  const auto r = reblend(s, 0.3);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(r.rows[i].as, 0.3 * s.rows[i].re + 0.7 * s.rows[i].md, 1e-12);
  EXPECT_THROW(reblend(s, 2.0), ArgumentError);

  const auto g = score_table(t.model, t.data, 0.8, {}, {}, Normalization::global);
  const auto raw_max = std::max_element(g.rows.begin(), g.rows.end(),
                                        [](const auto& a, const auto& b) { return a.divergence < b.divergence; });
  EXPECT_EQ(raw_max->md, 1.0);
  EXPECT_EQ(g.rows[3].id, 3);
  EXPECT_FALSE(g.has_labels());
}

TEST(ScoreTable, SingleModeUsesWholePopulation) {
  const auto& t = trained();
  auto model = t.model;
  model.prior.centers = default_mode_centers(1);
  const auto s = score_table(model, t.data, 0.5);
  std::vector<double> d;
  for (const auto& r : s.rows) {
    EXPECT_EQ(r.mode, 1u);
    d.push_back(r.divergence);
  }
  const auto want = normalize_global(d);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.rows[i].md, want[i]);
}

TEST(ScoreTable, OffManifoldRowScoresHighest) {
  // 199 copies of one regular pattern and one row the model has not seen.
  EntryTable base = oracle::small_ledger(1, 5);
  EntryTable fixture;
  fixture.schema = base.schema;
  for (int i = 0; i < 199; ++i) {
    auto e = base.entries[0];
    e.id = i;
    fixture.entries.push_back(e);
  }
  auto odd = base.entries[0];
  odd.id = 199;
  for (auto& v : odd.categorical) v = "ODD";
  odd.numerical = {1e7, 1e7};
  fixture.entries.push_back(odd);
  fixture.labels.assign(200, EntryLabel::regular);

  const auto spec = fit_encoding_spec(fixture);
  const auto train_rows = encode_entries(fixture, spec);
  EncodedMatrix regular_only{train_rows.rows.topRows(199), spec};
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 40;
  cfg.batch_size = 32;
  const auto model = train(regular_only, cfg).model;
  const auto s = score_table(model, fixture, train_rows, 0.8);
  const auto top = rank_entries(s, 1);
  EXPECT_EQ(s.rows[top[0]].id, 199);
}

TEST(ScoreTable, RejectsForeignEncodingAndBadInputs) {
  const auto& t = trained();
  auto other = oracle::small_ledger(300, 99);
  const auto foreign = encode_entries(other, fit_encoding_spec(other));
  EXPECT_THROW(score_table(t.model, foreign, 0.8), CompatibilityError);
  EXPECT_THROW(score_table(t.model, t.data, 1.5), ArgumentError);
  const std::vector<std::int64_t> few_ids = {1, 2};
  EXPECT_THROW(score_table(t.model, t.data, 0.8, few_ids), ShapeError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace aae;

namespace {

struct Fixture {
  EntryTable table = oracle::small_ledger(400, 21);
  EncodedMatrix data = encode_entries(table, fit_encoding_spec(table));
};

AaeModel fresh_model(const EncodedMatrix& data, ArchProfile arch, std::uint64_t seed = 3) {
  TrainConfig cfg;
  cfg.arch = arch;
  cfg.seed = seed;
  Rng rng(seed);
  return build_model(data.spec, cfg, rng);
}

std::vector<std::size_t> widths(const Mlp& net) {
  std::vector<std::size_t> w;
  for (const auto& l : net.layers) w.push_back(l.fan_out());
  return w;
}

bool same_params(const Mlp& a, const Mlp& b) {
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    if (a.layers[l].weights != b.layers[l].weights || a.layers[l].bias != b.layers[l].bias) return false;
  return true;
}

}  // namespace

TEST(Prior, RingCenters) {
  const Matrix c = default_mode_centers(4, 8.0);
  EXPECT_NEAR(c(0, 0), 8.0, 1e-12);
  EXPECT_NEAR(c(1, 1), 8.0, 1e-12);
  EXPECT_NEAR(c(2, 0), -8.0, 1e-12);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(c.row(i).norm(), 8.0, 1e-12);
  EXPECT_TRUE(default_mode_centers(1) == Matrix::Zero(1, 2));
  EXPECT_THROW(default_mode_centers(0), ArgumentError);
  PriorSpec dup{Matrix::Zero(2, 2)};
  EXPECT_THROW(dup.validate(), ArgumentError);
}

TEST(Prior, SampleStatisticsPerMode) {
  PriorSpec prior{default_mode_centers(5)};
  Rng rng(77);
  const auto s = sample_prior_with_modes(prior, 20000, rng);
  for (std::size_t t = 0; t < 5; ++t) {
    double n = 0, sx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < s.mode.size(); ++i)
      if (s.mode[i] == t) {
        const double dx = s.z(static_cast<Eigen::Index>(i), 0) - prior.centers(static_cast<Eigen::Index>(t), 0);
        const double dy = s.z(static_cast<Eigen::Index>(i), 1) - prior.centers(static_cast<Eigen::Index>(t), 1);
        n += 1;
        sx += dx;
        sy += dy;
        sxy += dx * dy;
      }
    // Roughly 4000 per mode; 5 standard errors.
    EXPECT_NEAR(n, 4000, 5 * std::sqrt(20000 * 0.2 * 0.8));
    EXPECT_NEAR(sx / n, 0.0, 5 / std::sqrt(n));
    EXPECT_NEAR(sy / n, 0.0, 5 / std::sqrt(n));
    EXPECT_NEAR(sxy / n, 0.0, 5 / std::sqrt(n));
  }
}

TEST(Prior, SeededSamplingIsReproducible) {
  PriorSpec prior{default_mode_centers(3)};
  EXPECT_TRUE(sample_prior(prior, 50, 5) == sample_prior(prior, 50, 5));
  EXPECT_FALSE(sample_prior(prior, 50, 5) == sample_prior(prior, 50, 6));
}

TEST(Architecture, ProfilesInstantiateLayerWidths) {
  Fixture f;
  const auto k = f.data.spec.total_dims();
  const auto a = fresh_model(f.data, ArchProfile::A);
  EXPECT_EQ(widths(a.encoder), (std::vector<std::size_t>{256, 128, 64, 32, 16, 8, 4, 2}));
  EXPECT_EQ(widths(a.decoder), (std::vector<std::size_t>{4, 8, 16, 32, 64, 128, 256, k}));
  EXPECT_EQ(widths(a.discriminator), (std::vector<std::size_t>{128, 64, 32, 16, 1}));
  const auto b = fresh_model(f.data, ArchProfile::B);
  EXPECT_EQ(widths(b.encoder), (std::vector<std::size_t>{256, 64, 16, 4, 2}));
  EXPECT_EQ(widths(b.decoder), (std::vector<std::size_t>{4, 16, 64, 256, k}));
  EXPECT_EQ(widths(b.discriminator), (std::vector<std::size_t>{256, 64, 16, 4, 1}));
  EXPECT_EQ(b.encoder.layers.back().activation, Activation::linear);
  EXPECT_EQ(b.decoder.layers.back().activation, Activation::sigmoid);
  EXPECT_EQ(b.discriminator.layers.back().activation, Activation::sigmoid);
  EXPECT_EQ(parse_arch("A"), ArchProfile::A);
  EXPECT_THROW(parse_arch("C"), ArgumentError);
}

TEST(Config, Validation) {
  TrainConfig cfg;
  cfg.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.lr_disc = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(CombinedLossGradient, MatchesFiniteDifferencesBothProfiles) {
  Fixture f;
  const Matrix batch = f.data.rows.topRows(8);
  for (auto arch : {ArchProfile::A, ArchProfile::B}) {
    const auto check = oracle::check_reconstruction_gradients(fresh_model(f.data, arch), batch, 1e-6, 150, 4);
    EXPECT_LT(check.relative_error, 1e-4) << to_string(arch);
    EXPECT_EQ(check.checked, 300u);
  }
}

TEST(TrainingSteps, UpdateOnlyTheirNetworks) {
  Fixture f;
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  auto model = fresh_model(f.data, cfg.arch);
  auto opt = Optimizers::for_model(model, cfg);
  const Matrix batch = f.data.rows.topRows(16);

  const auto before = model;
  reconstruction_step(model, batch, opt, cfg.gamma);
  EXPECT_FALSE(same_params(model.encoder, before.encoder));
  EXPECT_FALSE(same_params(model.decoder, before.decoder));
  EXPECT_TRUE(same_params(model.discriminator, before.discriminator));

  const auto mid = model;
  Rng rng(1);
  regularization_step(model, batch, opt, rng);
  EXPECT_FALSE(same_params(model.encoder, mid.encoder));
  EXPECT_TRUE(same_params(model.decoder, mid.decoder));
  EXPECT_FALSE(same_params(model.discriminator, mid.discriminator));
}

TEST(TrainingSteps, DiscriminatorLearnsToSeparatePriorFromCodes) {
  Fixture f;
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.lr_disc = 1e-3;
  auto model = fresh_model(f.data, cfg.arch);
  auto opt = Optimizers::for_model(model, cfg);
  Rng rng(2);
  const Matrix batch = f.data.rows.topRows(64);
  const double first = regularization_step(model, batch, opt, rng).discriminator;
  EXPECT_NEAR(first, std::log(2.0), 0.5);
  // Freeze the encoder by discarding its updates.
  const auto encoder = model.encoder;
  double last = first;
  for (int i = 0; i < 200; ++i) {
    last = regularization_step(model, batch, opt, rng).discriminator;
    model.encoder = encoder;
  }
  EXPECT_LT(last, 0.2);
}

TEST(TrainingSteps, WidthMismatchIsShapeError) {
  Fixture f;
  TrainConfig cfg;
  auto model = fresh_model(f.data, ArchProfile::B);
  auto opt = Optimizers::for_model(model, cfg);
  const Matrix wrong = Matrix::Zero(4, static_cast<Eigen::Index>(f.data.spec.total_dims()) + 1);
  EXPECT_THROW(reconstruction_step(model, wrong, opt, cfg.gamma), ShapeError);
  Rng rng(1);
  EXPECT_THROW(regularization_step(model, wrong, opt, rng), ShapeError);
  EXPECT_THROW(encode(model, wrong), ShapeError);
  EXPECT_THROW(decode(model, Matrix::Zero(2, 3)), ShapeError);
}

TEST(Train, IsDeterministicAndRecordsEveryEpoch) {
  Fixture f;
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 3;
  cfg.batch_size = 64;
  cfg.seed = 9;
  std::size_t seen = 0;
  const auto a = train(f.data, cfg, [&](std::size_t epoch, const EpochRecord&) { seen = epoch; });
  const auto b = train(f.data, cfg);
  EXPECT_EQ(seen, 3u);
  ASSERT_EQ(a.trace.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.trace.epochs[e].reconstruction, b.trace.epochs[e].reconstruction);
    EXPECT_EQ(a.trace.epochs[e].discriminator, b.trace.epochs[e].discriminator);
    EXPECT_EQ(a.trace.epochs[e].generator, b.trace.epochs[e].generator);
  }
  EXPECT_TRUE(same_params(a.model.encoder, b.model.encoder));
  EXPECT_TRUE(same_params(a.model.discriminator, b.model.discriminator));
  EXPECT_FALSE(a.trace.early_stop_epoch);
  const Matrix z = encode(a.model, f.data);
  EXPECT_EQ(z.cols(), 2);
  EXPECT_TRUE(z.allFinite());
}

TEST(Train, EarlyStoppingAfterPatience) {
  Fixture f;
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 50;
  cfg.patience = 2;
  cfg.min_delta = 1e9;  // no epoch can improve by this much
  const auto r = train(f.data, cfg);
  ASSERT_TRUE(r.trace.early_stop_epoch);
  EXPECT_EQ(*r.trace.early_stop_epoch, 3u);
  EXPECT_EQ(r.trace.epochs.size(), 3u);
}

TEST(Train, NonFiniteLossNamesEpochAndStep) {
  Fixture f;
  auto data = f.data;
  data.rows(5, data.rows.cols() - 1) = std::nan("");
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 1;
  try {
    train(data, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
  EncodedMatrix empty;
  EXPECT_THROW(train(empty, cfg), ArgumentError);
}

TEST(Train, MemorisesSmallSetCategoricals) {
  Fixture f;
  EncodedMatrix small{f.data.rows.topRows(10), f.data.spec};
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 400;
  cfg.batch_size = 10;
  cfg.patience = 1000;
  const auto model = train(small, cfg).model;
  const Matrix x_hat = decode(model, encode(model, small));
  EXPECT_GT(x_hat.minCoeff(), 0.0);
  EXPECT_LT(x_hat.maxCoeff(), 1.0);
  const auto sizes = small.spec.block_sizes();
  for (Eigen::Index i = 0; i < 10; ++i) {
    Eigen::Index at = 0;
    for (auto s : sizes) {
      Eigen::Index want = 0, got = 0;
      small.rows.row(i).segment(at, static_cast<Eigen::Index>(s)).maxCoeff(&want);
      x_hat.row(i).segment(at, static_cast<Eigen::Index>(s)).maxCoeff(&got);
      EXPECT_EQ(got, want) << "row " << i;
      at += static_cast<Eigen::Index>(s);
    }
  }
}

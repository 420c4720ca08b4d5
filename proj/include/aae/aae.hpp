#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "aae/encoding.hpp"
#include "aae/error.hpp"
#include "aae/matrix.hpp"
#include "aae/neural.hpp"
#include "aae/random.hpp"

namespace aae {

// ---------------------------------------------------------------------------
// Prior

// Mixture of tau isotropic unit-variance Gaussians.
struct PriorSpec {
  Matrix centers;  // tau x latent_dim

  std::size_t tau() const { return static_cast<std::size_t>(centers.rows()); }
  std::size_t latent_dim() const { return static_cast<std::size_t>(centers.cols()); }

  void validate() const {
    if (centers.rows() < 1) throw ArgumentError("prior needs at least one mode");
    for (Eigen::Index a = 0; a < centers.rows(); ++a)
      for (Eigen::Index b = a + 1; b < centers.rows(); ++b)
        if (centers.row(a) == centers.row(b)) throw ArgumentError("prior mode centers must be distinct");
  }
};

inline constexpr double kDefaultRingRadius = 8.0;

// tau centers evenly spaced on a circle around the origin; a single mode sits
// at the origin.
inline Matrix default_mode_centers(std::size_t tau, double radius = kDefaultRingRadius) {
  if (tau < 1) throw ArgumentError("tau must be at least 1");
  if (!(radius > 0.0)) throw ArgumentError("radius must be positive");
  Matrix centers = Matrix::Zero(static_cast<Eigen::Index>(tau), 2);
  if (tau == 1) return centers;
  for (std::size_t i = 0; i < tau; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(tau);
    centers(static_cast<Eigen::Index>(i), 0) = radius * std::cos(angle);
    centers(static_cast<Eigen::Index>(i), 1) = radius * std::sin(angle);
  }
  return centers;
}

struct PriorSample {
  Matrix z;                        // count x latent_dim
  std::vector<std::size_t> mode;   // zero-based component per row
};

inline PriorSample sample_prior_with_modes(const PriorSpec& prior, std::size_t count, Rng& rng) {
  PriorSample s;
  s.z.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(prior.latent_dim()));
  s.mode.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t m = rng.index(prior.tau());
    s.mode[i] = m;
    for (Eigen::Index d = 0; d < s.z.cols(); ++d)
      s.z(static_cast<Eigen::Index>(i), d) = prior.centers(static_cast<Eigen::Index>(m), d) + rng.normal();
  }
  return s;
}

inline Matrix sample_prior(const PriorSpec& prior, std::size_t count, Rng& rng) {
  return sample_prior_with_modes(prior, count, rng).z;
}

inline Matrix sample_prior(const PriorSpec& prior, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(prior, count, rng);
}

// ---------------------------------------------------------------------------
// Architecture

enum class ArchProfile { A, B };

inline ArchProfile parse_arch(std::string_view s) {
  if (s == "A" || s == "a") return ArchProfile::A;
  if (s == "B" || s == "b") return ArchProfile::B;
  throw ArgumentError("unknown architecture profile '" + std::string(s) + "'");
}

inline std::string_view to_string(ArchProfile p) { return p == ArchProfile::A ? "A" : "B"; }

// Layer widths after the input. The decoder's final width is the encoded
// dimension k and is appended at build time.
struct ArchWidths {
  std::vector<std::size_t> encoder;
  std::vector<std::size_t> decoder_hidden;
  std::vector<std::size_t> discriminator;
};

inline ArchWidths arch_widths(ArchProfile profile) {
  if (profile == ArchProfile::A)
    return {{256, 128, 64, 32, 16, 8, 4, 2}, {4, 8, 16, 32, 64, 128, 256}, {128, 64, 32, 16, 1}};
  return {{256, 64, 16, 4, 2}, {4, 16, 64, 256}, {256, 64, 16, 4, 1}};
}

// ---------------------------------------------------------------------------
// Model

struct AaeModel {
  Mlp encoder;        // k -> ... -> m, linear bottleneck
  Mlp decoder;        // m -> ... -> k, sigmoid output
  Mlp discriminator;  // m -> ... -> 1, sigmoid output
  PriorSpec prior;
  EncodingSpec encoding;
  double gamma = 2.0 / 3.0;
  double lrelu_slope = 0.4;
  std::uint64_t seed = 0;

  std::size_t latent_dim() const { return encoder.output_width(); }

  void validate() const {
    encoder.validate();
    decoder.validate();
    discriminator.validate();
    prior.validate();
    const std::size_t m = encoder.output_width();
    if (decoder.input_width() != m || discriminator.input_width() != m || prior.latent_dim() != m)
      throw ShapeError("encoder, decoder, discriminator and prior disagree on the latent width");
    if (decoder.output_width() != encoder.input_width())
      throw ShapeError("decoder output width differs from encoder input width");
    if (encoder.input_width() != encoding.total_dims())
      throw ShapeError("network input width differs from the encoding's total dimensions");
    if (discriminator.output_width() != 1) throw ShapeError("discriminator must emit one probability");
  }
};

enum class GeneratorObjective { non_saturating, minimax };

struct TrainConfig {
  std::size_t epochs_max = 10000;
  std::size_t batch_size = 128;
  double lr_encdec = 1e-3;
  double lr_disc = 1e-5;
  double gamma = 2.0 / 3.0;
  double lrelu_slope = 0.4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t tau = 5;
  double ring_radius = kDefaultRingRadius;
  ArchProfile arch = ArchProfile::A;
  std::uint64_t seed = 0;
  std::size_t patience = 100;
  double min_delta = 1e-5;
  GeneratorObjective generator = GeneratorObjective::non_saturating;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ArgumentError("gamma must lie in [0, 1]");
    if (!(lr_encdec > 0.0) || !(lr_disc > 0.0)) throw ArgumentError("learning rates must be positive");
    if (batch_size == 0) throw ArgumentError("batch size must be positive");
    if (!(lrelu_slope > 0.0 && lrelu_slope < 1.0)) throw ArgumentError("lrelu slope must lie in (0, 1)");
    if (tau == 0) throw ArgumentError("tau must be at least 1");
  }
};

// Builds a freshly initialised model. Encoder, decoder and discriminator draw
// their weights from `rng` in that order.
inline AaeModel build_model(const EncodingSpec& encoding, const TrainConfig& config, Rng& rng) {
  config.validate();
  const std::size_t k = encoding.total_dims();
  if (k == 0) throw ShapeError("encoding has no dimensions");
  const auto widths = arch_widths(config.arch);
  AaeModel model;
  model.encoding = encoding;
  model.gamma = config.gamma;
  model.lrelu_slope = config.lrelu_slope;
  model.seed = config.seed;
  model.prior.centers = default_mode_centers(config.tau, config.ring_radius);

  model.encoder = make_mlp(k, widths.encoder, Activation::lrelu, Activation::linear, config.lrelu_slope, rng);
  auto decoder_widths = widths.decoder_hidden;
  decoder_widths.push_back(k);
  const std::size_t m = widths.encoder.back();
  model.decoder = make_mlp(m, decoder_widths, Activation::lrelu, Activation::sigmoid, config.lrelu_slope, rng);
  model.discriminator =
      make_mlp(m, widths.discriminator, Activation::lrelu, Activation::sigmoid, config.lrelu_slope, rng);
  model.validate();
  return model;
}

// Reconstruction updates encoder and decoder at lr_encdec. The regularization
// phase updates the discriminator and, through a separate state, the encoder
// as generator, both at lr_disc.
struct Optimizers {
  AdamState encoder;
  AdamState decoder;
  AdamState discriminator;
  AdamState generator;

  static Optimizers for_model(const AaeModel& model, const TrainConfig& config) {
    const AdamConfig encdec{config.lr_encdec, config.beta1, config.beta2, kAdamEpsilon};
    const AdamConfig reg{config.lr_disc, config.beta1, config.beta2, kAdamEpsilon};
    return {AdamState::for_network(model.encoder, encdec), AdamState::for_network(model.decoder, encdec),
            AdamState::for_network(model.discriminator, reg), AdamState::for_network(model.encoder, reg)};
  }
};

// ---------------------------------------------------------------------------
// Training phases

inline void check_input_width(const AaeModel& model, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != model.encoder.input_width())
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " differs from model input width " +
                     std::to_string(model.encoder.input_width()));
}

// One Adam update of encoder and decoder against
// gamma * CE(categorical blocks) + (1 - gamma) * MSE(amount columns).
inline double reconstruction_step(AaeModel& model, const Matrix& batch, Optimizers& opt, double gamma) {
  check_input_width(model, batch);
  const auto enc = forward(model.encoder, batch);
  const auto dec = forward(model.decoder, enc.output);
  const auto loss = combined_reconstruction_loss(batch, dec.output, model.encoding.categorical_dims(), gamma);
  const auto g_dec = backward(model.decoder, dec, loss.grad);
  const auto g_enc = backward(model.encoder, enc, g_dec.input);
  adam_step(opt.decoder, model.decoder, g_dec);
  adam_step(opt.encoder, model.encoder, g_enc);
  return loss.value;
}

struct RegularizationLosses {
  double discriminator = 0.0;
  double generator = 0.0;
};

// (a) Discriminator update: prior samples labelled 1, encoder codes labelled
// 0, equal counts, mean BCE over both halves. (b) Encoder update against the
// updated discriminator. The discriminator is not changed in (b).
inline RegularizationLosses regularization_step(AaeModel& model, const Matrix& batch, Optimizers& opt, Rng& rng,
                                                GeneratorObjective objective = GeneratorObjective::non_saturating) {
  check_input_width(model, batch);
  const Eigen::Index b = batch.rows();
  RegularizationLosses out;

  const auto enc = forward(model.encoder, batch);
  const Matrix real = sample_prior(model.prior, static_cast<std::size_t>(b), rng);
  Matrix both(2 * b, enc.output.cols());
  both.topRows(b) = real;
  both.bottomRows(b) = enc.output;
  const auto disc = forward(model.discriminator, both);
  const auto real_loss = binary_cross_entropy(disc.output.topRows(b), 1.0);
  const auto fake_loss = binary_cross_entropy(disc.output.bottomRows(b), 0.0);
  out.discriminator = 0.5 * (real_loss.value + fake_loss.value);
  Matrix disc_grad(2 * b, 1);
  disc_grad.topRows(b) = real_loss.grad;
  disc_grad.bottomRows(b) = fake_loss.grad;
  adam_step(opt.discriminator, model.discriminator, backward(model.discriminator, disc, disc_grad));

  const auto judged = forward(model.discriminator, enc.output);
  Matrix gen_grad;
  if (objective == GeneratorObjective::non_saturating) {
    const auto l = binary_cross_entropy(judged.output, 1.0);
    out.generator = l.value;
    gen_grad = l.grad;
  } else {
    // Minimise log(1 - d(z)) directly.
    const auto p = judged.output.array().max(kProbabilityClip).min(1.0 - kProbabilityClip);
    out.generator = (1.0 - p).log().sum() / static_cast<double>(b);
    gen_grad = (-1.0 / (1.0 - p)).matrix();
  }
  const auto g_disc = backward(model.discriminator, judged, gen_grad);
  adam_step(opt.generator, model.encoder, backward(model.encoder, enc, g_disc.input));
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  double reconstruction = 0.0;
  double discriminator = 0.0;
  double generator = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> early_stop_epoch;  // 1-based epoch at which training stopped early
};

struct TrainResult {
  AaeModel model;
  TrainTrace trace;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochRecord&)>;

inline TrainResult train(const EncodedMatrix& data, const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  if (data.size() == 0) throw ArgumentError("cannot train on an empty matrix");
  Rng rng(config.seed);
  TrainResult result{build_model(data.spec, config, rng), {}};
  auto& model = result.model;
  check_input_width(model, data.rows);
  auto opt = Optimizers::for_model(model, config);

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  double best = INFINITY;
  std::size_t stale = 0;
  Matrix batch;
  for (std::size_t epoch = 1; epoch <= config.epochs_max; ++epoch) {
    rng.shuffle(order);
    EpochRecord rec;
    std::size_t step = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
      const std::size_t len = std::min(config.batch_size, n - start);
      batch.resize(static_cast<Eigen::Index>(len), data.rows.cols());
      for (std::size_t r = 0; r < len; ++r)
        batch.row(static_cast<Eigen::Index>(r)) = data.rows.row(static_cast<Eigen::Index>(order[start + r]));
      const double recon = reconstruction_step(model, batch, opt, config.gamma);
      const auto reg = regularization_step(model, batch, opt, rng, config.generator);
      if (!std::isfinite(recon) || !std::isfinite(reg.discriminator) || !std::isfinite(reg.generator))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      const double w = static_cast<double>(len) / static_cast<double>(n);
      rec.reconstruction += w * recon;
      rec.discriminator += w * reg.discriminator;
      rec.generator += w * reg.generator;
    }
    result.trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, rec);

    if (best - rec.reconstruction >= config.min_delta) {
      best = rec.reconstruction;
      stale = 0;
    } else if (++stale >= config.patience) {
      result.trace.early_stop_epoch = epoch;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Inference

inline constexpr Eigen::Index kInferenceChunk = 4096;

inline Matrix encode(const AaeModel& model, const Matrix& rows) {
  check_input_width(model, rows);
  Matrix z(rows.rows(), static_cast<Eigen::Index>(model.latent_dim()));
  for (Eigen::Index s = 0; s < rows.rows(); s += kInferenceChunk) {
    const Eigen::Index len = std::min(kInferenceChunk, rows.rows() - s);
    z.middleRows(s, len) = predict(model.encoder, rows.middleRows(s, len));
  }
  return z;
}

inline Matrix encode(const AaeModel& model, const EncodedMatrix& data) { return encode(model, data.rows); }

inline Matrix decode(const AaeModel& model, const Matrix& z) {
  if (static_cast<std::size_t>(z.cols()) != model.decoder.input_width())
    throw ShapeError("latent width " + std::to_string(z.cols()) + " differs from decoder input width " +
                     std::to_string(model.decoder.input_width()));
  Matrix x(z.rows(), static_cast<Eigen::Index>(model.decoder.output_width()));
  for (Eigen::Index s = 0; s < z.rows(); s += kInferenceChunk) {
    const Eigen::Index len = std::min(kInferenceChunk, z.rows() - s);
    x.middleRows(s, len) = predict(model.decoder, z.middleRows(s, len));
  }
  return x;
}

}  // namespace aae

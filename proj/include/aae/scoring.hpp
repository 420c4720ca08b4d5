#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "aae/aae.hpp"
#include "aae/encoding.hpp"
#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/matrix.hpp"

namespace aae {

inline constexpr double kDefaultAlpha = 0.8;

struct ModeDivergence {
  std::vector<double> divergence;     // squared distance to the closest center
  std::vector<std::size_t> closest;   // 1-based mode index
};

// D_i = min over modes of ||z_i - mu||^2. Ties go to the lowest mode index.
// Squared and plain Euclidean distance share the argmin and the ordering.
inline ModeDivergence mode_divergence(const Matrix& z, const Matrix& centers) {
  if (centers.rows() == 0) throw ArgumentError("mode divergence needs at least one center");
  if (z.cols() != centers.cols())
    throw ShapeError("latent width " + std::to_string(z.cols()) + " differs from center width " +
                     std::to_string(centers.cols()));
  ModeDivergence out;
  out.divergence.resize(static_cast<std::size_t>(z.rows()));
  out.closest.resize(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index t = 0; t < centers.rows(); ++t) {
      const double d = (z.row(i) - centers.row(t)).squaredNorm();
      if (d < best) {
        best = d;
        arg = t;
      }
    }
    out.divergence[static_cast<std::size_t>(i)] = best;
    out.closest[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arg) + 1;
  }
  return out;
}

// E_i = (1/k) sum_j (x_ij - x_hat_ij)^2 over all k columns.
inline std::vector<double> reconstruction_error(const Matrix& x, const Matrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw ShapeError("reconstruction shape differs from input shape");
  std::vector<double> e(static_cast<std::size_t>(x.rows()), 0.0);
  if (x.cols() == 0) return e;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    e[static_cast<std::size_t>(i)] = (x.row(i) - x_hat.row(i)).squaredNorm() / static_cast<double>(x.cols());
  return e;
}

// Min-max scaling within each group of equal `group` ids. A group whose
// values are all equal maps to 0.
inline std::vector<double> normalize_per_mode(std::span<const double> values, std::span<const std::size_t> group) {
  if (values.size() != group.size()) throw ShapeError("values and mode assignments differ in length");
  std::size_t n_groups = 0;
  for (std::size_t g : group) n_groups = std::max(n_groups, g + 1);
  std::vector<double> lo(n_groups, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n_groups, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < values.size(); ++i) {
    lo[group[i]] = std::min(lo[group[i]], values[i]);
    hi[group[i]] = std::max(hi[group[i]], values[i]);
  }
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double range = hi[group[i]] - lo[group[i]];
    if (range > 0.0) out[i] = std::clamp((values[i] - lo[group[i]]) / range, 0.0, 1.0);
  }
  return out;
}

inline std::vector<double> normalize_global(std::span<const double> values) {
  const std::vector<std::size_t> one(values.size(), 0);
  return normalize_per_mode(values, one);
}

// AS_i = alpha * RE_i + (1 - alpha) * MD_i.
inline std::vector<double> anomaly_score(std::span<const double> re, std::span<const double> md, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  if (re.size() != md.size()) throw ShapeError("RE and MD differ in length");
  std::vector<double> as(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) as[i] = alpha * re[i] + (1.0 - alpha) * md[i];
  return as;
}

inline double blend(double re, double md, double alpha) { return alpha * re + (1.0 - alpha) * md; }

enum class Normalization { per_mode, global };

struct ScoreRow {
  std::int64_t id = 0;
  std::size_t mode = 1;     // 1-based closest mode
  double divergence = 0.0;  // D
  double md = 0.0;
  double error = 0.0;       // E
  double re = 0.0;
  double as = 0.0;
  std::optional<EntryLabel> label;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;
  Matrix latent;  // N x m codes the scores were computed from
  double alpha = kDefaultAlpha;
  std::size_t tau = 0;

  std::size_t size() const { return rows.size(); }
  bool has_labels() const { return !rows.empty() && rows.front().label.has_value(); }
};

inline void check_compatible(const AaeModel& model, const EncodedMatrix& x) {
  if (x.spec.digest() != model.encoding.digest())
    throw CompatibilityError("data encoding " + digest_hex(x.spec.digest()) + " differs from model encoding " +
                             digest_hex(model.encoding.digest()));
}

// encode -> decode -> (E, D) -> per-mode (RE, MD) -> AS. `ids` and `labels`
// may be empty; ids then default to row indices.
inline ScoreTable score_table(const AaeModel& model, const EncodedMatrix& x, double alpha,
                              std::span<const std::int64_t> ids = {}, std::span<const EntryLabel> labels = {},
                              Normalization normalization = Normalization::per_mode) {
  check_compatible(model, x);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  const std::size_t n = x.size();
  if (!ids.empty() && ids.size() != n) throw ShapeError("id count differs from row count");
  if (!labels.empty() && labels.size() != n) throw ShapeError("label count differs from row count");

  ScoreTable table;
  table.alpha = alpha;
  table.tau = model.prior.tau();
  table.latent = encode(model, x.rows);
  const Matrix x_hat = decode(model, table.latent);
  const auto err = reconstruction_error(x.rows, x_hat);
  const auto div = mode_divergence(table.latent, model.prior.centers);

  std::vector<std::size_t> group(n, 0);
  if (normalization == Normalization::per_mode)
    for (std::size_t i = 0; i < n; ++i) group[i] = div.closest[i] - 1;
  const auto re = normalize_per_mode(err, group);
  const auto md = normalize_per_mode(div.divergence, group);
  const auto as = anomaly_score(re, md, alpha);

  table.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = table.rows[i];
    r.id = ids.empty() ? static_cast<std::int64_t>(i) : ids[i];
    r.mode = div.closest[i];
    r.divergence = div.divergence[i];
    r.md = md[i];
    r.error = err[i];
    r.re = re[i];
    r.as = as[i];
    if (!labels.empty()) r.label = labels[i];
  }
  return table;
}

// Carries ids, and labels when the table has them.
inline ScoreTable score_table(const AaeModel& model, const EntryTable& entries, const EncodedMatrix& x, double alpha,
                              Normalization normalization = Normalization::per_mode) {
  std::vector<std::int64_t> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries.entries) ids.push_back(e.id);
  std::span<const EntryLabel> labels;
  if (entries.has_labels) labels = entries.labels;
  return score_table(model, x, alpha, ids, labels, normalization);
}

// Re-blends AS for another alpha from the stored RE/MD.
inline ScoreTable reblend(ScoreTable table, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  table.alpha = alpha;
  for (auto& r : table.rows) r.as = blend(r.re, r.md, alpha);
  return table;
}

}  // namespace aae

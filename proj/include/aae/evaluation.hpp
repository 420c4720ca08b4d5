#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <ostream>
#include <string>
#include <vector>

#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/scoring.hpp"

namespace aae {

struct ClassScore {
  EntryLabel label = EntryLabel::regular;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t count = 0;
};

// One row per class present, ordered global, local, regular.
struct ClassScoreSummary {
  std::vector<ClassScore> classes;

  std::optional<ClassScore> find(EntryLabel label) const {
    for (const auto& c : classes)
      if (c.label == label) return c;
    return std::nullopt;
  }
};

inline constexpr EntryLabel kClassOrder[] = {EntryLabel::global, EntryLabel::local, EntryLabel::regular};

inline ClassScoreSummary per_class_mean_scores(const ScoreTable& scores) {
  for (const auto& r : scores.rows)
    if (!r.label) throw EvaluationError("per-class summary needs labelled scores");
  ClassScoreSummary summary;
  for (EntryLabel label : kClassOrder) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : scores.rows)
      if (*r.label == label) {
        sum += r.as;
        ++n;
      }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : scores.rows)
      if (*r.label == label) ss += (r.as - mean) * (r.as - mean);
    summary.classes.push_back({label, mean, std::sqrt(ss / static_cast<double>(n)), n});
  }
  return summary;
}

// Per class: mean of the per-seed means and their standard deviation across
// seeds (population form).
inline ClassScoreSummary aggregate_over_seeds(const std::vector<ClassScoreSummary>& runs) {
  ClassScoreSummary out;
  for (EntryLabel label : kClassOrder) {
    std::vector<double> means;
    std::size_t count = 0;
    for (const auto& run : runs)
      if (auto c = run.find(label)) {
        means.push_back(c->mean);
        count = c->count;
      }
    if (means.empty()) continue;
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    out.classes.push_back({label, mean, std::sqrt(ss / static_cast<double>(means.size())), count});
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const ClassScoreSummary& summary, const std::string& run = "all") {
  for (const auto& c : summary.classes)
    out << run << ',' << to_string(c.label) << ',' << csv::format_number(c.mean) << ','
        << csv::format_number(c.sd) << ',' << c.count << '\n';
}

// Row indices sorted by descending AS, ties by ascending id. mode == 0 keeps
// every mode.
inline std::vector<std::size_t> rank_entries(const ScoreTable& scores, std::size_t top_n, std::size_t mode = 0) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.rows.size(); ++i)
    if (mode == 0 || scores.rows[i].mode == mode) idx.push_back(i);
  const auto by_score = [&](std::size_t a, std::size_t b) {
    const auto& ra = scores.rows[a];
    const auto& rb = scores.rows[b];
    if (ra.as != rb.as) return ra.as > rb.as;
    return ra.id < rb.id;
  };
  const std::size_t keep = std::min(top_n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), by_score);
  idx.resize(keep);
  return idx;
}

inline bool is_anomaly(EntryLabel label) { return label != EntryLabel::regular; }

// ROC-AUC by the rank-sum statistic with average ranks for ties, so tied
// pairs count one half.
inline double roc_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool p : positive) n_pos += p ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw EvaluationError("AUC needs both anomalous and regular entries");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps average ranks integral.
  std::uint64_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t avg_rank_x2 = (i + 1) + j;  // ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t)
      if (positive[order[t]]) rank_sum_x2 += avg_rank_x2;
    i = j;
  }
  const double u = static_cast<double>(rank_sum_x2) / 2.0 -
                   static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct RankingMetrics {
  double auc = 0.0;
  std::vector<std::pair<std::size_t, double>> precision_at;  // (k, precision)

  double precision(std::size_t k) const {
    for (const auto& [kk, p] : precision_at)
      if (kk == k) return p;
    throw ArgumentError("precision@" + std::to_string(k) + " was not computed");
  }
};

inline double precision_at_k(const ScoreTable& scores, std::size_t k) {
  if (k == 0) return 0.0;
  const auto top = rank_entries(scores, k);
  std::size_t hits = 0;
  for (std::size_t i : top) hits += is_anomaly(*scores.rows[i].label) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

// Anomalous = global or local; precision@k over the AS ranking.
inline RankingMetrics auc_and_precision_at_k(const ScoreTable& scores,
                                             const std::vector<std::size_t>& ks = {25, 50, 100}) {
  std::vector<double> as;
  std::vector<bool> positive;
  for (const auto& r : scores.rows) {
    if (!r.label) throw EvaluationError("ranking metrics need labelled scores");
    as.push_back(r.as);
    positive.push_back(is_anomaly(*r.label));
  }
  // std::vector<bool> is not contiguous; copy into a plain buffer.
  std::unique_ptr<bool[]> flags(new bool[positive.size()]);
  for (std::size_t i = 0; i < positive.size(); ++i) flags[i] = positive[i];
  RankingMetrics m;
  m.auc = roc_auc(as, std::span<const bool>(flags.get(), positive.size()));
  for (std::size_t k : ks) m.precision_at.emplace_back(k, precision_at_k(scores, k));
  return m;
}

}  // namespace aae

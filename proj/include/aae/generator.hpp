#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/random.hpp"

namespace aae {

// Six categorical and two numerical attributes, named after the SAP fields
// auditors usually inspect.
inline AttributeSchema journal_schema() {
  using K = AttributeKind;
  return AttributeSchema{{{"BUKRS", K::categorical},
                          {"KTOSL", K::categorical},
                          {"PRCTR", K::categorical},
                          {"BSCHL", K::categorical},
                          {"HKONT", K::categorical},
                          {"WAERS", K::categorical},
                          {"DMBTR", K::numerical},
                          {"WRBTR", K::numerical}}};
}

// Attributes whose value sets never overlap between two business processes.
inline std::vector<std::string> discriminating_attributes() { return {"KTOSL", "BSCHL", "HKONT"}; }

// A fixed categorical posting pattern of a process: one value per categorical
// attribute of journal_schema(), in schema order.
struct PostingVariant {
  std::vector<std::string> values;
  double weight = 1.0;
};

struct ProcessTemplate {
  std::string name;
  std::vector<PostingVariant> variants;
  double log_amount_mean = 0.0;
  double log_amount_sd = 1.0;
};

inline std::vector<ProcessTemplate> process_templates() {
  //                 BUKRS   KTOSL  PRCTR   BSCHL  HKONT     WAERS
  return {
      {"payment_run",
       {{{"C100", "ZAH", "PC01", "25", "113100", "EUR"}, 0.35},
        {{"C100", "ZAH", "PC01", "50", "160000", "EUR"}, 0.25},
        {{"C200", "ZAB", "PC02", "25", "113105", "USD"}, 0.20},
        {{"C200", "ZAH", "PC03", "15", "113100", "EUR"}, 0.12},
        {{"C300", "ZAB", "PC03", "50", "160000", "EUR"}, 0.08}},
       std::log(4000.0), 1.0},
      {"customer_invoice",
       {{{"C100", "ERL", "PC04", "01", "800000", "EUR"}, 0.35},
        {{"C200", "ERL", "PC05", "01", "800100", "USD"}, 0.25},
        {{"C200", "MWS", "PC04", "11", "175000", "EUR"}, 0.20},
        {{"C300", "ERL", "PC06", "01", "140000", "GBP"}, 0.12},
        {{"C100", "MWS", "PC05", "11", "140000", "EUR"}, 0.08}},
       std::log(1500.0), 0.9},
      {"material_movement",
       {{{"C100", "BSX", "PC07", "89", "300000", "EUR"}, 0.40},
        {{"C100", "GBB", "PC07", "99", "891000", "EUR"}, 0.25},
        {{"C200", "PRD", "PC08", "89", "400000", "EUR"}, 0.20},
        {{"C200", "WRX", "PC08", "81", "191100", "EUR"}, 0.15}},
       std::log(600.0), 1.2},
      {"vendor_invoice",
       {{{"C200", "KBS", "PC09", "31", "160100", "EUR"}, 0.40},
        {{"C300", "KBS", "PC10", "31", "154000", "USD"}, 0.25},
        {{"C200", "VST", "PC02", "40", "476000", "CHF"}, 0.20},
        {{"C300", "KBS", "PC09", "21", "417000", "EUR"}, 0.15}},
       std::log(2500.0), 1.1},
      {"asset_depreciation",
       {{{"C100", "AFA", "PC11", "70", "211000", "EUR"}, 0.50},
        {{"C300", "ANL", "PC12", "75", "230000", "EUR"}, 0.30},
        {{"C100", "AFA", "PC12", "70", "081000", "EUR"}, 0.20}},
       std::log(9000.0), 0.7},
  };
}

inline double exchange_rate(const std::string& currency) {
  if (currency == "USD") return 1.08;
  if (currency == "GBP") return 0.86;
  if (currency == "CHF") return 0.97;
  return 1.0;
}

struct GeneratorConfig {
  std::int64_t n_entries = 20000;
  std::uint64_t seed = 0;
  // Weights over the first process_mix.size() templates; must sum to one.
  std::vector<double> process_mix = {0.35, 0.25, 0.20, 0.12, 0.08};
};

struct SyntheticLedger {
  EntryTable table;
  std::vector<std::size_t> process;  // template index per entry
};

inline SyntheticLedger generate_synthetic_ledger_traced(const GeneratorConfig& config) {
  if (config.n_entries < 0) throw ArgumentError("n_entries must be non-negative");
  const auto templates = process_templates();
  if (config.process_mix.empty() || config.process_mix.size() > templates.size())
    throw ArgumentError("process mix must name between 1 and " + std::to_string(templates.size()) + " processes");
  double total = 0.0;
  for (double w : config.process_mix) {
    if (!(w >= 0.0)) throw ArgumentError("process mix weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("process mix weights must sum to 1");

  SyntheticLedger out;
  out.table.schema = journal_schema();
  out.table.has_labels = true;
  Rng rng(config.seed);
  const auto n = static_cast<std::size_t>(config.n_entries);
  out.table.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = rng.categorical(config.process_mix);
    const auto& tpl = templates[p];
    JournalEntry e;
    e.id = static_cast<std::int64_t>(i);
    std::vector<double> weights;
    for (const auto& v : tpl.variants) weights.push_back(v.weight);
    e.categorical = tpl.variants[rng.categorical(weights)].values;
    const double local = std::round(std::exp(rng.normal(tpl.log_amount_mean, tpl.log_amount_sd)) * 100.0) / 100.0;
    const double foreign = std::round(local * exchange_rate(e.categorical.back()) * 100.0) / 100.0;
    e.numerical = {local, foreign};
    out.table.entries.push_back(std::move(e));
    out.process.push_back(p);
  }
  out.table.labels.assign(n, EntryLabel::regular);
  return out;
}

inline EntryTable generate_synthetic_ledger(const GeneratorConfig& config) {
  return generate_synthetic_ledger_traced(config).table;
}

}  // namespace aae

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/matrix.hpp"

namespace aae {

struct CategoricalVocabulary {
  std::string attribute;
  std::vector<std::string> values;  // lexicographic

  // Block position of value, or -1 when unseen at fit time.
  std::ptrdiff_t position(const std::string& value) const {
    auto it = std::lower_bound(values.begin(), values.end(), value);
    if (it == values.end() || *it != value) return -1;
    return it - values.begin();
  }

  friend bool operator==(const CategoricalVocabulary&, const CategoricalVocabulary&) = default;
};

struct NumericalRange {
  std::string attribute;
  double min_log = 0.0;
  double max_log = 0.0;

  friend bool operator==(const NumericalRange&, const NumericalRange&) = default;
};

// Fitted one-hot vocabularies and log-amount ranges. Encoded columns hold the
// categorical blocks in schema order followed by one column per amount.
struct EncodingSpec {
  std::vector<CategoricalVocabulary> categorical;
  std::vector<NumericalRange> numerical;

  std::size_t categorical_dims() const {
    std::size_t n = 0;
    for (const auto& v : categorical) n += v.values.size();
    return n;
  }
  std::size_t numerical_dims() const { return numerical.size(); }
  std::size_t total_dims() const { return categorical_dims() + numerical_dims(); }

  std::vector<std::size_t> block_sizes() const {
    std::vector<std::size_t> sizes;
    for (const auto& v : categorical) sizes.push_back(v.values.size());
    return sizes;
  }

  std::vector<std::size_t> block_offsets() const {
    std::vector<std::size_t> offsets;
    std::size_t at = 0;
    for (const auto& v : categorical) {
      offsets.push_back(at);
      at += v.values.size();
    }
    return offsets;
  }

  // FNV-1a over a canonical rendering; doubles are rendered as hex floats so
  // the digest is exact.
  std::uint64_t digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
      h ^= 0xff;
      h *= 0x100000001b3ull;
    };
    char buf[64];
    for (const auto& v : categorical) {
      feed("C");
      feed(v.attribute);
      feed(std::to_string(v.values.size()));
      for (const auto& value : v.values) feed(value);
    }
    for (const auto& r : numerical) {
      feed("N");
      feed(r.attribute);
      std::snprintf(buf, sizeof(buf), "%a", r.min_log);
      feed(buf);
      std::snprintf(buf, sizeof(buf), "%a", r.max_log);
      feed(buf);
    }
    return h;
  }

  friend bool operator==(const EncodingSpec&, const EncodingSpec&) = default;
};

inline std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

inline nlohmann::json to_json(const EncodingSpec& spec) {
  nlohmann::json j;
  j["categorical"] = nlohmann::json::array();
  for (const auto& v : spec.categorical) j["categorical"].push_back({{"attribute", v.attribute}, {"values", v.values}});
  j["numerical"] = nlohmann::json::array();
  for (const auto& r : spec.numerical)
    j["numerical"].push_back({{"attribute", r.attribute}, {"min_log", r.min_log}, {"max_log", r.max_log}});
  j["total_dims"] = spec.total_dims();
  j["digest"] = digest_hex(spec.digest());
  return j;
}

inline EncodingSpec encoding_spec_from_json(const nlohmann::json& j) {
  EncodingSpec spec;
  for (const auto& v : j.at("categorical"))
    spec.categorical.push_back({v.at("attribute").get<std::string>(), v.at("values").get<std::vector<std::string>>()});
  for (const auto& r : j.at("numerical"))
    spec.numerical.push_back(
        {r.at("attribute").get<std::string>(), r.at("min_log").get<double>(), r.at("max_log").get<double>()});
  return spec;
}

struct EncodedMatrix {
  Matrix rows;  // N x k, values in [0, 1]
  EncodingSpec spec;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
};

inline EncodingSpec fit_encoding_spec(const EntryTable& table) {
  if (table.empty()) throw FitError("cannot fit an encoding on an empty table");
  const auto cat_names = table.schema.categorical_names();
  const auto num_names = table.schema.numerical_names();

  std::vector<std::set<std::string>> seen(cat_names.size());
  std::vector<double> lo(num_names.size(), INFINITY);
  std::vector<double> hi(num_names.size(), -INFINITY);
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    const auto& e = table.entries[i];
    for (std::size_t c = 0; c < cat_names.size(); ++c) seen[c].insert(e.categorical[c]);
    for (std::size_t j = 0; j < num_names.size(); ++j) {
      const double a = e.numerical[j];
      if (!(a >= 0.0)) throw ValueError(i, "negative amount in '" + num_names[j] + "'");
      const double v = std::log1p(a);
      lo[j] = std::min(lo[j], v);
      hi[j] = std::max(hi[j], v);
    }
  }

  EncodingSpec spec;
  for (std::size_t c = 0; c < cat_names.size(); ++c)
    spec.categorical.push_back({cat_names[c], std::vector<std::string>(seen[c].begin(), seen[c].end())});
  for (std::size_t j = 0; j < num_names.size(); ++j) spec.numerical.push_back({num_names[j], lo[j], hi[j]});
  return spec;
}

inline double normalize_amount(double amount, const NumericalRange& range) {
  if (range.max_log == range.min_log) return 0.0;
  const double v = (std::log1p(amount) - range.min_log) / (range.max_log - range.min_log);
  return std::clamp(v, 0.0, 1.0);
}

inline EncodedMatrix encode_entries(const EntryTable& table, const EncodingSpec& spec) {
  if (table.schema.categorical_count() != spec.categorical.size() ||
      table.schema.numerical_count() != spec.numerical.size())
    throw SchemaError("table schema does not match the encoding spec");

  EncodedMatrix out;
  out.spec = spec;
  out.rows = Matrix::Zero(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(spec.total_dims()));
  const auto offsets = spec.block_offsets();
  const auto num_offset = static_cast<Eigen::Index>(spec.categorical_dims());

  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    const auto& e = table.entries[i];
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t c = 0; c < spec.categorical.size(); ++c) {
      const auto pos = spec.categorical[c].position(e.categorical[c]);
      if (pos < 0)
        throw EncodeError("value '" + e.categorical[c] + "' of attribute '" + spec.categorical[c].attribute +
                          "' is not in the vocabulary");
      out.rows(row, static_cast<Eigen::Index>(offsets[c]) + pos) = 1.0;
    }
    for (std::size_t j = 0; j < spec.numerical.size(); ++j) {
      if (!(e.numerical[j] >= 0.0)) throw ValueError(i, "negative amount in '" + spec.numerical[j].attribute + "'");
      out.rows(row, num_offset + static_cast<Eigen::Index>(j)) = normalize_amount(e.numerical[j], spec.numerical[j]);
    }
  }
  return out;
}

}  // namespace aae

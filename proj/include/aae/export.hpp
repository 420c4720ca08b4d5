#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/scoring.hpp"

namespace aae {

// One exported entry: latent code, mode, normalized components, blended
// score, label and raw attribute values.
struct LatentRecord {
  std::int64_t id = 0;
  std::vector<double> z;
  std::size_t mode = 1;
  double re = 0.0;
  double md = 0.0;
  double as = 0.0;
  std::optional<EntryLabel> label;
  nlohmann::json attributes = nlohmann::json::object();
};

inline nlohmann::json to_json(const LatentRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["z"] = r.z;
  j["mode"] = r.mode;
  j["re"] = r.re;
  j["md"] = r.md;
  j["as"] = r.as;
  j["label"] = r.label ? nlohmann::json(std::string(to_string(*r.label))) : nlohmann::json(nullptr);
  j["attributes"] = r.attributes;
  return j;
}

inline LatentRecord latent_record_from_json(const nlohmann::json& j) {
  LatentRecord r;
  r.id = j.at("id").get<std::int64_t>();
  r.z = j.at("z").get<std::vector<double>>();
  r.mode = j.at("mode").get<std::size_t>();
  r.re = j.at("re").get<double>();
  r.md = j.at("md").get<double>();
  r.as = j.at("as").get<double>();
  if (!j.at("label").is_null()) r.label = parse_label(j.at("label").get<std::string>());
  r.attributes = j.value("attributes", nlohmann::json::object());
  return r;
}

// `entries` supplies attribute values and must be row-aligned with `scores`;
// pass nullptr to omit attributes.
inline std::vector<LatentRecord> latent_records(const ScoreTable& scores, const Matrix& z,
                                                const EntryTable* entries = nullptr) {
  if (static_cast<std::size_t>(z.rows()) != scores.size()) throw ShapeError("latent rows differ from score rows");
  if (entries && entries->size() != scores.size()) throw ShapeError("entry rows differ from score rows");
  std::vector<LatentRecord> out;
  out.reserve(scores.size());
  std::vector<std::string> cat_names, num_names;
  if (entries) {
    cat_names = entries->schema.categorical_names();
    num_names = entries->schema.numerical_names();
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores.rows[i];
    LatentRecord r;
    r.id = s.id;
    r.z.assign(z.row(static_cast<Eigen::Index>(i)).data(), z.row(static_cast<Eigen::Index>(i)).data() + z.cols());
    r.mode = s.mode;
    r.re = s.re;
    r.md = s.md;
    r.as = s.as;
    r.label = s.label;
    if (entries) {
      const auto& e = entries->entries[i];
      for (std::size_t c = 0; c < cat_names.size(); ++c) r.attributes[cat_names[c]] = e.categorical[c];
      for (std::size_t c = 0; c < num_names.size(); ++c) r.attributes[num_names[c]] = e.numerical[c];
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string dump_latent_json(const std::vector<LatentRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr.dump() + "\n";
}

inline void export_latent_json(const ScoreTable& scores, const Matrix& z, const std::string& path,
                               const EntryTable* entries = nullptr) {
  const std::string text = dump_latent_json(latent_records(scores, z, entries));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::vector<LatentRecord> load_latent_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed latent export '" + path + "': " + e.what());
  }
  if (!arr.is_array()) throw IoError("latent export '" + path + "' is not a JSON array");
  std::vector<LatentRecord> out;
  out.reserve(arr.size());
  for (const auto& j : arr) out.push_back(latent_record_from_json(j));
  return out;
}

}  // namespace aae

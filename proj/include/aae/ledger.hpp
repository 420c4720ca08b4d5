#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "aae/error.hpp"

namespace aae {

enum class AttributeKind { categorical, numerical };

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::categorical;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

// Ordered attribute list. Entries store categorical and numerical values in
// two arrays that follow the schema order restricted to each kind.
struct AttributeSchema {
  std::vector<Attribute> attributes;

  std::size_t size() const { return attributes.size(); }

  std::vector<std::string> names(AttributeKind kind) const {
    std::vector<std::string> out;
    for (const auto& a : attributes)
      if (a.kind == kind) out.push_back(a.name);
    return out;
  }
  std::vector<std::string> categorical_names() const { return names(AttributeKind::categorical); }
  std::vector<std::string> numerical_names() const { return names(AttributeKind::numerical); }
  std::size_t categorical_count() const { return categorical_names().size(); }
  std::size_t numerical_count() const { return numerical_names().size(); }

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;
};

enum class EntryLabel { regular, global, local };

inline std::string_view to_string(EntryLabel label) {
  switch (label) {
    case EntryLabel::global: return "global";
    case EntryLabel::local: return "local";
    case EntryLabel::regular: break;
  }
  return "regular";
}

inline EntryLabel parse_label(std::string_view text) {
  if (text == "regular") return EntryLabel::regular;
  if (text == "global") return EntryLabel::global;
  if (text == "local") return EntryLabel::local;
  throw ArgumentError("unknown entry label '" + std::string(text) + "'");
}

struct JournalEntry {
  std::int64_t id = 0;
  std::vector<std::string> categorical;
  std::vector<double> numerical;

  friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

struct EntryTable {
  AttributeSchema schema;
  std::vector<JournalEntry> entries;
  std::vector<EntryLabel> labels;
  // False when labels are defaults rather than known ground truth.
  bool has_labels = false;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  std::int64_t next_id() const {
    std::int64_t next = 0;
    for (const auto& e : entries) next = std::max(next, e.id + 1);
    return next;
  }

  void validate() const {
    const std::size_t n_cat = schema.categorical_count();
    const std::size_t n_num = schema.numerical_count();
    if (labels.size() != entries.size())
      throw SchemaError("label count " + std::to_string(labels.size()) + " differs from entry count " +
                        std::to_string(entries.size()));
    std::set<std::int64_t> ids;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.categorical.size() != n_cat || e.numerical.size() != n_num)
        throw RowError(i, "entry does not carry the schema's " + std::to_string(schema.size()) + " attributes");
      if (!ids.insert(e.id).second) throw RowError(i, "duplicate entry id " + std::to_string(e.id));
    }
  }

  friend bool operator==(const EntryTable&, const EntryTable&) = default;
};

// ---------------------------------------------------------------------------
// CSV

namespace csv {

// Splits one CSV record. Handles quoted fields with doubled quotes; embedded
// newlines are supported because the reader feeds whole records.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

// Reads records, joining physical lines while a quote is open.
inline std::vector<std::vector<std::string>> read_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::string line;
  std::string pending;
  while (std::getline(in, line)) {
    pending += line;
    if (std::count(pending.begin(), pending.end(), '"') % 2 == 1) {
      pending += '\n';
      continue;
    }
    if (!pending.empty() && pending != "\r") records.push_back(split_record(pending));
    pending.clear();
  }
  if (!pending.empty()) records.push_back(split_record(pending));
  return records;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

inline bool parse_number(std::string_view text, double& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

inline bool parse_integer(std::string_view text, std::int64_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace csv

// Loads journal entries. The header must name every schema attribute; extra
// columns are ignored. An optional "id" column supplies entry ids, otherwise
// ids are the zero-based data row indices.
inline EntryTable read_journal_csv(std::istream& in, const AttributeSchema& schema) {
  EntryTable table;
  table.schema = schema;
  const auto records = csv::read_records(in);
  if (records.empty()) return table;

  const auto& header = records.front();
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column.emplace(header[c], c);

  auto lookup = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> cat_cols;
  std::vector<std::size_t> num_cols;
  for (const auto& name : schema.categorical_names()) cat_cols.push_back(lookup(name));
  for (const auto& name : schema.numerical_names()) num_cols.push_back(lookup(name));
  const auto id_it = column.find("id");

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t row = r - 1;
    if (rec.size() != header.size())
      throw RowError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(rec.size()));
    JournalEntry entry;
    entry.id = static_cast<std::int64_t>(row);
    if (id_it != column.end() && !csv::parse_integer(rec[id_it->second], entry.id))
      throw RowError(row, "unparseable id '" + rec[id_it->second] + "'");
    for (std::size_t c : cat_cols) entry.categorical.push_back(rec[c]);
    for (std::size_t j = 0; j < num_cols.size(); ++j) {
      double v = 0.0;
      if (!csv::parse_number(rec[num_cols[j]], v))
        throw RowError(row, "unparseable amount '" + rec[num_cols[j]] + "' in column '" +
                                header[num_cols[j]] + "'");
      entry.numerical.push_back(v);
    }
    table.entries.push_back(std::move(entry));
  }
  table.labels.assign(table.entries.size(), EntryLabel::regular);
  table.validate();
  return table;
}

inline EntryTable load_journal_csv(const std::string& path, const AttributeSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_journal_csv(in, schema);
}

// Writes "id" followed by the schema attributes in schema order.
inline void write_journal_csv(std::ostream& out, const EntryTable& table) {
  out << "id";
  for (const auto& a : table.schema.attributes) out << ',' << csv::quote(a.name);
  out << '\n';
  for (const auto& e : table.entries) {
    out << e.id;
    std::size_t ci = 0;
    std::size_t ni = 0;
    for (const auto& a : table.schema.attributes) {
      out << ',';
      if (a.kind == AttributeKind::categorical)
        out << csv::quote(e.categorical[ci++]);
      else
        out << csv::format_number(e.numerical[ni++]);
    }
    out << '\n';
  }
}

inline void save_journal_csv(const std::string& path, const EntryTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_journal_csv(out, table);
}

// Label sidecar: "entry_id,label" rows.
inline void save_labels_csv(const std::string& path, const EntryTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "entry_id,label\n";
  for (std::size_t i = 0; i < table.entries.size(); ++i)
    out << table.entries[i].id << ',' << to_string(table.labels[i]) << '\n';
}

// Applies a label sidecar. Entries absent from the sidecar stay regular.
inline void load_labels_csv(const std::string& path, EntryTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const auto records = csv::read_records(in);
  std::unordered_map<std::int64_t, EntryLabel> by_id;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    std::int64_t id = 0;
    if (rec.size() < 2 || !csv::parse_integer(rec[0], id)) throw RowError(r - 1, "malformed label record");
    by_id[id] = parse_label(rec[1]);
  }
  table.labels.assign(table.entries.size(), EntryLabel::regular);
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    auto it = by_id.find(table.entries[i].id);
    if (it != by_id.end()) table.labels[i] = it->second;
  }
  table.has_labels = true;
}

}  // namespace aae

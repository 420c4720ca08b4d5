#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aae/error.hpp"
#include "aae/ledger.hpp"
#include "aae/random.hpp"

namespace aae {

inline constexpr std::string_view kGlobalTokenPrefix = "⊥GLOBAL⊥";

namespace detail {

inline std::vector<std::set<std::string>> categorical_vocabulary(const EntryTable& table,
                                                                 const std::vector<std::size_t>& rows) {
  std::vector<std::set<std::string>> vocab(table.schema.categorical_count());
  for (std::size_t i : rows)
    for (std::size_t c = 0; c < vocab.size(); ++c) vocab[c].insert(table.entries[i].categorical[c]);
  return vocab;
}

// Rows eligible as injection sources: all rows, or the regular ones when the
// table is labelled.
inline std::vector<std::size_t> source_rows(const EntryTable& table) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (!table.has_labels || table.labels[i] == EntryLabel::regular) rows.push_back(i);
  return rows;
}

inline std::vector<std::size_t> all_rows(const EntryTable& table) {
  std::vector<std::size_t> rows(table.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

inline void check_count(std::int64_t count) {
  if (count < 0) throw ArgumentError("anomaly count must be non-negative");
}

}  // namespace detail

// Appends `count` entries, each copying a random regular entry and replacing
// two to four categorical values with tokens never seen in the table.
inline EntryTable inject_global_anomalies(const EntryTable& table, std::int64_t count, std::uint64_t seed) {
  detail::check_count(count);
  EntryTable out = table;
  if (count == 0) return out;
  const auto sources = detail::source_rows(table);
  const std::size_t n_cat = table.schema.categorical_count();
  if (sources.empty()) throw InjectionError("global injection needs at least one regular entry");
  if (n_cat == 0) throw InjectionError("global injection needs a categorical attribute");

  const auto vocab = detail::categorical_vocabulary(table, detail::all_rows(table));
  Rng rng(seed);
  std::int64_t next_id = table.next_id();
  std::uint64_t token_counter = 0;
  auto fresh_token = [&](std::size_t attr) {
    for (;;) {
      std::string token = std::string(kGlobalTokenPrefix) + std::to_string(token_counter++);
      if (!vocab[attr].count(token)) return token;
    }
  };

  for (std::int64_t k = 0; k < count; ++k) {
    JournalEntry e = table.entries[sources[rng.index(sources.size())]];
    e.id = next_id++;
    std::vector<std::size_t> attrs(n_cat);
    for (std::size_t c = 0; c < n_cat; ++c) attrs[c] = c;
    rng.shuffle(attrs);
    const std::size_t lo = std::min<std::size_t>(2, n_cat);
    const std::size_t hi = std::min<std::size_t>(4, n_cat);
    const std::size_t replaced = lo + rng.index(hi - lo + 1);
    for (std::size_t r = 0; r < replaced; ++r) e.categorical[attrs[r]] = fresh_token(attrs[r]);
    out.entries.push_back(std::move(e));
    out.labels.push_back(EntryLabel::global);
  }
  out.has_labels = true;
  return out;
}

// Appends `count` entries whose individual categorical values all occur in
// regular entries but whose values on one attribute pair never co-occur
// anywhere in the table.
inline EntryTable inject_local_anomalies(const EntryTable& table, std::int64_t count, std::uint64_t seed) {
  detail::check_count(count);
  EntryTable out = table;
  if (count == 0) return out;
  const auto sources = detail::source_rows(table);
  const std::size_t n_cat = table.schema.categorical_count();
  const auto vocab = detail::categorical_vocabulary(table, sources);
  const auto cat_names = table.schema.categorical_names();

  std::size_t rich = 0;
  for (const auto& v : vocab) rich += v.size() >= 2 ? 1 : 0;
  if (sources.empty() || rich < 2)
    throw InjectionError("local injection needs two categorical attributes with at least two values each");

  struct PairState {
    std::size_t a;
    std::size_t b;
    std::set<std::pair<std::string, std::string>> used;
    std::vector<std::pair<std::string, std::string>> unused;
  };
  std::vector<PairState> pairs;
  for (std::size_t a = 0; a < n_cat; ++a)
    for (std::size_t b = a + 1; b < n_cat; ++b) pairs.push_back({a, b, {}, {}});
  for (const auto& e : table.entries)
    for (auto& p : pairs) p.used.emplace(e.categorical[p.a], e.categorical[p.b]);
  for (auto& p : pairs)
    for (const auto& va : vocab[p.a])
      for (const auto& vb : vocab[p.b])
        if (!p.used.count({va, vb})) p.unused.emplace_back(va, vb);

  Rng rng(seed);
  std::int64_t next_id = table.next_id();
  for (std::int64_t k = 0; k < count; ++k) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (!pairs[i].unused.empty()) open.push_back(i);
    if (open.empty()) {
      std::string names;
      for (const auto& p : pairs) names += (names.empty() ? "" : ", ") + cat_names[p.a] + "/" + cat_names[p.b];
      throw InjectionError("no unused value combination left for attribute pairs: " + names);
    }
    auto& pair = pairs[open[rng.index(open.size())]];
    const std::size_t pick = rng.index(pair.unused.size());
    const auto combo = pair.unused[pick];
    // Each injected combination is used once.
    pair.unused.erase(pair.unused.begin() + static_cast<std::ptrdiff_t>(pick));

    JournalEntry e = table.entries[sources[rng.index(sources.size())]];
    e.id = next_id++;
    e.categorical[pair.a] = combo.first;
    e.categorical[pair.b] = combo.second;
    out.entries.push_back(std::move(e));
    out.labels.push_back(EntryLabel::local);
  }
  out.has_labels = true;
  return out;
}

}  // namespace aae

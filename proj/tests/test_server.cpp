#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "aae/server.hpp"
#include "oracles.hpp"

using namespace aae;
using nlohmann::json;

namespace {

std::vector<LatentRecord> records() {
  std::vector<LatentRecord> out;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    LatentRecord r;
    r.id = 100 + i;
    r.z = {rng.normal(), rng.normal()};
    r.mode = 1 + static_cast<std::size_t>(i % 3);
    r.re = i == 7 ? 0.5 : rng.uniform();
    r.md = i == 7 ? 0.5 : rng.uniform();
    r.as = 0.8 * r.re + 0.2 * r.md;
    r.label = i < 3 ? EntryLabel::global : (i < 5 ? EntryLabel::local : EntryLabel::regular);
    r.attributes = {{"BSCHL", "40"}};
    out.push_back(r);
  }
  // Same blended score as row 7 for every alpha, smaller id.
  out[2].re = out[2].md = 0.5;
  return out;
}

json body(const ApiResponse& r) { return json::parse(r.body); }

}  // namespace

TEST(ExplorerApi, MetaCountsClasses) {
  const ExplorerApi api(records(), 3, 0.8);
  const auto j = body(api.meta());
  EXPECT_EQ(j["n"], 40);
  EXPECT_EQ(j["tau"], 3);
  EXPECT_EQ(j["classes"]["global"], 3);
  EXPECT_EQ(j["classes"]["local"], 2);
  EXPECT_EQ(j["classes"]["regular"], 35);
}

TEST(ExplorerApi, LatentReblendsEveryRecord) {
  const ExplorerApi api(records(), 3, 0.8);
  const auto j = body(api.latent("0.3"));
  ASSERT_EQ(j.size(), 40u);
  for (const auto& r : j) {
    EXPECT_NEAR(r["as"].get<double>(), 0.3 * r["re"].get<double>() + 0.7 * r["md"].get<double>(), 1e-9);
    EXPECT_EQ(r["alpha"], 0.3);
  }
  EXPECT_EQ(body(api.latent(std::nullopt))[0]["alpha"], 0.8);
}

TEST(ExplorerApi, EntriesMatchRankEntries) {
  const auto recs = records();
  const ExplorerApi api(recs, 3, 0.8);
  for (double alpha : {0.0, 0.3, 0.8, 1.0}) {
    ScoreTable t;
    for (const auto& r : recs) t.rows.push_back({r.id, r.mode, 0, r.md, 0, r.re, blend(r.re, r.md, alpha), r.label});
    for (std::size_t mode : {0u, 2u}) {
      const auto want = rank_entries(t, 10, mode);
      const auto got = body(api.entries(std::to_string(alpha), mode ? std::to_string(mode) : "all", "10"));
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(got[i]["id"], t.rows[want[i]].id);
    }
  }
}

TEST(ExplorerApi, ModesPartitionTheRecords) {
  const ExplorerApi api(records(), 3, 0.8);
  std::size_t total = 0;
  for (int m = 1; m <= 3; ++m) total += body(api.entries(std::nullopt, std::to_string(m), std::nullopt)).size();
  EXPECT_EQ(total, 40u);
  EXPECT_EQ(body(api.entries(std::nullopt, std::nullopt, std::nullopt)).size(), 40u);
}

TEST(ExplorerApi, BadParametersAre4xx) {
  const ExplorerApi api(records(), 3, 0.8);
  EXPECT_EQ(api.latent("1.5").status, 400);
  EXPECT_EQ(api.latent("abc").status, 400);
  EXPECT_EQ(api.entries("0.5", "9", std::nullopt).status, 400);
  EXPECT_EQ(api.entries("0.5", "all", "-1").status, 400);
  EXPECT_EQ(api.entry("abc").status, 400);
  EXPECT_EQ(api.entry("99999").status, 404);
  const auto ok = api.entry("105", "1");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(body(ok)["id"], 105);
  EXPECT_THROW(ExplorerApi(records(), 3, 1.5), ArgumentError);
}

TEST(ExplorerApi, ServesOverLoopback) {
  const ExplorerApi api(records(), 3, 0.8);
  httplib::Server server;
  mount_explorer_api(server, api);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto meta = client.Get("/api/meta");
  ASSERT_TRUE(meta);
  EXPECT_EQ(meta->status, 200);
  EXPECT_EQ(json::parse(meta->body)["n"], 40);
  const auto top = client.Get("/api/entries?alpha=1.0&top=5");
  ASSERT_TRUE(top);
  EXPECT_EQ(json::parse(top->body).size(), 5u);
  const auto bad = client.Get("/api/latent?alpha=7");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  const auto missing = client.Get("/api/entry/1");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  worker.join();
}

TEST(Export, JsonRoundTripAndSummaryAgreement) {
  auto table = inject_local_anomalies(inject_global_anomalies(oracle::small_ledger(600, 2), 4, 1), 4, 2);
  const auto data = encode_entries(table, fit_encoding_spec(table));
  TrainConfig cfg;
  cfg.arch = ArchProfile::B;
  cfg.epochs_max = 2;
  const auto model = train(data, cfg).model;
  const auto scores = score_table(model, table, data, 0.8);
  const auto path = (std::filesystem::temp_directory_path() / "aae_export_test.json").string();
  export_latent_json(scores, scores.latent, path, &table);
  const auto back = load_latent_json(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), scores.size());
  EXPECT_EQ(back[10].attributes["BSCHL"], table.entries[10].categorical[3]);
  EXPECT_EQ(back[10].z[0], scores.latent(10, 0));

  // Class means recomputed from the export agree with the summary.
  const auto summary = per_class_mean_scores(scores);
  for (const auto& c : summary.classes) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : back)
      if (*r.label == c.label) {
        sum += r.as;
        ++n;
      }
    EXPECT_EQ(n, c.count);
    EXPECT_NEAR(sum / static_cast<double>(n), c.mean, 1e-9);
  }
  EXPECT_THROW(load_latent_json(path), IoError);
}

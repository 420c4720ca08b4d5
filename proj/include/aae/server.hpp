#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Eigen must precede httplib: <resolv.h> defines a `res` macro.
#include "aae/export.hpp"
#include "aae/ledger.hpp"
#include "aae/scoring.hpp"

#include <httplib.h>
#include <json.hpp>

namespace aae {

struct ApiResponse {
  int status = 200;
  std::string body;
};

// Read-only view over an exported latent file. Every handler derives its
// answer from the immutable records; AS is re-blended per request.
class ExplorerApi {
 public:
  ExplorerApi(std::vector<LatentRecord> records, std::size_t tau, double alpha_default)
      : records_(std::move(records)), tau_(tau), alpha_default_(alpha_default) {
    if (!(alpha_default_ >= 0.0 && alpha_default_ <= 1.0)) throw ArgumentError("default alpha must lie in [0, 1]");
    for (std::size_t i = 0; i < records_.size(); ++i) by_id_.emplace(records_[i].id, i);
  }

  std::size_t size() const { return records_.size(); }

  ApiResponse meta() const {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& r : records_)
      if (r.label) {
        auto& c = classes[std::string(to_string(*r.label))];
        c = c.is_null() ? 1 : c.get<std::size_t>() + 1;
      }
    return ok({{"n", records_.size()}, {"tau", tau_}, {"alpha_default", alpha_default_}, {"classes", classes}});
  }

  ApiResponse latent(const std::optional<std::string>& alpha_text) const {
    const auto alpha = parse_alpha(alpha_text);
    if (!alpha) return bad_alpha();
    auto arr = nlohmann::json::array();
    for (const auto& r : records_) arr.push_back(blended(r, *alpha));
    return ok(arr);
  }

  // Descending AS, ties by ascending id. Empty mode or "all" keeps every mode.
  ApiResponse entries(const std::optional<std::string>& alpha_text, const std::optional<std::string>& mode_text,
                      const std::optional<std::string>& top_text) const {
    const auto alpha = parse_alpha(alpha_text);
    if (!alpha) return bad_alpha();
    std::size_t mode = 0;
    if (mode_text && !mode_text->empty() && *mode_text != "all") {
      std::int64_t m = 0;
      if (!csv::parse_integer(*mode_text, m) || m < 1 || static_cast<std::size_t>(m) > tau_)
        return error(400, "mode must be 'all' or an integer in [1, " + std::to_string(tau_) + "]");
      mode = static_cast<std::size_t>(m);
    }
    std::size_t top = records_.size();
    if (top_text && !top_text->empty()) {
      std::int64_t t = 0;
      if (!csv::parse_integer(*top_text, t) || t < 0) return error(400, "top must be a non-negative integer");
      top = static_cast<std::size_t>(t);
    }

    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < records_.size(); ++i)
      if (mode == 0 || records_[i].mode == mode)
        ranked.emplace_back(blend(records_[i].re, records_[i].md, *alpha), i);
    const auto cmp = [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return records_[a.second].id < records_[b.second].id;
    };
    const std::size_t keep = std::min(top, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), cmp);
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < keep; ++i) arr.push_back(blended(records_[ranked[i].second], *alpha));
    return ok(arr);
  }

  ApiResponse entry(const std::string& id_text, const std::optional<std::string>& alpha_text = std::nullopt) const {
    const auto alpha = parse_alpha(alpha_text);
    if (!alpha) return bad_alpha();
    std::int64_t id = 0;
    if (!csv::parse_integer(id_text, id)) return error(400, "entry id must be an integer");
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return error(404, "no entry with id " + id_text);
    return ok(blended(records_[it->second], *alpha));
  }

 private:
  std::optional<double> parse_alpha(const std::optional<std::string>& text) const {
    if (!text || text->empty()) return alpha_default_;
    double a = 0.0;
    if (!csv::parse_number(*text, a) || !(a >= 0.0 && a <= 1.0)) return std::nullopt;
    return a;
  }

  static nlohmann::json blended(const LatentRecord& r, double alpha) {
    auto j = to_json(r);
    j["as"] = blend(r.re, r.md, alpha);
    j["alpha"] = alpha;
    return j;
  }

  static ApiResponse ok(const nlohmann::json& j) { return {200, j.dump()}; }
  static ApiResponse error(int status, const std::string& message) {
    return {status, nlohmann::json{{"error", message}}.dump()};
  }
  static ApiResponse bad_alpha() { return error(400, "alpha must be a number in [0, 1]"); }

  std::vector<LatentRecord> records_;
  std::map<std::int64_t, std::size_t> by_id_;
  std::size_t tau_;
  double alpha_default_;
};

// Registers the GET routes of `api` on `server`. `api` must outlive it.
inline void mount_explorer_api(httplib::Server& server, const ExplorerApi& api) {
  const auto param = [](const httplib::Request& req, const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };
  const auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  server.Get("/api/meta", [&api, reply](const httplib::Request&, httplib::Response& res) { reply(res, api.meta()); });
  server.Get("/api/latent", [&api, param, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.latent(param(req, "alpha")));
  });
  server.Get("/api/entries", [&api, param, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.entries(param(req, "alpha"), param(req, "mode"), param(req, "top")));
  });
  server.Get(R"(/api/entry/([^/]+))", [&api, param, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.entry(req.matches[1].str(), param(req, "alpha")));
  });
}

// Blocks until the server is stopped.
inline bool serve(const ExplorerApi& api, const std::string& host, int port) {
  httplib::Server server;
  mount_explorer_api(server, api);
  return server.listen(host, port);
}

}  // namespace aae

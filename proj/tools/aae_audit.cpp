#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aae/all.hpp"
#include "aae/server.hpp"

namespace {

using namespace aae;

struct LedgerInput {
  std::string path;
  std::string labels;
};

void add_ledger_options(CLI::App* cmd, LedgerInput& in) {
  cmd->add_option("--in", in.path, "journal CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--labels", in.labels, "label sidecar CSV (entry_id,label)")->check(CLI::ExistingFile);
}

EntryTable load_ledger(const LedgerInput& in) {
  auto table = load_journal_csv(in.path, journal_schema());
  if (!in.labels.empty()) load_labels_csv(in.labels, table);
  return table;
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("--alpha must lie in [0, 1]");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

ScoreTable score_ledger(const AaeModel& model, const EntryTable& table, double alpha) {
  return score_table(model, table, encode_entries(table, model.encoding), alpha);
}

void write_scores_csv(std::ostream& out, const ScoreTable& scores) {
  out << "id,mode,D,MD,E,RE,AS,label\n";
  for (const auto& r : scores.rows)
    out << r.id << ',' << r.mode << ',' << csv::format_number(r.divergence) << ',' << csv::format_number(r.md) << ','
        << csv::format_number(r.error) << ',' << csv::format_number(r.re) << ',' << csv::format_number(r.as) << ','
        << (r.label ? to_string(*r.label) : "") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Journal-entry anomaly auditing with an adversarial autoencoder"};
  app.require_subcommand(1);

  // generate
  std::int64_t n_entries = 20000;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string labels_out;
  auto* generate = app.add_subcommand("generate", "write a synthetic journal ledger");
  generate->add_option("--entries", n_entries, "number of entries")->capture_default_str();
  generate->add_option("--seed", seed, "random seed")->capture_default_str();
  generate->add_option("--out", out_path, "output journal CSV")->required();

  // inject
  LedgerInput ledger;
  std::int64_t n_global = 35;
  std::int64_t n_local = 25;
  auto* inject = app.add_subcommand("inject", "append labelled global and local anomalies");
  add_ledger_options(inject, ledger);
  inject->add_option("--global", n_global, "global anomalies to inject")->capture_default_str();
  inject->add_option("--local", n_local, "local anomalies to inject")->capture_default_str();
  inject->add_option("--seed", seed, "random seed")->capture_default_str();
  inject->add_option("--out", out_path, "output journal CSV")->required();
  inject->add_option("--labels-out", labels_out, "output label sidecar")->required();

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "fit and write the encoding spec of a ledger");
  add_ledger_options(encode_cmd, ledger);
  encode_cmd->add_option("--out", out_path, "output JSON")->required();

  // train
  TrainConfig cfg;
  cfg.epochs_max = 60;
  cfg.lr_disc = 1e-4;
  cfg.arch = ArchProfile::B;
  std::string arch = "B";
  std::string log_path;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_ledger_options(train_cmd, ledger);
  train_cmd->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  train_cmd->add_option("--tau", cfg.tau, "number of prior modes")->capture_default_str();
  train_cmd->add_option("--gamma", cfg.gamma, "categorical share of the reconstruction loss")->capture_default_str();
  train_cmd->add_option("--epochs", cfg.epochs_max, "maximum epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size")->capture_default_str();
  train_cmd->add_option("--lr-encdec", cfg.lr_encdec, "encoder/decoder learning rate")->capture_default_str();
  train_cmd->add_option("--lr-disc", cfg.lr_disc, "discriminator/generator learning rate")->capture_default_str();
  train_cmd->add_option("--patience", cfg.patience, "early-stopping patience in epochs")->capture_default_str();
  train_cmd->add_option("--arch", arch, "architecture profile")->check(CLI::IsMember({"A", "B"}))->capture_default_str();
  train_cmd->add_option("--log", log_path, "per-epoch loss CSV");
  train_cmd->add_option("--out", out_path, "output checkpoint")->required();

  // score
  std::string checkpoint;
  double alpha = kDefaultAlpha;
  auto* score = app.add_subcommand("score", "score a ledger with a checkpoint");
  add_ledger_options(score, ledger);
  score->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  score->add_option("--alpha", alpha, "RE weight of the anomaly score")->capture_default_str();
  score->add_option("--out", out_path, "output score CSV")->required();

  // report
  std::vector<std::string> checkpoints;
  std::vector<std::size_t> ks = {25, 50, 100};
  auto* report = app.add_subcommand("report", "per-class mean scores and ranking metrics");
  add_ledger_options(report, ledger);
  report->add_option("--checkpoint", checkpoints, "one checkpoint per seed")->required()->check(CLI::ExistingFile);
  report->add_option("--alpha", alpha, "RE weight of the anomaly score")->capture_default_str();
  report->add_option("--k", ks, "precision@k cut-offs")->capture_default_str();
  report->add_option("--out", out_path, "output summary CSV")->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "write latent codes and scores as JSON");
  add_ledger_options(export_cmd, ledger);
  export_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--alpha", alpha, "RE weight of the anomaly score")->capture_default_str();
  export_cmd->add_option("--out", out_path, "output JSON")->required();

  // serve
  std::string latent_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t tau = 5;
  auto* serve_cmd = app.add_subcommand("serve", "serve an exported latent file over HTTP");
  serve_cmd->add_option("--latent", latent_path, "exported latent JSON")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--tau", tau, "number of prior modes")->capture_default_str();
  serve_cmd->add_option("--alpha", alpha, "default RE weight")->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      GeneratorConfig g;
      g.n_entries = n_entries;
      g.seed = seed;
      save_journal_csv(out_path, generate_synthetic_ledger(g));
    } else if (*inject) {
      auto table = load_ledger(ledger);
      table = inject_global_anomalies(table, n_global, seed);
      table = inject_local_anomalies(table, n_local, seed + 1);
      save_journal_csv(out_path, table);
      save_labels_csv(labels_out, table);
    } else if (*encode_cmd) {
      open_out(out_path) << to_json(fit_encoding_spec(load_ledger(ledger))).dump(2) << '\n';
    } else if (*train_cmd) {
      cfg.arch = parse_arch(arch);
      const auto table = load_ledger(ledger);
      const auto data = encode_entries(table, fit_encoding_spec(table));
      std::optional<std::ofstream> log;
      if (!log_path.empty()) {
        log = open_out(log_path);
        *log << "epoch,reconstruction,discriminator,generator\n";
      }
      const auto result = train(data, cfg, [&](std::size_t epoch, const EpochRecord& r) {
        if (log)
          *log << epoch << ',' << csv::format_number(r.reconstruction) << ','
               << csv::format_number(r.discriminator) << ',' << csv::format_number(r.generator) << '\n';
      });
      save_checkpoint(result.model, out_path);
      const auto& last = result.trace.epochs.back();
      std::cerr << "trained " << result.trace.epochs.size() << " epochs, reconstruction loss " << last.reconstruction
                << '\n';
    } else if (*score) {
      check_alpha(alpha);
      auto out = open_out(out_path);
      write_scores_csv(out, score_ledger(load_checkpoint(checkpoint), load_ledger(ledger), alpha));
    } else if (*report) {
      check_alpha(alpha);
      const auto table = load_ledger(ledger);
      if (!table.has_labels) throw ArgumentError("report needs --labels");
      auto out = open_out(out_path);
      out << "run,class,mean_as,sd_as,count\n";
      std::vector<ClassScoreSummary> runs;
      std::vector<RankingMetrics> metrics;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const auto scores = score_ledger(load_checkpoint(checkpoints[i]), table, alpha);
        runs.push_back(per_class_mean_scores(scores));
        metrics.push_back(auc_and_precision_at_k(scores, ks));
        write_summary_csv(out, runs.back(), "seed" + std::to_string(i + 1));
      }
      write_summary_csv(out, aggregate_over_seeds(runs), "all");
      for (std::size_t i = 0; i < metrics.size(); ++i) {
        std::cout << "seed" << i + 1 << " auc=" << csv::format_number(metrics[i].auc);
        for (const auto& [k, p] : metrics[i].precision_at) std::cout << " p@" << k << '=' << csv::format_number(p);
        std::cout << '\n';
      }
    } else if (*export_cmd) {
      check_alpha(alpha);
      const auto table = load_ledger(ledger);
      const auto scores = score_ledger(load_checkpoint(checkpoint), table, alpha);
      export_latent_json(scores, scores.latent, out_path, &table);
    } else if (*serve_cmd) {
      const ExplorerApi api(load_latent_json(latent_path), tau, alpha);
      std::cerr << "serving " << api.size() << " entries on http://" << host << ':' << port << '\n';
      if (!serve(api, host, port)) throw IoError("cannot listen on " + host + ':' + std::to_string(port));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

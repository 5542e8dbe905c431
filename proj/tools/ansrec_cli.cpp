// Command-line front end: ingest, train, evaluate, diagnose, compare.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ansrec/runner.hpp"

namespace {

using namespace ansrec;

struct CommonRunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> sampler;
  std::optional<std::string> out;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key = value config file");
    cmd->add_option("--set", overrides, "override one config key (key=value)");
    cmd->add_option("--seed", seed, "root seed");
    cmd->add_option("--sampler", sampler, "rns | dns | ans | hns");
    cmd->add_option("--out", out, "output directory");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got `" + kv + "`");
      set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.trainer.seed = *seed;
    if (sampler) c.trainer.sampler = parse_sampler_kind(*sampler);
    if (out) c.out = *out;
    c.validate();
    return c;
  }
};

void print_metrics(const MetricReport& m) {
  std::printf("%6s %10s %10s %10s   (%zu users)\n", "K", "hit", "recall", "ndcg", m.evaluated_users);
  for (const auto& x : m.at_k) std::printf("%6zu %10.4f %10.4f %10.4f\n", x.k, x.hit_ratio, x.recall, x.ndcg);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negative-sampling trainer for implicit-feedback matrix factorisation"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "remap an interaction log (or generate a synthetic one)");
  std::string ingest_input, ingest_out = ".";
  bool no_timestamp = false, synthetic = false;
  SyntheticSpec synth;
  std::uint64_t synth_seed = 2024;
  ingest->add_option("input", ingest_input, "interaction file: `user item [timestamp]` per line");
  ingest->add_option("--out", ingest_out, "output directory")->capture_default_str();
  ingest->add_flag("--no-timestamp", no_timestamp, "lines carry only `user item`");
  ingest->add_flag("--synthetic", synthetic, "generate a latent-factor dataset instead");
  ingest->add_option("--users", synth.n_users)->capture_default_str();
  ingest->add_option("--items", synth.n_items)->capture_default_str();
  ingest->add_option("--rank", synth.rank)->capture_default_str();
  ingest->add_option("--per-user", synth.per_user)->capture_default_str();
  ingest->add_option("--seed", synth_seed)->capture_default_str();

  auto* train = app.add_subcommand("train", "train one model and evaluate it on test");
  CommonRunOptions train_opts;
  train_opts.attach(train);

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the configured test split");
  CommonRunOptions eval_opts;
  std::string checkpoint;
  eval_opts.attach(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint written by `train`")->required();

  auto* diag = app.add_subcommand("diagnose", "train with score histograms and render them to SVG");
  CommonRunOptions diag_opts;
  diag_opts.attach(diag);

  auto* compare = app.add_subcommand("compare", "PER matrix and metric deltas between runs");
  std::vector<std::string> reports, names;
  compare->add_option("reports", reports, "metrics.json files from `train`")->required();
  compare->add_option("--names", names, "display names (default: sampler of each run)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      InteractionSet set;
      if (synthetic) {
        set = make_synthetic(synth, synth_seed);
      } else {
        if (ingest_input.empty()) throw std::invalid_argument("ingest: input file or --synthetic required");
        set = ingest_interactions(ingest_input, !no_timestamp);
      }
      std::filesystem::create_directories(ingest_out);
      write_interactions(set, std::filesystem::path(ingest_out) / "interactions.txt");
      write_remap_tables(set, ingest_out);
      std::printf("%zu users, %zu items, %zu interactions -> %s\n", set.n_users, set.n_items,
                  set.size(), ingest_out.c_str());
    } else if (*train) {
      const RunConfig c = train_opts.resolve();
      RunHooks hooks;
      hooks.on_epoch = [&](const EpochRecord& e) {
        std::printf("epoch %4zu  loss %.5f  val ndcg@%zu %.4f  (%.2fs)\n", e.epoch, e.loss.total,
                    c.select_k, e.validation.at(c.select_k).ndcg, e.seconds);
        std::fflush(stdout);
      };
      const RunRecord r = run_experiment(c, hooks);
      std::printf("best epoch %zu (val ndcg@%zu %.4f); test:\n", r.best_epoch, c.select_k, r.best_validation);
      print_metrics(r.test);
      if (r.overlap.events) std::printf("ans/dns base-item overlap %.4f\n", r.overlap.value);
      if (!c.out.empty()) std::printf("reports written to %s\n", c.out.c_str());
    } else if (*eval) {
      const RunConfig c = eval_opts.resolve();
      const Checkpoint ck = load_checkpoint(checkpoint);
      const Splits s = prepare_splits(c);
      if (ck.params.n_users() != static_cast<Eigen::Index>(s.train.n_users) ||
          ck.params.n_items() != static_cast<Eigen::Index>(s.train.n_items))
        throw std::invalid_argument("checkpoint does not match the configured dataset");
      const InteractionSet* exclude[] = {&s.train, &s.validation};
      RunRecord r;
      r.config = c;
      r.test_fingerprint = fingerprint(s.test);
      const Evaluation ev = evaluate(ck.params, s.test, exclude, c.eval_ks, std::string(to_string(c.trainer.sampler)));
      r.test = ev.report;
      r.test_hits = ev.hits.at(c.select_k);
      print_metrics(r.test);
      if (!c.out.empty()) {
        std::filesystem::create_directories(c.out);
        emit_report(r, ReportFormat::json, std::filesystem::path(c.out) / "metrics.json");
        emit_report(r, ReportFormat::csv, std::filesystem::path(c.out) / "metrics.csv");
      }
    } else if (*diag) {
      RunConfig c = diag_opts.resolve();
      if (c.histogram_epochs.empty()) c.histogram_epochs = {0, 30, 50};
      if (c.out.empty()) c.out = "diagnostics";
      const RunRecord r = run_experiment(c);
      for (const auto& h : r.histograms)
        std::printf("epoch %4zu  share of scores <= epoch-%zu 80th percentile: %.4f\n", h.epoch,
                    r.histograms.front().epoch, h.fraction_below);
      if (r.overlap.events) std::printf("ans/dns base-item overlap %.4f\n", r.overlap.value);
      const std::filesystem::path dir(c.out);
      if (!r.histograms.empty()) write_file(dir / "histograms.svg", render_histograms_svg(r.histograms));
      write_file(dir / "minmax.svg", render_minmax_svg(r.minmax));
      std::printf("diagnostics written to %s\n", c.out.c_str());
    } else if (*compare) {
      std::vector<RunRecord> records;
      for (const auto& p : reports) records.push_back(load_report(p));
      if (names.empty())
        for (const auto& r : records) names.emplace_back(to_string(r.config.trainer.sampler));
      std::cout << format_comparison(compare_runs(records, names));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#include "ansrec/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace ansrec {

Splits prepare_splits(const RunConfig& config) {
  const std::uint64_t seed = config.effective_data_seed();
  InteractionSet set = config.data == "synthetic"
                           ? make_synthetic(config.synthetic, seed)
                           : ingest_interactions(config.data, config.has_timestamp);
  if (config.split == SplitProtocol::timestamp_cut)
    return split_by_timestamp(set, config.cutoff, config.val_fraction, seed);
  return split_random(set, config.split_ratios, seed);
}

std::uint64_t fingerprint(const InteractionSet& set) {
  std::uint64_t h = mix64(set.n_users) ^ mix64(set.n_items + 1);
  for (const auto& x : set.interactions)
    h = mix64(h ^ ((static_cast<std::uint64_t>(static_cast<std::uint32_t>(x.user)) << 32) |
                   static_cast<std::uint32_t>(x.item)));
  return h;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool contains(const std::vector<std::size_t>& xs, std::size_t x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string history_csv(const RunRecord& r) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,bpr,contrastive,disentangle,l2,total,overlap,mean_gain";
  for (auto k : r.config.eval_ks) out << ",hit@" << k << ",recall@" << k << ",ndcg@" << k;
  out << '\n';
  for (const auto& e : r.history) {
    out << e.epoch << ',' << e.loss.bpr << ',' << e.loss.contrastive << ',' << e.loss.disentangle
        << ',' << e.loss.l2 << ',' << e.loss.total << ',' << e.overlap.value << ',' << e.mean_gain;
    for (const auto& m : e.validation.at_k) out << ',' << m.hit_ratio << ',' << m.recall << ',' << m.ndcg;
    out << '\n';
  }
  return out.str();
}

}  // namespace

RunRecord run_experiment(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  const auto t_run = Clock::now();
  const Splits splits = prepare_splits(config);

  RunRecord rec;
  rec.config = config;
  rec.test_fingerprint = fingerprint(splits.test);

  Trainer trainer(splits.train, config.trainer);
  if (hooks.on_ans_sample) trainer.on_ans_sample(hooks.on_ans_sample);

  const InteractionSet* val_exclude[] = {&splits.train};
  const InteractionSet* test_exclude[] = {&splits.train, &splits.validation};
  const std::string method(to_string(config.trainer.sampler));
  auto validate = [&](const ParamStore& p) {
    return evaluate(p, splits.validation, val_exclude, config.eval_ks, method).report;
  };

  rec.initial_validation = validate(trainer.params()).at(config.select_k).ndcg;

  // Histogram pairs come from their own stream so diagnostics never move training randomness.
  std::vector<std::pair<UserId, ItemId>> pairs;
  std::optional<double> reference_marker;
  auto snapshot = [&](std::size_t epoch) {
    if (!contains(config.histogram_epochs, epoch)) return;
    if (pairs.empty()) {
      Rng rng = derive_rng(config.seed(), "diagnostics.pairs");
      pairs = sample_unobserved_pairs(splits.train, config.histogram_samples, rng);
    }
    rec.histograms.push_back(
        score_histogram(trainer.params(), pairs, config.histogram_bins, reference_marker, epoch));
    if (!reference_marker) reference_marker = rec.histograms.back().marker;
  };
  snapshot(0);

  ParamStore best_params = trainer.params();
  OptimizerState best_optimizer = trainer.optimizer();
  rec.best_validation = -std::numeric_limits<double>::infinity();
  std::vector<FirstPassStats> first_pass;
  std::vector<OverlapStat> overlaps;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    EpochStats stats = trainer.run_epoch();
    EpochRecord er;
    er.epoch = epoch;
    er.loss = stats.mean_loss;
    er.overlap = stats.overlap;
    er.mean_gain = stats.mean_gain;
    er.validation = validate(trainer.params());
    er.seconds = seconds_since(t_epoch);
    first_pass.push_back(stats.first_pass);
    if (stats.overlap.events) overlaps.push_back(stats.overlap);

    const double ndcg = er.validation.at(config.select_k).ndcg;
    if (ndcg > rec.best_validation) {
      rec.best_validation = ndcg;
      rec.best_epoch = epoch;
      best_params = trainer.params();
      best_optimizer = trainer.optimizer();
    }
    snapshot(epoch);
    if (hooks.on_epoch) hooks.on_epoch(er);
    rec.history.push_back(std::move(er));
    if (epoch - rec.best_epoch >= config.patience) break;
  }

  rec.minmax = minmax_curve(first_pass);
  rec.overlap = merge_overlap(overlaps);

  Evaluation test = evaluate(best_params, splits.test, test_exclude, config.eval_ks, method);
  rec.test = test.report;
  rec.test_hits = test.hits.at(config.select_k);

  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    rec.checkpoint_path = (dir / "checkpoint.bin").string();
    save_checkpoint({best_params, best_optimizer, config.seed(), rec.best_epoch}, rec.checkpoint_path);
    rec.seconds = seconds_since(t_run);
    emit_report(rec, ReportFormat::json, dir / "metrics.json");
    emit_report(rec, ReportFormat::csv, dir / "metrics.csv");
    emit_report(rec, ReportFormat::json, dir / "record.json", true);
    write_text(dir / "history.csv", history_csv(rec));
    write_text(dir / "config.txt", format_config(config));
    if (!rec.histograms.empty()) write_histograms_csv(dir / "histograms.csv", rec.histograms);
    write_minmax_csv(dir / "minmax.csv", rec.minmax);
    if (!overlaps.empty()) {
      overlaps.push_back(rec.overlap);
      write_overlap_csv(dir / "overlap.csv", overlaps);
    }
  }
  rec.seconds = seconds_since(t_run);
  return rec;
}

}  // namespace ansrec

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ansrec/runner.hpp"

namespace ansrec {

using nlohmann::json;

namespace {

json metrics_json(const MetricReport& r) {
  json rows = json::array();
  for (const auto& m : r.at_k)
    rows.push_back({{"k", m.k}, {"hit_ratio", m.hit_ratio}, {"recall", m.recall}, {"ndcg", m.ndcg}});
  return {{"evaluated_users", r.evaluated_users}, {"metrics", rows}};
}

MetricReport metrics_from(const json& j) {
  MetricReport r;
  r.evaluated_users = j.at("evaluated_users").get<std::size_t>();
  for (const auto& m : j.at("metrics"))
    r.at_k.push_back({m.at("k").get<std::size_t>(), m.at("hit_ratio").get<double>(),
                      m.at("recall").get<double>(), m.at("ndcg").get<double>()});
  return r;
}

json loss_json(const LossBreakdown& l) {
  return {{"bpr", l.bpr},     {"contrastive", l.contrastive}, {"disentangle", l.disentangle},
          {"l2", l.l2},       {"total", l.total},             {"gamma", l.gamma},
          {"lambda", l.lambda}};
}

LossBreakdown loss_from(const json& j) {
  return {j.at("bpr").get<double>(),   j.at("contrastive").get<double>(),
          j.at("disentangle").get<double>(), j.at("l2").get<double>(),
          j.at("total").get<double>(), j.at("gamma").get<double>(),
          j.at("lambda").get<double>()};
}

json overlap_json(const OverlapStat& o) {
  return {{"epoch_begin", o.epoch_begin}, {"epoch_end", o.epoch_end},
          {"agreements", o.agreements},   {"events", o.events},
          {"value", o.value}};
}

OverlapStat overlap_from(const json& j) {
  return {j.at("epoch_begin").get<std::size_t>(), j.at("epoch_end").get<std::size_t>(),
          j.at("agreements").get<std::size_t>(), j.at("events").get<std::size_t>(),
          j.at("value").get<double>()};
}

json record_json(const RunRecord& r, bool timing) {
  json config = json::object();
  for (const auto& [k, v] : config_entries(r.config))
    if (timing || k != "out") config[k] = v;

  json history = json::array();
  for (const auto& e : r.history) {
    json h = {{"epoch", e.epoch},
              {"validation", metrics_json(e.validation)},
              {"loss", loss_json(e.loss)},
              {"overlap", overlap_json(e.overlap)},
              {"mean_gain", e.mean_gain}};
    if (timing) h["seconds"] = e.seconds;
    history.push_back(std::move(h));
  }

  json hits = json::array();
  for (auto [u, i] : r.test_hits.hits) hits.push_back({u, i});

  json hists = json::array();
  for (const auto& h : r.histograms)
    hists.push_back({{"epoch", h.epoch},
                     {"edges", h.edges},
                     {"counts", h.counts},
                     {"samples", h.samples},
                     {"marker", h.marker},
                     {"fraction_below", h.fraction_below}});

  json minmax = json::array();
  for (const auto& p : r.minmax) minmax.push_back({{"epoch", p.epoch}, {"min", p.min}, {"max", p.max}});

  json j = {{"format", "ansrec-report/1"},
            {"seed", r.config.seed()},
            {"config", config},
            {"initial_validation", r.initial_validation},
            {"best_epoch", r.best_epoch},
            {"best_validation", r.best_validation},
            {"test", metrics_json(r.test)},
            {"test_hits", {{"method", r.test_hits.method}, {"k", r.test_hits.k}, {"pairs", hits}}},
            {"test_fingerprint", r.test_fingerprint},
            {"history", history},
            {"histograms", hists},
            {"minmax", minmax},
            {"overlap", overlap_json(r.overlap)}};
  if (timing) {
    j["seconds"] = r.seconds;
    j["checkpoint"] = r.checkpoint_path;
  }
  return j;
}

std::string metrics_csv(const RunRecord& r) {
  std::ostringstream out;
  out.precision(17);
  out << "split,k,metric,value\n";
  auto rows = [&](const char* split, const MetricReport& m) {
    for (const auto& x : m.at_k) {
      out << split << ',' << x.k << ",hit_ratio," << x.hit_ratio << '\n';
      out << split << ',' << x.k << ",recall," << x.recall << '\n';
      out << split << ',' << x.k << ",ndcg," << x.ndcg << '\n';
    }
  };
  rows("test", r.test);
  return out.str();
}

}  // namespace

std::string report_string(const RunRecord& record, ReportFormat format, bool include_timing) {
  if (format == ReportFormat::csv) return metrics_csv(record);
  return record_json(record, include_timing).dump(2) + "\n";
}

void emit_report(const RunRecord& record, ReportFormat format, const std::filesystem::path& path,
                 bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report " + path.string());
  out << report_string(record, format, include_timing);
  if (!out) throw std::runtime_error("failed writing report " + path.string());
}

RunRecord parse_report(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "ansrec-report/1") throw std::runtime_error("not an ansrec report");

  RunRecord r;
  for (const auto& [k, v] : j.at("config").items()) set_config_value(r.config, k, v.get<std::string>());
  r.initial_validation = j.at("initial_validation").get<double>();
  r.best_epoch = j.at("best_epoch").get<std::size_t>();
  r.best_validation = j.at("best_validation").get<double>();
  r.test = metrics_from(j.at("test"));
  const auto& th = j.at("test_hits");
  r.test_hits.method = th.at("method").get<std::string>();
  r.test_hits.k = th.at("k").get<std::size_t>();
  for (const auto& p : th.at("pairs")) r.test_hits.hits.emplace_back(p.at(0).get<UserId>(), p.at(1).get<ItemId>());
  r.test_fingerprint = j.at("test_fingerprint").get<std::uint64_t>();
  for (const auto& h : j.at("history")) {
    EpochRecord e;
    e.epoch = h.at("epoch").get<std::size_t>();
    e.validation = metrics_from(h.at("validation"));
    e.loss = loss_from(h.at("loss"));
    e.overlap = overlap_from(h.at("overlap"));
    e.mean_gain = h.at("mean_gain").get<double>();
    e.seconds = h.value("seconds", 0.0);
    r.history.push_back(std::move(e));
  }
  for (const auto& h : j.at("histograms")) {
    ScoreHistogram s;
    s.epoch = h.at("epoch").get<std::size_t>();
    s.edges = h.at("edges").get<std::vector<double>>();
    s.counts = h.at("counts").get<std::vector<std::size_t>>();
    s.samples = h.at("samples").get<std::size_t>();
    s.marker = h.at("marker").get<double>();
    s.fraction_below = h.at("fraction_below").get<double>();
    r.histograms.push_back(std::move(s));
  }
  for (const auto& p : j.at("minmax"))
    r.minmax.push_back({p.at("epoch").get<std::size_t>(), p.at("min").get<double>(), p.at("max").get<double>()});
  r.overlap = overlap_from(j.at("overlap"));
  r.seconds = j.value("seconds", 0.0);
  r.checkpoint_path = j.value("checkpoint", "");
  return r;
}

RunRecord load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

MetricReport parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "split,k,metric,value")
    throw std::runtime_error("metrics CSV: unexpected header");
  MetricReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string split, k_text, metric, value;
    std::getline(row, split, ',');
    std::getline(row, k_text, ',');
    std::getline(row, metric, ',');
    std::getline(row, value, ',');
    if (split != "test") continue;
    const std::size_t k = std::stoull(k_text);
    const double v = std::stod(value);
    auto it = std::find_if(r.at_k.begin(), r.at_k.end(), [&](const MetricsAtK& m) { return m.k == k; });
    if (it == r.at_k.end()) {
      r.at_k.push_back({k, 0, 0, 0});
      it = r.at_k.end() - 1;
    }
    if (metric == "hit_ratio") it->hit_ratio = v;
    else if (metric == "recall") it->recall = v;
    else if (metric == "ndcg") it->ndcg = v;
    else throw std::runtime_error("metrics CSV: unknown metric `" + metric + "`");
  }
  return r;
}

RunComparison compare_runs(std::span<const RunRecord> records, std::span<const std::string> names) {
  if (records.empty()) throw std::invalid_argument("compare_runs: no records");
  if (names.size() != records.size()) throw std::invalid_argument("compare_runs: one name per record");
  for (const auto& r : records)
    if (r.test_fingerprint != records[0].test_fingerprint)
      throw std::invalid_argument("compare_runs: records were evaluated on different test splits");

  RunComparison cmp;
  cmp.names.assign(names.begin(), names.end());
  cmp.k = records[0].test_hits.k;
  const std::size_t n = records.size();
  cmp.per.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t x = 0; x < n; ++x) {
    if (records[x].test_hits.k != cmp.k)
      throw std::invalid_argument("compare_runs: hit sets recorded at different K");
    for (std::size_t y = 0; y < n; ++y) cmp.per[x][y] = per(records[x].test_hits, records[y].test_hits);
  }
  for (const auto& r : records) {
    std::vector<MetricsAtK> row;
    for (const auto& m : r.test.at_k) {
      const auto& base = records[0].test.at(m.k);
      row.push_back({m.k, m.hit_ratio - base.hit_ratio, m.recall - base.recall, m.ndcg - base.ndcg});
    }
    cmp.deltas.push_back(std::move(row));
  }
  return cmp;
}

std::string format_comparison(const RunComparison& cmp) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "PER@" << cmp.k << " (row x, column y: share of x's hits that y misses)\n";
  out << std::setw(12) << "";
  for (const auto& n : cmp.names) out << std::setw(12) << n;
  out << '\n';
  for (std::size_t x = 0; x < cmp.names.size(); ++x) {
    out << std::setw(12) << cmp.names[x];
    for (double v : cmp.per[x]) out << std::setw(12) << v;
    out << '\n';
  }
  out << "\nmetric deltas vs " << cmp.names.front() << '\n';
  out << std::setw(12) << "run" << std::setw(6) << "k" << std::setw(12) << "hit" << std::setw(12)
      << "recall" << std::setw(12) << "ndcg\n";
  for (std::size_t x = 0; x < cmp.names.size(); ++x)
    for (const auto& m : cmp.deltas[x])
      out << std::setw(12) << cmp.names[x] << std::setw(6) << m.k << std::showpos << std::setw(12)
          << m.hit_ratio << std::setw(12) << m.recall << std::setw(12) << m.ndcg << std::noshowpos
          << '\n';
  return out.str();
}

}  // namespace ansrec

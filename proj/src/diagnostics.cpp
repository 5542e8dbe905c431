#include "ansrec/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ansrec/math.hpp"

namespace ansrec {

std::vector<std::pair<UserId, ItemId>> sample_unobserved_pairs(const InteractionSet& train,
                                                               std::size_t count, Rng& rng) {
  if (train.n_users == 0 || train.n_items == 0) throw std::invalid_argument("empty interaction set");
  std::size_t pool = 0;
  for (const auto& items : train.user_items) pool += train.n_items - items.size();
  if (pool == 0) throw std::invalid_argument("no unobserved pairs to sample");

  std::uniform_int_distribution<UserId> pick_user(0, static_cast<UserId>(train.n_users) - 1);
  std::uniform_int_distribution<ItemId> pick_item(0, static_cast<ItemId>(train.n_items) - 1);
  std::vector<std::pair<UserId, ItemId>> out;
  out.reserve(count);
  while (out.size() < count) {
    const UserId u = pick_user(rng);
    const ItemId i = pick_item(rng);
    if (!train.contains(u, i)) out.emplace_back(u, i);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile rank must lie in (0, 1]");
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

ScoreHistogram score_histogram(const ParamStore& params,
                               std::span<const std::pair<UserId, ItemId>> pairs, std::size_t n_bins,
                               std::optional<double> marker, std::size_t epoch) {
  if (pairs.empty()) throw std::invalid_argument("score_histogram: empty pair sample");
  if (n_bins < 2) throw std::invalid_argument("score_histogram: need at least two bins");

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (auto [u, i] : pairs) scores.push_back(score(params.user_emb.row(u), params.item_emb.row(i)));
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) hi = lo + 1.0;

  ScoreHistogram h;
  h.epoch = epoch;
  h.samples = scores.size();
  h.edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t b = 0; b <= n_bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  h.counts.assign(n_bins, 0);
  for (double s : scores) {
    auto b = static_cast<std::size_t>((s - lo) / width);
    h.counts[std::min(b, n_bins - 1)]++;
  }
  h.marker = marker.value_or(percentile(scores, 0.8));
  const auto below = std::count_if(scores.begin(), scores.end(), [&](double s) { return s <= h.marker; });
  h.fraction_below = static_cast<double>(below) / static_cast<double>(scores.size());
  return h;
}

void FirstPassStats::add(std::span<const double> candidate_scores) {
  if (candidate_scores.empty()) return;
  const auto [lo, hi] = std::minmax_element(candidate_scores.begin(), candidate_scores.end());
  sum_min += *lo;
  sum_max += *hi;
  ++draws;
}

std::vector<MinMaxPoint> minmax_curve(std::span<const FirstPassStats> epochs) {
  std::vector<MinMaxPoint> out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : epochs) {
    if (e.draws == 0) continue;
    const double n = static_cast<double>(e.draws);
    out.push_back({e.epoch, e.sum_min / n, e.sum_max / n});
    lo = std::min(lo, out.back().min);
    hi = std::max(hi, out.back().max);
  }
  if (out.empty()) throw std::invalid_argument("minmax_curve: no candidate draws recorded");
  const double span = hi - lo;
  for (auto& p : out) {
    p.min = span > 0 ? (p.min - lo) / span : 0.0;
    p.max = span > 0 ? (p.max - lo) / span : 0.0;
  }
  return out;
}

OverlapStat overlap_ratio(std::span<const std::pair<ItemId, ItemId>> paired) {
  OverlapStat s;
  s.events = paired.size();
  for (auto [a, b] : paired) s.agreements += a == b ? 1 : 0;
  s.value = s.events ? static_cast<double>(s.agreements) / static_cast<double>(s.events) : 0.0;
  return s;
}

OverlapStat merge_overlap(std::span<const OverlapStat> parts) {
  OverlapStat s;
  if (parts.empty()) return s;
  s.epoch_begin = parts.front().epoch_begin;
  s.epoch_end = parts.front().epoch_end;
  for (const auto& p : parts) {
    s.epoch_begin = std::min(s.epoch_begin, p.epoch_begin);
    s.epoch_end = std::max(s.epoch_end, p.epoch_end);
    s.agreements += p.agreements;
    s.events += p.events;
  }
  s.value = s.events ? static_cast<double>(s.agreements) / static_cast<double>(s.events) : 0.0;
  return s;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

void write_histograms_csv(const std::filesystem::path& path, std::span<const ScoreHistogram> hists) {
  auto out = open_out(path);
  out << "epoch,bin_lo,bin_hi,count\n";
  for (const auto& h : hists)
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      out << h.epoch << ',' << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
}

void write_minmax_csv(const std::filesystem::path& path, std::span<const MinMaxPoint> curve) {
  auto out = open_out(path);
  out << "epoch,min,max\n";
  for (const auto& p : curve) out << p.epoch << ',' << p.min << ',' << p.max << '\n';
}

void write_overlap_csv(const std::filesystem::path& path, std::span<const OverlapStat> stats) {
  auto out = open_out(path);
  out << "epoch_begin,epoch_end,agreements,events,overlap\n";
  for (const auto& s : stats)
    out << s.epoch_begin << ',' << s.epoch_end << ',' << s.agreements << ',' << s.events << ','
        << s.value << '\n';
}

std::string render_histograms_svg(std::span<const ScoreHistogram> hists) {
  constexpr double panel_w = 260, panel_h = 180, pad = 30;
  const double width = pad + static_cast<double>(hists.size()) * (panel_w + pad);
  const double height = panel_h + 2 * pad + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t h = 0; h < hists.size(); ++h) {
    const auto& hist = hists[h];
    const double x0 = pad + static_cast<double>(h) * (panel_w + pad);
    const double y0 = pad;
    const std::size_t peak = *std::max_element(hist.counts.begin(), hist.counts.end());
    const double lo = hist.edges.front(), hi = hist.edges.back();
    const double bar_w = panel_w / static_cast<double>(hist.counts.size());
    // Shade everything at or below the marker.
    const double mx = std::clamp((hist.marker - lo) / (hi - lo), 0.0, 1.0) * panel_w;
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << mx << "\" height=\"" << panel_h
        << "\" fill=\"#f8d7e3\"/>\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      const double bh = peak ? panel_h * static_cast<double>(hist.counts[b]) / static_cast<double>(peak) : 0;
      svg << "<rect x=\"" << x0 + bar_w * static_cast<double>(b) << "\" y=\"" << y0 + panel_h - bh
          << "\" width=\"" << bar_w << "\" height=\"" << bh << "\" fill=\"#4a72b0\"/>\n";
    }
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << panel_w << "\" height=\""
        << panel_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << x0 << "\" y=\"" << y0 - 8 << "\">epoch " << hist.epoch << " (below marker "
        << std::round(hist.fraction_below * 1000) / 10 << "%)</text>\n";
    svg << "<text x=\"" << x0 << "\" y=\"" << y0 + panel_h + 14 << "\">" << lo << "</text>\n";
    svg << "<text x=\"" << x0 + panel_w << "\" y=\"" << y0 + panel_h + 14
        << "\" text-anchor=\"end\">" << hi << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_minmax_svg(std::span<const MinMaxPoint> curve) {
  constexpr double w = 420, h = 240, pad = 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * pad << "\" height=\""
      << h + 2 * pad << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (!curve.empty()) {
    const double e0 = static_cast<double>(curve.front().epoch);
    const double e1 = std::max(static_cast<double>(curve.back().epoch), e0 + 1);
    auto line = [&](auto value, const char* colour) {
      svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
      for (const auto& p : curve)
        svg << pad + w * (static_cast<double>(p.epoch) - e0) / (e1 - e0) << ','
            << pad + h * (1.0 - value(p)) << ' ';
      svg << "\"/>\n";
    };
    line([](const MinMaxPoint& p) { return p.max; }, "#c0392b");
    line([](const MinMaxPoint& p) { return p.min; }, "#2c7fb8");
  }
  svg << "<text x=\"" << pad << "\" y=\"" << pad - 10
      << "\">normalised first-pass candidate scores (red: max, blue: min)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ansrec

#include "ansrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ansrec/rng.hpp"

namespace ansrec {

bool InteractionSet::contains(UserId u, ItemId i) const {
  if (u < 0 || static_cast<std::size_t>(u) >= user_items.size()) return false;
  const auto& items = user_items[static_cast<std::size_t>(u)];
  return std::binary_search(items.begin(), items.end(), i);
}

void reindex(InteractionSet& set) {
  std::sort(set.interactions.begin(), set.interactions.end(),
            [](const Interaction& a, const Interaction& b) {
              return a.user != b.user ? a.user < b.user : a.item < b.item;
            });
  set.user_items.assign(set.n_users, {});
  for (const auto& x : set.interactions)
    set.user_items[static_cast<std::size_t>(x.user)].push_back(x.item);
}

InteractionSet build_interaction_set(std::span<const RawInteraction> raw, bool has_timestamps) {
  InteractionSet set;
  set.has_timestamps = has_timestamps;
  std::unordered_map<std::string, UserId> users;
  std::unordered_map<std::string, ItemId> items;
  std::unordered_map<std::uint64_t, std::size_t> seen;

  for (const auto& r : raw) {
    if (r.user_key.empty() || r.item_key.empty())
      throw std::invalid_argument("interaction with empty user or item key");
    auto [uit, unew] = users.try_emplace(r.user_key, static_cast<UserId>(users.size()));
    if (unew) set.user_keys.push_back(r.user_key);
    auto [iit, inew] = items.try_emplace(r.item_key, static_cast<ItemId>(items.size()));
    if (inew) set.item_keys.push_back(r.item_key);

    const Timestamp ts = r.timestamp.value_or(0);
    const std::uint64_t key = (static_cast<std::uint64_t>(uit->second) << 32) |
                              static_cast<std::uint32_t>(iit->second);
    auto [sit, snew] = seen.try_emplace(key, set.interactions.size());
    if (snew) {
      set.interactions.push_back({uit->second, iit->second, ts});
    } else {
      auto& kept = set.interactions[sit->second];
      kept.timestamp = std::min(kept.timestamp, ts);
    }
  }
  set.n_users = users.size();
  set.n_items = items.size();
  reindex(set);
  return set;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<RawInteraction> parse_interactions(std::istream& in, bool has_timestamp) {
  std::vector<RawInteraction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty() || fields.front().starts_with('#')) continue;
    const std::size_t want = has_timestamp ? 3 : 2;
    if (fields.size() < want || fields.size() > 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           (has_timestamp ? "`user item timestamp`" : "`user item [timestamp]`"),
                       line_no);
    }
    RawInteraction r{std::string(fields[0]), std::string(fields[1]), std::nullopt};
    if (fields.size() == 3) {
      Timestamp ts = 0;
      auto sv = fields[2];
      auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), ts);
      if (ec != std::errc{} || ptr != sv.data() + sv.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad timestamp `" +
                             std::string(sv) + "`",
                         line_no);
      r.timestamp = ts;
    }
    out.push_back(std::move(r));
  }
  return out;
}

InteractionSet ingest_interactions(const std::filesystem::path& path, bool has_timestamp) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file " + path.string());
  auto raw = parse_interactions(in, has_timestamp);
  if (raw.empty()) throw std::runtime_error("interaction file " + path.string() + " is empty");
  return build_interaction_set(raw, has_timestamp);
}

void write_remap_tables(const InteractionSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dump = [](const std::filesystem::path& p, const std::vector<std::string>& keys) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    for (std::size_t i = 0; i < keys.size(); ++i) out << i << ' ' << keys[i] << '\n';
  };
  dump(dir / "users.map", set.user_keys);
  dump(dir / "items.map", set.item_keys);
}

void write_interactions(const InteractionSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& x : set.interactions)
    out << x.user << ' ' << x.item << ' ' << x.timestamp << '\n';
}

namespace {

InteractionSet empty_like(const InteractionSet& set) {
  InteractionSet out;
  out.n_users = set.n_users;
  out.n_items = set.n_items;
  out.has_timestamps = set.has_timestamps;
  out.user_keys = set.user_keys;
  out.item_keys = set.item_keys;
  return out;
}

// Drops test interactions whose user or item never occurs in train.
void drop_cold_start(InteractionSet& held_out, const InteractionSet& train) {
  std::vector<char> user_seen(train.n_users, 0), item_seen(train.n_items, 0);
  for (const auto& x : train.interactions) {
    user_seen[static_cast<std::size_t>(x.user)] = 1;
    item_seen[static_cast<std::size_t>(x.item)] = 1;
  }
  std::erase_if(held_out.interactions, [&](const Interaction& x) {
    return !user_seen[static_cast<std::size_t>(x.user)] ||
           !item_seen[static_cast<std::size_t>(x.item)];
  });
}

void finish(Splits& s) {
  reindex(s.train);
  drop_cold_start(s.test, s.train);
  reindex(s.validation);
  reindex(s.test);
}

}  // namespace

Splits split_by_timestamp(const InteractionSet& set, Timestamp cutoff, double val_fraction,
                          std::uint64_t seed) {
  if (!set.has_timestamps) throw std::invalid_argument("timestamp split needs timestamps");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  if (set.interactions.empty()) throw std::invalid_argument("degenerate split: no interactions");

  const auto [lo, hi] = std::minmax_element(
      set.interactions.begin(), set.interactions.end(),
      [](const Interaction& a, const Interaction& b) { return a.timestamp < b.timestamp; });
  if (cutoff < lo->timestamp || cutoff >= hi->timestamp)
    throw std::invalid_argument("degenerate split: cutoff " + std::to_string(cutoff) +
                                " outside observed range [" + std::to_string(lo->timestamp) +
                                ", " + std::to_string(hi->timestamp) + ")");

  Splits s{empty_like(set), empty_like(set), empty_like(set), SplitProtocol::timestamp_cut, cutoff};
  std::vector<Interaction> before;
  for (const auto& x : set.interactions)
    (x.timestamp <= cutoff ? before : s.test.interactions).push_back(x);

  Rng rng = derive_rng(seed, "split.timestamp");
  std::shuffle(before.begin(), before.end(), rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(before.size())));
  s.validation.interactions.assign(before.begin(), before.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.interactions.assign(before.begin() + static_cast<std::ptrdiff_t>(n_val), before.end());
  finish(s);
  return s;
}

Splits split_random(const InteractionSet& set, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be non-negative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");

  Splits s{empty_like(set), empty_like(set), empty_like(set), SplitProtocol::random, 0};
  std::vector<std::vector<Interaction>> per_user(set.n_users);
  for (const auto& x : set.interactions) per_user[static_cast<std::size_t>(x.user)].push_back(x);

  Rng rng = derive_rng(seed, "split.random");
  for (auto& mine : per_user) {
    const std::size_t n = mine.size();
    if (n < 3) {
      s.train.interactions.insert(s.train.interactions.end(), mine.begin(), mine.end());
      continue;
    }
    std::shuffle(mine.begin(), mine.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(ratios[2] * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
    while (n_test + n_val >= n) {
      if (n_val >= n_test && n_val > 0) --n_val;
      else --n_test;
    }
    auto it = mine.begin();
    s.test.interactions.insert(s.test.interactions.end(), it, it + static_cast<std::ptrdiff_t>(n_test));
    it += static_cast<std::ptrdiff_t>(n_test);
    s.validation.interactions.insert(s.validation.interactions.end(), it,
                                     it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    s.train.interactions.insert(s.train.interactions.end(), it, mine.end());
  }
  finish(s);
  return s;
}

InteractionSet make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_users == 0 || spec.n_items == 0 || spec.rank == 0)
    throw std::invalid_argument("synthetic dataset needs users, items and rank");
  if (spec.per_user > spec.n_items)
    throw std::invalid_argument("per_user exceeds item count");

  Rng rng = derive_rng(seed, "synthetic");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(std::sqrt(static_cast<double>(spec.rank))));
  const auto rank = static_cast<Eigen::Index>(spec.rank);
  Matrix users(static_cast<Eigen::Index>(spec.n_users), rank);
  Matrix items(static_cast<Eigen::Index>(spec.n_items), rank);
  for (Eigen::Index i = 0; i < users.size(); ++i) users.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < items.size(); ++i) items.data()[i] = normal(rng);

  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  std::uniform_int_distribution<Timestamp> clock(0, 1'000'000);
  const Matrix affinity = users * items.transpose() / spec.temperature;

  std::vector<RawInteraction> raw;
  raw.reserve(spec.n_users * spec.per_user);
  std::vector<std::pair<double, std::size_t>> keys(spec.n_items);
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    for (std::size_t i = 0; i < spec.n_items; ++i)
      keys[i] = {affinity(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) + gumbel(rng), i};
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(spec.per_user),
                      keys.end(), [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    for (std::size_t k = 0; k < spec.per_user; ++k)
      raw.push_back({"u" + std::to_string(u), "i" + std::to_string(keys[k].second), clock(rng)});
  }
  return build_interaction_set(raw, true);
}

}  // namespace ansrec

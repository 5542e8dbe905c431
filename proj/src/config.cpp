#include "ansrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ansrec {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument("config key `" + key + "`: cannot parse `" + value + "`");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key `" + key + "`: expected true/false, got `" + value + "`");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
  return out.str();
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  auto& t = c.trainer;
  if (key == "data") c.data = value;
  else if (key == "has_timestamp") c.has_timestamp = parse_bool(key, value);
  else if (key == "split") {
    if (value == "random") c.split = SplitProtocol::random;
    else if (value == "timestamp") c.split = SplitProtocol::timestamp_cut;
    else throw std::invalid_argument("config key `split`: expected random|timestamp");
  } else if (key == "split_ratios") {
    auto r = parse_list<double>(key, value);
    if (r.size() != 3) throw std::invalid_argument("split_ratios needs three values");
    c.split_ratios = {r[0], r[1], r[2]};
  } else if (key == "cutoff") c.cutoff = parse_number<Timestamp>(key, value);
  else if (key == "val_fraction") c.val_fraction = parse_number<double>(key, value);
  else if (key == "synthetic_users") c.synthetic.n_users = parse_number<std::size_t>(key, value);
  else if (key == "synthetic_items") c.synthetic.n_items = parse_number<std::size_t>(key, value);
  else if (key == "synthetic_rank") c.synthetic.rank = parse_number<std::size_t>(key, value);
  else if (key == "synthetic_per_user") c.synthetic.per_user = parse_number<std::size_t>(key, value);
  else if (key == "synthetic_temperature") c.synthetic.temperature = parse_number<double>(key, value);
  else if (key == "data_seed") c.data_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "sampler") t.sampler = parse_sampler_kind(value);
  else if (key == "dim") t.dim = parse_number<std::size_t>(key, value);
  else if (key == "lr") t.adam.lr = parse_number<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lambda") t.weights.lambda = parse_number<double>(key, value);
  else if (key == "M") t.candidates = parse_number<std::size_t>(key, value);
  else if (key == "gamma") t.weights.gamma = parse_number<double>(key, value);
  else if (key == "epsilon") t.ans.epsilon = parse_number<double>(key, value);
  else if (key == "noise_high") t.ans.magnitude.noise_high = parse_number<double>(key, value);
  else if (key == "mag_clamp") t.ans.magnitude.clamp = parse_number<double>(key, value);
  else if (key == "freeze_gates") t.freeze_gates = parse_bool(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_number<std::size_t>(key, value);
  else if (key == "patience") c.patience = parse_number<std::size_t>(key, value);
  else if (key == "eval_ks") c.eval_ks = parse_list<std::size_t>(key, value);
  else if (key == "select_k") c.select_k = parse_number<std::size_t>(key, value);
  else if (key == "histogram_epochs") c.histogram_epochs = parse_list<std::size_t>(key, value);
  else if (key == "histogram_bins") c.histogram_bins = parse_number<std::size_t>(key, value);
  else if (key == "histogram_samples") c.histogram_samples = parse_number<std::size_t>(key, value);
  else if (key == "out") c.out = value;
  else throw std::invalid_argument("unknown config key `" + key + "`");
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  const auto& t = c.trainer;
  return {
      {"data", c.data},
      {"has_timestamp", c.has_timestamp ? "true" : "false"},
      {"split", c.split == SplitProtocol::random ? "random" : "timestamp"},
      {"split_ratios", join(std::vector<double>(c.split_ratios.begin(), c.split_ratios.end()))},
      {"cutoff", std::to_string(c.cutoff)},
      {"val_fraction", num(c.val_fraction)},
      {"synthetic_users", std::to_string(c.synthetic.n_users)},
      {"synthetic_items", std::to_string(c.synthetic.n_items)},
      {"synthetic_rank", std::to_string(c.synthetic.rank)},
      {"synthetic_per_user", std::to_string(c.synthetic.per_user)},
      {"synthetic_temperature", num(c.synthetic.temperature)},
      {"data_seed", std::to_string(c.effective_data_seed())},
      {"sampler", std::string(to_string(t.sampler))},
      {"dim", std::to_string(t.dim)},
      {"lr", num(t.adam.lr)},
      {"batch_size", std::to_string(t.batch_size)},
      {"lambda", num(t.weights.lambda)},
      {"M", std::to_string(t.candidates)},
      {"gamma", num(t.weights.gamma)},
      {"epsilon", num(t.ans.epsilon)},
      {"noise_high", num(t.ans.magnitude.noise_high)},
      {"mag_clamp", num(t.ans.magnitude.clamp)},
      {"freeze_gates", t.freeze_gates ? "true" : "false"},
      {"seed", std::to_string(t.seed)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"patience", std::to_string(c.patience)},
      {"eval_ks", join(c.eval_ks)},
      {"select_k", std::to_string(c.select_k)},
      {"histogram_epochs", join(c.histogram_epochs)},
      {"histogram_bins", std::to_string(c.histogram_bins)},
      {"histogram_samples", std::to_string(c.histogram_samples)},
      {"out", c.out},
  };
}

std::string format_config(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& [k, v] : config_entries(config)) out << k << " = " << v << '\n';
  return out.str();
}

void RunConfig::validate() const {
  const auto& t = trainer;
  if (t.dim == 0) throw std::invalid_argument("dim must be at least 1");
  if (!(t.adam.lr >= 0.0)) throw std::invalid_argument("lr must be non-negative");
  if (t.batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (!(t.weights.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(t.weights.gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  if (!(t.ans.epsilon >= 0.0 && t.ans.epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (!(t.ans.magnitude.noise_high >= 0.0)) throw std::invalid_argument("noise_high must be non-negative");
  if (!(t.ans.magnitude.clamp > 0.0)) throw std::invalid_argument("mag_clamp must be positive");
  if (t.candidates == 0) throw std::invalid_argument("M must be at least 1");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be at least 1");
  if (eval_ks.empty()) throw std::invalid_argument("eval_ks must not be empty");
  for (auto k : eval_ks)
    if (k == 0) throw std::invalid_argument("eval_ks entries must be at least 1");
  if (std::find(eval_ks.begin(), eval_ks.end(), select_k) == eval_ks.end())
    throw std::invalid_argument("select_k must be one of eval_ks");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must lie in [0, 1)");
  if (histogram_bins < 2) throw std::invalid_argument("histogram_bins must be at least 2");
  if (data.empty()) throw std::invalid_argument("data must name a file or `synthetic`");
}

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected `key = value`");
    set_config_value(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

}  // namespace ansrec

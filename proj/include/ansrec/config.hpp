#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ansrec/dataset.hpp"
#include "ansrec/trainer.hpp"

namespace ansrec {

/// Everything a run needs. Defaults follow the reference protocol: d=64,
/// Adam lr 1e-3, batch 2048, L2 1e-4, noise on [0, 0.1].
struct RunConfig {
  // Data. `data = synthetic` generates the latent-factor dataset in-process.
  std::string data = "synthetic";
  bool has_timestamp = true;
  SplitProtocol split = SplitProtocol::random;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  Timestamp cutoff = 0;
  double val_fraction = 0.1;
  SyntheticSpec synthetic;
  std::optional<std::uint64_t> data_seed;  // dataset and split; defaults to `seed`

  TrainerConfig trainer;

  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::vector<std::size_t> eval_ks{10, 15, 20};
  std::size_t select_k = 20;

  std::vector<std::size_t> histogram_epochs;  // empty: no histograms
  std::size_t histogram_bins = 50;
  std::size_t histogram_samples = 100'000;

  std::string out;  // output directory; empty writes nothing

  std::uint64_t seed() const { return trainer.seed; }
  std::uint64_t effective_data_seed() const { return data_seed.value_or(trainer.seed); }
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` setting.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every key with its current value, in documentation order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::string format_config(const RunConfig& config);

}  // namespace ansrec

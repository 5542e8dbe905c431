#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ansrec/types.hpp"

namespace ansrec {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_number(line) {}
  std::size_t line_number;
};

struct RawInteraction {
  std::string user_key;
  std::string item_key;
  std::optional<Timestamp> timestamp;
};

struct Interaction {
  UserId user;
  ItemId item;
  Timestamp timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Dense, de-duplicated interaction log. One id space is shared by every
/// split derived from the same ingest, so `n_users`/`n_items` are the global
/// counts and `user_keys`/`item_keys` invert the remap.
struct InteractionSet {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  bool has_timestamps = false;
  std::vector<Interaction> interactions;
  std::vector<std::vector<ItemId>> user_items;  // sorted per user
  std::vector<std::string> user_keys;
  std::vector<std::string> item_keys;

  bool contains(UserId u, ItemId i) const;
  std::size_t size() const { return interactions.size(); }
};

/// Rebuilds `user_items` from `interactions` and sorts interactions by (user, item).
void reindex(InteractionSet& set);

/// Remaps keys in first-appearance order; duplicate (user, item) pairs keep
/// the earliest timestamp.
InteractionSet build_interaction_set(std::span<const RawInteraction> raw, bool has_timestamps);

std::vector<RawInteraction> parse_interactions(std::istream& in, bool has_timestamp);
InteractionSet ingest_interactions(const std::filesystem::path& path, bool has_timestamp);

/// Writes `users.map` and `items.map` (`internal_id original_key`) into `dir`.
void write_remap_tables(const InteractionSet& set, const std::filesystem::path& dir);
/// Writes remapped interactions as `user item timestamp` lines.
void write_interactions(const InteractionSet& set, const std::filesystem::path& path);

enum class SplitProtocol { timestamp_cut, random };

struct Splits {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
  SplitProtocol protocol = SplitProtocol::random;
  Timestamp cutoff = 0;
};

Splits split_by_timestamp(const InteractionSet& set, Timestamp cutoff, double val_fraction,
                          std::uint64_t seed);

Splits split_random(const InteractionSet& set, std::array<double, 3> ratios, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 500;
  std::size_t rank = 8;
  std::size_t per_user = 20;
  double temperature = 0.5;
};

/// Latent-factor ground truth: each user picks `per_user` distinct items
/// without replacement, with probability proportional to
/// exp(<x_u, y_i> / temperature) (Gumbel top-k).
InteractionSet make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace ansrec

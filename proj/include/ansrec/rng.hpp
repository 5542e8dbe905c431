#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace ansrec {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent stream from the root seed, a label and a list of
/// indices (epoch, step, element, ...). Streams with different labels never
/// share state, so adding a consumer does not shift any other stream.
inline Rng derive_rng(std::uint64_t root_seed, std::string_view label,
                      std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = mix64(root_seed ^ label_hash(label));
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace ansrec

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hetnet {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named substream, keyed by purpose and a tuple of indices.
/// Distinct (purpose, indices) pairs give unrelated streams, so adding
/// entities never perturbs the draws of existing ones.
inline std::uint64_t substream_seed(std::uint64_t base, std::string_view purpose,
                                    std::initializer_list<std::int64_t> ids) {
  std::uint64_t h = splitmix64(base);
  for (char ch : purpose) {
    h = splitmix64(h ^ static_cast<unsigned char>(ch));
  }
  for (std::int64_t id : ids) {
    h = splitmix64(h ^ static_cast<std::uint64_t>(id));
  }
  return h;
}

inline std::mt19937_64 substream(std::uint64_t base, std::string_view purpose,
                                 std::initializer_list<std::int64_t> ids) {
  return std::mt19937_64(substream_seed(base, purpose, ids));
}

}  // namespace hetnet

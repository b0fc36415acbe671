#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace pcc {

using Seed = std::uint64_t;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and an ordered key
/// path, e.g. (master, {stream_tag, k_index, w_index, replicate}). Results
/// depend only on the key values, never on evaluation order.
Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> keys) noexcept;

/// Stream identifiers used with derive_seed so that different consumers of
/// one master seed never share a stream.
namespace stream {
inline constexpr std::uint64_t cohort_rows = 0x636f686f7274ULL;
inline constexpr std::uint64_t outcomes = 0x6f7574636f6d65ULL;
inline constexpr std::uint64_t sampling = 0x73616d706c65ULL;
inline constexpr std::uint64_t surface_cell = 0x63656c6cULL;
inline constexpr std::uint64_t surface_srs = 0x737273ULL;
inline constexpr std::uint64_t replicate = 0x7265706cULL;
}  // namespace stream

/// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(Seed seed) noexcept;

  result_type operator()() noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal by the Marsaglia polar method. Implemented here rather
  /// than with std::normal_distribution so streams are identical across
  /// standard library implementations.
  double normal() noexcept;

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Maps 64 random bits to [0, 1).
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace pcc

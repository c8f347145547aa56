#pragma once

#include <cstdint>
#include <initializer_list>

namespace hrmsbo {

/// Counter/key hashing step (splitmix64). Used both as a seed expander and as
/// the mixing function for derived stream identifiers.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Collapse (seed, tags...) into a single stream identifier. Order-sensitive.
std::uint64_t mix_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

/// Map a 64-bit key to one standard normal draw. Pure function of the key, so
/// evaluations keyed by (run_seed, iteration, location, repeat) are identical
/// no matter which thread or schedule produced them.
double keyed_normal(std::uint64_t key);
/// Same, for a uniform draw on the open interval (0,1).
double keyed_uniform(std::uint64_t key);

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
/// Input must lie in (0,1).
double inverse_normal_cdf(double p);
/// Standard normal CDF and density.
double normal_cdf(double z);
double normal_pdf(double z);

/// Deterministic stream of uniforms/normals. All arithmetic is integer or
/// explicit double construction, so sequences are bit-stable across platforms
/// (std::normal_distribution is not, which is why it is not used anywhere).
class Rng {
 public:
  explicit Rng(std::uint64_t stream_id);

  /// Stream derived from a base seed plus structured tags.
  static Rng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  std::uint64_t next_u64();
  /// Uniform on [0,1).
  double uniform();
  /// Uniform on [lo,hi).
  double uniform(double lo, double hi);
  /// Standard normal via inverse CDF; never returns non-finite values.
  double normal();

  /// Independent child stream. Depends only on the parent's identity and the
  /// tag, not on how much of the parent has been consumed, so sibling streams
  /// can be created in any order.
  Rng fork(std::uint64_t tag) const;

  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t stream_id_;
  std::uint64_t s_[4];  // xoshiro256** state
};

}  // namespace hrmsbo

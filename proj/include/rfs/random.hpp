#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace rfs {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key is the master seed; the upper 64 bits of the 128-bit counter
/// select a stream, the lower 64 bits count blocks within it. Streams derived
/// with `stream()` never overlap, so Monte Carlo workers and per-step or
/// per-target draws stay reproducible regardless of scheduling.
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Independent generator with the same key and a different stream id.
  Philox stream(std::uint64_t stream_id) const { return Philox(seed_, stream_id); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform double in [0, 1) built from 53 random bits.
  double uniform();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  std::size_t used_ = 4;
};

/// Stream id from up to three small integers; used for (purpose, step, index) splits.
std::uint64_t stream_key(std::uint64_t purpose, std::uint64_t step, std::uint64_t index);

/// Poisson variate by sequential inversion; exact for the moderate means used here.
std::size_t sample_poisson(Philox& rng, double mean);
bool sample_bernoulli(Philox& rng, double p);
/// Index drawn with probability proportional to `weights` (nonnegative, positive sum).
std::size_t sample_categorical(Philox& rng, std::span<const double> weights);

}  // namespace rfs

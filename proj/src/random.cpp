#include "rfs/random.hpp"

#include <cmath>

#include "rfs/errors.hpp"

namespace rfs {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

void Philox::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox_block(ctr, key);
  ++block_;
  used_ = 0;
}

Philox::result_type Philox::operator()() {
  if (used_ == 4) refill();
  return buffer_[used_++];
}

double Philox::uniform() {
  const std::uint64_t hi = (*this)() >> 5;  // 27 bits
  const std::uint64_t lo = (*this)() >> 6;  // 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

std::uint64_t stream_key(std::uint64_t purpose, std::uint64_t step, std::uint64_t index) {
  return (purpose << 56) ^ ((step & 0xFFFFFFull) << 32) ^ (index & 0xFFFFFFFFull);
}

std::size_t sample_poisson(Philox& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ModelError("Poisson mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  // Inversion in log space keeps e^{-mean} from underflowing for large means.
  const double u = rng.uniform();
  double log_p = -mean;
  double cdf = std::exp(log_p);
  std::size_t k = 0;
  while (u >= cdf) {
    ++k;
    log_p += std::log(mean) - std::log(static_cast<double>(k));
    const double p = std::exp(log_p);
    cdf += p;
    if (p == 0.0 && static_cast<double>(k) > mean) break;
  }
  return k;
}

bool sample_bernoulli(Philox& rng, double p) { return rng.uniform() < p; }

std::size_t sample_categorical(Philox& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ModelError("categorical draw from weights with zero total");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Round-off: land on the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

}  // namespace rfs

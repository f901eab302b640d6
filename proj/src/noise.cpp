#include "qtraj/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtraj {

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

// 53 random bits mapped to the open interval (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::array<std::uint32_t, 4> draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                                  std::uint32_t lane) {
  // Lanes are folded into the top bits of the stream word.
  const std::uint64_t s = stream ^ (static_cast<std::uint64_t>(lane) << 56);
  return philox4x32({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                     static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)},
                    {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                       std::uint32_t lane) {
  const auto w = draw(seed, stream, counter, lane);
  return to_open_unit(w[0], w[1]);
}

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                      std::uint32_t lane) {
  // Box-Muller on the two 64-bit halves of one Philox block.
  const auto w = draw(seed, stream, counter, lane);
  const double u1 = to_open_unit(w[0], w[1]);
  const double u2 = to_open_unit(w[2], w[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NoiseProcess make_noise_process(std::uint64_t seed, std::uint64_t stream_id, double s0, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise process: dt must be positive");
  if (!(s0 >= 0.0)) throw std::invalid_argument("noise process: S0 must be nonnegative");
  return {seed, stream_id, std::sqrt(s0 / (2.0 * dt))};
}

double sample_noise(const NoiseProcess& np, std::uint64_t k) {
  if (np.sigma_step == 0.0) return 0.0;
  return np.sigma_step * counter_normal(np.seed, np.stream_id, k);
}

}  // namespace qtraj

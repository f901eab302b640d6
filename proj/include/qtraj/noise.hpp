#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream, counter), so trajectories are reproducible regardless of
// which worker runs them or in which order.

#include <array>
#include <cstdint>

namespace qtraj {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Uniform doubles in (0, 1) and standard normals keyed by (seed, stream, counter, lane).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                       std::uint32_t lane = 0);
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                      std::uint32_t lane = 0);

/// White detector noise discretized on a step of length dt: sigma_step =
/// sqrt(S0 / (2 dt)), so that <xi xi> = (S0/2) delta(t - t').
struct NoiseProcess {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double sigma_step = 0.0;
};

NoiseProcess make_noise_process(std::uint64_t seed, std::uint64_t stream_id, double s0, double dt);

/// xi_k for step k; identical for identical (seed, stream_id, k).
double sample_noise(const NoiseProcess& np, std::uint64_t k);

}  // namespace qtraj

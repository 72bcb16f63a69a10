#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace motionmix {

using Rng = std::mt19937_64;

// Streams are derived by feeding the 32-bit halves of (seed, stream) into a
// std::seed_seq. Conventions used across the library:
//   * per-record / per-chain randomness uses stream = record or chain index;
//   * whole-procedure randomness (shuffles, batch draws) uses one of the
//     reserved ids below, which sit far above any realistic index.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

namespace streams {
inline constexpr std::uint64_t kShuffle = 0xA11CE000'00000001ULL;
inline constexpr std::uint64_t kTrain = 0xA11CE000'00000002ULL;
inline constexpr std::uint64_t kInit = 0xA11CE000'00000003ULL;
inline constexpr std::uint64_t kExtractor = 0xA11CE000'00000004ULL;
inline constexpr std::uint64_t kMetrics = 0xA11CE000'00000005ULL;
// Editing draws its overwrite noise from chain + kEditOffset so that an empty
// mask consumes nothing from the sampling stream.
inline constexpr std::uint64_t kEditOffset = 0xED170000'00000000ULL;
}  // namespace streams

// SplitMix64 finalizer over (seed, purpose); gives unrelated sub-seeds for
// the stages of one run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

double standard_normal(Rng& rng);
void fill_standard_normal(Rng& rng, std::span<double> out);
// Uniform integer in [lo, hi], inclusive.
int uniform_int(Rng& rng, int lo, int hi);
double uniform01(Rng& rng);

}  // namespace motionmix

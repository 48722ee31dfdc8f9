#pragma once

#include <cstdint>
#include <random>

namespace radloc {

/// Named stream ids used by the CLI and the run drivers. All randomness in a
/// run flows from one root seed split into these streams, so any one stage
/// can be replayed independently of the others.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kMeasurement = 2;
inline constexpr std::uint64_t kResample = 3;
inline constexpr std::uint64_t kKde = 4;
inline constexpr std::uint64_t kMobility = 5;
inline constexpr std::uint64_t kBackground = 6;
inline constexpr std::uint64_t kAugment = 7;
inline constexpr std::uint64_t kDiagnostics = 8;
} // namespace streams

/// Deterministic random stream keyed by (seed, stream_id). Identical keys
/// reproduce identical draw sequences. Distributions are implemented here
/// rather than with std::*_distribution so that sequences are stable across
/// standard libraries, and so Poisson sampling is exact (no normal
/// approximation) at every mean — the dispersion tests depend on that.
class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream derived deterministically from this stream's identity.
  RandomStream substream(std::uint64_t child) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01();
  /// Uniform on [a, b).
  double uniform(double a, double b);
  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Box-Muller, spare cached).
  double normal();
  /// Exact Poisson sample. Inversion below mean 30, transformed rejection
  /// (Hormann's PTRS) above.
  std::int64_t poisson(double mean);

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace radloc

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcn {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sequence space too large to enumerate.
struct BudgetExceeded : Error {
  using Error::Error;
};

/// q(y) = 0 somewhere p(y) > 0, or a distribution lacks required support.
struct SupportViolation : Error {
  using Error::Error;
};

/// Target distribution has zero total mass (e.g. D identically zero).
struct DegenerateTarget : Error {
  using Error::Error;
};

/// Self-normalized update requested with all weights zero.
struct AllZeroWeights : Error {
  using Error::Error;
};

/// A cached MCTS decode was queried for a different context/seed.
struct StaleDecode : Error {
  using Error::Error;
};

/// Malformed configuration file or unknown key.
struct ConfigError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and up to three tags.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

/// Seeded random stream with portable double generation (does not rely on
/// implementation-defined std distributions, so identical seeds give
/// identical draws everywhere).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index draw from non-negative weights by inverse CDF; weights need not
  /// be normalized. Requires a positive total.
  int categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw Error("categorical draw from all-zero weights");
    const double u = uniform01() * total;
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = static_cast<int>(i);
      if (u < acc) return static_cast<int>(i);
    }
    return last_positive;  // u landed on the rounding edge
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Hashing for token-vector keys
// ---------------------------------------------------------------------------

struct TokenVecHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int t : v) h = splitmix64(h ^ (static_cast<std::uint64_t>(t) + 0x517cc1b727220a95ULL));
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Bounded parallelism
// ---------------------------------------------------------------------------

/// Worker cap from GCNLAB_THREADS (default: hardware concurrency).
int thread_cap();

/// Runs fn(0..n-1), possibly concurrently. Callers must make fn(i)
/// independent of execution order (e.g. per-index derived Rng streams).
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace gcn

#pragma once

// Reproducible random streams. Each stream is identified by (seed, stream id)
// so replicate r always sees the same draws regardless of scheduling. The
// transforms below are written out instead of using <random> distributions,
// whose output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace owsurv {

// Stream-id domains so different consumers never share draws.
enum class StreamDomain : std::uint64_t {
  replicate = 1,
  bootstrap = 2,
  calibration = 3,
  truth = 4,
  timepoints = 5,
  test = 99,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, StreamDomain domain = StreamDomain::replicate) {
    const auto dom = static_cast<std::uint64_t>(domain);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(dom)};
    engine_.seed(seq);
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace owsurv

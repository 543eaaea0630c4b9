#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "pidal/image.hpp"

namespace pidal {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 stream positioned by (seed, pixel). Draw k of pixel i depends
// only on (seed, i, k).
class PixelStream {
 public:
  PixelStream(std::uint64_t seed, std::uint64_t pixel)
      : state_(mix64(mix64(seed + kGolden) ^ (pixel * 0xD1B54A32D192ED03ULL + 1))) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    state_ += kGolden;
    const std::uint64_t bits = mix64(state_) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

double sample_by_inversion(double lambda, PixelStream& rng) {
  const double u = rng.uniform();
  double term = std::exp(-lambda);
  double cdf = term;
  double k = 0.0;
  // For lambda < 30 the tail mass past k = 200 is far below double resolution.
  while (u > cdf && k < 200.0) {
    k += 1.0;
    term *= lambda / k;
    cdf += term;
  }
  return k;
}

// Hormann's transformed rejection with squeeze (PTRS).
double sample_by_rejection(double lambda, PixelStream& rng) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace

Image poisson_sample(const Image& lambda, std::uint64_t seed) {
  lambda.require_nonnegative("poisson_sample");
  Image out(lambda.height(), lambda.width());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double rate = lambda[i];
    if (rate == 0.0) continue;
    PixelStream rng(seed, i);
    out[i] = rate < 30.0 ? sample_by_inversion(rate, rng) : sample_by_rejection(rate, rng);
  }
  return out;
}

}  // namespace pidal

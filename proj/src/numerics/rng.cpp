#include "numerics/rng.hpp"

#include <cmath>

#include "numerics/errors.hpp"

namespace reltrace {

namespace {

constexpr std::uint64_t kWeylIncrement = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngState::RngState(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  // Fold seed and stream through the finalizer so nearby ids decorrelate.
  counter_ = mix64(seed + kWeylIncrement) ^ mix64(stream + 0x62a9d9ed799705f5ULL);
}

std::uint64_t RngState::next_u64() {
  counter_ += kWeylIncrement;
  return mix64(counter_);
}

double RngState::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngState::uniform_below(std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_below: n must be > 0");
  // Rejection sampling over the largest multiple of n.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RngState::normal() {
  while (true) {
    const double u = 2.0 * uniform01() - 1.0;
    const double v = 2.0 * uniform01() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

Vec gaussian(RngState& rng, std::size_t n, double sigma) {
  if (sigma < 0.0) throw ValidationError("gaussian: sigma must be >= 0");
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.normal() * sigma;
  return out;
}

}  // namespace reltrace

#include "lssid/rng.hpp"

#include <cmath>
#include <numbers>

namespace lssid {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), key_(splitmix64_mix(seed ^ splitmix64_mix(stream + kGamma))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGamma);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

int CounterRng::categorical(const Vector& p) noexcept {
  const double x = uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < p.size(); ++i) {
    acc += p(i);
    if (x < acc) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(p.size());
}

}  // namespace lssid

#pragma once

#include "lssid/model.hpp"
#include "lssid/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lssid {

/// Aligned sample paths. Rows are time steps; q holds 1-based modes.
struct Dataset {
  Matrix y;               // T x n_y
  Matrix u;               // T x n_u
  std::vector<int> q;     // T
  Matrix y_noise_free;    // T x n_y, y minus F v; empty when unknown
  long t0 = 0;

  Eigen::Index length() const noexcept { return y.rows(); }
  Eigen::Index n_y() const noexcept { return y.cols(); }
  Eigen::Index n_u() const noexcept { return u.cols(); }

  /// Throws Error(DimensionMismatch / InvalidMode).
  void validate(int num_modes) const;

  /// Rows [begin, begin + count) as a new dataset.
  Dataset slice(Eigen::Index begin, Eigen::Index count) const;
};

struct InputDistribution {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  // Uniform bounds, applied per channel. Must be symmetric (zero mean).
  double low = -1.0;
  double high = 1.0;
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t length = 1000;
  std::size_t burn_in = 1000;
  InputDistribution input;
};

/// Covariance of i.i.d. U(low, high) channels: (high - low)^2 / 12 * I.
Matrix uniform_input_covariance(double low, double high, Eigen::Index n_u);

/// T i.i.d. mode draws with P(q = s) = p_s.
std::vector<int> sample_switching(const Vector& p, std::size_t T, CounterRng& rng);

/// Runs the switched recursion from x = 0, discards burn_in steps, and
/// returns the remaining `length` samples including the noise-free output
/// channel. Noise is Gaussian with E[v v^T | q = s] = Qv[s] / p_s.
/// Throws Error(InvalidModel) for unstable models or when a uniform input's
/// covariance disagrees with model.Qu.
Dataset simulate(const SwitchedModel& model, const SimConfig& cfg);

}  // namespace lssid

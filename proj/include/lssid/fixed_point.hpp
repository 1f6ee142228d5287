#pragma once

#include "lssid/linalg.hpp"

#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace lssid {

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 5000;
};

/// Outcome of a per-mode matrix fixed-point iteration. `delta_tail` keeps the
/// last few max-norm update sizes for diagnostics.
struct FixedPointReport {
  int iterations = 0;
  double last_delta = 0.0;
  std::vector<double> delta_tail;
};

using ModeFamily = std::vector<Matrix>;

/// Iterates X <- update(X) from `init` until the max-norm change drops below
/// opts.tol * max(1, max-norm of X). Throws Error(NonConvergence) carrying `what` and the final delta
/// when max_iter is exhausted or the iterate stops being finite.
ModeFamily iterate_fixed_point(const std::function<ModeFamily(const ModeFamily&)>& update, ModeFamily init,
                               const FixedPointOptions& opts, FixedPointReport& report, const std::string& what);

/// Solves P_s = p_s * sum_r (A_r P_r A_r^T / c_r + W_r) for the per-mode
/// matrices P_s, with c_r = scale[r]. Since P_s = p_s X for a common X, the
/// iteration converges iff sum_r (p_r / c_r) A_r (x) A_r is Schur; that is
/// checked up front and reported as Error(NonConvergence).
ModeFamily mode_weighted_lyapunov(const std::vector<Matrix>& A, const Vector& p, const Vector& scale,
                                  const std::vector<Matrix>& W, const FixedPointOptions& opts,
                                  FixedPointReport& report, const std::string& what);

}  // namespace lssid

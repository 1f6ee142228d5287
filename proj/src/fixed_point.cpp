#include "lssid/fixed_point.hpp"

#include "lssid/error.hpp"

#include <cmath>
#include <sstream>

namespace lssid {

namespace {

constexpr std::size_t kTailLength = 16;

double family_delta(const ModeFamily& a, const ModeFamily& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return d;
}

double family_size(const ModeFamily& a) {
  double m = 0.0;
  for (const Matrix& x : a) m = std::max(m, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  return m;
}

}  // namespace

ModeFamily iterate_fixed_point(const std::function<ModeFamily(const ModeFamily&)>& update, ModeFamily init,
                               const FixedPointOptions& opts, FixedPointReport& report, const std::string& what) {
  report = {};
  ModeFamily x = std::move(init);
  for (int it = 1; it <= opts.max_iter; ++it) {
    ModeFamily next = update(x);
    const double d = family_delta(next, x);
    x = std::move(next);
    report.iterations = it;
    report.last_delta = d;
    report.delta_tail.push_back(d);
    if (report.delta_tail.size() > kTailLength) report.delta_tail.erase(report.delta_tail.begin());
    if (!std::isfinite(d)) break;
    // Relative once the iterate is large, so that the stopping rule does not
    // depend on how the state basis is scaled.
    if (d < opts.tol * std::max(1.0, family_size(x))) return x;
  }
  std::ostringstream msg;
  msg << what << " did not converge after " << report.iterations << " iterations (last delta "
      << report.last_delta << ", tol " << opts.tol << ")";
  throw Error(ErrorCode::NonConvergence, msg.str());
}

ModeFamily mode_weighted_lyapunov(const std::vector<Matrix>& A, const Vector& p, const Vector& scale,
                                  const std::vector<Matrix>& W, const FixedPointOptions& opts,
                                  FixedPointReport& report, const std::string& what) {
  const auto D = static_cast<Eigen::Index>(A.size());
  if (p.size() != D || scale.size() != D || static_cast<Eigen::Index>(W.size()) != D) {
    throw Error(ErrorCode::DimensionMismatch, what + ": mode counts differ");
  }
  const auto n = A.front().rows();
  Matrix op = Matrix::Zero(n * n, n * n);
  for (Eigen::Index r = 0; r < D; ++r) {
    const Matrix& a = A[static_cast<std::size_t>(r)];
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) op.block(i * n, j * n, n, n) += (p(r) / scale(r)) * a(i, j) * a;
  }
  const double rho = spectral_radius(op);
  if (!(rho < 1.0)) {
    std::ostringstream msg;
    msg << what << ": recursion is not contracting (spectral radius " << rho << " >= 1)";
    report = {};
    throw Error(ErrorCode::NonConvergence, msg.str());
  }
  auto update = [&](const ModeFamily& P) {
    Matrix sum = Matrix::Zero(n, n);
    for (Eigen::Index r = 0; r < D; ++r) {
      const auto k = static_cast<std::size_t>(r);
      sum += A[k] * P[k] * A[k].transpose() / scale(r) + W[k];
    }
    ModeFamily out(static_cast<std::size_t>(D));
    for (Eigen::Index s = 0; s < D; ++s) out[static_cast<std::size_t>(s)] = p(s) * symmetrize(sum);
    return out;
  };
  return iterate_fixed_point(update, ModeFamily(static_cast<std::size_t>(D), Matrix::Zero(n, n)), opts, report, what);
}

}  // namespace lssid

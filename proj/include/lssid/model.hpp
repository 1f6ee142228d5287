#pragma once

#include "lssid/algebra.hpp"
#include "lssid/linalg.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lssid {

/// Noise-free switched system x+ = A_q x + B_q u, y = C x + D u. Carrier of
/// Markov functions M(eps) = D, M(sigma s) = C A_s B_sigma.
struct DeterministicModel {
  std::vector<Matrix> A;
  std::vector<Matrix> B;
  Matrix C;
  Matrix D;

  int num_modes() const noexcept { return static_cast<int>(A.size()); }
  Eigen::Index n_x() const noexcept { return C.cols(); }
  Eigen::Index n_y() const noexcept { return C.rows(); }
  Eigen::Index n_u() const noexcept { return D.cols(); }

  /// Throws Error(InvalidModel) on inconsistent shapes.
  void validate() const;
};

/// Stochastic switched system driven by i.i.d. modes:
///   x(t+1) = A_q x(t) + B_q u(t) + K_q v(t)
///   y(t)   = C x(t) + D u(t) + F v(t)
///
/// Noise covariances are stored as Qv[s] = p_s * E[v v^T | q = s]; the
/// helpers below convert to and from the conditional covariance.
struct SwitchedModel {
  std::vector<Matrix> A;
  std::vector<Matrix> B;
  std::vector<Matrix> K;
  Matrix C;
  Matrix D;
  Matrix F;
  Vector p;
  Matrix Qu;
  std::vector<Matrix> Qv;

  int num_modes() const noexcept { return static_cast<int>(A.size()); }
  Eigen::Index n_x() const noexcept { return C.cols(); }
  Eigen::Index n_y() const noexcept { return C.rows(); }
  Eigen::Index n_u() const noexcept { return D.cols(); }
  Eigen::Index n_noise() const noexcept { return F.cols(); }

  /// E[v v^T | q = s] = Qv[s] / p_s.
  Matrix conditional_noise_covariance(int mode) const;
  void set_conditional_noise_covariance(int mode, const Matrix& cov);

  /// Checks shapes, probabilities, SPD covariances and mean-square
  /// stability. Throws Error(InvalidModel / InvalidProbability).
  void validate() const;

  /// The deterministic part ({A_s}, {B_s}, C, D).
  DeterministicModel deterministic_part() const;

  /// Applies x -> T x: A -> T A T^-1, B -> T B, K -> T K, C -> C T^-1.
  SwitchedModel transformed(const Matrix& T) const;
};

/// A SwitchedModel whose noise is its own innovation: F = I, n_noise = n_y.
/// Qv[s] then holds p_s * E[e e^T | q = s].
class InnovationModel {
 public:
  InnovationModel() = default;
  /// Throws Error(InvalidModel) unless F is exactly the identity and every
  /// Qv[s] is SPD. Does not re-run the stability check.
  explicit InnovationModel(SwitchedModel model);

  const SwitchedModel& sys() const noexcept { return model_; }

  /// Markov function of ({A_s}, {[B_s K_s]}, C, [D I]); invariant under state
  /// isomorphism and the basis of model comparison.
  Matrix markov(const Word& w) const;

 private:
  SwitchedModel model_;
};

/// Spectral radius of sum_s p_s (A_s (x) A_s). A switched model is
/// mean-square stable iff this is < 1.
double stability_margin(std::span<const Matrix> A, const Vector& p);

/// M(eps) = D; M(sigma s) = C A_s B_sigma with sigma the FIRST letter.
Matrix markov_parameter(const DeterministicModel& m, const Word& w);

struct ReachObsRanks {
  int reach_rank = 0;
  int obs_rank = 0;
};

/// Ranks of the extended reachability matrix [A_w B_s]_{|w| < depth} and
/// observability matrix [C A_w]_{|w| < depth}. depth <= 0 means n_x.
ReachObsRanks reach_obs_ranks(const DeterministicModel& m, int depth = 0, double rank_tol = kRankTolerance);

struct IsomorphismResiduals {
  double A = 0.0;
  double B = 0.0;
  double K = 0.0;
  double C = 0.0;
  double D = 0.0;
  double max() const;
};

struct IsomorphismResult {
  std::optional<Matrix> T;  // set iff isomorphic within tolerance
  IsomorphismResiduals residuals;
  std::string diagnostic;
  bool isomorphic() const noexcept { return T.has_value(); }
};

/// Looks for T with T A1 T^-1 = A2, T B1 = B2, T K1 = K2, C1 T^-1 = C2,
/// D1 = D2 (max-norm residuals <= tol). T is solved from matched extended
/// reachability matrices of ({A_s}, {[B_s K_s]}) (observability when the
/// former are rank deficient), then verified on all five relations.
IsomorphismResult find_isomorphism(const SwitchedModel& m1, const SwitchedModel& m2, double tol,
                                   double rank_tol = kRankTolerance);

}  // namespace lssid

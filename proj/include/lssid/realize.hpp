#pragma once

#include "lssid/algebra.hpp"
#include "lssid/covariance.hpp"
#include "lssid/fixed_point.hpp"
#include "lssid/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lssid {

/// Realization of a Markov function from the Hankel blocks of `sel`:
///   A_s = H^-1 H_s,  B_s = H^-1 H_{alpha,s},  C = H_beta,  D = m_eps.
/// H must have numerical rank sel.dim() (relative tolerance rank_tol);
/// otherwise Error(SingularHankel) reports the rank found.
DeterministicModel ho_kalman(const Selection& sel, int num_modes, const MarkovFunction& markov, const Matrix& m_eps,
                             double rank_tol = kRankTolerance);
DeterministicModel ho_kalman(const Selection& sel, int num_modes, const WordTable& markov, const Matrix& m_eps,
                             double rank_tol = kRankTolerance);

/// The deterministic system ({sqrt(p_s) A_s}, {[sqrt(p_s) B_s, G_s]}, C, [D I])
/// whose Markov function is [Psi(w), lambda_ys(w)], plus the state
/// covariances P_s = E[x x^T [q = s]] it was built from.
struct AssociatedDlss {
  DeterministicModel model;
  std::vector<Matrix> P;
  FixedPointReport report;
};

/// Throws Error(InvalidModel) if `model` is not mean-square stable and
/// Error(NonConvergence) if the covariance iteration stalls.
AssociatedDlss associated_dlss(const SwitchedModel& model, const FixedPointOptions& opts = {});

/// Final state of the joint (P, Q, K) iteration of associated_slss.
struct KQIterationState {
  std::vector<Matrix> P;
  std::vector<Matrix> Q;
  std::vector<Matrix> K;
  FixedPointReport report;
};

struct AssociatedSlss {
  InnovationModel model;
  KQIterationState state;
};

/// Inverse of associated_dlss for innovation models. `dlss` carries the
/// scaled matrices ({A^_s}, {[B^_s G^_s]}, C^, [D^ I]) with n_u input
/// columns, t_ys the stochastic output covariances per mode. Checks that
/// sum_s A^_s (x) A^_s is Schur (else NonConvergence), iterates
///   Q_s = p_s T_s - C P_s C^T
///   K_s = (sqrt(p_s) G_s - A^_s P_s C^T / sqrt(p_s)) Q_s^-1
///   P_s <- p_s sum_r (A^_r P_r A^_r^T / p_r + K_r Q_r K_r^T)
/// and returns ({A^_s / sqrt(p_s)}, {B^_s / sqrt(p_s)}, {K_s}, C^, D^, I)
/// with Qv = Q. Throws Error(NotFullRank) when some Q_s is singular (smallest
/// singular value below q_guard relative to its norm) or not positive
/// definite at convergence.
AssociatedSlss associated_slss(const DeterministicModel& dlss, Eigen::Index n_u, const Vector& p,
                               std::span<const Matrix> t_ys, const Matrix& q_u, const FixedPointOptions& opts = {},
                               double q_guard = 1e-10, double q_reference = 0.0);

/// Psi(w) = lambda_yu(w) Q_u^-1 for every word of the table (including eps).
/// Throws Error(SingularMatrix) if Q_u is not invertible.
WordTable psi_uy(const CovarianceTable& table);

/// Covariances of the input-driven output y_d of a realization
/// ({A~_s}, {B~_s}, C~, D~) of Psi, in the same scaling as lambda_yy/t_yy.
struct InputDrivenCovariances {
  WordTable lambda;
  std::vector<Matrix> t;
  std::vector<Matrix> P;
  FixedPointReport report;
};

InputDrivenCovariances lambda_ydyd(const DeterministicModel& psi_model, const Matrix& q_u, const Vector& p,
                                   std::span<const Word> words, const FixedPointOptions& opts = {});

struct RealizationOptions {
  FixedPointOptions fixed_point;
  double rank_tol = kRankTolerance;
  double q_guard = 1e-10;
};

struct RealizationDiagnostics {
  int hankel_rank_psi = 0;
  int hankel_rank_markov = 0;
  Vector singular_values_psi;
  Vector singular_values_markov;
  FixedPointReport ydyd;
  FixedPointReport kq;
  double schur_radius = 0.0;
};

struct RealizationResult {
  InnovationModel model;
  DeterministicModel psi_model;     // realization of Psi
  DeterministicModel markov_model;  // realization of [Psi, lambda_ys]
  RealizationDiagnostics diagnostics;
};

/// Covariance realization: Psi from lambda_yu, a first Ho-Kalman step with
/// sel_bar, removal of the input-driven covariances, a second Ho-Kalman step
/// with sel and the innovation-form recovery. Errors carry a stage tag
/// ("psi", "ydyd", "markov", "innovation").
RealizationResult covariance_realization(const CovarianceTable& table, const Selection& sel,
                                         const Selection& sel_bar, const RealizationOptions& opts = {});

struct SearchOptions {
  /// Candidate words for u_i and v_j have length <= max_word_length.
  std::size_t max_word_length = 2;
  /// Maximum number of candidate pairs examined.
  std::size_t budget = 1000000;
  /// Number of qualifying selections to pass over before returning.
  std::size_t skip = 0;
  double rank_tol = kRankTolerance;
};

/// First (alpha, beta) of size n, enumerated in a fixed order, whose
/// Hankel matrix has numerical rank n. Candidate words u and v are
/// non-empty. Rows are (u, k) ordered by u then k;
/// columns are (s, v, l) ordered by the word s v then l; beta varies
/// fastest. Throws Error(NoSelectionFound) when the budget runs out.
Selection search_selection(const MarkovFunction& markov, int num_modes, int n, int n_y, int n_cols,
                           const SearchOptions& opts = {});

}  // namespace lssid

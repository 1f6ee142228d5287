#pragma once

#include "lssid/algebra.hpp"
#include "lssid/fixed_point.hpp"
#include "lssid/model.hpp"
#include "lssid/simulate.hpp"

#include <span>
#include <vector>

namespace lssid {

/// Covariances that drive the realization:
///   lambda_yu[w] = E[y(t) z^u_w(t)^T]   (n_y x n_u, includes the empty word)
///   lambda_yy[w] = E[y(t) z^y_w(t)^T]   (n_y x n_y, non-empty words)
///   t_yy[s]      = E[z^y_s(t) z^y_s(t)^T]
/// with z^b_w(t) = b(t - |w|) [q(t-|w|) .. q(t-1) = w] / sqrt(p_w).
struct CovarianceTable {
  int num_modes = 0;
  Eigen::Index n_y = 0;
  Eigen::Index n_u = 0;
  Vector p;
  Matrix q_u;
  WordTable lambda_yu;
  WordTable lambda_yy;
  std::vector<Matrix> t_yy;
  /// Words whose indicator never fired in the data; their entries are zero.
  std::vector<Word> degenerate;
  /// Number of averaged samples (0 for model-derived tables).
  std::size_t samples = 0;

  /// Throws Error(DimensionMismatch / InvalidProbability) on inconsistency.
  void validate() const;
};

/// Samples of z^b_w(t) for t = 0..T-1 (rows), zero where t < |w|. For the
/// empty word this is b itself.
Matrix z_process(const Matrix& b, std::span<const int> q, const Vector& p, const Word& w);

/// First averaged sample index: longest word in `words` plus one.
std::size_t estimation_start(std::span<const Word> words);

struct EstimatorOptions {
  /// Normalise z by observed mode frequencies instead of the given p.
  bool empirical_p = false;
  /// Samples per partial sum; partial sums are added in a fixed order so
  /// results do not depend on anything but the data and this value.
  std::size_t block_size = 4096;
  /// First averaged sample index; 0 selects estimation_start(words).
  std::size_t start = 0;
};

/// Observed mode frequencies over the whole dataset.
Vector empirical_mode_probabilities(std::span<const int> q, int num_modes);

/// Sample averages over t = N0..T-1 with N0 = estimation_start(words). The
/// empty word is always added to lambda_yu; t_yy is symmetrised.
/// Throws Error(InsufficientData) if no sample remains.
CovarianceTable empirical_covariances(const Dataset& data, const Vector& p, std::span<const Word> words,
                                      const EstimatorOptions& opts = {});

/// How the regression Gram matrix is turned back into covariances.
enum class GramModel {
  /// The sample Gram (1/n) Phi^T Phi: reproduces the direct estimates.
  Sample,
  /// For white inputs the u-regressors are orthogonal in expectation with
  /// Gram I (x) Q_u; using that limit removes the sample cross terms.
  WhiteInput,
};

struct LeastSquaresOptions {
  GramModel gram = GramModel::WhiteInput;
  bool empirical_p = false;
  /// Relative pivot threshold of the rank-revealing QR.
  double rank_tol = 1e-10;
};

struct LeastSquaresResult {
  CovarianceTable table;
  std::vector<Word> words_u;  // regressor blocks, empty word first
  std::vector<Word> words_y;
  Matrix theta_u;             // (|words_u| n_u) x n_y
  Matrix theta_y;             // (|words_y| n_y) x n_y
  Matrix cross_u;             // (1/n) Phi_u^T R
  Matrix cross_y;             // (1/n) Phi_y^T R
  /// max |(1/n) Phi^T Phi theta - (1/n) Phi^T R| over both regressions.
  double identity_residual = 0.0;
};

/// Regresses y(t) on the stacked z^u_w(t) (w in {eps} + words_u) and on
/// the stacked z^y_w(t) (w in words_y), then converts the coefficients
/// back to covariances through the chosen Gram model.
/// Throws Error(IllConditionedRegressor) if a regressor matrix is rank
/// deficient and Error(InsufficientData) if there are fewer samples than
/// regressor columns.
LeastSquaresResult least_squares_covariances(const Dataset& data, const Vector& p, std::span<const Word> words_u,
                                             std::span<const Word> words_y, const LeastSquaresOptions& opts = {});

/// Model-derived covariances together with the pieces they are built from.
struct ExactCovariances {
  CovarianceTable table;
  WordTable lambda_ys;           // stochastic part, n_y x n_y
  WordTable lambda_ydyd;         // input-driven part, n_y x n_y
  std::vector<Matrix> t_ys;
  std::vector<Matrix> t_ydyd;
};

/// Covariances of a mean-square stable model for the given non-empty words.
ExactCovariances exact_covariances(const SwitchedModel& model, std::span<const Word> words,
                                   const FixedPointOptions& opts = {1e-12, 10000});

/// All non-empty words of length <= max_len.
std::vector<Word> words_up_to(int num_modes, std::size_t max_len);

}  // namespace lssid

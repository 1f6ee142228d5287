#pragma once

#include "lssid/covariance.hpp"
#include "lssid/model.hpp"
#include "lssid/realize.hpp"
#include "lssid/simulate.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace lssid {

enum class Estimator { Direct, LeastSquares };

/// Post-identification callback (e.g. a prediction-error refinement). It
/// receives the realized model and the estimation data.
using RefinementHook = std::function<InnovationModel(const InnovationModel&, const Dataset&)>;

struct IdentConfig {
  int n_x = 0;
  int n_bar = 0;
  /// Selections for the joint Markov function and for Psi; nullopt means
  /// "search".
  std::optional<Selection> sel;
  std::optional<Selection> sel_bar;
  Estimator estimator = Estimator::Direct;
  GramModel gram = GramModel::WhiteInput;
  /// Known mode probabilities; nullopt uses the observed frequencies.
  std::optional<Vector> p;
  RealizationOptions realization;
  SearchOptions search;
  RefinementHook refine;

  /// Throws Error(InvalidArgument) for non-positive dimensions.
  void validate() const;
};

struct IdentResult {
  InnovationModel model;
  Selection sel;
  Selection sel_bar;
  CovarianceTable table;
  RealizationDiagnostics diagnostics;
  /// Least-squares identity residual; 0 for the direct estimator.
  double identity_residual = 0.0;
};

/// Estimates the covariance table over the words required by both
/// selections and runs covariance_realization. Errors carry a stage tag
/// ("search", "estimate", then the realization stages, "refine").
IdentResult identify(const Dataset& data, int num_modes, const IdentConfig& cfg);

/// One-step predictor of an innovation model from x(0) = 0:
///   yhat = C x + D u,  x+ = (A_q - K_q C) x + B_q u + K_q (y - D u).
Matrix predict(const InnovationModel& m, const Dataset& data);

/// 100 max{1 - ||y - yhat|| / ||y - mean(y)||, 0} with per-channel means.
/// Throws Error(UndefinedBfr) for constant y and Error(DimensionMismatch)
/// for unequal shapes or fewer than two samples.
double bfr(const Matrix& y_true, const Matrix& y_pred);

/// Frobenius norm of (1/n) sum_t e(t) z^y_w(t)^T over t >= start. When
/// `normalized`, each entry is divided by the RMS of its two channels, which
/// makes the value a correlation and comparable with a 1/sqrt(n) band.
double residual_correlation(const Matrix& residual, const Dataset& data, const Vector& p, const Word& w,
                            std::size_t start, bool normalized = true);

struct ValidationReport {
  double bfr = 0.0;
  /// residual_correlation for each single-letter word.
  std::vector<double> whiteness;
  Matrix prediction;
  std::size_t skipped = 0;
  double seconds = 0.0;
};

/// Predicts on `data` and scores against the noise-free channel when
/// present (else y), skipping the first `skip` samples.
ValidationReport validate_model(const InnovationModel& m, const Dataset& data, std::size_t skip);

/// Isomorphism-invariant distance max_{|w| <= max_len} max|M1(w) - M2(w)|
/// of the Markov functions ({A}, {[B K]}, C, [D I]).
double markov_distance(const InnovationModel& a, const InnovationModel& b, std::size_t max_len = 3);

struct ConsistencyRow {
  std::size_t N = 0;
  std::uint64_t seed = 0;
  double error = 0.0;   // infinity when identification failed
  bool aligned = false; // find_isomorphism succeeded
  std::string failure;
};

struct ConsistencyTable {
  std::vector<ConsistencyRow> rows;
  /// Median error per N, in the order of the requested Ns.
  std::vector<std::pair<std::size_t, double>> medians;
};

struct ConsistencyConfig {
  IdentConfig ident;
  SimConfig sim;  // seed and length are overwritten per cell
  double align_tol = 1e-3;
};

/// Simulates `truth` for every (N, seed), identifies and records the Markov
/// error against truth.
ConsistencyTable consistency_experiment(const InnovationModel& truth, std::span<const std::size_t> Ns,
                                        std::span<const std::uint64_t> seeds, const ConsistencyConfig& cfg);

double median(std::vector<double> values);

}  // namespace lssid

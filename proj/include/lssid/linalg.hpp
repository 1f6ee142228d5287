#pragma once

#include <Eigen/Dense>

#include <vector>

namespace lssid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative threshold for numerical rank: singular values above
/// `kRankTolerance * sigma_max` count.
inline constexpr double kRankTolerance = 1e-8;

/// Numerical rank with a threshold relative to the largest singular value.
int numerical_rank(const Matrix& m, double rel_tol = kRankTolerance);

/// Largest absolute entry; 0 for empty matrices.
double max_abs(const Matrix& m);

/// Largest absolute entry of the entrywise difference of two families.
double max_abs_diff(const std::vector<Matrix>& a, const std::vector<Matrix>& b);

/// Spectral radius of a square matrix.
double spectral_radius(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol);

/// Symmetric positive definite test via LLT on the symmetric part, after an
/// explicit symmetry check at tolerance `sym_tol`.
bool is_spd(const Matrix& m, double sym_tol = 1e-10);

/// (M + M^T) / 2.
Matrix symmetrize(const Matrix& m);

}  // namespace lssid

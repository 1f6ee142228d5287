#include "lssid/model.hpp"

#include "lssid/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <sstream>

namespace lssid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void expect_shape(const Matrix& m, Eigen::Index r, Eigen::Index c, const std::string& name) {
  if (m.rows() != r || m.cols() != c) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << r << "x" << c;
    throw Error(ErrorCode::InvalidModel, os.str());
  }
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::vector<Word> words_shorter_than(int num_modes, int depth) {
  if (depth <= 0) return {};
  return enumerate_words(num_modes, 0, static_cast<std::size_t>(depth - 1));
}

Matrix reachability_matrix(std::span<const Matrix> A, std::span<const Matrix> B, int depth) {
  const int modes = static_cast<int>(A.size());
  const auto words = words_shorter_than(modes, depth);
  const Eigen::Index n = A.front().rows();
  const Eigen::Index m = B.front().cols();
  Matrix R(n, static_cast<Eigen::Index>(words.size()) * modes * m);
  Eigen::Index col = 0;
  for (const auto& w : words) {
    const Matrix Aw = matrix_product_along_word(A, w);
    for (int s = 0; s < modes; ++s) {
      R.middleCols(col, m) = Aw * B[s];
      col += m;
    }
  }
  return R;
}

Matrix observability_matrix(std::span<const Matrix> A, const Matrix& C, int depth) {
  const auto words = words_shorter_than(static_cast<int>(A.size()), depth);
  const Eigen::Index p = C.rows();
  Matrix O(static_cast<Eigen::Index>(words.size()) * p, C.cols());
  Eigen::Index row = 0;
  for (const auto& w : words) {
    O.middleRows(row, p) = C * matrix_product_along_word(A, w);
    row += p;
  }
  return O;
}

std::vector<Matrix> concat_columns(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  std::vector<Matrix> out;
  out.reserve(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    Matrix m(a[s].rows(), a[s].cols() + b[s].cols());
    m << a[s], b[s];
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

void DeterministicModel::validate() const {
  if (A.empty()) throw Error(ErrorCode::InvalidModel, "model has no modes");
  if (B.size() != A.size()) throw Error(ErrorCode::InvalidModel, "A and B mode counts differ");
  const auto nx = n_x(), nu = D.cols(), ny = C.rows();
  for (std::size_t s = 0; s < A.size(); ++s) {
    expect_shape(A[s], nx, nx, "A[" + std::to_string(s + 1) + "]");
    expect_shape(B[s], nx, nu, "B[" + std::to_string(s + 1) + "]");
  }
  expect_shape(D, ny, nu, "D");
}

Matrix SwitchedModel::conditional_noise_covariance(int mode) const {
  return Qv.at(mode - 1) / p(mode - 1);
}

void SwitchedModel::set_conditional_noise_covariance(int mode, const Matrix& cov) {
  Qv.at(mode - 1) = p(mode - 1) * cov;
}

void SwitchedModel::validate() const {
  const int modes = num_modes();
  if (modes == 0) throw Error(ErrorCode::InvalidModel, "model has no modes");
  if (B.size() != A.size() || K.size() != A.size() || Qv.size() != A.size()) {
    throw Error(ErrorCode::InvalidModel, "per-mode families have differing lengths");
  }
  if (p.size() != modes) throw Error(ErrorCode::InvalidModel, "probability vector length differs from mode count");
  const auto nx = n_x(), ny = n_y(), nu = n_u(), nn = n_noise();
  for (int s = 0; s < modes; ++s) {
    const std::string tag = "[" + std::to_string(s + 1) + "]";
    expect_shape(A[s], nx, nx, "A" + tag);
    expect_shape(B[s], nx, nu, "B" + tag);
    expect_shape(K[s], nx, nn, "K" + tag);
    expect_shape(Qv[s], nn, nn, "Qv" + tag);
  }
  expect_shape(D, ny, nu, "D");
  expect_shape(F, ny, nn, "F");
  expect_shape(Qu, nu, nu, "Qu");
  check_probabilities(p);
  if (nu > 0 && !is_spd(Qu)) throw Error(ErrorCode::InvalidModel, "Qu is not symmetric positive definite");
  for (int s = 0; s < modes; ++s) {
    if (nn > 0 && !is_spd(Qv[s])) {
      throw Error(ErrorCode::InvalidModel, "Qv[" + std::to_string(s + 1) + "] is not symmetric positive definite");
    }
  }
  const double rho = stability_margin(A, p);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "model is not mean-square stable: spectral radius of sum p A(x)A is " << rho;
    throw Error(ErrorCode::InvalidModel, os.str());
  }
}

DeterministicModel SwitchedModel::deterministic_part() const { return {A, B, C, D}; }

SwitchedModel SwitchedModel::transformed(const Matrix& T) const {
  Eigen::FullPivLU<Matrix> lu(T);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, "state transformation is singular");
  const Matrix Ti = lu.inverse();
  SwitchedModel out = *this;
  for (int s = 0; s < num_modes(); ++s) {
    out.A[s] = T * A[s] * Ti;
    out.B[s] = T * B[s];
    out.K[s] = T * K[s];
  }
  out.C = C * Ti;
  return out;
}

InnovationModel::InnovationModel(SwitchedModel model) : model_(std::move(model)) {
  const auto ny = model_.n_y();
  if (model_.F.rows() != ny || model_.F.cols() != ny || model_.F != Matrix::Identity(ny, ny)) {
    throw Error(ErrorCode::InvalidModel, "innovation form requires F = I");
  }
  for (std::size_t s = 0; s < model_.Qv.size(); ++s) {
    if (!is_spd(model_.Qv[s])) {
      throw Error(ErrorCode::InvalidModel,
                  "innovation covariance for mode " + std::to_string(s + 1) + " is not positive definite");
    }
  }
}

Matrix InnovationModel::markov(const Word& w) const {
  const auto& m = model_;
  const auto ny = m.n_y(), nu = m.n_u();
  Matrix out(ny, nu + ny);
  if (w.empty()) {
    out << m.D, Matrix::Identity(ny, ny);
    return out;
  }
  w.check_modes(m.num_modes());
  const int s = w.first() - 1;
  const Matrix CA = m.C * matrix_product_along_word(m.A, w.rest());
  out << CA * m.B[s], CA * m.K[s];
  return out;
}

double stability_margin(std::span<const Matrix> A, const Vector& p) {
  if (A.empty()) return 0.0;
  if (static_cast<Eigen::Index>(A.size()) != p.size()) {
    throw Error(ErrorCode::DimensionMismatch, "stability_margin: mode count differs from probability length");
  }
  const Eigen::Index n = A.front().rows();
  Matrix sum = Matrix::Zero(n * n, n * n);
  for (std::size_t s = 0; s < A.size(); ++s) sum += p(static_cast<Eigen::Index>(s)) * kron(A[s], A[s]);
  return spectral_radius(sum);
}

Matrix markov_parameter(const DeterministicModel& m, const Word& w) {
  if (w.empty()) return m.D;
  w.check_modes(m.num_modes());
  return m.C * matrix_product_along_word(m.A, w.rest()) * m.B[w.first() - 1];
}

ReachObsRanks reach_obs_ranks(const DeterministicModel& m, int depth, double rank_tol) {
  m.validate();
  if (depth <= 0) depth = static_cast<int>(m.n_x());
  ReachObsRanks out;
  out.reach_rank = numerical_rank(reachability_matrix(m.A, m.B, depth), rank_tol);
  out.obs_rank = numerical_rank(observability_matrix(m.A, m.C, depth), rank_tol);
  return out;
}

double IsomorphismResiduals::max() const { return std::max({A, B, K, C, D}); }

IsomorphismResult find_isomorphism(const SwitchedModel& m1, const SwitchedModel& m2, double tol, double rank_tol) {
  IsomorphismResult out;
  if (m1.num_modes() != m2.num_modes() || m1.n_x() != m2.n_x() || m1.n_y() != m2.n_y() || m1.n_u() != m2.n_u() ||
      m1.n_noise() != m2.n_noise()) {
    throw Error(ErrorCode::DimensionMismatch, "find_isomorphism: models have different dimensions");
  }
  const int n = static_cast<int>(m1.n_x());
  const auto G1 = concat_columns(m1.B, m1.K);
  const auto G2 = concat_columns(m2.B, m2.K);

  Matrix T;
  const Matrix R1 = reachability_matrix(m1.A, G1, n);
  if (numerical_rank(R1, rank_tol) == n) {
    const Matrix R2 = reachability_matrix(m2.A, G2, n);
    // T R1 = R2  <=>  R1^T T^T = R2^T
    T = R1.transpose().completeOrthogonalDecomposition().solve(R2.transpose()).transpose();
  } else {
    const Matrix O1 = observability_matrix(m1.A, m1.C, n);
    if (numerical_rank(O1, rank_tol) < n) {
      out.diagnostic = "first model is neither reachable nor observable; cannot match bases";
      out.residuals = {kInf, kInf, kInf, kInf, max_abs(m1.D - m2.D)};
      return out;
    }
    const Matrix O2 = observability_matrix(m2.A, m2.C, n);
    // O1 T^-1 = O2
    const Matrix Tinv = O1.completeOrthogonalDecomposition().solve(O2);
    Eigen::FullPivLU<Matrix> lu(Tinv);
    if (!lu.isInvertible()) {
      out.diagnostic = "candidate transformation is singular";
      out.residuals = {kInf, kInf, kInf, kInf, max_abs(m1.D - m2.D)};
      return out;
    }
    T = lu.inverse();
  }

  Eigen::FullPivLU<Matrix> lu(T);
  if (numerical_rank(T, rank_tol) < n || !lu.isInvertible()) {
    out.diagnostic = "candidate transformation is singular";
    out.residuals = {kInf, kInf, kInf, kInf, max_abs(m1.D - m2.D)};
    return out;
  }
  const Matrix Ti = lu.inverse();
  auto& r = out.residuals;
  for (int s = 0; s < m1.num_modes(); ++s) {
    r.A = std::max(r.A, max_abs(T * m1.A[s] * Ti - m2.A[s]));
    r.B = std::max(r.B, max_abs(T * m1.B[s] - m2.B[s]));
    r.K = std::max(r.K, max_abs(T * m1.K[s] - m2.K[s]));
  }
  r.C = max_abs(m1.C * Ti - m2.C);
  r.D = max_abs(m1.D - m2.D);
  if (r.max() <= tol) {
    out.T = T;
  } else {
    std::ostringstream os;
    os << "residuals exceed tolerance " << tol << ": A " << r.A << ", B " << r.B << ", K " << r.K << ", C " << r.C
       << ", D " << r.D;
    out.diagnostic = os.str();
  }
  return out;
}

}  // namespace lssid

#include "lssid/covariance.hpp"

#include "lssid/error.hpp"
#include "lssid/kernels.hpp"
#include "lssid/realize.hpp"

#include <algorithm>
#include <cmath>

namespace lssid {

namespace {

// mask[t - start] = [q(t-k..t-1) = w] * scale for t in [start, T).
std::vector<double> word_mask(std::span<const int> q, const Word& w, std::size_t start, double scale) {
  const std::size_t T = q.size(), k = w.size();
  std::vector<double> mask(T - start, 0.0);
  for (std::size_t t = start; t < T; ++t) {
    bool hit = true;
    for (std::size_t i = 0; i < k && hit; ++i) hit = q[t - k + i] == w[i];
    if (hit) mask[t - start] = scale;
  }
  return mask;
}

// Fixed-order blocked reduction of sum_t a[t] b[t] mask[t].
double blocked_masked_dot(const double* a, const double* b, const double* mask, std::size_t n, std::size_t block) {
  double total = 0.0;
  for (std::size_t s = 0; s < n; s += block) {
    const std::size_t len = std::min(block, n - s);
    total += kernels::active().masked_dot(a + s, b + s, mask + s, len);
  }
  return total;
}

double blocked_dot(const double* a, const double* b, std::size_t n, std::size_t block) {
  double total = 0.0;
  for (std::size_t s = 0; s < n; s += block) {
    const std::size_t len = std::min(block, n - s);
    total += kernels::active().dot(a + s, b + s, len);
  }
  return total;
}

// (1/n) sum_t y(t) b(t - k)^T mask(t) over t in [start, T).
Matrix masked_cross(const Matrix& y, const Matrix& b, std::size_t k, const std::vector<double>& mask,
                    std::size_t start, std::size_t block) {
  const std::size_t n = mask.size();
  Matrix out(y.cols(), b.cols());
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      const double* yi = y.col(i).data() + start;
      const double* bj = b.col(j).data() + (start - k);
      out(i, j) = blocked_masked_dot(yi, bj, mask.data(), n, block) / static_cast<double>(n);
    }
  }
  return out;
}

Vector resolve_p(const Dataset& data, const Vector& p, bool empirical) {
  check_probabilities(p, 1e-9);
  if (!empirical) return p;
  return empirical_mode_probabilities(data.q, static_cast<int>(p.size()));
}

void check_words(std::span<const Word> words, int num_modes) {
  for (const Word& w : words) {
    if (w.empty()) throw Error(ErrorCode::InvalidArgument, "covariance words must be non-empty");
    w.check_modes(num_modes);
  }
}

// Stacked regressor [z_{w_1}(t)^T ... z_{w_m}(t)^T] for t in [start, T).
Matrix stacked_regressor(const Matrix& b, std::span<const int> q, const Vector& p, std::span<const Word> words,
                         std::size_t start) {
  const auto n = static_cast<Eigen::Index>(q.size() - start);
  const auto nb = b.cols();
  Matrix phi(n, nb * static_cast<Eigen::Index>(words.size()));
  for (std::size_t c = 0; c < words.size(); ++c) {
    const Word& w = words[c];
    const double scale = 1.0 / std::sqrt(word_probability(p, w));
    const std::vector<double> mask = word_mask(q, w, start, scale);
    const auto k = static_cast<Eigen::Index>(w.size());
    for (Eigen::Index t = 0; t < n; ++t) {
      phi.block(t, static_cast<Eigen::Index>(c) * nb, 1, nb) =
          mask[static_cast<std::size_t>(t)] * b.row(static_cast<Eigen::Index>(start) + t - k);
    }
  }
  return phi;
}

Matrix solve_regression(const Matrix& phi, const Matrix& R, double rank_tol, const char* which) {
  Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  qr.setThreshold(rank_tol);
  if (qr.rank() < phi.cols()) {
    throw Error(ErrorCode::IllConditionedRegressor, std::string(which) + " regressor has rank " +
                                                        std::to_string(qr.rank()) + " < " +
                                                        std::to_string(phi.cols()) + " columns");
  }
  return qr.solve(R);
}

}  // namespace

void CovarianceTable::validate() const {
  if (num_modes < 1) throw Error(ErrorCode::InvalidArgument, "covariance table needs at least one mode");
  check_probabilities(p, 1e-9);
  if (p.size() != num_modes) throw Error(ErrorCode::DimensionMismatch, "p length differs from the mode count");
  if (q_u.rows() != n_u || q_u.cols() != n_u) throw Error(ErrorCode::DimensionMismatch, "q_u must be n_u x n_u");
  if (lambda_yu.rows() != n_y || lambda_yu.cols() != n_u) {
    throw Error(ErrorCode::DimensionMismatch, "lambda_yu must be n_y x n_u");
  }
  if (lambda_yy.rows() != n_y || lambda_yy.cols() != n_y) {
    throw Error(ErrorCode::DimensionMismatch, "lambda_yy must be n_y x n_y");
  }
  if (static_cast<int>(t_yy.size()) != num_modes) throw Error(ErrorCode::DimensionMismatch, "t_yy needs one entry per mode");
  for (const Matrix& t : t_yy) {
    if (t.rows() != n_y || t.cols() != n_y) throw Error(ErrorCode::DimensionMismatch, "t_yy entries must be n_y x n_y");
  }
  for (const auto& [w, m] : lambda_yu) w.check_modes(num_modes);
  for (const auto& [w, m] : lambda_yy) w.check_modes(num_modes);
}

Matrix z_process(const Matrix& b, std::span<const int> q, const Vector& p, const Word& w) {
  if (static_cast<Eigen::Index>(q.size()) != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "z_process: signal and mode sequence lengths differ");
  }
  w.check_modes(static_cast<int>(p.size()));
  if (w.empty()) return b;
  const std::size_t k = w.size();
  Matrix z = Matrix::Zero(b.rows(), b.cols());
  if (q.size() <= k) return z;
  const double scale = 1.0 / std::sqrt(word_probability(p, w));
  const std::vector<double> mask = word_mask(q, w, k, scale);
  for (std::size_t t = k; t < q.size(); ++t) {
    const double m = mask[t - k];
    if (m != 0.0) z.row(static_cast<Eigen::Index>(t)) = m * b.row(static_cast<Eigen::Index>(t - k));
  }
  return z;
}

std::size_t estimation_start(std::span<const Word> words) {
  std::size_t longest = 1;  // t_yy always needs one step of history
  for (const Word& w : words) longest = std::max(longest, w.size());
  return longest + 1;
}

Vector empirical_mode_probabilities(std::span<const int> q, int num_modes) {
  Vector freq = Vector::Zero(num_modes);
  for (int s : q) {
    if (s < 1 || s > num_modes) throw Error(ErrorCode::InvalidMode, "mode " + std::to_string(s) + " out of range");
    freq(s - 1) += 1.0;
  }
  if (q.empty()) throw Error(ErrorCode::InsufficientData, "empty mode sequence");
  freq /= static_cast<double>(q.size());
  for (int s = 0; s < num_modes; ++s) {
    if (freq(s) == 0.0) {
      throw Error(ErrorCode::InvalidProbability, "mode " + std::to_string(s + 1) + " never occurs in the data");
    }
  }
  return freq;
}

CovarianceTable empirical_covariances(const Dataset& data, const Vector& p_in, std::span<const Word> words,
                                      const EstimatorOptions& opts) {
  const int D = static_cast<int>(p_in.size());
  data.validate(D);
  check_words(words, D);
  if (opts.block_size == 0) throw Error(ErrorCode::InvalidArgument, "block_size must be positive");
  const Vector p = resolve_p(data, p_in, opts.empirical_p);

  const std::size_t T = static_cast<std::size_t>(data.length());
  const std::size_t start = opts.start != 0 ? opts.start : estimation_start(words);
  if (start < estimation_start(words)) {
    throw Error(ErrorCode::InvalidArgument, "start index leaves words without history");
  }
  if (T <= start) {
    throw Error(ErrorCode::InsufficientData, "dataset of length " + std::to_string(T) + " leaves no samples after " +
                                                 std::to_string(start) + " warm-up steps");
  }
  const std::size_t n = T - start;

  CovarianceTable out;
  out.num_modes = D;
  out.n_y = data.n_y();
  out.n_u = data.n_u();
  out.p = p;
  out.samples = n;
  out.lambda_yu = WordTable(out.n_y, out.n_u);
  out.lambda_yy = WordTable(out.n_y, out.n_y);

  out.q_u.resize(out.n_u, out.n_u);
  for (Eigen::Index i = 0; i < out.n_u; ++i)
    for (Eigen::Index j = 0; j < out.n_u; ++j)
      out.q_u(i, j) = blocked_dot(data.u.col(i).data() + start, data.u.col(j).data() + start, n, opts.block_size) /
                      static_cast<double>(n);
  out.q_u = symmetrize(out.q_u);

  const std::vector<double> ones(n, 1.0);
  out.lambda_yu.insert(Word{}, masked_cross(data.y, data.u, 0, ones, start, opts.block_size));

  for (const Word& w : words) {
    if (out.lambda_yy.contains(w)) continue;
    const std::vector<double> mask = word_mask(data.q, w, start, 1.0 / std::sqrt(word_probability(p, w)));
    if (std::all_of(mask.begin(), mask.end(), [](double m) { return m == 0.0; })) out.degenerate.push_back(w);
    out.lambda_yu.insert(w, masked_cross(data.y, data.u, w.size(), mask, start, opts.block_size));
    out.lambda_yy.insert(w, masked_cross(data.y, data.y, w.size(), mask, start, opts.block_size));
  }

  // t_yy[s] = (1/n) sum_t y(t-1) y(t-1)^T [q(t-1) = s] / p_s
  for (int s = 1; s <= D; ++s) {
    const std::vector<double> mask = word_mask(data.q, Word{s}, start, 1.0 / p(s - 1));
    Matrix t(out.n_y, out.n_y);
    for (Eigen::Index i = 0; i < out.n_y; ++i)
      for (Eigen::Index j = 0; j < out.n_y; ++j)
        t(i, j) = blocked_masked_dot(data.y.col(i).data() + start - 1, data.y.col(j).data() + start - 1, mask.data(),
                                     n, opts.block_size) /
                  static_cast<double>(n);
    out.t_yy.push_back(symmetrize(t));
  }
  return out;
}

LeastSquaresResult least_squares_covariances(const Dataset& data, const Vector& p_in, std::span<const Word> words_u,
                                             std::span<const Word> words_y, const LeastSquaresOptions& opts) {
  const int D = static_cast<int>(p_in.size());
  data.validate(D);
  check_words(words_u, D);
  check_words(words_y, D);

  LeastSquaresResult res;
  res.words_u.push_back(Word{});
  for (const Word& w : words_u)
    if (std::find(res.words_u.begin(), res.words_u.end(), w) == res.words_u.end()) res.words_u.push_back(w);
  for (const Word& w : words_y)
    if (std::find(res.words_y.begin(), res.words_y.end(), w) == res.words_y.end()) res.words_y.push_back(w);

  std::vector<Word> all(res.words_u.begin() + 1, res.words_u.end());
  all.insert(all.end(), res.words_y.begin(), res.words_y.end());
  EstimatorOptions direct_opts;
  direct_opts.empirical_p = opts.empirical_p;
  // The direct table supplies q_u, t_yy, degeneracy flags and the start index.
  CovarianceTable direct = empirical_covariances(data, p_in, all, direct_opts);
  const Vector& p = direct.p;

  const std::size_t start = estimation_start(all);
  const std::size_t n = static_cast<std::size_t>(data.length()) - start;
  const Eigen::Index nu = data.n_u(), ny = data.n_y();
  const auto cols_u = nu * static_cast<Eigen::Index>(res.words_u.size());
  const auto cols_y = ny * static_cast<Eigen::Index>(res.words_y.size());
  if (static_cast<Eigen::Index>(n) <= std::max(cols_u, cols_y)) {
    throw Error(ErrorCode::InsufficientData, std::to_string(n) + " samples for " +
                                                 std::to_string(std::max(cols_u, cols_y)) + " regressor columns");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix R = data.y.bottomRows(static_cast<Eigen::Index>(n));

  const Matrix phi_u = stacked_regressor(data.u, data.q, p, res.words_u, start);
  res.theta_u = solve_regression(phi_u, R, opts.rank_tol, "input");
  res.cross_u = inv_n * phi_u.transpose() * R;
  const Matrix gram_u_sample = inv_n * phi_u.transpose() * phi_u;
  res.identity_residual = max_abs(gram_u_sample * res.theta_u - res.cross_u);

  Matrix theta_y;
  Matrix gram_y_sample;
  if (!res.words_y.empty()) {
    const Matrix phi_y = stacked_regressor(data.y, data.q, p, res.words_y, start);
    res.theta_y = solve_regression(phi_y, R, opts.rank_tol, "output");
    res.cross_y = inv_n * phi_y.transpose() * R;
    gram_y_sample = inv_n * phi_y.transpose() * phi_y;
    res.identity_residual = std::max(res.identity_residual, max_abs(gram_y_sample * res.theta_y - res.cross_y));
  }

  Matrix recovered_u;
  if (opts.gram == GramModel::Sample) {
    recovered_u = gram_u_sample * res.theta_u;
  } else {
    recovered_u.resize(cols_u, ny);
    for (std::size_t c = 0; c < res.words_u.size(); ++c) {
      const auto r0 = static_cast<Eigen::Index>(c) * nu;
      recovered_u.middleRows(r0, nu) = direct.q_u * res.theta_u.middleRows(r0, nu);
    }
  }

  CovarianceTable& table = res.table;
  table.num_modes = D;
  table.n_y = ny;
  table.n_u = nu;
  table.p = p;
  table.q_u = direct.q_u;
  table.t_yy = direct.t_yy;
  table.degenerate = direct.degenerate;
  table.samples = n;
  table.lambda_yu = WordTable(ny, nu);
  table.lambda_yy = WordTable(ny, ny);
  for (std::size_t c = 0; c < res.words_u.size(); ++c) {
    table.lambda_yu.insert(res.words_u[c], recovered_u.middleRows(static_cast<Eigen::Index>(c) * nu, nu).transpose());
  }
  if (!res.words_y.empty()) {
    const Matrix recovered_y = gram_y_sample * res.theta_y;
    for (std::size_t c = 0; c < res.words_y.size(); ++c) {
      table.lambda_yy.insert(res.words_y[c],
                             recovered_y.middleRows(static_cast<Eigen::Index>(c) * ny, ny).transpose());
    }
  }
  // Words only requested for one signal still get the other from the direct estimate.
  for (const auto& [w, m] : direct.lambda_yu)
    if (!table.lambda_yu.contains(w)) table.lambda_yu.insert(w, m);
  for (const auto& [w, m] : direct.lambda_yy)
    if (!table.lambda_yy.contains(w)) table.lambda_yy.insert(w, m);
  return res;
}

ExactCovariances exact_covariances(const SwitchedModel& model, std::span<const Word> words,
                                   const FixedPointOptions& opts) {
  model.validate();
  const int D = model.num_modes();
  check_words(words, D);
  const Eigen::Index nu = model.n_u(), ny = model.n_y();

  const AssociatedDlss ad = associated_dlss(model, opts);
  DeterministicModel psi = ad.model;
  for (auto& b : psi.B) b = b.leftCols(nu).eval();
  psi.D = model.D;

  ExactCovariances out;
  CovarianceTable& table = out.table;
  table.num_modes = D;
  table.n_y = ny;
  table.n_u = nu;
  table.p = model.p;
  table.q_u = model.Qu;
  table.lambda_yu = WordTable(ny, nu);
  table.lambda_yy = WordTable(ny, ny);
  out.lambda_ys = WordTable(ny, ny);

  const InputDrivenCovariances yd = lambda_ydyd(psi, model.Qu, model.p, words, opts);
  out.lambda_ydyd = yd.lambda;
  out.t_ydyd = yd.t;

  table.lambda_yu.insert(Word{}, model.D * model.Qu);
  for (const Word& w : words) {
    table.lambda_yu.insert(w, markov_parameter(psi, w) * model.Qu);
    const Matrix ys = markov_parameter(ad.model, w).rightCols(ny);
    out.lambda_ys.insert(w, ys);
    table.lambda_yy.insert(w, ys + yd.lambda.at(w));
  }
  for (int s = 0; s < D; ++s) {
    const auto k = static_cast<std::size_t>(s);
    const Matrix ts = (model.C * ad.P[k] * model.C.transpose() + model.F * model.Qv[k] * model.F.transpose()) /
                      model.p(s);
    out.t_ys.push_back(symmetrize(ts));
    table.t_yy.push_back(symmetrize(ts + yd.t[k]));
  }
  return out;
}

std::vector<Word> words_up_to(int num_modes, std::size_t max_len) { return enumerate_words(num_modes, 1, max_len); }

}  // namespace lssid

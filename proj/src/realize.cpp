#include "lssid/realize.hpp"

#include "lssid/error.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace lssid {

namespace {

struct HoKalmanOutput {
  DeterministicModel model;
  Vector singular_values;
  int rank = 0;
};

HoKalmanOutput ho_kalman_impl(const Selection& sel, int num_modes, const MarkovFunction& markov, const Matrix& m_eps,
                              double rank_tol) {
  const HankelBlocks hb = build_hankel(sel, num_modes, markov);
  if (m_eps.rows() != sel.n_y || m_eps.cols() != sel.n_cols) {
    throw Error(ErrorCode::DimensionMismatch, "M(eps) shape does not match the selection");
  }
  HoKalmanOutput out;
  Eigen::JacobiSVD<Matrix> svd(hb.H);
  out.singular_values = svd.singularValues();
  out.rank = numerical_rank(hb.H, rank_tol);
  const int n = sel.dim();
  if (out.rank < n) {
    std::ostringstream msg;
    msg << "Hankel matrix has numerical rank " << out.rank << " < " << n << " (singular values "
        << out.singular_values.transpose() << ")";
    throw Error(ErrorCode::SingularHankel, msg.str());
  }
  const Eigen::PartialPivLU<Matrix> lu(hb.H);
  out.model.A.reserve(num_modes);
  for (int s = 0; s < num_modes; ++s) {
    out.model.A.push_back(lu.solve(hb.H_shift[s]));
    out.model.B.push_back(lu.solve(hb.H_input[s]));
  }
  out.model.C = hb.H_output;
  out.model.D = m_eps;
  return out;
}

// `reference` is the size of the output covariance the innovation is carved
// out of; a Q that is tiny against it is numerically zero.
Matrix pinned_inverse(const Matrix& q, double guard, double reference, int mode) {
  Eigen::JacobiSVD<Matrix> svd(q);
  const Vector& sv = svd.singularValues();
  const double top = sv.size() ? sv(0) : 0.0;
  const double bottom = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (!(top > 0.0) || !(bottom > guard * std::max(top, reference)) || !std::isfinite(top)) {
    std::ostringstream msg;
    msg << "innovation covariance of mode " << mode << " is singular (singular values " << sv.transpose() << ")";
    throw Error(ErrorCode::NotFullRank, msg.str());
  }
  return q.inverse();
}

}  // namespace

DeterministicModel ho_kalman(const Selection& sel, int num_modes, const MarkovFunction& markov, const Matrix& m_eps,
                             double rank_tol) {
  return ho_kalman_impl(sel, num_modes, markov, m_eps, rank_tol).model;
}

DeterministicModel ho_kalman(const Selection& sel, int num_modes, const WordTable& markov, const Matrix& m_eps,
                             double rank_tol) {
  return ho_kalman(sel, num_modes, MarkovFunction([&markov](const Word& w) { return markov.at(w); }), m_eps,
                   rank_tol);
}

AssociatedDlss associated_dlss(const SwitchedModel& model, const FixedPointOptions& opts) {
  model.validate();
  const int D = model.num_modes();
  std::vector<Matrix> W;
  for (int s = 0; s < D; ++s) W.push_back(model.K[s] * model.Qv[s] * model.K[s].transpose());

  AssociatedDlss out;
  out.P = mode_weighted_lyapunov(model.A, model.p, Vector::Ones(D), W, opts, out.report, "state covariance");

  DeterministicModel& m = out.model;
  m.C = model.C;
  m.D.resize(model.n_y(), model.n_u() + model.n_y());
  m.D << model.D, Matrix::Identity(model.n_y(), model.n_y());
  for (int s = 0; s < D; ++s) {
    const double ps = model.p(s), rs = std::sqrt(ps);
    const Matrix G = rs * (model.A[s] * (out.P[s] / ps) * model.C.transpose() +
                           model.K[s] * (model.Qv[s] / ps) * model.F.transpose());
    m.A.push_back(rs * model.A[s]);
    Matrix B(model.n_x(), model.n_u() + model.n_y());
    B << rs * model.B[s], G;
    m.B.push_back(std::move(B));
  }
  return out;
}

AssociatedSlss associated_slss(const DeterministicModel& dlss, Eigen::Index n_u, const Vector& p,
                               std::span<const Matrix> t_ys, const Matrix& q_u, const FixedPointOptions& opts,
                               double q_guard, double q_reference) {
  dlss.validate();
  const int D = dlss.num_modes();
  const Eigen::Index nx = dlss.n_x(), ny = dlss.n_y();
  check_probabilities(p, 1e-9);
  if (p.size() != D || static_cast<int>(t_ys.size()) != D) {
    throw Error(ErrorCode::DimensionMismatch, "associated_slss: mode counts differ");
  }
  if (dlss.B.front().cols() != n_u + ny || dlss.D.cols() != n_u + ny) {
    throw Error(ErrorCode::DimensionMismatch, "associated_slss: expected n_u + n_y input columns");
  }
  const Matrix& C = dlss.C;

  const double schur = stability_margin(dlss.A, Vector::Ones(D));
  if (!(schur < 1.0)) {
    std::ostringstream msg;
    msg << "sum of A (x) A has spectral radius " << schur << " >= 1; the covariance recursion cannot converge";
    throw Error(ErrorCode::NonConvergence, msg.str());
  }

  std::vector<Matrix> G(D);
  for (int s = 0; s < D; ++s) G[s] = dlss.B[s].rightCols(ny);

  auto q_and_k = [&](const ModeFamily& P, std::vector<Matrix>& Q, std::vector<Matrix>& K) {
    Q.resize(D);
    K.resize(D);
    for (int s = 0; s < D; ++s) {
      const double ps = p(s), rs = std::sqrt(ps);
      Q[s] = symmetrize(ps * t_ys[s] - C * P[s] * C.transpose());
      K[s] = (rs * G[s] - dlss.A[s] * P[s] * C.transpose() / rs) * pinned_inverse(Q[s], q_guard, q_reference, s + 1);
    }
  };

  auto update = [&](const ModeFamily& P) {
    std::vector<Matrix> Q, K;
    q_and_k(P, Q, K);
    Matrix sum = Matrix::Zero(nx, nx);
    for (int r = 0; r < D; ++r) {
      sum += dlss.A[r] * P[r] * dlss.A[r].transpose() / p(r) + K[r] * Q[r] * K[r].transpose();
    }
    ModeFamily out(D);
    for (int s = 0; s < D; ++s) out[s] = p(s) * symmetrize(sum);
    return out;
  };

  AssociatedSlss out;
  KQIterationState& st = out.state;
  st.P = iterate_fixed_point(update, ModeFamily(D, Matrix::Zero(nx, nx)), opts, st.report, "innovation recursion");
  q_and_k(st.P, st.Q, st.K);
  for (int s = 0; s < D; ++s) {
    if (!is_spd(st.Q[s])) {
      throw Error(ErrorCode::NotFullRank,
                  "innovation covariance of mode " + std::to_string(s + 1) + " is not positive definite");
    }
  }

  SwitchedModel m;
  m.C = C;
  m.D = dlss.D.leftCols(n_u);
  m.F = Matrix::Identity(ny, ny);
  m.p = p;
  m.Qu = q_u;
  m.Qv = st.Q;
  for (int s = 0; s < D; ++s) {
    const double rs = std::sqrt(p(s));
    m.A.push_back(dlss.A[s] / rs);
    m.B.push_back(dlss.B[s].leftCols(n_u) / rs);
    m.K.push_back(st.K[s]);
  }
  out.model = InnovationModel(std::move(m));
  return out;
}

WordTable psi_uy(const CovarianceTable& table) {
  const Eigen::FullPivLU<Matrix> lu(table.q_u);
  if (table.q_u.size() == 0 || !lu.isInvertible()) {
    throw Error(ErrorCode::SingularMatrix, "input covariance Q_u is not invertible");
  }
  const Matrix qi = lu.inverse();
  WordTable out(table.n_y, table.n_u);
  for (const auto& [w, m] : table.lambda_yu) out.insert(w, m * qi);
  return out;
}

InputDrivenCovariances lambda_ydyd(const DeterministicModel& psi_model, const Matrix& q_u, const Vector& p,
                                   std::span<const Word> words, const FixedPointOptions& opts) {
  psi_model.validate();
  const int D = psi_model.num_modes();
  check_probabilities(p, 1e-9);
  if (p.size() != D) throw Error(ErrorCode::DimensionMismatch, "lambda_ydyd: p length differs from the mode count");
  const Matrix& C = psi_model.C;
  const Matrix& Dm = psi_model.D;

  InputDrivenCovariances out;
  std::vector<Matrix> W;
  for (int s = 0; s < D; ++s) W.push_back(psi_model.B[s] * q_u * psi_model.B[s].transpose());
  out.P = mode_weighted_lyapunov(psi_model.A, p, p, W, opts, out.report, "input-driven state covariance");

  // Per-mode head vector (1/p_s) A_s P_s C^T + B_s Q_u D^T.
  std::vector<Matrix> head(D);
  for (int s = 0; s < D; ++s) {
    head[s] = psi_model.A[s] * out.P[s] * C.transpose() / p(s) + psi_model.B[s] * q_u * Dm.transpose();
    out.t.push_back(symmetrize(C * out.P[s] * C.transpose() / p(s) + Dm * q_u * Dm.transpose()));
  }
  out.lambda = WordTable(C.rows(), C.rows());
  for (const Word& w : words) {
    w.check_modes(D);
    if (w.empty()) throw Error(ErrorCode::InvalidArgument, "lambda_ydyd is defined for non-empty words");
    out.lambda.insert(w, C * matrix_product_along_word(psi_model.A, w.rest()) * head[w.first() - 1]);
  }
  return out;
}

RealizationResult covariance_realization(const CovarianceTable& table, const Selection& sel, const Selection& sel_bar,
                                         const RealizationOptions& opts) {
  table.validate();
  const int D = table.num_modes;
  const Eigen::Index ny = table.n_y, nu = table.n_u;
  sel.validate(D);
  sel_bar.validate(D);
  if (sel_bar.n_y != ny || sel_bar.n_cols != nu) {
    throw Error(ErrorCode::DimensionMismatch, "selection for Psi must have n_y rows and n_u columns");
  }
  if (sel.n_y != ny || sel.n_cols != nu + ny) {
    throw Error(ErrorCode::DimensionMismatch, "selection for the joint Markov function must have n_u + n_y columns");
  }

  RealizationResult res;
  WordTable psi;
  HoKalmanOutput psi_hk;
  try {
    psi = psi_uy(table);
    psi_hk = ho_kalman_impl(sel_bar, D, MarkovFunction([&](const Word& w) { return psi.at(w); }), psi.at(Word{}),
                            opts.rank_tol);
  } catch (const Error& e) {
    rethrow_with_stage(e, "psi");
  }
  res.psi_model = psi_hk.model;
  res.diagnostics.hankel_rank_psi = psi_hk.rank;
  res.diagnostics.singular_values_psi = psi_hk.singular_values;

  InputDrivenCovariances yd;
  try {
    yd = lambda_ydyd(res.psi_model, table.q_u, table.p, required_words(sel, D), opts.fixed_point);
  } catch (const Error& e) {
    rethrow_with_stage(e, "ydyd");
  }
  res.diagnostics.ydyd = yd.report;

  HoKalmanOutput m_hk;
  try {
    MarkovFunction joint = [&](const Word& w) {
      Matrix m(ny, nu + ny);
      m << psi.at(w), table.lambda_yy.at(w) - yd.lambda.at(w);
      return m;
    };
    Matrix m_eps(ny, nu + ny);
    m_eps << psi.at(Word{}), Matrix::Identity(ny, ny);
    m_hk = ho_kalman_impl(sel, D, joint, m_eps, opts.rank_tol);
  } catch (const Error& e) {
    rethrow_with_stage(e, "markov");
  }
  res.markov_model = m_hk.model;
  res.diagnostics.hankel_rank_markov = m_hk.rank;
  res.diagnostics.singular_values_markov = m_hk.singular_values;

  try {
    std::vector<Matrix> t_ys;
    double reference = 0.0;
    for (int s = 0; s < D; ++s) {
      t_ys.push_back(table.t_yy[s] - yd.t[s]);
      reference = std::max(reference, table.p(s) * max_abs(table.t_yy[s]));
    }
    res.diagnostics.schur_radius = stability_margin(res.markov_model.A, Vector::Ones(D));
    AssociatedSlss slss =
        associated_slss(res.markov_model, nu, table.p, t_ys, table.q_u, opts.fixed_point, opts.q_guard, reference);
    res.model = std::move(slss.model);
    res.diagnostics.kq = slss.state.report;
  } catch (const Error& e) {
    rethrow_with_stage(e, "innovation");
  }
  return res;
}

namespace {

// Advances an increasing index combination of size k over [0, n); false when exhausted.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  std::size_t i = k;
  while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
  if (i == 0) return false;
  ++idx[i - 1];
  for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  return true;
}

}  // namespace

Selection search_selection(const MarkovFunction& markov, int num_modes, int n, int n_y, int n_cols,
                           const SearchOptions& opts) {
  if (n < 1 || n_y < 1 || n_cols < 1 || num_modes < 1) {
    throw Error(ErrorCode::InvalidArgument, "search_selection: sizes must be positive");
  }
  // Selections never use words longer than their dimension.
  const std::size_t max_len = std::min(opts.max_word_length, static_cast<std::size_t>(n));
  std::vector<RowIndex> rows;
  for (const Word& u : enumerate_words(num_modes, 1, max_len))
    for (int k = 1; k <= n_y; ++k) rows.push_back({u, k});
  std::vector<ColumnIndex> cols;
  for (const Word& head : enumerate_words(num_modes, 2, max_len + 1))
    for (int l = 1; l <= n_cols; ++l) cols.push_back({head.first(), head.rest(), l});
  const auto un = static_cast<std::size_t>(n);
  if (rows.size() < un || cols.size() < un) {
    throw Error(ErrorCode::NoSelectionFound, "fewer candidate rows or columns than the requested dimension");
  }

  // Every candidate Hankel matrix is a submatrix of this one.
  std::map<Word, Matrix> cache;
  auto value = [&](const Word& w) -> const Matrix& {
    auto it = cache.find(w);
    if (it == cache.end()) {
      Matrix m = markov(w);
      if (m.rows() != n_y || m.cols() != n_cols) {
        throw Error(ErrorCode::DimensionMismatch, "Markov parameter for '" + w.display() + "' has the wrong shape");
      }
      it = cache.emplace(w, std::move(m)).first;
    }
    return it->second;
  };
  Matrix full(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const Word w = Word::letter(cols[j].mode) + cols[j].word + rows[i].word;
      full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          value(w)(rows[i].row - 1, cols[j].col - 1);
    }

  std::size_t examined = 0, skipped = 0;
  std::vector<std::size_t> ri(un), ci(un);
  for (std::size_t i = 0; i < un; ++i) ri[i] = i;
  Matrix H(n, n);
  do {
    for (std::size_t i = 0; i < un; ++i) ci[i] = i;
    // Columns only matter if the chosen rows are independent in the full matrix.
    Matrix row_block(n, full.cols());
    for (std::size_t i = 0; i < un; ++i) row_block.row(static_cast<Eigen::Index>(i)) = full.row(static_cast<Eigen::Index>(ri[i]));
    const bool rows_ok = numerical_rank(row_block, opts.rank_tol) == n;
    do {
      if (++examined > opts.budget) {
        throw Error(ErrorCode::NoSelectionFound, "no rank-" + std::to_string(n) + " selection within a budget of " +
                                                     std::to_string(opts.budget) + " candidates");
      }
      if (!rows_ok) break;
      for (std::size_t i = 0; i < un; ++i)
        for (std::size_t j = 0; j < un; ++j)
          H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              full(static_cast<Eigen::Index>(ri[i]), static_cast<Eigen::Index>(ci[j]));
      if (numerical_rank(H, opts.rank_tol) == n) {
        if (skipped == opts.skip) {
          Selection sel;
          sel.n_y = n_y;
          sel.n_cols = n_cols;
          for (std::size_t i = 0; i < un; ++i) sel.alpha.push_back(rows[ri[i]]);
          for (std::size_t j = 0; j < un; ++j) sel.beta.push_back(cols[ci[j]]);
          return sel;
        }
        ++skipped;
      }
    } while (next_combination(ci, cols.size()));
  } while (next_combination(ri, rows.size()));
  throw Error(ErrorCode::NoSelectionFound, "no rank-" + std::to_string(n) + " selection among " +
                                               std::to_string(examined) + " candidates");
}

}  // namespace lssid

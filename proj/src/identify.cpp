#include "lssid/identify.hpp"

#include "lssid/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace lssid {

namespace {

// Direct estimates for single words on demand, all averaged from one start
// index so that search results do not depend on evaluation order.
class LazyCovariances {
 public:
  LazyCovariances(const Dataset& data, const Vector& p, std::size_t start) : data_(data), p_(p), start_(start) {
    const Word first{1};
    const CovarianceTable t = estimate(first);
    q_u_ = t.q_u;
    q_u_inv_ = t.q_u.inverse();
    psi_eps_ = t.lambda_yu.at(Word{}) * q_u_inv_;
  }

  Matrix psi(const Word& w) {
    if (w.empty()) return psi_eps_;
    return entry(w).first * q_u_inv_;
  }
  Matrix lambda_yy(const Word& w) { return entry(w).second; }
  const Matrix& q_u() const { return q_u_; }

 private:
  CovarianceTable estimate(const Word& w) {
    EstimatorOptions opts;
    opts.start = start_;
    const Word words[] = {w};
    return empirical_covariances(data_, p_, words, opts);
  }
  const std::pair<Matrix, Matrix>& entry(const Word& w) {
    auto it = cache_.find(w);
    if (it == cache_.end()) {
      if (w.size() + 1 > start_) throw Error(ErrorCode::InvalidArgument, "search word longer than the warm-up window");
      const CovarianceTable t = estimate(w);
      it = cache_.emplace(w, std::make_pair(t.lambda_yu.at(w), t.lambda_yy.at(w))).first;
    }
    return it->second;
  }

  const Dataset& data_;
  Vector p_;
  std::size_t start_;
  Matrix q_u_;
  Matrix q_u_inv_;
  Matrix psi_eps_;
  std::map<Word, std::pair<Matrix, Matrix>> cache_;
};

std::vector<Word> union_words(const Selection& a, const Selection& b, int num_modes) {
  std::set<Word> s;
  for (const Word& w : required_words(a, num_modes)) s.insert(w);
  for (const Word& w : required_words(b, num_modes)) s.insert(w);
  return {s.begin(), s.end()};
}

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_with_stage(e, stage);
  }
}

}  // namespace

void IdentConfig::validate() const {
  if (n_x < 1 || n_bar < 1) throw Error(ErrorCode::InvalidArgument, "n_x and n_bar must be >= 1");
  if (sel && sel->dim() != n_x) throw Error(ErrorCode::InvalidArgument, "selection size differs from n_x");
  if (sel_bar && sel_bar->dim() != n_bar) throw Error(ErrorCode::InvalidArgument, "selection size differs from n_bar");
}

IdentResult identify(const Dataset& data, int num_modes, const IdentConfig& cfg) {
  cfg.validate();
  data.validate(num_modes);
  const Vector p = cfg.p ? *cfg.p : staged("estimate", [&] { return empirical_mode_probabilities(data.q, num_modes); });
  if (p.size() != num_modes) throw Error(ErrorCode::DimensionMismatch, "p length differs from the mode count");
  const auto ny = static_cast<int>(data.n_y()), nu = static_cast<int>(data.n_u());

  IdentResult res;
  if (cfg.sel && cfg.sel_bar) {
    res.sel = *cfg.sel;
    res.sel_bar = *cfg.sel_bar;
  } else {
    staged("search", [&] {
      const std::size_t start = 2 * cfg.search.max_word_length + 3;
      if (static_cast<std::size_t>(data.length()) <= start) {
        throw Error(ErrorCode::InsufficientData, "dataset too short for the selection search");
      }
      LazyCovariances lazy(data, p, start);
      res.sel_bar = cfg.sel_bar ? *cfg.sel_bar
                                : search_selection([&](const Word& w) { return lazy.psi(w); }, num_modes, cfg.n_bar,
                                                   ny, nu, cfg.search);
      if (cfg.sel) {
        res.sel = *cfg.sel;
        return 0;
      }
      const DeterministicModel psi_model =
          ho_kalman(res.sel_bar, num_modes, [&](const Word& w) { return lazy.psi(w); }, lazy.psi(Word{}),
                    cfg.realization.rank_tol);
      const std::vector<Word> words = enumerate_words(num_modes, 1, 2 * cfg.search.max_word_length + 2);
      const InputDrivenCovariances yd = lambda_ydyd(psi_model, lazy.q_u(), p, words, cfg.realization.fixed_point);
      MarkovFunction joint = [&](const Word& w) {
        Matrix m(ny, nu + ny);
        m << lazy.psi(w), lazy.lambda_yy(w) - yd.lambda.at(w);
        return m;
      };
      res.sel = search_selection(joint, num_modes, cfg.n_x, ny, nu + ny, cfg.search);
      return 0;
    });
  }

  const std::vector<Word> words = union_words(res.sel, res.sel_bar, num_modes);
  staged("estimate", [&] {
    if (cfg.estimator == Estimator::Direct) {
      res.table = empirical_covariances(data, p, words);
    } else {
      LeastSquaresOptions opts;
      opts.gram = cfg.gram;
      LeastSquaresResult ls = least_squares_covariances(data, p, words, words, opts);
      res.table = std::move(ls.table);
      res.identity_residual = ls.identity_residual;
    }
    return 0;
  });

  RealizationResult rr = covariance_realization(res.table, res.sel, res.sel_bar, cfg.realization);
  res.model = std::move(rr.model);
  res.diagnostics = std::move(rr.diagnostics);
  if (cfg.refine) res.model = staged("refine", [&] { return cfg.refine(res.model, data); });
  return res;
}

Matrix predict(const InnovationModel& m, const Dataset& data) {
  const SwitchedModel& s = m.sys();
  if (data.n_y() != s.n_y() || data.n_u() != s.n_u()) {
    throw Error(ErrorCode::DimensionMismatch, "model and dataset channel counts differ");
  }
  data.validate(s.num_modes());
  std::vector<Matrix> closed;
  for (int i = 0; i < s.num_modes(); ++i) closed.push_back(s.A[i] - s.K[i] * s.C);
  Matrix yhat(data.length(), data.n_y());
  Vector x = Vector::Zero(s.n_x());
  for (Eigen::Index t = 0; t < data.length(); ++t) {
    const int q = data.q[static_cast<std::size_t>(t)] - 1;
    const Vector u = data.u.row(t).transpose();
    const Vector du = s.D * u;
    yhat.row(t) = (s.C * x + du).transpose();
    x = closed[q] * x + s.B[q] * u + s.K[q] * (data.y.row(t).transpose() - du);
  }
  return yhat;
}

double bfr(const Matrix& y_true, const Matrix& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "bfr: series shapes differ");
  }
  if (y_true.rows() < 2) throw Error(ErrorCode::DimensionMismatch, "bfr needs at least two samples");
  const Eigen::RowVectorXd mean = y_true.colwise().mean();
  const double spread = (y_true.rowwise() - mean).squaredNorm();
  if (!(spread > 0.0)) throw Error(ErrorCode::UndefinedBfr, "bfr undefined for a constant reference signal");
  const double fit = 1.0 - std::sqrt((y_true - y_pred).squaredNorm() / spread);
  return 100.0 * std::max(fit, 0.0);
}

double residual_correlation(const Matrix& residual, const Dataset& data, const Vector& p, const Word& w,
                            std::size_t start, bool normalized) {
  if (residual.rows() != data.length()) throw Error(ErrorCode::DimensionMismatch, "residual length differs from data");
  start = std::max(start, w.size());
  if (static_cast<Eigen::Index>(start) >= data.length()) {
    throw Error(ErrorCode::InsufficientData, "no samples left for the residual correlation");
  }
  const Matrix z = z_process(data.y, data.q, p, w);
  const auto n = data.length() - static_cast<Eigen::Index>(start);
  const Matrix e = residual.bottomRows(n), zw = z.bottomRows(n);
  Matrix c = e.transpose() * zw / static_cast<double>(n);
  if (!normalized) return c.norm();
  const Vector se = (e.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  const Vector sz = (zw.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  if (!(se.minCoeff() > 0.0) || !(sz.minCoeff() > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "residual or regressor is identically zero on the window");
  }
  c = se.cwiseInverse().asDiagonal() * c * sz.cwiseInverse().asDiagonal();
  return c.norm();
}

ValidationReport validate_model(const InnovationModel& m, const Dataset& data, std::size_t skip) {
  const auto t0 = std::chrono::steady_clock::now();
  ValidationReport rep;
  rep.prediction = predict(m, data);
  rep.skipped = skip;
  const auto n = data.length() - static_cast<Eigen::Index>(skip);
  if (n < 2) throw Error(ErrorCode::InsufficientData, "validation data shorter than the skipped transient");
  const Matrix& target = data.y_noise_free.size() != 0 ? data.y_noise_free : data.y;
  rep.bfr = bfr(target.bottomRows(n), rep.prediction.bottomRows(n));
  const Matrix residual = data.y - rep.prediction;
  for (int s = 1; s <= m.sys().num_modes(); ++s) {
    rep.whiteness.push_back(residual_correlation(residual, data, m.sys().p, Word{s}, skip));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double markov_distance(const InnovationModel& a, const InnovationModel& b, std::size_t max_len) {
  const SwitchedModel &sa = a.sys(), &sb = b.sys();
  if (sa.num_modes() != sb.num_modes() || sa.n_y() != sb.n_y() || sa.n_u() != sb.n_u()) {
    throw Error(ErrorCode::DimensionMismatch, "markov_distance: models have different signatures");
  }
  double d = 0.0;
  for (const Word& w : enumerate_words(sa.num_modes(), 0, max_len)) d = std::max(d, max_abs(a.markov(w) - b.markov(w)));
  return d;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

ConsistencyTable consistency_experiment(const InnovationModel& truth, std::span<const std::size_t> Ns,
                                        std::span<const std::uint64_t> seeds, const ConsistencyConfig& cfg) {
  ConsistencyTable table;
  for (std::size_t N : Ns) {
    std::vector<double> errs;
    for (std::uint64_t seed : seeds) {
      ConsistencyRow row;
      row.N = N;
      row.seed = seed;
      SimConfig sim = cfg.sim;
      sim.seed = seed;
      sim.length = N;
      try {
        const Dataset data = simulate(truth.sys(), sim);
        const IdentResult r = identify(data, truth.sys().num_modes(), cfg.ident);
        row.error = markov_distance(r.model, truth);
        if (r.model.sys().n_x() == truth.sys().n_x()) {
          const double tol = cfg.align_tol * std::max(1.0, std::sqrt(1e5 / static_cast<double>(N)));
          row.aligned = find_isomorphism(r.model.sys(), truth.sys(), tol).isomorphic();
        }
      } catch (const Error& e) {
        row.error = std::numeric_limits<double>::infinity();
        row.failure = e.what();
      }
      errs.push_back(row.error);
      table.rows.push_back(std::move(row));
    }
    table.medians.emplace_back(N, median(errs));
  }
  return table;
}

}  // namespace lssid

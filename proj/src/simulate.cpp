#include "lssid/simulate.hpp"

#include "lssid/error.hpp"

#include <cmath>

namespace lssid {

namespace {

// Independent draw streams per signal.
constexpr std::uint64_t kModeStream = 1;
constexpr std::uint64_t kInputStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

Matrix cholesky_factor(const Matrix& cov, const char* what) {
  if (cov.size() == 0) return cov;
  Eigen::LLT<Matrix> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidModel, std::string(what) + " is not positive definite");
  return llt.matrixL();
}

}  // namespace

void Dataset::validate(int num_modes) const {
  const auto T = y.rows();
  if (u.rows() != T || static_cast<Eigen::Index>(q.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "dataset series have different lengths");
  }
  if (y_noise_free.size() != 0 && (y_noise_free.rows() != T || y_noise_free.cols() != y.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "noise-free channel does not match y");
  }
  for (std::size_t t = 0; t < q.size(); ++t) {
    if (q[t] < 1 || q[t] > num_modes) {
      throw Error(ErrorCode::InvalidMode, "mode " + std::to_string(q[t]) + " at row " + std::to_string(t) +
                                              " outside {1.." + std::to_string(num_modes) + "}");
    }
  }
}

Dataset Dataset::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > length()) {
    throw Error(ErrorCode::InvalidArgument, "dataset slice out of range");
  }
  Dataset out;
  out.y = y.middleRows(begin, count);
  out.u = u.middleRows(begin, count);
  out.q.assign(q.begin() + begin, q.begin() + begin + count);
  if (y_noise_free.size() != 0) out.y_noise_free = y_noise_free.middleRows(begin, count);
  out.t0 = t0 + begin;
  return out;
}

Matrix uniform_input_covariance(double low, double high, Eigen::Index n_u) {
  const double w = high - low;
  return (w * w / 12.0) * Matrix::Identity(n_u, n_u);
}

std::vector<int> sample_switching(const Vector& p, std::size_t T, CounterRng& rng) {
  check_probabilities(p, 1e-9);
  std::vector<int> q(T);
  for (auto& s : q) s = rng.categorical(p);
  return q;
}

Dataset simulate(const SwitchedModel& model, const SimConfig& cfg) {
  model.validate();
  if (cfg.length < 1) throw Error(ErrorCode::InvalidArgument, "simulation length must be >= 1");

  const auto nx = model.n_x(), ny = model.n_y(), nu = model.n_u(), nn = model.n_noise();
  const int modes = model.num_modes();

  Matrix input_factor;
  if (cfg.input.kind == InputDistribution::Kind::Uniform) {
    if (!(cfg.input.low < cfg.input.high) || std::abs(cfg.input.low + cfg.input.high) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "uniform input must have symmetric bounds low = -high < high");
    }
    const Matrix qu = uniform_input_covariance(cfg.input.low, cfg.input.high, nu);
    if (max_abs(qu - model.Qu) > 1e-9 * std::max(1.0, max_abs(qu))) {
      throw Error(ErrorCode::InvalidModel, "model Qu does not match the uniform input covariance");
    }
  } else {
    input_factor = cholesky_factor(model.Qu, "Qu");
  }
  std::vector<Matrix> noise_factor(modes);
  for (int s = 1; s <= modes; ++s) noise_factor[s - 1] = cholesky_factor(model.conditional_noise_covariance(s), "Qv");

  const std::size_t total = cfg.burn_in + cfg.length;
  CounterRng mode_rng(cfg.seed, kModeStream);
  CounterRng input_rng(cfg.seed, kInputStream);
  CounterRng noise_rng(cfg.seed, kNoiseStream);
  const std::vector<int> q = sample_switching(model.p, total, mode_rng);

  Dataset out;
  out.y.resize(static_cast<Eigen::Index>(cfg.length), ny);
  out.u.resize(static_cast<Eigen::Index>(cfg.length), nu);
  out.y_noise_free.resize(static_cast<Eigen::Index>(cfg.length), ny);
  out.q.assign(q.begin() + static_cast<long>(cfg.burn_in), q.end());
  out.t0 = 0;

  Vector x = Vector::Zero(nx);
  Vector u(nu), v(nn), xi(std::max(nu, nn));
  for (std::size_t t = 0; t < total; ++t) {
    const int s = q[t] - 1;
    if (cfg.input.kind == InputDistribution::Kind::Uniform) {
      for (Eigen::Index i = 0; i < nu; ++i) u(i) = input_rng.uniform(cfg.input.low, cfg.input.high);
    } else {
      for (Eigen::Index i = 0; i < nu; ++i) xi(i) = input_rng.normal();
      u = input_factor * xi.head(nu);
    }
    for (Eigen::Index i = 0; i < nn; ++i) xi(i) = noise_rng.normal();
    v = noise_factor[s] * xi.head(nn);

    if (t >= cfg.burn_in) {
      const auto row = static_cast<Eigen::Index>(t - cfg.burn_in);
      const Vector clean = model.C * x + model.D * u;
      out.y_noise_free.row(row) = clean.transpose();
      out.y.row(row) = (clean + model.F * v).transpose();
      out.u.row(row) = u.transpose();
    }
    x = model.A[s] * x + model.B[s] * u + model.K[s] * v;
  }
  return out;
}

}  // namespace lssid

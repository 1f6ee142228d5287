#include "lssid/covariance.hpp"
#include "lssid/error.hpp"
#include "lssid/simulate.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace lssid;
using fixtures::mat;
using fixtures::vec;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lssid::Error");
  return ErrorCode::Io;
}

SwitchedModel scalar_noise_model(double a) {
  SwitchedModel m;
  m.A = {mat({{a}})};
  m.B = {mat({{0.0}})};
  m.K = {mat({{1.0}})};
  m.C = mat({{1.0}});
  m.D = mat({{0.0}});
  m.F = mat({{0.0}});
  m.p = vec({1.0});
  m.Qu = mat({{1.0 / 3.0}});
  m.Qv = {mat({{1.0}})};
  return m;
}

}  // namespace

TEST_CASE("switching sequences") {
  CounterRng r(1);
  const auto single = sample_switching(vec({1.0}), 5, r);
  CHECK(single == std::vector<int>(5, 1));

  CounterRng r2(2);
  const auto q = sample_switching(vec({0.5, 0.5}), 100000, r2);
  const double f1 = std::count(q.begin(), q.end(), 1) / 1e5;
  CHECK(std::abs(f1 - 0.5) < 0.01);

  CounterRng a(9), b(9);
  CHECK(sample_switching(vec({0.3, 0.7}), 1000, a) == sample_switching(vec({0.3, 0.7}), 1000, b));
}

TEST_CASE("simulation is a pure function of model and config") {
  const auto m = fixtures::benchmark_model();
  SimConfig cfg;
  cfg.seed = 17;
  cfg.length = 2000;
  const Dataset a = simulate(m, cfg);
  const Dataset b = simulate(m, cfg);
  CHECK(a.y == b.y);
  CHECK(a.u == b.u);
  CHECK(a.q == b.q);
  CHECK(a.y_noise_free == b.y_noise_free);
  CHECK(a.length() == 2000);
  cfg.seed = 18;
  CHECK_FALSE(simulate(m, cfg).y == a.y);
}

TEST_CASE("without B and K the output is D u") {
  auto m = fixtures::benchmark_model();
  for (int s = 0; s < 2; ++s) {
    m.B[s].setZero();
    m.K[s].setZero();
  }
  m.F.setZero();
  SimConfig cfg;
  cfg.length = 300;
  const Dataset d = simulate(m, cfg);
  CHECK(max_abs(d.y - d.u * m.D.transpose()) == 0.0);
}

TEST_CASE("noise-free channel differs from y by F v") {
  const auto m = fixtures::benchmark_model();
  SimConfig cfg;
  cfg.length = 5000;
  const Dataset d = simulate(m, cfg);
  const Matrix v = d.y - d.y_noise_free;  // F = 1
  const double var = v.squaredNorm() / static_cast<double>(v.rows());
  CHECK(var == doctest::Approx(2.25).epsilon(0.06));
  for (Eigen::Index t = 0; t < d.length(); ++t) {
    REQUIRE(std::abs(d.u(t, 0)) <= 1.0);
  }
}

TEST_CASE("stationary variance of a scalar AR(1)") {
  SimConfig cfg;
  cfg.seed = 5;
  cfg.length = 100000;
  const Dataset d = simulate(scalar_noise_model(0.5), cfg);
  const double mean = d.y.mean();
  const double var = (d.y.array() - mean).square().sum() / static_cast<double>(d.length());
  CHECK(std::abs(var - 4.0 / 3.0) < 0.05 * 4.0 / 3.0);
}

TEST_CASE("benchmark output covariances match the oracle") {
  const auto m = fixtures::benchmark_model();
  SimConfig cfg;
  cfg.seed = 23;
  cfg.length = 10000;
  const Dataset d = simulate(m, cfg);
  const std::vector<Word> words{Word{1}, Word{2}};
  const auto emp = empirical_covariances(d, m.p, words);
  const auto exact = exact_covariances(m, words);
  for (int s = 0; s < 2; ++s) {
    CHECK(std::abs(emp.t_yy[s](0, 0) - exact.table.t_yy[s](0, 0)) < 0.1 * exact.table.t_yy[s](0, 0));
  }
}

TEST_CASE("simulation refuses invalid setups") {
  auto m = fixtures::benchmark_model();
  SimConfig cfg;
  auto unstable = m;
  unstable.A[0] *= 5.0;
  CHECK(code_of([&] { (void)simulate(unstable, cfg); }) == ErrorCode::InvalidModel);
  auto wrong_qu = m;
  wrong_qu.Qu = mat({{1.0}});
  CHECK(code_of([&] { (void)simulate(wrong_qu, cfg); }) == ErrorCode::InvalidModel);
  cfg.input.low = -1.0;
  cfg.input.high = 2.0;
  CHECK(code_of([&] { (void)simulate(m, cfg); }) == ErrorCode::InvalidArgument);
  cfg = {};
  cfg.length = 0;
  CHECK(code_of([&] { (void)simulate(m, cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Gaussian inputs use Qu") {
  auto m = fixtures::benchmark_model();
  m.Qu = mat({{4.0}});
  SimConfig cfg;
  cfg.length = 50000;
  cfg.input.kind = InputDistribution::Kind::Gaussian;
  const Dataset d = simulate(m, cfg);
  CHECK(d.u.squaredNorm() / 50000.0 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("dataset validation and slicing") {
  const auto m = fixtures::benchmark_model();
  SimConfig cfg;
  cfg.length = 100;
  Dataset d = simulate(m, cfg);
  CHECK_NOTHROW(d.validate(2));
  CHECK(code_of([&] { d.validate(1); }) == ErrorCode::InvalidMode);
  const Dataset s = d.slice(10, 20);
  CHECK(s.length() == 20);
  CHECK(s.t0 == 10);
  CHECK(s.y(0, 0) == d.y(10, 0));
  CHECK(s.q[0] == d.q[10]);
  d.q.pop_back();
  CHECK(code_of([&] { d.validate(2); }) == ErrorCode::DimensionMismatch);
}

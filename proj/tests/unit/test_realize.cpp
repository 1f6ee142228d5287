#include "lssid/covariance.hpp"
#include "lssid/error.hpp"
#include "lssid/realize.hpp"
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

DeterministicModel scalar_dlss(double a, double b, double c, double d) {
  DeterministicModel m;
  m.A = {mat({{a}})};
  m.B = {mat({{b}})};
  m.C = mat({{c}});
  m.D = mat({{d}});
  return m;
}

SwitchedModel scalar_innovation(double a, double k, double q) {
  SwitchedModel m;
  m.A = {mat({{a}})};
  m.B = {mat({{0.0}})};
  m.K = {mat({{k}})};
  m.C = mat({{1.0}});
  m.D = mat({{0.0}});
  m.F = mat({{1.0}});
  m.p = vec({1.0});
  m.Qu = mat({{1.0}});
  m.Qv = {mat({{q}})};
  return m;
}

Selection scalar_selection(std::size_t len) {
  Selection sel;
  sel.n_y = 1;
  sel.n_cols = 1;
  sel.alpha = {{Word(std::vector<Word::Letter>(len, 1)), 1}};
  sel.beta = {{1, Word{}, 1}};
  return sel;
}

std::vector<Word> realization_words() { return words_up_to(2, 5); }

}  // namespace

TEST_CASE("Ho-Kalman reproduces a scalar Markov function") {
  const auto truth = scalar_dlss(0.5, 1.0, 2.0, 0.3);
  const MarkovFunction mf = [&](const Word& w) { return markov_parameter(truth, w); };
  const auto m = ho_kalman(scalar_selection(0), 1, mf, mat({{0.3}}));
  for (const auto& w : words_up_to(1, 6)) CHECK(std::abs(markov_parameter(m, w)(0, 0) - mf(w)(0, 0)) < 1e-10);

  const MarkovFunction zero = [](const Word&) { return Matrix::Zero(1, 1).eval(); };
  CHECK(code_of([&] { (void)ho_kalman(scalar_selection(0), 1, zero, mat({{0.0}})); }) == ErrorCode::SingularHankel);
  CHECK(code_of([&] { (void)ho_kalman(scalar_selection(0), 1, mf, mat({{0.3, 0.0}})); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("Ho-Kalman on the benchmark selection") {
  const auto m = fixtures::benchmark_model();
  const auto det = m.deterministic_part();
  const MarkovFunction mf = [&](const Word& w) { return markov_parameter(det, w); };
  const auto r = ho_kalman(fixtures::benchmark_selection(1), 2, mf, m.D);
  for (const auto& w : words_up_to(2, 5)) CHECK(max_abs(markov_parameter(r, w) - mf(w)) < 1e-9);
}

TEST_CASE("associated dLSS of a scalar innovation system") {
  // P = a^2 P + k^2 q = 4/3, G = a P c + k q = 5/3
  const auto m = scalar_innovation(0.5, 1.0, 1.0);
  const auto d = associated_dlss(m);
  CHECK(d.P[0](0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(d.model.B[0](0, 1) == doctest::Approx(5.0 / 3.0).epsilon(1e-10));
  CHECK(d.model.D(0, 1) == 1.0);

  const auto s = associated_slss(d.model, 1, m.p, std::vector<Matrix>{mat({{4.0 / 3.0 + 1.0}})}, m.Qu);
  CHECK(s.model.sys().K[0](0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.model.sys().Qv[0](0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("dLSS to sLSS round trip on the benchmark") {
  const auto m = fixtures::benchmark_model();
  FixedPointOptions tight{1e-13, 20000};
  const auto d = associated_dlss(m, tight);
  const auto ex = exact_covariances(m, std::vector<Word>{Word{1}});
  const auto s = associated_slss(d.model, 1, m.p, ex.t_ys, m.Qu, tight);
  for (int q = 0; q < 2; ++q) {
    CHECK(max_abs(s.model.sys().K[q] - m.K[q]) < 1e-9);
    CHECK(s.model.sys().Qv[q](0, 0) == doctest::Approx(1.125).epsilon(1e-9));
    CHECK(max_abs(s.model.sys().A[q] - m.A[q]) < 1e-14);
    CHECK(max_abs(s.model.sys().B[q] - m.B[q]) < 1e-14);
  }
}

TEST_CASE("fixed points satisfy their equations") {
  const auto m = fixtures::mimo_model();
  FixedPointOptions opts{1e-11, 10000};
  const auto d = associated_dlss(m, opts);
  Matrix sum = Matrix::Zero(2, 2);
  for (int s = 0; s < 2; ++s) sum += m.A[s] * d.P[s] * m.A[s].transpose() + m.K[s] * m.Qv[s] * m.K[s].transpose();
  for (int s = 0; s < 2; ++s) CHECK(max_abs(d.P[s] - m.p(s) * sum) < 10 * opts.tol);

  const auto& tail = d.report.delta_tail;
  REQUIRE(tail.size() >= 10);
  for (std::size_t i = tail.size() - 10; i + 1 < tail.size(); ++i) CHECK(tail[i + 1] <= tail[i]);

  CHECK(code_of([&] { (void)associated_dlss(m, {1e-12, 1}); }) == ErrorCode::NonConvergence);

  auto unstable = m;
  unstable.A[0] *= 6.0;
  unstable.A[1] *= 6.0;
  const auto err = code_of([&] { (void)associated_dlss(unstable); });
  CHECK((err == ErrorCode::InvalidModel || err == ErrorCode::NonConvergence));
}

TEST_CASE("psi from input covariances") {
  CovarianceTable t;
  t.num_modes = 1;
  t.n_y = 1;
  t.n_u = 2;
  t.p = vec({1.0});
  t.q_u = 2.0 * Matrix::Identity(2, 2);
  t.lambda_yu = WordTable(1, 2);
  t.lambda_yu.insert(Word{}, mat({{4.0, 6.0}}));
  const auto psi = psi_uy(t);
  CHECK(max_abs(psi.at(Word{}) - mat({{2.0, 3.0}})) < 1e-15);
  t.q_u.setZero();
  CHECK(code_of([&] { (void)psi_uy(t); }) == ErrorCode::SingularMatrix);
}

TEST_CASE("input-driven covariances in closed form") {
  // P = b^2 q / (1 - a^2) = 4/3, lambda_1 = c (a P c + b q d), T = c^2 P + d^2 q
  const auto psi = scalar_dlss(0.5, 1.0, 2.0, 0.5);
  const std::vector<Word> words{Word{1}, Word{1, 1}};
  const auto yd = lambda_ydyd(psi, mat({{1.0}}), vec({1.0}), words, {1e-13, 10000});
  CHECK(yd.P[0](0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(yd.lambda.at(Word{1})(0, 0) == doctest::Approx(11.0 / 3.0).epsilon(1e-10));
  CHECK(yd.lambda.at(Word{1, 1})(0, 0) == doctest::Approx(11.0 / 6.0).epsilon(1e-10));
  CHECK(yd.t[0](0, 0) == doctest::Approx(16.0 / 3.0 + 0.25).epsilon(1e-10));
  CHECK(code_of([&] { (void)lambda_ydyd(psi, mat({{1.0}}), vec({1.0}), std::vector<Word>{Word{}}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("realization from exact covariances recovers the generator") {
  const auto m = fixtures::benchmark_model();
  const auto ex = exact_covariances(m, realization_words());
  RealizationOptions opts;
  opts.fixed_point = {1e-13, 20000};
  const auto r = covariance_realization(ex.table, fixtures::benchmark_selection(2), fixtures::benchmark_selection(1),
                                        opts);
  CHECK(r.diagnostics.hankel_rank_psi == 3);
  CHECK(r.diagnostics.hankel_rank_markov == 3);
  CHECK(r.diagnostics.schur_radius < 1.0);
  const auto iso = find_isomorphism(r.model.sys(), m, 1e-7);
  INFO(iso.diagnostic);
  CHECK(iso.isomorphic());
  for (int s = 0; s < 2; ++s) CHECK(r.model.sys().Qv[s](0, 0) == doctest::Approx(1.125).epsilon(1e-8));

  // lambda_yy splits into the stochastic and the input-driven part.
  const auto yd = lambda_ydyd(r.psi_model, ex.table.q_u, m.p, realization_words(), opts.fixed_point);
  for (const auto& w : realization_words())
    CHECK(max_abs(ex.table.lambda_yy.at(w) - yd.lambda.at(w) - ex.lambda_ys.at(w)) < 1e-8);
}

TEST_CASE("realization of a system without noise is refused") {
  auto m = fixtures::benchmark_model();
  for (auto& k : m.K) k.setZero();
  m.F.setZero();
  const auto ex = exact_covariances(m, realization_words());
  Selection sel = fixtures::benchmark_selection(2);
  const auto err = code_of([&] {
    (void)covariance_realization(ex.table, sel, fixtures::benchmark_selection(1));
  });
  CHECK(err == ErrorCode::NotFullRank);
}

TEST_CASE("LTI realization matches the steady-state Kalman filter") {
  // x+ = a x + w, y = x + e with var(w) = q, var(e) = r
  const double a = 0.8, q = 0.5, r = 1.0;
  SwitchedModel m;
  m.A = {mat({{a}})};
  m.B = {mat({{1.0}})};
  m.K = {mat({{1.0, 0.0}})};
  m.C = mat({{1.0}});
  m.D = mat({{0.0}});
  m.F = mat({{0.0, 1.0}});
  m.p = vec({1.0});
  m.Qu = mat({{1.0}});
  m.Qv = {mat({{q, 0.0}, {0.0, r}})};
  const double bq = r * (1 - a * a) - q;
  const double sigma = (-bq + std::sqrt(bq * bq + 4 * q * r)) / 2;

  const auto ex = exact_covariances(m, words_up_to(1, 4));
  Selection sel = scalar_selection(0);
  sel.n_cols = 2;
  RealizationOptions opts;
  opts.fixed_point = {1e-14, 20000};
  const auto res = covariance_realization(ex.table, sel, scalar_selection(0), opts);
  const auto& s = res.model.sys();
  CHECK(s.A[0](0, 0) == doctest::Approx(a).epsilon(1e-9));
  // Innovation gain and variance are invariant under the scalar state scaling
  // once multiplied by C.
  CHECK(s.C(0, 0) * s.K[0](0, 0) == doctest::Approx(a * sigma / (sigma + r)).epsilon(1e-8));
  CHECK(s.Qv[0](0, 0) == doctest::Approx(sigma + r).epsilon(1e-8));
}

TEST_CASE("selection search") {
  const auto scalar = scalar_dlss(0.5, 1.0, 2.0, 0.0);
  const MarkovFunction mf = [&](const Word& w) { return markov_parameter(scalar, w); };
  const auto sel = search_selection(mf, 1, 1, 1, 1);
  REQUIRE(sel.dim() == 1);
  CHECK(sel.alpha[0].word == Word{1});
  CHECK(sel.beta[0].mode == 1);
  CHECK(sel.beta[0].word == Word{1});

  const MarkovFunction zero = [](const Word&) { return Matrix::Zero(1, 1).eval(); };
  CHECK(code_of([&] { (void)search_selection(zero, 1, 1, 1, 1); }) == ErrorCode::NoSelectionFound);
  SearchOptions tiny;
  tiny.budget = 3;
  CHECK(code_of([&] { (void)search_selection(zero, 2, 2, 1, 1, tiny); }) == ErrorCode::NoSelectionFound);

  // Any full-rank selection gives a Markov-equivalent realization.
  const auto m = fixtures::benchmark_model();
  const auto det = m.deterministic_part();
  const MarkovFunction bm = [&](const Word& w) { return markov_parameter(det, w); };
  const auto found = search_selection(bm, 2, 3, 1, 1);
  CHECK(numerical_rank(build_hankel(found, 2, bm).H) == 3);
  SearchOptions later;
  later.skip = 5;
  const auto other = search_selection(bm, 2, 3, 1, 1, later);
  const auto r1 = ho_kalman(found, 2, bm, m.D);
  const auto r2 = ho_kalman(other, 2, bm, m.D);
  for (const auto& w : words_up_to(2, 5)) {
    CHECK(max_abs(markov_parameter(r1, w) - bm(w)) < 1e-8);
    CHECK(max_abs(markov_parameter(r2, w) - bm(w)) < 1e-8);
  }
}

#include "lssid/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using lssid::CounterRng;

TEST_CASE("same seed and stream give the same sequence") {
  CounterRng a(42, 1), b(42, 1);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  CounterRng c(42, 2), d(43, 1);
  CounterRng e(42, 1);
  int same_stream = 0, same_seed = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = e.next_u64();
    same_stream += x == c.next_u64();
    same_seed += x == d.next_u64();
  }
  CHECK(same_stream == 0);
  CHECK(same_seed == 0);
}

TEST_CASE("uniform draws stay in range with the right moments") {
  CounterRng r(7);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(-1.0, 1.0);
    REQUIRE(u >= -1.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(std::abs(sum / n) < 5.0 * std::sqrt(1.0 / 3.0 / n));
  CHECK(sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("normal draws have zero mean and unit variance") {
  CounterRng r(11, 3);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, quart = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
    quart += z * z * z * z;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(quart / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("categorical draws follow the probabilities") {
  CounterRng r(3);
  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.3;
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int k = r.categorical(p);
    REQUIRE(k >= 1);
    REQUIRE(k <= 3);
    ++counts[k - 1];
  }
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(p(k) * (1 - p(k)) / n);
    CHECK(std::abs(counts[k] / double(n) - p(k)) < 5.0 * se);
  }
}

#pragma once

#include "lssid/algebra.hpp"
#include "lssid/model.hpp"

#include <cmath>

namespace fixtures {

using lssid::Matrix;
using lssid::Vector;

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// The two-mode, three-state benchmark system with uniform U(-1, 1) input and
/// Gaussian noise of standard deviation sigma_v.
inline lssid::SwitchedModel benchmark_model(double sigma_v = 1.5) {
  lssid::SwitchedModel m;
  m.A = {mat({{0.1039, 0.0255, 0.5598}, {0.4338, 0.0067, 0.0078}, {0.3435, 0.0412, 0.0776}}),
         mat({{0.1834, 0.2456, 0.0511}, {0.0572, 0.2445, 0.0642}, {0.1395, 0.6413, 0.5598}})};
  m.B = {mat({{1.6143}, {5.9383}, {7.3671}}), mat({{6.0624}, {4.9800}, {3.1372}})};
  m.K = {mat({{0.4942}, {0.2827}, {0.8098}}), mat({{0.6215}, {0.1561}, {0.7780}})};
  m.C = mat({{0.1144, 0.7623, 0.0020}});
  m.D = mat({{1.0}});
  m.F = mat({{1.0}});
  m.p = vec({0.5, 0.5});
  m.Qu = mat({{1.0 / 3.0}});
  for (int s = 0; s < 2; ++s) m.Qv.push_back(m.p(s) * sigma_v * sigma_v * Matrix::Identity(1, 1));
  return m;
}

/// alpha = {(11,1), (1,1), (eps,1)}, beta = {(2,eps,1), (1,2,1), (1,1,1)}.
inline lssid::Selection benchmark_selection(int n_cols) {
  lssid::Selection sel;
  sel.n_y = 1;
  sel.n_cols = n_cols;
  sel.alpha = {{lssid::Word{1, 1}, 1}, {lssid::Word{1}, 1}, {lssid::Word{}, 1}};
  sel.beta = {{2, lssid::Word{}, 1}, {1, lssid::Word{2}, 1}, {1, lssid::Word{1}, 1}};
  return sel;
}

/// A second stable two-mode model with two outputs and two inputs, used for
/// shape and multi-channel checks.
inline lssid::SwitchedModel mimo_model() {
  lssid::SwitchedModel m;
  m.A = {mat({{0.3, 0.1}, {-0.2, 0.4}}), mat({{-0.25, 0.05}, {0.3, 0.2}})};
  m.B = {mat({{1.0, 0.2}, {0.0, 0.5}}), mat({{0.3, -0.4}, {0.8, 0.1}})};
  m.K = {mat({{0.4, 0.1}, {0.0, 0.3}}), mat({{-0.2, 0.2}, {0.1, 0.5}})};
  m.C = mat({{1.0, 0.0}, {0.3, 1.0}});
  m.D = mat({{0.5, 0.0}, {0.0, 0.2}});
  m.F = Matrix::Identity(2, 2);
  m.p = vec({0.3, 0.7});
  m.Qu = mat({{1.0 / 3.0, 0.0}, {0.0, 1.0 / 3.0}});
  m.Qv = {0.3 * mat({{1.0, 0.2}, {0.2, 0.5}}), 0.7 * mat({{0.8, -0.1}, {-0.1, 0.6}})};
  return m;
}

}  // namespace fixtures

#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "cointss/cointss.hpp"

namespace cointss::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_orthogonal(Rng& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
  return qr.householderQ();
}

/// Q1 diag(exp(u)) Q2 with u uniform on (-1, 1): condition number below e^2.
inline Matrix random_invertible(Rng& rng, Eigen::Index n) {
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = std::exp(uniform(rng, -1.0, 1.0));
  return random_orthogonal(rng, n) * s.asDiagonal() * random_orthogonal(rng, n);
}

/// Random matrix shifted so its spectral abscissa lies in (-1, -0.5).
inline Matrix random_hurwitz(Rng& rng, Eigen::Index n) {
  if (n == 0) return Matrix(0, 0);
  Matrix g = random_matrix(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  const double shift = spectral_abscissa(g) + 0.5 + uniform(rng, 0.0, 0.5);
  return g - shift * Matrix::Identity(n, n);
}

inline Matrix random_spd(Rng& rng, Eigen::Index m) {
  const Matrix w = random_matrix(rng, m, m, 1.0 / std::sqrt(static_cast<double>(m)));
  return symmetrize(w * w.transpose() + 0.5 * Matrix::Identity(m, m));
}

/// Random canonical form with driver dimension m = d. C1 is made positive
/// lower triangular; the stationary block is not put in echelon form.
inline CointCanonicalForm random_canonical(Rng& rng, Eigen::Index d,
                                           Eigen::Index c, Eigen::Index n2) {
  const Eigen::Index m = d;
  const Matrix c1 = positive_lower_triangularize(random_matrix(rng, d, c)).C1;
  return CointCanonicalForm(c, random_hurwitz(rng, n2), random_matrix(rng, c, m),
                            random_matrix(rng, n2, m), c1,
                            random_matrix(rng, d, n2),
                            LevySpec::brownian(random_spd(rng, m)));
}

/// Cointegrated MCARMA(p, p-1) model of dimension d with c unit roots: a
/// random canonical form with N = p d, conjugated and read off in companion
/// coordinates.
inline McarmaModel random_cointegrated_mcarma(Rng& rng, Eigen::Index d, int p,
                                              Eigen::Index c) {
  const Eigen::Index n = p * d;
  const auto cf = random_canonical(rng, d, c, n - c);
  const auto m = conjugate(assemble_from_canonical(cf), random_invertible(rng, n));
  return ss_to_mcarma(m);
}

/// c = 1, A2 = [-1], B1 = [1 0], B2 = [0 1], C = I2, Sigma_L = I2.
inline CointCanonicalForm scalar_fixture(LevySpec levy = LevySpec::brownian(
                                             Matrix::Identity(2, 2))) {
  Matrix b1(1, 2), b2(1, 2), c1(2, 1), c2(2, 1);
  b1 << 1, 0;
  b2 << 0, 1;
  c1 << 1, 0;
  c2 << 0, 1;
  return CointCanonicalForm(1, Matrix::Constant(1, 1, -1.0), b1, b2, c1, c2,
                            std::move(levy));
}

// Stationary block with non-normal A2 so that lagged output covariances are
// far from symmetric.
inline CointCanonicalForm asymmetric_fixture() {
  Matrix a2(2, 2);
  a2 << -0.5, 2.0, -0.3, -1.0;
  Matrix b1(1, 2), b2(2, 2), c2(2, 2);
  b1 << 0.6, 0.4;
  b2 << 1.0, 0.0, 0.5, 1.0;
  c2 << 1.0, 0.0, 0.3, 1.0;
  const Matrix c1 = Eigen::Vector2d(1, 1).normalized();
  return CointCanonicalForm(1, a2, b1, b2, c1, c2, LevySpec::brownian(Matrix::Identity(2, 2)));
}

/// Composite Simpson rule for a matrix-valued integrand on [a, b].
inline Matrix simpson(const std::function<Matrix(double)>& f, double a, double b,
                      int intervals = 2000) {
  if (intervals % 2 == 1) ++intervals;
  const double step = (b - a) / intervals;
  Matrix acc = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) {
    acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + k * step);
  }
  return acc * (step / 3.0);
}

/// Sample covariance (1/n normalization) of the rows of x and y, plus the
/// standard error of each entry.
struct CovarianceEstimate {
  Matrix cov;
  Matrix se;
};

inline CovarianceEstimate sample_cross_covariance(const Matrix& x, const Matrix& y,
                                                  bool centered = true) {
  const auto n = static_cast<double>(x.rows());
  Matrix xc = x, yc = y;
  if (centered) {
    xc = x.rowwise() - x.colwise().mean();
    yc = y.rowwise() - y.colwise().mean();
  }
  CovarianceEstimate est;
  est.cov = xc.transpose() * yc / n;
  est.se.resize(x.cols(), y.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const Vector prod = xc.col(i).cwiseProduct(yc.col(j));
      const double var = (prod.array() - est.cov(i, j)).square().sum() / n;
      est.se(i, j) = std::sqrt(var / n);
    }
  }
  return est;
}

inline CovarianceEstimate sample_covariance(const Matrix& x, bool centered = true) {
  return sample_cross_covariance(x, x, centered);
}

}  // namespace cointss::testing

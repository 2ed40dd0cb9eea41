#pragma once

// Exact discretization of a canonical model on the grid {nh} and closed-form
// first and second moments of the continuous and sampled output.

#include "cointss/matops.hpp"
#include "cointss/model.hpp"

namespace cointss {

/// Discrete-time model X_n = e^{Ah} X_{n-1} + R_n, Cov(R_n) = sigma_tilde.
struct SampledModel {
  double h = 0.0;
  Eigen::Index c = 0;
  Matrix eAh;          // blockdiag(I_c, e^{A2 h})
  Matrix sigma_tilde;  // N x N
  Matrix gamma0;       // stationary covariance of X2

  Eigen::Index state_dim() const { return eAh.rows(); }
  Eigen::Index stationary_dim() const { return state_dim() - c; }

  Matrix eA2h() const { return eAh.bottomRightCorner(stationary_dim(), stationary_dim()); }
  Matrix sigma11() const { return sigma_tilde.topLeftCorner(c, c); }
  Matrix sigma12() const { return sigma_tilde.topRightCorner(c, stationary_dim()); }
  Matrix sigma21() const { return sigma_tilde.bottomLeftCorner(stationary_dim(), c); }
  Matrix sigma22() const {
    return sigma_tilde.bottomRightCorner(stationary_dim(), stationary_dim());
  }
};

inline SampledModel discretize(const CointCanonicalForm& cf, double h) {
  require(std::isfinite(h) && h > 0.0, ErrorKind::domain,
          "sampling step h must be positive");
  const Eigen::Index c = cf.c();
  const Eigen::Index n2 = cf.stationary_dim();
  const Matrix& sigma = cf.levy().sigma_L;

  SampledModel sm;
  sm.h = h;
  sm.c = c;
  sm.eAh = block_diag(Matrix::Identity(c, c), expm(cf.A2() * h));

  const Matrix q22 = symmetrize(cf.B2() * sigma * cf.B2().transpose());
  const Matrix g21 = cf.B2() * sigma * cf.B1().transpose();
  sm.sigma_tilde = Matrix::Zero(c + n2, c + n2);
  sm.sigma_tilde.topLeftCorner(c, c) =
      h * symmetrize(cf.B1() * sigma * cf.B1().transpose());
  if (n2 > 0) {
    const Matrix s21 = cross_integral(cf.A2(), g21, h);
    sm.sigma_tilde.bottomLeftCorner(n2, c) = s21;
    sm.sigma_tilde.topRightCorner(c, n2) = s21.transpose();
    sm.sigma_tilde.bottomRightCorner(n2, n2) = gramian_integral(cf.A2(), q22, h);
    sm.gamma0 = lyapunov_solve(cf.A2(), q22);
  } else {
    sm.gamma0 = Matrix(0, 0);
  }
  return sm;
}

/// E[Y(t)] with deterministic X1(0) = x1_0 and a mean-zero stationary X2.
inline Vector mean(const CointCanonicalForm& cf, const Vector& x1_0) {
  require(x1_0.size() == cf.c(), ErrorKind::dimension,
          "x1_0 must have length c = " + std::to_string(cf.c()));
  return cf.C1() * x1_0;
}

/// E[(Y(t) - EY(t)) (Y(t+s) - EY(t+s))^T] for a stationary start of X2.
inline Matrix cov_continuous(const CointCanonicalForm& cf, double t, double s) {
  require(std::isfinite(t) && t >= 0.0, ErrorKind::domain, "t must be >= 0");
  require(std::isfinite(s) && s >= 0.0, ErrorKind::domain, "s must be >= 0");
  const Matrix& sigma = cf.levy().sigma_L;
  const Matrix c1b1 = cf.C1() * cf.B1();
  Matrix out = t * c1b1 * sigma * c1b1.transpose();
  if (cf.stationary_dim() == 0) return out;

  const Matrix& a2 = cf.A2();
  const Matrix& c2 = cf.C2();
  const Matrix gamma0 =
      lyapunov_solve(a2, symmetrize(cf.B2() * sigma * cf.B2().transpose()));
  const Matrix g = cf.B2() * sigma * c1b1.transpose();
  const Matrix cross = cross_integral(a2, g, t);
  out += c2 * gamma0 * expm(a2.transpose() * s) * c2.transpose();
  out += c2 * cross;
  out += (c2 * expm(a2 * s) * cross).transpose();
  return out;
}

/// Cov(Y_n, Y_{n+s}) of the process sampled at step h.
inline Matrix cov_sampled(const SampledModel& sm, const CointCanonicalForm& cf,
                          long n, long s) {
  require(n >= 1, ErrorKind::domain, "n must be >= 1");
  require(s >= 0, ErrorKind::domain, "s must be >= 0");
  return cov_continuous(cf, static_cast<double>(n) * sm.h,
                        static_cast<double>(s) * sm.h);
}

}  // namespace cointss

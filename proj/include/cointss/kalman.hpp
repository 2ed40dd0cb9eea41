#pragma once

// Steady-state Kalman filter of the sampled model: fixed-point iteration of
// the discrete algebraic Riccati equation, gain, and linear innovations.

#include <cmath>
#include <optional>
#include <string>

#include "cointss/matops.hpp"
#include "cointss/model.hpp"
#include "cointss/moments.hpp"
#include "cointss/realization.hpp"

namespace cointss {

struct KalmanOptions {
  double tol = 1e-12;
  long max_iter = 1000000;
};

struct KalmanSolution {
  Matrix omega;        // N x N
  Matrix gain;         // N x d
  Matrix v;            // C omega C^T
  Matrix closed_loop;  // e^{Ah} - K C
  Matrix C;
  Matrix eAh;
  long iterations = 0;
  double residual = 0.0;
  double closed_loop_radius = 0.0;
};

namespace detail {

inline Eigen::LLT<Matrix> spd_factor(const Matrix& s, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrize(s));
  bool ok = llt.info() == Eigen::Success;
  if (ok && s.rows() > 0) {
    const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
    ok = diag.minCoeff() > 1e-12 * std::max(1.0, diag.maxCoeff());
  }
  require(ok, ErrorKind::conditioning, std::string(what) + " is numerically singular");
  return llt;
}

inline Matrix riccati_map(const Matrix& f, const Matrix& c, const Matrix& q,
                          const Matrix& omega) {
  const Matrix fo = f * omega;
  const Matrix oc = omega * c.transpose();
  const auto llt = spd_factor(c * oc, "C Omega C^T");
  const Matrix foc = f * oc;
  return symmetrize(fo * f.transpose() - foc * llt.solve(foc.transpose()) + q);
}

}  // namespace detail

inline double riccati_residual(const Matrix& f, const Matrix& c, const Matrix& q,
                               const Matrix& omega) {
  return (omega - detail::riccati_map(f, c, q, omega)).norm();
}

/// Iterates the Riccati map from Omega_0 = sigma_tilde until successive
/// iterates differ by less than tol * (1 + |Omega|).
inline KalmanSolution solve_steady_state(const SampledModel& sm,
                                         const CointCanonicalForm& cf,
                                         const KalmanOptions& opt = {}) {
  require(opt.tol > 0.0, ErrorKind::parameter, "tolerance must be positive");
  require(opt.max_iter >= 1, ErrorKind::parameter, "max_iter must be >= 1");
  require(sm.state_dim() == cf.state_dim(), ErrorKind::dimension,
          "sampled model does not match canonical form");
  const Matrix f = sm.eAh;
  const Matrix c = cf.C();
  const Matrix& q = sm.sigma_tilde;

  KalmanSolution ks;
  Matrix omega = symmetrize(q);
  double step = 0.0;
  bool converged = false;
  for (long it = 1; it <= opt.max_iter; ++it) {
    Matrix next = detail::riccati_map(f, c, q, omega);
    step = (next - omega).norm();
    omega = std::move(next);
    ks.iterations = it;
    if (step < opt.tol * (1.0 + omega.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    fail(ErrorKind::convergence,
         "Riccati iteration did not converge in " + std::to_string(opt.max_iter) +
             " iterations (last step " + std::to_string(step) + ", residual " +
             std::to_string(riccati_residual(f, c, q, omega)) + ")");
  }

  ks.omega = omega;
  ks.C = c;
  ks.eAh = f;
  ks.v = symmetrize(c * omega * c.transpose());
  const auto llt = detail::spd_factor(ks.v, "innovation covariance");
  ks.gain = llt.solve(c * omega * f.transpose()).transpose();
  ks.closed_loop = f - ks.gain * c;
  ks.residual = riccati_residual(f, c, q, omega);
  ks.closed_loop_radius = spectral_radius(ks.closed_loop);

  require(ks.residual <= 1e-10 * (1.0 + omega.norm()), ErrorKind::convergence,
          "Riccati residual " + std::to_string(ks.residual) + " above tolerance");
  require(ks.closed_loop_radius < 1.0, ErrorKind::stability,
          "closed loop e^{Ah} - KC is not stable (spectral radius " +
              std::to_string(ks.closed_loop_radius) + ")");
  require(min_eigenvalue_symmetric(ks.v) > 0.0, ErrorKind::conditioning,
          "innovation covariance is not positive definite");
  return ks;
}

struct FilterOutput {
  Matrix innovations;  // n x d
  Matrix x_hat;        // n x N
};

/// x_hat_k = (e^{Ah} - KC) x_hat_{k-1} + K y_{k-1} and eps_k = y_k - C x_hat_k,
/// with x_hat for the first row given.
inline FilterOutput filter_innovations(const KalmanSolution& ks, const Matrix& y,
                                       std::optional<Vector> x_hat_0 = std::nullopt) {
  const Eigen::Index d = ks.C.rows();
  const Eigen::Index n_state = ks.C.cols();
  require(y.cols() == d, ErrorKind::dimension,
          "observations must have " + std::to_string(d) + " columns, got " +
              std::to_string(y.cols()));
  require_finite(y, "observations");
  Vector x = x_hat_0.value_or(Vector::Zero(n_state));
  require(x.size() == n_state, ErrorKind::dimension,
          "x_hat_0 must have length " + std::to_string(n_state));

  FilterOutput out;
  out.innovations.resize(y.rows(), d);
  out.x_hat.resize(y.rows(), n_state);
  for (Eigen::Index k = 0; k < y.rows(); ++k) {
    if (k > 0) x = ks.closed_loop * x + ks.gain * y.row(k - 1).transpose();
    out.x_hat.row(k) = x.transpose();
    out.innovations.row(k) = y.row(k) - (ks.C * x).transpose();
  }
  return out;
}

/// Controllability of (e^{Ah}, K) and observability of (e^{Ah}, C).
inline MinimalityReport check_filtered_controllability(
    const KalmanSolution& ks, double rel_tol = kDefaultRankTol) {
  return minimality_report(ks.eAh, ks.gain, ks.C, rel_tol);
}

}  // namespace cointss

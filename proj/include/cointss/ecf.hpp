#pragma once

// Error-correction decomposition of the sampled model: transfer function
// k(z) of the innovations filter, the long-run matrix k(1) = -alpha beta^T,
// the short-run filter k~(z), ECF residuals and innovation diagnostics.

#include <cmath>
#include <string>
#include <vector>

#include "cointss/kalman.hpp"
#include "cointss/matops.hpp"
#include "cointss/model.hpp"
#include "cointss/simulate.hpp"

namespace cointss {

inline constexpr int kDefaultTruncation = 200;

/// k(z) = I - C [I - F z]^{-1} K z with F = e^{Ah} - K C.
inline ComplexMatrix transfer_eval(const KalmanSolution& ks, Complex z) {
  const Eigen::Index n = ks.closed_loop.rows();
  const Eigen::Index d = ks.C.rows();
  const ComplexMatrix resolvent =
      ComplexMatrix::Identity(n, n) - ks.closed_loop.cast<Complex>() * z;
  Eigen::FullPivLU<ComplexMatrix> lu(resolvent);
  require(lu.isInvertible() && lu.rcond() > 1e-14, ErrorKind::singularity,
          "I - (e^{Ah} - KC) z is singular");
  return ComplexMatrix::Identity(d, d) -
         ks.C.cast<Complex>() * lu.solve(ks.gain.cast<Complex>()) * z;
}

inline Matrix k_at_one(const KalmanSolution& ks) {
  const Eigen::Index n = ks.closed_loop.rows();
  const Eigen::Index d = ks.C.rows();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - ks.closed_loop);
  require(lu.isInvertible(), ErrorKind::singularity,
          "I - (e^{Ah} - KC) is singular");
  return Matrix::Identity(d, d) - ks.C * lu.solve(ks.gain);
}

struct AlphaBeta {
  Matrix alpha;  // d x r
  Matrix beta;   // d x r
  int r = 0;
};

/// k1 = -alpha beta^T with r = d - c. When `c1` is given, beta^T C1 = 0 is
/// checked as well.
inline AlphaBeta factor_alpha_beta(const Matrix& k1, Eigen::Index c,
                                   const Matrix* c1 = nullptr,
                                   double rel_tol = kDefaultRankTol) {
  require_square(k1, "k(1)");
  const Eigen::Index d = k1.rows();
  const auto r = static_cast<int>(d - c);
  require(r > 0 && r < d, ErrorKind::rank,
          "cointegration rank d - c = " + std::to_string(r) +
              " is outside 0 < r < d");
  const int rank = numerical_rank(k1, rel_tol).rank;
  require(rank == r, ErrorKind::rank,
          "numerical rank of k(1) is " + std::to_string(rank) +
              ", expected d - c = " + std::to_string(r));
  auto fac = signed_rank_factor(k1, r);
  AlphaBeta ab{-fac.left, fac.right, r};
  if (c1 != nullptr) {
    require((ab.beta.transpose() * *c1).norm() <= 1e-6, ErrorKind::rank,
            "beta is not orthogonal to C1");
  }
  return ab;
}

struct EcfDecomposition {
  Matrix k1;
  Matrix alpha;
  Matrix beta;
  int r = 0;
  std::vector<Matrix> L;       // L_0 = I, L_j = -C F^{j-1} K
  std::vector<Matrix> Ktilde;  // K~_0 = 0, K~_j = -C F^j (I - F)^{-1} K
  int J = 0;
  double tail_bound = 0.0;
  double closed_loop_radius = 0.0;
  Matrix C1;
};

/// Fills L, Ktilde, J and tail_bound.
inline EcfDecomposition ma_and_ktilde_coeffs(const KalmanSolution& ks, int J) {
  require(J >= 1, ErrorKind::parameter, "truncation J must be >= 1");
  const Eigen::Index n = ks.closed_loop.rows();
  const Eigen::Index d = ks.C.rows();
  const Matrix& f = ks.closed_loop;
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - f);
  require(lu.isInvertible(), ErrorKind::singularity,
          "I - (e^{Ah} - KC) is singular");
  const Matrix geometric = lu.solve(ks.gain);  // (I - F)^{-1} K

  EcfDecomposition dec;
  dec.J = J;
  dec.L.reserve(static_cast<std::size_t>(J + 1));
  dec.Ktilde.reserve(static_cast<std::size_t>(J + 1));
  dec.L.push_back(Matrix::Identity(d, d));
  dec.Ktilde.push_back(Matrix::Zero(d, d));
  Matrix c_power = ks.C;  // C F^{j-1}
  for (int j = 1; j <= J; ++j) {
    dec.L.push_back(-c_power * ks.gain);
    c_power = c_power * f;
    dec.Ktilde.push_back(-c_power * geometric);
  }
  dec.closed_loop_radius = spectral_radius(f);
  dec.tail_bound =
      ks.C.norm() * std::pow(dec.closed_loop_radius, J) * geometric.norm();
  return dec;
}

/// Full decomposition for a solved canonical model.
inline EcfDecomposition decompose(const KalmanSolution& ks,
                                  const CointCanonicalForm& cf,
                                  int J = kDefaultTruncation,
                                  double rel_tol = kDefaultRankTol) {
  EcfDecomposition dec = ma_and_ktilde_coeffs(ks, J);
  dec.k1 = k_at_one(ks);
  dec.C1 = cf.C1();
  const AlphaBeta ab = factor_alpha_beta(dec.k1, cf.c(), &dec.C1, rel_tol);
  dec.alpha = ab.alpha;
  dec.beta = ab.beta;
  dec.r = ab.r;
  return dec;
}

/// sum_{j=1}^{J} K~_j z^j
inline ComplexMatrix ktilde_eval(const EcfDecomposition& dec, Complex z) {
  const Eigen::Index d = dec.L[0].rows();
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  Complex zj = 1.0;
  for (int j = 1; j <= dec.J; ++j) {
    zj *= z;
    out += dec.Ktilde[static_cast<std::size_t>(j)].cast<Complex>() * zj;
  }
  return out;
}

struct EcfResiduals {
  Eigen::Index first_row = 0;  // row of `y` matching residuals.row(0)
  Matrix residuals;
};

/// eps_n = dY_n - alpha beta^T Y_{n-1} - sum_{j=1}^{J} K~_j dY_{n-j} for the
/// rows n = J+1..rows-1 (0-based) where all lags are available.
inline EcfResiduals ecf_residuals(const EcfDecomposition& dec, const Matrix& y,
                                  int J) {
  require(J >= 1 && J <= dec.J, ErrorKind::parameter,
          "J must lie in 1.." + std::to_string(dec.J));
  const Eigen::Index d = dec.alpha.rows();
  require(y.cols() == d, ErrorKind::dimension,
          "path must have " + std::to_string(d) + " columns");
  const Eigen::Index n = y.rows();
  require(n >= J + 2, ErrorKind::length,
          "path needs at least J + 2 = " + std::to_string(J + 2) + " rows");
  const Matrix dy = y.bottomRows(n - 1) - y.topRows(n - 1);  // dy.row(k-1) = dY_k
  const Matrix ab = dec.alpha * dec.beta.transpose();

  EcfResiduals out;
  out.first_row = J + 1;
  out.residuals.resize(n - J - 1, d);
  for (Eigen::Index k = J + 1; k < n; ++k) {
    Vector e = dy.row(k - 1).transpose() - ab * y.row(k - 1).transpose();
    for (int j = 1; j <= J; ++j) {
      e -= dec.Ktilde[static_cast<std::size_t>(j)] * dy.row(k - j - 1).transpose();
    }
    out.residuals.row(k - J - 1) = e.transpose();
  }
  return out;
}

struct StructuralReport {
  Matrix P;
  Matrix R;
  double idempotency_error = 0.0;
  int rank_P = 0;
  double reconstruction_error = 0.0;
  bool passes = false;
};

/// P = I - C1 (K1 C1)^{-1} K1, R = C2 (I - e^{A2 h})^{-1} K2 and the
/// identity k(1) = P (I + P R P)^{-1}.
inline StructuralReport structural_check(const KalmanSolution& ks,
                                         const SampledModel& sm,
                                         const CointCanonicalForm& cf,
                                         double rel_tol = kDefaultRankTol) {
  const Eigen::Index c = cf.c();
  const Eigen::Index d = cf.obs_dim();
  const Eigen::Index n2 = cf.stationary_dim();
  const Matrix k1_gain = ks.gain.topRows(c);
  const Matrix k2_gain = ks.gain.bottomRows(n2);
  const Matrix kc = k1_gain * cf.C1();
  Eigen::FullPivLU<Matrix> lu_kc(kc);
  require(c == 0 || (lu_kc.isInvertible() && lu_kc.rcond() > 1e-12),
          ErrorKind::conditioning, "K1 C1 is singular");

  StructuralReport rep;
  const Matrix eye = Matrix::Identity(d, d);
  rep.P = c == 0 ? eye : Matrix(eye - cf.C1() * lu_kc.solve(k1_gain));
  Eigen::FullPivLU<Matrix> lu_a2(Matrix::Identity(n2, n2) - sm.eA2h());
  rep.R = n2 == 0 ? Matrix(Matrix::Zero(d, d)) : Matrix(cf.C2() * lu_a2.solve(k2_gain));
  rep.idempotency_error = (rep.P * rep.P - rep.P).norm();
  rep.rank_P = numerical_rank(rep.P, rel_tol).rank;
  const Matrix recon = rep.P * (eye + rep.P * rep.R * rep.P).inverse();
  const Matrix k1 = k_at_one(ks);
  rep.reconstruction_error = (k1 - recon).norm();
  rep.passes = rep.idempotency_error <= 1e-10 && rep.rank_P == d - c &&
               rep.reconstruction_error <= 1e-8;
  return rep;
}

struct AltRepresentation {
  Eigen::Index first_row = 0;
  Matrix innovations;
};

/// eps_n = sum_{j=0}^{J} L_j Y2_{n-j} + sum_{j=0}^{J} Kbar_j C1 R1_{n-j} with
/// Kbar_0 = I, Kbar_j = -K~_j, for rows n = J..rows-1.
inline AltRepresentation innovations_alt_rep(const EcfDecomposition& dec,
                                             const PathSet& ps, int J) {
  require(J >= 1 && J <= dec.J, ErrorKind::parameter,
          "J must lie in 1.." + std::to_string(dec.J));
  const Eigen::Index d = dec.L[0].rows();
  const Eigen::Index n = ps.n_steps();
  require(ps.y2.rows() == n && ps.y2.cols() == d && ps.r1.rows() == n &&
              ps.C1.rows() == d && ps.C1.cols() == ps.r1.cols(),
          ErrorKind::data, "path set lacks the Y2 / R1 components");
  require(n > J, ErrorKind::length, "path needs more than J rows");
  const Matrix c1r1 = ps.r1 * ps.C1.transpose();

  AltRepresentation out;
  out.first_row = J;
  out.innovations.resize(n - J, d);
  for (Eigen::Index k = J; k < n; ++k) {
    Vector e = ps.y2.row(k).transpose() + c1r1.row(k).transpose();
    for (int j = 1; j <= J; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      e += dec.L[uj] * ps.y2.row(k - j).transpose() -
           dec.Ktilde[uj] * c1r1.row(k - j).transpose();
    }
    out.innovations.row(k - J) = e.transpose();
  }
  return out;
}

struct WhitenessReport {
  Eigen::Index n = 0;
  int max_lag = 0;
  double band = 0.0;
  std::vector<Matrix> autocorrelation;  // lags 1..max_lag
  std::vector<double> max_abs;          // per lag
  bool degenerate = false;
  bool passes = false;
};

/// Lag-k sample autocorrelations rho_ij(k) = gamma_ij(k) / sqrt(gamma_ii(0)
/// gamma_jj(0)) with gamma_ij(k) = n^{-1} sum_t e_i(t+k) e_j(t), against the
/// band 3 / sqrt(n).
inline WhitenessReport whiteness_diagnostic(const Matrix& eps, int max_lag) {
  require(max_lag >= 1, ErrorKind::parameter, "max_lag must be >= 1");
  const Eigen::Index n = eps.rows();
  require(n >= 100 * static_cast<Eigen::Index>(max_lag), ErrorKind::length,
          "whiteness check needs at least 100 * max_lag rows");
  WhitenessReport rep;
  rep.n = n;
  rep.max_lag = max_lag;
  rep.band = 3.0 / std::sqrt(static_cast<double>(n));

  const Matrix centered = eps.rowwise() - eps.colwise().mean();
  const Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(n);
  if (var.size() == 0 || var.minCoeff() <= 1e-300) {
    rep.degenerate = true;
    return rep;
  }
  const Vector inv_sd = var.cwiseSqrt().cwiseInverse();
  for (int k = 1; k <= max_lag; ++k) {
    Matrix g = centered.bottomRows(n - k).transpose() * centered.topRows(n - k) /
               static_cast<double>(n);
    g = inv_sd.asDiagonal() * g * inv_sd.asDiagonal();
    rep.max_abs.push_back(g.cwiseAbs().maxCoeff());
    rep.autocorrelation.push_back(std::move(g));
  }
  rep.passes = true;
  for (double m : rep.max_abs) rep.passes = rep.passes && m <= rep.band;
  return rep;
}

}  // namespace cointss

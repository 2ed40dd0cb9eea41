#pragma once

// Cointegration conditions for MCARMA models, the cointegration space of a
// canonical form, and the two ways of building integrated MCARMA models.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cointss/matops.hpp"
#include "cointss/model.hpp"

namespace cointss {

struct CointegrationOptions {
  double root_tol = 1e-7;
  double rank_tol = kDefaultRankTol;
};

struct CointReport {
  std::vector<Complex> roots;

  // (a) every root of det P(z) is zero or has negative real part
  bool condition_a = false;
  std::vector<Complex> offending_roots;
  int zero_roots = 0;

  // (b) rank P_p = r with 0 < r < d, P_p = alpha beta^T
  bool condition_b = false;
  int r = 0;
  Matrix alpha;
  Matrix beta;

  // (c) alpha_perp^T P_{p-1} beta_perp has full rank d - r
  bool condition_c = false;
  int rank_c = 0;

  bool is_cointegrated = false;
};

namespace detail {

inline double zero_root_threshold(const McarmaModel& m, double root_tol) {
  const double pp = m.P().back().norm();
  return root_tol * (1.0 + std::pow(pp, 1.0 / m.p()));
}

}  // namespace detail

inline CointReport check_cointegration(const McarmaModel& m,
                                       const CointegrationOptions& opt = {}) {
  CointReport rep;
  const Eigen::Index d = m.dim();
  rep.roots = poly_det_roots(m.ar_polynomial());

  const double zero_cut = detail::zero_root_threshold(m, opt.root_tol);
  rep.condition_a = true;
  for (const Complex& z : rep.roots) {
    if (std::abs(z) < zero_cut) {
      ++rep.zero_roots;
    } else if (z.real() >= -opt.root_tol) {
      rep.condition_a = false;
      rep.offending_roots.push_back(z);
    }
  }

  const Matrix& pp = m.P().back();
  rep.r = numerical_rank(pp, opt.rank_tol).rank;
  const auto fac = signed_rank_factor(pp, rep.r);
  rep.alpha = fac.left;
  rep.beta = fac.right;
  rep.condition_b = rep.r > 0 && rep.r < d;

  const Matrix alpha_perp = orth_complement(rep.alpha, opt.rank_tol);
  const Matrix beta_perp = orth_complement(rep.beta, opt.rank_tol);
  const Matrix middle =
      alpha_perp.transpose() * m.P_at(m.p() - 1) * beta_perp;
  rep.rank_c = middle.size() == 0 ? 0 : numerical_rank(middle, opt.rank_tol).rank;
  rep.condition_c = rep.rank_c == d - rep.r;

  rep.is_cointegrated = rep.condition_a && rep.condition_b && rep.condition_c;
  return rep;
}

/// Coefficients of (P(z) - P_p) / z, leading identity first.
inline std::vector<Matrix> pstar_polynomial(const McarmaModel& m) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(m.p()));
  for (int k = 0; k < m.p(); ++k) out.push_back(m.P_at(k));
  return out;
}

/// Orthonormal basis of the orthogonal complement of C1.
inline Matrix cointegration_space(const CointCanonicalForm& cf) {
  require(cf.c() > 0 && cf.c() < cf.obs_dim(), ErrorKind::not_cointegrated,
          "cointegration space needs 0 < c < d, got c = " +
              std::to_string(cf.c()));
  return orth_complement(cf.C1());
}

/// zP(z): one extra autoregressive order with a zero last coefficient.
inline McarmaModel integrate_by_integration(
    const McarmaModel& m, const CointegrationOptions& opt = {}) {
  for (const Complex& z : poly_det_roots(m.ar_polynomial())) {
    require(z.real() < -opt.root_tol, ErrorKind::validation,
            "integrate_by_integration needs a stationary model");
  }
  std::vector<Matrix> p = m.P();
  p.push_back(Matrix::Zero(m.dim(), m.dim()));
  return McarmaModel(std::move(p), m.Q(), m.levy());
}

/// zQ(z): one extra moving-average order with a zero last coefficient.
inline McarmaModel integrate_by_ma_lift(const McarmaModel& m) {
  require(m.p() > m.q() + 1, ErrorKind::order,
          "integrate_by_ma_lift needs p > q + 1");
  std::vector<Matrix> q = m.Q();
  q.push_back(Matrix::Zero(m.dim(), m.driver_dim()));
  return McarmaModel(m.P(), std::move(q), m.levy());
}

}  // namespace cointss

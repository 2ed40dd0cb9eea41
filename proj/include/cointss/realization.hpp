#pragma once

// Structure theory for linear state-space models: controllability,
// observability, MCARMA <-> state-space conversion, and the unique decoupled
// canonical form of a cointegrated model.

#include <optional>
#include <string>
#include <vector>

#include "cointss/matops.hpp"
#include "cointss/model.hpp"

namespace cointss {

struct MinimalityReport {
  int observability_rank = 0;
  int controllability_rank = 0;
  bool is_observable = false;
  bool is_controllable = false;
  bool is_minimal = false;
};

/// (C; CA; ...; CA^{N-1}), dN x N.
inline Matrix observability_matrix(const Matrix& a, const Matrix& c) {
  const Eigen::Index n = a.rows();
  const Eigen::Index d = c.rows();
  Matrix o(d * n, n);
  if (n == 0) return o;
  o.topRows(d) = c;
  for (Eigen::Index k = 1; k < n; ++k) {
    o.middleRows(k * d, d) = o.middleRows((k - 1) * d, d) * a;
  }
  return o;
}

/// (B AB ... A^{N-1}B), N x mN.
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Matrix ctrl(n, m * n);
  if (n == 0) return ctrl;
  ctrl.leftCols(m) = b;
  for (Eigen::Index k = 1; k < n; ++k) {
    ctrl.middleCols(k * m, m) = a * ctrl.middleCols((k - 1) * m, m);
  }
  return ctrl;
}

inline Matrix observability_matrix(const StateSpaceModel& m) {
  return observability_matrix(m.A(), m.C());
}

inline Matrix controllability_matrix(const StateSpaceModel& m) {
  return controllability_matrix(m.A(), m.B());
}

inline MinimalityReport minimality_report(const Matrix& a, const Matrix& b,
                                          const Matrix& c,
                                          double rel_tol = kDefaultRankTol) {
  MinimalityReport r;
  const auto n = static_cast<int>(a.rows());
  r.observability_rank = numerical_rank(observability_matrix(a, c), rel_tol).rank;
  r.controllability_rank =
      numerical_rank(controllability_matrix(a, b), rel_tol).rank;
  r.is_observable = r.observability_rank == n;
  r.is_controllable = r.controllability_rank == n;
  r.is_minimal = r.is_observable && r.is_controllable;
  return r;
}

inline MinimalityReport minimality_report(const StateSpaceModel& m,
                                          double rel_tol = kDefaultRankTol) {
  return minimality_report(m.A(), m.B(), m.C(), rel_tol);
}

/// Minimality through the decoupled blocks: rank B1 = rank C1 = c and a
/// minimal stationary subsystem. The reported ranks are those of the
/// assembled model's blocks: c + stationary rank when B1 / C1 have rank c.
inline MinimalityReport decoupled_minimality_check(
    const CointCanonicalForm& cf, double rel_tol = kDefaultRankTol) {
  const auto c = static_cast<int>(cf.c());
  const int rank_b1 = c == 0 ? 0 : numerical_rank(cf.B1(), rel_tol).rank;
  const int rank_c1 = c == 0 ? 0 : numerical_rank(cf.C1(), rel_tol).rank;
  const MinimalityReport stationary =
      minimality_report(cf.A2(), cf.B2(), cf.C2(), rel_tol);
  MinimalityReport r;
  r.controllability_rank = rank_b1 + stationary.controllability_rank;
  r.observability_rank = rank_c1 + stationary.observability_rank;
  r.is_controllable = rank_b1 == c && stationary.is_controllable;
  r.is_observable = rank_c1 == c && stationary.is_observable;
  r.is_minimal = r.is_controllable && r.is_observable;
  return r;
}

/// C (zI - A)^{-1} B.
inline ComplexMatrix transfer_function(const Matrix& a, const Matrix& b,
                                       const Matrix& c, Complex z) {
  const Eigen::Index n = a.rows();
  const ComplexMatrix resolvent =
      z * ComplexMatrix::Identity(n, n) - a.cast<Complex>();
  Eigen::FullPivLU<ComplexMatrix> lu(resolvent);
  require(lu.isInvertible(), ErrorKind::singularity,
          "zI - A is singular at the requested point");
  return c.cast<Complex>() * lu.solve(b.cast<Complex>());
}

inline ComplexMatrix transfer_function(const StateSpaceModel& m, Complex z) {
  return transfer_function(m.A(), m.B(), m.C(), z);
}

/// Companion-form realization of an MCARMA(p, q) model.
inline StateSpaceModel mcarma_to_ss(const McarmaModel& m) {
  const Eigen::Index d = m.dim();
  const Eigen::Index dm = m.driver_dim();
  const int p = m.p();
  const int q = m.q();
  const Matrix a = block_companion(m.P(), d);
  Matrix c = Matrix::Zero(d, p * d);
  c.leftCols(d).setIdentity();

  // beta_1 = ... = beta_{p-q-1} = 0 and, for k = p-q..p,
  // beta_k = -sum_{i=1}^{k-1} P_i beta_{k-i} + Q_{q-p+k}.
  std::vector<Matrix> beta(static_cast<std::size_t>(p + 1), Matrix::Zero(d, dm));
  for (int k = p - q; k <= p; ++k) {
    Matrix bk = m.Q()[static_cast<std::size_t>(q - p + k)];
    for (int i = 1; i <= k - 1; ++i) {
      bk -= m.P()[static_cast<std::size_t>(i - 1)] * beta[static_cast<std::size_t>(k - i)];
    }
    beta[static_cast<std::size_t>(k)] = bk;
  }
  Matrix b(p * d, dm);
  for (int k = 1; k <= p; ++k) b.middleRows((k - 1) * d, d) = beta[static_cast<std::size_t>(k)];
  return StateSpaceModel(a, b, c, m.levy());
}

/// Inverse of `mcarma_to_ss` for observable models with N = p d. The model
/// is conjugated by the first N rows of its observability matrix. When `q` is
/// not given it is read off the first nonzero block of the transformed B.
inline McarmaModel ss_to_mcarma(const StateSpaceModel& m,
                                std::optional<int> q_order = std::nullopt) {
  const Eigen::Index n = m.state_dim();
  const Eigen::Index d = m.obs_dim();
  require(n % d == 0, ErrorKind::dimension,
          "state dimension must be a multiple of the output dimension");
  const auto p = static_cast<int>(n / d);
  const Matrix t = observability_matrix(m.A(), m.C()).topRows(n);
  require(numerical_rank(t).rank == n, ErrorKind::rank,
          "observability matrix restricted to its first N rows is singular");
  Eigen::FullPivLU<Matrix> lu(t);
  const Matrix ac = t * m.A() * lu.inverse();
  const Matrix bc = t * m.B();

  std::vector<Matrix> p_coeffs(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) {
    // block column p-k of the last block row holds -P_k
    p_coeffs[static_cast<std::size_t>(k - 1)] =
        -ac.block((p - 1) * d, (p - k) * d, d, d);
  }
  auto beta = [&](int k) -> Matrix { return bc.middleRows((k - 1) * d, d); };

  const double zero_tol = 1e-10 * (1.0 + bc.norm());
  int q = 0;
  if (q_order) {
    q = *q_order;
    require(q >= 0 && q < p, ErrorKind::order, "need 0 <= q < p");
    for (int k = 1; k <= p - q - 1; ++k) {
      require(beta(k).norm() <= zero_tol, ErrorKind::order,
              "transformed input block " + std::to_string(k) +
                  " is nonzero, inconsistent with the requested q");
    }
  } else {
    int first = p;
    for (int k = 1; k <= p; ++k) {
      if (beta(k).norm() > zero_tol) {
        first = k;
        break;
      }
    }
    q = p - first;
  }

  std::vector<Matrix> q_coeffs(static_cast<std::size_t>(q + 1));
  for (int j = 0; j <= q; ++j) {
    const int k = p - j;
    Matrix qk = beta(k);
    for (int i = 1; i <= k - 1; ++i) {
      if (k - i >= p - q) qk += p_coeffs[static_cast<std::size_t>(i - 1)] * beta(k - i);
    }
    q_coeffs[static_cast<std::size_t>(q - j)] = qk;
  }
  return McarmaModel(std::move(p_coeffs), std::move(q_coeffs), m.levy());
}

struct CanonicalizeOptions {
  /// |lambda| < zero_tol * (1 + |A|) classifies an eigenvalue as zero.
  double zero_tol = 1e-8;
  double rank_tol = kDefaultRankTol;
  /// Row-independence threshold for the echelon selection, relative to the
  /// norm of the stationary observability matrix.
  double row_tol = 1e-8;
};

struct Canonicalization {
  CointCanonicalForm form;
  /// (T A T^{-1}, T B, C T^{-1}) is the canonical triple.
  Matrix T;
};

namespace detail {

struct EchelonResult {
  Matrix a2, b2, c2, s;
};

/// Observer echelon form of a stable observable subsystem: the state is
/// replaced by the first n linearly independent rows of its observability
/// matrix applied to the old state.
inline EchelonResult stationary_echelon(const Matrix& a2, const Matrix& b2,
                                        const Matrix& c2, double row_tol) {
  const Eigen::Index n = a2.rows();
  if (n == 0) return {a2, b2, c2, Matrix(0, 0)};
  const Matrix o = observability_matrix(a2, c2);
  const auto rows = select_independent_rows(o, n, row_tol, o.norm());
  require(Eigen::Index(rows.size()) == n, ErrorKind::minimality,
          "stationary subsystem is not observable");
  Matrix s(n, n);
  for (Eigen::Index k = 0; k < n; ++k) s.row(k) = o.row(rows[k]);
  Eigen::FullPivLU<Matrix> lu(s);
  require(lu.isInvertible(), ErrorKind::numeric, "echelon transform is singular");
  const Matrix s_inv = lu.inverse();
  return {s * a2 * s_inv, s * b2, c2 * s_inv, s};
}

}  // namespace detail

/// Unique decoupled canonical form of a minimal model whose spectrum lies in
/// the open left half-plane plus a semisimple zero eigenvalue.
inline Canonicalization canonicalize(const StateSpaceModel& m,
                                     const CanonicalizeOptions& opt = {}) {
  const Eigen::Index n = m.state_dim();
  const Matrix& a = m.A();
  require(minimality_report(m, opt.rank_tol).is_minimal, ErrorKind::minimality,
          "model is not minimal (not both controllable and observable)");

  const double scale = 1.0 + a.norm();
  const Eigen::VectorXcd ev = eigenvalues(a);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) < opt.zero_tol * scale) {
      ++c;
    } else if (ev(i).real() > -opt.zero_tol * scale) {
      fail(ErrorKind::stability,
           "eigenvalue with nonnegative real part off zero: (" +
               std::to_string(ev(i).real()) + ", " +
               std::to_string(ev(i).imag()) + ")");
    }
  }

  Matrix t0 = Matrix::Identity(n, n);
  Matrix w = Matrix::Identity(n, n);
  if (c > 0) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cut = opt.rank_tol * std::max(sv(0), 1.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > cut ? 1 : 0;
    require(rank == n - c, ErrorKind::multiplicity,
            "zero eigenvalue is not semisimple: algebraic multiplicity " +
                std::to_string(c) + ", geometric multiplicity " +
                std::to_string(n - rank));
    // Kernel and range of a semisimple A are complementary invariant
    // subspaces; together they block-diagonalize A.
    w.leftCols(c) = svd.matrixV().rightCols(c);
    w.rightCols(n - c) = svd.matrixU().leftCols(n - c);
    Eigen::FullPivLU<Matrix> lu(w);
    require(lu.rcond() > 1e-12, ErrorKind::multiplicity,
            "kernel and range of A intersect (zero eigenvalue not semisimple)");
    t0 = lu.inverse();
  }
  const Matrix a_block = t0 * a * w;
  if (c > 0) {
    const double off = a_block.topRows(c).norm() + a_block.bottomLeftCorner(n - c, c).norm();
    require(off <= 1e-7 * scale, ErrorKind::multiplicity,
            "could not decouple the unit-root block");
  }
  const Matrix b_block = t0 * m.B();
  const Matrix c_block = m.C() * w;

  const auto tri = positive_lower_triangularize(c_block.leftCols(c), opt.rank_tol);
  const Matrix b1 = tri.T1 * b_block.topRows(c);

  const auto ech = detail::stationary_echelon(
      a_block.bottomRightCorner(n - c, n - c), b_block.bottomRows(n - c),
      c_block.rightCols(n - c), opt.row_tol);

  Matrix t = block_diag(tri.T1, ech.s) * t0;
  CointCanonicalForm cf(c, ech.a2, b1, ech.b2, tri.C1, ech.c2, m.levy());
  return {std::move(cf), std::move(t)};
}

}  // namespace cointss

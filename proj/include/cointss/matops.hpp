#pragma once

// Dense numerical kernels shared by the rest of the library. Everything here
// is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cointss/error.hpp"

namespace cointss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kDefaultRankTol = 1e-9;

struct RankResult {
  int rank = 0;
  Vector singular_values;  // descending
  double tolerance_used = 0.0;
};

struct TriangularizedColumns {
  Matrix C1;  // C * T1^{-1}, orthonormal columns, positive lower triangular
  Matrix T1;  // c x c
};

inline std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_finite(const Matrix& m, const std::string& name) {
  require(m.allFinite(), ErrorKind::validation,
          name + " contains non-finite entries");
}

inline void require_square(const Matrix& m, const std::string& name) {
  require(m.rows() == m.cols(), ErrorKind::dimension,
          name + " must be square, got " + shape_of(m));
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).norm() <= tol * (1.0 + m.norm());
}

inline Matrix symmetrize(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
  if (m.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  require(es.info() == Eigen::Success, ErrorKind::numeric,
          "eigenvalue computation did not converge");
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

/// Largest real part over the spectrum; -inf for an empty matrix.
inline double spectral_abscissa(const Matrix& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  return eigenvalues(m).real().maxCoeff();
}

/// Ascending real part, then ascending imaginary part.
inline void sort_roots(std::vector<Complex>& roots) {
  std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

inline Matrix expm(const Matrix& m) {
  require_square(m, "expm argument");
  require_finite(m, "expm argument");
  if (m.rows() == 0) return m;
  Matrix out = m.exp();
  return out;
}

/// Integral of e^{A u} Q e^{A^T u} over [0, h] via the block exponential of
/// [[A, Q], [0, -A^T]] h.
inline Matrix gramian_integral(const Matrix& a, const Matrix& q, double h) {
  require_square(a, "A2");
  require(q.rows() == a.rows() && q.cols() == a.cols(), ErrorKind::dimension,
          "Q must match A2, got " + shape_of(q) + " vs " + shape_of(a));
  require(h > 0.0 && std::isfinite(h), ErrorKind::validation,
          "step h must be positive");
  require(is_symmetric(q), ErrorKind::validation, "Q must be symmetric");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);
  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = q;
  block.bottomRightCorner(n, n) = -a.transpose();
  const Matrix e = expm(block * h);
  // top-right block is int_0^h e^{A(h-u)} Q e^{-A^T u} du.
  const Matrix g = e.topRightCorner(n, n) * e.topLeftCorner(n, n).transpose();
  return symmetrize(g);
}

/// Integral of e^{A u} G over [0, h] via the block exponential of
/// [[A, G], [0, 0]] h.
inline Matrix cross_integral(const Matrix& a, const Matrix& g, double h) {
  require_square(a, "A2");
  require(g.rows() == a.rows(), ErrorKind::dimension,
          "G rows must match A2, got " + shape_of(g) + " vs " + shape_of(a));
  require(h >= 0.0 && std::isfinite(h), ErrorKind::validation,
          "integration length must be nonnegative");
  const Eigen::Index n = a.rows();
  const Eigen::Index k = g.cols();
  if (n == 0 || k == 0 || h == 0.0) return Matrix::Zero(n, k);
  Matrix block = Matrix::Zero(n + k, n + k);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, k) = g;
  return expm(block * h).topRightCorner(n, k);
}

/// Solves A X + X A^T + Q = 0 for Hurwitz A by Kronecker vectorization.
inline Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  require_square(a, "A2");
  require(q.rows() == a.rows() && q.cols() == a.cols(), ErrorKind::dimension,
          "Q must match A2");
  require(is_symmetric(q), ErrorKind::validation, "Q must be symmetric");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);
  const double abscissa = spectral_abscissa(a);
  require(abscissa < -1e-12 * (1.0 + a.norm()), ErrorKind::stability,
          "A2 is not Hurwitz (max real part " + std::to_string(abscissa) + ")");

  // vec(A X + X A^T) = (I (x) A + A (x) I) vec(X), column-major vec.
  Matrix kron = Matrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = j * n + i;
      for (Eigen::Index k = 0; k < n; ++k) {
        kron(row, j * n + k) += a(i, k);  // (A X)_{ij} = sum_k A_ik X_kj
        kron(row, k * n + i) += a(j, k);  // (X A^T)_{ij} = sum_k X_ik A_jk
      }
    }
  }
  Eigen::FullPivLU<Matrix> lu(kron);
  require(lu.isInvertible(), ErrorKind::numeric,
          "Lyapunov Kronecker system is singular");
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  const Vector x = lu.solve(rhs);
  Matrix out = Eigen::Map<const Matrix>(x.data(), n, n);
  return symmetrize(out);
}

inline RankResult numerical_rank(const Matrix& m,
                                 double rel_tol = kDefaultRankTol) {
  require_finite(m, "rank argument");
  RankResult result;
  if (m.size() == 0) return result;
  Eigen::JacobiSVD<Matrix> svd(m);
  result.singular_values = svd.singularValues();
  const double top = result.singular_values(0);
  result.tolerance_used = rel_tol * top;
  if (top == 0.0) return result;
  for (Eigen::Index i = 0; i < result.singular_values.size(); ++i) {
    if (result.singular_values(i) > result.tolerance_used) ++result.rank;
  }
  return result;
}

/// Orthonormal basis of the column space of a full-column-rank matrix.
inline Matrix orthonormal_columns(const Matrix& m) {
  if (m.cols() == 0) return Matrix(m.rows(), 0);
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

inline Matrix orth_complement(const Matrix& m,
                              double rel_tol = kDefaultRankTol) {
  const auto s = m.cols();
  const auto d = m.rows();
  require(s <= d, ErrorKind::dimension,
          "orth_complement needs at most as many columns as rows");
  if (s > 0) {
    require(numerical_rank(m, rel_tol).rank == s, ErrorKind::rank,
            "orth_complement argument must have full column rank");
  }
  if (s == 0) return Matrix::Identity(d, d);
  Eigen::HouseholderQR<Matrix> qr(m);
  const Matrix q = qr.householderQ();
  return q.rightCols(d - s);
}

/// Largest principal angle (radians) between the column spaces of two
/// full-column-rank matrices with the same number of columns.
inline double max_principal_angle(const Matrix& u, const Matrix& v) {
  require(u.rows() == v.rows() && u.cols() == v.cols(), ErrorKind::dimension,
          "principal angles need equally shaped bases");
  if (u.cols() == 0) return 0.0;
  const Matrix qu = orthonormal_columns(u);
  const Matrix qv = orthonormal_columns(v);
  const Matrix residual = qv - qu * (qu.transpose() * qv);
  Eigen::JacobiSVD<Matrix> svd(residual);
  return std::asin(std::min(1.0, svd.singularValues()(0)));
}

/// Greedy selection of the lowest-index rows that are linearly independent.
/// A row is accepted when the norm of its component orthogonal to the rows
/// already accepted exceeds `tol * scale`. Stops after `count` rows.
inline std::vector<Eigen::Index> select_independent_rows(const Matrix& m,
                                                         Eigen::Index count,
                                                         double tol,
                                                         double scale) {
  std::vector<Eigen::Index> picked;
  std::vector<Vector> basis;
  for (Eigen::Index i = 0; i < m.rows() && Eigen::Index(picked.size()) < count;
       ++i) {
    Vector r = m.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) r -= b.dot(r) * b;
    }
    const double norm = r.norm();
    if (norm > tol * scale) {
      picked.push_back(i);
      basis.push_back(r / norm);
    }
  }
  return picked;
}

/// Companion matrix of a monic matrix polynomial I z^p + P_1 z^{p-1} + ... +
/// P_p, given P_1..P_p: identity blocks on the superdiagonal and last block
/// row (-P_p ... -P_1).
inline Matrix block_companion(const std::vector<Matrix>& p_coeffs,
                              Eigen::Index d) {
  const auto p = static_cast<Eigen::Index>(p_coeffs.size());
  Matrix a = Matrix::Zero(p * d, p * d);
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    a.block(i * d, (i + 1) * d, d, d).setIdentity();
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    // block column j holds -P_{p-j}
    a.block((p - 1) * d, j * d, d, d) = -p_coeffs[p - 1 - j];
  }
  return a;
}

/// Roots of det P(z) for P(z) = coeffs[0] z^p + ... + coeffs[p] with
/// coeffs[0] = I, via the block-companion linearization.
inline std::vector<Complex> poly_det_roots(const std::vector<Matrix>& coeffs) {
  require(!coeffs.empty(), ErrorKind::validation, "empty matrix polynomial");
  const Eigen::Index d = coeffs[0].rows();
  for (const auto& c : coeffs) {
    require(c.rows() == d && c.cols() == d, ErrorKind::dimension,
            "matrix polynomial coefficients must all be " + std::to_string(d) +
                "x" + std::to_string(d));
    require_finite(c, "polynomial coefficient");
  }
  require((coeffs[0] - Matrix::Identity(d, d)).norm() <= 1e-12,
          ErrorKind::validation, "matrix polynomial must be monic");
  std::vector<Matrix> tail(coeffs.begin() + 1, coeffs.end());
  std::vector<Complex> roots;
  if (tail.empty()) return roots;
  const Eigen::VectorXcd ev = eigenvalues(block_companion(tail, d));
  roots.assign(ev.data(), ev.data() + ev.size());
  sort_roots(roots);
  return roots;
}

/// Symmetric factor F with F F^T = S for a PSD matrix S. Throws when S has an
/// eigenvalue below -tol * (1 + |S|).
inline Matrix psd_factor(const Matrix& s, double tol = 1e-10) {
  require_square(s, "covariance");
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  require(es.info() == Eigen::Success, ErrorKind::numeric,
          "eigen-decomposition of covariance failed");
  const Vector& lambda = es.eigenvalues();
  require(lambda.minCoeff() >= -tol * (1.0 + lambda.cwiseAbs().maxCoeff()),
          ErrorKind::numeric, "covariance is not positive semidefinite");
  return es.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline double min_eigenvalue_symmetric(const Matrix& s) {
  if (s.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct LowRankFactor {
  Matrix left;   // U_r Sigma_r
  Matrix right;  // V_r, first nonzero entry of each column positive
};

/// Rank-r factorization M = left * right^T from the singular value
/// decomposition. Column signs are fixed on `right` so repeated calls are
/// bit-identical.
inline LowRankFactor signed_rank_factor(const Matrix& m, Eigen::Index r) {
  require(r >= 0 && r <= std::min(m.rows(), m.cols()), ErrorKind::rank,
          "requested factor rank out of range");
  if (r == 0) return {Matrix(m.rows(), 0), Matrix(m.cols(), 0)};
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix left = svd.matrixU().leftCols(r) *
                svd.singularValues().head(r).asDiagonal();
  Matrix right = svd.matrixV().leftCols(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double cut = 1e-9 * right.col(k).norm();
    for (Eigen::Index i = 0; i < right.rows(); ++i) {
      if (std::abs(right(i, k)) > cut) {
        if (right(i, k) < 0.0) {
          right.col(k) = -right.col(k);
          left.col(k) = -left.col(k);
        }
        break;
      }
    }
  }
  return {std::move(left), std::move(right)};
}

/// Returns C1 = C T1^{-1} with orthonormal columns whose first nonzero entry
/// in each column is positive and whose pivot rows form a lower triangular
/// block. The pivot rows are the first c linearly independent rows of C.
inline TriangularizedColumns positive_lower_triangularize(
    const Matrix& c_mat, double rel_tol = kDefaultRankTol) {
  require_finite(c_mat, "C1");
  const Eigen::Index c = c_mat.cols();
  require(c <= c_mat.rows(), ErrorKind::dimension,
          "C1 must have at most as many columns as rows");
  if (c == 0) return {Matrix(c_mat.rows(), 0), Matrix(0, 0)};
  require(numerical_rank(c_mat, rel_tol).rank == c, ErrorKind::rank,
          "C1 must have full column rank");

  const Matrix q = orthonormal_columns(c_mat);
  const auto pivots = select_independent_rows(q, c, 1e-8, 1.0);
  require(Eigen::Index(pivots.size()) == c, ErrorKind::rank,
          "could not find pivot rows for C1");
  Matrix qp(c, c);
  for (Eigen::Index k = 0; k < c; ++k) qp.row(k) = q.row(pivots[k]);

  // LQ of the pivot block through QR of its transpose: qp = R^T W^T.
  Eigen::HouseholderQR<Matrix> qr(qp.transpose());
  const Matrix w = qr.householderQ();
  Matrix c1 = q * w;
  for (Eigen::Index k = 0; k < c; ++k) {
    if (c1(pivots[k], k) < 0.0) c1.col(k) = -c1.col(k);
  }
  Matrix t1 = c1.transpose() * c_mat;
  return {std::move(c1), std::move(t1)};
}

}  // namespace cointss

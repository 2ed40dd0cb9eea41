#pragma once

// Domain types: Levy drivers, raw state-space triples, MCARMA coefficient
// sets and the decoupled canonical form. Every model type validates its
// invariants on construction and is immutable afterwards.

#include <string>
#include <utility>
#include <vector>

#include "cointss/matops.hpp"

namespace cointss {

enum class LevyKind {
  brownian,
  compound_poisson_gaussian_jumps,
  brownian_plus_compound_poisson,
};

inline std::string_view to_string(LevyKind kind) {
  switch (kind) {
    case LevyKind::brownian: return "brownian";
    case LevyKind::compound_poisson_gaussian_jumps:
      return "compound_poisson_gaussian_jumps";
    case LevyKind::brownian_plus_compound_poisson:
      return "brownian_plus_compound_poisson";
  }
  return "unknown";
}

/// Mean-zero Levy driver. `sigma_L` is the covariance of L(1); for the
/// Poisson kinds the jumps are N(0, jump_cov) arriving at rate `jump_rate`,
/// and the Brownian part carries sigma_L - jump_rate * jump_cov.
struct LevySpec {
  LevyKind kind = LevyKind::brownian;
  Matrix sigma_L;
  double jump_rate = 0.0;
  Matrix jump_cov;

  Eigen::Index dim() const { return sigma_L.rows(); }

  bool has_jumps() const { return kind != LevyKind::brownian; }

  Matrix diffusion_cov() const {
    switch (kind) {
      case LevyKind::brownian: return sigma_L;
      case LevyKind::compound_poisson_gaussian_jumps:
        return Matrix::Zero(dim(), dim());
      case LevyKind::brownian_plus_compound_poisson:
        return symmetrize(sigma_L - jump_rate * jump_cov);
    }
    return sigma_L;
  }

  static LevySpec brownian(Matrix sigma) {
    return {LevyKind::brownian, std::move(sigma), 0.0, Matrix()};
  }

  static LevySpec compound_poisson(double rate, const Matrix& jump_cov) {
    return {LevyKind::compound_poisson_gaussian_jumps, rate * jump_cov, rate,
            jump_cov};
  }

  static LevySpec brownian_plus_compound_poisson(const Matrix& diffusion,
                                                 double rate,
                                                 const Matrix& jump_cov) {
    return {LevyKind::brownian_plus_compound_poisson,
            diffusion + rate * jump_cov, rate, jump_cov};
  }
};

struct ValidationReport {
  std::vector<std::string> failures;

  bool valid() const { return failures.empty(); }

  std::string summary() const {
    std::string out;
    for (const auto& f : failures) {
      if (!out.empty()) out += "; ";
      out += f;
    }
    return out;
  }
};

inline ValidationReport validate_levy(const LevySpec& spec) {
  ValidationReport report;
  auto& f = report.failures;
  const Matrix& s = spec.sigma_L;
  if (s.rows() == 0 || s.rows() != s.cols()) {
    f.push_back("sigma_L must be a non-empty square matrix, got " +
                shape_of(s));
    return report;
  }
  if (!s.allFinite()) {
    f.push_back("sigma_L contains non-finite entries");
    return report;
  }
  if (!is_symmetric(s)) f.push_back("sigma_L is not symmetric");
  const double lambda_min = min_eigenvalue_symmetric(s);
  if (!(lambda_min > 1e-12 * (1.0 + s.norm()))) {
    f.push_back(
        "sigma_L is singular or indefinite (driver covariance must be "
        "positive definite; min eigenvalue " +
        std::to_string(lambda_min) + ")");
  }
  if (!std::isfinite(spec.jump_rate) || spec.jump_rate < 0.0) {
    f.push_back("jump_rate must be a nonnegative finite number");
  }
  if (spec.kind == LevyKind::brownian) {
    if (spec.jump_rate != 0.0) f.push_back("brownian driver with jump_rate");
    return report;
  }
  const Matrix& j = spec.jump_cov;
  if (j.rows() != s.rows() || j.cols() != s.cols()) {
    f.push_back("jump_cov must match sigma_L, got " + shape_of(j));
    return report;
  }
  if (!j.allFinite() || !is_symmetric(j)) {
    f.push_back("jump_cov must be finite and symmetric");
    return report;
  }
  const double tol = 1e-10 * (1.0 + s.norm());
  if (min_eigenvalue_symmetric(j) < -tol) {
    f.push_back("jump_cov is not positive semidefinite");
  }
  if (spec.kind == LevyKind::compound_poisson_gaussian_jumps) {
    if ((s - spec.jump_rate * j).norm() > tol) {
      f.push_back("sigma_L must equal jump_rate * jump_cov for a pure jump driver");
    }
  } else if (min_eigenvalue_symmetric(s - spec.jump_rate * j) < -tol) {
    f.push_back(
        "sigma_L - jump_rate * jump_cov (diffusion part) is not positive "
        "semidefinite");
  }
  return report;
}

inline void require_valid_levy(const LevySpec& spec) {
  const auto report = validate_levy(spec);
  require(report.valid(), ErrorKind::validation,
          "invalid Levy specification: " + report.summary());
}

/// dX = A X dt + B dL, Y = C X.
class StateSpaceModel {
 public:
  StateSpaceModel(Matrix a, Matrix b, Matrix c, LevySpec levy)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)),
        levy_(std::move(levy)) {
    require_square(a_, "A");
    require(b_.rows() == a_.rows(), ErrorKind::dimension,
            "B must have N rows, got " + shape_of(b_));
    require(c_.cols() == a_.rows(), ErrorKind::dimension,
            "C must have N columns, got " + shape_of(c_));
    require(b_.cols() == levy_.dim(), ErrorKind::dimension,
            "B columns must equal the driver dimension");
    require(c_.rows() <= a_.rows(), ErrorKind::dimension,
            "observation dimension d may not exceed state dimension N");
    require_finite(a_, "A");
    require_finite(b_, "B");
    require_finite(c_, "C");
    require_valid_levy(levy_);
  }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const LevySpec& levy() const { return levy_; }

  Eigen::Index state_dim() const { return a_.rows(); }
  Eigen::Index obs_dim() const { return c_.rows(); }
  Eigen::Index driver_dim() const { return b_.cols(); }

 private:
  Matrix a_;
  Matrix b_;
  Matrix c_;
  LevySpec levy_;
};

/// (T A T^{-1}, T B, C T^{-1}).
inline StateSpaceModel conjugate(const StateSpaceModel& m, const Matrix& t) {
  require(t.rows() == m.state_dim() && t.cols() == m.state_dim(),
          ErrorKind::dimension, "transform must be N x N");
  Eigen::PartialPivLU<Matrix> lu(t);
  require(std::abs(lu.determinant()) > 0.0, ErrorKind::numeric,
          "transform is singular");
  const Matrix t_inv = lu.inverse();
  return StateSpaceModel(t * m.A() * t_inv, t * m.B(), m.C() * t_inv,
                         m.levy());
}

/// P(D) Y = Q(D) DL with P(z) = I z^p + P_1 z^{p-1} + ... + P_p and
/// Q(z) = Q_0 z^q + ... + Q_q.
class McarmaModel {
 public:
  McarmaModel(std::vector<Matrix> p_coeffs, std::vector<Matrix> q_coeffs,
              LevySpec levy)
      : p_(std::move(p_coeffs)), q_(std::move(q_coeffs)),
        levy_(std::move(levy)) {
    require(!p_.empty(), ErrorKind::order, "autoregressive order p must be >= 1");
    require(!q_.empty(), ErrorKind::order, "moving-average order q must be >= 0");
    require(p_.size() > q_.size() - 1, ErrorKind::order,
            "MCARMA needs p > q, got p=" + std::to_string(p_.size()) +
                " q=" + std::to_string(q_.size() - 1));
    const Eigen::Index d = p_[0].rows();
    require(d > 0, ErrorKind::dimension, "empty autoregressive coefficient");
    for (const auto& pi : p_) {
      require(pi.rows() == d && pi.cols() == d, ErrorKind::dimension,
              "autoregressive coefficients must be d x d");
      require_finite(pi, "P coefficient");
    }
    for (const auto& qi : q_) {
      require(qi.rows() == d && qi.cols() == levy_.dim(), ErrorKind::dimension,
              "moving-average coefficients must be d x m");
      require_finite(qi, "Q coefficient");
    }
    require_valid_levy(levy_);
  }

  int p() const { return static_cast<int>(p_.size()); }
  int q() const { return static_cast<int>(q_.size()) - 1; }
  Eigen::Index dim() const { return p_[0].rows(); }
  Eigen::Index driver_dim() const { return levy_.dim(); }

  /// P_1 .. P_p
  const std::vector<Matrix>& P() const { return p_; }
  /// Q_0 .. Q_q
  const std::vector<Matrix>& Q() const { return q_; }
  const LevySpec& levy() const { return levy_; }

  /// P_k for k = 0..p with P_0 = I.
  Matrix P_at(int k) const {
    if (k == 0) return Matrix::Identity(dim(), dim());
    return p_.at(static_cast<std::size_t>(k - 1));
  }

  /// Coefficients of P(z) from z^p down to z^0.
  std::vector<Matrix> ar_polynomial() const {
    std::vector<Matrix> out;
    out.reserve(p_.size() + 1);
    out.push_back(Matrix::Identity(dim(), dim()));
    out.insert(out.end(), p_.begin(), p_.end());
    return out;
  }

 private:
  std::vector<Matrix> p_;
  std::vector<Matrix> q_;
  LevySpec levy_;
};

/// Pivot rows of C1 are its first c linearly independent rows. The pivot
/// block must be lower triangular with a positive diagonal, which makes the
/// first nonzero entry of every column positive.
inline bool is_positive_lower_triangular(const Matrix& c1, double tol = 1e-9) {
  const Eigen::Index c = c1.cols();
  if (c == 0) return true;
  const auto pivots = select_independent_rows(c1, c, 1e-8, 1.0);
  if (Eigen::Index(pivots.size()) != c) return false;
  for (Eigen::Index k = 0; k < c; ++k) {
    if (!(c1(pivots[k], k) > 0.0)) return false;
    for (Eigen::Index j = k + 1; j < c; ++j) {
      if (std::abs(c1(pivots[k], j)) > tol) return false;
    }
  }
  return true;
}

/// Decoupled representation: X1 is a c-dimensional pure unit-root block and
/// (A2, B2, C2) a stable subsystem.
class CointCanonicalForm {
 public:
  CointCanonicalForm(Eigen::Index c, Matrix a2, Matrix b1, Matrix b2,
                     Matrix c1, Matrix c2, LevySpec levy)
      : c_(c), a2_(std::move(a2)), b1_(std::move(b1)), b2_(std::move(b2)),
        c1_(std::move(c1)), c2_(std::move(c2)), levy_(std::move(levy)) {
    require_valid_levy(levy_);
    const Eigen::Index m = levy_.dim();
    const Eigen::Index n2 = a2_.rows();
    require_square(a2_, "A2");
    // Empty blocks arrive from JSON as 0x0; give them their implied shape.
    if (b1_.size() == 0) b1_.resize(c_, m);
    if (b2_.size() == 0) b2_.resize(n2, m);
    const Eigen::Index d = c1_.size() ? c1_.rows() : c2_.rows();
    if (c1_.size() == 0) c1_.resize(d, c_);
    if (c2_.size() == 0) c2_.resize(d, n2);
    require(c_ >= 0, ErrorKind::dimension, "c must be nonnegative");
    require(b1_.rows() == c_ && b1_.cols() == m, ErrorKind::dimension,
            "B1 must be c x m, got " + shape_of(b1_));
    require(b2_.rows() == n2 && b2_.cols() == m, ErrorKind::dimension,
            "B2 must be (N-c) x m, got " + shape_of(b2_));
    require(c1_.rows() == d && c1_.cols() == c_, ErrorKind::dimension,
            "C1 must be d x c, got " + shape_of(c1_));
    require(c2_.rows() == d && c2_.cols() == n2, ErrorKind::dimension,
            "C2 must be d x (N-c), got " + shape_of(c2_));
    require(d > 0, ErrorKind::dimension, "observation dimension must be >= 1");
    require(c_ <= d, ErrorKind::dimension, "c may not exceed d");
    require(d <= c_ + n2, ErrorKind::dimension, "d may not exceed N");
    require_finite(a2_, "A2");
    require_finite(b1_, "B1");
    require_finite(b2_, "B2");
    require_finite(c1_, "C1");
    require_finite(c2_, "C2");
    require((c1_.transpose() * c1_ - Matrix::Identity(c_, c_)).norm() <= 1e-10,
            ErrorKind::validation, "C1 must have orthonormal columns");
    require(is_positive_lower_triangular(c1_), ErrorKind::validation,
            "C1 must be positive lower triangular");
    require(spectral_abscissa(a2_) < 0.0, ErrorKind::stability,
            "A2 must have all eigenvalues in the open left half-plane");
  }

  Eigen::Index c() const { return c_; }
  const Matrix& A2() const { return a2_; }
  const Matrix& B1() const { return b1_; }
  const Matrix& B2() const { return b2_; }
  const Matrix& C1() const { return c1_; }
  const Matrix& C2() const { return c2_; }
  const LevySpec& levy() const { return levy_; }

  Eigen::Index obs_dim() const { return c1_.rows(); }
  Eigen::Index state_dim() const { return c_ + a2_.rows(); }
  Eigen::Index stationary_dim() const { return a2_.rows(); }
  Eigen::Index driver_dim() const { return levy_.dim(); }

  /// [C1 C2]
  Matrix C() const {
    Matrix out(obs_dim(), state_dim());
    out << c1_, c2_;
    return out;
  }

  /// (B1; B2)
  Matrix B() const {
    Matrix out(state_dim(), driver_dim());
    out << b1_, b2_;
    return out;
  }

 private:
  Eigen::Index c_;
  Matrix a2_;
  Matrix b1_;
  Matrix b2_;
  Matrix c1_;
  Matrix c2_;
  LevySpec levy_;
};

inline StateSpaceModel assemble_from_canonical(const CointCanonicalForm& cf) {
  const Matrix a = block_diag(Matrix::Zero(cf.c(), cf.c()), cf.A2());
  return StateSpaceModel(a, cf.B(), cf.C(), cf.levy());
}

}  // namespace cointss

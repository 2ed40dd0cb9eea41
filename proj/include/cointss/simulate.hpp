#pragma once

// Seeded path generation for canonical models: exact Gaussian sampling of
// the discretized recursion and a refined-grid Euler scheme for Levy drivers
// with compound-Poisson jumps.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "cointss/matops.hpp"
#include "cointss/model.hpp"
#include "cointss/moments.hpp"

namespace cointss {

/// Rows are the grid points t_n = n h, n = 1..n_steps. The start values
/// X1(0), X2(0) are kept separately.
struct PathSet {
  double h = 0.0;
  Vector times;
  Matrix y;   // n x d
  Matrix x1;  // n x c
  Matrix x2;  // n x (N - c)
  Matrix r1;  // n x c, X1 increments
  Matrix r2;  // n x (N - c), X2_n - e^{A2 h} X2_{n-1}
  Matrix y2;  // n x d, C2 X2
  Vector x1_0;
  Vector x2_0;
  Matrix C1;
  Matrix C2;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  LevyKind driver_kind = LevyKind::brownian;
  std::string method;

  Eigen::Index n_steps() const { return y.rows(); }
};

/// Independent stream for each (seed, path_index) pair.
inline std::mt19937_64 make_path_rng(std::uint64_t seed,
                                     std::uint64_t path_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path_index),
                    static_cast<std::uint32_t>(path_index >> 32)};
  return std::mt19937_64(seq);
}

namespace detail {

inline Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = nd(rng);
  return z;
}

inline PathSet empty_path(const CointCanonicalForm& cf, double h, long n_steps,
                          const Vector& x1_0) {
  require(n_steps >= 1, ErrorKind::parameter, "n_steps must be >= 1");
  require(x1_0.size() == cf.c(), ErrorKind::dimension,
          "x1_0 must have length c = " + std::to_string(cf.c()));
  PathSet ps;
  ps.h = h;
  const Eigen::Index c = cf.c();
  const Eigen::Index n2 = cf.stationary_dim();
  const Eigen::Index d = cf.obs_dim();
  ps.times.resize(n_steps);
  for (long n = 0; n < n_steps; ++n) ps.times(n) = static_cast<double>(n + 1) * h;
  ps.y.resize(n_steps, d);
  ps.x1.resize(n_steps, c);
  ps.x2.resize(n_steps, n2);
  ps.r1.resize(n_steps, c);
  ps.r2.resize(n_steps, n2);
  ps.y2.resize(n_steps, d);
  ps.x1_0 = x1_0;
  ps.C1 = cf.C1();
  ps.C2 = cf.C2();
  ps.driver_kind = cf.levy().kind;
  return ps;
}

inline void record(PathSet& ps, long n, const Vector& x1, const Vector& x2,
                   const Vector& r1, const Vector& r2) {
  ps.x1.row(n) = x1.transpose();
  ps.x2.row(n) = x2.transpose();
  ps.r1.row(n) = r1.transpose();
  ps.r2.row(n) = r2.transpose();
  const Vector y2 = ps.C2 * x2;
  ps.y2.row(n) = y2.transpose();
  ps.y.row(n) = (ps.C1 * x1 + y2).transpose();
}

}  // namespace detail

inline PathSet simulate_exact_gaussian(const SampledModel& sm,
                                       const CointCanonicalForm& cf,
                                       long n_steps, const Vector& x1_0,
                                       std::uint64_t seed,
                                       std::uint64_t path_index = 0) {
  require(cf.levy().kind == LevyKind::brownian, ErrorKind::driver,
          "exact Gaussian simulation needs a Brownian driver");
  require(sm.c == cf.c() && sm.state_dim() == cf.state_dim(),
          ErrorKind::dimension, "sampled model does not match canonical form");
  PathSet ps = detail::empty_path(cf, sm.h, n_steps, x1_0);
  ps.seed = seed;
  ps.path_index = path_index;
  ps.method = "exact_gaussian";

  const Eigen::Index c = cf.c();
  const Eigen::Index n2 = cf.stationary_dim();
  const Matrix noise_factor = psd_factor(sm.sigma_tilde);
  const Matrix start_factor = psd_factor(sm.gamma0);
  const Matrix ea2h = sm.eA2h();

  auto rng = make_path_rng(seed, path_index);
  Vector x1 = x1_0;
  Vector x2 = start_factor * detail::standard_normal(rng, n2);
  ps.x2_0 = x2;
  for (long n = 0; n < n_steps; ++n) {
    const Vector r = noise_factor * detail::standard_normal(rng, c + n2);
    const Vector r1 = r.head(c);
    const Vector r2 = r.tail(n2);
    x1 += r1;
    x2 = ea2h * x2 + r2;
    detail::record(ps, n, x1, x2, r1, r2);
  }
  return ps;
}

/// ceil(10 / |Re lambda_max(A2)| / h): ten slowest relaxation times.
inline long default_burn_in(const CointCanonicalForm& cf, double h) {
  if (cf.stationary_dim() == 0) return 0;
  const double slowest = std::abs(spectral_abscissa(cf.A2()));
  return static_cast<long>(std::ceil(10.0 / slowest / h));
}

inline constexpr long kDefaultRefinement = 64;

/// Euler scheme on a grid refined `refinement` times per step h. Each
/// substep increment is applied at the start of its substep, so
/// x2 <- e^{A2 delta} (x2 + B2 dL). X2 starts at zero and is warmed up for
/// `burn_in` steps that are not recorded.
inline PathSet simulate_levy_euler(const CointCanonicalForm& cf, double h,
                                   long n_steps, long refinement,
                                   const Vector& x1_0,
                                   std::optional<long> burn_in,
                                   std::uint64_t seed,
                                   std::uint64_t path_index = 0) {
  require(std::isfinite(h) && h > 0.0, ErrorKind::domain,
          "sampling step h must be positive");
  require(refinement >= 1, ErrorKind::parameter, "refinement must be >= 1");
  const long warm = burn_in.value_or(default_burn_in(cf, h));
  require(warm >= 0, ErrorKind::parameter, "burn_in must be >= 0");
  PathSet ps = detail::empty_path(cf, h, n_steps, x1_0);
  ps.seed = seed;
  ps.path_index = path_index;
  ps.method = "levy_euler";

  const LevySpec& levy = cf.levy();
  const Eigen::Index m = cf.driver_dim();
  const Eigen::Index c = cf.c();
  const Eigen::Index n2 = cf.stationary_dim();
  const double delta = h / static_cast<double>(refinement);
  const Matrix diffusion_factor = psd_factor(levy.diffusion_cov()) * std::sqrt(delta);
  const bool jumps = levy.has_jumps() && levy.jump_rate > 0.0;
  const Matrix jump_factor = jumps ? psd_factor(levy.jump_cov) : Matrix(m, m);
  const bool diffusion = levy.kind != LevyKind::compound_poisson_gaussian_jumps;
  const Matrix ea2d = expm(cf.A2() * delta);
  const Matrix ea2h = expm(cf.A2() * h);

  auto rng = make_path_rng(seed, path_index);
  std::poisson_distribution<long> arrivals(jumps ? levy.jump_rate * delta : 1.0);

  auto increment = [&]() -> Vector {
    Vector dl = diffusion ? Vector(diffusion_factor * detail::standard_normal(rng, m))
                          : Vector(Vector::Zero(m));
    if (jumps) {
      const long k = arrivals(rng);
      for (long j = 0; j < k; ++j) dl += jump_factor * detail::standard_normal(rng, m);
    }
    return dl;
  };

  Vector x2 = Vector::Zero(n2);
  for (long n = 0; n < warm; ++n) {
    for (long k = 0; k < refinement; ++k) x2 = ea2d * (x2 + cf.B2() * increment());
  }
  ps.x2_0 = x2;

  Vector x1 = x1_0;
  for (long n = 0; n < n_steps; ++n) {
    const Vector x2_prev = x2;
    Vector dl_sum = Vector::Zero(m);
    for (long k = 0; k < refinement; ++k) {
      const Vector dl = increment();
      dl_sum += dl;
      x2 = ea2d * (x2 + cf.B2() * dl);
    }
    const Vector r1 = cf.B1() * dl_sum;
    x1 += r1;
    detail::record(ps, n, x1, x2, r1, x2 - ea2h * x2_prev);
  }
  return ps;
}

struct FirstDifference {
  Matrix dy;     // (n-1) x d
  Matrix c1_r1;  // C1 R_{n,1}
  Matrix dy2;    // Y_{n,2} - Y_{n-1,2}
};

/// Row k holds Y_{k+1} - Y_k for the recorded rows k = 0..n-2.
inline FirstDifference first_difference(const PathSet& ps) {
  const Eigen::Index n = ps.n_steps();
  require(n >= 2, ErrorKind::length, "first difference needs at least 2 rows");
  FirstDifference fd;
  fd.dy = ps.y.bottomRows(n - 1) - ps.y.topRows(n - 1);
  fd.c1_r1 = ps.r1.bottomRows(n - 1) * ps.C1.transpose();
  fd.dy2 = ps.y2.bottomRows(n - 1) - ps.y2.topRows(n - 1);
  return fd;
}

}  // namespace cointss

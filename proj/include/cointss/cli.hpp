#pragma once

// Command implementations behind the `cointss` executable. Each command
// returns a process exit status: 0 success, 2 invalid input, 3 numerical
// failure. Argument parsing lives in the executable.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cointss/cointegration.hpp"
#include "cointss/ecf.hpp"
#include "cointss/io.hpp"
#include "cointss/kalman.hpp"
#include "cointss/moments.hpp"
#include "cointss/realization.hpp"
#include "cointss/simulate.hpp"

namespace cointss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kSeedEnv = "COINTSS_SEED";

/// Tolerance flags shared by every command; unset fields fall back to the
/// document's `options`, then to library defaults.
struct ToleranceFlags {
  std::optional<double> riccati_tol;
  std::optional<long> max_iter;
  std::optional<double> rank_tol;
  std::optional<double> root_tol;
};

struct SimulateArgs {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<long> n_steps;
  std::optional<double> h;
  std::optional<long> refinement;
  std::optional<long> burn_in;
  bool states = false;
  ToleranceFlags tol;
};

struct AnalyzeArgs {
  std::string config;
  std::optional<std::string> output;
  std::optional<std::string> moments;
  std::vector<double> t_grid{1.0, 2.0, 5.0, 10.0};
  std::vector<double> s_grid{0.0, 1.0, 2.0};
  ToleranceFlags tol;
};

struct CanonicalizeArgs {
  std::string config;
  std::optional<std::string> output;
  ToleranceFlags tol;
};

struct FilterArgs {
  std::string model;
  std::string path;
  std::string prefix;
  std::optional<double> h;
  int max_lag = 10;
  ToleranceFlags tol;
};

struct EcfArgs {
  std::string model;
  std::optional<std::string> path;
  std::optional<int> J;
  std::optional<double> h;
  std::optional<std::string> output;
  std::optional<std::string> residuals;
  int max_lag = 10;
  ToleranceFlags tol;
};

// ------------------------------------------------------------------ helpers

/// Flag, then document, then the seed environment variable, then 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag,
                                  const SamplingSpec& sampling) {
  if (flag) return *flag;
  if (sampling.seed) return *sampling.seed;
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    const std::string s(env);
    const bool digits = s.find_first_not_of("0123456789") == std::string::npos;
    require(digits && s.size() <= 20, ErrorKind::validation,
            std::string(kSeedEnv) + " must be a nonnegative integer, got '" + s + "'");
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail(ErrorKind::validation, std::string(kSeedEnv) + " is out of range");
    }
  }
  return 0;
}

template <class T>
T pick(const std::optional<T>& flag, const std::optional<T>& doc, T fallback) {
  if (flag) return *flag;
  if (doc) return *doc;
  return fallback;
}

inline KalmanOptions kalman_options(const ToleranceFlags& f, const SolverSettings& s) {
  KalmanOptions o;
  o.tol = pick(f.riccati_tol, s.riccati_tol, o.tol);
  o.max_iter = pick(f.max_iter, s.max_iter, o.max_iter);
  return o;
}

inline double rank_tol(const ToleranceFlags& f, const SolverSettings& s) {
  return pick(f.rank_tol, s.rank_tol, kDefaultRankTol);
}

inline double require_step(std::optional<double> flag, const SamplingSpec& s) {
  const auto h = flag ? flag : s.h;
  require(h.has_value(), ErrorKind::parameter,
          "sampling step h is required (sampling.h or --step)");
  require(std::isfinite(*h) && *h > 0.0, ErrorKind::domain, "sampling step h must be positive");
  return *h;
}

/// Canonical form of any document kind; mcarma goes through its state-space
/// realization first.
inline Canonicalization to_canonical(const ModelDocument& doc, double rank_tol) {
  CanonicalizeOptions opt;
  opt.rank_tol = rank_tol;
  switch (doc.kind) {
    case ModelKind::canonical: {
      const Eigen::Index n = doc.canonical->state_dim();
      return {*doc.canonical, Matrix::Identity(n, n)};
    }
    case ModelKind::state_space:
      return canonicalize(*doc.state_space, opt);
    case ModelKind::mcarma:
      return canonicalize(mcarma_to_ss(*doc.mcarma), opt);
  }
  fail(ErrorKind::validation, "unknown model kind");
}

inline Json sampled_model_json(const SampledModel& sm) {
  Json j;
  j["h"] = sm.h;
  j["c"] = sm.c;
  j["eAh"] = to_json(sm.eAh);
  j["sigma_tilde"] = to_json(sm.sigma_tilde);
  j["sigma11"] = to_json(sm.sigma11());
  j["sigma12"] = to_json(sm.sigma12());
  j["sigma22"] = to_json(sm.sigma22());
  j["gamma0"] = to_json(sm.gamma0);
  return j;
}

inline Json whiteness_json(const WhitenessReport& w) {
  Json j;
  j["n"] = w.n;
  j["max_lag"] = w.max_lag;
  j["band"] = w.band;
  j["max_abs"] = w.max_abs;
  j["degenerate"] = w.degenerate;
  j["passes"] = w.passes;
  return j;
}

inline Json minimality_json(const MinimalityReport& r) {
  Json j;
  j["controllability_rank"] = r.controllability_rank;
  j["observability_rank"] = r.observability_rank;
  j["is_controllable"] = r.is_controllable;
  j["is_observable"] = r.is_observable;
  j["is_minimal"] = r.is_minimal;
  return j;
}

inline void emit_json(const Json& j, const std::optional<std::string>& path,
                      std::ostream& out) {
  if (path) write_json_file(*path, j);
  else out << j.dump(2) << '\n';
}

/// Maps library errors to exit codes, printing one message line per problem.
template <class F>
int guarded(std::ostream& err, F&& body) {
  auto report = [&](const std::string& what) {
    std::istringstream lines(what);
    std::string line;
    while (std::getline(lines, line)) err << "cointss: " << line << '\n';
  };
  try {
    return body();
  } catch (const Error& e) {
    report(e.what());
    return is_validation_kind(e.kind()) ? kExitInvalid : kExitNumeric;
  } catch (const Json::exception& e) {
    report(std::string("validation error: ") + e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    report(std::string("numeric error: ") + e.what());
    return kExitNumeric;
  }
}

// ----------------------------------------------------------------- commands

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelDocument doc = load_document(a.config);
    const SamplingSpec& s = doc.sampling;
    const double h = require_step(a.h, s);
    const auto n_steps = a.n_steps ? a.n_steps : s.n_steps;
    require(n_steps.has_value(), ErrorKind::parameter,
            "number of steps is required (sampling.n_steps or --n-steps)");
    require(*n_steps >= 1, ErrorKind::parameter, "n_steps must be >= 1");
    const std::uint64_t seed = resolve_seed(a.seed, s);

    const Canonicalization can = to_canonical(doc, rank_tol(a.tol, doc.options));
    const CointCanonicalForm& cf = can.form;
    const Vector x1_0 = s.x1_0.value_or(Vector::Zero(cf.c()));
    require(x1_0.size() == cf.c(), ErrorKind::dimension,
            "sampling.x1_0 must have length c = " + std::to_string(cf.c()));

    std::string method = a.method ? *a.method : s.method.value_or("auto");
    if (method == "auto") {
      method = cf.levy().kind == LevyKind::brownian ? "exact_gaussian" : "levy_euler";
    }
    const SampledModel sm = discretize(cf, h);
    const long refinement = pick(a.refinement, s.refinement, kDefaultRefinement);
    std::optional<long> burn_in = a.burn_in ? a.burn_in : s.burn_in;
    PathSet ps;
    if (method == "exact_gaussian") {
      ps = simulate_exact_gaussian(sm, cf, *n_steps, x1_0, seed);
    } else if (method == "levy_euler") {
      if (!burn_in) burn_in = default_burn_in(cf, h);
      ps = simulate_levy_euler(cf, h, *n_steps, refinement, x1_0, burn_in, seed);
    } else {
      fail(ErrorKind::parameter,
           "unknown method '" + method + "' (auto, exact_gaussian, levy_euler)");
    }

    const Eigen::Index d = cf.obs_dim();
    const Eigen::Index c = cf.c();
    const Eigen::Index n2 = cf.stationary_dim();
    CsvTable t;
    t.header.push_back("t");
    for (Eigen::Index i = 1; i <= d; ++i) t.header.push_back("y_" + std::to_string(i));
    Eigen::Index cols = 1 + d;
    if (a.states) {
      for (Eigen::Index i = 1; i <= c; ++i) t.header.push_back("x1_" + std::to_string(i));
      for (Eigen::Index i = 1; i <= n2; ++i) t.header.push_back("x2_" + std::to_string(i));
      for (Eigen::Index i = 1; i <= c; ++i) t.header.push_back("r1_" + std::to_string(i));
      cols += 2 * c + n2;
    }
    t.data.resize(ps.n_steps(), cols);
    t.data.col(0) = ps.times;
    t.data.middleCols(1, d) = ps.y;
    if (a.states) {
      t.data.middleCols(1 + d, c) = ps.x1;
      t.data.middleCols(1 + d + c, n2) = ps.x2;
      t.data.middleCols(1 + d + c + n2, c) = ps.r1;
    }
    write_csv_file(a.output, t);

    Json side;
    side["schema_version"] = kSchemaVersion;
    side["seed"] = seed;
    side["path_index"] = ps.path_index;
    side["method"] = ps.method;
    side["n_steps"] = *n_steps;
    if (method == "levy_euler") {
      side["refinement"] = refinement;
      side["burn_in"] = *burn_in;
    }
    side["x1_0"] = to_json(ps.x1_0);
    side["x2_0"] = to_json(ps.x2_0);
    side["model"] = canonical_document(cf);
    side["sampled_model"] = sampled_model_json(sm);
    write_json_file(a.output + ".json", side);
    out << "wrote " << ps.n_steps() << " rows to " << a.output << '\n';
    return kExitOk;
  });
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelDocument doc = load_document(a.config);
    const double rtol = rank_tol(a.tol, doc.options);
    Json j;
    j["model_kind"] = std::string(to_string(doc.kind));
    std::optional<Matrix> beta;

    if (doc.kind == ModelKind::mcarma) {
      CointegrationOptions opt;
      opt.rank_tol = rtol;
      opt.root_tol = pick(a.tol.root_tol, doc.options.root_tol, opt.root_tol);
      const CointReport rep = check_cointegration(*doc.mcarma, opt);
      Json cr;
      cr["roots"] = Json::array();
      for (const Complex& z : rep.roots) cr["roots"].push_back(complex_to_json(z));
      cr["zero_roots"] = rep.zero_roots;
      cr["offending_roots"] = Json::array();
      for (const Complex& z : rep.offending_roots) {
        cr["offending_roots"].push_back(complex_to_json(z));
      }
      cr["condition_a"] = rep.condition_a;
      cr["r"] = rep.r;
      cr["alpha"] = to_json(rep.alpha);
      cr["beta"] = to_json(rep.beta);
      cr["condition_b"] = rep.condition_b;
      cr["rank_c"] = rep.rank_c;
      cr["condition_c"] = rep.condition_c;
      cr["is_cointegrated"] = rep.is_cointegrated;
      j["cointegration"] = cr;
      beta = rep.beta;
      j["p"] = doc.mcarma->p();
      j["q"] = doc.mcarma->q();
    }

    const Canonicalization can = to_canonical(doc, rtol);
    const CointCanonicalForm& cf = can.form;
    j["d"] = cf.obs_dim();
    j["N"] = cf.state_dim();
    j["c"] = cf.c();
    j["cointegration_rank"] = cf.obs_dim() - cf.c();
    j["minimality"] = minimality_json(decoupled_minimality_check(cf));
    j["canonical"] = to_json(cf);
    j["T"] = to_json(can.T);
    if (cf.c() > 0 && cf.c() < cf.obs_dim()) {
      const Matrix c1_perp = cointegration_space(cf);
      j["C1_perp"] = to_json(c1_perp);
      if (beta && beta->cols() == c1_perp.cols()) {
        j["beta_C1_perp_angle"] = max_principal_angle(*beta, c1_perp);
      }
    } else {
      j["C1_perp"] = nullptr;
    }

    if (a.moments) {
      CsvTable t;
      t.header = {"t", "s", "i", "j", "cov"};
      const Eigen::Index d = cf.obs_dim();
      const auto rows = Eigen::Index(a.t_grid.size() * a.s_grid.size()) * d * d;
      t.data.resize(rows, 5);
      Eigen::Index r = 0;
      for (double tt : a.t_grid) {
        for (double ss : a.s_grid) {
          const Matrix cov = cov_continuous(cf, tt, ss);
          for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index k = 0; k < d; ++k) {
              t.data.row(r++) << tt, ss, double(i + 1), double(k + 1), cov(i, k);
            }
          }
        }
      }
      write_csv_file(*a.moments, t);
    }
    emit_json(j, a.output, out);
    return kExitOk;
  });
}

inline int cmd_canonicalize(const CanonicalizeArgs& a, std::ostream& out,
                            std::ostream& err) {
  return guarded(err, [&] {
    const ModelDocument doc = load_document(a.config);
    const Canonicalization can = to_canonical(doc, rank_tol(a.tol, doc.options));
    Json j = canonical_document(can.form, doc.sampling);
    j["transform"] = to_json(can.T);
    emit_json(j, a.output, out);
    return kExitOk;
  });
}

namespace detail {

struct SolvedModel {
  CointCanonicalForm cf;
  SampledModel sm;
  KalmanSolution ks;
};

inline SolvedModel solve_document(const ModelDocument& doc, std::optional<double> h_flag,
                                  const ToleranceFlags& tol) {
  const double h = require_step(h_flag, doc.sampling);
  Canonicalization can = to_canonical(doc, rank_tol(tol, doc.options));
  SampledModel sm = discretize(can.form, h);
  KalmanSolution ks = solve_steady_state(sm, can.form, kalman_options(tol, doc.options));
  return {std::move(can.form), std::move(sm), std::move(ks)};
}

inline Vector time_column(const CsvTable& t) {
  const Eigen::Index col = t.column("t");
  if (col >= 0) return t.data.col(col);
  return Vector::LinSpaced(t.data.rows(), 1.0, double(t.data.rows()));
}

}  // namespace detail

inline int cmd_filter(const FilterArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelDocument doc = load_document(a.model);
    const CsvTable path = read_csv_file(a.path);
    require(a.max_lag >= 1, ErrorKind::parameter, "max_lag must be >= 1");
    const auto solved = detail::solve_document(doc, a.h, a.tol);
    const Matrix y = observations_from_csv(path, solved.cf.obs_dim());
    const FilterOutput fo = filter_innovations(solved.ks, y);

    const Eigen::Index d = solved.cf.obs_dim();
    CsvTable t;
    t.header.push_back("t");
    for (Eigen::Index i = 1; i <= d; ++i) t.header.push_back("eps_" + std::to_string(i));
    t.data.resize(y.rows(), 1 + d);
    t.data.col(0) = detail::time_column(path);
    t.data.rightCols(d) = fo.innovations;
    write_csv_file(a.prefix + "_innovations.csv", t);

    const KalmanSolution& ks = solved.ks;
    Json j;
    j["h"] = solved.sm.h;
    j["omega"] = to_json(ks.omega);
    j["K"] = to_json(ks.gain);
    j["V"] = to_json(ks.v);
    j["closed_loop"] = to_json(ks.closed_loop);
    j["iterations"] = ks.iterations;
    j["residual"] = ks.residual;
    j["closed_loop_radius"] = ks.closed_loop_radius;
    if (y.rows() >= 100 * a.max_lag) {
      j["whiteness"] = whiteness_json(whiteness_diagnostic(fo.innovations, a.max_lag));
    } else {
      j["whiteness"] = nullptr;
    }
    write_json_file(a.prefix + "_solution.json", j);
    out << "filtered " << y.rows() << " rows; Riccati converged in " << ks.iterations
        << " iterations\n";
    return kExitOk;
  });
}

inline int cmd_ecf(const EcfArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelDocument doc = load_document(a.model);
    const int J = a.J ? *a.J : doc.options.J.value_or(kDefaultTruncation);
    require(J >= 1, ErrorKind::parameter, "J must be >= 1");
    const auto solved = detail::solve_document(doc, a.h, a.tol);
    const EcfDecomposition dec =
        decompose(solved.ks, solved.cf, J, rank_tol(a.tol, doc.options));
    const StructuralReport sr = structural_check(solved.ks, solved.sm, solved.cf,
                                                 rank_tol(a.tol, doc.options));

    Json j;
    j["J"] = dec.J;
    j["r"] = dec.r;
    j["k1"] = to_json(dec.k1);
    j["alpha"] = to_json(dec.alpha);
    j["beta"] = to_json(dec.beta);
    j["tail_bound"] = dec.tail_bound;
    j["closed_loop_radius"] = dec.closed_loop_radius;
    Json ln = Json::array();
    Json kn = Json::array();
    for (int k = 0; k <= dec.J; ++k) {
      ln.push_back(dec.L[std::size_t(k)].norm());
      kn.push_back(dec.Ktilde[std::size_t(k)].norm());
    }
    j["L_norms"] = ln;
    j["Ktilde_norms"] = kn;
    Json st;
    st["P"] = to_json(sr.P);
    st["R"] = to_json(sr.R);
    st["idempotency_error"] = sr.idempotency_error;
    st["rank_P"] = sr.rank_P;
    st["reconstruction_error"] = sr.reconstruction_error;
    st["passes"] = sr.passes;
    j["structural_check"] = st;

    if (a.path) {
      const CsvTable path = read_csv_file(*a.path);
      const Matrix y = observations_from_csv(path, solved.cf.obs_dim());
      const EcfResiduals res = ecf_residuals(dec, y, J);
      const FilterOutput fo = filter_innovations(solved.ks, y);
      const Matrix kalman = fo.innovations.bottomRows(res.residuals.rows());
      Json pj;
      pj["rows"] = y.rows();
      pj["first_row"] = res.first_row;
      pj["max_discrepancy"] = (res.residuals - kalman).cwiseAbs().maxCoeff();
      if (res.residuals.rows() >= 100 * a.max_lag) {
        pj["whiteness"] = whiteness_json(whiteness_diagnostic(res.residuals, a.max_lag));
      } else {
        pj["whiteness"] = nullptr;
      }
      j["path"] = pj;

      if (a.residuals) {
        const Eigen::Index d = y.cols();
        CsvTable t;
        t.header.push_back("t");
        for (Eigen::Index i = 1; i <= d; ++i) t.header.push_back("eps_" + std::to_string(i));
        t.data.resize(res.residuals.rows(), 1 + d);
        t.data.col(0) = detail::time_column(path).tail(res.residuals.rows());
        t.data.rightCols(d) = res.residuals;
        write_csv_file(*a.residuals, t);
      }
    } else {
      require(!a.residuals, ErrorKind::parameter, "--residuals needs a path file");
    }
    emit_json(j, a.output, out);
    return kExitOk;
  });
}

}  // namespace cointss::cli

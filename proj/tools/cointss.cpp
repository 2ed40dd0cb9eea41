// cointss: simulate, analyze, canonicalize, filter and ECF reports for
// cointegrated continuous-time state-space models.

#include <iostream>

#include "CLI11.hpp"

#include "cointss/cli.hpp"

namespace {

void add_tolerances(CLI::App* cmd, cointss::cli::ToleranceFlags& tol) {
  cmd->add_option("--riccati-tol", tol.riccati_tol, "Riccati convergence tolerance");
  cmd->add_option("--max-iter", tol.max_iter, "Riccati iteration cap");
  cmd->add_option("--rank-tol", tol.rank_tol, "relative rank tolerance");
  cmd->add_option("--root-tol", tol.root_tol, "zero-root / real-part tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = cointss::cli;
  CLI::App app{"Cointegrated continuous-time state-space models"};
  app.require_subcommand(1);

  cli::SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate a sampled path to CSV");
  s->add_option("config", sim.config, "model JSON")->required();
  s->add_option("-o,--output", sim.output, "path CSV (sidecar written to <output>.json)")
      ->required();
  s->add_option("--seed", sim.seed, "RNG seed (overrides sampling.seed and $COINTSS_SEED)");
  s->add_option("--method", sim.method, "auto, exact_gaussian or levy_euler");
  s->add_option("--n-steps", sim.n_steps, "number of sampled rows");
  s->add_option("--step", sim.h, "sampling step h");
  s->add_option("--refinement", sim.refinement, "Euler substeps per step");
  s->add_option("--burn-in", sim.burn_in, "Euler warm-up steps");
  s->add_flag("--states", sim.states, "also write x1, x2 and r1 columns");
  add_tolerances(s, sim.tol);

  cli::AnalyzeArgs ana;
  auto* a = app.add_subcommand("analyze", "cointegration report and canonical form");
  a->add_option("config", ana.config, "model JSON")->required();
  a->add_option("-o,--output", ana.output, "write the report here instead of stdout");
  a->add_option("--moments", ana.moments, "CSV of Cov(Y(t), Y(t+s)) over the grid");
  a->add_option("--t-grid", ana.t_grid, "t values for --moments")->delimiter(',');
  a->add_option("--s-grid", ana.s_grid, "lag values for --moments")->delimiter(',');
  add_tolerances(a, ana.tol);

  cli::CanonicalizeArgs can;
  auto* c = app.add_subcommand("canonicalize", "write the canonical model document");
  c->add_option("config", can.config, "model JSON")->required();
  c->add_option("-o,--output", can.output, "write here instead of stdout");
  add_tolerances(c, can.tol);

  cli::FilterArgs fil;
  auto* f = app.add_subcommand("filter", "steady-state Kalman innovations of a path");
  f->add_option("model", fil.model, "model JSON")->required();
  f->add_option("path", fil.path, "path CSV with y_1..y_d columns")->required();
  f->add_option("prefix", fil.prefix, "output prefix")->required();
  f->add_option("--step", fil.h, "sampling step h");
  f->add_option("--max-lag", fil.max_lag, "whiteness lags");
  add_tolerances(f, fil.tol);

  cli::EcfArgs ecf;
  auto* e = app.add_subcommand("ecf", "error-correction decomposition report");
  e->add_option("model", ecf.model, "model JSON")->required();
  e->add_option("path", ecf.path, "optional path CSV for the residual comparison");
  e->add_option("-J", ecf.J, "truncation order");
  e->add_option("--step", ecf.h, "sampling step h");
  e->add_option("-o,--output", ecf.output, "write the report here instead of stdout");
  e->add_option("--residuals", ecf.residuals, "CSV of ECF residuals (needs a path)");
  e->add_option("--max-lag", ecf.max_lag, "whiteness lags");
  add_tolerances(e, ecf.tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : cli::kExitInvalid;
  }

  if (s->parsed()) return cli::cmd_simulate(sim, std::cout, std::cerr);
  if (a->parsed()) return cli::cmd_analyze(ana, std::cout, std::cerr);
  if (c->parsed()) return cli::cmd_canonicalize(can, std::cout, std::cerr);
  if (f->parsed()) return cli::cmd_filter(fil, std::cout, std::cerr);
  return cli::cmd_ecf(ecf, std::cout, std::cerr);
}

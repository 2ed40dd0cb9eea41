#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cointss/cli.hpp"
#include "cointss/io.hpp"
#include "cointss/simulate.hpp"

namespace cointss {
namespace {

namespace fs = std::filesystem;

const std::string kBinary = COINTSS_BINARY;
const std::string kModels = COINTSS_MODELS_DIR;

std::string model(const std::string& name) { return kModels + "/" + name + ".json"; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / "cointss_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// `env` is prepended to the command line, e.g. "COINTSS_SEED=5".
RunResult run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "env -u COINTSS_SEED " + env + " " + kBinary + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

Json json_of(const std::string& text) { return Json::parse(text); }

GTEST_TEST(CliSimulate, DeterministicForFixedSeed) {
  const auto dir = scratch("sim_det");
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  ASSERT_EQ(run(dir, "simulate " + model("scalar") + " -o " + a.string()).code, 0);
  ASSERT_EQ(run(dir, "simulate " + model("scalar") + " -o " + b.string()).code, 0);
  const std::string csv = slurp(a);
  EXPECT_EQ(csv, slurp(b));
  EXPECT_EQ(slurp(a.string() + ".json"), slurp(b.string() + ".json"));

  const CsvTable t = read_csv_file(a.string());
  EXPECT_EQ(t.data.rows(), 100000);
  ASSERT_EQ(t.header.size(), 3u);
  EXPECT_EQ(t.header[0], "t");
  EXPECT_EQ(t.header[1], "y_1");
  EXPECT_EQ(t.header[2], "y_2");

  const Json side = json_of(slurp(a.string() + ".json"));
  EXPECT_EQ(side["seed"].get<std::uint64_t>(), 20261014u);
  EXPECT_EQ(side["method"], "exact_gaussian");
  EXPECT_TRUE(side["sampled_model"].contains("sigma_tilde"));
}

// The CSV carries 17 significant digits, so it reproduces the library path
// bit for bit.
GTEST_TEST(CliSimulate, CsvRoundTripIsLossless) {
  const auto dir = scratch("sim_roundtrip");
  const auto path = dir / "p.csv";
  ASSERT_EQ(run(dir, "simulate " + model("scalar") + " --n-steps 2000 --states -o " +
                         path.string()).code, 0);
  const ModelDocument doc = load_document(model("scalar"));
  const SampledModel sm = discretize(*doc.canonical, 1.0);
  const PathSet ps =
      simulate_exact_gaussian(sm, *doc.canonical, 2000, Vector::Zero(1), 20261014u);
  const CsvTable t = read_csv_file(path.string());
  ASSERT_EQ(t.data.rows(), 2000);
  ASSERT_EQ(t.data.cols(), 1 + 2 + 1 + 1 + 1);
  EXPECT_EQ(t.data.col(0), ps.times);
  EXPECT_EQ(Matrix(t.data.middleCols(1, 2)), ps.y);
  EXPECT_EQ(Matrix(t.data.middleCols(3, 1)), ps.x1);
  EXPECT_EQ(Matrix(t.data.middleCols(4, 1)), ps.x2);
  EXPECT_EQ(Matrix(t.data.middleCols(5, 1)), ps.r1);
}

GTEST_TEST(CliSimulate, SeedPrecedence) {
  const auto dir = scratch("sim_seed");
  Json doc = read_json_file(model("scalar"));
  doc["sampling"].erase("seed");
  doc["sampling"]["n_steps"] = 50;
  const auto seedless = dir / "seedless.json";
  write_json_file(seedless.string(), doc);

  auto csv = [&](const std::string& config, const std::string& flags,
                 const std::string& env) {
    const auto out = dir / "out.csv";
    EXPECT_EQ(run(dir, "simulate " + config + " " + flags + " -o " + out.string(), env).code,
              0);
    return slurp(out);
  };
  const std::string s_default = csv(seedless.string(), "", "");
  const std::string s_env5 = csv(seedless.string(), "", "COINTSS_SEED=5");
  const std::string s_flag5 = csv(seedless.string(), "--seed 5", "");
  const std::string s_flag0_env5 = csv(seedless.string(), "--seed 0", "COINTSS_SEED=5");
  EXPECT_NE(s_default, s_env5);
  EXPECT_EQ(s_env5, s_flag5);
  EXPECT_EQ(s_flag0_env5, s_default);

  // A config seed beats the environment.
  const std::string s_config = csv(model("scalar"), "--n-steps 50", "");
  EXPECT_EQ(csv(model("scalar"), "--n-steps 50", "COINTSS_SEED=5"), s_config);

  const auto bad = run(dir, "simulate " + seedless.string() + " -o " +
                                (dir / "x.csv").string(), "COINTSS_SEED=abc");
  EXPECT_EQ(bad.code, 2);
}

GTEST_TEST(CliSimulate, SingularDriverIsValidationError) {
  const auto dir = scratch("sim_singular");
  Json doc = read_json_file(model("scalar"));
  doc["levy"]["sigma_L"] = Json::parse("[[1.0, 0.0], [0.0, 0.0]]");
  const auto cfg = dir / "singular.json";
  write_json_file(cfg.string(), doc);
  const RunResult r = run(dir, "simulate " + cfg.string() + " -o " + (dir / "p.csv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sigma_L is singular"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("nonsingular second moments"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "p.csv"));
}

GTEST_TEST(CliSimulate, ProblemsAreItemizedOnePerLine) {
  const auto dir = scratch("sim_itemized");
  Json doc = read_json_file(model("scalar"));
  doc["A2"] = Json::parse("[[-1.0], [1.0, 2.0]]");
  doc["sampling"]["h"] = -1.0;
  doc.erase("C2");
  const auto cfg = dir / "broken.json";
  write_json_file(cfg.string(), doc);
  const RunResult r = run(dir, "simulate " + cfg.string() + " -o " + (dir / "p.csv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cointss: validation error: sampling.h: must be positive"),
            std::string::npos) << r.err;
  EXPECT_NE(r.err.find("\ncointss: A2: rows have different lengths"), std::string::npos)
      << r.err;
  EXPECT_NE(r.err.find("\ncointss: C2: missing"), std::string::npos) << r.err;

  write_text(dir / "garbage.json", "{ not json");
  EXPECT_EQ(run(dir, "simulate " + (dir / "garbage.json").string() + " -o x.csv").code, 2);
  EXPECT_EQ(run(dir, "simulate " + (dir / "missing.json").string() + " -o x.csv").code, 2);
  EXPECT_EQ(run(dir, "simulate").code, 2);
}

GTEST_TEST(CliSimulate, McarmaAndLevyConfigs) {
  const auto dir = scratch("sim_kinds");
  const auto p = dir / "m.csv";
  ASSERT_EQ(run(dir, "simulate " + model("mcarma21") + " -o " + p.string()).code, 0);
  const Json side = json_of(slurp(p.string() + ".json"));
  EXPECT_EQ(side["method"], "levy_euler");
  EXPECT_EQ(side["model"]["model_kind"], "canonical");
  EXPECT_EQ(side["model"]["c"], 1);
  EXPECT_EQ(read_csv_file(p.string()).data.rows(), 8000);

  // The sidecar's canonical model is itself a loadable document.
  const auto reload = dir / "reload.json";
  write_json_file(reload.string(), side["model"]);
  EXPECT_EQ(run(dir, "analyze " + reload.string()).code, 0);

  EXPECT_EQ(run(dir, "simulate " + model("scalar_poisson") + " --method exact_gaussian -o " +
                         (dir / "x.csv").string()).code, 2);
  EXPECT_EQ(run(dir, "simulate " + model("scalar") + " --method nope -o " +
                         (dir / "x.csv").string()).code, 2);
}

GTEST_TEST(CliAnalyze, Mcar1IsCointegrated) {
  const auto dir = scratch("analyze_mcar1");
  const RunResult r = run(dir, "analyze " + model("mcar1"));
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = json_of(r.out);
  EXPECT_TRUE(j["cointegration"]["is_cointegrated"].get<bool>());
  EXPECT_EQ(j["cointegration"]["r"], 1);
  EXPECT_EQ(j["c"], 1);
  EXPECT_LT(j["beta_C1_perp_angle"].get<double>(), 1e-6);
  EXPECT_EQ(j["canonical"]["C1"], Json::parse("[[0.0], [1.0]]"));
}

GTEST_TEST(CliAnalyze, StationaryAndJordan) {
  const auto dir = scratch("analyze_other");
  const RunResult st = run(dir, "analyze " + model("stationary_mcar1"));
  ASSERT_EQ(st.code, 0) << st.err;
  const Json j = json_of(st.out);
  EXPECT_FALSE(j["cointegration"]["is_cointegrated"].get<bool>());
  EXPECT_EQ(j["cointegration"]["r"], 2);
  EXPECT_TRUE(j["C1_perp"].is_null());

  const RunResult jr = run(dir, "analyze " + model("jordan_zero"));
  EXPECT_EQ(jr.code, 3);
  EXPECT_NE(jr.err.find("multiplicity error"), std::string::npos) << jr.err;
}

GTEST_TEST(CliAnalyze, StateSpaceAndMoments) {
  const auto dir = scratch("analyze_ss");
  const auto mom = dir / "mom.csv";
  const RunResult r = run(dir, "analyze " + model("trivariate_state_space") + " --moments " +
                             mom.string() + " --t-grid 1,3 --s-grid 0,2");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = json_of(r.out);
  EXPECT_EQ(j["c"], 1);
  EXPECT_EQ(j["C1_perp"].size(), 3u);
  EXPECT_EQ(j["C1_perp"][0].size(), 2u);
  const CsvTable t = read_csv_file(mom.string());
  EXPECT_EQ(t.data.rows(), 2 * 2 * 9);

  const ModelDocument doc = load_document(model("trivariate_state_space"));
  const auto cf = canonicalize(*doc.state_space).form;
  const Matrix expected = cov_continuous(cf, 3.0, 2.0);
  for (Eigen::Index k = 0; k < t.data.rows(); ++k) {
    if (t.data(k, 0) != 3.0 || t.data(k, 1) != 2.0) continue;
    const auto i = Eigen::Index(t.data(k, 2)) - 1;
    const auto l = Eigen::Index(t.data(k, 3)) - 1;
    EXPECT_EQ(t.data(k, 4), expected(i, l));
  }
}

GTEST_TEST(CliCanonicalize, RecoversFormFromConjugatedRealization) {
  const auto dir = scratch("canon");
  const auto first = dir / "first.json";
  const RunResult r = run(dir, "canonicalize " + model("trivariate_state_space") + " -o " +
                             first.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json a = read_json_file(first.string());
  EXPECT_EQ(a["sampling"], read_json_file(model("trivariate_state_space"))["sampling"]);
  EXPECT_EQ(a["transform"].size(), 4u);

  const CointCanonicalForm cf = *load_document(first.string()).canonical;
  Matrix t(4, 4);
  t << 2.0, 0.1, 0.0, 0.3,
       0.0, 1.0, 0.5, 0.0,
       0.2, 0.0, 1.5, 0.1,
       0.0, -0.4, 0.0, 1.0;
  const StateSpaceModel ss = conjugate(assemble_from_canonical(cf), t);
  Json doc;
  doc["schema_version"] = "1";
  doc["model_kind"] = "state_space";
  doc["A"] = to_json(ss.A());
  doc["B"] = to_json(ss.B());
  doc["C"] = to_json(ss.C());
  doc["levy"] = to_json(ss.levy());
  const auto conj = dir / "conj.json";
  write_json_file(conj.string(), doc);
  const auto second = dir / "second.json";
  ASSERT_EQ(run(dir, "canonicalize " + conj.string() + " -o " + second.string()).code, 0);
  const CointCanonicalForm back = *load_document(second.string()).canonical;
  EXPECT_LE((back.A2() - cf.A2()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((back.B1() - cf.B1()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((back.B2() - cf.B2()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((back.C1() - cf.C1()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((back.C2() - cf.C2()).cwiseAbs().maxCoeff(), 1e-8);
}

GTEST_TEST(CliFilter, SimulatedPathInnovationsAreWhite) {
  const auto dir = scratch("filter");
  const auto path = dir / "p.csv";
  ASSERT_EQ(run(dir, "simulate " + model("mcarma21") + " -o " + path.string()).code, 0);
  const auto prefix = (dir / "f").string();
  const RunResult r = run(dir, "filter " + model("mcarma21") + " " + path.string() + " " + prefix);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json sol = read_json_file(prefix + "_solution.json");
  EXPECT_TRUE(sol["whiteness"]["passes"].get<bool>());
  EXPECT_LT(sol["closed_loop_radius"].get<double>(), 1.0);
  EXPECT_LE(sol["residual"].get<double>(), 1e-9);
  const std::string innov = slurp(prefix + "_innovations.csv");
  EXPECT_EQ(read_csv_file(prefix + "_innovations.csv").data.rows(), 8000);

  ASSERT_EQ(run(dir, "filter " + model("mcarma21") + " " + path.string() + " " + prefix).code,
            0);
  EXPECT_EQ(slurp(prefix + "_innovations.csv"), innov);

  // The trivariate path has three observation columns.
  const auto path3 = dir / "p3.csv";
  ASSERT_EQ(run(dir, "simulate " + model("trivariate_state_space") + " -o " +
                         path3.string()).code, 0);
  EXPECT_EQ(run(dir, "filter " + model("mcarma21") + " " + path3.string() + " " + prefix).code,
            2);
}

GTEST_TEST(CliFilter, NonConvergenceReportsResidual) {
  const auto dir = scratch("filter_nc");
  const auto path = dir / "p.csv";
  ASSERT_EQ(run(dir, "simulate " + model("mcarma21") + " --n-steps 100 -o " +
                         path.string()).code, 0);
  const RunResult r = run(dir, "filter " + model("mcarma21") + " " + path.string() + " " +
                             (dir / "f").string() + " --max-iter 3");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("convergence error"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("residual"), std::string::npos) << r.err;
}

GTEST_TEST(CliEcf, ScalarDiscrepancy) {
  const auto dir = scratch("ecf_scalar");
  const auto path = dir / "p.csv";
  ASSERT_EQ(run(dir, "simulate " + model("scalar") + " --n-steps 20000 -o " +
                         path.string()).code, 0);
  const auto res = dir / "res.csv";
  const RunResult r = run(dir, "ecf " + model("scalar") + " " + path.string() + " -J 200 --residuals " +
                             res.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = json_of(r.out);
  EXPECT_EQ(j["r"], 1);
  EXPECT_LE(j["path"]["max_discrepancy"].get<double>(), 1e-6);
  EXPECT_TRUE(j["structural_check"]["passes"].get<bool>());
  EXPECT_EQ(j["Ktilde_norms"].size(), 201u);
  EXPECT_EQ(read_csv_file(res.string()).data.rows(), 20000 - 201);
}

GTEST_TEST(CliEcf, TailBoundIsGeometric) {
  const auto dir = scratch("ecf_tail");
  const RunResult r10 = run(dir, "ecf " + model("mcarma21") + " -J 10");
  const RunResult r200 = run(dir, "ecf " + model("mcarma21") + " -J 200");
  ASSERT_EQ(r10.code, 0) << r10.err;
  ASSERT_EQ(r200.code, 0) << r200.err;
  const Json a = json_of(r10.out);
  const Json b = json_of(r200.out);
  const double rho = a["closed_loop_radius"].get<double>();
  const double ratio = b["tail_bound"].get<double>() / a["tail_bound"].get<double>();
  EXPECT_NEAR(ratio / std::pow(rho, 190), 1.0, 1e-8);
}

GTEST_TEST(CliEcf, StationaryModelIsRankError) {
  const auto dir = scratch("ecf_stationary");
  const RunResult r = run(dir, "ecf " + model("stationary_mcar1"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("rank error"), std::string::npos) << r.err;
  EXPECT_EQ(run(dir, "ecf " + model("scalar") + " --residuals x.csv").code, 2);
}

}  // namespace
}  // namespace cointss

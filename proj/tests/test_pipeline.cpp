#include <gtest/gtest.h>

#include <msl/msl.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace msl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string samples = MSL_SAMPLES_DIR;
const std::string cli = MSL_CLI_PATH;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("msl_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + cli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json report(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

bool has_finding(const json& r, const std::string& code) {
  for (const auto& f : r["findings"])
    if (f["code"] == code) return true;
  return false;
}

}  // namespace

TEST(pipeline, HeatAnalyze) {
  const auto out = scratch("heat");
  EXPECT_EQ(run("analyze --spec " + samples + "/heat.toml --out " + out.string()), 0);
  const auto r = report(out);
  EXPECT_EQ(r["schema"], report_schema);
  EXPECT_EQ(r["k"]["exact"], "1");
  EXPECT_EQ(r["exit_code"], 0);
  const auto& fit = r["analysis"]["fits"][0];
  EXPECT_TRUE(fit["gating"].get<bool>());
  EXPECT_NEAR(fit["fit"]["s_hat"].get<double>(), 1.0, 0.05);
  EXPECT_NEAR(r["analysis"]["borel"]["radius"].get<double>(), 0.25, 0.0125);
  EXPECT_TRUE(r["analysis"]["constants"]["verified"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "polygon.svg"));
  EXPECT_TRUE(fs::exists(out / "growth_fit.csv"));
  EXPECT_TRUE(fs::exists(out / "borel_coeffs.csv"));
  EXPECT_EQ(slurp(out / "growth_fit.csv").substr(0, 17), "p,log_norm,fitted");
}

TEST(pipeline, ConfigIsEchoed) {
  const auto out = scratch("config");
  EXPECT_EQ(run("solve --spec " + samples + "/heat.toml --nt 12 --nz 6 --precision 96 --out " + out.string()), 0);
  const auto r = report(out);
  EXPECT_EQ(r["config"]["nt"], 12);
  EXPECT_EQ(r["config"]["nz"], 6);
  EXPECT_EQ(r["config"]["precision_bits"], 96);
  EXPECT_EQ(r["config"]["pmax"], 12);
  EXPECT_TRUE(r["config"].contains("fit_tolerance"));
}

TEST(pipeline, PrecisionFromEnvironment) {
  const auto out = scratch("env");
  EXPECT_EQ(run("solve --spec " + samples + "/heat.toml --nt 8 --nz 4 --out " + out.string(), "MSL_PRECISION_BITS=200"),
            0);
  EXPECT_EQ(report(out)["config"]["precision_bits"], 200);
  EXPECT_EQ(run("solve --spec " + samples + "/heat.toml --nt 8 --nz 4 --precision 80 --out " + out.string(),
                "MSL_PRECISION_BITS=200"),
            0);
  EXPECT_EQ(report(out)["config"]["precision_bits"], 80);
}

TEST(pipeline, NotAUnit) {
  const auto out = scratch("unit");
  EXPECT_EQ(run("analyze --spec " + samples + "/not_a_unit.toml --out " + out.string()), 2);
  const auto r = report(out);
  EXPECT_TRUE(has_finding(r, "NotAUnit"));
  EXPECT_FALSE(r.contains("analysis"));
}

TEST(pipeline, UnknownKey) {
  const auto out = scratch("key");
  EXPECT_EQ(run("analyze --spec " + samples + "/unknown_key.toml --out " + out.string()), 2);
  const auto r = report(out);
  EXPECT_TRUE(has_finding(r, "SemanticError"));
  EXPECT_EQ(r["error_position"]["line"], 7);
  EXPECT_EQ(r["error_position"]["col"], 1);
}

TEST(pipeline, MissingSpecFile) {
  const auto out = scratch("missing");
  EXPECT_EQ(run("analyze --spec /nonexistent.toml --out " + out.string()), 2);
  EXPECT_TRUE(has_finding(report(out), "IoError"));
}

TEST(pipeline, BadFlags) {
  EXPECT_EQ(run("analyze"), 2);
  EXPECT_EQ(run("solve --spec x --precision 8"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(pipeline, Deterministic) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("analyze --spec " + samples + "/kappa2.toml --out " + a.string()), 0);
  ASSERT_EQ(run("analyze --spec " + samples + "/kappa2.toml --out " + b.string()), 0);
  auto ra = report(a), rb = report(b);
  EXPECT_TRUE(ra.contains("timings"));
  ra.erase("timings");
  rb.erase("timings");
  EXPECT_EQ(ra.dump(2), rb.dump(2));
  for (const char* f : {"polygon.svg", "growth_fit.csv", "borel_coeffs.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f));
}

TEST(pipeline, KappaTwoPolygonFigure) {
  const auto out = scratch("kappa2svg");
  EXPECT_EQ(run("polygon --spec " + samples + "/kappa2.toml --out " + out.string()), 0);
  const auto svg = slurp(out / "polygon.svg");
  EXPECT_NE(svg.find("data-points=\"2,-2 3,0\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"dominated\" data-at=\"2,-1\""), std::string::npos);
  EXPECT_NE(svg.find("k = 2"), std::string::npos);
  EXPECT_EQ(report(out)["k"]["exact"], "2");
}

TEST(pipeline, NoPositiveSlopeFigure) {
  const auto out = scratch("noslope");
  EXPECT_EQ(run("polygon --spec " + samples + "/exp_at.toml --out " + out.string()), 2);
  const auto svg = slurp(out / "polygon.svg");
  EXPECT_EQ(svg.find("class=\"slope\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"boundary\""), std::string::npos);
  EXPECT_TRUE(report(out)["polygon"]["k"].is_null());
}

TEST(pipeline, EmptyGrowthCsv) { EXPECT_EQ(growth_fit_csv(nullptr), "p,log_norm,fitted\n"); }

TEST(pipeline, ExponentialSolve) {
  const auto out = scratch("exp");
  EXPECT_EQ(run("solve --spec " + samples + "/exp_at.toml --out " + out.string()), 0);
  const auto r = report(out);
  EXPECT_TRUE(r["solve"]["residual"]["pass"].get<bool>());
  const auto& z0 = r["solve"]["z0_coefficients"];
  EXPECT_NEAR(std::stod(z0[2].get<std::string>()), 1.125, 1e-15);
}

TEST(pipeline, ConvergentAnalyzeWarns) {
  const auto out = scratch("conv");
  EXPECT_EQ(run("analyze --spec " + samples + "/exp_at.toml --out " + out.string()), 3);
  const auto r = report(out);
  EXPECT_TRUE(has_finding(r, "NoPositiveSlope"));
  EXPECT_LE(r["analysis"]["fits"][0]["fit"]["s_hat"].get<double>(), 0.05);
}

TEST(pipeline, NoPlots) {
  const auto out = scratch("noplots");
  EXPECT_EQ(run("analyze --no-plots --spec " + samples + "/heat.toml --nt 24 --nz 8 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_FALSE(fs::exists(out / "polygon.svg"));
}

TEST(pipeline, KernelsFractionalSelftest) {
  const auto out = scratch("misc");
  EXPECT_EQ(run("kernels --k 2 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "kernel_grid.csv"));
  EXPECT_TRUE(fs::exists(out / "kernel_moments.csv"));
  EXPECT_EQ(run("kernels --k 0 --out " + out.string()), 2);
  EXPECT_EQ(run("fractional --out " + out.string()), 0);
  EXPECT_TRUE(json::parse(slurp(out / "fractional.json"))["exit_code"] == 0);
  EXPECT_EQ(run("selftest"), 0);
}

TEST(pipeline, InProcessRun) {
  run_config cfg;
  cfg.subcommand = "analyze";
  cfg.spec_path = samples + "/fractional_heat.toml";
  cfg.out_dir = scratch("inproc");
  const auto res = run_pipeline(cfg);
  EXPECT_EQ(res.code, 0) << res.report["findings"].dump();
  EXPECT_EQ(res.report["k"]["exact"], "1");
}

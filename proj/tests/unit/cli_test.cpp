#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tfc_hybrid/cli/run.hpp"

using namespace tfc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tfc_hybrid_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::LoadedConfig from_text(const std::string& text) {
  return cli::parse_config_text(text);
}

std::string error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return {};
}

cli::RunConfig builtin_run(const std::string& name, const fs::path& out) {
  cli::RunConfig rc;
  rc.builtin = name;
  rc.output_dir = out.string();
  return rc;
}

}  // namespace

TEST(ParseConfig, SampleMatchesBuiltin) {
  const auto loaded =
      cli::parse_config(std::string(TFC_SAMPLES_DIR) + "/configs/piecewise_quadratic.json");
  EXPECT_EQ(loaded.run.solve.N, 100);
  EXPECT_EQ(loaded.run.solve.m, 8);
  const auto b = builtin("linear_linear");
  EXPECT_EQ(loaded.problem.geometry.break_points, b.geometry.break_points);
  const auto rg = solve(loaded.problem, loaded.run.solve);
  const auto rb = solve(b, loaded.run.solve);
  EXPECT_LE((rg.xi - rb.xi).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ParseConfig, AllSamplesLoad) {
  for (const char* f : {"piecewise_quadratic.json", "four_segment.json", "damped_forcing.json"}) {
    EXPECT_NO_THROW(cli::parse_config(std::string(TFC_SAMPLES_DIR) + "/configs/" + f)) << f;
  }
}

TEST(ParseConfig, SolverAndOutputSections) {
  const auto c = from_text(R"J({
    "break_points": [0, 1, 2], "y0": 0, "yf": 1,
    "segments": [{"a2": [1]}, {"a2": [2, 1], "forcing": [{"term": "cos(k*x)", "k": 2}]}],
    "solver": {"N": 40, "m": [6, 9], "basis": "legendre", "tol": 1e-11,
               "max_iter": 7, "init": [0.5, 0.5], "divergence_window": 3,
               "eval_points": 50},
    "output": {"dir": "x", "format": "json", "emit_plot_data": true}})J");
  EXPECT_EQ(c.run.solve.N, 40);
  EXPECT_EQ(c.run.solve.m_per_segment, (std::vector<int>{6, 9}));
  EXPECT_EQ(c.run.solve.family, Family::Legendre);
  EXPECT_EQ(c.run.solve.tol, 1e-11);
  EXPECT_EQ(c.run.solve.max_iter, 7);
  EXPECT_EQ(c.run.solve.initial_guess, InitialGuessPolicy::Explicit);
  EXPECT_EQ(c.run.solve.divergence_window, 3);
  EXPECT_EQ(c.run.solve.eval_points, 50);
  EXPECT_EQ(c.run.output_dir, "x");
  EXPECT_EQ(c.run.format, cli::OutputFormat::Json);
  EXPECT_TRUE(c.run.emit_plot_data);
  EXPECT_DOUBLE_EQ(c.problem.segments[1].residual(0.5, 0, 0, 1), 2.5 - std::cos(1.0));
}

TEST(ParseConfig, ValidationMessages) {
  EXPECT_NE(error_of(R"J({"break_points": [0, 1, 0.5], "y0": 0, "yf": 1,
                         "segments": [{"a2": [1]}, {"a2": [1]}]})J")
                .find("break_points not strictly increasing"),
            std::string::npos);
  EXPECT_NE(error_of(R"J({"break_points": [0, 1], "y0": 0, "yf": 1,
                         "segments": [{"a2": [0]}]})J")
                .find("leading coefficient identically zero"),
            std::string::npos);
  EXPECT_NE(error_of(R"J({"break_points": [0, 1], "y0": 0, "yf": 1,
                         "segments": [{"a2": [1]}, {"a2": [1]}]})J")
                .find("segment count mismatch"),
            std::string::npos);
  const std::string unknown = error_of(R"J({"break_points": [0, 1], "y0": 0, "yf": 1,
      "segments": [{"a2": [1], "forcing": [{"term": "tanh(k*x)"}]}]})J");
  EXPECT_NE(unknown.find("unknown forcing term"), std::string::npos);
  EXPECT_NE(unknown.find("segments[0].forcing[0].term"), std::string::npos);
  EXPECT_NE(error_of(R"J({"break_points": [0, 1], "y0": 1e999, "yf": 1,
                         "segments": [{"a2": [1]}]})J")
                .find("not valid JSON"),
            std::string::npos);
  EXPECT_NE(error_of(R"J({"break_points": [0, 1], "yf": 1, "segments": [{"a2": [1]}]})J")
                .find("y0: missing"),
            std::string::npos);
  EXPECT_NE(error_of(R"J({"break_points": [0, 1], "y0": 0, "yf": 1,
                         "segments": [{"a2": [1], "f": ["x"]}]})J")
                .find("segments[0].f[0]"),
            std::string::npos);
  EXPECT_THROW(cli::parse_config("/nonexistent/config.json"), ConfigurationError);
}

TEST(RunConfig, ExactlyOneProblemSource) {
  cli::RunConfig rc;
  EXPECT_THROW(rc.validate(), ConfigurationError);
  rc.builtin = "linear_linear";
  EXPECT_NO_THROW(rc.validate());
  rc.config_path = "x.json";
  EXPECT_THROW(rc.validate(), ConfigurationError);
}

TEST(Run, CsvSolutionTable) {
  const auto dir = scratch("csv");
  auto rc = builtin_run("linear_linear", dir);
  rc.solve.m = 8;
  const auto rep = cli::run(builtin("linear_linear"), rc);
  EXPECT_EQ(rep.exit_status, 0);
  std::ifstream in(dir / "solution.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "segment_index,x,y,dy,d2y,y_exact,abs_err,dy_exact,abs_err_dy");
  int rows = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 9u);
    worst = std::max({worst, std::stod(cells[6]), std::stod(cells[8])});
    ++rows;
  }
  EXPECT_EQ(rows, 2000);
  EXPECT_LE(worst, 1e-12);
  EXPECT_TRUE(fs::exists(dir / "errors.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Run, ExplicitGuessSummary) {
  const auto dir = scratch("explicit");
  auto rc = builtin_run("linear_nonlinear", dir);
  rc.solve.initial_guess = InitialGuessPolicy::Explicit;
  rc.solve.init_values = {1.0, -1.0};
  const auto rep = cli::run(builtin("linear_nonlinear"), rc);
  EXPECT_EQ(rep.exit_status, 0);
  const auto s = cli::json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_LE(s["iterations"].get<int>(), 30);
  for (const char* key : {"problem", "n_segments", "N", "m", "iterations", "converged",
                          "residual_trace", "junctions", "max_abs_err", "wall_time_ms"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
}

TEST(Run, JsonSummaryJunction) {
  const auto dir = scratch("json");
  auto rc = builtin_run("nonlinear_nonlinear", dir);
  rc.format = cli::OutputFormat::Json;
  const auto rep = cli::run(builtin("nonlinear_nonlinear"), rc);
  EXPECT_EQ(rep.exit_status, 0);
  const auto s = cli::json::parse(slurp(dir / "summary.json"));
  EXPECT_NEAR(s["junctions"][0]["y"].get<double>(), 1.306853, 1e-6);
  EXPECT_NEAR(s["junctions"][0]["y"].get<double>(), 2.0 - std::log(2.0), 1e-9);
  EXPECT_TRUE(fs::exists(dir / "solution.json"));
  EXPECT_TRUE(fs::exists(dir / "errors.json"));
  const auto sol = cli::json::parse(slurp(dir / "solution.json"));
  EXPECT_EQ(sol["segments"].size(), 2u);
  EXPECT_EQ(sol["segments"][1]["x"].size(), 1000u);
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    auto rc = builtin_run("nonlinear_nonlinear", dir);
    rc.emit_plot_data = true;
    rc.solve.eval_points = 200;
    cli::run(builtin("nonlinear_nonlinear"), rc);
  }
  for (const char* f : {"solution.csv", "errors.csv", "plot_solution.dat",
                        "plot_error.dat", "plot_residual.dat"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto sa = cli::json::parse(slurp(a / "summary.json"));
  auto sb = cli::json::parse(slurp(b / "summary.json"));
  sa.erase("wall_time_ms");
  sb.erase("wall_time_ms");
  EXPECT_EQ(sa.dump(), sb.dump());
}

TEST(Run, SeventeenDigitRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 77.0 / 192.0, 2.0 - std::log(2.0), 1e-300, -123456.789}) {
    EXPECT_EQ(std::stod(cli::format_double(v)), v);
  }
  EXPECT_EQ(cli::format_double(0.1), "0.10000000000000001");
}

TEST(Run, UnconvergedRunStillWritesSummary) {
  const auto dir = scratch("unconverged");
  auto rc = builtin_run("nonlinear_nonlinear", dir);
  rc.solve.max_iter = 2;
  const auto rep = cli::run(builtin("nonlinear_nonlinear"), rc);
  EXPECT_NE(rep.exit_status, 0);
  const auto s = cli::json::parse(slurp(dir / "summary.json"));
  EXPECT_FALSE(s["converged"].get<bool>());
  EXPECT_EQ(s["iterations"].get<int>(), 2);
}

TEST(Run, DivergedRunStillWritesSummary) {
  HybridProblem p;
  p.name = "uphill";
  p.geometry = Geometry{{0.0, 1.0}, 1.0, 3.0};
  p.segments.push_back(SegmentDynamics::nonlinear(
      [](double, double y, double, double d2y) { return d2y - y; },
      [](double, double, double, double) { return Partials{1.0, 0.0, -1.0}; }));
  p.default_m = 6;
  const auto dir = scratch("diverged");
  cli::RunConfig rc;
  rc.config_path = "inline";
  rc.output_dir = dir.string();
  const auto rep = cli::run(p, rc);
  EXPECT_TRUE(rep.diverged);
  EXPECT_NE(rep.exit_status, 0);
  const auto s = cli::json::parse(slurp(dir / "summary.json"));
  EXPECT_FALSE(s["converged"].get<bool>());
  EXPECT_EQ(s["residual_trace"].size(), 5u);
  EXPECT_TRUE(s["max_abs_err"].is_null());
}

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfc_hybrid/cli/run.hpp"
#include "tfc_hybrid/tfc_hybrid.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_commas(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw tfc::ConfigurationError(std::string(what) + ": bad number '" +
                                    item + "'");
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& item : split_commas(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw tfc::ConfigurationError(std::string(what) + ": bad integer '" +
                                    item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Least-squares solver for piecewise second-order boundary-value "
      "problems with C1 junctions.\n"
      "Command-line flags override the values found in a --config file."};

  std::optional<std::string> problem;
  std::optional<std::string> config;
  std::optional<int> N;
  std::optional<std::string> m;
  std::optional<std::string> basis;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> init;
  std::optional<std::string> init_policy;
  std::optional<std::string> output;
  std::optional<std::string> format;
  bool emit_plot_data = false;
  std::optional<int> eval_points;

  auto* problem_opt =
      app.add_option("--problem", problem,
                     "builtin problem: linear_linear, linear_nonlinear, "
                     "nonlinear_nonlinear");
  auto* config_opt =
      app.add_option("--config", config, "JSON problem file (linear segments)");
  problem_opt->excludes(config_opt);
  app.add_option("--N", N, "collocation points per segment (default 100)");
  app.add_option("--m", m,
                 "basis functions per segment, one value or one per segment "
                 "(default: problem's own)");
  app.add_option("--basis", basis, "chebyshev | legendre");
  app.add_option("--tol", tol, "residual 2-norm tolerance (default 1e-13)");
  app.add_option("--max-iter", max_iter, "Gauss-Newton iteration cap (default 50)");
  app.add_option("--init", init,
                 "junction guess y1,dy1[,y2,dy2,...]; implies --init-policy "
                 "explicit");
  app.add_option("--init-policy", init_policy, "line | explicit (default line)");
  app.add_option("--output", output, "output directory (default tfc_output)");
  app.add_option("--format", format, "csv | json (default csv)");
  app.add_flag("--emit-plot-data", emit_plot_data,
               "also write whitespace-separated plot data files");
  app.add_option("--eval-points", eval_points,
                 "evaluation points per segment (default 1000)");

  CLI11_PARSE(app, argc, argv);

  try {
    tfc::HybridProblem p;
    tfc::cli::RunConfig rc;
    if (config) {
      auto loaded = tfc::cli::parse_config(*config);
      p = std::move(loaded.problem);
      rc = std::move(loaded.run);
    } else if (problem) {
      p = tfc::builtin(*problem);
      rc.builtin = *problem;
    }

    auto& o = rc.solve;
    if (N) o.N = *N;
    if (m) {
      const auto values = parse_ints(*m, "--m");
      if (values.size() == 1) {
        o.m = values.front();
        o.m_per_segment.clear();
      } else {
        o.m_per_segment = values;
      }
    }
    if (basis) o.family = tfc::cli::parse_family(*basis);
    if (tol) o.tol = *tol;
    if (max_iter) o.max_iter = *max_iter;
    if (init) {
      o.init_values = parse_doubles(*init, "--init");
      o.initial_guess = tfc::InitialGuessPolicy::Explicit;
    }
    if (init_policy) o.initial_guess = tfc::cli::parse_policy(*init_policy);
    if (output) rc.output_dir = *output;
    if (format) rc.format = tfc::cli::parse_format(*format);
    if (emit_plot_data) rc.emit_plot_data = true;
    if (eval_points) o.eval_points = *eval_points;
    rc.validate();

    const auto rep = tfc::cli::run(p, rc);
    if (rep.result) {
      std::cout << p.name << ": " << (rep.converged ? "converged" : "not converged")
                << " after " << rep.result->iterations << " iteration(s), ||L||_2 = "
                << tfc::cli::format_double(rep.residual_trace.empty()
                                               ? rep.result->initial_residual
                                               : rep.residual_trace.back())
                << "\n";
    }
    if (!rep.message.empty()) std::cerr << p.name << ": " << rep.message << "\n";
    for (const auto& f : rep.files) std::cout << "  wrote " << f << "\n";
    return rep.exit_status;
  } catch (const tfc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

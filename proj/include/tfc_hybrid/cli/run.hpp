#pragma once

// One solve per invocation and the files it leaves behind:
//   solution.{csv,json}  y, y', y'' on the evaluation grid of every segment
//   summary.json         iterations, residual trace, junctions, timing
//   errors.{csv,json}    pointwise absolute errors, when an exact solution
//                        is known
//   plot_*.dat           whitespace separated columns, with emit_plot_data
//
// Every file except the wall_time_ms entry of summary.json depends only on
// the problem and the run configuration.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tfc_hybrid/cli/config.hpp"

namespace tfc::cli {

using ordered_json = nlohmann::ordered_json;

/// Round-trip exact text with 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunReport {
  std::optional<SolveResult> result;
  bool converged = false;
  bool diverged = false;
  std::string message;
  std::vector<double> residual_trace;
  std::vector<std::string> files;
  int exit_status = 1;
};

namespace detail {

struct EvalRow {
  int segment = 0;
  double x = 0.0;
  double y = 0.0;
  double dy = 0.0;
  double d2y = 0.0;
  std::optional<double> y_exact;
  std::optional<double> dy_exact;
  std::optional<double> d2y_exact;
};

inline std::vector<EvalRow> evaluation_table(const HybridProblem& p,
                                             const SolveResult& r,
                                             int points) {
  std::vector<EvalRow> rows;
  for (int k = 0; k < p.n_segments(); ++k) {
    const Interval iv = p.geometry.segment(k);
    for (int i = 0; i < points; ++i) {
      EvalRow row;
      row.segment = k;
      row.x = i + 1 == points ? iv.xf : iv.x0 + iv.width() * i / (points - 1);
      row.y = r.evaluate_on_segment(k, row.x, 0);
      row.dy = r.evaluate_on_segment(k, row.x, 1);
      row.d2y = r.evaluate_on_segment(k, row.x, 2);
      if (p.has_analytic()) {
        const auto& exact = p.analytic[static_cast<std::size_t>(k)];
        row.y_exact = exact(row.x, 0);
        row.dy_exact = exact(row.x, 1);
        row.d2y_exact = exact(row.x, 2);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string write_text(const std::filesystem::path& path,
                              const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
  out << text;
  return path.string();
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

inline std::string solution_csv(const std::vector<EvalRow>& rows, bool exact) {
  std::vector<std::string> head{"segment_index", "x", "y", "dy", "d2y"};
  if (exact) {
    head.insert(head.end(), {"y_exact", "abs_err", "dy_exact", "abs_err_dy"});
  }
  std::string out = csv_line(head);
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.segment),
                                   format_double(r.x), format_double(r.y),
                                   format_double(r.dy), format_double(r.d2y)};
    if (exact) {
      cells.push_back(format_double(*r.y_exact));
      cells.push_back(format_double(std::abs(r.y - *r.y_exact)));
      cells.push_back(format_double(*r.dy_exact));
      cells.push_back(format_double(std::abs(r.dy - *r.dy_exact)));
    }
    out += csv_line(cells);
  }
  return out;
}

inline std::string errors_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      csv_line({"segment_index", "x", "abs_err_y", "abs_err_dy", "abs_err_d2y"});
  for (const auto& r : rows) {
    out += csv_line({std::to_string(r.segment), format_double(r.x),
                     format_double(std::abs(r.y - *r.y_exact)),
                     format_double(std::abs(r.dy - *r.dy_exact)),
                     format_double(std::abs(r.d2y - *r.d2y_exact))});
  }
  return out;
}

inline ordered_json solution_json(const HybridProblem& p,
                                  const std::vector<EvalRow>& rows,
                                  bool exact) {
  ordered_json segs = ordered_json::array();
  for (int k = 0; k < p.n_segments(); ++k) {
    ordered_json s;
    s["segment_index"] = k;
    for (const char* key : {"x", "y", "dy", "d2y"}) {
      s[key] = ordered_json::array();
    }
    if (exact) {
      for (const char* key : {"y_exact", "abs_err", "dy_exact", "abs_err_dy"}) {
        s[key] = ordered_json::array();
      }
    }
    for (const auto& r : rows) {
      if (r.segment != k) continue;
      s["x"].push_back(r.x);
      s["y"].push_back(r.y);
      s["dy"].push_back(r.dy);
      s["d2y"].push_back(r.d2y);
      if (exact) {
        s["y_exact"].push_back(*r.y_exact);
        s["abs_err"].push_back(std::abs(r.y - *r.y_exact));
        s["dy_exact"].push_back(*r.dy_exact);
        s["abs_err_dy"].push_back(std::abs(r.dy - *r.dy_exact));
      }
    }
    segs.push_back(std::move(s));
  }
  ordered_json out;
  out["problem"] = p.name;
  out["segments"] = std::move(segs);
  return out;
}

inline ordered_json errors_json(const HybridProblem& p,
                                const std::vector<EvalRow>& rows) {
  ordered_json segs = ordered_json::array();
  for (int k = 0; k < p.n_segments(); ++k) {
    ordered_json s;
    s["segment_index"] = k;
    for (const char* key : {"x", "abs_err_y", "abs_err_dy", "abs_err_d2y"}) {
      s[key] = ordered_json::array();
    }
    for (const auto& r : rows) {
      if (r.segment != k) continue;
      s["x"].push_back(r.x);
      s["abs_err_y"].push_back(std::abs(r.y - *r.y_exact));
      s["abs_err_dy"].push_back(std::abs(r.dy - *r.dy_exact));
      s["abs_err_d2y"].push_back(std::abs(r.d2y - *r.d2y_exact));
    }
    segs.push_back(std::move(s));
  }
  ordered_json out;
  out["problem"] = p.name;
  out["segments"] = std::move(segs);
  return out;
}

inline ordered_json summary_json(const HybridProblem& p, const RunConfig& rc,
                                 const RunReport& rep) {
  const auto m = rc.solve.resolved_m(p);
  const bool uniform = std::all_of(m.begin(), m.end(),
                                   [&](int v) { return v == m.front(); });
  ordered_json s;
  s["problem"] = p.name;
  s["n_segments"] = p.n_segments();
  s["N"] = rc.solve.N;
  if (uniform) {
    s["m"] = m.front();
  } else {
    s["m"] = m;
  }
  s["basis"] = to_string(rc.solve.family);
  s["iterations"] = rep.residual_trace.size();
  s["converged"] = rep.converged;
  s["residual_trace"] = rep.residual_trace;
  s["junctions"] = ordered_json::array();
  s["max_abs_err"] = nullptr;
  if (rep.result) {
    const SolveResult& r = *rep.result;
    s["iterations"] = r.iterations;
    s["initial_residual"] = r.initial_residual;
    s["condition"] = r.condition;
    s["rank_deficient"] = r.rank_deficient;
    for (const auto& j : r.junctions) {
      s["junctions"].push_back({{"x", j.x}, {"y", j.y}, {"dy", j.dy}});
    }
    if (r.max_abs_err) {
      s["max_abs_err"] = {{"y", r.max_abs_err->y},
                          {"dy", r.max_abs_err->dy},
                          {"d2y", r.max_abs_err->d2y}};
    }
    s["wall_time_ms"] = r.wall_time_ms;
  } else {
    s["wall_time_ms"] = nullptr;
  }
  if (!rep.message.empty()) s["message"] = rep.message;
  return s;
}

inline std::string plot_solution(const std::vector<EvalRow>& rows) {
  std::string out = "# x y dy d2y\n";
  int last = rows.empty() ? 0 : rows.front().segment;
  for (const auto& r : rows) {
    if (r.segment != last) {
      out += "\n\n";
      last = r.segment;
    }
    out += format_double(r.x) + ' ' + format_double(r.y) + ' ' +
           format_double(r.dy) + ' ' + format_double(r.d2y) + '\n';
  }
  return out;
}

inline std::string plot_error(const std::vector<EvalRow>& rows) {
  std::string out = "# x abs_err_y abs_err_dy abs_err_d2y\n";
  int last = rows.empty() ? 0 : rows.front().segment;
  for (const auto& r : rows) {
    if (r.segment != last) {
      out += "\n\n";
      last = r.segment;
    }
    out += format_double(r.x) + ' ' + format_double(std::abs(r.y - *r.y_exact)) +
           ' ' + format_double(std::abs(r.dy - *r.dy_exact)) + ' ' +
           format_double(std::abs(r.d2y - *r.d2y_exact)) + '\n';
  }
  return out;
}

inline std::string plot_residual(const std::vector<double>& trace) {
  std::string out = "# iteration residual_l2\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i + 1) + ' ' + format_double(trace[i]) + '\n';
  }
  return out;
}

}  // namespace detail

/// Solve `p` with the settings in `rc` and write the artifacts into
/// rc.output_dir. Exit status 0 means converged, 1 means the solve stopped
/// unconverged or diverged; the summary is written in every case.
inline RunReport run(const HybridProblem& p, const RunConfig& rc) {
  namespace fs = std::filesystem;
  RunReport rep;
  try {
    rep.result = solve(p, rc.solve);
    rep.converged = rep.result->converged;
    rep.residual_trace = rep.result->residual_trace;
    if (!rep.converged) {
      rep.message = "not converged after " +
                    std::to_string(rep.result->iterations) + " iterations";
    }
  } catch (const DivergenceError& e) {
    rep.diverged = true;
    rep.message = e.what();
    rep.residual_trace = e.trace();
  }

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  const bool csv = rc.format == OutputFormat::Csv;

  if (rep.result) {
    const bool exact = p.has_analytic();
    const auto rows =
        detail::evaluation_table(p, *rep.result, rc.solve.eval_points);
    if (csv) {
      rep.files.push_back(
          detail::write_text(dir / "solution.csv", detail::solution_csv(rows, exact)));
      if (exact) {
        rep.files.push_back(
            detail::write_text(dir / "errors.csv", detail::errors_csv(rows)));
      }
    } else {
      rep.files.push_back(detail::write_text(
          dir / "solution.json", detail::solution_json(p, rows, exact).dump(2) + "\n"));
      if (exact) {
        rep.files.push_back(detail::write_text(
            dir / "errors.json", detail::errors_json(p, rows).dump(2) + "\n"));
      }
    }
    if (rc.emit_plot_data) {
      rep.files.push_back(detail::write_text(dir / "plot_solution.dat",
                                             detail::plot_solution(rows)));
      if (exact) {
        rep.files.push_back(
            detail::write_text(dir / "plot_error.dat", detail::plot_error(rows)));
      }
    }
  }
  if (rc.emit_plot_data) {
    rep.files.push_back(detail::write_text(
        dir / "plot_residual.dat", detail::plot_residual(rep.residual_trace)));
  }
  rep.files.push_back(detail::write_text(
      dir / "summary.json", detail::summary_json(p, rc, rep).dump(2) + "\n"));
  rep.exit_status = rep.converged ? 0 : 1;
  return rep;
}

}  // namespace tfc::cli

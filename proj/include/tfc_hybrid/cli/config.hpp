#pragma once

// Run configuration and the JSON problem file format.
//
//   {
//     "name": "two_forcings",
//     "break_points": [0, 0.5, 1],
//     "y0": 0, "yf": 1,
//     "segments": [
//       {"a2": [1], "a1": [0], "a0": [0], "f": [0, 0, 1]},
//       {"a2": [1], "f": [1, 0, 1],
//        "forcing": [{"term": "exp(k*x)", "k": -1, "scale": 2}]}
//     ],
//     "solver": {"N": 100, "m": 8, "basis": "chebyshev", "tol": 1e-13,
//                "max_iter": 50, "init_policy": "line", "init": [],
//                "divergence_window": 5, "eval_points": 1000},
//     "output": {"dir": "out", "format": "csv", "emit_plot_data": false}
//   }
//
// Coefficient arrays are polynomials in ascending powers of x. Missing a1,
// a0 and f default to zero; a2 is required.

#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfc_hybrid/solver.hpp"

namespace tfc::cli {

using json = nlohmann::json;

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigurationError("format must be csv or json, got '" + s + "'");
}

inline Family parse_family(const std::string& s) {
  if (s == "chebyshev") return Family::Chebyshev;
  if (s == "legendre") return Family::Legendre;
  throw ConfigurationError("basis must be chebyshev or legendre, got '" + s +
                           "'");
}

inline InitialGuessPolicy parse_policy(const std::string& s) {
  if (s == "line") return InitialGuessPolicy::Line;
  if (s == "explicit") return InitialGuessPolicy::Explicit;
  throw ConfigurationError("init policy must be line or explicit, got '" + s +
                           "'");
}

/// Everything a run needs besides the problem itself.
struct RunConfig {
  /// Exactly one of these names the problem.
  std::optional<std::string> builtin;
  std::optional<std::string> config_path;

  SolveOptions solve;
  std::string output_dir = "tfc_output";
  OutputFormat format = OutputFormat::Csv;
  bool emit_plot_data = false;

  void validate() const {
    if (builtin.has_value() == config_path.has_value()) {
      throw ConfigurationError(
          "give exactly one problem source (builtin name or config file)");
    }
    if (solve.N < 2) throw ConfigurationError("N must be >= 2");
    if (!(solve.tol > 0.0)) throw ConfigurationError("tol must be positive");
    if (solve.max_iter < 1) throw ConfigurationError("max_iter must be >= 1");
    if (solve.eval_points < 2) {
      throw ConfigurationError("eval_points must be >= 2");
    }
  }
};

struct LoadedConfig {
  HybridProblem problem;
  RunConfig run;
};

namespace detail {

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigurationError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigurationError(path + ": non-finite number");
  return v;
}

inline int integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    throw ConfigurationError(path + ": expected an integer");
  }
  return j.get<int>();
}

inline std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigurationError(path + ": expected a string");
  return j.get<std::string>();
}

inline std::vector<double> numbers_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigurationError(path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline const json& require(const json& j, const char* key,
                           const std::string& path) {
  if (!j.contains(key)) {
    throw ConfigurationError(path + (path.empty() ? "" : ".") + key +
                             ": missing");
  }
  return j.at(key);
}

inline ForcingTerm parse_forcing(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigurationError(path + ": expected an object");
  const std::string term = string_at(require(j, "term", path), path + ".term");
  ForcingTerm t;
  if (term == "exp(k*x)" || term == "exp") {
    t.kind = ForcingTerm::Kind::Exp;
  } else if (term == "sin(k*x)" || term == "sin") {
    t.kind = ForcingTerm::Kind::Sin;
  } else if (term == "cos(k*x)" || term == "cos") {
    t.kind = ForcingTerm::Kind::Cos;
  } else {
    throw ConfigurationError(path + ".term: unknown forcing term '" + term +
                             "'");
  }
  if (j.contains("k")) t.k = number_at(j["k"], path + ".k");
  if (j.contains("scale")) t.scale = number_at(j["scale"], path + ".scale");
  return t;
}

inline LinearSegmentConfig parse_segment(const json& j,
                                         const std::string& path) {
  if (!j.is_object()) throw ConfigurationError(path + ": expected an object");
  LinearSegmentConfig s;
  s.a2 = numbers_at(require(j, "a2", path), path + ".a2");
  if (j.contains("a1")) s.a1 = numbers_at(j["a1"], path + ".a1");
  if (j.contains("a0")) s.a0 = numbers_at(j["a0"], path + ".a0");
  if (j.contains("f")) s.f = numbers_at(j["f"], path + ".f");
  if (j.contains("forcing")) {
    const json& fj = j["forcing"];
    if (!fj.is_array()) {
      throw ConfigurationError(path + ".forcing: expected an array");
    }
    for (std::size_t i = 0; i < fj.size(); ++i) {
      s.forcing.push_back(
          parse_forcing(fj[i], path + ".forcing[" + std::to_string(i) + "]"));
    }
  }
  return s;
}

inline void parse_solver(const json& j, SolveOptions& o) {
  const std::string p = "solver";
  if (!j.is_object()) throw ConfigurationError(p + ": expected an object");
  if (j.contains("N")) o.N = integer_at(j["N"], p + ".N");
  if (j.contains("m")) {
    if (j["m"].is_array()) {
      o.m_per_segment.clear();
      for (std::size_t i = 0; i < j["m"].size(); ++i) {
        o.m_per_segment.push_back(
            integer_at(j["m"][i], p + ".m[" + std::to_string(i) + "]"));
      }
    } else {
      o.m = integer_at(j["m"], p + ".m");
    }
  }
  if (j.contains("basis")) {
    o.family = parse_family(string_at(j["basis"], p + ".basis"));
  }
  if (j.contains("tol")) o.tol = number_at(j["tol"], p + ".tol");
  if (j.contains("max_iter")) {
    o.max_iter = integer_at(j["max_iter"], p + ".max_iter");
  }
  if (j.contains("init")) {
    o.init_values = numbers_at(j["init"], p + ".init");
    if (!o.init_values.empty()) o.initial_guess = InitialGuessPolicy::Explicit;
  }
  if (j.contains("init_policy")) {
    o.initial_guess =
        parse_policy(string_at(j["init_policy"], p + ".init_policy"));
  }
  if (j.contains("divergence_window")) {
    o.divergence_window =
        integer_at(j["divergence_window"], p + ".divergence_window");
  }
  if (j.contains("eval_points")) {
    o.eval_points = integer_at(j["eval_points"], p + ".eval_points");
  }
}

inline void parse_output(const json& j, RunConfig& rc) {
  const std::string p = "output";
  if (!j.is_object()) throw ConfigurationError(p + ": expected an object");
  if (j.contains("dir")) rc.output_dir = string_at(j["dir"], p + ".dir");
  if (j.contains("format")) {
    rc.format = parse_format(string_at(j["format"], p + ".format"));
  }
  if (j.contains("emit_plot_data")) {
    if (!j["emit_plot_data"].is_boolean()) {
      throw ConfigurationError(p + ".emit_plot_data: expected a boolean");
    }
    rc.emit_plot_data = j["emit_plot_data"].get<bool>();
  }
}

}  // namespace detail

/// Problem and run settings from an already parsed JSON document.
inline LoadedConfig parse_config_json(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigurationError("config: top level must be an object");
  }
  LinearProblemConfig pc;
  if (doc.contains("name")) pc.name = detail::string_at(doc["name"], "name");
  pc.break_points =
      detail::numbers_at(detail::require(doc, "break_points", ""), "break_points");
  for (std::size_t i = 1; i < pc.break_points.size(); ++i) {
    if (!(pc.break_points[i - 1] < pc.break_points[i])) {
      throw ConfigurationError("break_points not strictly increasing (index " +
                               std::to_string(i) + ")");
    }
  }
  pc.y0 = detail::number_at(detail::require(doc, "y0", ""), "y0");
  pc.yf = detail::number_at(detail::require(doc, "yf", ""), "yf");
  const json& segs = detail::require(doc, "segments", "");
  if (!segs.is_array()) throw ConfigurationError("segments: expected an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    pc.segments.push_back(
        detail::parse_segment(segs[i], "segments[" + std::to_string(i) + "]"));
  }

  LoadedConfig out;
  if (doc.contains("solver")) detail::parse_solver(doc["solver"], out.run.solve);
  if (doc.contains("output")) detail::parse_output(doc["output"], out.run);
  if (out.run.solve.m > 0) pc.default_m = out.run.solve.m;
  out.problem = generic_linear(pc);
  return out;
}

/// Read and validate a JSON problem file.
/// Parses a JSON document held in memory; `origin` names it in messages.
inline LoadedConfig parse_config_text(const std::string& text,
                                      const std::string& origin = "config") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigurationError(origin + " is not valid JSON: " + e.what());
  }
  return parse_config_json(doc);
}

inline LoadedConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  LoadedConfig out = parse_config_text(text, "config '" + path + "'");
  out.run.config_path = path;
  return out;
}

}  // namespace tfc::cli

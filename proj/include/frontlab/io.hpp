#pragma once

// JSON experiment specs and fixed-format artifact writers.  One schema for
// every subcommand; unknown keys are hard errors so a spec file fully
// determines its outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frontlab/solver.hpp"

namespace frontlab {

using nlohmann::ordered_json;

inline const char* version_string() { return "frontlab 0.1.0"; }

/// 17 significant digits: enough for exact double round trips
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// serializes a json tree with every number printed through fmt17, keeping
/// file outputs byte-stable and round-trip exact
inline void dump17(const ordered_json& j, std::ostream& os, int indent = 0) {
  const std::string pad(std::size_t(indent) * 2, ' ');
  const std::string pad1(std::size_t(indent + 1) * 2, ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      std::size_t k = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        os << pad1 << ordered_json(it.key()).dump() << ": ";
        dump17(it.value(), os, indent + 1);
        os << (k + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        os << pad1;
        dump17(j[k], os, indent + 1);
        os << (k + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "]";
      return;
    }
    case ordered_json::value_t::number_float:
      os << fmt17(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

inline void write_json(const std::filesystem::path& path,
                       const ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  dump17(j, os);
  os << "\n";
}

/// rows of doubles under a fixed header, every value through fmt17
inline void write_csv(const std::filesystem::path& path,
                      const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << fmt17(row[i]);
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// strict JSON parsing

inline void require_keys(const ordered_json& j, const std::string& ctx,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
}

inline double get_num(const ordered_json& j, const std::string& ctx,
                      const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError(ctx + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

inline std::string get_str(const ordered_json& j, const std::string& ctx,
                           const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string())
    throw ConfigError(ctx + ": '" + key + "' must be a string");
  return j[key].get<std::string>();
}

// ---------------------------------------------------------------------------
// experiment specs

struct TrackSpec {
  bool enabled = true;
  double window_lo = 0.0, window_hi = 0.0;  // 0,0 = derive from data
};

struct ChartSpec {
  std::string metric = "minkowski";
  double kappa = 1.0;       // constant curvature of the reference curve
  double x_start = 1.0;     // curve passes through (0, x_start)
  double tau_span = 1.6;
  double T = 0.6;           // chart time extent
  double rho = 0.3;         // chart normal radius
  std::size_t n_y0 = 201;
  std::size_t n_yn = 33;
  double interior_x = -5.0;  // marks the u = +1 side of the curve
};

struct ProfileSpec {
  double s_max = 8.0;
  double ds = 0.005;
};

struct DecomposeSpec {
  std::vector<double> coeffs;  // f_eps(u) = sum coeffs[k] u^k
  double eps = 1.0;
};

struct ConvergenceSpec {
  std::size_t levels = 3;
  double tc = -1.0, xc = -1.0, Rt = -1.0, Rx = -1.0;  // <0 = derive
};

struct ExperimentSpec {
  std::string kind;
  RunConfig base;
  std::vector<double> sweep_eps;
  TrackSpec track;
  ChartSpec chart;
  ProfileSpec profile;
  DecomposeSpec decompose;
  ConvergenceSpec convergence;
};

inline RunConfig parse_run_config(const ordered_json& j) {
  const std::string ctx = "run";
  require_keys(j, ctx,
               {"eps", "kappa", "metric", "well", "x_min", "x_max", "t_final",
                "dx", "cfl", "cadence", "data"});
  RunConfig c;
  const std::string well = get_str(j, ctx, "well", "quartic");
  if (well != "quartic")
    throw ConfigError("run: only the quartic well is configurable");
  c.eps = get_num(j, ctx, "eps", c.eps);
  c.kappa = get_num(j, ctx, "kappa", c.kappa);
  c.metric = get_str(j, ctx, "metric", c.metric);
  c.x_min = get_num(j, ctx, "x_min", c.x_min);
  c.x_max = get_num(j, ctx, "x_max", c.x_max);
  c.T_final = get_num(j, ctx, "t_final", c.T_final);
  c.dx = get_num(j, ctx, "dx", c.dx);
  c.cfl = get_num(j, ctx, "cfl", c.cfl);
  c.cadence = std::size_t(get_num(j, ctx, "cadence", double(c.cadence)));
  if (j.contains("data")) {
    require_keys(j["data"], "run.data", {"r0", "rho"});
    c.data.r0 = get_num(j["data"], "run.data", "r0", c.data.r0);
    c.data.rho = get_num(j["data"], "run.data", "rho", c.data.rho);
  }
  resolve_dx(c);  // validate eagerly so bad configs exit 2, not 3
  return c;
}

inline ordered_json resolved_run_json(const RunConfig& c) {
  ordered_json j;
  j["eps"] = c.eps;
  j["kappa"] = c.kappa;
  j["metric"] = c.metric;
  j["well"] = c.well.name;
  j["x_min"] = c.x_min;
  j["x_max"] = c.x_max;
  j["t_final"] = c.T_final;
  j["dx"] = resolve_dx(c);
  j["cfl"] = c.cfl;
  j["cadence"] = double(c.cadence);
  j["data"] = ordered_json{{"r0", c.data.r0}, {"rho", c.data.rho}};
  return j;
}

inline ExperimentSpec parse_experiment(const ordered_json& j) {
  require_keys(j, "spec",
               {"kind", "run", "sweep_eps", "track", "chart", "profile",
                "decompose", "convergence"});
  ExperimentSpec s;
  s.kind = get_str(j, "spec", "kind", "");
  const bool known = s.kind == "run" || s.kind == "sweep" ||
                     s.kind == "chart-test" || s.kind == "profile" ||
                     s.kind == "decompose" || s.kind == "convergence";
  if (!known) throw ConfigError("spec: unknown kind '" + s.kind + "'");
  if (j.contains("run")) s.base = parse_run_config(j["run"]);

  if (j.contains("sweep_eps")) {
    if (!j["sweep_eps"].is_array())
      throw ConfigError("spec: 'sweep_eps' must be an array");
    for (const auto& v : j["sweep_eps"]) {
      if (!v.is_number()) throw ConfigError("sweep_eps: numbers only");
      s.sweep_eps.push_back(v.get<double>());
    }
    for (std::size_t i = 0; i < s.sweep_eps.size(); ++i) {
      if (!(s.sweep_eps[i] > 0.0 && s.sweep_eps[i] <= 1.0))
        throw ConfigError("sweep_eps: values must lie in (0, 1]");
      if (i && !(s.sweep_eps[i] < s.sweep_eps[i - 1]))
        throw ConfigError("sweep_eps: values must be strictly decreasing");
    }
  }
  if (s.kind == "sweep" && s.sweep_eps.size() < 2)
    throw ConfigError("sweep: need at least two sweep_eps values");

  if (j.contains("track")) {
    require_keys(j["track"], "track", {"window"});
    if (j["track"].contains("window")) {
      const auto& w = j["track"]["window"];
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() ||
          !w[1].is_number())
        throw ConfigError("track.window: expected [lo, hi]");
      s.track.window_lo = w[0].get<double>();
      s.track.window_hi = w[1].get<double>();
      if (!(s.track.window_lo < s.track.window_hi))
        throw ConfigError("track.window: lo must be below hi");
    }
  }

  if (j.contains("chart")) {
    const auto& c = j["chart"];
    require_keys(c, "chart",
                 {"metric", "kappa", "x_start", "tau_span", "t_chart", "rho",
                  "n_y0", "n_yn", "interior_x"});
    s.chart.metric = get_str(c, "chart", "metric", s.chart.metric);
    s.chart.kappa = get_num(c, "chart", "kappa", s.chart.kappa);
    s.chart.x_start = get_num(c, "chart", "x_start", s.chart.x_start);
    s.chart.tau_span = get_num(c, "chart", "tau_span", s.chart.tau_span);
    s.chart.T = get_num(c, "chart", "t_chart", s.chart.T);
    s.chart.rho = get_num(c, "chart", "rho", s.chart.rho);
    s.chart.n_y0 = std::size_t(get_num(c, "chart", "n_y0", double(s.chart.n_y0)));
    s.chart.n_yn = std::size_t(get_num(c, "chart", "n_yn", double(s.chart.n_yn)));
    s.chart.interior_x = get_num(c, "chart", "interior_x", s.chart.interior_x);
    if (!(s.chart.rho > 0.0) || !(s.chart.T > 0.0))
      throw ConfigError("chart: rho and t_chart must be positive");
  }

  if (j.contains("profile")) {
    const auto& p = j["profile"];
    require_keys(p, "profile", {"s_max", "ds"});
    s.profile.s_max = get_num(p, "profile", "s_max", s.profile.s_max);
    s.profile.ds = get_num(p, "profile", "ds", s.profile.ds);
    if (!(s.profile.ds > 0.0) || !(s.profile.s_max > s.profile.ds))
      throw ConfigError("profile: need 0 < ds < s_max");
  }

  if (j.contains("decompose")) {
    const auto& d = j["decompose"];
    require_keys(d, "decompose", {"coeffs", "eps"});
    if (!d.contains("coeffs") || !d["coeffs"].is_array())
      throw ConfigError("decompose: 'coeffs' array is required");
    for (const auto& v : d["coeffs"]) {
      if (!v.is_number()) throw ConfigError("decompose.coeffs: numbers only");
      s.decompose.coeffs.push_back(v.get<double>());
    }
    s.decompose.eps = get_num(d, "decompose", "eps", s.decompose.eps);
    if (!(s.decompose.eps > 0.0))
      throw ConfigError("decompose: eps must be positive");
  } else if (s.kind == "decompose") {
    throw ConfigError("decompose: a 'decompose' section is required");
  }

  if (j.contains("convergence")) {
    const auto& c = j["convergence"];
    require_keys(c, "convergence", {"levels", "tc", "xc", "rt", "rx"});
    s.convergence.levels =
        std::size_t(get_num(c, "convergence", "levels", 3.0));
    if (s.convergence.levels < 3)
      throw ConfigError("convergence: need at least 3 levels");
    s.convergence.tc = get_num(c, "convergence", "tc", s.convergence.tc);
    s.convergence.xc = get_num(c, "convergence", "xc", s.convergence.xc);
    s.convergence.Rt = get_num(c, "convergence", "rt", s.convergence.Rt);
    s.convergence.Rx = get_num(c, "convergence", "rx", s.convergence.Rx);
  }
  return s;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_experiment(j);
}

/// snapshot CSV (x, u, ut) plus a JSON sidecar with the frame metadata
inline void write_snapshot(const std::filesystem::path& dir,
                           const std::string& stem, const FieldState& s,
                           const RunConfig& c) {
  std::vector<std::vector<double>> rows(s.u.size());
  for (std::size_t i = 0; i < s.u.size(); ++i)
    rows[i] = {s.x0 + double(i) * s.dx, s.u[i], s.ut[i]};
  write_csv(dir / (stem + ".csv"), "x,u,ut", rows);
  ordered_json side;
  side["t"] = s.t;
  side["eps"] = c.eps;
  side["kappa"] = c.kappa;
  side["x0"] = s.x0;
  side["dx"] = s.dx;
  side["n"] = double(s.u.size());
  side["far_left"] = s.far_left;
  side["far_right"] = s.far_right;
  write_json(dir / (stem + ".json"), side);
}

}  // namespace frontlab

#pragma once

// Explicit finite-difference evolution of eps * box_h u + f0(u)/eps
// + kappa f1(u) = 0 in 1+1 dimensions, for the flat metric and for static
// diagonal metrics h = diag(-a(x)^2, b(x)^2).

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/chart.hpp"
#include "frontlab/common.hpp"
#include "frontlab/metric.hpp"
#include "frontlab/nonlinearity.hpp"

namespace frontlab {

struct FieldState {
  double t = 0.0;
  double x0 = 0.0;  // left endpoint
  double dx = 0.0;
  std::vector<double> u;
  std::vector<double> ut;
  double far_left = -1.0;
  double far_right = 1.0;

  UniformGrid grid() const { return UniformGrid{x0, dx, u.size()}; }
  double x_at(std::size_t i) const { return x0 + double(i) * dx; }
};

/// checks the structural invariants: equal lengths >= 16 and outermost four
/// cells pinned to the far-field constants
inline void validate_state(const FieldState& s, double tol = 1e-10) {
  if (s.u.size() != s.ut.size() || s.u.size() < 16)
    throw ConfigError("FieldState: arrays must have equal length >= 16");
  if (!(s.dx > 0.0)) throw ConfigError("FieldState: dx must be positive");
  const std::size_t n = s.u.size();
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::abs(s.u[i] - s.far_left) > tol ||
        std::abs(s.u[n - 1 - i] - s.far_right) > tol)
      throw DomainTooSmall("FieldState: outer cells deviate from far field");
  }
}

/// initial-data parameters: blended profile centered at r0 with blend
/// radius rho (exact +-1 beyond 2 rho / 3)
struct DataSpec {
  double r0 = 1.0;
  double rho = 0.45;
};

struct RunConfig {
  double eps = 0.1;
  DoubleWell well = quartic_well();
  double kappa = 0.0;
  std::function<double(double)> kappa_fn;  // spatial kappa(x); wins over kappa
  std::string metric = "minkowski";
  double x_min = 0.0;
  double x_max = 1.0;
  double T_final = 0.0;
  double dx = 0.0;  // 0 selects the default eps / 8
  double cfl = 0.9;
  DataSpec data;
  std::size_t cadence = 1;  // store every cadence-th step
  // testing hook: extra right-hand side added to u_tt (manufactured solutions)
  std::function<double(double, double)> forcing;

  double kappa_at(double x) const { return kappa_fn ? kappa_fn(x) : kappa; }
};

/// resolves the default spacing and checks the config invariants
inline double resolve_dx(const RunConfig& c) {
  if (!(c.eps > 0.0 && c.eps <= 1.0))
    throw ConfigError("RunConfig: eps must lie in (0, 1]");
  if (!(c.cfl > 0.0 && c.cfl < 1.0))
    throw ConfigError("RunConfig: cfl must lie in (0, 1)");
  if (!(c.x_max > c.x_min)) throw ConfigError("RunConfig: empty domain");
  if (!(c.T_final >= 0.0)) throw ConfigError("RunConfig: negative T_final");
  if (c.cadence == 0) throw ConfigError("RunConfig: cadence must be >= 1");
  const double dx = c.dx > 0.0 ? c.dx : c.eps / 8.0;
  if (dx > c.eps / 4.0 + 1e-15)
    throw ConfigError("RunConfig: dx exceeds the eps / 4 resolution floor");
  return dx;
}

namespace detail {

/// snaps the domain to a uniform grid with spacing as close to dx as
/// possible without exceeding it
inline UniformGrid solver_grid(const RunConfig& c) {
  const double dx = resolve_dx(c);
  const std::size_t n =
      std::size_t(std::ceil((c.x_max - c.x_min) / dx - 1e-12)) + 1;
  if (n < 16) throw DomainTooSmall("solver grid needs >= 16 cells");
  return UniformGrid{c.x_min, (c.x_max - c.x_min) / double(n - 1), n};
}

/// profile sampled far enough that the blend band never hits the tails
inline Profile data_profile(const RunConfig& c) {
  const double s_need = 2.0 * c.data.rho / (3.0 * c.eps) + 4.0;
  return make_profile(c.well, std::max(16.0, s_need), 0.005);
}

}  // namespace detail

/// flat well-prepared data: u = blended profile at x - r0, ut = 0
inline FieldState init_flat(const RunConfig& c) {
  const UniformGrid g = detail::solver_grid(c);
  const double r0 = c.data.r0, rho = c.data.rho;
  if (c.x_min > r0 - 2.0 * rho || c.x_max < r0 + 2.0 * rho)
    throw DomainTooSmall("init_flat: domain must contain [r0 - 2 rho, r0 + 2 rho]");
  const Profile p = detail::data_profile(c);
  const ScalarFn qb = blended_profile(p, c.eps, rho);
  FieldState s;
  s.t = 0.0;
  s.x0 = g.x0;
  s.dx = g.dx;
  s.u.resize(g.n);
  s.ut.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) s.u[i] = qb(g[i] - r0);
  s.far_left = -1.0;
  s.far_right = 1.0;
  validate_state(s);
  return s;
}

/// first-order jet (u0, u1) of the curved well-prepared data, as functions
/// of the spatial coordinate on the t = 0 slice; defined only where the
/// chart covers the slice (d_gamma throws outside)
struct CurvedJet {
  std::function<double(double)> dist;  // signed chart distance at (0, x)
  std::function<double(double)> u0;
  std::function<double(double)> u1;
};

/// u0 is the blended profile of the signed chart distance (so u0 = +1 on the
/// side the chart normal points toward, i.e. the gamma parametrization's
/// interior_point side), and u1 cancels
/// the chart's time drift so that d/dy0 (u o phi) = 0 on the initial slice:
/// (u1 o phi) d_y0 phi^0 = -(d_x u0 o phi) d_y0 phi^1
inline CurvedJet make_curved_jet(const RunConfig& c, const NormalChart& chart) {
  if (chart.gp.dim_n != 1)
    throw ConfigError("make_curved_jet: 1+1 charts only");
  const double rho = c.data.rho;
  const double band = 2.0 * rho / 3.0;
  const Profile p = detail::data_profile(c);
  const ScalarFn qb = blended_profile(p, c.eps, rho);
  CurvedJet jet;
  jet.dist = [&chart](double x) {
    Vec xv(2);
    xv << 0.0, x;
    return chart.d_gamma(xv);
  };
  auto dist = jet.dist;
  jet.u0 = [dist, qb](double x) { return qb(dist(x)); };
  auto u0 = jet.u0;
  jet.u1 = [&chart, dist, u0, band](double x) {
    const double d = dist(x);
    if (std::abs(d) >= band) return 0.0;
    const double hy = 1e-3;
    Vec y(2);
    y << 0.0, d;
    auto phi_c = [&chart, &y, hy](int comp, int k) {
      Vec yy = y;
      yy[0] += double(k) * hy;
      return chart.phi(yy)[comp];
    };
    auto d0 = [&phi_c, hy](int comp) {
      return (phi_c(comp, -2) - 8.0 * phi_c(comp, -1) + 8.0 * phi_c(comp, 1) -
              phi_c(comp, 2)) /
             (12.0 * hy);
    };
    const double dphi0 = d0(0), dphi1 = d0(1);
    if (std::abs(dphi0) < 1e-8)
      throw ChartCoverage("curved jet: degenerate time lapse d_y0 phi^0");
    const double hx = 1e-3;
    const double du0 = (u0(x - 2 * hx) - 8.0 * u0(x - hx) + 8.0 * u0(x + hx) -
                        u0(x + 2 * hx)) /
                       (12.0 * hx);
    return -du0 * dphi1 / dphi0;
  };
  return jet;
}

/// well-prepared data transported through a normal chart: the curved jet
/// sampled on the grid, extended by the constant sign of the chart distance
/// outside the chart image
inline FieldState init_curved(const RunConfig& c, const NormalChart& chart) {
  const UniformGrid g = detail::solver_grid(c);
  const double band = 2.0 * c.data.rho / 3.0;
  const CurvedJet jet = make_curved_jet(c, chart);

  // signed chart distance on the initial slice; NaN marks "outside chart"
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> dist(g.n, nan);
  for (std::size_t i = 0; i < g.n; ++i) {
    try {
      dist[i] = jet.dist(g[i]);
    } catch (const NumericalError&) {
    }
  }

  // continuation of sign_I outside the chart image: walk outward from the
  // covered region and require the blend band to be fully covered
  std::size_t first = g.n, last = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::isfinite(dist[i])) {
      if (first == g.n) first = i;
      last = i;
    }
  if (first == g.n)
    throw ChartCoverage("init_curved: chart misses the initial slice");
  for (std::size_t i = first; i <= last; ++i)
    if (!std::isfinite(dist[i]))
      throw ChartCoverage("init_curved: coverage gap inside the chart span");
  if (first > 0 && std::abs(dist[first]) < band)
    throw ChartCoverage("init_curved: blend band exits the chart (left)");
  if (last + 1 < g.n && std::abs(dist[last]) < band)
    throw ChartCoverage("init_curved: blend band exits the chart (right)");

  FieldState s;
  s.t = 0.0;
  s.x0 = g.x0;
  s.dx = g.dx;
  s.u.resize(g.n);
  s.ut.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (i < first)
      s.u[i] = sign0(dist[first]);
    else if (i > last)
      s.u[i] = sign0(dist[last]);
    else {
      s.u[i] = jet.u0(g[i]);
      if (std::abs(dist[i]) < band) s.ut[i] = jet.u1(g[i]);
    }
  }
  s.far_left = s.u.front();
  s.far_right = s.u.back();
  validate_state(s);
  return s;
}

// ---------------------------------------------------------------------------
// time stepping

/// precomputed coefficient tables for one run
struct Stepper {
  double eps = 0.1;
  DoubleWell well;
  double dx = 0.0;
  std::vector<double> kap;        // kappa at nodes
  std::vector<double> asq;        // a^2 at nodes
  std::vector<double> ratio;      // a/b at nodes
  std::vector<double> flux_half;  // a/b at half nodes i+1/2
  double max_speed = 1.0;         // max a/b (characteristic speed)
  std::function<double(double, double)> forcing;

  /// second-order conservative acceleration; interior nodes only
  void accel(const FieldState& s, std::vector<double>& out) const {
    const std::size_t n = s.u.size();
    out.assign(n, 0.0);
    const double inv_dx2 = 1.0 / (dx * dx);
    const double inv_e2 = 1.0 / (eps * eps);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double lap = ratio[i] *
                         (flux_half[i] * (s.u[i + 1] - s.u[i]) -
                          flux_half[i - 1] * (s.u[i] - s.u[i - 1])) *
                         inv_dx2;
      const double ui = s.u[i];
      double a = lap - asq[i] * (inv_e2 * well.f0(ui) +
                                 (kap[i] / eps) * well.f1(ui));
      if (forcing) a += forcing(s.t, s.x_at(i));
      out[i] = a;
    }
  }
};

inline Stepper make_stepper(const RunConfig& c, const FieldState& s) {
  Stepper st;
  st.eps = c.eps;
  st.well = c.well;
  st.dx = s.dx;
  st.forcing = c.forcing;
  const LorentzMetric m = parse_metric(c.metric, 1);
  const std::size_t n = s.u.size();
  st.kap.resize(n);
  st.asq.resize(n);
  st.ratio.resize(n);
  st.flux_half.assign(n, 0.0);
  auto ab = [&m](double x) {
    Vec xv(2);
    xv << 0.0, x;
    const Mat h = m.h(xv);
    if (std::abs(h(0, 1)) > 1e-12)
      throw ConfigError("solver requires a diagonal metric");
    return std::pair<double, double>{std::sqrt(-h(0, 0)), std::sqrt(h(1, 1))};
  };
  st.max_speed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = s.x_at(i);
    st.kap[i] = c.kappa_at(x);
    const auto [a, b] = ab(x);
    st.asq[i] = a * a;
    st.ratio[i] = a / b;
    st.max_speed = std::max(st.max_speed, a / b);
    if (i + 1 < n) {
      const auto [ah, bh] = ab(x + 0.5 * s.dx);
      st.flux_half[i] = ah / bh;
    }
  }
  return st;
}

/// one velocity-Verlet step (algebraically the three-level leapfrog);
/// boundary cells stay clamped at the far-field constants
inline void step(FieldState& s, const Stepper& st, double dt,
                 std::vector<double>& a0, std::vector<double>& a1) {
  if (!(dt > 0.0) || dt > st.dx / st.max_speed + 1e-15)
    throw CFLViolation("step: dt exceeds dx / max characteristic speed");
  const std::size_t n = s.u.size();
  st.accel(s, a0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    s.u[i] += dt * s.ut[i] + 0.5 * dt * dt * a0[i];
  s.t += dt;
  st.accel(s, a1);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    s.ut[i] += 0.5 * dt * (a0[i] + a1[i]);
    if (!std::isfinite(s.u[i]) || !std::isfinite(s.ut[i]))
      throw NaNDetected("step: non-finite field values");
  }
}

inline void step(FieldState& s, const Stepper& st, double dt) {
  std::vector<double> a0, a1;
  step(s, st, dt, a0, a1);
}

struct Trajectory {
  double dt = 0.0;
  std::size_t cadence = 1;
  std::vector<FieldState> frames;  // every cadence-th step, plus the final one

  const FieldState& front() const { return frames.front(); }
  const FieldState& back() const { return frames.back(); }
};

/// evolves a prepared state to T_final, storing frames at the cadence
inline Trajectory run_from(const RunConfig& c, FieldState state) {
  resolve_dx(c);
  const Stepper st = make_stepper(c, state);
  Trajectory traj;
  traj.cadence = c.cadence;
  if (c.T_final <= 0.0) {
    traj.frames.push_back(std::move(state));
    return traj;
  }
  const double dt_target = c.cfl * state.dx / st.max_speed;
  const long nsteps = std::lround(std::ceil(c.T_final / dt_target - 1e-12));
  const double dt = c.T_final / double(nsteps);
  traj.dt = dt;
  traj.frames.push_back(state);
  std::vector<double> a0, a1;
  for (long k = 1; k <= nsteps; ++k) {
    step(state, st, dt, a0, a1);
    state.t = double(k) * dt;  // avoid accumulated roundoff in t
    if (k % long(c.cadence) == 0 || k == nsteps) traj.frames.push_back(state);
  }
  return traj;
}

/// flat-data entry point
inline Trajectory run(const RunConfig& c) { return run_from(c, init_flat(c)); }

}  // namespace frontlab

#pragma once

// Double-well potentials, the f0/f1 decomposition of a general double-well
// nonlinearity, traveling-wave profiles and their blended far-field versions.

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <utility>

#include "frontlab/common.hpp"

namespace frontlab {

using ScalarFn = std::function<double(double)>;

/// Potential triple (F, f0, f1) with the interface energy c0 = int_{-1}^{1} f1
/// and, for decomposed wells, the extracted curvature parameter.
struct DoubleWell {
  std::string name;
  ScalarFn F;
  ScalarFn f0;  // = F'
  ScalarFn f1;  // = sqrt(2F) on [-1,1], -sqrt(2F) outside
  double c0 = 0.0;
  std::optional<double> kappa_builtin;
};

/// F(u) = (1-u^2)^2 / 2, the quartic well of the model equation.
/// The polynomial evaluation order makes f0, f1 exact zeros at u = +-1.
inline DoubleWell quartic_well() {
  DoubleWell w;
  w.name = "quartic";
  w.F = [](double u) {
    const double p = 1.0 - u * u;
    return 0.5 * p * p;
  };
  w.f0 = [](double u) { return 2.0 * u * (u * u - 1.0); };
  w.f1 = [](double u) { return 1.0 - u * u; };
  w.c0 = 4.0 / 3.0;
  return w;
}

/// Q(s) = int_0^s f1, so Q(1) - Q(-1) = c0.
inline double q_antiderivative(const DoubleWell& well, double s) {
  return integrate(well.f1, 0.0, s, 1e-13);
}

namespace detail {

// Integrate F' = f_eps - ek * sqrt(2F) on (-1, 1) (sign flips outside),
// starting from the quadratic local model at a well.  `u_from` must be a well
// (+-1); integration runs to u_to.  Returns samples on the fixed step grid.
struct WellOde {
  const ScalarFn& f_eps;
  double ek;  // eps * kappa

  double rhs(double u, double F) const {
    const double inside = (u > -1.0 && u < 1.0) ? 1.0 : -1.0;
    return f_eps(u) - ek * inside * std::sqrt(std::max(2.0 * F, 0.0));
  }
};

// one RK4 step for the scalar well ODE
inline double well_rk4(const WellOde& ode, double u, double F, double du) {
  const double k1 = ode.rhs(u, F);
  const double k2 = ode.rhs(u + du / 2, F + du / 2 * k1);
  const double k3 = ode.rhs(u + du / 2, F + du / 2 * k2);
  const double k4 = ode.rhs(u + du, F + du * k3);
  return F + du / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Local quadratic well coefficients.  Near u = -+1 an admissible F behaves
// like (s^2/2)(u -+ 1)^2 where s solves s^2 +- ek*s = f_eps'(-+1); the sign
// flip of f1 across the well makes the same s valid on both sides, so F is
// C^2 there.
inline double well_slope_m1(double fp_m1, double ek) {
  return 0.5 * (-ek + std::sqrt(ek * ek + 4.0 * fp_m1));
}
inline double well_slope_p1(double fp_p1, double ek) {
  return 0.5 * (ek + std::sqrt(ek * ek + 4.0 * fp_p1));
}

// Shooting objective: integrate from u=-1 toward u=1 and compare F near u=1
// against the local quadratic model that an admissible solution must match.
// Monotone decreasing in ek.  delta is the end-game offset.
inline double shoot_objective(const ScalarFn& f_eps, double ek, double fp_m1,
                              double fp_p1, double du, double delta) {
  WellOde ode{f_eps, ek};
  // seed from the quadratic local model F ~ (s^2/2)(u+1)^2
  const double seed_F = 1e-10;
  double u = -1.0 + std::sqrt(2.0 * seed_F) / well_slope_m1(fp_m1, ek);
  double F = seed_F;
  const double u_end = 1.0 - delta;
  const long nsteps = std::lround((u_end - u) / du);
  const double step = (u_end - u) / double(nsteps);
  for (long i = 0; i < nsteps; ++i) {
    F = well_rk4(ode, u, F, step);
    u += step;
    if (F <= 0.0) {
      // overshoot in kappa: F hit zero early; report how far short we fell
      return -(u_end - u) - std::abs(F) - 1e-12;
    }
  }
  const double s = well_slope_p1(fp_p1, ek);
  return F - 0.5 * s * s * delta * delta;
}

}  // namespace detail

/// Recovers (F, kappa) from a general double-well derivative f_eps via the
/// shooting construction: f_eps = F' + eps*kappa*sqrt(2F)*sign_(-1,1).
/// Reports every admissible bracket and refuses to guess if more than one
/// survives.
inline std::pair<DoubleWell, double> decompose(const ScalarFn& f_eps,
                                               double eps) {
  if (!(eps > 0.0)) throw ConfigError("decompose: eps must be positive");
  // precondition checks: wells at +-1 with positive slope, one interior root
  const double h = 1e-6;
  const double fp_m1 = fd_deriv(f_eps, -1.0, h);
  const double fp_p1 = fd_deriv(f_eps, 1.0, h);
  if (std::abs(f_eps(-1.0)) > 1e-8 || std::abs(f_eps(1.0)) > 1e-8)
    throw NotDoubleWell("decompose: f_eps does not vanish at +-1");
  if (fp_m1 <= 0.0 || fp_p1 <= 0.0)
    throw NotDoubleWell("decompose: f_eps'(+-1) must be positive");
  {
    int crossings = 0;
    double prev = f_eps(-1.0 + 1e-3);
    for (int i = 1; i <= 400; ++i) {
      const double u = -1.0 + 1e-3 + (2.0 - 2e-3) * i / 400.0;
      const double cur = f_eps(u);
      if (prev < 0 && cur >= 0) ++crossings;
      if (prev > 0 && cur <= 0) ++crossings;
      prev = cur;
    }
    if (crossings != 1)
      throw NotDoubleWell("decompose: expected exactly one interior root");
  }

  const double du = 2.5e-4;
  const double delta = 1e-3;
  auto G = [&](double ek) {
    return detail::shoot_objective(f_eps, ek, fp_m1, fp_p1, du, delta);
  };

  // initial bracket from the kappa=0 integral of f_eps
  double f_max = 0.0;
  double F0_peak = 0.0, F0_acc = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double u = -1.0 + 2.0 * (i + 0.5) / 2000.0;
    f_max = std::max(f_max, std::abs(f_eps(u)));
    F0_acc += f_eps(u) * (2.0 / 2000.0);
    F0_peak = std::max(F0_peak, F0_acc);
  }
  if (F0_peak <= 0.0)
    throw NotDoubleWell("decompose: integral of f_eps has no interior peak");
  double K = 2.0 * f_max / std::sqrt(2.0 * F0_peak);
  int widen = 0;
  while (!(G(-K) > 0.0 && G(K) < 0.0)) {
    if (++widen > 5)
      throw ShootingFailed("decompose: no sign change in kappa bracket");
    K *= 2.0;
  }

  // scan for multiple admissible brackets (the uniqueness argument in the
  // source construction is only sketched, so we check rather than assume)
  {
    int sign_changes = 0;
    double prev = G(-K);
    for (int i = 1; i <= 40; ++i) {
      const double cur = G(-K + 2.0 * K * i / 40.0);
      if (prev > 0 && cur < 0) ++sign_changes;
      if (prev < 0 && cur > 0) ++sign_changes;
      prev = cur;
    }
    if (sign_changes > 1)
      throw ShootingFailed("decompose: multiple admissible kappa brackets");
  }

  double lo = -K, hi = K;
  for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(1.0, K); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (G(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double ek = 0.5 * (lo + hi);

  // rebuild F on a dense grid over [-2, 2], integrating outward from the wells
  const UniformGrid grid = make_grid(-2.0, 2.0, 8001);
  std::vector<double> Fv(grid.n, 0.0);
  detail::WellOde ode{f_eps, ek};
  auto march = [&](double u_start, double F_start, long i_start, long i_end,
                   long stride) {
    double u = u_start, F = F_start;
    for (long i = i_start; i != i_end + stride; i += stride) {
      const double u_target = grid[std::size_t(i)];
      const int sub = 4;
      const double step = (u_target - u) / sub;
      for (int k = 0; k < sub; ++k) {
        F = detail::well_rk4(ode, u, F, step);
        u += step;
      }
      Fv[std::size_t(i)] = std::max(F, 0.0);
      F = Fv[std::size_t(i)];
    }
  };
  const double seed_F = 1e-10;
  const double sm = detail::well_slope_m1(fp_m1, ek);
  const double sp = detail::well_slope_p1(fp_p1, ek);
  const long i_m1 = std::lround((-1.0 - grid.x0) / grid.dx);
  const long i_p1 = std::lround((1.0 - grid.x0) / grid.dx);
  // interior: -1 -> 1
  march(-1.0 + std::sqrt(2.0 * seed_F) / sm, seed_F, i_m1 + 1, i_p1 - 1, 1);
  // exterior right: 1 -> 2
  march(1.0 + std::sqrt(2.0 * seed_F) / sp, seed_F, i_p1 + 1,
        long(grid.n) - 1, 1);
  // exterior left: -1 -> -2
  march(-1.0 - std::sqrt(2.0 * seed_F) / sm, seed_F, i_m1 - 1, 0, -1);
  Fv[std::size_t(i_m1)] = 0.0;
  Fv[std::size_t(i_p1)] = 0.0;

  std::vector<double> dFv(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double u = grid[i];
    const double inside = (u > -1.0 && u < 1.0) ? 1.0 : -1.0;
    dFv[i] = f_eps(u) - ek * inside * std::sqrt(std::max(2.0 * Fv[i], 0.0));
  }

  // near the wells the quadratic local models are more accurate than samples
  const double patch = 1e-3;
  auto F_fn = [grid, Fv, dFv, sm, sp, patch](double u) {
    if (std::abs(u + 1.0) <= patch)
      return 0.5 * sm * sm * (u + 1.0) * (u + 1.0);
    if (std::abs(u - 1.0) <= patch)
      return 0.5 * sp * sp * (u - 1.0) * (u - 1.0);
    if (u < grid.x0 || u > grid.back())
      throw NumericalError("decomposed F evaluated outside [-2, 2]");
    return std::max(hermite(grid, Fv, dFv, u), 0.0);
  };

  DoubleWell w;
  w.name = "decomposed";
  w.F = F_fn;
  w.f1 = [F_fn](double u) {
    const double inside = (u > -1.0 && u < 1.0) ? 1.0 : -1.0;
    return inside * std::sqrt(std::max(2.0 * F_fn(u), 0.0));
  };
  const double ek_copy = ek;
  w.f0 = [f_eps, ek_copy, f1 = w.f1](double u) {
    return f_eps(u) - ek_copy * f1(u);
  };
  w.c0 = integrate(w.f1, -1.0, 1.0, 1e-13);
  w.kappa_builtin = ek / eps;
  return {w, ek / eps};
}

/// Heteroclinic profile q with q' = f1(q), q(0) = 0, sampled on
/// [-s_max, s_max]; evaluates by Hermite interpolation and saturates to
/// sign(s) outside the sampled range.
struct Profile {
  DoubleWell well;
  UniformGrid grid;
  std::vector<double> q_vals;
  std::vector<double> q_derivs;
  double tail_c = 0.0;  // |q - sign| <= tail_C * exp(-tail_c |s|)
  double tail_C = 0.0;

  double operator()(double s) const {
    if (s <= grid.x0) return -1.0 + (q_vals.front() + 1.0) *
                                        std::exp(tail_c * (s - grid.x0));
    if (s >= grid.back())
      return 1.0 - (1.0 - q_vals.back()) * std::exp(-tail_c * (s - grid.back()));
    return hermite(grid, q_vals, q_derivs, s);
  }
  double deriv(double s) const {
    return well.f1((*this)(s));
  }
};

inline Profile make_profile(const DoubleWell& well, double s_max, double ds) {
  if (!(s_max > 0.0) || !(ds > 0.0))
    throw ConfigError("make_profile: s_max and ds must be positive");
  Profile p;
  p.well = well;
  const std::size_t half = std::size_t(std::ceil(s_max / ds));
  p.grid = UniformGrid{-double(half) * ds, ds, 2 * half + 1};
  p.q_vals.assign(p.grid.n, 0.0);

  auto rhs = [&](double, const Vec& y) {
    Vec d(1);
    d[0] = well.f1(y[0]);
    return d;
  };
  OdeOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  opt.h_max = ds;
  // outward from s = 0 in both directions, landing on grid points
  Vec y(1);
  double t = 0.0;
  y[0] = 0.0;
  p.q_vals[half] = 0.0;
  for (std::size_t i = half + 1; i < p.grid.n; ++i) {
    rk45_advance(rhs, t, y, p.grid[i], opt);
    p.q_vals[i] = std::min(y[0], 1.0);
  }
  t = 0.0;
  y[0] = 0.0;
  for (long i = long(half) - 1; i >= 0; --i) {
    rk45_advance(rhs, t, y, p.grid[std::size_t(i)], opt);
    p.q_vals[std::size_t(i)] = std::max(y[0], -1.0);
  }
  p.q_derivs.resize(p.grid.n);
  for (std::size_t i = 0; i < p.grid.n; ++i)
    p.q_derivs[i] = well.f1(p.q_vals[i]);

  // exponential tail fit over the outer third of the range
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < p.grid.n; ++i) {
    const double s = p.grid[i];
    if (std::abs(s) < 2.0 * s_max / 3.0) continue;
    const double r = std::abs(p.q_vals[i] - sign0(s));
    if (r > 1e-14) {
      xs.push_back(std::abs(s));
      ys.push_back(std::log(r));
    }
  }
  if (xs.size() >= 2) {
    auto [a, b] = linfit(xs, ys);
    p.tail_c = -b;
    p.tail_C = std::exp(a);
  } else {
    p.tail_c = 1.0;
    p.tail_C = 1.0;
  }
  return p;
}

/// blended front profile: cutoff blend of the stretched profile with
/// sign(s); exactly sign(s) for |s| >= 2 rho / 3.
inline ScalarFn blended_profile(const Profile& profile, double eps,
                                double rho) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("blended_profile: eps");
  if (!(rho > 0.0)) throw ConfigError("blended_profile: rho");
  return [profile, eps, rho](double s) {
    const double chi = cutoff_chi(s, rho);
    if (chi == 0.0) return sign0(s);
    return chi * profile(s / eps) + (1.0 - chi) * sign0(s);
  };
}

/// CSV export: (s, q, F(q), f1(q)) with a metadata header line.
inline void export_profile_csv(std::ostream& os, const Profile& p, double eps,
                               double kappa) {
  os << "# well=" << p.well.name << " eps=" << eps << " c0=" << p.well.c0
     << " kappa=" << kappa << "\n";
  os << "s,q,F,f1\n";
  char buf[128];
  for (std::size_t i = 0; i < p.grid.n; ++i) {
    const double s = p.grid[i], q = p.q_vals[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s, q,
                  p.well.F(q), p.well.f1(q));
    os << buf;
  }
}

}  // namespace frontlab

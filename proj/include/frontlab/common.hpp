#pragma once

// Shared numerical utilities: error types, smooth cutoffs, finite-difference
// stencils, interpolation on uniform grids, quadrature, and an embedded
// Runge-Kutta integrator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frontlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// error types

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define FRONTLAB_ERROR(Name)                  \
  struct Name : NumericalError {              \
    using NumericalError::NumericalError;    \
  }

FRONTLAB_ERROR(IntegrationFailed);
FRONTLAB_ERROR(ShootingFailed);
FRONTLAB_ERROR(NotDoubleWell);
FRONTLAB_ERROR(SingularMetric);
FRONTLAB_ERROR(LeftDomain);
FRONTLAB_ERROR(OutsideWedge);
FRONTLAB_ERROR(GaugeODEFailed);
FRONTLAB_ERROR(DegenerateTangent);
FRONTLAB_ERROR(CausticDetected);
FRONTLAB_ERROR(RootFindFailed);
FRONTLAB_ERROR(SignatureViolation);
FRONTLAB_ERROR(NotPositiveDefinite);
FRONTLAB_ERROR(OutsideChart);
FRONTLAB_ERROR(DomainTooSmall);
FRONTLAB_ERROR(ChartCoverage);
FRONTLAB_ERROR(CFLViolation);
FRONTLAB_ERROR(NaNDetected);
FRONTLAB_ERROR(MultipleCrossings);
FRONTLAB_ERROR(NoCrossing);
FRONTLAB_ERROR(FitDiverged);
FRONTLAB_ERROR(WindowCollapsed);
FRONTLAB_ERROR(InsufficientLevels);
FRONTLAB_ERROR(TruncationWarning);
FRONTLAB_ERROR(ConfigError);

#undef FRONTLAB_ERROR

// ---------------------------------------------------------------------------
// smooth cutoff: chi_rho = 1 on |s| <= rho/3, 0 on |s| >= 2 rho/3,
// built from the standard exp(-1/x) mollifier so outputs are reproducible.

inline double bump_ramp(double t) {
  // smooth 0 -> 1 transition on [0, 1]
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double cutoff_chi(double s, double rho) {
  const double t = (std::abs(s) - rho / 3.0) / (rho / 3.0);
  return 1.0 - bump_ramp(t);
}

inline double sign0(double s) { return s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------
// uniform-grid helpers

struct UniformGrid {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t n = 0;

  double operator[](std::size_t i) const { return x0 + dx * double(i); }
  double back() const { return (*this)[n - 1]; }
  bool contains(double x) const {
    return x >= x0 - 1e-12 * dx && x <= back() + 1e-12 * dx;
  }
  std::vector<double> values() const {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (*this)[i];
    return v;
  }
};

inline UniformGrid make_grid(double a, double b, std::size_t n) {
  return UniformGrid{a, (b - a) / double(n - 1), n};
}

// 4-point (cubic) Lagrange interpolation on a uniform grid; clamped at edges.
template <class Getter>
double lagrange4(const UniformGrid& g, Getter val, double x) {
  if (g.n < 4) throw NumericalError("lagrange4: grid too small");
  double s = (x - g.x0) / g.dx;
  long j = long(std::floor(s)) - 1;
  if (j < 0) j = 0;
  if (j > long(g.n) - 4) j = long(g.n) - 4;
  const double t = s - double(j);  // in [1,2] away from edges
  double w[4];
  w[0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  w[1] = t * (t - 2.0) * (t - 3.0) / 2.0;
  w[2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
  w[3] = t * (t - 1.0) * (t - 2.0) / 6.0;
  double out = 0.0;
  for (int k = 0; k < 4; ++k) out += w[k] * val(std::size_t(j + k));
  return out;
}

inline double lagrange4(const UniformGrid& g, const std::vector<double>& v,
                        double x) {
  return lagrange4(g, [&](std::size_t i) { return v[i]; }, x);
}

// periodic variant: the grid's n nodes tile a period of n*dx
template <class Getter>
double lagrange4_periodic(const UniformGrid& g, Getter val, double x) {
  if (g.n < 4) throw NumericalError("lagrange4_periodic: grid too small");
  const double s = (x - g.x0) / g.dx;
  const long j0 = long(std::floor(s)) - 1;
  const double t = s - double(j0);
  double w[4];
  w[0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  w[1] = t * (t - 2.0) * (t - 3.0) / 2.0;
  w[2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
  w[3] = t * (t - 1.0) * (t - 2.0) / 6.0;
  const long n = long(g.n);
  double out = 0.0;
  for (long k = 0; k < 4; ++k) {
    long j = (j0 + k) % n;
    if (j < 0) j += n;
    out += w[k] * val(std::size_t(j));
  }
  return out;
}

// cubic Hermite interpolation with known derivatives on a uniform grid
inline double hermite(const UniformGrid& g, const std::vector<double>& v,
                      const std::vector<double>& dv, double x) {
  double s = (x - g.x0) / g.dx;
  long j = long(std::floor(s));
  if (j < 0) j = 0;
  if (j > long(g.n) - 2) j = long(g.n) - 2;
  const double t = s - double(j);
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * v[j] + h10 * g.dx * dv[j] + h01 * v[j + 1] +
         h11 * g.dx * dv[j + 1];
}

// 4th-order first derivative of a sampled array (5-point central stencil,
// one-sided at the edges).
inline std::vector<double> deriv4(const std::vector<double>& v, double dx) {
  const std::size_t n = v.size();
  std::vector<double> d(n);
  if (n < 5) throw NumericalError("deriv4: need >= 5 samples");
  for (std::size_t i = 2; i + 2 < n; ++i)
    d[i] = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * dx);
  auto fwd = [&](std::size_t i) {
    return (-25 * v[i] + 48 * v[i + 1] - 36 * v[i + 2] + 16 * v[i + 3] -
            3 * v[i + 4]) /
           (12 * dx);
  };
  auto bwd = [&](std::size_t i) {
    return (25 * v[i] - 48 * v[i - 1] + 36 * v[i - 2] - 16 * v[i - 3] +
            3 * v[i - 4]) /
           (12 * dx);
  };
  d[0] = fwd(0);
  d[1] = fwd(1);
  d[n - 2] = bwd(n - 2);
  d[n - 1] = bwd(n - 1);
  return d;
}

// periodic 4th-order first derivative (5-point central with wraparound)
inline std::vector<double> deriv4_periodic(const std::vector<double>& v,
                                           double dx) {
  const long n = long(v.size());
  if (n < 5) throw NumericalError("deriv4_periodic: need >= 5 samples");
  std::vector<double> d(v.size());
  auto at = [&](long i) { return v[std::size_t(((i % n) + n) % n)]; };
  for (long i = 0; i < n; ++i)
    d[std::size_t(i)] =
        (at(i - 2) - 8 * at(i - 1) + 8 * at(i + 1) - at(i + 2)) / (12 * dx);
  return d;
}

// 4th-order derivative of a scalar function by 5-point central differences
template <class F>
double fd_deriv(F f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) /
         (12 * h);
}

// trapezoid rule over a sampled array
inline double trapezoid(const std::vector<double>& f, double dx) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * dx;
}

// adaptive Simpson quadrature
namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
}

// ---------------------------------------------------------------------------
// ODE integrators

// classic RK4 with fixed step, advancing y in place from t to t_end
template <class F>
void rk4_advance(F f, double& t, Vec& y, double t_end, double h) {
  const double span = t_end - t;
  if (span == 0.0) return;
  const long nsteps = std::max(1L, long(std::ceil(std::abs(span) / h)));
  const double dt = span / double(nsteps);
  for (long i = 0; i < nsteps; ++i) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + dt / 2, Vec(y + dt / 2 * k1));
    const Vec k3 = f(t + dt / 2, Vec(y + dt / 2 * k2));
    const Vec k4 = f(t + dt, Vec(y + dt * k3));
    y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += dt;
  }
  t = t_end;
}

struct OdeOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-11;
  double h_init = 1e-3;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-14;
  long max_steps = 5'000'000;
};

// Dormand-Prince 5(4) embedded pair; advances y in place to t_end.
// Throws IntegrationFailed when the step size collapses.
template <class F>
void rk45_advance(F f, double& t, Vec& y, double t_end,
                  const OdeOptions& opt = {}) {
  static const double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
  static const double A[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
       -5103.0 / 18656},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double b5[7] = {35.0 / 384,     0, 500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84,       0};
  static const double b4[7] = {5179.0 / 57600,  0,           7571.0 / 16695,
                               393.0 / 640,     -92097.0 / 339200,
                               187.0 / 2100,    1.0 / 40};

  const double dir = (t_end >= t) ? 1.0 : -1.0;
  double h = dir * std::min(opt.h_init, opt.h_max);
  Vec k[7];
  long steps = 0;
  while (dir * (t_end - t) > 0) {
    if (++steps > opt.max_steps)
      throw IntegrationFailed("rk45: step budget exhausted");
    if (dir * (t + h) > dir * t_end) h = t_end - t;
    k[0] = f(t, y);
    for (int i = 1; i < 7; ++i) {
      Vec yi = y;
      for (int j = 0; j < i; ++j) yi += h * A[i][j] * k[j];
      k[i] = f(t + c[i] * h, yi);
    }
    Vec y5 = y, err = Vec::Zero(y.size());
    for (int i = 0; i < 7; ++i) {
      y5 += h * b5[i] * k[i];
      err += h * (b5[i] - b4[i]) * k[i];
    }
    double scale = opt.abs_tol + opt.rel_tol * std::max(y.cwiseAbs().maxCoeff(),
                                                        y5.cwiseAbs().maxCoeff());
    double e = err.cwiseAbs().maxCoeff() / scale;
    if (!std::isfinite(e)) throw IntegrationFailed("rk45: non-finite state");
    if (e <= 1.0) {
      t += h;
      y = y5;
    }
    double fac = 0.9 * std::pow(std::max(e, 1e-10), -0.2);
    fac = std::min(5.0, std::max(0.2, fac));
    h *= fac;
    if (std::abs(h) > opt.h_max) h = dir * opt.h_max;
    if (std::abs(h) < opt.h_min) {
      // a sub-h_min remainder is roundoff from the t_end clamp, not stiffness
      if (dir * (t_end - t) <= opt.h_min) {
        t = t_end;
        break;
      }
      throw IntegrationFailed("rk45: step size underflow");
    }
  }
}

// linear least-squares fit y ~ a + b x; returns {a, b}
inline std::pair<double, double> linfit(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) throw NumericalError("linfit: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double d = double(n) * sxx - sx * sx;
  const double b = (double(n) * sxy - sx * sy) / d;
  const double a = (sy - b * sx) / double(n);
  return {a, b};
}

// golden-section minimization of a unimodal function on [a, b]
template <class F>
double golden_min(F f, double a, double b, double tol = 1e-10) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace frontlab

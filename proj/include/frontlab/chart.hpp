#pragma once

// Gauge-fixed parametrizations of timelike hypersurfaces, almost-normal
// coordinates around them, mean curvature, the eikonal distance, the
// weighted energy-tensor constants, and prescribed-curvature curves.

#include <algorithm>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "frontlab/metric.hpp"

namespace frontlab {

// ---------------------------------------------------------------------------
// prescribed-curvature timelike curves in 1+1

/// proper-time sampled solution of the frame system  dx/dtau = T,
/// nabla_T T = kappa * nu,  h(T, T) = -1
struct McCurve {
  UniformGrid tau_grid;
  std::vector<Vec> x;
  std::vector<Vec> T;
};

/// Unit spacelike normal to a unit timelike tangent in 1+1, oriented so that
/// det[T nu] > 0.  With this convention kappa > 0 in mc_curve bends the
/// curve toward positive nu; the Minkowski curve started at (0, r0) with
/// T = (1, 0) and kappa = 1/r0 is the right branch of x^2 - t^2 = r0^2.
inline Vec spacelike_normal(const LorentzMetric& m, const Vec& x,
                            const Vec& T) {
  const Mat B = m.h(x);
  Vec perp(2);
  perp << -T[1], T[0];
  Vec dir = B.inverse() * perp;
  const double nn = dir.dot(B * dir);
  if (!(nn > 0.0))
    throw DegenerateTangent("spacelike_normal: complement not spacelike");
  dir /= std::sqrt(nn);
  if (T[0] * dir[1] - T[1] * dir[0] < 0.0) dir = -dir;
  return dir;
}

inline McCurve mc_curve(const LorentzMetric& m,
                        const std::function<double(const Vec&)>& kappa,
                        const Vec& x0, const Vec& T0, double tau_span,
                        double dtau = 0.01) {
  if (m.dim_n != 1) throw ConfigError("mc_curve: 1+1 metrics only");
  const double norm0 = T0.dot(m.h(x0) * T0);
  if (std::abs(norm0 + 1.0) > 1e-8)
    throw ConfigError("mc_curve: start tangent must satisfy h(T,T) = -1");
  auto rhs = [&](double, const Vec& y) {
    const Vec x = y.head(2), T = y.tail(2);
    const auto Gamma = christoffel(m, x);
    const Vec nu = spacelike_normal(m, x, T);
    Vec out(4);
    out.head(2) = T;
    for (int a = 0; a < 2; ++a)
      out[2 + a] = -T.dot(Gamma[std::size_t(a)] * T) + kappa(x) * nu[a];
    return out;
  };
  const std::size_t half = std::size_t(std::ceil(tau_span / dtau));
  McCurve c;
  c.tau_grid = UniformGrid{-double(half) * dtau, dtau, 2 * half + 1};
  c.x.assign(c.tau_grid.n, Vec());
  c.T.assign(c.tau_grid.n, Vec());
  OdeOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  Vec y(4);
  y.head(2) = x0;
  y.tail(2) = T0;
  double tau = 0.0;
  c.x[half] = x0;
  c.T[half] = T0;
  for (std::size_t i = half + 1; i < c.tau_grid.n; ++i) {
    rk45_advance(rhs, tau, y, c.tau_grid[i], opt);
    c.x[i] = y.head(2);
    c.T[i] = y.tail(2);
  }
  y.head(2) = x0;
  y.tail(2) = T0;
  tau = 0.0;
  for (long i = long(half) - 1; i >= 0; --i) {
    rk45_advance(rhs, tau, y, c.tau_grid[std::size_t(i)], opt);
    c.x[std::size_t(i)] = y.head(2);
    c.T[std::size_t(i)] = y.tail(2);
  }
  return c;
}

// ---------------------------------------------------------------------------
// hypersurfaces given as graphs over coordinate time

/// Spatial position psi(t, alpha) of the surface point at coordinate time t.
/// For n = 1 the parameter alpha is ignored (M is a point); for n = 2 alpha
/// is the angle on M = S^1.
struct Hypersurface {
  int dim_n = 1;
  std::function<Vec(double, double)> psi;
};

inline Hypersurface static_line(double x_pos) {
  Hypersurface s;
  s.dim_n = 1;
  s.psi = [x_pos](double, double) {
    Vec p(1);
    p << x_pos;
    return p;
  };
  return s;
}

inline Hypersurface static_circle(double R) {
  Hypersurface s;
  s.dim_n = 2;
  s.psi = [R](double, double a) {
    Vec p(2);
    p << R * std::cos(a), R * std::sin(a);
    return p;
  };
  return s;
}

/// Reparametrizes an mc_curve by coordinate time (x^0 is strictly monotone
/// along a timelike curve), yielding the n = 1 hypersurface x = p(t).
inline Hypersurface surface_from_curve(const McCurve& c) {
  // Hermite data: x^0(tau), x^1(tau) with derivatives T
  auto x0v = std::make_shared<std::vector<double>>();
  auto x1v = std::make_shared<std::vector<double>>();
  auto d0v = std::make_shared<std::vector<double>>();
  auto d1v = std::make_shared<std::vector<double>>();
  for (std::size_t i = 0; i < c.tau_grid.n; ++i) {
    x0v->push_back(c.x[i][0]);
    x1v->push_back(c.x[i][1]);
    d0v->push_back(c.T[i][0]);
    d1v->push_back(c.T[i][1]);
  }
  const UniformGrid g = c.tau_grid;
  Hypersurface s;
  s.dim_n = 1;
  s.psi = [g, x0v, x1v, d0v, d1v](double t, double) {
    if (t < x0v->front() || t > x0v->back())
      throw LeftDomain("surface_from_curve: time outside curve span");
    // Newton in tau on x^0(tau) = t, seeded by linear search on samples
    auto lo = std::lower_bound(x0v->begin(), x0v->end(), t);
    std::size_t i = std::size_t(std::max<long>(lo - x0v->begin() - 1, 0));
    double tau = g[i];
    for (int it = 0; it < 60; ++it) {
      const double f = hermite(g, *x0v, *d0v, tau) - t;
      const double slope = (hermite(g, *x0v, *d0v, tau + 1e-6) -
                            hermite(g, *x0v, *d0v, tau - 1e-6)) /
                           2e-6;
      const double step = f / slope;
      tau -= step;
      if (std::abs(step) < 1e-14) break;
    }
    Vec p(1);
    p << hermite(g, *x1v, *d1v, tau);
    return p;
  };
  return s;
}

// ---------------------------------------------------------------------------
// gauge-fixed parametrization of Gamma

struct GammaParam {
  LorentzMetric metric;
  int dim_n = 1;
  double T = 0.0;
  UniformGrid y0_grid;  // [-T, T]
  UniformGrid yp_grid;  // angular grid for n = 2; single node for n = 1
  bool yp_periodic = false;
  std::vector<Vec> psi;       // ambient points, indexed i * n_yp + j
  std::vector<Vec> tau0;      // d psi / d y^0
  std::vector<Vec> tau1;      // d psi / d y^1 (n = 2 only)
  std::vector<Vec> nu;        // unit normal, points toward interior_point
  std::vector<Mat> gamma_ab;  // n x n pullback metric on Gamma
  Vec interior_point;         // ambient spatial point marking the side I
  double normal_sign = 1.0;   // recorded orientation flag
  double gauge_residual = 0.0;  // max |gamma_0a| observed (n = 2)

  std::size_t idx(std::size_t i, std::size_t j) const {
    return i * yp_grid.n + j;
  }
};

/// Solves h(nu, tan_k) = 0 for all supplied tangents, normalized to
/// h(nu, nu) = 1, oriented so the spatial part points from x toward
/// toward_spatial.
inline Vec unit_normal(const LorentzMetric& m, const Vec& x,
                       const std::vector<Vec>& tangents,
                       const Vec& toward_spatial) {
  const int d = 1 + m.dim_n;
  const Mat B = m.h(x);
  Mat TB{long(tangents.size()), long(d)};
  for (std::size_t k = 0; k < tangents.size(); ++k)
    TB.row(long(k)) = (B * tangents[k]).transpose();
  Eigen::FullPivLU<Mat> lu(TB);
  lu.setThreshold(1e-10);
  if (lu.dimensionOfKernel() != 1)
    throw DegenerateTangent("unit_normal: tangent frame degenerate");
  Vec dir = lu.kernel().col(0);
  const double nn = dir.dot(B * dir);
  if (!(nn > 0.0))
    throw DegenerateTangent("unit_normal: normal direction not spacelike");
  dir /= std::sqrt(nn);
  double dot = 0.0;
  for (int c = 1; c < d; ++c) dot += dir[c] * (toward_spatial[c - 1] - x[c]);
  if (dot < 0.0) dir = -dir;
  return dir;
}

/// Builds the gauge-fixed parametrization Psi(y^0, y') = (y^0, psi) on
/// [-T, T].  For n = 2 the angular parameter is advected by the drift ODE
/// that keeps gamma_0a = 0; for n = 1 the gauge is vacuous and the surface's
/// own time parametrization is used.
inline GammaParam build_gamma_param(const LorentzMetric& metric,
                                    const Hypersurface& surface, double T,
                                    const Vec& interior_point,
                                    std::size_t n_y0 = 201,
                                    std::size_t n_yp = 64) {
  if (metric.dim_n != surface.dim_n)
    throw ConfigError("build_gamma_param: dimension mismatch");
  const int n = metric.dim_n;
  const int d = 1 + n;
  GammaParam gp;
  gp.metric = metric;
  gp.dim_n = n;
  gp.T = T;
  if (n_y0 % 2 == 0) ++n_y0;  // keep y^0 = 0 on the grid
  gp.y0_grid = make_grid(-T, T, n_y0);
  if (n == 1) {
    gp.yp_grid = UniformGrid{0.0, 1.0, 1};
    gp.yp_periodic = false;
  } else {
    const double two_pi = 2.0 * EIGEN_PI;
    gp.yp_grid = UniformGrid{0.0, two_pi / double(n_yp), n_yp};
    gp.yp_periodic = true;
  }
  gp.interior_point = interior_point;
  const std::size_t n0 = gp.y0_grid.n, np = gp.yp_grid.n;

  // angular drift alpha_j(y^0) keeping h(dPsi/dy^0, dPsi/dy') = 0
  std::vector<std::vector<double>> alpha(n0, std::vector<double>(np));
  if (n == 1) {
    for (std::size_t i = 0; i < n0; ++i) alpha[i][0] = 0.0;
  } else {
    auto drift_rhs = [&](double t, const Vec& a) {
      Vec out{long(np)};
      for (std::size_t j = 0; j < np; ++j) {
        const double aj = a[long(j)];
        Vec x(d);
        x[0] = t;
        x.tail(n) = surface.psi(t, aj);
        Vec Vt(d), Va(d);
        Vt[0] = 1.0;
        Va[0] = 0.0;
        const double hs = 1e-5;
        Vt.tail(n) = (surface.psi(t - 2 * hs, aj) -
                      8.0 * surface.psi(t - hs, aj) +
                      8.0 * surface.psi(t + hs, aj) -
                      surface.psi(t + 2 * hs, aj)) /
                     (12.0 * hs);
        Va.tail(n) = (surface.psi(t, aj - 2 * hs) -
                      8.0 * surface.psi(t, aj - hs) +
                      8.0 * surface.psi(t, aj + hs) -
                      surface.psi(t, aj + 2 * hs)) /
                     (12.0 * hs);
        const Mat B = metric.h(x);
        const double gaa = Va.dot(B * Va);
        if (!(gaa > 1e-12))
          throw GaugeODEFailed("build_gamma_param: angular tangent degenerate");
        out[long(j)] = -Vt.dot(B * Va) / gaa;
      }
      return out;
    };
    Vec a0{long(np)};
    for (std::size_t j = 0; j < np; ++j) a0[long(j)] = gp.yp_grid[j];
    OdeOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-11;
    const std::size_t mid = n0 / 2;  // y^0 = 0 node (n_y0 odd recommended)
    Vec a = a0;
    double t = gp.y0_grid[mid];
    for (std::size_t j = 0; j < np; ++j) alpha[mid][j] = a[long(j)];
    for (std::size_t i = mid + 1; i < n0; ++i) {
      rk45_advance(drift_rhs, t, a, gp.y0_grid[i], opt);
      for (std::size_t j = 0; j < np; ++j) alpha[i][j] = a[long(j)];
    }
    a = a0;
    t = gp.y0_grid[mid];
    for (long i = long(mid) - 1; i >= 0; --i) {
      rk45_advance(drift_rhs, t, a, gp.y0_grid[std::size_t(i)], opt);
      for (std::size_t j = 0; j < np; ++j) alpha[std::size_t(i)][j] = a[long(j)];
    }
  }

  gp.psi.assign(n0 * np, Vec());
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      Vec p(d);
      p[0] = gp.y0_grid[i];
      p.tail(n) = surface.psi(gp.y0_grid[i], alpha[i][j]);
      gp.psi[gp.idx(i, j)] = p;
    }

  // grid tangents: 4th-order differences along each axis
  gp.tau0.assign(n0 * np, Vec());
  if (n == 2) gp.tau1.assign(n0 * np, Vec());
  for (std::size_t j = 0; j < np; ++j)
    for (int c = 0; c < d; ++c) {
      std::vector<double> col(n0);
      for (std::size_t i = 0; i < n0; ++i) col[i] = gp.psi[gp.idx(i, j)][c];
      auto dcol = deriv4(col, gp.y0_grid.dx);
      for (std::size_t i = 0; i < n0; ++i) {
        if (gp.tau0[gp.idx(i, j)].size() == 0) gp.tau0[gp.idx(i, j)] = Vec(d);
        gp.tau0[gp.idx(i, j)][c] = dcol[i];
      }
    }
  if (n == 2)
    for (std::size_t i = 0; i < n0; ++i)
      for (int c = 0; c < d; ++c) {
        std::vector<double> row(np);
        for (std::size_t j = 0; j < np; ++j) row[j] = gp.psi[gp.idx(i, j)][c];
        auto drow = deriv4_periodic(row, gp.yp_grid.dx);
        for (std::size_t j = 0; j < np; ++j) {
          if (gp.tau1[gp.idx(i, j)].size() == 0) gp.tau1[gp.idx(i, j)] = Vec(d);
          gp.tau1[gp.idx(i, j)][c] = drow[j];
        }
      }

  // pullback metric, normals, gauge residual
  gp.gamma_ab.assign(n0 * np, Mat());
  gp.nu.assign(n0 * np, Vec());
  double worst_gauge = 0.0;
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      const std::size_t q = gp.idx(i, j);
      const Mat B = metric.h(gp.psi[q]);
      Mat gam(n, n);
      std::vector<Vec> tangents{gp.tau0[q]};
      if (n == 2) tangents.push_back(gp.tau1[q]);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          gam(a, b) = tangents[std::size_t(a)].dot(B * tangents[std::size_t(b)]);
      gp.gamma_ab[q] = gam;
      if (n == 2) worst_gauge = std::max(worst_gauge, std::abs(gam(0, 1)));
      gp.nu[q] = unit_normal(metric, gp.psi[q], tangents, interior_point);
    }
  gp.gauge_residual = worst_gauge;

  // orthogonality to the initial slice: psi must start at rest
  const std::size_t mid = n0 / 2;
  for (std::size_t j = 0; j < np; ++j) {
    const Vec& t0 = gp.tau0[gp.idx(mid, j)];
    if (t0.tail(n).cwiseAbs().maxCoeff() > 1e-6)
      throw GaugeODEFailed(
          "build_gamma_param: surface does not meet the t = 0 slice "
          "orthogonally");
  }
  return gp;
}

// ---------------------------------------------------------------------------
// almost-normal coordinates

/// Geodesic normal chart around Gamma: phi_tilde(y^tau, y^n) follows the
/// unit-normal geodesic for affine length y^n; sigma shifts y^0 so the
/// y^0 = 0 slice lands in the initial time slice; g is the pullback metric
/// of the corrected map phi(y) = phi_tilde(y^0 - sigma(y', y^n), y', y^n).
struct NormalChart {
  LorentzMetric metric;
  GammaParam gp;
  double rho = 0.0;
  double T = 0.0;
  UniformGrid yn_grid;  // [-rho, rho], odd node count
  std::vector<Vec> phit;    // phi_tilde positions, idx3(i, j, k)
  std::vector<Vec> phit_n;  // d phi_tilde / d y^n (geodesic velocity)
  std::vector<Mat> gt;      // uncorrected pullback metric samples
  std::vector<double> sigma;     // sigma(y'_j, y^n_k), idx j * n_k + k
  std::vector<double> dsig_p;    // d sigma / d y'
  std::vector<double> dsig_n;    // d sigma / d y^n
  std::vector<Mat> g;            // corrected pullback metric samples
  double normal_sign = 1.0;

  std::size_t nk() const { return yn_grid.n; }
  std::size_t idx3(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * gp.yp_grid.n + j) * yn_grid.n + k;
  }
  std::size_t idx_jk(std::size_t j, std::size_t k) const {
    return j * yn_grid.n + k;
  }

  // tensor-product interpolation of phi_tilde components
  double phit_comp(int c, double y0, double yp, double yn) const {
    auto over_k = [&](std::size_t k) {
      auto over_j = [&](std::size_t j) {
        return lagrange4(
            gp.y0_grid,
            [&](std::size_t i) { return phit[idx3(i, j, k)][c]; }, y0);
      };
      if (gp.yp_grid.n == 1) return over_j(0);
      return lagrange4_periodic(gp.yp_grid, over_j, yp);
    };
    return lagrange4(yn_grid, over_k, yn);
  }

  Vec phi_tilde(const Vec& y) const {
    const int d = 1 + gp.dim_n;
    const double yp = (gp.dim_n == 2) ? y[1] : 0.0;
    Vec out(d);
    for (int c = 0; c < d; ++c) out[c] = phit_comp(c, y[0], yp, y[d - 1]);
    return out;
  }

  double sigma_at(double yp, double yn) const {
    auto over_j = [&](std::size_t j) {
      return lagrange4(
          yn_grid, [&](std::size_t k) { return sigma[idx_jk(j, k)]; }, yn);
    };
    if (gp.yp_grid.n == 1) return over_j(0);
    return lagrange4_periodic(gp.yp_grid, over_j, yp);
  }

  Vec phi(const Vec& y) const {
    const int d = 1 + gp.dim_n;
    const double yp = (gp.dim_n == 2) ? y[1] : 0.0;
    Vec yh = y;
    yh[0] -= sigma_at(yp, y[d - 1]);
    return phi_tilde(yh);
  }

  /// inverts phi_tilde by damped Newton; seed from the nearest grid node or
  /// a caller hint
  Vec invert_phi_tilde(const Vec& x, const Vec* hint = nullptr) const {
    const int d = 1 + gp.dim_n;
    Vec y(d);
    if (hint) {
      y = *hint;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < gp.y0_grid.n; ++i)
        for (std::size_t j = 0; j < gp.yp_grid.n; ++j)
          for (std::size_t k = 0; k < yn_grid.n; ++k) {
            const double dd = (phit[idx3(i, j, k)] - x).squaredNorm();
            if (dd < best) {
              best = dd;
              y[0] = gp.y0_grid[i];
              if (d == 3) y[1] = gp.yp_grid[j];
              y[d - 1] = yn_grid[k];
            }
          }
    }
    double res = (phi_tilde(y) - x).norm();
    for (int it = 0; it < 80; ++it) {
      if (res < 1e-12) return y;
      Mat J(d, d);
      const double h0 = gp.y0_grid.dx / 4.0, hn = yn_grid.dx / 4.0;
      const double hp = (d == 3) ? gp.yp_grid.dx / 4.0 : 0.0;
      for (int c = 0; c < d; ++c) {
        const double hc = (c == 0) ? h0 : ((c == d - 1) ? hn : hp);
        Vec yp_ = y, ym_ = y;
        yp_[c] += hc;
        ym_[c] -= hc;
        J.col(c) = (phi_tilde(yp_) - phi_tilde(ym_)) / (2.0 * hc);
      }
      Vec step = J.fullPivLu().solve(x - phi_tilde(y));
      double lam = 1.0;
      for (int half = 0; half < 30; ++half) {
        const Vec cand = y + lam * step;
        const double r2 = (phi_tilde(cand) - x).norm();
        if (r2 < res) {
          y = cand;
          res = r2;
          break;
        }
        lam *= 0.5;
        if (half == 29)
          throw OutsideChart("invert_phi_tilde: Newton stalled");
      }
      if (std::abs(y[d - 1]) > rho * (1.0 + 1e-6) ||
          std::abs(y[0]) > T * (1.0 + 1e-6))
        throw OutsideChart("invert_phi_tilde: left the chart box");
    }
    throw OutsideChart("invert_phi_tilde: no convergence");
  }

  /// eikonal distance d_Gamma = pi^n of the inverse chart map
  double d_gamma(const Vec& x, const Vec* hint = nullptr) const {
    const Vec y = invert_phi_tilde(x, hint);
    return y[1 + gp.dim_n - 1];
  }

  /// corrected inverse via direct Newton on phi (used by the eikonal cross-check)
  Vec invert_phi(const Vec& x, const Vec* hint = nullptr) const {
    Vec y = invert_phi_tilde(x, hint);  // seed: identical on Gamma
    const int d = 1 + gp.dim_n;
    double res = (phi(y) - x).norm();
    for (int it = 0; it < 80 && res >= 1e-12; ++it) {
      Mat J(d, d);
      const double h0 = gp.y0_grid.dx / 4.0, hn = yn_grid.dx / 4.0;
      const double hp = (d == 3) ? gp.yp_grid.dx / 4.0 : 0.0;
      for (int c = 0; c < d; ++c) {
        const double hc = (c == 0) ? h0 : ((c == d - 1) ? hn : hp);
        Vec a = y, b = y;
        a[c] += hc;
        b[c] -= hc;
        J.col(c) = (phi(a) - phi(b)) / (2.0 * hc);
      }
      Vec step = J.fullPivLu().solve(x - phi(y));
      double lam = 1.0;
      while (lam > 1e-9) {
        const Vec cand = y + lam * step;
        const double r2 = (phi(cand) - x).norm();
        if (r2 < res) {
          y = cand;
          res = r2;
          break;
        }
        lam *= 0.5;
      }
      if (lam <= 1e-9) break;
    }
    if (res > 1e-9) throw OutsideChart("invert_phi: no convergence");
    return y;
  }
};

struct ChartGrid {
  std::size_t n_yn = 41;  // nodes across [-rho, rho]; forced odd
};

inline NormalChart build_normal_chart(const LorentzMetric& metric,
                                      const GammaParam& gp, double rho,
                                      ChartGrid grid = {}) {
  const int n = gp.dim_n;
  const int d = 1 + n;
  NormalChart ch;
  ch.metric = metric;
  ch.gp = gp;
  ch.rho = rho;
  ch.T = gp.T;
  ch.normal_sign = gp.normal_sign;
  std::size_t nk = grid.n_yn;
  if (nk % 2 == 0) ++nk;
  ch.yn_grid = make_grid(-rho, rho, nk);
  const std::size_t n0 = gp.y0_grid.n, np = gp.yp_grid.n;
  const std::size_t kmid = nk / 2;
  ch.phit.assign(n0 * np * nk, Vec());
  ch.phit_n.assign(n0 * np * nk, Vec());

  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      const std::size_t q = gp.idx(i, j);
      ch.phit[ch.idx3(i, j, kmid)] = gp.psi[q];
      ch.phit_n[ch.idx3(i, j, kmid)] = gp.nu[q];
      for (int dir = -1; dir <= 1; dir += 2) {
        const Vec v0 = double(dir) * gp.nu[q];
        auto geo = geodesic(metric, gp.psi[q], v0, rho, ch.yn_grid.dx);
        for (std::size_t s = 1; s < geo.s.size(); ++s) {
          const std::size_t k =
              std::size_t(long(kmid) + dir * long(s));
          ch.phit[ch.idx3(i, j, k)] = geo.x[s];
          ch.phit_n[ch.idx3(i, j, k)] = double(dir) * geo.v[s];
        }
      }
    }

  // tangential derivatives of phi_tilde by grid differences
  std::vector<Vec> dphit_0(n0 * np * nk, Vec());
  std::vector<Vec> dphit_p;
  if (n == 2) dphit_p.assign(n0 * np * nk, Vec());
  for (std::size_t j = 0; j < np; ++j)
    for (std::size_t k = 0; k < nk; ++k)
      for (int c = 0; c < d; ++c) {
        std::vector<double> col(n0);
        for (std::size_t i = 0; i < n0; ++i)
          col[i] = ch.phit[ch.idx3(i, j, k)][c];
        auto dc = deriv4(col, gp.y0_grid.dx);
        for (std::size_t i = 0; i < n0; ++i) {
          Vec& t = dphit_0[ch.idx3(i, j, k)];
          if (t.size() == 0) t = Vec(d);
          t[c] = dc[i];
        }
      }
  if (n == 2)
    for (std::size_t i = 0; i < n0; ++i)
      for (std::size_t k = 0; k < nk; ++k)
        for (int c = 0; c < d; ++c) {
          std::vector<double> row(np);
          for (std::size_t j = 0; j < np; ++j)
            row[j] = ch.phit[ch.idx3(i, j, k)][c];
          auto dr = deriv4_periodic(row, gp.yp_grid.dx);
          for (std::size_t j = 0; j < np; ++j) {
            Vec& t = dphit_p[ch.idx3(i, j, k)];
            if (t.size() == 0) t = Vec(d);
            t[c] = dr[j];
          }
        }

  // uncorrected pullback metric and the caustic check
  ch.gt.assign(n0 * np * nk, Mat());
  double det_ref = 0.0;
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j)
      for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t q = ch.idx3(i, j, k);
        Mat D(d, d);
        D.col(0) = dphit_0[q];
        if (n == 2) D.col(1) = dphit_p[q];
        D.col(d - 1) = ch.phit_n[q];
        const double det = D.determinant();
        if (i == 0 && j == 0 && k == 0) det_ref = det;
        if (det * det_ref <= 0.0)
          throw CausticDetected(
              "build_normal_chart: chart Jacobian changes sign");
        const Mat B = metric.h(ch.phit[q]);
        ch.gt[q] = D.transpose() * B * D;
      }

  // sigma(y', y^n): root of phi_tilde^0(-sigma, y', y^n) = 0
  ch.sigma.assign(np * nk, 0.0);
  for (std::size_t j = 0; j < np; ++j)
    for (std::size_t k = 0; k < nk; ++k) {
      auto f = [&](double s) {
        return lagrange4(
            gp.y0_grid,
            [&](std::size_t i) { return ch.phit[ch.idx3(i, j, k)][0]; }, -s);
      };
      double s = 0.0;
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        const double fv = f(s);
        if (std::abs(fv) < 1e-13) {
          ok = true;
          break;
        }
        const double h = gp.y0_grid.dx / 8.0;
        const double df = (f(s + h) - f(s - h)) / (2.0 * h);
        if (df == 0.0) break;
        double step = fv / df;
        // safeguard: never jump past the sampled time range
        const double cap = 0.5 * gp.T;
        if (std::abs(step) > cap) step = (step > 0 ? cap : -cap);
        s -= step;
        if (std::abs(step) < 1e-13) {
          ok = std::abs(f(s)) < 1e-10;
          break;
        }
      }
      if (!ok) throw RootFindFailed("build_normal_chart: sigma root");
      ch.sigma[ch.idx_jk(j, k)] = s;
    }

  // derivatives of sigma on its (y', y^n) grid
  ch.dsig_p.assign(np * nk, 0.0);
  ch.dsig_n.assign(np * nk, 0.0);
  for (std::size_t j = 0; j < np; ++j) {
    std::vector<double> col(nk);
    for (std::size_t k = 0; k < nk; ++k) col[k] = ch.sigma[ch.idx_jk(j, k)];
    auto dc = deriv4(col, ch.yn_grid.dx);
    for (std::size_t k = 0; k < nk; ++k) ch.dsig_n[ch.idx_jk(j, k)] = dc[k];
  }
  if (n == 2)
    for (std::size_t k = 0; k < nk; ++k) {
      std::vector<double> row(np);
      for (std::size_t j = 0; j < np; ++j) row[j] = ch.sigma[ch.idx_jk(j, k)];
      auto dr = deriv4_periodic(row, gp.yp_grid.dx);
      for (std::size_t j = 0; j < np; ++j) ch.dsig_p[ch.idx_jk(j, k)] = dr[j];
    }

  // corrected pullback metric: g = J^T gt(y^0 - sigma, y', y^n) J
  ch.g.assign(n0 * np * nk, Mat());
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j)
      for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t q = ch.idx3(i, j, k);
        const double s = ch.sigma[ch.idx_jk(j, k)];
        Mat gt_s(d, d);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            gt_s(a, b) = lagrange4(
                gp.y0_grid,
                [&](std::size_t ii) { return ch.gt[ch.idx3(ii, j, k)](a, b); },
                gp.y0_grid[i] - s);
        Mat J = Mat::Identity(d, d);
        if (n == 2) J(0, 1) = -ch.dsig_p[ch.idx_jk(j, k)];
        J(0, d - 1) = -ch.dsig_n[ch.idx_jk(j, k)];
        const Mat gcorr = J.transpose() * gt_s * J;
        // Lorentzian signature check
        Eigen::SelfAdjointEigenSolver<Mat> es(gcorr);
        int neg = 0;
        for (int c = 0; c < d; ++c)
          if (es.eigenvalues()[c] < 0) ++neg;
        if (neg != 1)
          throw SignatureViolation(
              "build_normal_chart: pullback metric signature");
        ch.g[q] = gcorr;
      }
  return ch;
}

/// halves rho until chart construction succeeds (caustic / positivity)
inline NormalChart build_normal_chart_auto(const LorentzMetric& metric,
                                           const GammaParam& gp, double rho,
                                           ChartGrid grid = {}) {
  for (int tries = 0; tries < 8; ++tries) {
    try {
      return build_normal_chart(metric, gp, rho, grid);
    } catch (const CausticDetected&) {
    } catch (const NotPositiveDefinite&) {
    }
    rho *= 0.5;
  }
  throw CausticDetected("build_normal_chart_auto: no admissible rho found");
}

/// numerical pullback of a metric under an arbitrary differentiable map
inline Mat pullback_metric(const std::function<Vec(const Vec&)>& map,
                           const LorentzMetric& m, const Vec& y,
                           double fd_step = 1e-6) {
  const Vec x = map(y);
  const int d = 1 + m.dim_n;
  if (y.size() != d)
    throw ConfigError("pullback_metric: dimension mismatch");
  Mat J(d, d);
  for (int c = 0; c < d; ++c) {
    Vec a = y, b = y, aa = y, bb = y;
    a[c] += fd_step;
    b[c] -= fd_step;
    aa[c] += 2 * fd_step;
    bb[c] -= 2 * fd_step;
    J.col(c) = (map(bb) - 8.0 * map(b) + 8.0 * map(a) - map(aa)) /
               (12.0 * fd_step);
  }
  const Mat g = J.transpose() * m.h(x) * J;
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  int neg = 0;
  for (int c = 0; c < d; ++c)
    if (es.eigenvalues()[c] < 0) ++neg;
  if (neg != 1) throw SignatureViolation("pullback_metric: signature");
  return g;
}

// ---------------------------------------------------------------------------
// mean curvature, eikonal residual, energy-tensor constants

struct MeanCurvatureField {
  std::vector<double> H;      // -1/2 g^{ab} d_n g_ab at y^n = 0, idx i*np+j
  std::vector<double> H_div;  // divergence form -(1/sqrt(-g)) d_n sqrt(-g)
};

inline MeanCurvatureField mean_curvature(const NormalChart& ch) {
  const std::size_t n0 = ch.gp.y0_grid.n, np = ch.gp.yp_grid.n;
  const std::size_t nk = ch.yn_grid.n, kmid = nk / 2;
  const int d = 1 + ch.gp.dim_n;
  MeanCurvatureField out;
  out.H.assign(n0 * np, 0.0);
  out.H_div.assign(n0 * np, 0.0);
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      // centered 4th-order d/dy^n of g and of sqrt(-det g) at y^n = 0
      Mat dg = Mat::Zero(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          dg(a, b) = (ch.g[ch.idx3(i, j, kmid - 2)](a, b) -
                      8.0 * ch.g[ch.idx3(i, j, kmid - 1)](a, b) +
                      8.0 * ch.g[ch.idx3(i, j, kmid + 1)](a, b) -
                      ch.g[ch.idx3(i, j, kmid + 2)](a, b)) /
                     (12.0 * ch.yn_grid.dx);
      const Mat g0 = ch.g[ch.idx3(i, j, kmid)];
      const Mat ginv = g0.inverse();
      out.H[i * np + j] = -0.5 * (ginv * dg).trace();
      auto root = [&](std::size_t k) {
        return std::sqrt(-ch.g[ch.idx3(i, j, k)].determinant());
      };
      const double droot =
          (root(kmid - 2) - 8.0 * root(kmid - 1) + 8.0 * root(kmid + 1) -
           root(kmid + 2)) /
          (12.0 * ch.yn_grid.dx);
      out.H_div[i * np + j] = -droot / root(kmid);
    }
  return out;
}

struct EikonalSample {
  double residual;    // |h^{ab} dd dd - 1|
  double d_value;     // d_Gamma at the point
  double ratio_4_14;  // |pi^n(phi^-1) - d_Gamma| / d_Gamma^2
};

/// finite-difference eikonal residual at ambient points inside the chart
inline std::vector<EikonalSample> eikonal_residual(
    const NormalChart& ch, const std::vector<Vec>& points,
    double fd_step = 0.02) {
  std::vector<EikonalSample> out;
  out.reserve(points.size());
  for (const Vec& x : points) {
    const int d = 1 + ch.gp.dim_n;
    const Vec y_seed = ch.invert_phi_tilde(x);
    EikonalSample smp{};
    smp.d_value = y_seed[d - 1];
    Vec grad(d);
    for (int c = 0; c < d; ++c) {
      auto dval = [&](double off) {
        Vec xq = x;
        xq[c] += off;
        return ch.d_gamma(xq, &y_seed);
      };
      grad[c] = (dval(-2 * fd_step) - 8.0 * dval(-fd_step) +
                 8.0 * dval(fd_step) - dval(2 * fd_step)) /
                (12.0 * fd_step);
    }
    const Mat hinv = ch.metric.h(x).inverse();
    smp.residual = std::abs(grad.dot(hinv * grad) - 1.0);
    const Vec y_corr = ch.invert_phi(x, &y_seed);
    const double denom = std::max(smp.d_value * smp.d_value, 1e-12);
    smp.ratio_4_14 = std::abs(y_corr[d - 1] - smp.d_value) / denom;
    out.push_back(smp);
  }
  return out;
}

struct EnergyTensorConstants {
  std::vector<Mat> a;  // a^{alpha beta} at every chart node
  double c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
};

/// Builds the flipped-sign energy tensor a^{00} = -g^{00}, a^{ij} = g^{ij},
/// a^{0i} = 0 and the smallest constants for the weighted coercivity
/// inequalities, via generalized eigenvalue problems over all chart nodes.
inline EnergyTensorConstants energy_tensor_constants(const NormalChart& ch) {
  const std::size_t n0 = ch.gp.y0_grid.n, np = ch.gp.yp_grid.n;
  const std::size_t nk = ch.yn_grid.n;
  const int d = 1 + ch.gp.dim_n;
  EnergyTensorConstants out;
  out.a.assign(n0 * np * nk, Mat());
  double c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j)
      for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t q = ch.idx3(i, j, k);
        const Mat ginv = ch.g[q].inverse();
        Mat a = Mat::Zero(d, d);
        a(0, 0) = -ginv(0, 0);
        a.bottomRightCorner(d - 1, d - 1) =
            ginv.bottomRightCorner(d - 1, d - 1);
        {
          Eigen::SelfAdjointEigenSolver<Mat> es(a);
          if (es.eigenvalues().minCoeff() <= 0.0)
            throw NotPositiveDefinite(
                "energy_tensor_constants: a not positive definite");
        }
        out.a[q] = a;
        const double yn = ch.yn_grid[k];
        const double yn2 = yn * yn;

        // left inequality: smallest c2 with Q1 <= (1 + c2 yn^2) a
        Mat Q1 = Mat::Zero(d, d);
        Q1.topLeftCorner(d - 1, d - 1) =
            0.5 * a.topLeftCorner(d - 1, d - 1);
        Q1(d - 1, d - 1) = 1.0 + yn2;
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Q1, a);
        const double lmax = ges.eigenvalues().maxCoeff();
        if (yn2 > 1e-12) c2 = std::max(c2, (lmax - 1.0) / yn2);

        // c4: delta^{ab} <= c4 a^{ab} on the tangential block
        {
          Eigen::SelfAdjointEigenSolver<Mat> es(
              a.topLeftCorner(d - 1, d - 1));
          c4 = std::max(c4, 1.0 / es.eigenvalues().minCoeff());
        }

        // c5: |g^{n alpha} xi_alpha xi_0| <= (c5/2) a xi xi
        {
          Vec v = ginv.row(d - 1).transpose();
          Mat Bs = 0.5 * (v * Vec::Unit(d, 0).transpose() +
                          Vec::Unit(d, 0) * v.transpose());
          Eigen::GeneralizedSelfAdjointEigenSolver<Mat> g5(Bs, a);
          c5 = std::max(c5, 2.0 * g5.eigenvalues().cwiseAbs().maxCoeff());
        }
      }
  // right inequality uses the already-fixed c2: smallest c3 with
  // (1 + c2 yn^2) a <= 2 a_tang + (1 + c3 yn^2) e_n e_n^T  (Schur complement)
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < np; ++j)
      for (std::size_t k = 0; k < nk; ++k) {
        const std::size_t q = ch.idx3(i, j, k);
        const double yn = ch.yn_grid[k];
        const double yn2 = yn * yn;
        if (yn2 <= 1e-12) continue;
        const Mat& a = out.a[q];
        Mat M0 = -(1.0 + c2 * yn2) * a;
        M0.topLeftCorner(d - 1, d - 1) += 2.0 * a.topLeftCorner(d - 1, d - 1);
        M0(d - 1, d - 1) += 1.0;
        const Mat Tblk = M0.topLeftCorner(d - 1, d - 1);
        Eigen::SelfAdjointEigenSolver<Mat> es(Tblk);
        if (es.eigenvalues().minCoeff() <= 0.0)
          throw NotPositiveDefinite(
              "energy_tensor_constants: tangential margin lost (rho too "
              "large)");
        const Vec w = M0.topRightCorner(d - 1, 1);
        const double need = w.dot(Tblk.inverse() * w) - M0(d - 1, d - 1);
        c3 = std::max(c3, need / yn2);
      }
  out.c2 = std::max(c2, 0.0);
  out.c3 = std::max(c3, 0.0);
  out.c4 = c4;
  out.c5 = c5;
  return out;
}

/// CSV dump of the chart grid: coordinates, map, metric, sigma, and the
/// round-trip residual |d_gamma(phi_tilde(y)) - y^n|.
inline void export_chart_csv(std::ostream& os, const NormalChart& ch,
                             bool with_residual = false) {
  const int d = 1 + ch.gp.dim_n;
  os << "# chart rho=" << ch.rho << " T=" << ch.T
     << " normal_sign=" << ch.normal_sign << "\n";
  os << "y0";
  if (d == 3) os << ",y1";
  os << ",yn";
  for (int c = 0; c < d; ++c) os << ",phi" << c;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) os << ",g" << a << b;
  os << ",sigma,residual\n";
  char buf[64];
  auto put = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, last ? '\n' : ',');
    os << buf;
  };
  for (std::size_t i = 0; i < ch.gp.y0_grid.n; ++i)
    for (std::size_t j = 0; j < ch.gp.yp_grid.n; ++j)
      for (std::size_t k = 0; k < ch.yn_grid.n; ++k) {
        const std::size_t q = ch.idx3(i, j, k);
        Vec y(d);
        y[0] = ch.gp.y0_grid[i];
        if (d == 3) y[1] = ch.gp.yp_grid[j];
        y[d - 1] = ch.yn_grid[k];
        put(y[0]);
        if (d == 3) put(y[1]);
        put(y[d - 1]);
        const Vec ph = ch.phi(y);
        for (int c = 0; c < d; ++c) put(ph[c]);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) put(ch.g[q](a, b));
        put(ch.sigma[ch.idx_jk(j, k)]);
        double resid = 0.0;
        if (with_residual) {
          Vec seed(d);
          seed[0] = y[0];
          if (d == 3) seed[1] = y[1];
          seed[d - 1] = y[d - 1];
          resid = std::abs(ch.d_gamma(ch.phit[q], &seed) - y[d - 1]);
        }
        put(resid, true);
      }
}

}  // namespace frontlab

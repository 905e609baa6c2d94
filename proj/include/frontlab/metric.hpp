#pragma once

// Lorentzian metrics on R^{1+n}, Christoffel symbols, geodesics, and the
// hyperbolic polar coordinates on the wedge {|t| < x}.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "frontlab/common.hpp"

namespace frontlab {

using MetricFn = std::function<Mat(const Vec&)>;
using MetricDerivFn = std::function<std::vector<Mat>(const Vec&)>;

/// Static product-form Lorentz metric on R^{1+n}: h_00 < 0, spatial block
/// positive definite, h_0i = 0.  dh returns all first partials d_gamma h.
struct LorentzMetric {
  int dim_n = 1;  // spatial dimension; ambient dimension is 1 + dim_n
  std::string name;
  MetricFn h;
  MetricDerivFn dh;
  double c1 = 1.0;  // uniformity constant: h_00 <= -c1, spatial eigs >= c1
};

/// central finite-difference derivatives for metrics given without analytic dh
inline MetricDerivFn fd_metric_derivs(MetricFn h, int dim, double step = 1e-5) {
  return [h, dim, step](const Vec& x) {
    std::vector<Mat> out{std::size_t(dim)};
    for (int c = 0; c < dim; ++c) {
      Vec xp = x, xm = x, xpp = x, xmm = x;
      xp[c] += step;
      xm[c] -= step;
      xpp[c] += 2 * step;
      xmm[c] -= 2 * step;
      out[std::size_t(c)] =
          (h(xmm) - 8.0 * h(xm) + 8.0 * h(xp) - h(xpp)) / (12.0 * step);
    }
    return out;
  };
}

inline LorentzMetric minkowski(int n) {
  LorentzMetric m;
  m.dim_n = n;
  m.name = "minkowski";
  const int d = 1 + n;
  m.h = [d](const Vec&) {
    Mat g = Mat::Identity(d, d);
    g(0, 0) = -1.0;
    return g;
  };
  m.dh = [d](const Vec&) { return std::vector<Mat>(d, Mat::Zero(d, d)); };
  m.c1 = 1.0;
  return m;
}

/// Minkowski metric in hyperbolic polar coordinates (theta, r):
/// ds^2 = -r^2 dtheta^2 + dr^2.
inline LorentzMetric polar_metric() {
  LorentzMetric m;
  m.dim_n = 1;
  m.name = "polar";
  m.h = [](const Vec& x) {
    Mat g = Mat::Identity(2, 2);
    g(0, 0) = -x[1] * x[1];
    return g;
  };
  m.dh = [](const Vec& x) {
    std::vector<Mat> d(2, Mat::Zero(2, 2));
    d[1](0, 0) = -2.0 * x[1];
    return d;
  };
  m.c1 = 0.01;
  return m;
}

/// e^{2 lambda} * eta with lambda(x) = amp * sin(freq * x^1); 1+1 dimensional
/// and static, so the solver's product-form assumption holds.
inline LorentzMetric conformal_metric(double amp, double freq) {
  LorentzMetric m;
  m.dim_n = 1;
  m.name = "conformal";
  auto lam = [amp, freq](double x1) { return amp * std::sin(freq * x1); };
  auto dlam = [amp, freq](double x1) {
    return amp * freq * std::cos(freq * x1);
  };
  m.h = [lam](const Vec& x) {
    const double w = std::exp(2.0 * lam(x[1]));
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = -w;
    g(1, 1) = w;
    return g;
  };
  m.dh = [lam, dlam](const Vec& x) {
    const double w = std::exp(2.0 * lam(x[1]));
    std::vector<Mat> d(2, Mat::Zero(2, 2));
    d[1](0, 0) = -2.0 * dlam(x[1]) * w;
    d[1](1, 1) = 2.0 * dlam(x[1]) * w;
    return d;
  };
  m.c1 = std::exp(-2.0 * std::abs(amp));
  return m;
}

/// Parses the run-config metric names: "minkowski", "polar",
/// "conformal:<amplitude>:<frequency>".
inline LorentzMetric parse_metric(const std::string& spec, int n = 1) {
  if (spec == "minkowski") return minkowski(n);
  if (spec == "polar") {
    if (n != 1) throw ConfigError("polar metric is 1+1 only");
    return polar_metric();
  }
  if (spec.rfind("conformal:", 0) == 0) {
    if (n != 1) throw ConfigError("conformal metric is 1+1 only");
    const auto rest = spec.substr(10);
    const auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw ConfigError("conformal metric spec needs amplitude and frequency");
    try {
      std::size_t used = 0;
      const double amp = std::stod(rest.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("trailing");
      const std::string freq_s = rest.substr(colon + 1);
      const double freq = std::stod(freq_s, &used);
      if (used != freq_s.size()) throw std::invalid_argument("trailing");
      return conformal_metric(amp, freq);
    } catch (const std::logic_error&) {
      throw ConfigError("bad conformal metric spec: " + spec);
    }
  }
  throw ConfigError("unknown metric: " + spec);
}

/// checks the product-form invariants at one point; throws on violation
inline void validate_metric(const LorentzMetric& m, const Vec& x) {
  const Mat g = m.h(x);
  const int d = 1 + m.dim_n;
  if (g.rows() != d || g.cols() != d)
    throw ConfigError("metric dimension mismatch");
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw SignatureViolation("metric not symmetric");
  if (!(g(0, 0) <= -m.c1))
    throw SignatureViolation("h_00 fails the -c1 bound");
  for (int i = 1; i < d; ++i)
    if (std::abs(g(0, i)) > 1e-12)
      throw SignatureViolation("h_0i must vanish");
  Eigen::SelfAdjointEigenSolver<Mat> es(g.bottomRightCorner(d - 1, d - 1));
  if (es.eigenvalues().minCoeff() < m.c1 - 1e-12)
    throw SignatureViolation("spatial block fails the c1 bound");
  if (g.cwiseAbs().maxCoeff() > 1.0 / m.c1 + 1e-12)
    throw SignatureViolation("metric entries exceed 1/c1");
}

// ---------------------------------------------------------------------------
// Christoffel symbols and geodesics

/// Gamma[alpha](mu, nu) = 1/2 h^{alpha beta}
///   (d_mu h_{beta nu} + d_nu h_{mu beta} - d_beta h_{nu mu})
inline std::vector<Mat> christoffel(const LorentzMetric& m, const Vec& x) {
  const int d = 1 + m.dim_n;
  const Mat g = m.h(x);
  if (std::abs(g.determinant()) < 1e-12)
    throw SingularMetric("christoffel: |det h| < 1e-12");
  const Mat ginv = g.inverse();
  const std::vector<Mat> dg = m.dh(x);
  std::vector<Mat> Gamma(std::size_t(d), Mat::Zero(d, d));
  for (int a = 0; a < d; ++a)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = mu; nu < d; ++nu) {
        double s = 0.0;
        for (int b = 0; b < d; ++b)
          s += 0.5 * ginv(a, b) *
               (dg[std::size_t(mu)](b, nu) + dg[std::size_t(nu)](mu, b) -
                dg[std::size_t(b)](nu, mu));
        Gamma[std::size_t(a)](mu, nu) = s;
        Gamma[std::size_t(a)](nu, mu) = s;
      }
  return Gamma;
}

/// right-hand side of the geodesic system as a first-order ODE on (x, v)
inline Vec geodesic_rhs(const LorentzMetric& m, const Vec& state) {
  const int d = 1 + m.dim_n;
  const Vec x = state.head(d), v = state.tail(d);
  const auto Gamma = christoffel(m, x);
  Vec out(2 * d);
  out.head(d) = v;
  for (int a = 0; a < d; ++a)
    out[d + a] = -v.dot(Gamma[std::size_t(a)] * v);
  return out;
}

struct GeodesicResult {
  std::vector<double> s;       // affine parameter samples
  std::vector<Vec> x;          // positions
  std::vector<Vec> v;          // velocities
};

/// integrates the geodesic system, sampling every ds up to s_max; optional
/// coordinate box [lo, hi] aborts with LeftDomain when exited
inline GeodesicResult geodesic(const LorentzMetric& m, const Vec& x0,
                               const Vec& v0, double s_max, double ds,
                               const Vec* box_lo = nullptr,
                               const Vec* box_hi = nullptr) {
  if (v0.cwiseAbs().maxCoeff() == 0.0)
    throw ConfigError("geodesic: zero initial velocity");
  const int d = 1 + m.dim_n;
  GeodesicResult out;
  Vec state(2 * d);
  state.head(d) = x0;
  state.tail(d) = v0;
  auto rhs = [&m](double, const Vec& y) { return geodesic_rhs(m, y); };
  OdeOptions opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-12;
  double s = 0.0;
  const long nsteps = std::lround(std::ceil(s_max / ds - 1e-12));
  for (long i = 0; i <= nsteps; ++i) {
    const double target = std::min(double(i) * ds, s_max);
    rk45_advance(rhs, s, state, target, opt);
    const Vec xi = state.head(d);
    if (box_lo && box_hi)
      for (int c = 0; c < d; ++c)
        if (xi[c] < (*box_lo)[c] || xi[c] > (*box_hi)[c])
          throw LeftDomain("geodesic: curve exited the coordinate box");
    out.s.push_back(target);
    out.x.push_back(xi);
    out.v.push_back(state.tail(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// hyperbolic polar coordinates on the wedge |t| < x

inline Vec polar_map(double theta, double r) {
  Vec tx(2);
  tx << r * std::sinh(theta), r * std::cosh(theta);
  return tx;
}

inline Vec polar_inverse(double t, double x) {
  if (std::abs(t) >= x)
    throw OutsideWedge("polar_inverse: need |t| < x");
  Vec tr(2);
  tr << std::atanh(t / x), std::sqrt(x * x - t * t);
  return tr;
}

}  // namespace frontlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "frontlab/chart.hpp"

using namespace frontlab;

namespace {
Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}
Vec v1(double a) {
  Vec x(1);
  x << a;
  return x;
}

McCurve hyperbola_curve(double r0, double span) {
  auto m = minkowski(1);
  return mc_curve(
      m, [r0](const Vec&) { return 1.0 / r0; }, pt(0.0, r0), pt(1.0, 0.0),
      span, 0.005);
}
}  // namespace

TEST_CASE("mc_curve with constant curvature reproduces the hyperbola") {
  const double r0 = 0.8;
  auto m = minkowski(1);
  auto c = hyperbola_curve(r0, 1.5);
  for (std::size_t i = 0; i < c.tau_grid.n; ++i) {
    const double t = c.x[i][0], x = c.x[i][1];
    CHECK(std::abs(x - std::sqrt(r0 * r0 + t * t)) < 1e-6);
    // unit timelike tangent preserved
    const double nrm = c.T[i].dot(m.h(c.x[i]) * c.T[i]);
    CHECK(std::abs(nrm + 1.0) < 1e-8);
  }
  // closed form: x(tau) = (r0 sinh(tau/r0), r0 cosh(tau/r0))
  const std::size_t q = c.tau_grid.n - 1;
  const double tau = c.tau_grid[q];
  CHECK(c.x[q][0] == doctest::Approx(r0 * std::sinh(tau / r0)).epsilon(1e-8));
  CHECK(c.x[q][1] == doctest::Approx(r0 * std::cosh(tau / r0)).epsilon(1e-8));
}

TEST_CASE("mc_curve with zero curvature is a straight line") {
  auto m = conformal_metric(0.0, 1.0);  // flat
  auto c = mc_curve(
      m, [](const Vec&) { return 0.0; }, pt(0.0, 0.2), pt(1.0, 0.0), 1.0);
  for (std::size_t i = 0; i < c.tau_grid.n; ++i) {
    CHECK(std::abs(c.x[i][1] - 0.2) < 1e-10);
    CHECK(std::abs(c.x[i][0] - c.tau_grid[i]) < 1e-10);
  }
}

TEST_CASE("mc_curve validates the start tangent") {
  auto m = minkowski(1);
  CHECK_THROWS_AS(mc_curve(
                      m, [](const Vec&) { return 1.0; }, pt(0.0, 1.0),
                      pt(2.0, 0.0), 1.0),
                  ConfigError);
}

TEST_CASE("unit_normal: flat line, both orientations, defining properties") {
  auto m = minkowski(1);
  const Vec x = pt(0.0, 0.8);
  const std::vector<Vec> tangents{pt(1.0, 0.0)};
  const Vec nu_in = unit_normal(m, x, tangents, v1(0.0));   // toward origin
  const Vec nu_out = unit_normal(m, x, tangents, v1(5.0));  // away
  CHECK(nu_in[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(nu_out[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(nu_in[0]) < 1e-12);
}

TEST_CASE("unit_normal matches a Gram-Schmidt oracle in the conformal metric") {
  auto m = conformal_metric(0.1, 1.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = pt(U(rng), U(rng));
    Vec tau = pt(1.0, 0.4 * U(rng));  // timelike tangent
    const Mat B = m.h(x);
    const Vec nu = unit_normal(m, x, {tau}, v1(x[1] + 1.0));
    CHECK(std::abs(nu.dot(B * tau)) < 1e-10);
    CHECK(nu.dot(B * nu) == doctest::Approx(1.0).epsilon(1e-10));
    // oracle: project (0,1) off tau with respect to h, normalize
    Vec w = pt(0.0, 1.0);
    w -= (w.dot(B * tau) / tau.dot(B * tau)) * tau;
    w /= std::sqrt(w.dot(B * w));
    CHECK((nu - w).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("gamma param for a static line in Minkowski") {
  auto m = minkowski(1);
  auto gp = build_gamma_param(m, static_line(0.8), 1.0, v1(0.0), 101);
  for (std::size_t i = 0; i < gp.y0_grid.n; ++i) {
    CHECK(gp.psi[gp.idx(i, 0)][0] == gp.y0_grid[i]);  // Psi^0 = y^0 exactly
    CHECK(gp.psi[gp.idx(i, 0)][1] == 0.8);
    CHECK(gp.gamma_ab[gp.idx(i, 0)](0, 0) ==
          doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(gp.nu[gp.idx(i, 0)][1] == doctest::Approx(-1.0).epsilon(1e-10));
  }
}

TEST_CASE("gamma param from the mc_curve hyperbola") {
  auto m = minkowski(1);
  const double r0 = 0.8;
  auto surf = surface_from_curve(hyperbola_curve(r0, 2.5));
  auto gp = build_gamma_param(m, surf, 1.0, v1(0.0), 201);
  for (std::size_t i = 0; i < gp.y0_grid.n; ++i) {
    const double t = gp.y0_grid[i];
    CHECK(std::abs(gp.psi[gp.idx(i, 0)][1] - std::sqrt(r0 * r0 + t * t)) <
          1e-6);
    // h(nu, tangent) = 0 within 1e-10
    const std::size_t q = gp.idx(i, 0);
    CHECK(std::abs(gp.nu[q].dot(m.h(gp.psi[q]) * gp.tau0[q])) < 1e-10);
  }
}

TEST_CASE("gamma param rejects surfaces not orthogonal to the t = 0 slice") {
  auto m = minkowski(1);
  Hypersurface tilted;
  tilted.dim_n = 1;
  tilted.psi = [](double t, double) { return v1(0.8 + 0.5 * t); };
  CHECK_THROWS_AS(build_gamma_param(m, tilted, 0.5, v1(0.0), 51),
                  GaugeODEFailed);
}

TEST_CASE("gamma param on a circle: initial orthogonality and gauge") {
  auto m = minkowski(2);
  Vec inside(2);
  inside << 0.0, 0.0;
  auto gp = build_gamma_param(m, static_circle(1.0), 0.2, inside, 21, 64);
  const std::size_t mid = gp.y0_grid.n / 2;
  for (std::size_t j = 0; j < gp.yp_grid.n; ++j) {
    const std::size_t q = gp.idx(mid, j);
    CHECK(gp.gamma_ab[q](0, 0) == doctest::Approx(-1.0).epsilon(1e-8));
    // normal points inward (toward the axis)
    const Vec& x = gp.psi[q];
    CHECK(gp.nu[q][1] * x[1] + gp.nu[q][2] * x[2] < 0.0);
  }
  CHECK(gp.gauge_residual < 1e-8);
}

TEST_CASE("conformal gamma param matches an implicit-midpoint oracle") {
  auto m = conformal_metric(0.1, 1.0);
  const double x_start = 0.3;
  const double lam0 = std::exp(-0.1 * std::sin(x_start));
  auto curve = mc_curve(
      m, [](const Vec&) { return 0.7; }, pt(0.0, x_start), pt(lam0, 0.0),
      1.2, 0.005);
  // independent fixed-step implicit midpoint on the same frame system
  auto rhs = [&m](const Vec& y) {
    const Vec x = y.head(2), T = y.tail(2);
    const auto G = christoffel(m, x);
    const Vec nu = spacelike_normal(m, x, T);
    Vec out(4);
    out.head(2) = T;
    for (int a = 0; a < 2; ++a)
      out[2 + a] = -T.dot(G[std::size_t(a)] * T) + 0.7 * nu[a];
    return out;
  };
  const double hstep = 2e-4;
  Vec y(4);
  y << 0.0, x_start, lam0, 0.0;
  double tau = 0.0;
  const std::size_t half = curve.tau_grid.n / 2;
  std::size_t next = half + 1;
  while (next < curve.tau_grid.n && tau < curve.tau_grid.back() - 1e-12) {
    Vec ynew = y;
    for (int it = 0; it < 30; ++it)
      ynew = y + hstep * rhs(Vec(0.5 * (y + ynew)));
    y = ynew;
    tau += hstep;
    if (std::abs(tau - curve.tau_grid[next]) < 1e-9) {
      CHECK((y.head(2) - curve.x[next]).cwiseAbs().maxCoeff() < 1e-6);
      ++next;
    }
  }
  CHECK(next > half + 10);  // the comparison actually ran
}

TEST_CASE("normal chart around the hyperbola: closed form, sigma, curvature") {
  auto m = minkowski(1);
  const double r0 = 0.8, T = 1.0, rho = 0.4;
  auto surf = surface_from_curve(hyperbola_curve(r0, 3.0));
  auto gp = build_gamma_param(m, surf, T, v1(0.0), 401);
  ChartGrid cg;
  cg.n_yn = 41;
  auto ch = build_normal_chart(m, gp, rho, cg);

  const std::size_t kmid = ch.yn_grid.n / 2;
  for (std::size_t i = 0; i < gp.y0_grid.n; i += 25)
    for (std::size_t k = 0; k < ch.yn_grid.n; k += 5) {
      const Vec& p = ch.phit[ch.idx3(i, 0, k)];
      const double yn = ch.yn_grid[k];
      // normal points toward the origin, so radius decreases with yn
      const Vec tr = polar_inverse(p[0], p[1]);
      CHECK(std::abs(tr[1] - (r0 - yn)) < 1e-8);
      const Vec tr0 = polar_inverse(ch.phit[ch.idx3(i, 0, kmid)][0],
                                    ch.phit[ch.idx3(i, 0, kmid)][1]);
      CHECK(std::abs(tr[0] - tr0[0]) < 1e-8);
      // uncorrected metric block structure (Gauss lemma)
      const Mat& gt = ch.gt[ch.idx3(i, 0, k)];
      CHECK(std::abs(gt(1, 1) - 1.0) < 1e-8);
      CHECK(std::abs(gt(0, 1)) < 1e-7);
    }
  // phi restricted to yn = 0 equals Psi
  for (std::size_t i = 0; i < gp.y0_grid.n; i += 40)
    CHECK((ch.phit[ch.idx3(i, 0, kmid)] - gp.psi[gp.idx(i, 0)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  // time symmetry makes sigma vanish identically here
  for (std::size_t k = 0; k < ch.yn_grid.n; ++k)
    CHECK(std::abs(ch.sigma[ch.idx_jk(0, k)]) < 1e-9);

  auto mc = mean_curvature(ch);
  for (std::size_t i = 5; i + 5 < gp.y0_grid.n; i += 20) {
    CHECK(std::abs(std::abs(mc.H[i]) - 1.0 / r0) < 1e-6);
    CHECK(std::abs(mc.H[i] - mc.H_div[i]) < 1e-6);
  }

  // corner condition: the |y0| = T edges of the box stay away from t = 0
  for (std::size_t k = 0; k < ch.yn_grid.n; ++k) {
    CHECK(std::abs(ch.phit[ch.idx3(0, 0, k)][0]) > T / 2.0);
    CHECK(std::abs(ch.phit[ch.idx3(gp.y0_grid.n - 1, 0, k)][0]) > T / 2.0);
  }

  // eikonal residual on |yn| <= rho/2
  std::vector<Vec> pts;
  for (double th = -0.5; th <= 0.5; th += 0.25)
    for (double dr : {-0.15, -0.05, 0.05, 0.15}) {
      const Vec x = polar_map(th, r0 - dr);
      pts.push_back(x);
    }
  auto eik = eikonal_residual(ch, pts, 0.02);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    CHECK(eik[q].residual < 1e-6);
    // d_gamma is the signed distance r0 - r, positive toward the origin
    const Vec tr = polar_inverse(pts[q][0], pts[q][1]);
    CHECK(std::abs(eik[q].d_value - (r0 - tr[1])) < 1e-8);
    CHECK(eik[q].ratio_4_14 < 1.0);
  }
  // d_gamma vanishes on Gamma itself
  CHECK(std::abs(ch.d_gamma(polar_map(0.3, r0))) < 1e-8);
}

TEST_CASE("normal chart of a straight line: zero curvature, flat constants") {
  auto m = minkowski(1);
  auto gp = build_gamma_param(m, static_line(0.5), 0.5, v1(0.0), 51);
  ChartGrid cg;
  cg.n_yn = 17;
  auto ch = build_normal_chart(m, gp, 0.3, cg);
  auto mc = mean_curvature(ch);
  for (double H : mc.H) CHECK(std::abs(H) < 1e-10);

  auto etc = energy_tensor_constants(ch);
  const std::size_t kmid = ch.yn_grid.n / 2;
  const Mat& a0 = etc.a[ch.idx3(25, 0, kmid)];
  CHECK((a0 - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(etc.c2 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(etc.c3 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(etc.c4 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(etc.c5 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cylinder over a circle: |H| = 1/R at the t = 0 slice") {
  auto m = minkowski(2);
  const double R = 1.0;
  Vec inside(2);
  inside << 0.0, 0.0;
  auto gp = build_gamma_param(m, static_circle(R), 0.2, inside, 17, 128);
  ChartGrid cg;
  cg.n_yn = 33;
  auto ch = build_normal_chart(m, gp, 0.3, cg);
  auto mc = mean_curvature(ch);
  const std::size_t mid = gp.y0_grid.n / 2;
  for (std::size_t j = 0; j < gp.yp_grid.n; j += 8) {
    CHECK(std::abs(std::abs(mc.H[mid * gp.yp_grid.n + j]) - 1.0 / R) < 1e-5);
    CHECK(std::abs(mc.H[mid * gp.yp_grid.n + j] -
                   mc.H_div[mid * gp.yp_grid.n + j]) < 1e-5);
  }
}

namespace {
// A time-dependent conformal factor: for static metrics the shift sigma
// vanishes identically (normal geodesics launched in the t = 0 slice stay
// in it), which makes the off-diagonal block exactly zero.  Time dependence
// exercises the generic case.
LorentzMetric wavy_metric() {
  LorentzMetric m;
  m.dim_n = 1;
  m.name = "wavy";
  auto lam = [](const Vec& x) { return 0.1 * std::sin(x[1] + 0.6 * x[0]); };
  m.h = [lam](const Vec& x) {
    const double w = std::exp(2.0 * lam(x));
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = -w;
    g(1, 1) = w;
    return g;
  };
  m.dh = fd_metric_derivs(m.h, 2);
  m.c1 = std::exp(-0.2) * 0.99;
  return m;
}

// chart for an asymmetric prescribed-curvature curve in the wavy metric
struct ConformalFixture {
  LorentzMetric m = wavy_metric();
  NormalChart ch;
  std::function<double(const Vec&)> kappa;
  ConformalFixture() {
    kappa = [](const Vec& x) { return 0.8 + 0.3 * x[0]; };
    const double x_start = 0.3;
    const double lam0 = std::exp(-0.1 * std::sin(x_start));
    auto curve =
        mc_curve(m, kappa, pt(0.0, x_start), pt(lam0, 0.0), 1.6, 0.005);
    auto surf = surface_from_curve(curve);
    auto gp = build_gamma_param(m, surf, 0.6, v1(-5.0), 201);
    ChartGrid cg;
    cg.n_yn = 33;
    ch = build_normal_chart(m, gp, 0.3, cg);
  }
};
}  // namespace

TEST_CASE("conformal chart: sigma bounds, block orders, curvature round trip") {
  ConformalFixture fx;
  auto& ch = fx.ch;
  const std::size_t kmid = ch.yn_grid.n / 2;

  // sigma(0) = 0, d sigma/d yn (0) = 0, |sigma| <= C yn^2
  CHECK(std::abs(ch.sigma[ch.idx_jk(0, kmid)]) < 1e-10);
  CHECK(std::abs(ch.dsig_n[ch.idx_jk(0, kmid)]) < 1e-6);
  double Cfit = 0.0;
  for (std::size_t k = 0; k < ch.yn_grid.n; ++k) {
    const double yn = ch.yn_grid[k];
    if (std::abs(yn) > 1e-9)
      Cfit = std::max(Cfit, std::abs(ch.sigma[ch.idx_jk(0, k)]) / (yn * yn));
  }
  CHECK(Cfit < 10.0);
  CHECK(Cfit > 0.0);  // sigma genuinely quadratic, not identically zero

  // block decay orders under yn halving at a mid-time row
  const std::size_t i = ch.gp.y0_grid.n / 2 + 30;
  const std::size_t k1 = kmid + (ch.yn_grid.n - 1) / 4;  // yn = rho/2
  const std::size_t k2 = kmid + (ch.yn_grid.n - 1) / 8;  // yn = rho/4
  const double g0n_1 = ch.g[ch.idx3(i, 0, k1)](0, 1);
  const double g0n_2 = ch.g[ch.idx3(i, 0, k2)](0, 1);
  const double ord_0n = std::log2(std::abs(g0n_1 / g0n_2));
  CHECK(ord_0n > 0.7);
  CHECK(ord_0n < 1.3);
  const double gnn_1 = ch.g[ch.idx3(i, 0, k1)](1, 1) - 1.0;
  const double gnn_2 = ch.g[ch.idx3(i, 0, k2)](1, 1) - 1.0;
  const double ord_nn = std::log2(std::abs(gnn_1 / gnn_2));
  CHECK(ord_nn > 1.7);
  CHECK(ord_nn < 2.3);
  // tangential block: g_00 - gamma_00 decays linearly
  const double gam00 = ch.gp.gamma_ab[ch.gp.idx(i, 0)](0, 0);
  const double g00_1 = ch.g[ch.idx3(i, 0, k1)](0, 0) - gam00;
  const double g00_2 = ch.g[ch.idx3(i, 0, k2)](0, 0) - gam00;
  const double ord_00 = std::log2(std::abs(g00_1 / g00_2));
  CHECK(ord_00 > 0.7);
  CHECK(ord_00 < 1.3);

  // mean curvature round trip against the prescribed kappa
  auto mc = mean_curvature(ch);
  for (std::size_t q = 10; q + 10 < ch.gp.y0_grid.n; q += 20) {
    const double target = fx.kappa(ch.gp.psi[ch.gp.idx(q, 0)]);
    CHECK(std::abs(std::abs(mc.H[q]) - target) < 1e-3);
  }
}

TEST_CASE("energy tensor constants: properties and brute-force oracle") {
  ConformalFixture fx;
  auto& ch = fx.ch;
  auto etc = energy_tensor_constants(ch);
  CHECK(etc.c2 > 0.0);
  CHECK(etc.c4 >= 1.0 - 1e-12);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * EIGEN_PI);
  std::uniform_int_distribution<std::size_t> pick_i(0, ch.gp.y0_grid.n - 1);
  std::uniform_int_distribution<std::size_t> pick_k(0, ch.yn_grid.n - 1);

  // c5 defining property on 1000 random samples
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t q = ch.idx3(pick_i(rng), 0, pick_k(rng));
    const double a = ang(rng);
    Vec xi(2);
    xi << std::cos(a), std::sin(a);
    const Mat ginv = ch.g[q].inverse();
    const double lhs = std::abs((ginv.row(1) * xi)(0, 0) * xi[0]);
    const double rhs = 0.5 * etc.c5 * xi.dot(etc.a[q] * xi);
    CHECK(lhs <= rhs + 1e-10);
  }

  // brute-force maximization over a dense (xi, node) sample within 5%
  double c2_bf = 0.0, c4_bf = 0.0, c5_bf = 0.0;
  for (std::size_t i = 0; i < ch.gp.y0_grid.n; i += 4)
    for (std::size_t k = 0; k < ch.yn_grid.n; ++k) {
      const std::size_t q = ch.idx3(i, 0, k);
      const double yn = ch.yn_grid[k];
      const Mat& a = etc.a[q];
      const Mat ginv = ch.g[q].inverse();
      for (int s = 0; s < 90; ++s) {
        const double th = EIGEN_PI * s / 90.0;
        Vec xi(2);
        xi << std::cos(th), std::sin(th);
        const double axx = xi.dot(a * xi);
        const double Q1 = 0.5 * a(0, 0) * xi[0] * xi[0] +
                          (1.0 + yn * yn) * xi[1] * xi[1];
        if (yn * yn > 1e-12)
          c2_bf = std::max(c2_bf, (Q1 / axx - 1.0) / (yn * yn));
        c4_bf = std::max(c4_bf, xi[0] * xi[0] / (a(0, 0) * xi[0] * xi[0]));
        c5_bf = std::max(
            c5_bf, 2.0 * std::abs((ginv.row(1) * xi)(0, 0) * xi[0]) / axx);
      }
    }
  CHECK(c2_bf <= etc.c2 * 1.0001);
  CHECK(c2_bf > 0.95 * etc.c2);
  CHECK(c5_bf <= etc.c5 * 1.0001);
  CHECK(c5_bf > 0.95 * etc.c5);
  CHECK(c4_bf <= etc.c4 * 1.0001);
}

TEST_CASE("pullback_metric: identity map and the wedge map") {
  auto m = conformal_metric(0.1, 1.0);
  auto ident = [](const Vec& y) { return y; };
  const Vec y = pt(0.2, 0.5);
  CHECK((pullback_metric(ident, m, y) - m.h(y)).cwiseAbs().maxCoeff() < 1e-9);

  auto mink = minkowski(1);
  auto wedge = [](const Vec& y) { return polar_map(y[0], y[1]); };
  const Vec thr = pt(0.4, 1.3);
  const Mat g = pullback_metric(wedge, mink, thr);
  CHECK(g(0, 0) == doctest::Approx(-thr[1] * thr[1]).epsilon(1e-9));
  CHECK(g(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(g(0, 1)) < 1e-9);
}

TEST_CASE("chart csv export has header and full grid") {
  auto m = minkowski(1);
  auto gp = build_gamma_param(m, static_line(0.5), 0.3, v1(0.0), 21);
  ChartGrid cg;
  cg.n_yn = 9;
  auto ch = build_normal_chart(m, gp, 0.2, cg);
  std::ostringstream os;
  export_chart_csv(os, ch);
  const std::string out = os.str();
  CHECK(out.find("# chart rho=") == 0);
  CHECK(out.find("y0,yn,phi0,phi1,g00,g01,g10,g11,sigma,residual") !=
        std::string::npos);
  std::size_t rows = 0;
  for (char c : out)
    if (c == '\n') ++rows;
  CHECK(rows == gp.y0_grid.n * ch.yn_grid.n + 2);
}

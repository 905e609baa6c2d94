#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frontlab/common.hpp"

using namespace frontlab;

TEST_CASE("cutoff is exactly 1 inside and 0 outside, smooth between") {
  const double rho = 0.6;
  CHECK(cutoff_chi(0.0, rho) == 1.0);
  CHECK(cutoff_chi(rho / 3.0, rho) == 1.0);
  CHECK(cutoff_chi(-0.19, rho) == 1.0);
  CHECK(cutoff_chi(2.0 * rho / 3.0, rho) == 0.0);
  CHECK(cutoff_chi(-5.0, rho) == 0.0);
  const double mid = cutoff_chi(rho / 2.0, rho);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  // symmetric, monotone on the ramp
  CHECK(cutoff_chi(0.25, rho) == cutoff_chi(-0.25, rho));
  double prev = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double s = rho / 3.0 + (rho / 3.0) * i / 50.0;
    const double c = cutoff_chi(s, rho);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
}

TEST_CASE("lagrange4 reproduces cubics exactly") {
  auto g = make_grid(-1.0, 2.0, 31);
  auto cube = [](double x) { return 2.0 + x - 3.0 * x * x + 0.5 * x * x * x; };
  std::vector<double> v(g.n);
  for (std::size_t i = 0; i < g.n; ++i) v[i] = cube(g[i]);
  for (double x : {-0.97, -0.5, 0.013, 1.2, 1.995})
    CHECK(lagrange4(g, v, x) == doctest::Approx(cube(x)).epsilon(1e-13));
}

TEST_CASE("hermite reproduces cubics exactly given exact derivatives") {
  auto g = make_grid(0.0, 1.0, 11);
  auto f = [](double x) { return 1.0 - 2.0 * x + x * x * x; };
  auto df = [](double x) { return -2.0 + 3.0 * x * x; };
  std::vector<double> v(g.n), dv(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    v[i] = f(g[i]);
    dv[i] = df(g[i]);
  }
  for (double x : {0.03, 0.55, 0.999})
    CHECK(hermite(g, v, dv, x) == doctest::Approx(f(x)).epsilon(1e-13));
}

TEST_CASE("deriv4 converges at 4th order on a smooth function") {
  auto err_at = [](std::size_t n) {
    auto g = make_grid(0.0, 1.0, n);
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) v[i] = std::sin(3.0 * g[i]);
    auto d = deriv4(v, g.dx);
    double e = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
      e = std::max(e, std::abs(d[i] - 3.0 * std::cos(3.0 * g[i])));
    return e;
  };
  const double e1 = err_at(51), e2 = err_at(101);
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.5);
  CHECK(order < 4.6);
}

TEST_CASE("adaptive simpson hits tight tolerances") {
  const double got = integrate([](double x) { return std::exp(-x * x); },
                               0.0, 2.0, 1e-13);
  CHECK(got == doctest::Approx(0.8820813907624215).epsilon(1e-12));
}

TEST_CASE("rk45 integrates a stiff-ish oscillator accurately") {
  // y'' = -25 y, y(0)=1, y'(0)=0 -> y = cos(5t)
  auto rhs = [](double, const Vec& y) {
    Vec d(2);
    d[0] = y[1];
    d[1] = -25.0 * y[0];
    return d;
  };
  Vec y(2);
  y << 1.0, 0.0;
  double t = 0.0;
  rk45_advance(rhs, t, y, 3.0);
  CHECK(y[0] == doctest::Approx(std::cos(15.0)).epsilon(1e-8));
  CHECK(y[1] == doctest::Approx(-5.0 * std::sin(15.0)).epsilon(1e-8));
}

TEST_CASE("rk45 reports step-budget exhaustion") {
  OdeOptions opt;
  opt.max_steps = 10;
  auto rhs = [](double, const Vec& y) { return Vec(-y); };
  Vec y(1);
  y << 1.0;
  double t = 0.0;
  CHECK_THROWS_AS(rk45_advance(rhs, t, y, 100.0, opt), IntegrationFailed);
}

TEST_CASE("linfit recovers an exact line") {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double xi : x) y.push_back(0.7 - 1.3 * xi);
  auto [a, b] = linfit(x, y);
  CHECK(a == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(b == doctest::Approx(-1.3).epsilon(1e-13));
}

TEST_CASE("golden_min finds the minimum of a parabola") {
  const double m = golden_min([](double x) { return (x - 0.3) * (x - 0.3); },
                              -2.0, 5.0);
  CHECK(m == doctest::Approx(0.3).epsilon(1e-7));
}

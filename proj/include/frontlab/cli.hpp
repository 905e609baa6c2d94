#pragma once

// Config-driven experiment runner: single runs, eps-sweeps, chart
// self-tests, profile/decomposition tools and convergence reports.  All
// logic lives here so tests can call the commands without spawning a
// process; tools/frontlab_cli.cpp is a thin main().

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <CLI11.hpp>

#include "frontlab/chart.hpp"
#include "frontlab/diagnostics.hpp"
#include "frontlab/io.hpp"

namespace frontlab::cli {

namespace fs = std::filesystem;

// exit codes
constexpr int kPass = 0;
constexpr int kAssertFailed = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Assertion {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
};

inline ordered_json assertions_json(const std::vector<Assertion>& as) {
  ordered_json arr = ordered_json::array();
  for (const Assertion& a : as)
    arr.push_back(ordered_json{{"name", a.name},
                               {"value", a.value},
                               {"bound", a.bound},
                               {"passed", a.passed}});
  return arr;
}

inline bool all_passed(const std::vector<Assertion>& as) {
  for (const Assertion& a : as)
    if (!a.passed) return false;
  return true;
}

/// interface reference for a flat constant-kappa run: the hyperbola through
/// (0, r0) with curvature radius 1/kappa (a static line when kappa = 0)
inline std::function<double(double)> flat_reference(double kappa, double r0) {
  if (kappa == 0.0)
    return [r0](double) { return r0; };
  const double R = 1.0 / kappa;
  return [r0, R](double t) { return r0 - R + std::sqrt(R * R + t * t); };
}

inline std::pair<double, double> track_window(const ExperimentSpec& s,
                                              const Trajectory& tr) {
  if (s.track.window_lo < s.track.window_hi)
    return {s.track.window_lo, s.track.window_hi};
  const FieldState& f = tr.frames.front();
  const UniformGrid g = f.grid();
  return {g.x0 + 4.0 * g.dx, g.back() - 4.0 * g.dx};
}

/// zeta1 of the t = 0 slice through the polar functionals; the data window
/// [r0 - w, r0 + w] must contain the full transition band
inline ZetaPolar zeta_polar_initial(const Trajectory& tr, const RunConfig& c) {
  TrajectoryInterp in(tr, true);
  const double dx = tr.frames.front().dx;
  const double w = c.data.rho + 3.0 * dx;
  UniformGrid rg{c.data.r0 - w, dx,
                 std::size_t(std::lround(2.0 * w / dx)) + 1};
  PolarSlice sl = energy_polar(in, 0.0, rg, c.well, c.eps);
  return zeta_polar(sl, c.well, c.eps, c.data.r0);
}

// ---------------------------------------------------------------------------
// run

inline int cmd_run(const ExperimentSpec& spec, const fs::path& out,
                   bool do_assert) {
  const RunConfig& c = spec.base;
  const Trajectory tr = run(c);
  fs::create_directories(out);
  write_snapshot(out, "initial", tr.frames.front(), c);
  write_snapshot(out, "final", tr.frames.back(), c);

  const LorentzMetric m = parse_metric(c.metric, 1);
  auto total_energy = [&](const FieldState& s) {
    const std::vector<double> e = energy_ambient(s, m, c.well, c.eps);
    return trapezoid(e, s.dx);
  };

  ordered_json diag;
  diag["energy_initial"] = total_energy(tr.frames.front());
  diag["energy_final"] = total_energy(tr.frames.back());
  const ZetaPolar z0 = zeta_polar_initial(tr, c);
  diag["zeta1_initial"] = z0.zeta1;
  diag["zeta2_initial"] = z0.zeta2;

  std::vector<Assertion> as;
  const bool flat_const = c.metric == "minkowski" && !c.kappa_fn;
  if (spec.track.enabled) {
    const auto [wa, wb] = track_window(spec, tr);
    InterfaceTrack track = track_interface(tr, wa, wb);
    std::vector<std::vector<double>> rows;
    double sup_err = 0.0;
    std::function<double(double)> ref;
    if (flat_const) ref = flat_reference(c.kappa, c.data.r0);
    for (std::size_t i = 0; i < track.times.size(); ++i) {
      std::vector<double> row{track.times[i], track.positions[i]};
      if (ref) {
        const double r = ref(track.times[i]);
        row.push_back(r);
        row.push_back(std::abs(track.positions[i] - r));
        sup_err = std::max(sup_err, row.back());
      }
      rows.push_back(std::move(row));
    }
    write_csv(out / "track.csv",
              ref ? "t,position,reference,abs_error" : "t,position", rows);
    diag["interface_sup_error"] = ref ? sup_err : 0.0;
    if (ref) {
      const double bound =
          c.kappa == 0.0 ? tr.frames.front().dx : 2.0 * c.eps;
      as.push_back({"interface_error", sup_err, bound, sup_err <= bound});
    }
  }

  ordered_json rep;
  rep["kind"] = "run";
  rep["version"] = version_string();
  rep["config"] = resolved_run_json(c);
  rep["diagnostics"] = diag;
  rep["assertions"] = assertions_json(as);
  rep["passed"] = all_passed(as);
  write_json(out / "report.json", rep);
  return (do_assert && !all_passed(as)) ? kAssertFailed : kPass;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
  double eps = 0.0;
  double interface_err = 0.0;  // sup_t |x_eps - reference|
  double l2 = 0.0;             // space-time int |u - sign|^2
  double zeta1_0 = 0.0;
};

inline int cmd_sweep(const ExperimentSpec& spec, const fs::path& out,
                     unsigned jobs, bool do_assert) {
  const std::size_t n = spec.sweep_eps.size();
  std::vector<SweepRow> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        RunConfig c = spec.base;
        c.eps = spec.sweep_eps[i];
        c.dx = 0.0;  // per-eps default dx = eps/8
        const Trajectory tr = run(c);
        SweepRow& r = rows[i];
        r.eps = c.eps;
        auto ref = flat_reference(c.kappa, c.data.r0);
        const auto [wa, wb] = track_window(spec, tr);
        r.interface_err = track_error(track_interface(tr, wa, wb), ref);
        r.l2 = l2_distance_to_sign(tr, ref);
        r.zeta1_0 = zeta_polar_initial(tr, c).zeta1;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned nw = std::max(1u, std::min<unsigned>(jobs, unsigned(n)));
  for (unsigned w = 0; w + 1 < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // scaling table: (quantity, eps, scaled value, ratio to previous)
  struct Quantity {
    std::string name;
    std::function<double(const SweepRow&)> scaled;
  };
  const std::vector<Quantity> quantities{
      {"interface_err_over_eps",
       [](const SweepRow& r) { return r.interface_err / r.eps; }},
      {"l2_over_eps", [](const SweepRow& r) { return r.l2 / r.eps; }},
      {"zeta1_0_over_eps2",
       [](const SweepRow& r) { return r.zeta1_0 / (r.eps * r.eps); }}};

  std::vector<Assertion> as;
  fs::create_directories(out);
  std::ofstream os(out / "sweep.csv");
  if (!os) throw ConfigError("cannot write " + (out / "sweep.csv").string());
  os << "quantity,eps,value,ratio_prev,pass\n";
  const double dx0 = resolve_dx([&] {
    RunConfig c = spec.base;
    c.eps = spec.sweep_eps.front();
    c.dx = 0.0;
    return c;
  }());
  for (const Quantity& q : quantities) {
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = q.scaled(rows[i]);
      const double ratio = i ? v / prev : 0.0;
      bool pass = true;
      if (q.name == "interface_err_over_eps" && spec.base.kappa == 0.0) {
        // static interface: absolute positions stay within one cell
        pass = rows[i].interface_err <= dx0;
      } else if (i) {
        pass = ratio >= 0.25 && ratio <= 4.0;
      }
      if (i || q.name == "interface_err_over_eps")
        as.push_back({q.name + "@eps=" + fmt17(rows[i].eps),
                      i ? ratio : rows[i].interface_err,
                      i ? 4.0 : dx0, pass});
      os << q.name << "," << fmt17(rows[i].eps) << "," << fmt17(v) << ","
         << fmt17(ratio) << "," << (pass ? 1 : 0) << "\n";
      prev = v;
    }
  }
  os.close();

  ordered_json rep;
  rep["kind"] = "sweep";
  rep["version"] = version_string();
  rep["config"] = resolved_run_json(spec.base);
  ordered_json eps_arr = ordered_json::array();
  for (double e : spec.sweep_eps) eps_arr.push_back(e);
  rep["sweep_eps"] = eps_arr;
  rep["assertions"] = assertions_json(as);
  rep["passed"] = all_passed(as);
  write_json(out / "report.json", rep);
  return (do_assert && !all_passed(as)) ? kAssertFailed : kPass;
}

// ---------------------------------------------------------------------------
// chart-test

/// conformal factor with genuine time dependence so the gauge shift sigma is
/// exercised; "wavy:<amp>" in a chart spec selects it
inline LorentzMetric wavy_metric(double amp) {
  LorentzMetric m;
  m.dim_n = 1;
  m.name = "wavy";
  auto lam = [amp](const Vec& x) {
    return amp * std::sin(x[1] + 0.6 * x[0]);
  };
  m.h = [lam](const Vec& x) {
    const double w = std::exp(2.0 * lam(x));
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = -w;
    g(1, 1) = w;
    return g;
  };
  m.dh = fd_metric_derivs(m.h, 2);
  m.c1 = std::exp(-2.0 * amp) * 0.99;
  return m;
}

inline LorentzMetric chart_metric(const std::string& name) {
  if (name.rfind("wavy:", 0) == 0) {
    const double amp = std::stod(name.substr(5));
    if (!(amp > 0.0 && amp < 0.5))
      throw ConfigError("chart: wavy amplitude must lie in (0, 0.5)");
    return wavy_metric(amp);
  }
  return parse_metric(name, 1);
}

inline int cmd_chart_test(const ExperimentSpec& spec, const fs::path& out,
                          bool do_assert) {
  const ChartSpec& cs = spec.chart;
  const LorentzMetric m = chart_metric(cs.metric);
  const bool minkowski_case = cs.metric == "minkowski";

  Vec x0(2);
  x0 << 0.0, cs.x_start;
  Vec T0(2);
  T0 << 1.0 / std::sqrt(-m.h(x0)(0, 0)), 0.0;
  const double kap = cs.kappa;
  auto curve = mc_curve(
      m, [kap](const Vec&) { return kap; }, x0, T0, cs.tau_span, 0.005);
  Vec interior(1);
  interior << cs.interior_x;
  auto gp = build_gamma_param(m, surface_from_curve(curve), cs.T, interior,
                              cs.n_y0);
  ChartGrid cg;
  cg.n_yn = cs.n_yn;
  auto ch = build_normal_chart(m, gp, cs.rho, cg);

  std::vector<Assertion> as;
  const std::size_t n0 = gp.y0_grid.n, nk = ch.yn_grid.n, kmid = nk / 2;

  // Gauss-lemma block structure of the uncorrected pullback
  double nn_dev = 0.0, an_dev = 0.0;
  for (std::size_t i = 0; i < n0; i += 5)
    for (std::size_t k = 0; k < nk; ++k) {
      const Mat& gt = ch.gt[ch.idx3(i, 0, k)];
      nn_dev = std::max(nn_dev, std::abs(gt(1, 1) - 1.0));
      an_dev = std::max(an_dev, std::abs(gt(0, 1)));
    }
  as.push_back({"gt_nn_minus_1", nn_dev, 1e-6, nn_dev < 1e-6});
  as.push_back({"gt_an", an_dev, 1e-6, an_dev < 1e-6});

  // gauge shift vanishes to second order on Gamma
  const double sig_bound = minkowski_case ? 1e-8 : 1e-6;
  const double sig0 = std::abs(ch.sigma[ch.idx_jk(0, kmid)]);
  const double dsig0 = std::abs(ch.dsig_n[ch.idx_jk(0, kmid)]);
  as.push_back({"sigma_on_gamma", sig0, sig_bound, sig0 < sig_bound});
  as.push_back({"dsigma_dyn_on_gamma", dsig0, sig_bound, dsig0 < sig_bound});

  // eikonal residual of the signed distance at interior sample points
  double eik_worst = 0.0;
  std::vector<Vec> pts;
  for (double f0 : {-0.4, 0.0, 0.4})
    for (double fn : {-0.25, -0.125, 0.125, 0.25}) {
      Vec y(2);
      y << f0 * cs.T, fn * cs.rho;
      pts.push_back(ch.phi(y));
    }
  for (const auto& smp : eikonal_residual(ch, pts, 0.02))
    eik_worst = std::max(eik_worst, smp.residual);
  as.push_back({"eikonal_residual", eik_worst, 1e-6, eik_worst < 1e-6});

  // mean curvature round trip against the prescribed kappa
  auto mc = mean_curvature(ch);
  double h_dev = 0.0;
  for (std::size_t i = 5; i + 5 < n0; i += 5)
    h_dev = std::max(h_dev, std::abs(std::abs(mc.H[i]) - kap));
  const double h_bound = minkowski_case ? 1e-6 : 1e-3;
  as.push_back({"mean_curvature_dev", h_dev, h_bound, h_dev < h_bound});

  if (!minkowski_case) {
    // yn-halving orders of the corrected metric blocks
    const std::size_t i = n0 / 2 + n0 / 8;
    const std::size_t k1 = kmid + (nk - 1) / 4, k2 = kmid + (nk - 1) / 8;
    auto ord = [&](auto get, double sub) {
      const double v1 = get(k1) - sub, v2 = get(k2) - sub;
      return std::log2(std::abs(v1 / v2));
    };
    const double o_an =
        ord([&](std::size_t k) { return ch.g[ch.idx3(i, 0, k)](0, 1); }, 0.0);
    const double o_nn =
        ord([&](std::size_t k) { return ch.g[ch.idx3(i, 0, k)](1, 1); }, 1.0);
    const double gam00 = gp.gamma_ab[gp.idx(i, 0)](0, 0);
    const double o_00 =
        ord([&](std::size_t k) { return ch.g[ch.idx3(i, 0, k)](0, 0); },
            gam00);
    as.push_back({"order_g_an", o_an, 0.3, std::abs(o_an - 1.0) < 0.3});
    as.push_back({"order_g_nn", o_nn, 0.3, std::abs(o_nn - 2.0) < 0.3});
    as.push_back({"order_g_00", o_00, 0.3, std::abs(o_00 - 1.0) < 0.3});
  }

  fs::create_directories(out);
  {
    std::ofstream os(out / "chart.csv");
    export_chart_csv(os, ch, false);
  }
  {
    std::ofstream os(out / "chart_test.csv");
    os << "check,value,bound,pass\n";
    for (const Assertion& a : as)
      os << a.name << "," << fmt17(a.value) << "," << fmt17(a.bound) << ","
         << (a.passed ? 1 : 0) << "\n";
  }
  ordered_json rep;
  rep["kind"] = "chart-test";
  rep["version"] = version_string();
  rep["chart"] = ordered_json{{"metric", cs.metric},
                              {"kappa", cs.kappa},
                              {"x_start", cs.x_start},
                              {"tau_span", cs.tau_span},
                              {"t_chart", cs.T},
                              {"rho", cs.rho},
                              {"n_y0", double(cs.n_y0)},
                              {"n_yn", double(cs.n_yn)},
                              {"interior_x", cs.interior_x}};
  rep["assertions"] = assertions_json(as);
  rep["passed"] = all_passed(as);
  write_json(out / "report.json", rep);
  return (do_assert && !all_passed(as)) ? kAssertFailed : kPass;
}

// ---------------------------------------------------------------------------
// profile / decompose / convergence

inline int cmd_profile(const ExperimentSpec& spec, const fs::path& out) {
  const Profile p =
      make_profile(quartic_well(), spec.profile.s_max, spec.profile.ds);
  std::vector<std::vector<double>> rows;
  double sup_dev = 0.0;
  for (std::size_t i = 0; i < p.grid.n; ++i) {
    const double s = p.grid[i];
    rows.push_back({s, p.q_vals[i], p.q_derivs[i]});
    sup_dev = std::max(sup_dev, std::abs(p.q_vals[i] - std::tanh(s)));
  }
  fs::create_directories(out);
  write_csv(out / "profile.csv", "s,q,dq", rows);
  ordered_json rep;
  rep["kind"] = "profile";
  rep["version"] = version_string();
  rep["profile"] =
      ordered_json{{"s_max", spec.profile.s_max}, {"ds", spec.profile.ds}};
  rep["sup_dev_from_tanh"] = sup_dev;
  rep["tail_c"] = p.tail_c;
  rep["tail_C"] = p.tail_C;
  write_json(out / "report.json", rep);
  return kPass;
}

inline int cmd_decompose(const ExperimentSpec& spec, const fs::path& out) {
  const std::vector<double> cf = spec.decompose.coeffs;
  auto f = [cf](double u) {
    double v = 0.0;
    for (std::size_t k = cf.size(); k-- > 0;) v = v * u + cf[k];
    return v;
  };
  const auto [well, kappa] = decompose(f, spec.decompose.eps);
  std::vector<std::vector<double>> rows;
  for (double u = -1.5; u <= 1.5 + 1e-12; u += 0.01)
    rows.push_back({u, well.F(u), well.f0(u), well.f1(u)});
  fs::create_directories(out);
  write_csv(out / "well.csv", "u,F,f0,f1", rows);
  ordered_json rep;
  rep["kind"] = "decompose";
  rep["version"] = version_string();
  ordered_json cj = ordered_json::array();
  for (double c : cf) cj.push_back(c);
  rep["decompose"] =
      ordered_json{{"coeffs", cj}, {"eps", spec.decompose.eps}};
  rep["kappa"] = kappa;
  rep["eps_kappa"] = kappa * spec.decompose.eps;
  rep["c0"] = well.c0;
  write_json(out / "report.json", rep);
  return kPass;
}

inline int cmd_convergence(const ExperimentSpec& spec, const fs::path& out,
                           bool do_assert) {
  RunConfig base = spec.base;
  if (!(base.T_final > 0.0))
    throw ConfigError("convergence: t_final must be positive");
  const double d0 = resolve_dx(base);
  std::vector<Trajectory> levels;
  std::vector<double> dxs;
  for (std::size_t k = 0; k < spec.convergence.levels; ++k) {
    RunConfig c = base;
    c.dx = d0 / double(1 << k);
    dxs.push_back(c.dx);
    levels.push_back(run(c));
  }
  const ConvergenceSpec& cv = spec.convergence;
  const double tc = cv.tc >= 0.0 ? cv.tc : 0.5 * base.T_final;
  const double Rt = cv.Rt >= 0.0 ? cv.Rt : 0.6 * base.T_final;
  const double xc =
      cv.xc >= 0.0 ? cv.xc : flat_reference(base.kappa, base.data.r0)(tc);
  const double Rx =
      cv.Rx >= 0.0 ? cv.Rx
                   : 1.4 * std::min(xc - base.x_min, base.x_max - xc);
  ResidualReport rep = energy_identity_residual(levels, base.well, base.eps,
                                                base.kappa, tc, xc, Rt, Rx);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < levels.size(); ++k)
    rows.push_back({dxs[k], rep.residuals[k],
                    k ? rep.orders[k - 1] : 0.0});
  fs::create_directories(out);
  write_csv(out / "convergence.csv", "dx,residual,order_vs_prev", rows);

  std::vector<Assertion> as;
  for (std::size_t k = 0; k < rep.orders.size(); ++k)
    as.push_back({"order_level_" + std::to_string(k), rep.orders[k], 0.3,
                  std::abs(rep.orders[k] - 2.0) < 0.3});
  ordered_json j;
  j["kind"] = "convergence";
  j["version"] = version_string();
  j["config"] = resolved_run_json(base);
  j["window"] = ordered_json{{"tc", tc}, {"xc", xc}, {"rt", Rt}, {"rx", Rx}};
  j["assertions"] = assertions_json(as);
  j["passed"] = all_passed(as);
  write_json(out / "report.json", j);
  return (do_assert && !all_passed(as)) ? kAssertFailed : kPass;
}

// ---------------------------------------------------------------------------
// dispatch

inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"interface dynamics laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  unsigned jobs = 1;
  bool do_assert = true;
  const std::vector<std::string> kinds{"run",     "sweep",     "chart-test",
                                       "profile", "decompose", "convergence"};
  for (const std::string& k : kinds) {
    CLI::App* sub = app.add_subcommand(k);
    sub->add_option("--config", config_path, "JSON experiment spec")
        ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads for sweeps");
    sub->add_flag("--assert,!--no-assert", do_assert,
                  "enable invariant assertions (default on)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    const ExperimentSpec spec = load_experiment(config_path);
    if (spec.kind != kind)
      throw ConfigError("config kind '" + spec.kind +
                        "' does not match subcommand '" + kind + "'");
    const fs::path out(out_dir);
    if (kind == "run") return cmd_run(spec, out, do_assert);
    if (kind == "sweep") return cmd_sweep(spec, out, jobs, do_assert);
    if (kind == "chart-test") return cmd_chart_test(spec, out, do_assert);
    if (kind == "profile") return cmd_profile(spec, out);
    if (kind == "decompose") return cmd_decompose(spec, out);
    return cmd_convergence(spec, out, do_assert);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kRuntimeError;
  }
}

}  // namespace frontlab::cli

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "frontlab/cli.hpp"

using namespace frontlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("frontlab_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "spec.json";
  std::ofstream os(p);
  os << text;
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "frontlab_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::dispatch(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ordered_json read_json(const fs::path& p) {
  return ordered_json::parse(slurp(p));
}

}  // namespace

TEST_CASE("experiment parsing: defaults, strictness, validation") {
  ordered_json j{{"kind", "run"}};
  ExperimentSpec s = parse_experiment(j);
  CHECK(s.base.eps == 0.1);
  CHECK(s.base.well.name == "quartic");

  CHECK_THROWS_AS(parse_experiment(ordered_json{{"kind", "bogus"}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment(ordered_json{{"kind", "run"}, {"x", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment(ordered_json{
          {"kind", "run"}, {"run", ordered_json{{"epz", 0.1}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      parse_experiment(ordered_json{
          {"kind", "run"}, {"run", ordered_json{{"eps", "hi"}}}}),
      ConfigError);
  // sweep_eps must be strictly decreasing in (0, 1], two or more for sweeps
  CHECK_THROWS_AS(
      parse_experiment(ordered_json{{"kind", "sweep"},
                                    {"sweep_eps", {0.05, 0.1}}}),
      ConfigError);
  CHECK_THROWS_AS(
      parse_experiment(ordered_json{{"kind", "sweep"}, {"sweep_eps", {0.1}}}),
      ConfigError);
  CHECK_THROWS_AS(
      parse_experiment(ordered_json{{"kind", "sweep"},
                                    {"sweep_eps", {1.5, 0.1}}}),
      ConfigError);
  CHECK_THROWS_AS(parse_experiment(ordered_json{{"kind", "decompose"}}),
                  ConfigError);
}

TEST_CASE("fmt17 round-trips doubles exactly") {
  for (double v : {0.1, 4.0 / 3.0, 1e-17, -0.4999999999999999, 1.0 / 7.0}) {
    CHECK(std::stod(fmt17(v)) == v);
  }
  ordered_json j;
  j["a"] = 1.0 / 3.0;
  j["b"] = ordered_json::array({2.0 / 7.0, 5.0});
  std::stringstream ss;
  dump17(j, ss);
  ordered_json back = ordered_json::parse(ss.str());
  CHECK(back["a"].get<double>() == 1.0 / 3.0);
  CHECK(back["b"][0].get<double>() == 2.0 / 7.0);
}

TEST_CASE("run command: artifacts, assertions, determinism") {
  const fs::path dir = fresh_dir("run");
  const fs::path cfg = write_config(dir, R"({
    "kind": "run",
    "run": {"eps": 0.1, "kappa": 1.0, "x_min": 0.05, "x_max": 6.0,
            "t_final": 0.75}
  })");
  const fs::path out1 = dir / "out1", out2 = dir / "out2";
  CHECK(run_cli({"run", "--config", cfg.string(), "--out", out1.string()}) ==
        0);
  CHECK(run_cli({"run", "--config", cfg.string(), "--out", out2.string()}) ==
        0);

  ordered_json rep = read_json(out1 / "report.json");
  CHECK(rep["kind"] == "run");
  CHECK(rep["passed"] == true);
  CHECK(rep["config"]["dx"].get<double>() == 0.1 / 8.0);
  CHECK(rep["assertions"][0]["name"] == "interface_error");
  CHECK(rep["assertions"][0]["value"].get<double>() <= 0.2);
  CHECK(rep["diagnostics"]["zeta1_initial"].get<double>() > 0.0);

  // byte-identical artifacts on identical specs
  CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
  CHECK(slurp(out1 / "final.csv") == slurp(out2 / "final.csv"));
  CHECK(slurp(out1 / "track.csv") == slurp(out2 / "track.csv"));

  // snapshot sidecar matches the grid
  ordered_json side = read_json(out1 / "initial.json");
  CHECK(side["t"].get<double>() == 0.0);
  CHECK(side["dx"].get<double>() == 0.1 / 8.0);
}

TEST_CASE("run command: T_final = 0 still reports initial diagnostics") {
  const fs::path dir = fresh_dir("run0");
  const fs::path cfg = write_config(dir, R"({
    "kind": "run",
    "run": {"eps": 0.1, "kappa": 1.0, "x_min": 0.05, "x_max": 6.0,
            "t_final": 0.0}
  })");
  CHECK(run_cli({"run", "--config", cfg.string(), "--out",
                 (dir / "out").string()}) == 0);
  ordered_json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["diagnostics"]["energy_initial"].get<double>() ==
        doctest::Approx(4.0 / 3.0).epsilon(5e-3));
}

TEST_CASE("exit codes: config, mismatch, runtime") {
  const fs::path dir = fresh_dir("codes");
  const fs::path bad = write_config(dir, R"({
    "kind": "run", "run": {"cfl": 1.5}
  })");
  CHECK(run_cli({"run", "--config", bad.string()}) == 2);
  CHECK(run_cli({"sweep", "--config", bad.string()}) == 2);  // kind mismatch
  CHECK(run_cli({"run", "--config", (dir / "absent.json").string()}) == 2);
  CHECK(run_cli({"run"}) == 2);  // missing required --config

  // oversized chart radius hits a caustic: runtime failure
  const fs::path caustic = (dir / "caustic.json");
  std::ofstream(caustic) << R"({
    "kind": "chart-test",
    "chart": {"metric": "minkowski", "kappa": 1.0, "rho": 1.4}
  })";
  CHECK(run_cli({"chart-test", "--config", caustic.string(), "--out",
                 (dir / "out").string()}) == 3);
}

TEST_CASE("sweep command: scaling table and kappa = 0 static rows") {
  const fs::path dir = fresh_dir("sweep");
  const fs::path cfg = write_config(dir, R"({
    "kind": "sweep",
    "run": {"kappa": 1.0, "x_min": 0.05, "x_max": 6.0, "t_final": 0.75},
    "sweep_eps": [0.1, 0.05]
  })");
  const fs::path out = dir / "out";
  CHECK(run_cli({"sweep", "--config", cfg.string(), "--out", out.string(),
                 "--jobs", "2"}) == 0);
  const std::string table = slurp(out / "sweep.csv");
  CHECK(table.find("interface_err_over_eps") != std::string::npos);
  CHECK(table.find("l2_over_eps") != std::string::npos);
  CHECK(table.find("zeta1_0_over_eps2") != std::string::npos);
  ordered_json rep = read_json(out / "report.json");
  CHECK(rep["passed"] == true);

  // deterministic across worker counts
  const fs::path out1 = dir / "out1";
  CHECK(run_cli({"sweep", "--config", cfg.string(), "--out", out1.string(),
                 "--jobs", "1"}) == 0);
  CHECK(slurp(out / "sweep.csv") == slurp(out1 / "sweep.csv"));

  // static front: interface rows bounded by one cell
  const fs::path cfg0 = write_config(dir, R"({
    "kind": "sweep",
    "run": {"kappa": 0.0, "x_min": -1.0, "x_max": 3.0, "t_final": 0.5},
    "sweep_eps": [0.1, 0.05]
  })");
  const fs::path out0 = dir / "out0";
  CHECK(run_cli({"sweep", "--config", cfg0.string(), "--out",
                 out0.string()}) == 0);
}

TEST_CASE("chart-test command: minkowski and wavy batteries") {
  const fs::path dir = fresh_dir("chart");
  const fs::path mink = write_config(dir, R"({
    "kind": "chart-test",
    "chart": {"metric": "minkowski", "kappa": 1.0, "x_start": 1.0,
              "tau_span": 1.6, "t_chart": 0.6, "rho": 0.3,
              "n_y0": 201, "n_yn": 33, "interior_x": -5.0}
  })");
  const fs::path outm = dir / "mink";
  CHECK(run_cli({"chart-test", "--config", mink.string(), "--out",
                 outm.string()}) == 0);
  ordered_json rep = read_json(outm / "report.json");
  CHECK(rep["passed"] == true);
  bool saw_curvature = false;
  for (const auto& a : rep["assertions"]) {
    CHECK(a["passed"] == true);
    if (a["name"] == "mean_curvature_dev") {
      saw_curvature = true;
      CHECK(a["value"].get<double>() < 1e-6);
    }
  }
  CHECK(saw_curvature);
  CHECK(slurp(outm / "chart_test.csv").find("eikonal_residual") !=
        std::string::npos);
  CHECK(fs::exists(outm / "chart.csv"));

  const fs::path wavy = (dir / "wavy.json");
  std::ofstream(wavy) << R"({
    "kind": "chart-test",
    "chart": {"metric": "wavy:0.1", "kappa": 0.8, "x_start": 0.3,
              "tau_span": 1.6, "t_chart": 0.6, "rho": 0.3,
              "n_y0": 201, "n_yn": 33, "interior_x": -5.0}
  })";
  const fs::path outw = dir / "wavy";
  CHECK(run_cli({"chart-test", "--config", wavy.string(), "--out",
                 outw.string()}) == 0);
  const std::string table = slurp(outw / "chart_test.csv");
  CHECK(table.find("order_g_an") != std::string::npos);
  CHECK(table.find("order_g_nn") != std::string::npos);
  CHECK(read_json(outw / "report.json")["passed"] == true);
}

TEST_CASE("profile and decompose commands") {
  const fs::path dir = fresh_dir("tools");
  const fs::path pcfg = write_config(dir, R"({
    "kind": "profile", "profile": {"s_max": 8.0, "ds": 0.005}
  })");
  const fs::path pout = dir / "prof";
  CHECK(run_cli({"profile", "--config", pcfg.string(), "--out",
                 pout.string()}) == 0);
  ordered_json prep = read_json(pout / "report.json");
  CHECK(prep["sup_dev_from_tanh"].get<double>() < 1e-8);

  const fs::path dcfg = (dir / "dec.json");
  std::ofstream(dcfg) << R"({
    "kind": "decompose",
    "decompose": {"coeffs": [0.1, -2.0, -0.1, 2.0], "eps": 0.05}
  })";
  const fs::path dout = dir / "dec";
  CHECK(run_cli({"decompose", "--config", dcfg.string(), "--out",
                 dout.string()}) == 0);
  ordered_json drep = read_json(dout / "report.json");
  CHECK(drep["eps_kappa"].get<double>() ==
        doctest::Approx(0.1).epsilon(1e-5));
  CHECK(drep["c0"].get<double>() == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("convergence command: second-order energy identity") {
  const fs::path dir = fresh_dir("conv");
  const fs::path cfg = write_config(dir, R"({
    "kind": "convergence",
    "run": {"eps": 0.1, "kappa": 1.0, "x_min": 0.05, "x_max": 6.0,
            "t_final": 0.75},
    "convergence": {"levels": 3}
  })");
  const fs::path out = dir / "out";
  CHECK(run_cli({"convergence", "--config", cfg.string(), "--out",
                 out.string()}) == 0);
  ordered_json rep = read_json(out / "report.json");
  CHECK(rep["passed"] == true);
  for (const auto& a : rep["assertions"])
    CHECK(std::abs(a["value"].get<double>() - 2.0) < 0.3);
}

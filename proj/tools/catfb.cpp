// catfb: scenario runner for the cat-state feedback simulator.
//
//   catfb prepare --scenario s.json [--out dir]
//   catfb run     --scenario s.json [--feedback on|off] [--out dir] [--seed N] [--workers N]
//   catfb wigner  --state state.txt [--extent 4] [--n-points 101] [--out dir] [--workers N]
//   catfb sweep   --scenario s.json --param p_probe|p_fb|p|gamma_tau --values v1,v2,...
//                 [--feedback on|off] [--out dir] [--workers N]
//
// Exit codes: 0 success, 2 validation, 3 truncation, 4 I/O or format.
#include "catfb/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <thread>

namespace {

using namespace catfb;

struct Args {
  std::string scenario;
  std::string out;
  std::string feedback = "on";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string state;
  double extent = 4.0;
  int n_points = 101;
  std::string param;
  std::vector<std::string> values;
};

int resolved_workers(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

cli::Scenario scenario_with_overrides(const Args& a) {
  cli::Scenario sc = cli::load_scenario(a.scenario);
  if (a.seed) sc.protocol.seed = a.seed;
  if (!a.out.empty()) sc.directory = a.out;
  cli::validate(sc);
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom-mediated feedback protection of cavity cat states"};
  app.require_subcommand(1);
  Args a;

  auto* prepare = app.add_subcommand("prepare", "write the conditionally prepared cat state");
  prepare->add_option("--scenario", a.scenario, "scenario JSON file")->required();
  prepare->add_option("--out", a.out, "output directory (overrides the scenario)");

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--scenario", a.scenario, "scenario JSON file")->required();
    sub->add_option("--feedback", a.feedback, "on or off")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    sub->add_option("--out", a.out, "output directory (overrides the scenario)");
    sub->add_option("--seed", a.seed, "trajectory seed (overrides the scenario)");
    sub->add_option("--workers", a.workers, "worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* run = app.add_subcommand("run", "run the feedback loop or free decay");
  add_run_flags(run);

  auto* wigner = app.add_subcommand("wigner", "Wigner grid of a saved state");
  wigner->add_option("--state", a.state, "state file")->required();
  wigner->add_option("--extent", a.extent, "half-width of the square grid")->capture_default_str();
  wigner->add_option("--n-points", a.n_points, "points per axis")->capture_default_str();
  wigner->add_option("--out", a.out, "output directory")->capture_default_str();
  wigner->add_option("--workers", a.workers, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "one run per parameter value");
  add_run_flags(sweep);
  sweep->add_option("--param", a.param, "p_probe, p_fb, p (both) or gamma_tau")->required();
  sweep->add_option("--values", a.values, "comma-separated values; fractions like 1/13 allowed")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  WarningLog warnings;
  try {
    const bool feedback = a.feedback == "on";
    if (*prepare) {
      const cli::Scenario sc = scenario_with_overrides(a);
      const auto s = cli::cmd_prepare(sc, sc.directory, &warnings);
      std::printf("%s", cli::summary_json(s).c_str());
    } else if (*run) {
      const cli::Scenario sc = scenario_with_overrides(a);
      const auto reports = cli::cmd_run(sc, feedback, sc.directory, resolved_workers(a.workers), &warnings);
      std::printf("%s\n", io::report_json(reports.back()).c_str());
    } else if (*wigner) {
      const std::string out = a.out.empty() ? "." : a.out;
      const auto grid = cli::cmd_wigner(a.state, a.extent, a.n_points, out, resolved_workers(a.workers));
      std::printf("min %s max %s integral %s\n", io::fmt17(grid.min()).c_str(),
                  io::fmt17(grid.max()).c_str(), io::fmt17(grid.integral()).c_str());
    } else if (*sweep) {
      const cli::Scenario sc = scenario_with_overrides(a);
      std::vector<double> values;
      for (const auto& v : a.values) values.push_back(cli::parse_value(v));
      const auto points =
          cli::cmd_sweep(sc, a.param, values, feedback, sc.directory, resolved_workers(a.workers), &warnings);
      std::printf("%s", cli::sweep_json(a.param, feedback, points).c_str());
    }
  } catch (const std::exception& e) {
    cli::print_warnings(warnings);
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::exit_code(e);
  }
  cli::print_warnings(warnings);
  return 0;
}

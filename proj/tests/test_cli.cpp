// Drives the catfb executable end to end.
#include "catfb/cli.hpp"

#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

using namespace catfb;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "catfb_test_cli";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CATFB_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh(const std::string& name) {
  const fs::path dir = kRoot / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Writes a scenario with the given protocol/field overrides.
std::string scenario(const fs::path& dir, const std::string& protocol, const std::string& field = "",
                     const std::string& output = "") {
  const fs::path path = dir / "scenario.json";
  std::ofstream(path) << "{\"field\":{\"alpha_re\":1.816590212458495,\"alpha_im\":0,\"dim\":40" << field
                      << "},\"protocol\":{\"phi\":1.5707963267948966" << protocol
                      << "},\"output\":{\"directory\":\"" << (dir / "out").string() << "\"" << output
                      << "}}";
  return path.string();
}

std::string slurp(const fs::path& p) { return io::read_file(p.string()); }

nlohmann::json last_report(const fs::path& dir) {
  std::istringstream is(slurp(dir / "report.jsonl"));
  std::string line, last;
  while (std::getline(is, line))
    if (!line.empty()) last = line;
  return nlohmann::json::parse(last);
}

}  // namespace

TEST_CASE("scenario parsing", "[cli]") {
  using nlohmann::json;
  CHECK_NOTHROW(cli::parse_scenario(json::object()));
  CHECK_THROWS_AS(cli::parse_scenario(json::parse(R"({"protocol":{"n_cycle":3}})")), ValidationError);
  CHECK_THROWS_AS(cli::parse_scenario(json::parse(R"({"extra":{}})")), ValidationError);
  CHECK_THROWS_AS(cli::parse_scenario(json::parse(R"({"protocol":{"p_fb":"high"}})")), ValidationError);
  CHECK_THROWS_AS(cli::parse_scenario(json::parse(R"({"protocol":{"phi":1.0}})")), ParitySchemeError);
  CHECK_THROWS_AS(cli::parse_scenario(json::parse(R"({"output":{"wigner":{"at_cycles":[99]}}})")),
                  ValidationError);
  const auto s = cli::parse_scenario(json::parse(
      R"({"protocol":{"mode":"trajectory","seed":9,"n_cycles":4},"output":{"snapshot_every":3}})"));
  CHECK(s.protocol.mode == RunMode::trajectory);
  CHECK(*s.protocol.seed == 9u);
  CHECK(cli::snapshot_cycles(s) == std::vector<int>{0, 3, 4});
}

TEST_CASE("sweep values and points", "[cli]") {
  CHECK_THAT(cli::parse_value("1/13"), WithinAbs(1.0 / 13.0, 1e-17));
  CHECK(cli::parse_value("0.6") == 0.6);
  CHECK_THROWS_AS(cli::parse_value("abc"), ValidationError);
  CHECK_THROWS_AS(cli::parse_value("1/0"), ValidationError);
  const cli::Scenario base;
  CHECK(cli::sweep_scenario(base, "gamma_tau", 1.0 / 6.0).protocol.n_cycles == 6);
  CHECK_THROWS_AS(cli::sweep_scenario(base, "gamma_tau", 0.3), ValidationError);
  CHECK_THROWS_AS(cli::sweep_scenario(base, "alpha", 1.0), ValidationError);
  const auto p = cli::sweep_scenario(base, "p", 0.2).protocol;
  CHECK(p.p_probe == 0.2);
  CHECK(p.p_fb == 0.2);
}

TEST_CASE("prepare command", "[cli]") {
  SECTION("default cat summary") {
    const fs::path dir = fresh("prepare");
    REQUIRE(run_cli("prepare --scenario " + scenario(dir, "")) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK_THAT(summary["parity"].get<double>(), WithinAbs(-1.0, 1e-10));
    CHECK_THAT(summary["mean_photon_number"].get<double>(), WithinAbs(3.3 / std::tanh(3.3), 1e-9));
    CHECK_THAT(summary["norm"].get<double>(), WithinAbs(1.0, 1e-12));
    CHECK(fs::exists(dir / "out" / "state.txt"));
  }
  SECTION("odd cat at alpha = 0") {
    const fs::path dir = fresh("prepare_zero");
    const std::string path = dir / "s.json";
    std::ofstream(path) << R"({"field":{"alpha_re":0,"alpha_im":0}})";
    CHECK(run_cli("prepare --scenario " + path) == 2);
  }
  SECTION("truncation overflow") {
    const fs::path dir = fresh("prepare_trunc");
    CHECK(run_cli("prepare --scenario " + scenario(dir, "", ",\"dim\":8")) == 3);
  }
  SECTION("bad input files") {
    const fs::path dir = fresh("prepare_bad");
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run_cli("prepare --scenario " + (dir / "broken.json").string()) == 4);
    CHECK(run_cli("prepare --scenario " + (dir / "absent.json").string()) == 4);
    std::ofstream(dir / "typo.json") << R"({"protocol":{"gama_tau":0.1}})";
    CHECK(run_cli("prepare --scenario " + (dir / "typo.json").string()) == 2);
    CHECK(run_cli("prepare") == 2);
    CHECK(run_cli("frobnicate") == 2);
  }
}

TEST_CASE("run command", "[cli]") {
  SECTION("feedback on reaches gamma t = 1 and beats free decay") {
    const fs::path on = fresh("run_on"), off = fresh("run_off");
    const std::string proto = ",\"gamma_tau\":0.07692307692307693,\"n_cycles\":13,\"p_probe\":0.6,\"p_fb\":0.6";
    REQUIRE(run_cli("run --feedback on --scenario " + scenario(on, proto)) == 0);
    REQUIRE(run_cli("run --feedback off --scenario " + scenario(off, proto)) == 0);
    const auto a = last_report(on / "out"), b = last_report(off / "out");
    CHECK_THAT(a["gamma_t"].get<double>(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(b["gamma_t"].get<double>(), WithinAbs(1.0, 1e-12));
    CHECK(a["coherence"].get<double>() > b["coherence"].get<double>());
    for (int c : {0, 6, 13})
      CHECK(fs::exists(on / "out" / ("state_cycle_" + cli::cycle_tag(c) + ".txt")));
  }
  SECTION("ideal feedback at 13 cycles per unit damping time") {
    const fs::path dir = fresh("run_ideal");
    REQUIRE(run_cli("run --scenario " + scenario(dir, ",\"gamma_tau\":0.07692307692307693,\"n_cycles\":13")) == 0);
    const auto r = last_report(dir / "out");
    CHECK_THAT(r["gamma_t"].get<double>(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(r["parity"].get<double>(), WithinAbs(-1.0, 1e-10));
  }
  SECTION("zero cycles returns the input state byte for byte") {
    const fs::path dir = fresh("run_zero");
    REQUIRE(run_cli("run --scenario " + scenario(dir, ",\"n_cycles\":0")) == 0);
    CHECK(slurp(dir / "out" / "initial_state.txt") == slurp(dir / "out" / "final_state.txt"));
  }
  SECTION("repeated trajectory runs are byte identical; --out and --seed override") {
    const fs::path dir = fresh("run_repeat");
    const std::string s = scenario(dir, ",\"n_cycles\":5,\"p_probe\":0.5,\"p_fb\":0.5,\"mode\":\"trajectory\",\"seed\":3",
                                   "", ",\"wigner\":{\"extent\":3,\"n_points\":15,\"at_cycles\":[5]}");
    REQUIRE(run_cli("run --scenario " + s + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("run --scenario " + s + " --out " + (dir / "b").string()) == 0);
    for (const char* f : {"report.jsonl", "final_state.txt", "wigner_cycle_0005.csv", "wigner_cycle_0005.json"})
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(last_report(dir / "a").contains("wigner_min"));
    REQUIRE(run_cli("run --scenario " + s + " --seed 4 --out " + (dir / "c").string()) == 0);
    CHECK(fs::exists(dir / "c" / "report.jsonl"));
  }
  SECTION("trajectory without a seed and bad flags are validation errors") {
    const fs::path dir = fresh("run_bad");
    CHECK(run_cli("run --scenario " + scenario(dir, ",\"mode\":\"trajectory\"")) == 2);
    CHECK(run_cli("run --feedback maybe --scenario " + scenario(dir, "")) == 2);
  }
}

TEST_CASE("wigner command", "[cli]") {
  const fs::path dir = fresh("wigner");
  {
    const FieldDensity vac = fock_state(0, FockConfig(10)).density();
    io::save_state((dir / "vacuum.txt").string(), vac);
  }
  REQUIRE(run_cli("wigner --state " + (dir / "vacuum.txt").string() + " --extent 2 --n-points 21 --out " +
                  (dir / "vac").string()) == 0);
  std::istringstream csv(slurp(dir / "vac" / "wigner.csv"));
  std::string line;
  double center = 0.0;
  while (std::getline(csv, line))
    if (line.starts_with("0,0,")) center = std::stod(line.substr(4));
  CHECK_THAT(center, WithinAbs(2.0 / std::numbers::pi, 1e-12));

  SECTION("initial cat shows negativity, repeatably") {
    const fs::path prep = fresh("wigner_prep");
    REQUIRE(run_cli("prepare --scenario " + scenario(prep, "")) == 0);
    const std::string state = (prep / "out" / "state.txt").string();
    REQUIRE(run_cli("wigner --state " + state + " --n-points 41 --out " + (dir / "cat1").string()) == 0);
    REQUIRE(run_cli("wigner --state " + state + " --n-points 41 --workers 2 --out " + (dir / "cat2").string()) == 0);
    CHECK(slurp(dir / "cat1" / "wigner.csv") == slurp(dir / "cat2" / "wigner.csv"));
    const auto side = nlohmann::json::parse(slurp(dir / "cat1" / "wigner.json"));
    CHECK(side["min"].get<double>() < 0.0);
  }
  SECTION("malformed state file") {
    std::ofstream(dir / "junk.txt") << "dim 2\n0 0 1 0\n";
    CHECK(run_cli("wigner --state " + (dir / "junk.txt").string() + " --out " + (dir / "j").string()) == 4);
  }
}

TEST_CASE("sweep command", "[cli]") {
  const std::string proto = ",\"gamma_tau\":0.07692307692307693,\"n_cycles\":13";
  SECTION("presence probability sweep is monotone") {
    const fs::path dir = fresh("sweep_p");
    REQUIRE(run_cli("sweep --param p --values 0.2,0.6,1.0 --workers 2 --scenario " + scenario(dir, proto)) == 0);
    const auto sweep = nlohmann::json::parse(slurp(dir / "out" / "sweep.json"));
    const auto& pts = sweep["points"];
    REQUIRE(pts.size() == 3);
    CHECK(pts[0]["final_coherence"].get<double>() <= pts[1]["final_coherence"].get<double>());
    CHECK(pts[1]["final_coherence"].get<double>() <= pts[2]["final_coherence"].get<double>());
  }
  SECTION("single-value sweep equals a plain run") {
    const fs::path dir = fresh("sweep_single");
    const std::string s = scenario(dir, proto + ",\"p_probe\":0.6");
    REQUIRE(run_cli("sweep --param p_fb --values 0.4 --scenario " + s + " --out " + (dir / "sweep").string()) == 0);
    const fs::path run_dir = fresh("sweep_single_run");
    const std::string s2 = scenario(run_dir, proto + ",\"p_probe\":0.6,\"p_fb\":0.4");
    REQUIRE(run_cli("run --scenario " + s2) == 0);
    CHECK(slurp(dir / "sweep" / "point_0" / "report.jsonl") == slurp(run_dir / "out" / "report.jsonl"));
  }
  SECTION("finer cycle spacing protects at least as well") {
    const fs::path dir = fresh("sweep_gamma");
    const std::string s = scenario(dir, proto + ",\"p_probe\":0.6,\"p_fb\":0.6");
    REQUIRE(run_cli("sweep --param gamma_tau --values 1/13,1/6 --scenario " + s) == 0);
    const auto pts = nlohmann::json::parse(slurp(dir / "out" / "sweep.json"))["points"];
    CHECK(pts[0]["n_cycles"].get<int>() == 13);
    CHECK(pts[1]["n_cycles"].get<int>() == 6);
    CHECK_THAT(pts[1]["final_gamma_t"].get<double>(), WithinAbs(1.0, 1e-12));
    CHECK(pts[0]["final_coherence"].get<double>() >= pts[1]["final_coherence"].get<double>());
  }
  SECTION("unknown parameter") {
    const fs::path dir = fresh("sweep_bad");
    CHECK(run_cli("sweep --param dim --values 10 --scenario " + scenario(dir, proto)) == 2);
  }
}

TEST_CASE("shipped scenarios parse", "[cli]") {
  for (const char* name : {"cat_13_cycles.json", "cat_25_cycles.json", "trajectory_p06.json"})
    CHECK_NOTHROW(cli::load_scenario(std::string(CATFB_SCENARIO_DIR) + "/" + name));
}

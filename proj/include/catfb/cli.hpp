// Scenario files and the prepare / run / wigner / sweep commands behind the
// catfb executable. Commands throw; the executable maps exception types to
// exit codes (see exit_code()).
#pragma once

#include "catfb/io.hpp"
#include "catfb/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <set>

namespace catfb::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct WignerSpec {
  double extent = 4.0;
  int n_points = 101;
  std::vector<int> at_cycles;
};

struct Scenario {
  FeedbackConfig protocol;
  std::string directory = "out";
  /// 0 selects the default cadence {0, n/2, n}.
  int snapshot_every = 0;
  WignerSpec wigner;
};

namespace detail {

inline void check_keys(const json& section, const std::string& name,
                       const std::set<std::string>& allowed) {
  if (!section.is_object()) throw ValidationError("scenario section '" + name + "' must be an object");
  for (const auto& [key, value] : section.items())
    if (!allowed.contains(key))
      throw ValidationError("unknown key '" + key + "' in scenario section '" + name + "'");
}

template <class T>
void read(const json& section, const std::string& key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("scenario key '" + key + "': " + e.what());
  }
}

inline RunMode parse_mode(const std::string& s) {
  if (s == "ensemble") return RunMode::ensemble;
  if (s == "trajectory") return RunMode::trajectory;
  throw ValidationError("mode must be 'ensemble' or 'trajectory', got '" + s + "'");
}

inline Parity parse_parity(const std::string& s) {
  if (s == "odd") return Parity::odd;
  if (s == "even") return Parity::even;
  throw ValidationError("parity must be 'odd' or 'even', got '" + s + "'");
}

}  // namespace detail

/// Checks the scenario as a whole; called by parse_scenario and again by
/// every command after overrides are applied.
inline void validate(const Scenario& s) {
  s.protocol.validate();
  if (s.snapshot_every < 0) throw ValidationError("snapshot_every must be non-negative");
  if (!(s.wigner.extent > 0.0)) throw ValidationError("wigner extent must be positive");
  if (s.wigner.n_points < 2) throw ValidationError("wigner n_points must be >= 2");
  for (int c : s.wigner.at_cycles)
    if (c < 0 || c > s.protocol.n_cycles)
      throw ValidationError("wigner cycle " + std::to_string(c) + " is outside the run");
  if (s.directory.empty()) throw ValidationError("output directory must not be empty");
}

inline Scenario parse_scenario(const json& doc) {
  detail::check_keys(doc, "<root>", {"field", "protocol", "output"});
  Scenario s;
  FeedbackConfig& p = s.protocol;

  if (doc.contains("field")) {
    const json& f = doc.at("field");
    detail::check_keys(f, "field", {"alpha_re", "alpha_im", "dim", "truncation_tol"});
    double re = p.alpha.real(), im = p.alpha.imag();
    detail::read(f, "alpha_re", re);
    detail::read(f, "alpha_im", im);
    p.alpha = cplx(re, im);
    detail::read(f, "dim", p.dim);
    detail::read(f, "truncation_tol", p.truncation_tol);
  }
  if (doc.contains("protocol")) {
    const json& q = doc.at("protocol");
    detail::check_keys(q, "protocol",
                       {"phi", "gamma_tau", "p_probe", "p_fb", "n_cycles", "mode", "seed", "parity",
                        "injection_efficiency"});
    detail::read(q, "phi", p.phi);
    detail::read(q, "gamma_tau", p.gamma_tau);
    detail::read(q, "p_probe", p.p_probe);
    detail::read(q, "p_fb", p.p_fb);
    detail::read(q, "n_cycles", p.n_cycles);
    detail::read(q, "injection_efficiency", p.injection_efficiency);
    std::string mode = "ensemble", parity = "odd";
    detail::read(q, "mode", mode);
    detail::read(q, "parity", parity);
    p.mode = detail::parse_mode(mode);
    p.protected_parity = detail::parse_parity(parity);
    if (q.contains("seed")) {
      std::uint64_t seed = 0;
      detail::read(q, "seed", seed);
      p.seed = seed;
    }
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    detail::check_keys(o, "output", {"directory", "snapshot_every", "wigner"});
    detail::read(o, "directory", s.directory);
    detail::read(o, "snapshot_every", s.snapshot_every);
    if (o.contains("wigner")) {
      const json& w = o.at("wigner");
      detail::check_keys(w, "output.wigner", {"extent", "n_points", "at_cycles"});
      detail::read(w, "extent", s.wigner.extent);
      detail::read(w, "n_points", s.wigner.n_points);
      detail::read(w, "at_cycles", s.wigner.at_cycles);
    }
  }
  validate(s);
  return s;
}

/// Malformed JSON or an unreadable file is a FormatError; well-formed JSON
/// with bad content is a ValidationError.
inline Scenario load_scenario(const std::string& path) {
  const std::string text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const TruncationError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  return 1;
}

inline void print_warnings(const WarningLog& log) {
  for (const auto& w : log) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

inline void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline std::string cycle_tag(int cycle) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", cycle);
  return buf;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareSummary {
  double parity = 0.0;
  double mean_photon_number = 0.0;
  double norm = 0.0;
  double tail_population = 0.0;
};

inline std::string summary_json(const PrepareSummary& s) {
  return "{\"parity\":" + io::fmt17(s.parity) +
         ",\"mean_photon_number\":" + io::fmt17(s.mean_photon_number) +
         ",\"norm\":" + io::fmt17(s.norm) + ",\"tail_population\":" + io::fmt17(s.tail_population) +
         "}\n";
}

/// Writes state.txt and summary.json for the conditionally prepared cat.
inline PrepareSummary cmd_prepare(const Scenario& sc, const fs::path& out, WarningLog* warnings = nullptr) {
  validate(sc);
  const FeedbackConfig& p = sc.protocol;
  const FieldDensity rho = initial_cat(p.alpha, p.protected_parity, p.fock(), warnings).first;
  PrepareSummary s{parity_expectation(rho), mean_photon_number(rho), rho.matrix().trace().real(),
                   rho.tail_population()};
  if (s.tail_population > p.truncation_tol)
    throw TruncationError("prepared state populates the truncation edge (tail " +
                          std::to_string(s.tail_population) + "); increase dim");
  make_dir(out);
  io::save_state((out / "state.txt").string(), rho);
  io::write_file((out / "summary.json").string(), summary_json(s));
  return s;
}

// ---------------------------------------------------------------------------
// run

inline std::vector<int> snapshot_cycles(const Scenario& sc) {
  const int n = sc.protocol.n_cycles;
  std::set<int> cycles;
  if (sc.snapshot_every > 0) {
    for (int k = 0; k <= n; k += sc.snapshot_every) cycles.insert(k);
    cycles.insert(n);
  } else {
    cycles = {0, n / 2, n};
  }
  return {cycles.begin(), cycles.end()};
}

/// Writes report.jsonl, initial_state.txt, final_state.txt,
/// state_cycle_NNNN.txt snapshots and wigner_cycle_NNNN.{csv,json} grids.
/// Feedback off is pure damping over the same elapsed time and cadence.
inline std::vector<CycleReport> cmd_run(const Scenario& sc, bool feedback, const fs::path& out,
                                        int workers = 1, WarningLog* warnings = nullptr) {
  validate(sc);
  const FeedbackConfig& p = sc.protocol;
  const int n = p.n_cycles;
  const std::vector<int> snaps = snapshot_cycles(sc);

  RunOptions opts;
  std::set<int> keep(snaps.begin(), snaps.end());
  keep.insert(sc.wigner.at_cycles.begin(), sc.wigner.at_cycles.end());
  keep.insert(0);
  keep.insert(n);
  opts.snapshot_cycles.assign(keep.begin(), keep.end());

  std::vector<CycleReport> reports =
      feedback ? run_feedback(p, opts, warnings)
               : run_free_decay(p.alpha, n * p.gamma_tau, n, p.fock(), p.protected_parity, opts, warnings);

  for (const auto& r : reports)
    if (r.tail_population > p.truncation_tol)
      throw TruncationError("cycle " + std::to_string(r.cycle) +
                            " populates the truncation edge; increase dim");

  make_dir(out);
  std::map<int, WignerGrid> grids;
  for (int c : sc.wigner.at_cycles) {
    if (grids.contains(c)) continue;
    grids.emplace(c, wigner_grid(*reports[c].state, sc.wigner.extent, sc.wigner.n_points, workers));
    reports[c].wigner_min = grids.at(c).min();
  }

  io::write_file((out / "report.jsonl").string(), io::reports_jsonl(reports));
  io::save_state((out / "initial_state.txt").string(), *reports.front().state);
  io::save_state((out / "final_state.txt").string(), *reports.back().state);
  for (int c : snaps)
    io::save_state((out / ("state_cycle_" + cycle_tag(c) + ".txt")).string(), *reports[c].state);
  for (const auto& [c, grid] : grids) {
    const std::string stem = "wigner_cycle_" + cycle_tag(c);
    io::write_file((out / (stem + ".csv")).string(), io::wigner_csv(grid));
    io::write_file((out / (stem + ".json")).string(), io::wigner_sidecar(grid));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// wigner

/// Reads a state file and writes wigner.csv and wigner.json into `out`.
inline WignerGrid cmd_wigner(const std::string& state_path, double extent, int n_points,
                             const fs::path& out, int workers = 1) {
  if (!(extent > 0.0)) throw ValidationError("extent must be positive");
  if (n_points < 2) throw ValidationError("n_points must be >= 2");
  const FieldDensity rho = io::load_state(state_path);
  WignerGrid grid = wigner_grid(rho, extent, n_points, workers);
  make_dir(out);
  io::write_file((out / "wigner.csv").string(), io::wigner_csv(grid));
  io::write_file((out / "wigner.json").string(), io::wigner_sidecar(grid));
  return grid;
}

// ---------------------------------------------------------------------------
// sweep

/// Decimal number or a fraction "a/b".
inline double parse_value(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
      throw ValidationError("cannot parse sweep value '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return number(text);
  const double den = number(text.substr(slash + 1));
  if (den == 0.0) throw ValidationError("zero denominator in sweep value '" + text + "'");
  return number(text.substr(0, slash)) / den;
}

struct SweepPoint {
  double value = 0.0;
  int n_cycles = 0;
  std::string directory;
  CycleReport final_report;
};

/// Scenario for one sweep point. `p` sets both presence probabilities. A
/// gamma_tau point keeps the base scenario's total elapsed time, so the value
/// must divide it into a whole number of cycles.
inline Scenario sweep_scenario(const Scenario& base, const std::string& param, double value) {
  Scenario s = base;
  FeedbackConfig& p = s.protocol;
  if (param == "p_probe") {
    p.p_probe = value;
  } else if (param == "p_fb") {
    p.p_fb = value;
  } else if (param == "p") {
    p.p_probe = p.p_fb = value;
  } else if (param == "gamma_tau") {
    const double total = base.protocol.n_cycles * base.protocol.gamma_tau;
    if (!(value > 0.0)) throw ValidationError("gamma_tau sweep values must be positive");
    const double cycles = total / value;
    const long n = std::lround(cycles);
    if (std::abs(cycles - static_cast<double>(n)) > 1e-9 * std::max(1.0, cycles))
      throw ValidationError("gamma_tau " + io::fmt17(value) +
                            " does not divide the total elapsed time into whole cycles");
    p.gamma_tau = value;
    p.n_cycles = static_cast<int>(n);
    std::erase_if(s.wigner.at_cycles, [&](int c) { return c > p.n_cycles; });
  } else {
    throw ValidationError("unknown sweep parameter '" + param +
                          "' (expected p_probe, p_fb, p or gamma_tau)");
  }
  validate(s);
  return s;
}

inline std::string sweep_json(const std::string& param, bool feedback,
                              const std::vector<SweepPoint>& points) {
  std::string s = "{\"parameter\":\"" + param + "\",\"feedback\":" + (feedback ? "true" : "false") +
                  ",\"points\":[";
  for (std::size_t k = 0; k < points.size(); ++k) {
    const SweepPoint& pt = points[k];
    const CycleReport& r = pt.final_report;
    s += std::string(k ? "," : "") + "{\"value\":" + io::fmt17(pt.value) +
         ",\"n_cycles\":" + std::to_string(pt.n_cycles) + ",\"directory\":\"" + pt.directory +
         "\",\"final_gamma_t\":" + io::fmt17(r.gamma_t) + ",\"final_coherence\":" + io::fmt17(r.coherence) +
         ",\"final_fidelity\":" + io::fmt17(r.fidelity) + ",\"final_parity\":" + io::fmt17(r.parity) + "}";
  }
  return s + "]}\n";
}

/// One run per value in out/point_K, up to `workers` points at a time, then
/// the aggregated out/sweep.json. Every point is validated before any runs.
inline std::vector<SweepPoint> cmd_sweep(const Scenario& base, const std::string& param,
                                         const std::vector<double>& values, bool feedback,
                                         const fs::path& out, int workers = 1,
                                         WarningLog* warnings = nullptr) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  std::vector<Scenario> scenarios;
  for (double v : values) scenarios.push_back(sweep_scenario(base, param, v));

  std::vector<SweepPoint> points(values.size());
  std::vector<WarningLog> logs(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  make_dir(out);
  parallel_for(static_cast<int>(values.size()), std::max(1, workers), [&](int k) {
    try {
      SweepPoint& pt = points[k];
      pt.value = values[k];
      pt.n_cycles = scenarios[k].protocol.n_cycles;
      pt.directory = "point_" + std::to_string(k);
      pt.final_report = cmd_run(scenarios[k], feedback, out / pt.directory, 1, &logs[k]).back();
      pt.final_report.state.reset();
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (warnings != nullptr)
      for (auto& w : logs[k]) warnings->push_back("point " + std::to_string(k) + ": " + w);
    if (errors[k]) std::rethrow_exception(errors[k]);
  }
  io::write_file((out / "sweep.json").string(), sweep_json(param, feedback, points));
  return points;
}

}  // namespace catfb::cli

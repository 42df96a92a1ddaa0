// The automatic feedback experiment: conditional cat preparation, the parity
// probe pass R1 - C - R2, the C'-mediated copy of the probe outcome onto the
// feedback atom, photon re-injection, the one-cycle field channel and the
// multi-cycle runners.
//
// Joint-space factor order is fixed: probe, feedback, cprime, field.
#pragma once

#include "catfb/channel.hpp"
#include "catfb/core.hpp"
#include "catfb/dynamics.hpp"
#include "catfb/metrics.hpp"
#include "catfb/wigner.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace catfb {

inline const std::string kProbe = "probe";
inline const std::string kFeedback = "feedback";
inline const std::string kCPrime = "cprime";
inline const std::string kField = "field";
inline const std::string kAtom = "atom";

/// Raised for phi != pi/2: only the pi/2 dispersive phase correlates the
/// probe atom with the field parity.
class ParitySchemeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class RunMode { ensemble, trajectory };

struct FeedbackConfig {
  cplx alpha{std::sqrt(3.3), 0.0};
  double phi = std::numbers::pi / 2;
  double gamma_tau = 1.0 / 13.0;  // gamma * tau_pr per cycle
  double p_probe = 1.0;           // probability a probe atom is present
  double p_fb = 1.0;              // probability a feedback atom is present
  int n_cycles = 13;
  int dim = 40;
  double truncation_tol = 1e-8;
  RunMode mode = RunMode::ensemble;
  std::optional<std::uint64_t> seed;
  Parity protected_parity = Parity::odd;
  /// Probability that the adiabatic passage in C actually transfers.
  double injection_efficiency = 1.0;

  FockConfig fock() const { return FockConfig(dim, truncation_tol); }

  void validate() const {
    fock().validate();
    if (std::abs(phi - std::numbers::pi / 2) > 1e-12)
      throw ParitySchemeError("the parity probe requires phi = pi/2");
    if (!(gamma_tau >= 0.0) || !std::isfinite(gamma_tau))
      throw ValidationError("gamma_tau must be a finite non-negative number");
    for (double p : {p_probe, p_fb, injection_efficiency})
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probabilities must lie in [0, 1]");
    if (n_cycles < 0) throw ValidationError("n_cycles must be non-negative");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
      throw ValidationError("alpha must be finite");
    if (protected_parity == Parity::odd && alpha == cplx(0.0))
      throw ValidationError("odd cat state is undefined for alpha = 0");
    if (mode == RunMode::trajectory && !seed)
      throw ValidationError("trajectory mode requires a seed");
  }
};

// ---------------------------------------------------------------------------
// Probe pass

/// R2(theta2) . U_disp(phi) . R1(pi/2) on atom{e,g} (x) field, as written in
/// the laboratory frame.
inline CMatrix ramsey_sequence(double phi, double theta2, const FockConfig& cfg) {
  const CMatrix id = CMatrix::Identity(cfg.dim, cfg.dim);
  const CMatrix r1 = kron(ramsey_unitary(std::numbers::pi / 2).unitary, id);
  const CMatrix r2 = kron(ramsey_unitary(theta2).unitary, id);
  return r2 * dispersive_unitary(phi, cfg).unitary * r1;
}

/// The parity probe on atom{e,g} (x) field. The dispersive gate shifts both
/// branches by a common rotation e^{i phi n}; the probe pass is expressed in
/// the field frame co-rotating with it, so the atom-diagonal blocks are
/// exactly P rho P. Protecting even parity flips R2, which swaps which parity
/// the probe reports as g.
inline CMatrix probe_pass_unitary(double phi, Parity protected_parity, const FockConfig& cfg) {
  const double theta2 = protected_parity == Parity::odd ? std::numbers::pi / 2 : -std::numbers::pi / 2;
  const CMatrix frame = kron(CMatrix::Identity(2, 2), number_phase(-phi, cfg.dim));
  return frame * ramsey_sequence(phi, theta2, cfg);
}

/// State of atom (x) field after the preparation sequence on |e>|alpha>.
/// Equals (1/2)[|e>(|a e^{i phi}> - |a e^{-i phi}>) + |g>(|a e^{i phi}> + |a e^{-i phi}>)].
inline CVector preparation_state(cplx alpha, const FockConfig& cfg, WarningLog* warnings = nullptr) {
  const CVector field = coherent_state(alpha, cfg, warnings).amplitudes();
  CVector in = CVector::Zero(2 * cfg.dim);
  in.segment(index(Level::e) * cfg.dim, cfg.dim) = field;
  return ramsey_sequence(std::numbers::pi / 2, std::numbers::pi / 2, cfg) * in;
}

/// Cat state left in C once the preparation atom is detected: e gives the
/// odd cat of amplitude i*alpha, g the even one.
inline FieldDensity prepare_cat_conditional(cplx alpha, Level detected, const FockConfig& cfg,
                                            WarningLog* warnings = nullptr) {
  if (detected == Level::i) throw ValidationError("the preparation atom is detected in e or g");
  const CVector joint = preparation_state(alpha, cfg, warnings);
  const CVector branch = joint.segment(index(detected) * cfg.dim, cfg.dim);
  const double prob = branch.squaredNorm();
  // rounding in the pulses leaves ~1e-33 in a branch that is exactly empty
  if (!(prob > 1e-24)) throw ValidationError("detection branch has zero probability");
  const CVector psi = branch / std::sqrt(prob);
  return FieldDensity(psi * psi.adjoint());
}

/// Lobe amplitude of the conditional cat after a dimensionless time gamma t.
inline cplx lobe_amplitude(cplx alpha, double gamma_t) {
  return cplx(0.0, 1.0) * alpha * std::exp(-0.5 * gamma_t);
}

/// Atom{e,g} (x) field after the probe pass on |e><e| (x) rho.
inline JointState probe_entangle(const FieldDensity& rho, Parity protected_parity = Parity::odd) {
  const FockConfig cfg(rho.dim());
  const CMatrix u = probe_pass_unitary(std::numbers::pi / 2, protected_parity, cfg);
  const CMatrix in = kron(atomic_projector(Level::e, 2), rho.matrix());
  return JointState(u * in * u.adjoint(), {{kAtom, 2}, {kField, rho.dim()}});
}

// ---------------------------------------------------------------------------
// Four-factor cycle: probe{e,g,i} (x) feedback{e,g,i} (x) cprime{0,1} (x) field

inline std::vector<Factor> cycle_factors(int dim) {
  return {{kProbe, 3}, {kFeedback, 3}, {kCPrime, 2}, {kField, dim}};
}

/// |e><e|_probe (x) |i><i|_feedback (x) |0><0|_C' (x) rho.
inline JointState cycle_initial_state(const FieldDensity& rho) {
  CMatrix vacuum = CMatrix::Zero(2, 2);
  vacuum(0, 0) = 1.0;
  return tensor({{{kProbe, 3}, atomic_projector(Level::e, 3)},
                 {{kFeedback, 3}, atomic_projector(Level::i, 3)},
                 {{kCPrime, 2}, vacuum},
                 {{kField, rho.dim()}, rho.matrix()}});
}

struct Gate {
  CMatrix op;
  std::vector<std::string> targets;
};

namespace detail {

inline Gate probe_gate(Parity parity, const FockConfig& cfg) {
  return {lift_to_three_levels(probe_pass_unitary(std::numbers::pi / 2, parity, cfg), cfg.dim),
          {kProbe, kField}};
}

inline Gate feedback_pi_gate() {
  CMatrix r = CMatrix::Identity(3, 3);
  r.topLeftCorner(2, 2) = ramsey_unitary(std::numbers::pi).unitary;
  return {std::move(r), {kFeedback}};
}

inline Gate injection_gate(const FockConfig& cfg) {
  return {lift_to_three_levels(photon_injection(cfg), cfg.dim), {kFeedback, kField}};
}

inline std::vector<Gate> cycle_gates(const FeedbackConfig& cfg, bool probe, bool feedback,
                                     bool inject) {
  const FockConfig fock = cfg.fock();
  std::vector<Gate> gates;
  if (probe) {
    gates.push_back(probe_gate(cfg.protected_parity, fock));
    gates.push_back({cprime_pi_pulse(), {kProbe, kCPrime}});
  }
  if (feedback) {
    gates.push_back({cprime_pi_pulse(), {kFeedback, kCPrime}});
    gates.push_back(feedback_pi_gate());
    if (inject) gates.push_back(injection_gate(fock));
  }
  return gates;
}

inline double cprime_excitation(const JointState& joint) {
  const CMatrix c = partial_trace(joint.matrix(), joint.factors(), {kCPrime});
  return c(1, 1).real();
}

}  // namespace detail

/// Probe pass of a cycle on the four-factor state (probe enters in e).
inline JointState probe_pass(const JointState& joint, Parity parity = Parity::odd) {
  const int d = joint.factors().at(joint.index_of(kField)).dim;
  const Gate g = detail::probe_gate(parity, FockConfig(d));
  return apply_local(joint, g.op, g.targets);
}

/// Empties C' (photon assumed lost there): Kraus set {|0><0|, |0><1|}.
inline JointState reset_cprime(const JointState& joint) {
  CMatrix k0 = CMatrix::Zero(2, 2), k1 = CMatrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k1(0, 1) = 1.0;
  const CMatrix a = embed(k0, joint.factors(), {kCPrime});
  const CMatrix b = embed(k1, joint.factors(), {kCPrime});
  const CMatrix& m = joint.matrix();
  return JointState(a * m * a.adjoint() + b * m * b.adjoint(), joint.factors());
}

/// Probe then feedback atom cross the initially empty C'. A probe in g
/// leaves a photon that the feedback atom (entering in i) absorbs, ending in
/// g; a probe in e leaves C' empty and the feedback atom in i.
inline JointState cprime_transfer(const JointState& joint, bool allow_reset = false) {
  JointState state = joint;
  if (detail::cprime_excitation(state) > 1e-10) {
    if (!allow_reset) throw ValidationError("C' is not in the vacuum at the start of the transfer");
    state = reset_cprime(state);
  }
  state = apply_local(state, cprime_pi_pulse(), {kProbe, kCPrime});
  return apply_local(state, cprime_pi_pulse(), {kFeedback, kCPrime});
}

/// pi pulse g -> e on the feedback atom, then adiabatic passage in C. The
/// i branch passes through both untouched.
inline JointState feedback_injection(const JointState& joint, double efficiency = 1.0,
                                     WarningLog* warnings = nullptr) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw ValidationError("injection efficiency must lie in [0, 1]");
  const int d = joint.factors().at(joint.index_of(kField)).dim;
  const Gate pi = detail::feedback_pi_gate();
  const JointState promoted = apply_local(joint, pi.op, pi.targets);

  const CMatrix fb_field = partial_trace(promoted.matrix(), promoted.factors(), {kFeedback, kField});
  const double edge = fb_field(index(Level::e) * d + d - 1, index(Level::e) * d + d - 1).real();
  if (edge > 1e-8)
    detail::warn(warnings, "photon injection: population " + std::to_string(edge) +
                               " at the truncation edge is not transferred");

  const Gate inj = detail::injection_gate(FockConfig(d));
  const JointState injected = apply_local(promoted, inj.op, inj.targets);
  if (efficiency == 1.0) return injected;
  return JointState(efficiency * injected.matrix() + (1.0 - efficiency) * promoted.matrix(),
                    joint.factors());
}

/// Full corrective pass (probe and feedback atom present) on
/// |e>|i>|0> (x) rho, before anything is traced out.
inline JointState corrective_pass(const FieldDensity& rho, const FeedbackConfig& cfg = {},
                                  WarningLog* warnings = nullptr) {
  JointState s = probe_pass(cycle_initial_state(rho), cfg.protected_parity);
  s = cprime_transfer(s);
  return feedback_injection(s, cfg.injection_efficiency, warnings);
}

/// Field-only channel of one atomic pass, extracted from the four-factor
/// unitary dynamics: the pass is propagated on |e>|i>|0> (x) I_D and every
/// environment basis state (probe, feedback, C') yields one Kraus operator.
/// Tracing C' is the reset for the next cycle.
inline QuantumChannel atomic_pass_channel(const FeedbackConfig& cfg, bool probe_present,
                                          bool feedback_present) {
  const int d = cfg.dim;
  const std::vector<Factor> factors = cycle_factors(d);
  const long n = 18L * d;
  const int env0 = index(Level::e) * 6 + index(Level::i) * 2 + 0;

  auto slab_kraus = [&](bool inject, double weight, std::vector<CMatrix>& out) {
    if (weight == 0.0) return;
    CMatrix slab = CMatrix::Zero(n, d);
    for (int j = 0; j < d; ++j) slab(env0 * d + j, j) = 1.0;
    for (const Gate& g : detail::cycle_gates(cfg, probe_present, feedback_present, inject))
      slab = embed(g.op, factors, g.targets) * slab;
    for (int env = 0; env < 18; ++env)
      out.push_back(std::sqrt(weight) * slab.block(static_cast<long>(env) * d, 0, d, d));
  };

  std::vector<CMatrix> kraus;
  if (feedback_present && cfg.injection_efficiency < 1.0) {
    slab_kraus(true, cfg.injection_efficiency, kraus);
    slab_kraus(false, 1.0 - cfg.injection_efficiency, kraus);
  } else {
    slab_kraus(true, 1.0, kraus);
  }
  std::string label = probe_present ? (feedback_present ? "correct" : "probe-only")
                                    : (feedback_present ? "feedback-only" : "idle");
  return QuantumChannel(d, std::move(kraus), std::move(label));
}

/// Damping over gamma_tau followed by the atomic pass of the given presence
/// pattern.
inline QuantumChannel cycle_branch(const FeedbackConfig& cfg, bool probe_present,
                                   bool feedback_present) {
  return damping_channel(cfg.gamma_tau, cfg.fock())
      .channel.then(atomic_pass_channel(cfg, probe_present, feedback_present));
}

/// One feedback cycle on the field, averaged over atom presence, with the
/// superoperator cached.
inline QuantumChannel cycle_channel(const FeedbackConfig& cfg) {
  cfg.validate();
  const double pp = cfg.p_probe, pf = cfg.p_fb;
  std::vector<std::pair<double, QuantumChannel>> parts;
  for (bool probe : {true, false})
    for (bool fb : {true, false}) {
      const double w = (probe ? pp : 1.0 - pp) * (fb ? pf : 1.0 - pf);
      if (w > 0.0) parts.emplace_back(w, atomic_pass_channel(cfg, probe, fb));
    }
  const QuantumChannel atoms = QuantumChannel::mixture(parts, "atoms");
  return damping_channel(cfg.gamma_tau, cfg.fock()).channel.then(atoms).cached();
}

// ---------------------------------------------------------------------------
// Runners

struct CycleReport {
  int cycle = 0;
  double gamma_t = 0.0;
  double fidelity = 0.0;
  double parity = 0.0;
  double coherence = 0.0;
  double tail_population = 0.0;
  std::optional<double> wigner_min;
  std::optional<FieldDensity> state;
};

struct RunOptions {
  std::vector<int> snapshot_cycles;
  std::vector<int> wigner_cycles;
  double wigner_extent = 4.0;
  int wigner_points = 101;
};

namespace detail {

inline bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

inline CycleReport make_report(int cycle, double gamma_t, const FieldDensity& rho,
                               const PureFieldState& target, cplx alpha,
                               const RunOptions& opts, double tol, WarningLog* warnings) {
  CycleReport r;
  r.cycle = cycle;
  r.gamma_t = gamma_t;
  r.fidelity = fidelity(rho, target);
  r.parity = parity_expectation(rho);
  r.coherence = cat_coherence(rho, lobe_amplitude(alpha, gamma_t), warnings);
  r.tail_population = rho.tail_population();
  if (r.tail_population > tol)
    warn(warnings, "cycle " + std::to_string(cycle) + ": tail population " +
                       std::to_string(r.tail_population) + " exceeds truncation tolerance");
  if (contains(opts.wigner_cycles, cycle))
    r.wigner_min = wigner_grid(rho, opts.wigner_extent, opts.wigner_points).min();
  if (contains(opts.snapshot_cycles, cycle)) r.state = rho;
  return r;
}

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// The conditional cat the runs start from and the pure state it equals.
inline std::pair<FieldDensity, PureFieldState> initial_cat(cplx alpha, Parity parity,
                                                           const FockConfig& fock,
                                                           WarningLog* warnings = nullptr) {
  const Level detected = parity == Parity::odd ? Level::e : Level::g;
  FieldDensity rho = prepare_cat_conditional(alpha, detected, fock, warnings);
  PureFieldState target = cat_state(cplx(0.0, 1.0) * alpha, parity, fock);
  return {std::move(rho), std::move(target)};
}

/// Per-pattern cycle channels for trajectory runs, assembled on first use.
/// One cache may serve many trajectories of the same configuration; it is
/// not safe to share between threads.
class BranchCache {
 public:
  explicit BranchCache(FeedbackConfig cfg) : cfg_(std::move(cfg)) {}

  const FeedbackConfig& config() const { return cfg_; }

  const QuantumChannel& get(bool probe, bool feedback) {
    auto& slot = slots_[probe][feedback];
    if (!slot) slot = cycle_branch(cfg_, probe, feedback).cached();
    return *slot;
  }

 private:
  FeedbackConfig cfg_;
  std::optional<QuantumChannel> slots_[2][2];
};

/// One stochastic trajectory: each cycle damps, then draws the presence of
/// the probe and the feedback atom (in that order) from the seeded
/// generator and applies the matching branch.
inline std::vector<CycleReport> run_trajectory(BranchCache& branches, std::uint64_t seed,
                                               const RunOptions& opts = {},
                                               WarningLog* warnings = nullptr) {
  const FeedbackConfig& cfg = branches.config();
  cfg.validate();
  auto [rho, target] = initial_cat(cfg.alpha, cfg.protected_parity, cfg.fock(), warnings);
  std::vector<CycleReport> reports;
  reports.reserve(static_cast<std::size_t>(cfg.n_cycles) + 1);
  reports.push_back(
      detail::make_report(0, 0.0, rho, target, cfg.alpha, opts, cfg.truncation_tol, warnings));
  std::mt19937_64 rng(seed);
  for (int k = 1; k <= cfg.n_cycles; ++k) {
    const bool probe = detail::uniform01(rng) < cfg.p_probe;
    const bool fb = detail::uniform01(rng) < cfg.p_fb;
    rho = branches.get(probe, fb).apply(rho);
    reports.push_back(detail::make_report(k, k * cfg.gamma_tau, rho, target, cfg.alpha, opts,
                                          cfg.truncation_tol, warnings));
  }
  return reports;
}

/// Applies the cycle channel n_cycles times (ensemble mode), or runs one
/// seeded trajectory (trajectory mode). Report k is taken after k cycles.
/// A prebuilt ensemble channel may be passed to skip assembly.
inline std::vector<CycleReport> run_feedback(const FeedbackConfig& cfg, const RunOptions& opts = {},
                                             WarningLog* warnings = nullptr,
                                             const QuantumChannel* channel = nullptr) {
  cfg.validate();
  if (cfg.mode == RunMode::trajectory) {
    BranchCache branches(cfg);
    return run_trajectory(branches, *cfg.seed, opts, warnings);
  }
  const FockConfig fock = cfg.fock();
  auto [rho, target] = initial_cat(cfg.alpha, cfg.protected_parity, fock, warnings);

  std::vector<CycleReport> reports;
  reports.reserve(static_cast<std::size_t>(cfg.n_cycles) + 1);
  reports.push_back(
      detail::make_report(0, 0.0, rho, target, cfg.alpha, opts, cfg.truncation_tol, warnings));
  if (cfg.n_cycles == 0) return reports;

  std::optional<QuantumChannel> own;
  if (channel == nullptr) own = cycle_channel(cfg);
  const QuantumChannel& ch = channel != nullptr ? *channel : *own;
  if (ch.dim() != cfg.dim) throw ValidationError("cycle channel dimension does not match config");
  for (int k = 1; k <= cfg.n_cycles; ++k) {
    rho = ch.apply(rho);
    reports.push_back(detail::make_report(k, k * cfg.gamma_tau, rho, target, cfg.alpha, opts,
                                          cfg.truncation_tol, warnings));
  }
  return reports;
}

/// Pure cavity damping of the conditional cat in n_steps equal steps.
inline std::vector<CycleReport> run_free_decay(cplx alpha, double gamma_t_total, int n_steps,
                                               const FockConfig& fock,
                                               Parity parity = Parity::odd,
                                               const RunOptions& opts = {},
                                               WarningLog* warnings = nullptr) {
  fock.validate();
  if (!(gamma_t_total >= 0.0)) throw ValidationError("gamma_t_total must be non-negative");
  if (n_steps < 0) throw ValidationError("n_steps must be non-negative");
  if (n_steps == 0 && gamma_t_total > 0.0) throw ValidationError("positive decay time needs steps");
  auto [rho, target] = initial_cat(alpha, parity, fock, warnings);
  std::vector<CycleReport> reports;
  reports.push_back(
      detail::make_report(0, 0.0, rho, target, alpha, opts, fock.truncation_tol, warnings));
  if (n_steps == 0) return reports;
  const double step = gamma_t_total / n_steps;
  const QuantumChannel ch = damping_channel(step, fock).channel.cached();
  for (int k = 1; k <= n_steps; ++k) {
    rho = ch.apply(rho);
    reports.push_back(detail::make_report(k, k * step, rho, target, alpha, opts,
                                          fock.truncation_tol, warnings));
  }
  return reports;
}

}  // namespace catfb

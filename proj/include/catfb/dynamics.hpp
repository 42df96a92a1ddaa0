// Elementary evolutions of one feedback cycle: cavity damping, classical
// Ramsey pulses, the dispersive and resonant atom-cavity couplings, the
// C' pi pulse and adiabatic photon injection.
//
// Atomic basis ordering: e = 0, g = 1, i = 2. Two-level atomic operators act
// on {e, g}; lift_to_three_levels() extends them with i as a spectator.
#pragma once

#include "catfb/channel.hpp"
#include "catfb/core.hpp"

namespace catfb {

enum class Level : int { e = 0, g = 1, i = 2 };

inline constexpr int index(Level l) { return static_cast<int>(l); }

/// Projector |l><l| on an atom with `levels` levels.
inline CMatrix atomic_projector(Level l, int levels) {
  CMatrix p = CMatrix::Zero(levels, levels);
  p(index(l), index(l)) = 1.0;
  return p;
}

/// Extends an operator on atom{e,g} (x) X to atom{e,g,i} (x) X, acting as
/// the identity on the i manifold.
inline CMatrix lift_to_three_levels(const CMatrix& op, int rest_dim) {
  if (op.rows() != 2 * rest_dim || op.cols() != 2 * rest_dim)
    throw ValidationError("operator is not on atom{e,g} (x) rest");
  CMatrix out = CMatrix::Identity(3 * rest_dim, 3 * rest_dim);
  out.topLeftCorner(2 * rest_dim, 2 * rest_dim) = op;
  return out;
}

namespace detail {

/// exp(-i H t) for Hermitian H.
inline CMatrix hermitian_propagator(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k)
    phases(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cavity damping

struct DampingChannel {
  double gamma_t = 0.0;
  QuantumChannel channel;
};

/// Exact amplitude damping over a dimensionless time gamma*t.
/// K_k = sum_n sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k><n|, eta = exp(-gamma t).
/// Damping never raises the photon number, so the truncated set is exactly
/// trace preserving.
inline DampingChannel damping_channel(double gamma_t, const FockConfig& cfg) {
  cfg.validate();
  if (!(gamma_t >= 0.0)) throw ValidationError("gamma_t must be non-negative");
  const double eta = std::exp(-gamma_t);
  const int d = cfg.dim;
  std::vector<CMatrix> kraus;
  kraus.reserve(d);
  for (int k = 0; k < d; ++k) {
    CMatrix m = CMatrix::Zero(d, d);
    for (int n = k; n < d; ++n) {
      // pow(0, 0) == 1 covers both eta == 0 and eta == 1 edges
      const double w = detail::binomial(n, k) * std::pow(eta, n - k) * std::pow(1.0 - eta, k);
      m(n - k, n) = std::sqrt(w);
    }
    kraus.push_back(std::move(m));
  }
  return {gamma_t, QuantumChannel(d, std::move(kraus), "damping")};
}

// ---------------------------------------------------------------------------
// Atom-cavity couplings

/// exp(-i H_JC t) on atom{e,g} (x) field in the frame rotating at the cavity
/// frequency: H = -delta |e><e| + Omega (|e><g| a + |g><e| a^dag), with
/// delta = omega_cavity - omega_eg.
inline CMatrix jc_unitary(double omega, double delta, double t, const FockConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim;
  const LadderOps ops = ladder_ops(cfg);
  const CMatrix pe = atomic_projector(Level::e, 2);
  CMatrix sigma_plus = CMatrix::Zero(2, 2);  // |e><g|
  sigma_plus(index(Level::e), index(Level::g)) = 1.0;
  const CMatrix h = -delta * kron(pe, CMatrix::Identity(d, d)) +
                    omega * (kron(sigma_plus, ops.a.matrix) +
                             kron(sigma_plus.adjoint(), ops.a_dag.matrix));
  return detail::hermitian_propagator(h, t);
}

/// Total excitation number |e><e| + a^dag a on atom{e,g} (x) field.
inline CMatrix excitation_number(const FockConfig& cfg) {
  const LadderOps ops = ladder_ops(cfg);
  return kron(atomic_projector(Level::e, 2), CMatrix::Identity(cfg.dim, cfg.dim)) +
         kron(CMatrix::Identity(2, 2), ops.n.matrix);
}

struct DispersiveGate {
  double phi = 0.0;
  CMatrix unitary;  // atom{e,g} (x) field
};

/// |e><e| (x) e^{+i phi n} + |g><g| (x) e^{-i phi n}.
inline DispersiveGate dispersive_unitary(double phi, const FockConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim;
  CMatrix u = CMatrix::Zero(2 * d, 2 * d);
  u.block(index(Level::e) * d, index(Level::e) * d, d, d) = number_phase(phi, d);
  u.block(index(Level::g) * d, index(Level::g) * d, d, d) = number_phase(-phi, d);
  return {phi, std::move(u)};
}

struct RamseyPulse {
  double theta = 0.0;
  CMatrix unitary;  // 2x2 on {e, g}
};

/// Real rotation: |e> -> cos(theta/2)|e> + sin(theta/2)|g>,
///                |g> -> -sin(theta/2)|e> + cos(theta/2)|g>.
inline RamseyPulse ramsey_unitary(double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  CMatrix r(2, 2);
  r(index(Level::e), index(Level::e)) = c;
  r(index(Level::g), index(Level::e)) = s;
  r(index(Level::e), index(Level::g)) = -s;
  r(index(Level::g), index(Level::g)) = c;
  return {theta, std::move(r)};
}

/// Resonant pi pulse of the g <-> i transition with the C' mode, on
/// atom{e,g,i} (x) C'{0,1}: |g,0> -> -i|i,1> and |i,1> -> -i|g,0>. The mode
/// is truncated to one photon, so |g,1> and |i,0> are left alone, as is e.
inline CMatrix cprime_pi_pulse() {
  constexpr int modes = 2;
  CMatrix h = CMatrix::Zero(3 * modes, 3 * modes);
  const int g0 = index(Level::g) * modes + 0;
  const int i1 = index(Level::i) * modes + 1;
  h(g0, i1) = 1.0;
  h(i1, g0) = 1.0;
  // vacuum Rabi coupling 1 for a time pi/2
  return detail::hermitian_propagator(h, 0.5 * std::numbers::pi);
}

/// Ideal adiabatic rapid passage in C: |e,n> -> |g,n+1> for n < D-1 with no
/// phase. The map is completed to a unitary on atom{e,g} (x) field by the
/// reverse passage |g,n+1> -> |e,n>; |g,0> has no partner, and |e,D-1> is
/// the truncation edge and is left in place (feedback_injection warns).
inline CMatrix photon_injection(const FockConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim;
  const int e = index(Level::e) * d;
  const int g = index(Level::g) * d;
  CMatrix u = CMatrix::Zero(2 * d, 2 * d);
  for (int n = 0; n + 1 < d; ++n) {
    u(g + n + 1, e + n) = 1.0;
    u(e + n, g + n + 1) = 1.0;
  }
  u(g, g) = 1.0;
  u(e + d - 1, e + d - 1) = 1.0;
  return u;
}

}  // namespace catfb

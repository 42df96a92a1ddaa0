// Scalar diagnostics of protection quality.
#pragma once

#include "catfb/core.hpp"

#include <cstdio>
#include <span>

namespace catfb {

/// <psi|rho|psi>, clipped to [0, 1].
inline double fidelity(const FieldDensity& rho, const PureFieldState& target) {
  if (rho.dim() != target.dim()) throw ValidationError("fidelity: dimension mismatch");
  const double f = target.amplitudes().dot(rho.matrix() * target.amplitudes()).real();
  return std::clamp(f, 0.0, 1.0);
}

/// tr(rho (P_even - P_odd)).
inline double parity_expectation(const CMatrix& rho) {
  double p = 0.0;
  for (Eigen::Index n = 0; n < rho.rows(); ++n) p += (n % 2 == 0 ? 1.0 : -1.0) * rho(n, n).real();
  return p;
}

inline double parity_expectation(const FieldDensity& rho) {
  return parity_expectation(rho.matrix());
}

inline double mean_photon_number(const FieldDensity& rho) {
  double n = 0.0;
  for (int k = 0; k < rho.dim(); ++k) n += k * rho.matrix()(k, k).real();
  return n;
}

/// Interference weight between the lobes |alpha_t> and |-alpha_t>:
///   2 |<a|rho|-a>| / (<a|rho|a> + <-a|rho|-a>)
/// where alpha_t is the lobe amplitude expected at the evaluation time.
inline double cat_coherence(const FieldDensity& rho, cplx alpha_t, WarningLog* warnings = nullptr) {
  const FockConfig cfg(rho.dim());
  const CVector plus = coherent_state(alpha_t, cfg).amplitudes();
  const CVector minus = coherent_state(-alpha_t, cfg).amplitudes();
  const CMatrix& m = rho.matrix();
  const cplx cross = plus.dot(m * minus);
  const double denom = plus.dot(m * plus).real() + minus.dot(m * minus).real();
  if (denom < 1e-12) throw std::domain_error("cat_coherence: lobes carry no population");
  const double c = 2.0 * std::abs(cross) / denom;
  const double clipped = std::clamp(c, 0.0, 1.0);
  // rounding puts ideal states a few ulps above 1; only real excursions are logged
  if (std::abs(c - clipped) > 1e-12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "cat_coherence clipped from %.17g", c);
    detail::warn(warnings, buf);
  }
  return clipped;
}

struct DecoherenceEstimate {
  double t_dec_gamma_units = 0.0;  // decoherence time in units of 1/gamma
  double fit_residual = 0.0;       // RMS residual of log-coherence
  int points_used = 0;
};

struct CoherenceSample {
  double gamma_t = 0.0;
  double coherence = 0.0;
};

/// Least-squares fit of log C(t) = -t / t_dec over the initial window where
/// the coherence stays above `threshold`. The window must be non-increasing.
inline DecoherenceEstimate estimate_decoherence_time(std::span<const CoherenceSample> series,
                                                     double threshold = 0.2) {
  if (series.size() < 4) throw ValidationError("decoherence fit needs at least 4 points");
  if (!(series.back().coherence < series.front().coherence))
    throw ValidationError("coherence series does not decay");

  std::size_t end = 0;
  while (end < series.size() && series[end].coherence > threshold) ++end;
  if (end == 0) throw ValidationError("all coherence values are below the fit threshold");

  double stt = 0.0, stl = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < end; ++k) {
    if (k > 0 && series[k].coherence > series[k - 1].coherence * (1.0 + 1e-9))
      throw ValidationError("coherence series is not monotone in the fit window");
    const double t = series[k].gamma_t;
    stt += t * t;
    stl += t * std::log(series[k].coherence);
    ++used;
  }
  if (!(stt > 0.0) || !(stl < 0.0))
    throw ValidationError("fit window has no decaying point with t > 0");

  const double rate = -stl / stt;
  double ss = 0.0;
  for (std::size_t k = 0; k < end; ++k) {
    const double r = std::log(series[k].coherence) + rate * series[k].gamma_t;
    ss += r * r;
  }
  return {1.0 / rate, std::sqrt(ss / used), used};
}

}  // namespace catfb

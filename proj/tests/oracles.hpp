// Independent reference computations used by the tests. Nothing here calls
// the library's channel, gate or state builders.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>

namespace oracle {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Untruncated coherent amplitudes restricted to |0..dim-1> (no
/// renormalization), from the log-gamma form of the Poisson weights.
inline CVector coherent(cplx beta, int dim) {
  CVector c(dim);
  const double r = std::abs(beta);
  for (int n = 0; n < dim; ++n) {
    if (r == 0.0) {
      c(n) = n == 0 ? 1.0 : 0.0;
      continue;
    }
    const double mag = std::exp(-0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0));
    c(n) = std::polar(mag, n * std::arg(beta));
  }
  return c;
}

/// Damped cat after gamma*t, starting from N(|a> + sign |-a>):
/// |b><b| + |-b><-b| + sign f (|b><-b| + |-b><b|), b = a e^{-gt/2},
/// f = exp(-2|a|^2 (1 - e^{-gt})), normalized by its trace.
inline CMatrix damped_cat(cplx a, int sign, double gt, int dim) {
  const double eta = std::exp(-gt);
  const cplx b = a * std::sqrt(eta);
  const double f = std::exp(-2.0 * std::norm(a) * (1.0 - eta));
  const CVector p = coherent(b, dim), m = coherent(-b, dim);
  CMatrix rho = p * p.adjoint() + m * m.adjoint() +
                static_cast<double>(sign) * f * (p * m.adjoint() + m * p.adjoint());
  return rho / rho.trace().real();
}

/// Literal lobe-overlap coherence of the damped cat at its own lobe
/// amplitude, with o = <b|-b> = exp(-2|b|^2):  |f(1+o^2) - 2o| / (1+o^2-2fo).
inline double damped_cat_coherence(double abs_a_sq, double gt) {
  const double eta = std::exp(-gt);
  const double f = std::exp(-2.0 * abs_a_sq * (1.0 - eta));
  const double o = std::exp(-2.0 * abs_a_sq * eta);
  return std::abs(f * (1.0 + o * o) - 2.0 * o) / (1.0 + o * o - 2.0 * f * o);
}

/// Superoperator (column stacking) of rho -> P_odd rho P_odd + S P_even rho P_even S^dag,
/// S the photon shift, filled element by element from the action on |a><b|.
inline CMatrix correction_superop(int dim) {
  const long d2 = static_cast<long>(dim) * dim;
  CMatrix s = CMatrix::Zero(d2, d2);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      const long in = a + static_cast<long>(dim) * b;
      if (a % 2 == 1 && b % 2 == 1) {
        s(in, in) = 1.0;
      } else if (a % 2 == 0 && b % 2 == 0 && a + 1 < dim && b + 1 < dim) {
        s((a + 1) + static_cast<long>(dim) * (b + 1), in) = 1.0;
      }
    }
  return s;
}

inline CMatrix correction_map(const CMatrix& rho) {
  const int dim = static_cast<int>(rho.rows());
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      if (a % 2 == 1 && b % 2 == 1) out(a, b) += rho(a, b);
      if (a % 2 == 0 && b % 2 == 0 && a + 1 < dim && b + 1 < dim) out(a + 1, b + 1) += rho(a, b);
    }
  return out;
}

/// Keeps the entries whose row and column share the requested parity.
inline CMatrix parity_block(const CMatrix& rho, int parity) {
  CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
  for (Eigen::Index a = 0; a < rho.rows(); ++a)
    for (Eigen::Index b = 0; b < rho.cols(); ++b)
      if (a % 2 == parity && b % 2 == parity) out(a, b) = rho(a, b);
  return out;
}

/// Random full-rank density matrix G G^dag / tr, G complex Ginibre.
inline CMatrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

/// Random density confined to the low levels (higher ones empty), so that
/// maps raising the photon number stay inside the truncation.
inline CMatrix random_low_density(int dim, int occupied, std::mt19937_64& rng) {
  CMatrix rho = CMatrix::Zero(dim, dim);
  rho.topLeftCorner(occupied, occupied) = random_density(occupied, rng);
  return rho;
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle

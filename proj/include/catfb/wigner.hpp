// Wigner function by displaced parity.
//
// W(beta) = (2/pi) tr[rho D(beta) P D(beta)^dag] = (2/pi) tr[rho D(2 beta) P],
// with P the photon-number parity. The displacement matrix elements
// <m|D(z)|n> are taken in closed form (associated Laguerre polynomials), so
// the only approximation is the truncation of rho itself; in particular
// |W| <= 2/pi holds exactly.
#pragma once

#include "catfb/core.hpp"

#include <thread>

namespace catfb {

/// <m|D(z)|n> for m, n < dim, exact (no truncation of the displaced state).
inline CMatrix displacement_elements(cplx z, int dim) {
  if (dim < 1) throw ValidationError("displacement_elements: dim must be positive");
  if (z == cplx(0.0)) return CMatrix::Identity(dim, dim);
  const double x = std::norm(z);
  const double log_r = 0.5 * std::log(x);
  const double arg = std::arg(z);
  CMatrix out(dim, dim);
  std::vector<double> lag(dim);
  for (int a = 0; a < dim; ++a) {
    // L_k^{(a)}(x), k = 0 .. dim-1-a
    const int kmax = dim - 1 - a;
    lag[0] = 1.0;
    if (kmax >= 1) lag[1] = 1.0 + a - x;
    for (int k = 1; k < kmax; ++k)
      lag[k + 1] = ((2.0 * k + 1.0 + a - x) * lag[k] - (k + a) * lag[k - 1]) / (k + 1.0);
    const cplx below = std::polar(1.0, a * arg);                      // m = n + a
    const cplx above = std::polar(a % 2 == 0 ? 1.0 : -1.0, -a * arg);  // n = m + a
    for (int k = 0; k <= kmax; ++k) {
      const double scale =
          std::exp(0.5 * (std::lgamma(k + 1.0) - std::lgamma(k + a + 1.0)) + a * log_r - 0.5 * x) *
          lag[k];
      out(k + a, k) = scale * below;
      if (a > 0) out(k, k + a) = scale * above;
    }
  }
  return out;
}

inline double wigner_point(const CMatrix& rho, cplx beta, WarningLog* warnings = nullptr) {
  const int d = static_cast<int>(rho.rows());
  const CMatrix disp = displacement_elements(2.0 * beta, d);
  cplx acc = 0.0;
  for (int n = 0; n < d; ++n) {
    const double sign = n % 2 == 0 ? 1.0 : -1.0;
    // sum_m rho_{nm} <m|D|n>
    acc += sign * rho.row(n).transpose().cwiseProduct(disp.col(n)).sum();
  }
  if (std::abs(acc.imag()) > 1e-10)
    detail::warn(warnings, "wigner_point: discarded imaginary part " + std::to_string(acc.imag()));
  return 2.0 / std::numbers::pi * acc.real();
}

inline double wigner_point(const FieldDensity& rho, cplx beta, WarningLog* warnings = nullptr) {
  return wigner_point(rho.matrix(), beta, warnings);
}

/// Square grid over [-extent, extent]^2 with beta = x + i p.
struct WignerGrid {
  Eigen::VectorXd x_axis;
  Eigen::VectorXd p_axis;
  Eigen::MatrixXd values;  // values(ip, ix) = W(x_axis[ix] + i p_axis[ip])
  double extent = 0.0;

  double cell_area() const {
    const double hx = (x_axis(x_axis.size() - 1) - x_axis(0)) / static_cast<double>(x_axis.size() - 1);
    const double hp = (p_axis(p_axis.size() - 1) - p_axis(0)) / static_cast<double>(p_axis.size() - 1);
    return hx * hp;
  }
  /// Riemann approximation of the integral of W; ~ tr rho.
  double integral() const { return values.sum() * cell_area(); }
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

/// Runs body(k) for k in [0, n) on up to `workers` threads.
template <class Body>
void parallel_for(int n, int workers, Body&& body) {
  if (workers <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::jthread> pool;
  const int used = std::min(workers, n);
  for (int w = 0; w < used; ++w)
    pool.emplace_back([&, w] {
      for (int k = w; k < n; k += used) body(k);
    });
}

inline WignerGrid wigner_grid(const CMatrix& rho, double extent, int n_points, int workers = 0) {
  if (n_points < 2) throw ValidationError("wigner_grid: n_points must be >= 2");
  if (!(extent > 0.0)) throw ValidationError("wigner_grid: extent must be positive");
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  WignerGrid grid;
  grid.extent = extent;
  grid.x_axis = Eigen::VectorXd::LinSpaced(n_points, -extent, extent);
  grid.p_axis = grid.x_axis;
  grid.values.resize(n_points, n_points);
  parallel_for(n_points, workers, [&](int ip) {
    for (int ix = 0; ix < n_points; ++ix)
      grid.values(ip, ix) = wigner_point(rho, cplx(grid.x_axis(ix), grid.p_axis(ip)));
  });
  return grid;
}

inline WignerGrid wigner_grid(const FieldDensity& rho, double extent = 4.0, int n_points = 101,
                              int workers = 0) {
  return wigner_grid(rho.matrix(), extent, n_points, workers);
}

/// Sum of |min(W, 0)| times the cell area.
inline double negativity_volume(const WignerGrid& grid) {
  return grid.values.cwiseMin(0.0).cwiseAbs().sum() * grid.cell_area();
}

}  // namespace catfb

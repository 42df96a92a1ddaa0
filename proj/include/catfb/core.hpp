// Truncated Fock-space linear algebra: states, ladder operators, tensor
// products and partial traces. Everything is dense; the largest space the
// library builds is probe(3) x feedback(3) x C'(2) x field(D).
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace catfb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Collects non-fatal diagnostics (truncation tails, clipping, ...).
using WarningLog = std::vector<std::string>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void warn(WarningLog* log, std::string msg) {
  if (log != nullptr) log->push_back(std::move(msg));
}

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Fock truncation: basis |0>, ..., |dim-1>.
struct FockConfig {
  int dim = 40;
  /// Allowed population in the two highest Fock levels.
  double truncation_tol = 1e-8;

  FockConfig() = default;
  explicit FockConfig(int d, double tol = 1e-8) : dim(d), truncation_tol(tol) {
    validate();
  }

  void validate() const {
    if (dim < 2) throw ValidationError("Fock dimension must be >= 2");
    if (!(truncation_tol > 0.0)) throw ValidationError("truncation tolerance must be positive");
  }
};

/// Population of the two highest Fock levels of a diagonal.
inline double tail_population(const Eigen::VectorXd& populations) {
  const Eigen::Index n = populations.size();
  double tail = populations(n - 1);
  if (n >= 2) tail += populations(n - 2);
  return tail;
}

class FieldDensity;

class PureFieldState {
 public:
  /// Normalizes the amplitudes; a zero vector is rejected.
  explicit PureFieldState(CVector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 2) throw ValidationError("field state needs at least two levels");
    const double norm = amps_.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ValidationError("field state has zero norm");
    amps_ /= norm;
  }

  const CVector& amplitudes() const { return amps_; }
  int dim() const { return static_cast<int>(amps_.size()); }
  cplx operator[](int n) const { return amps_(n); }

  double tail_population() const { return catfb::tail_population(amps_.cwiseAbs2()); }

  FieldDensity density() const;

 private:
  CVector amps_;
};

/// Density matrix of the cavity mode. Construction validates Hermiticity,
/// unit trace and positivity.
class FieldDensity {
 public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPositivityTol = 1e-10;

  explicit FieldDensity(CMatrix m) : rho_(std::move(m)) { validate(); }

  const CMatrix& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

  double tail_population() const {
    return catfb::tail_population(rho_.diagonal().real());
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  void validate() const {
    if (rho_.rows() != rho_.cols() || rho_.rows() < 2)
      throw ValidationError("density matrix must be square with dim >= 2");
    if (!rho_.allFinite()) throw ValidationError("density matrix has non-finite entries");
    if (detail::max_abs(rho_ - rho_.adjoint()) > kHermitianTol)
      throw ValidationError("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - cplx(1.0)) > kTraceTol)
      throw ValidationError("density matrix trace differs from 1");
    if (min_eigenvalue() < -kPositivityTol)
      throw ValidationError("density matrix has a negative eigenvalue");
  }

  CMatrix rho_;
};

inline FieldDensity PureFieldState::density() const {
  return FieldDensity(amps_ * amps_.adjoint());
}

struct Operator {
  CMatrix matrix;
  std::string label;

  int dim() const { return static_cast<int>(matrix.rows()); }
};

struct Factor {
  std::string label;
  int dim = 0;

  bool operator==(const Factor&) const = default;
};

/// Density matrix on an ordered tensor product. The leftmost factor is the
/// slowest-varying index.
class JointState {
 public:
  static constexpr double kTol = 1e-10;

  JointState(CMatrix m, std::vector<Factor> factors)
      : rho_(std::move(m)), factors_(std::move(factors)) {
    validate();
  }

  const CMatrix& matrix() const { return rho_; }
  const std::vector<Factor>& factors() const { return factors_; }

  int index_of(const std::string& label) const {
    for (std::size_t k = 0; k < factors_.size(); ++k)
      if (factors_[k].label == label) return static_cast<int>(k);
    throw ValidationError("unknown factor label '" + label + "'");
  }

  double trace() const { return rho_.trace().real(); }

 private:
  void validate() const {
    long long product = 1;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (factors_[k].dim < 1) throw ValidationError("factor dimension must be positive");
      for (std::size_t j = 0; j < k; ++j)
        if (factors_[j].label == factors_[k].label)
          throw ValidationError("duplicate factor label '" + factors_[k].label + "'");
      product *= factors_[k].dim;
    }
    if (rho_.rows() != rho_.cols() || product != rho_.rows())
      throw ValidationError("joint state dimension does not match its factors");
    if (detail::max_abs(rho_ - rho_.adjoint()) > kTol)
      throw ValidationError("joint state is not Hermitian");
    if (std::abs(rho_.trace() - cplx(1.0)) > kTol)
      throw ValidationError("joint state trace differs from 1");
    if (rho_.rows() > 1) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -kTol)
        throw ValidationError("joint state has a negative eigenvalue");
    }
  }

  CMatrix rho_;
  std::vector<Factor> factors_;
};

// ---------------------------------------------------------------------------
// States

/// |alpha> on the truncated space, renormalized after truncation.
inline PureFieldState coherent_state(cplx alpha, const FockConfig& cfg,
                                     WarningLog* warnings = nullptr) {
  cfg.validate();
  CVector c(cfg.dim);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < cfg.dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  const double tail = tail_population(c.cwiseAbs2());
  if (tail > cfg.truncation_tol)
    detail::warn(warnings, "coherent state tail population " + std::to_string(tail) +
                               " exceeds truncation tolerance");
  return PureFieldState(std::move(c));
}

enum class Parity { even, odd };

/// N_(+/-) (|alpha> +/- |-alpha>). Built from the untruncated Taylor
/// coefficients, so the wrong-parity amplitudes are exactly zero.
inline PureFieldState cat_state(cplx alpha, Parity parity, const FockConfig& cfg,
                                WarningLog* warnings = nullptr) {
  cfg.validate();
  if (parity == Parity::odd && alpha == cplx(0.0))
    throw ValidationError("odd cat state is undefined for alpha = 0");
  CVector c = CVector::Zero(cfg.dim);
  cplx term = std::exp(-0.5 * std::norm(alpha));
  const int first = parity == Parity::even ? 0 : 1;
  for (int n = 0; n < cfg.dim; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    if (n % 2 == first) c(n) = 2.0 * term;
  }
  if (!(c.norm() > 0.0)) throw ValidationError("cat state amplitude underflow");
  PureFieldState state(std::move(c));
  const double tail = state.tail_population();
  if (tail > cfg.truncation_tol)
    detail::warn(warnings, "cat state tail population " + std::to_string(tail) +
                               " exceeds truncation tolerance");
  return state;
}

/// Fock state |n>.
inline PureFieldState fock_state(int n, const FockConfig& cfg) {
  if (n < 0 || n >= cfg.dim) throw ValidationError("Fock index out of range");
  CVector c = CVector::Zero(cfg.dim);
  c(n) = 1.0;
  return PureFieldState(std::move(c));
}

// ---------------------------------------------------------------------------
// Operators

struct LadderOps {
  Operator a;
  Operator a_dag;
  Operator n;
};

inline LadderOps ladder_ops(const FockConfig& cfg) {
  cfg.validate();
  CMatrix a = CMatrix::Zero(cfg.dim, cfg.dim);
  for (int n = 1; n < cfg.dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  CMatrix a_dag = a.adjoint();
  CMatrix num = a_dag * a;
  return {{std::move(a), "a"}, {std::move(a_dag), "a_dag"}, {std::move(num), "n"}};
}

struct ParityProjectors {
  Operator even;
  Operator odd;
};

inline ParityProjectors parity_projectors(const FockConfig& cfg) {
  cfg.validate();
  CMatrix even = CMatrix::Zero(cfg.dim, cfg.dim);
  CMatrix odd = CMatrix::Zero(cfg.dim, cfg.dim);
  for (int n = 0; n < cfg.dim; ++n) (n % 2 == 0 ? even : odd)(n, n) = 1.0;
  return {{std::move(even), "P_even"}, {std::move(odd), "P_odd"}};
}

/// Photon-number diagonal e^{i theta n}; a phase-space rotation.
inline CMatrix number_phase(double theta, int dim) {
  CVector d(dim);
  for (int n = 0; n < dim; ++n) d(n) = std::polar(1.0, theta * n);
  return d.asDiagonal();
}

/// exp(beta a^dag - beta^* a) on the truncated space (Pade scaling and
/// squaring). Exactly unitary up to rounding, but only matches the
/// untruncated displacement on levels well below the edge.
inline Operator displacement_op(cplx beta, const FockConfig& cfg) {
  const LadderOps ops = ladder_ops(cfg);
  const CMatrix generator = beta * ops.a_dag.matrix - std::conj(beta) * ops.a.matrix;
  return {generator.exp(), "D"};
}

// ---------------------------------------------------------------------------
// Tensor products and partial traces

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Operator tensor(const Operator& a, const Operator& b) {
  return {kron(a.matrix, b.matrix), a.label + "(x)" + b.label};
}

/// Product state from labelled factor density matrices.
inline JointState tensor(const std::vector<std::pair<Factor, CMatrix>>& parts) {
  if (parts.empty()) throw ValidationError("tensor product of nothing");
  CMatrix out = CMatrix::Ones(1, 1);
  std::vector<Factor> factors;
  for (const auto& [factor, m] : parts) {
    if (m.rows() != factor.dim || m.cols() != factor.dim)
      throw ValidationError("factor '" + factor.label + "' dimension mismatch");
    out = kron(out, m);
    factors.push_back(factor);
  }
  return JointState(std::move(out), std::move(factors));
}

namespace detail {

/// Mixed-radix index bookkeeping over an ordered factor list.
struct Radix {
  std::vector<int> dims;
  std::vector<long> strides;

  explicit Radix(const std::vector<Factor>& factors) {
    dims.reserve(factors.size());
    for (const auto& f : factors) dims.push_back(f.dim);
    strides.assign(dims.size(), 1);
    for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
      strides[k] = strides[k + 1] * dims[k + 1];
  }

  long total() const { return dims.empty() ? 1 : strides[0] * dims[0]; }
  int digit(long index, std::size_t k) const {
    return static_cast<int>((index / strides[k]) % dims[k]);
  }
};

inline std::vector<int> resolve(const std::vector<Factor>& factors,
                                const std::vector<std::string>& labels) {
  std::vector<int> idx;
  for (const auto& label : labels) {
    int found = -1;
    for (std::size_t k = 0; k < factors.size(); ++k)
      if (factors[k].label == label) found = static_cast<int>(k);
    if (found < 0) throw ValidationError("unknown factor label '" + label + "'");
    for (int prev : idx)
      if (prev == found) throw ValidationError("factor label '" + label + "' repeated");
    idx.push_back(found);
  }
  return idx;
}

}  // namespace detail

/// Lifts `op`, acting on the listed factors in the listed order, to the full
/// product space (identity elsewhere).
inline CMatrix embed(const CMatrix& op, const std::vector<Factor>& factors,
                     const std::vector<std::string>& targets) {
  const std::vector<int> where = detail::resolve(factors, targets);
  const detail::Radix full(factors);
  std::vector<Factor> sub;
  for (int k : where) sub.push_back(factors[k]);
  const detail::Radix local(sub);
  if (op.rows() != local.total() || op.cols() != local.total())
    throw ValidationError("operator dimension does not match target factors");

  const long n = full.total();
  CMatrix out = CMatrix::Zero(n, n);
  for (long col = 0; col < n; ++col) {
    long local_col = 0;
    long base = col;
    for (std::size_t t = 0; t < where.size(); ++t) {
      const int d = full.digit(col, where[t]);
      local_col += d * local.strides[t];
      base -= d * full.strides[where[t]];
    }
    for (long local_row = 0; local_row < local.total(); ++local_row) {
      const cplx v = op(local_row, local_col);
      if (v == cplx(0.0)) continue;
      long row = base;
      for (std::size_t t = 0; t < where.size(); ++t)
        row += local.digit(local_row, t) * full.strides[where[t]];
      out(row, col) = v;
    }
  }
  return out;
}

/// Traces out every factor not listed in `keep`. Kept factors retain their
/// original relative order. Works on any square matrix over `factors`.
inline CMatrix partial_trace(const CMatrix& m, const std::vector<Factor>& factors,
                             const std::vector<std::string>& keep,
                             std::vector<Factor>* kept_factors = nullptr) {
  std::vector<int> kept_idx = detail::resolve(factors, keep);
  std::sort(kept_idx.begin(), kept_idx.end());
  std::vector<Factor> kept, traced;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const bool is_kept = std::find(kept_idx.begin(), kept_idx.end(), static_cast<int>(k)) !=
                         kept_idx.end();
    (is_kept ? kept : traced).push_back(factors[k]);
  }
  const detail::Radix full(factors), rk(kept), rt(traced);
  if (m.rows() != full.total() || m.cols() != full.total())
    throw ValidationError("matrix dimension does not match factors");

  // full index for every (kept, traced) pair
  std::vector<long> index(static_cast<std::size_t>(rk.total() * rt.total()));
  for (long f = 0; f < full.total(); ++f) {
    long ki = 0, ti = 0;
    std::size_t kpos = 0, tpos = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      const int d = full.digit(f, k);
      if (kpos < kept.size() && kept_idx[kpos] == static_cast<int>(k))
        ki += d * rk.strides[kpos++];
      else
        ti += d * rt.strides[tpos++];
    }
    index[static_cast<std::size_t>(ki * rt.total() + ti)] = f;
  }

  CMatrix out = CMatrix::Zero(rk.total(), rk.total());
  for (long i = 0; i < rk.total(); ++i)
    for (long j = 0; j < rk.total(); ++j) {
      cplx s = 0.0;
      for (long t = 0; t < rt.total(); ++t)
        s += m(index[i * rt.total() + t], index[j * rt.total() + t]);
      out(i, j) = s;
    }
  if (kept_factors != nullptr) *kept_factors = std::move(kept);
  return out;
}

/// Reduced state on the kept factors. Keeping nothing yields the 1x1 trace.
inline JointState partial_trace(const JointState& state, const std::vector<std::string>& keep) {
  std::vector<Factor> kept;
  CMatrix reduced = partial_trace(state.matrix(), state.factors(), keep, &kept);
  return JointState(std::move(reduced), std::move(kept));
}

/// Reduced state of a single field-like factor.
inline FieldDensity reduce_to_field(const JointState& state, const std::string& label) {
  return FieldDensity(partial_trace(state.matrix(), state.factors(), {label}));
}

/// U rho U^dag on a joint state, with U acting on `targets`.
inline JointState apply_local(const JointState& state, const CMatrix& op,
                              const std::vector<std::string>& targets) {
  const CMatrix u = embed(op, state.factors(), targets);
  return JointState(u * state.matrix() * u.adjoint(), state.factors());
}

inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace catfb

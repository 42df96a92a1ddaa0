// Completely positive maps on the field in Kraus form, with an optional
// cached superoperator for repeated application.
#pragma once

#include "catfb/core.hpp"

#include <memory>

namespace catfb {

/// rho -> sum_k K_k rho K_k^dag.
///
/// Superoperators use the column-stacking convention: vec(rho) lists the
/// columns of rho (Eigen's native storage), so vec(A rho B) =
/// (B^T (x) A) vec(rho) and the channel matrix is sum_k conj(K_k) (x) K_k.
class QuantumChannel {
 public:
  QuantumChannel(int dim, std::vector<CMatrix> kraus, std::string label = "channel")
      : dim_(dim), label_(std::move(label)) {
    if (dim < 1) throw ValidationError("channel dimension must be positive");
    for (auto& k : kraus) {
      if (k.rows() != dim || k.cols() != dim)
        throw ValidationError("Kraus operator dimension mismatch in " + label_);
      // exactly-zero operators come from zero-weight branches
      if (k.cwiseAbs2().sum() > 0.0) kraus_.push_back(std::move(k));
    }
  }

  static QuantumChannel identity(int dim) {
    return QuantumChannel(dim, {CMatrix::Identity(dim, dim)}, "identity");
  }

  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  const std::vector<CMatrix>& kraus() const { return kraus_; }

  /// max-norm of sum_k K_k^dag K_k - I.
  double trace_preservation_error() const {
    CMatrix s = CMatrix::Zero(dim_, dim_);
    for (const auto& k : kraus_) s += k.adjoint() * k;
    return detail::max_abs(s - CMatrix::Identity(dim_, dim_));
  }

  /// This channel followed by `next`.
  QuantumChannel then(const QuantumChannel& next) const {
    if (next.dim_ != dim_) throw ValidationError("cannot compose channels of different dimension");
    std::vector<CMatrix> out;
    out.reserve(kraus_.size() * next.kraus_.size());
    for (const auto& b : next.kraus_)
      for (const auto& a : kraus_) out.push_back(b * a);
    return QuantumChannel(dim_, std::move(out), label_ + ";" + next.label_);
  }

  /// Convex combination sum_j w_j E_j. Weights must be non-negative; they are
  /// not renormalized.
  static QuantumChannel mixture(const std::vector<std::pair<double, QuantumChannel>>& parts,
                                std::string label = "mixture") {
    if (parts.empty()) throw ValidationError("empty channel mixture");
    const int dim = parts.front().second.dim();
    std::vector<CMatrix> out;
    for (const auto& [w, ch] : parts) {
      if (w < 0.0) throw ValidationError("negative mixture weight");
      if (ch.dim() != dim) throw ValidationError("mixture of channels of different dimension");
      if (w == 0.0) continue;
      for (const auto& k : ch.kraus()) out.push_back(std::sqrt(w) * k);
    }
    return QuantumChannel(dim, std::move(out), std::move(label));
  }

  CMatrix superoperator() const {
    if (superop_) return *superop_;
    const long d2 = static_cast<long>(dim_) * dim_;
    CMatrix s = CMatrix::Zero(d2, d2);
    for (const auto& k : kraus_)
      for (int j = 0; j < dim_; ++j)
        for (int i = 0; i < dim_; ++i) {
          const cplx c = std::conj(k(i, j));
          if (c != cplx(0.0)) s.block(i * dim_, j * dim_, dim_, dim_) += c * k;
        }
    return s;
  }

  /// Copy carrying a precomputed superoperator; apply() then costs one
  /// D^2 x D^2 matrix-vector product.
  QuantumChannel cached() const {
    QuantumChannel out = *this;
    if (!out.superop_) out.superop_ = std::make_shared<const CMatrix>(superoperator());
    return out;
  }

  bool has_cached_superoperator() const { return static_cast<bool>(superop_); }

  CMatrix apply(const CMatrix& rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_)
      throw ValidationError("state dimension does not match channel " + label_);
    if (superop_) {
      CMatrix out(dim_, dim_);
      Eigen::Map<CVector>(out.data(), out.size()) =
          (*superop_) * Eigen::Map<const CVector>(rho.data(), rho.size());
      return out;
    }
    CMatrix out = CMatrix::Zero(dim_, dim_);
    for (const auto& k : kraus_) out.noalias() += k * rho * k.adjoint();
    return out;
  }

  FieldDensity apply(const FieldDensity& rho) const { return FieldDensity(apply(rho.matrix())); }

 private:
  int dim_;
  std::string label_;
  std::vector<CMatrix> kraus_;
  std::shared_ptr<const CMatrix> superop_;
};

inline FieldDensity apply_channel(const QuantumChannel& ch, const FieldDensity& rho) {
  return ch.apply(rho);
}

/// Choi matrix sum_{ab} |a><b| (x) E(|a><b|) from a column-stacked
/// superoperator.
inline CMatrix choi_matrix(const CMatrix& superop, int dim) {
  const long d2 = static_cast<long>(dim) * dim;
  if (superop.rows() != d2 || superop.cols() != d2)
    throw ValidationError("superoperator dimension mismatch");
  CMatrix choi(d2, d2);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d)
          choi(a * dim + c, b * dim + d) = superop(c + dim * d, a + dim * b);
  return choi;
}

/// Largest deviation of tr E(|a><b|) from delta_ab.
inline double superop_trace_defect(const CMatrix& superop, int dim) {
  double worst = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      cplx tr = 0.0;
      for (int c = 0; c < dim; ++c) tr += superop(c + dim * c, a + dim * b);
      worst = std::max(worst, std::abs(tr - cplx(a == b ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace catfb

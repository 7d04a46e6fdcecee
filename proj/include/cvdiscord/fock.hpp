#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "cvdiscord/errors.hpp"

namespace cvdiscord {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using SpMatrix = Eigen::SparseMatrix<cplx>;
using Index = Eigen::Index;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kNegativeEigenvalueTolerance = 1e-10;
inline constexpr double kEigenvalueCutoff = 1e-14;

// Tensor-product Fock space; mode 0 is the most significant index.
class HilbertSpec {
 public:
  explicit HilbertSpec(std::vector<int> mode_dims) : dims_(std::move(mode_dims)) {
    if (dims_.empty()) throw InvalidArgument("HilbertSpec: no modes");
    for (int d : dims_)
      if (d < 2) throw InvalidArgument("HilbertSpec: every mode dimension must be >= 2");
    strides_.assign(dims_.size(), 1);
    for (int m = static_cast<int>(dims_.size()) - 2; m >= 0; --m) strides_[m] = strides_[m + 1] * dims_[m + 1];
    total_ = strides_[0] * dims_[0];
  }

  const std::vector<int> &mode_dims() const { return dims_; }
  int modes() const { return static_cast<int>(dims_.size()); }
  int dim(int mode) const {
    check_mode(mode);
    return dims_[mode];
  }
  Index total_dim() const { return total_; }
  Index stride(int mode) const {
    check_mode(mode);
    return strides_[mode];
  }
  int digit(Index index, int mode) const { return static_cast<int>((index / strides_[mode]) % dims_[mode]); }

  void check_mode(int mode) const {
    if (mode < 0 || mode >= modes())
      throw InvalidArgument("mode index " + std::to_string(mode) + " out of range for " +
                            std::to_string(modes()) + " modes");
  }

  bool operator==(const HilbertSpec &other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<Index> strides_;
  Index total_ = 0;
};

inline double hermitian_error(const CMatrix &m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

class Ket {
 public:
  Ket(HilbertSpec space, CVector amplitudes) : space_(std::move(space)), amps_(std::move(amplitudes)) {
    if (amps_.size() != space_.total_dim()) throw InvalidArgument("Ket: amplitude length does not match space");
  }

  const HilbertSpec &space() const { return space_; }
  const CVector &amplitudes() const { return amps_; }
  double norm() const { return amps_.norm(); }

  Ket normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalIntegrityError("Ket: cannot normalize a zero vector");
    return Ket(space_, amps_ / n);
  }

  cplx inner(const Ket &other) const {
    if (!(space_ == other.space_)) throw InvalidArgument("Ket: inner product across different spaces");
    return amps_.dot(other.amps_);
  }

 private:
  HilbertSpec space_;
  CVector amps_;
};

class DensityMatrix {
 public:
  // The stored matrix is made exactly Hermitian after the tolerance check.
  DensityMatrix(HilbertSpec space, CMatrix matrix) : space_(std::move(space)), rho_(std::move(matrix)) {
    if (rho_.rows() != space_.total_dim() || rho_.cols() != space_.total_dim())
      throw InvalidArgument("DensityMatrix: matrix size does not match space");
    const double scale = std::max(1.0, rho_.cwiseAbs().maxCoeff());
    if (hermitian_error(rho_) > kHermitianTolerance * scale)
      throw NumericalIntegrityError("DensityMatrix: matrix is not Hermitian");
    CMatrix sym = (rho_ + rho_.adjoint()) * 0.5;
    rho_ = std::move(sym);
  }

  static DensityMatrix from_ket(const Ket &ket) {
    return DensityMatrix(ket.space(), ket.amplitudes() * ket.amplitudes().adjoint());
  }

  const HilbertSpec &space() const { return space_; }
  const CMatrix &matrix() const { return rho_; }
  double trace() const { return rho_.trace().real(); }
  double purity() const { return (rho_ * rho_).trace().real(); }

  DensityMatrix normalized() const {
    const double t = trace();
    if (!(t > 0.0)) throw NumericalIntegrityError("DensityMatrix: nonpositive trace");
    return DensityMatrix(space_, rho_ / t);
  }

 private:
  HilbertSpec space_;
  CMatrix rho_;
};

class Operator {
 public:
  Operator(HilbertSpec space, SpMatrix matrix) : space_(std::move(space)), op_(std::move(matrix)) {
    if (op_.rows() != space_.total_dim() || op_.cols() != space_.total_dim())
      throw InvalidArgument("Operator: matrix size does not match space");
    op_.makeCompressed();
  }

  const HilbertSpec &space() const { return space_; }
  const SpMatrix &matrix() const { return op_; }
  CMatrix dense() const { return CMatrix(op_); }

  Operator adjoint() const { return Operator(space_, SpMatrix(op_.adjoint())); }

  Operator operator*(const Operator &other) const {
    if (!(space_ == other.space_)) throw InvalidArgument("Operator: product across different spaces");
    return Operator(space_, SpMatrix(op_ * other.op_));
  }

  Ket apply(const Ket &ket) const {
    if (!(space_ == ket.space())) throw InvalidArgument("Operator: ket lives in a different space");
    return Ket(space_, op_ * ket.amplitudes());
  }

  // U rho U^dagger
  DensityMatrix conjugate(const DensityMatrix &rho) const {
    if (!(space_ == rho.space())) throw InvalidArgument("Operator: state lives in a different space");
    CMatrix left = op_ * rho.matrix();
    CMatrix out = left * op_.adjoint();
    return DensityMatrix(space_, std::move(out));
  }

  cplx expectation(const DensityMatrix &rho) const {
    if (!(space_ == rho.space())) throw InvalidArgument("Operator: state lives in a different space");
    CMatrix prod = op_ * rho.matrix();
    return prod.trace();
  }

 private:
  HilbertSpec space_;
  SpMatrix op_;
};

// Per-mode dimension that keeps the coherent tail of amplitude |alpha| negligible.
inline int truncation_dim(double amplitude) {
  const double a = std::abs(amplitude);
  if (!std::isfinite(a)) throw InvalidArgument("truncation_dim: amplitude must be finite");
  return static_cast<int>(std::ceil(a * a + 6.0 * a + 12.0));
}

inline void check_displacement_fits(int dim, cplx alpha) {
  const double a = std::abs(alpha);
  if (a * a + 6.0 * a + 10.0 > dim)
    throw TruncationError("displacement |alpha|=" + std::to_string(a) + " does not fit in dimension " +
                          std::to_string(dim));
}

namespace detail {

inline SpMatrix from_dense(const CMatrix &m) { return m.sparseView(0.0, 0.0); }

inline SpMatrix local_annihilation(int d) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n < d; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SpMatrix a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline SpMatrix local_diagonal_phase(int d, double phi) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 0; n < d; ++n) t.emplace_back(n, n, std::polar(1.0, phi * n));
  SpMatrix u(d, d);
  u.setFromTriplets(t.begin(), t.end());
  return u;
}

inline CMatrix local_displacement(int d, cplx alpha) {
  const CMatrix a = CMatrix(local_annihilation(d));
  const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return gen.exp();
}

}  // namespace detail

// Lifts an operator acting on `modes` (first listed mode most significant) to the full space.
inline Operator embed(const HilbertSpec &space, const std::vector<int> &modes, const SpMatrix &local) {
  if (modes.empty()) throw InvalidArgument("embed: no modes given");
  std::vector<bool> used(space.modes(), false);
  Index local_dim = 1;
  for (int m : modes) {
    space.check_mode(m);
    if (used[m]) throw InvalidArgument("embed: repeated mode");
    used[m] = true;
    local_dim *= space.dim(m);
  }
  if (local.rows() != local_dim || local.cols() != local_dim)
    throw InvalidArgument("embed: local operator size does not match the selected modes");

  std::vector<Index> local_offset(local_dim);
  for (Index l = 0; l < local_dim; ++l) {
    Index rem = l, off = 0;
    for (int k = static_cast<int>(modes.size()) - 1; k >= 0; --k) {
      const int d = space.dim(modes[k]);
      off += (rem % d) * space.stride(modes[k]);
      rem /= d;
    }
    local_offset[l] = off;
  }
  std::vector<Index> other_offset{0};
  for (int m = 0; m < space.modes(); ++m) {
    if (used[m]) continue;
    std::vector<Index> next;
    next.reserve(other_offset.size() * space.dim(m));
    for (Index base : other_offset)
      for (int n = 0; n < space.dim(m); ++n) next.push_back(base + n * space.stride(m));
    other_offset = std::move(next);
  }

  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(local.nonZeros()) * other_offset.size());
  for (Index k = 0; k < local.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(local, k); it; ++it)
      for (Index o : other_offset) t.emplace_back(local_offset[it.row()] + o, local_offset[it.col()] + o, it.value());
  SpMatrix full(space.total_dim(), space.total_dim());
  full.setFromTriplets(t.begin(), t.end());
  return Operator(space, std::move(full));
}

inline Operator annihilation_op(const HilbertSpec &space, int mode) {
  space.check_mode(mode);
  return embed(space, {mode}, detail::local_annihilation(space.dim(mode)));
}

inline Operator creation_op(const HilbertSpec &space, int mode) {
  space.check_mode(mode);
  return embed(space, {mode}, SpMatrix(detail::local_annihilation(space.dim(mode)).adjoint()));
}

inline Operator number_op(const HilbertSpec &space, int mode) {
  space.check_mode(mode);
  const SpMatrix a = detail::local_annihilation(space.dim(mode));
  return embed(space, {mode}, SpMatrix(SpMatrix(a.adjoint()) * a));
}

// X_lambda = (a e^{-i lambda} + a^dag e^{i lambda}) / sqrt(2); vacuum variance 1/2.
inline Operator quadrature_op(const HilbertSpec &space, int mode, double lambda) {
  space.check_mode(mode);
  const SpMatrix a = detail::local_annihilation(space.dim(mode));
  const SpMatrix x =
      (a * std::polar(1.0, -lambda) + SpMatrix(a.adjoint()) * std::polar(1.0, lambda)) * (1.0 / std::sqrt(2.0));
  return embed(space, {mode}, x);
}

inline Operator displacement_op(const HilbertSpec &space, int mode, cplx alpha) {
  space.check_mode(mode);
  check_displacement_fits(space.dim(mode), alpha);
  return embed(space, {mode}, detail::from_dense(detail::local_displacement(space.dim(mode), alpha)));
}

inline Operator phase_op(const HilbertSpec &space, int mode, double phi) {
  space.check_mode(mode);
  return embed(space, {mode}, detail::local_diagonal_phase(space.dim(mode), phi));
}

// Two-mode beamsplitter U with U a_i^dag U^dag = M_ii a_i^dag + M_ij a_j^dag, where
// M = [[cos t e^{i phi_t}, sin t e^{i phi_r}], [-sin t e^{-i phi_r}, cos t e^{-i phi_t}]].
inline Operator beamsplitter_op(const HilbertSpec &space, int mode_i, int mode_j, double theta, double phi_t,
                                double phi_r) {
  space.check_mode(mode_i);
  space.check_mode(mode_j);
  if (mode_i == mode_j) throw InvalidArgument("beamsplitter_op: modes must differ");
  const int d = space.dim(mode_i);
  if (space.dim(mode_j) != d) throw InvalidArgument("beamsplitter_op: modes have unequal dimensions");

  const Index dd = static_cast<Index>(d) * d;
  const auto idx = [d](int ni, int nj) { return static_cast<Index>(ni) * d + nj; };

  // Real rotation exp(theta (a_i^dag a_j - a_i a_j^dag)), block diagonal in total photon number.
  std::vector<Eigen::Triplet<cplx>> rot;
  for (int total = 0; total <= 2 * d - 2; ++total) {
    const int lo = std::max(0, total - (d - 1)), hi = std::min(total, d - 1);
    const int size = hi - lo + 1;
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(size, size);
    for (int k = 0; k + 1 < size; ++k) {
      const int ni = lo + k, nj = total - ni;
      // a_i^dag a_j |ni, nj> = sqrt(ni+1) sqrt(nj) |ni+1, nj-1>
      const double amp = std::sqrt(static_cast<double>(ni + 1) * nj);
      gen(k + 1, k) += theta * amp;
      gen(k, k + 1) -= theta * amp;
    }
    const Eigen::MatrixXd block = gen.exp();
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        if (block(r, c) != 0.0) rot.emplace_back(idx(lo + r, total - lo - r), idx(lo + c, total - lo - c), block(r, c));
  }
  SpMatrix r(dd, dd);
  r.setFromTriplets(rot.begin(), rot.end());

  // Phase dressing exp(i x (n_i - n_j)) before and after the rotation.
  const double x = (phi_t - phi_r + std::numbers::pi) / 2.0, y = (phi_t + phi_r - std::numbers::pi) / 2.0;
  const auto dressing = [&](double p) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (int ni = 0; ni < d; ++ni)
      for (int nj = 0; nj < d; ++nj) t.emplace_back(idx(ni, nj), idx(ni, nj), std::polar(1.0, p * (ni - nj)));
    SpMatrix m(dd, dd);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  const SpMatrix local = SpMatrix(dressing(x) * r) * dressing(y);
  return embed(space, {mode_i, mode_j}, local);
}

inline Ket tensor(const Ket &a, const Ket &b) {
  std::vector<int> dims = a.space().mode_dims();
  dims.insert(dims.end(), b.space().mode_dims().begin(), b.space().mode_dims().end());
  return Ket(HilbertSpec(dims), Eigen::kroneckerProduct(a.amplitudes(), b.amplitudes()).eval());
}

inline DensityMatrix tensor(const DensityMatrix &a, const DensityMatrix &b) {
  std::vector<int> dims = a.space().mode_dims();
  dims.insert(dims.end(), b.space().mode_dims().begin(), b.space().mode_dims().end());
  return DensityMatrix(HilbertSpec(dims), Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval());
}

namespace detail {

struct TraceSplit {
  HilbertSpec kept;
  std::vector<Index> kept_index;    // full index -> kept index
  std::vector<Index> traced_index;  // full index -> traced index
  Index traced_dim = 1;
};

inline TraceSplit split_modes(const HilbertSpec &space, std::vector<int> keep) {
  if (keep.empty()) throw InvalidArgument("partial_trace: keep set is empty");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw InvalidArgument("partial_trace: repeated mode in keep set");
  std::vector<bool> kept(space.modes(), false);
  std::vector<int> kept_dims;
  for (int m : keep) {
    space.check_mode(m);
    kept[m] = true;
    kept_dims.push_back(space.dim(m));
  }
  TraceSplit s{HilbertSpec(kept_dims), {}, {}, 1};
  for (int m = 0; m < space.modes(); ++m)
    if (!kept[m]) s.traced_dim *= space.dim(m);
  s.kept_index.resize(space.total_dim());
  s.traced_index.resize(space.total_dim());
  for (Index i = 0; i < space.total_dim(); ++i) {
    Index ki = 0, ti = 0;
    for (int m = 0; m < space.modes(); ++m) {
      const int dg = space.digit(i, m);
      if (kept[m])
        ki = ki * space.dim(m) + dg;
      else
        ti = ti * space.dim(m) + dg;
    }
    s.kept_index[i] = ki;
    s.traced_index[i] = ti;
  }
  return s;
}

}  // namespace detail

inline DensityMatrix partial_trace(const DensityMatrix &rho, const std::vector<int> &keep) {
  const auto s = detail::split_modes(rho.space(), keep);
  const Index total = rho.space().total_dim();
  std::vector<std::vector<Index>> groups(s.traced_dim);
  for (Index i = 0; i < total; ++i) groups[s.traced_index[i]].push_back(i);
  CMatrix out = CMatrix::Zero(s.kept.total_dim(), s.kept.total_dim());
  const CMatrix &m = rho.matrix();
  for (const auto &g : groups)
    for (Index j : g)
      for (Index i : g) out(s.kept_index[i], s.kept_index[j]) += m(i, j);
  return DensityMatrix(s.kept, std::move(out));
}

inline DensityMatrix partial_trace(const Ket &ket, const std::vector<int> &keep) {
  const auto s = detail::split_modes(ket.space(), keep);
  CMatrix coeff = CMatrix::Zero(s.kept.total_dim(), s.traced_dim);
  for (Index i = 0; i < ket.space().total_dim(); ++i) coeff(s.kept_index[i], s.traced_index[i]) = ket.amplitudes()(i);
  return DensityMatrix(s.kept, coeff * coeff.adjoint());
}

struct Spectrum {
  RVector values;    // descending
  CMatrix vectors;   // columns match values
};

inline Spectrum eig_hermitian(const CMatrix &m) {
  if (m.rows() != m.cols()) throw InvalidArgument("eig_hermitian: matrix is not square");
  const double scale = m.size() ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0;
  if (hermitian_error(m) > kHermitianTolerance * scale) throw InvalidArgument("eig_hermitian: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalIntegrityError("eig_hermitian: eigensolver failed");
  return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

inline Spectrum eig_hermitian(const DensityMatrix &rho) { return eig_hermitian(rho.matrix()); }

inline RVector eigenvalues_hermitian(const CMatrix &m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalIntegrityError("eigensolver failed");
  return solver.eigenvalues().reverse();
}

// Shannon entropy in bits of a spectrum; clamps small negative eigenvalues.
inline double entropy_of_spectrum(const RVector &values) {
  double s = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    if (v < -kNegativeEigenvalueTolerance)
      throw NumericalIntegrityError("negative eigenvalue " + std::to_string(v) + " in density matrix");
    if (v > kEigenvalueCutoff) s -= v * std::log2(v);
  }
  return s;
}

inline double von_neumann_entropy(const CMatrix &rho) { return entropy_of_spectrum(eigenvalues_hermitian(rho)); }

inline double von_neumann_entropy(const DensityMatrix &rho) { return von_neumann_entropy(rho.matrix()); }

}  // namespace cvdiscord

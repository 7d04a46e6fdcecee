#pragma once

#include <array>
#include <cmath>
#include <string>

#include "cvdiscord/fock.hpp"

namespace cvdiscord {

enum class ChannelKind { DPC, PAC };

inline std::string to_string(ChannelKind kind) { return kind == ChannelKind::DPC ? "dpc" : "pac"; }

inline ChannelKind parse_channel_kind(const std::string &name) {
  if (name == "dpc" || name == "DPC") return ChannelKind::DPC;
  if (name == "pac" || name == "PAC") return ChannelKind::PAC;
  throw InvalidArgument("unknown channel kind '" + name + "' (expected dpc or pac)");
}

// Sign of the superposition (a^dag +- b^dag): -1 for DPC, +1 for PAC.
inline double channel_sign(ChannelKind kind) { return kind == ChannelKind::DPC ? -1.0 : 1.0; }

inline void check_alpha0(double alpha0) {
  if (!std::isfinite(alpha0) || alpha0 < 0.0) throw InvalidArgument("alpha0 must be a finite nonnegative real");
}

inline void check_eta(double eta) {
  if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) throw InvalidArgument("eta must lie in [0, 1]");
}

inline void check_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw InvalidArgument("sigma must be a finite nonnegative real");
}

struct ChannelParams {
  double alpha0 = 0.0;
  double eta = 1.0;
  double sigma = 0.0;

  ChannelParams() = default;
  ChannelParams(double alpha0_, double eta_, double sigma_) : alpha0(alpha0_), eta(eta_), sigma(sigma_) {
    validate();
  }

  void validate() const {
    check_alpha0(alpha0);
    check_eta(eta);
    check_sigma(sigma);
  }
  // Amplitude carried by each output mode.
  double alpha() const { return alpha0 / std::sqrt(2.0); }
  double n0() const { return alpha0 * alpha0; }
};

inline double normalization(ChannelKind kind, double alpha0) {
  check_alpha0(alpha0);
  return kind == ChannelKind::DPC ? 1.0 : 1.0 / std::sqrt(1.0 + alpha0 * alpha0);
}

inline HilbertSpec channel_space(double alpha0) {
  check_alpha0(alpha0);
  const int d = truncation_dim(alpha0 / std::sqrt(2.0));
  return HilbertSpec({d, d});
}

inline CVector coherent_amplitudes(int dim, cplx alpha) {
  check_displacement_fits(dim, alpha);
  return detail::local_displacement(dim, alpha).col(0);
}

// D(alpha)|n> as a Fock-basis vector.
inline CVector displaced_number_amplitudes(int dim, cplx alpha, int n) {
  check_displacement_fits(dim, alpha);
  if (n < 0 || n >= dim) throw InvalidArgument("displaced_number_amplitudes: Fock index out of range");
  return detail::local_displacement(dim, alpha).col(n);
}

// N/sqrt(2) (a^dag +- b^dag)|alpha>|alpha> with alpha = alpha0/sqrt(2).
inline Ket build_state_fock(ChannelKind kind, double alpha0, const HilbertSpec &space) {
  check_alpha0(alpha0);
  if (space.modes() != 2) throw InvalidArgument("build_state_fock: space must have two modes");
  const cplx alpha = alpha0 / std::sqrt(2.0);
  const int da = space.dim(0), db = space.dim(1);
  if (truncation_dim(std::abs(alpha)) > std::min(da, db))
    throw TruncationError("build_state_fock: truncation too small for alpha0=" + std::to_string(alpha0));
  const CVector ca = coherent_amplitudes(da, alpha), cb = coherent_amplitudes(db, alpha);
  const CVector adag_a = CVector(detail::local_annihilation(da).adjoint() * ca);
  const CVector adag_b = CVector(detail::local_annihilation(db).adjoint() * cb);
  CVector psi = Eigen::kroneckerProduct(adag_a, cb).eval() + channel_sign(kind) * Eigen::kroneckerProduct(ca, adag_b).eval();
  psi *= normalization(kind, alpha0) / std::sqrt(2.0);
  return Ket(space, psi).normalized();
}

// State on the displaced-qubit basis {D(alpha_a)|i>} x {D(alpha_b)|j>}, coefficients ordered |00>,|01>,|10>,|11>.
struct DisplacedQubitKet {
  std::array<cplx, 4> coefficients{};
  double alpha_a = 0.0;
  double alpha_b = 0.0;
};

inline DisplacedQubitKet build_state_displaced(ChannelKind kind, double alpha0) {
  const double n = normalization(kind, alpha0);
  const double alpha = alpha0 / std::sqrt(2.0);
  const double s = channel_sign(kind);
  const double f = n / std::sqrt(2.0);
  DisplacedQubitKet out;
  out.coefficients = {cplx(f * alpha * (1.0 + s)), cplx(f * s), cplx(f), cplx(0.0)};
  out.alpha_a = alpha;
  out.alpha_b = alpha;
  return out;
}

inline Ket embed(const DisplacedQubitKet &psi, const HilbertSpec &space) {
  if (space.modes() != 2) throw InvalidArgument("embed: space must have two modes");
  const int da = space.dim(0), db = space.dim(1);
  const std::array<CVector, 2> ea = {displaced_number_amplitudes(da, psi.alpha_a, 0),
                                     displaced_number_amplitudes(da, psi.alpha_a, 1)};
  const std::array<CVector, 2> eb = {displaced_number_amplitudes(db, psi.alpha_b, 0),
                                     displaced_number_amplitudes(db, psi.alpha_b, 1)};
  CVector out = CVector::Zero(space.total_dim());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out += psi.coefficients[2 * i + j] * Eigen::kroneckerProduct(ea[i], eb[j]).eval();
  return Ket(space, out);
}

// Gram matrix of {|alpha>, D(alpha)|1>} with alpha = alpha0/sqrt(2).
inline CMatrix gram_matrix(double alpha0, int dim = 0) {
  check_alpha0(alpha0);
  const double alpha = alpha0 / std::sqrt(2.0);
  if (dim == 0) dim = truncation_dim(alpha);
  CMatrix basis(dim, 2);
  basis.col(0) = displaced_number_amplitudes(dim, alpha, 0);
  basis.col(1) = displaced_number_amplitudes(dim, alpha, 1);
  return basis.adjoint() * basis;
}

}  // namespace cvdiscord

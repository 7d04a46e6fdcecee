#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cvdiscord/fock.hpp"
#include "cvdiscord/quadrature.hpp"
#include "cvdiscord/states.hpp"

namespace cvdiscord {

// Two-mode state on the orthonormal displaced-qubit basis
// {D(alpha_a)|i>} x {D(alpha_b)|j>}, index 2i+j.
struct QubitPairState {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  double alpha_a = 0.0;
  double alpha_b = 0.0;
  double p1 = 0.0;  // weight of the all-lost component
  double p2 = 0.0;
};

// Scattering on mode A with transmittance eta, written as p1 rho1 + p2 rho2.
inline QubitPairState scattering_mixture(ChannelKind kind, double alpha0, double eta) {
  check_alpha0(alpha0);
  check_eta(eta);
  const double n2 = std::pow(normalization(kind, alpha0), 2);
  const double alpha = alpha0 / std::sqrt(2.0);
  const double s = channel_sign(kind);
  Eigen::Vector4cd v(alpha * (1.0 + s), s, std::sqrt(eta), 0.0);

  QubitPairState out;
  out.alpha_a = std::sqrt(eta) * alpha;
  out.alpha_b = alpha;
  out.p1 = 0.5 * n2 * (1.0 - eta);
  out.p2 = 0.5 * n2 * v.squaredNorm();
  out.rho(0, 0) = out.p1;
  out.rho += 0.5 * n2 * (v * v.adjoint());
  return out;
}

inline CMatrix displaced_qubit_basis(int dim, double alpha) {
  CMatrix e(dim, 2);
  e.col(0) = displaced_number_amplitudes(dim, alpha, 0);
  e.col(1) = displaced_number_amplitudes(dim, alpha, 1);
  return e;
}

inline DensityMatrix to_fock(const QubitPairState &state, const HilbertSpec &space) {
  if (space.modes() != 2) throw InvalidArgument("to_fock: space must have two modes");
  const CMatrix v = Eigen::kroneckerProduct(displaced_qubit_basis(space.dim(0), state.alpha_a),
                                            displaced_qubit_basis(space.dim(1), state.alpha_b))
                        .eval();
  return DensityMatrix(space, v * state.rho * v.adjoint());
}

// Brute-force loss channel: beamsplitter between A and a vacuum ancilla, ancilla traced out.
inline DensityMatrix scattering_fock_oracle(ChannelKind kind, double alpha0, double eta, const HilbertSpec &space) {
  check_eta(eta);
  if (space.modes() != 2) throw InvalidArgument("scattering_fock_oracle: space must have two modes");
  const int da = space.dim(0);
  const Ket psi = build_state_fock(kind, alpha0, space);
  CVector vac = CVector::Zero(da);
  vac(0) = 1.0;
  const Ket joint = tensor(psi, Ket(HilbertSpec({da}), vac));
  const Operator bs = beamsplitter_op(joint.space(), 0, 2, std::acos(std::sqrt(eta)), 0.0, std::numbers::pi);
  return partial_trace(bs.apply(joint), {0, 1});
}

struct PhaseAverageOptions {
  int initial_nodes = 41;
  int max_nodes = 1281;
  double tolerance = 1e-9;
  int mode = 0;
};

struct PhaseAverageResult {
  DensityMatrix state;
  std::string rule;  // "none", "gauss-hermite" or "periodic-trapezoid"
  int nodes = 0;
  double change = 0.0;  // max elementwise change under the last node doubling
  bool converged = true;
};

namespace detail {

// Dephasing factors E[e^{i k phi}] for k = -(d-1)..d-1, stored at offset k + d - 1.
inline std::vector<cplx> gh_dephasing(int d, double sigma, int nodes) {
  const QuadratureRule gh = gauss_hermite(nodes);
  std::vector<cplx> w(2 * d - 1, 0.0);
  for (int k = -(d - 1); k <= d - 1; ++k) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) acc += gh.weights[i] * std::polar(1.0, k * std::sqrt(2.0) * sigma * gh.nodes[i]);
    w[k + d - 1] = acc / std::sqrt(std::numbers::pi);
  }
  return w;
}

// Same factors from the wrapped Gaussian density on a uniform periodic grid.
inline std::vector<cplx> trapezoid_dephasing(int d, double sigma, int nodes) {
  const QuadratureRule rule = periodic_trapezoid(nodes, -std::numbers::pi, 2.0 * std::numbers::pi);
  const int wraps = 1 + static_cast<int>(std::ceil(8.0 * sigma / (2.0 * std::numbers::pi)));
  std::vector<double> density(rule.size());
  for (std::size_t j = 0; j < rule.size(); ++j) {
    double p = 0.0;
    for (int m = -wraps; m <= wraps; ++m) {
      const double x = rule.nodes[j] + 2.0 * std::numbers::pi * m;
      p += std::exp(-x * x / (2.0 * sigma * sigma));
    }
    density[j] = p / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  std::vector<cplx> w(2 * d - 1, 0.0);
  for (int k = -(d - 1); k <= d - 1; ++k) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < rule.size(); ++j) acc += rule.weights[j] * density[j] * std::polar(1.0, k * rule.nodes[j]);
    w[k + d - 1] = acc;
  }
  return w;
}

inline double dephasing_change(const std::vector<cplx> &a, const std::vector<cplx> &b, const CMatrix &rho,
                               const HilbertSpec &space, int mode) {
  const int d = space.dim(mode);
  std::vector<double> coh(2 * d - 1, 0.0);
  for (Index j = 0; j < rho.cols(); ++j)
    for (Index i = 0; i < rho.rows(); ++i) {
      const int k = space.digit(i, mode) - space.digit(j, mode) + d - 1;
      coh[k] = std::max(coh[k], std::abs(rho(i, j)));
    }
  double change = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) change = std::max(change, coh[k] * std::abs(a[k] - b[k]));
  return change;
}

}  // namespace detail

// Average of U(phi) rho U(phi)^dag over a zero-mean Gaussian phi with standard deviation sigma,
// applied to one mode. Gauss-Hermite nodes are doubled until the result stops changing; if the
// Hermite rule cannot resolve the integrand, the periodic rule on the wrapped density is used.
inline PhaseAverageResult phase_average(const DensityMatrix &rho, double sigma, const PhaseAverageOptions &options = {}) {
  check_sigma(sigma);
  const HilbertSpec &space = rho.space();
  space.check_mode(options.mode);
  if (sigma == 0.0) return {rho, "none", 0, 0.0, true};

  const int d = space.dim(options.mode);
  const CMatrix &m = rho.matrix();
  auto run = [&](auto &&factors, int first, const char *name) -> std::pair<PhaseAverageResult, bool> {
    std::vector<cplx> prev = factors(first);
    int nodes = first;
    double change = 0.0;
    bool ok = false;
    while (nodes < options.max_nodes) {
      const int next = 2 * nodes - 1;
      std::vector<cplx> cur = factors(next);
      change = detail::dephasing_change(prev, cur, m, space, options.mode);
      prev = std::move(cur);
      nodes = next;
      if (change < options.tolerance) {
        ok = true;
        break;
      }
    }
    CMatrix out(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i)
        out(i, j) = m(i, j) * prev[space.digit(i, options.mode) - space.digit(j, options.mode) + d - 1];
    return {PhaseAverageResult{DensityMatrix(space, std::move(out)), name, nodes, change, ok}, ok};
  };

  auto gh = run([&](int n) { return detail::gh_dephasing(d, sigma, n); }, options.initial_nodes, "gauss-hermite");
  if (gh.second) return gh.first;
  auto tr = run([&](int n) { return detail::trapezoid_dephasing(d, sigma, n); }, 4 * d + 1, "periodic-trapezoid");
  if (tr.second) return tr.first;
  throw ConvergenceError("phase_average: quadrature did not converge (change " + std::to_string(tr.first.change) +
                         ")");
}

// Builds rho(eta) with `builder(alpha0, eta, space)` and averages its mode A over the phase noise.
template <class Builder>
PhaseAverageResult phase_average(Builder &&builder, double alpha0, double eta, double sigma, const HilbertSpec &space,
                                 const PhaseAverageOptions &options = {}) {
  const DensityMatrix rho = builder(alpha0, eta, space);
  return phase_average(rho, sigma, options);
}

// Full noisy channel: scattering followed by phase noise on mode A.
inline PhaseAverageResult noisy_channel_state(ChannelKind kind, double alpha0, double eta, double sigma,
                                              const HilbertSpec &space, const PhaseAverageOptions &options = {}) {
  return phase_average(
      [kind](double a, double e, const HilbertSpec &s) { return to_fock(scattering_mixture(kind, a, e), s); }, alpha0,
      eta, sigma, space, options);
}

}  // namespace cvdiscord

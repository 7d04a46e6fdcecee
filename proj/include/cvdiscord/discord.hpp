#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cvdiscord/channels.hpp"
#include "cvdiscord/fock.hpp"
#include "cvdiscord/nelder_mead.hpp"
#include "cvdiscord/states.hpp"

namespace cvdiscord {

// Two-outcome measurement D(alpha)|i_M><i_M|D(alpha)^dag with
// |0_M> = cos(t/2)|0> + e^{ip} sin(t/2)|1>, |1_M> = sin(t/2)|0> - e^{ip} cos(t/2)|1>.
struct QubitPOVM {
  double theta = 0.0;
  double phi = 0.0;
  cplx alpha = 0.0;

  Eigen::Vector2cd vector(int i) const {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const cplx e = std::polar(1.0, phi);
    if (i == 0) return {c, e * s};
    if (i == 1) return {s, -e * c};
    throw InvalidArgument("QubitPOVM: outcome index must be 0 or 1");
  }

  // Element i in a truncated Fock basis of dimension dim.
  CMatrix element(int i, int dim) const {
    check_displacement_fits(dim, alpha);
    const CMatrix d = detail::local_displacement(dim, alpha);
    const CVector u = d.leftCols(2) * vector(i);
    return u * u.adjoint();
  }
};

inline QubitPOVM displaced_povm(double theta, double phi, cplx alpha) { return {theta, phi, alpha}; }

namespace detail {

// Returns p * S(rho / p) for an unnormalized branch rho; p = trace.
inline double weighted_branch_entropy(const CMatrix &branch, double *probability = nullptr) {
  const RVector ev = eigenvalues_hermitian(branch);
  const double p = ev.sum();
  if (probability) *probability = p;
  if (p < kEigenvalueCutoff) return 0.0;
  double s = 0.0;
  for (Index k = 0; k < ev.size(); ++k) {
    const double v = ev(k);
    if (v < -kNegativeEigenvalueTolerance)
      throw NumericalIntegrityError("negative eigenvalue " + std::to_string(v) + " in conditional state");
    if (v / p > kEigenvalueCutoff) s -= v * std::log2(v / p);
  }
  return s;
}

}  // namespace detail

// Conditional A-states produced by measuring B on the displaced-qubit span.
// blocks[j][k] = (1 x <e_j|) rho (1 x |e_k>), complement = Tr_B[(1 x (1 - P)) rho].
class ConditionalModel {
 public:
  ConditionalModel(std::array<std::array<CMatrix, 2>, 2> blocks, CMatrix complement, double leakage)
      : blocks_(std::move(blocks)), complement_(std::move(complement)), leakage_(leakage) {
    complement_entropy_ = leakage_ > kEigenvalueCutoff ? detail::weighted_branch_entropy(complement_) : 0.0;
  }

  double leakage() const { return leakage_; }

  CMatrix branch(const QubitPOVM &povm, int i) const {
    const Eigen::Vector2cd v = povm.vector(i);
    CMatrix out = CMatrix::Zero(blocks_[0][0].rows(), blocks_[0][0].cols());
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out += std::conj(v(j)) * v(k) * blocks_[j][k];
    return (out + out.adjoint()) * 0.5;
  }

  std::array<double, 2> probabilities(const QubitPOVM &povm) const {
    return {branch(povm, 0).trace().real(), branch(povm, 1).trace().real()};
  }

  // Sum_i p_i S(rho_A|i) in bits, complement branch included.
  double conditional_entropy(const QubitPOVM &povm) const {
    double s = complement_entropy_;
    for (int i = 0; i < 2; ++i) s += detail::weighted_branch_entropy(branch(povm, i));
    return s;
  }

 private:
  std::array<std::array<CMatrix, 2>, 2> blocks_;
  CMatrix complement_;
  double leakage_;
  double complement_entropy_ = 0.0;
};

inline constexpr double kLeakageTolerance = 1e-6;

inline ConditionalModel conditional_model(const QubitPairState &state) {
  std::array<std::array<CMatrix, 2>, 2> blocks;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      CMatrix b(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int a2 = 0; a2 < 2; ++a2) b(a, a2) = state.rho(2 * a + j, 2 * a2 + k);
      blocks[j][k] = b;
    }
  return ConditionalModel(blocks, CMatrix::Zero(2, 2), 0.0);
}

// Fock-basis path; B is measured on span{D(alpha_b)|0>, D(alpha_b)|1>} completed by its complement.
inline ConditionalModel conditional_model(const DensityMatrix &rho, cplx alpha_b,
                                          double leakage_tolerance = kLeakageTolerance) {
  if (rho.space().modes() != 2) throw InvalidArgument("conditional_model: state must have two modes");
  const int da = rho.space().dim(0), db = rho.space().dim(1);
  check_displacement_fits(db, alpha_b);
  const CMatrix e = detail::local_displacement(db, alpha_b).leftCols(2);
  const CMatrix &m = rho.matrix();

  // C[(a,j),(a',k)] = sum_{b,b'} conj(e_j(b)) rho[(a,b),(a',b')] e_k(b')
  CMatrix right(m.rows(), 2 * da);
  for (int a2 = 0; a2 < da; ++a2) right.middleCols(2 * a2, 2) = m.middleCols(static_cast<Index>(a2) * db, db) * e;
  CMatrix c(2 * da, 2 * da);
  for (int a = 0; a < da; ++a) c.middleRows(2 * a, 2) = e.adjoint() * right.middleRows(static_cast<Index>(a) * db, db);

  std::array<std::array<CMatrix, 2>, 2> blocks;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      CMatrix b(da, da);
      for (int a = 0; a < da; ++a)
        for (int a2 = 0; a2 < da; ++a2) b(a, a2) = c(2 * a + j, 2 * a2 + k);
      blocks[j][k] = b;
    }
  const CMatrix rho_a = partial_trace(rho, {0}).matrix();
  CMatrix complement = rho_a - blocks[0][0] - blocks[1][1];
  complement = (complement + complement.adjoint()) * 0.5;
  const double leakage = complement.trace().real();
  if (leakage > leakage_tolerance)
    throw TruncationError("conditional_model: B-mode weight " + std::to_string(leakage) +
                          " outside the displaced-qubit span");
  return ConditionalModel(blocks, complement, std::max(leakage, 0.0));
}

inline double conditional_entropy(const DensityMatrix &rho, const QubitPOVM &povm) {
  return conditional_model(rho, povm.alpha).conditional_entropy(povm);
}

inline double conditional_entropy(const QubitPairState &state, const QubitPOVM &povm) {
  return conditional_model(state).conditional_entropy(povm);
}

struct DiscordOptions {
  int theta_points = 16;
  int phi_points = 16;
  int refine_candidates = 8;
  SimplexOptions simplex{300, 1e-13, 1e-9};
  double tie_tolerance = 1e-9;
  double stagnation_tolerance = 1e-6;
  bool allow_unconverged = false;
  double leakage_tolerance = kLeakageTolerance;
};

struct DiscordResult {
  double value = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double s_b = 0.0;
  double s_ab = 0.0;
  double conditional_entropy = 0.0;
  std::array<double, 2> probabilities{};
  double leakage = 0.0;
  double phi_spread = 0.0;  // objective spread over phi at the optimal theta
  double spread = 0.0;      // simplex objective spread at the winner
  int evaluations = 0;
  bool converged = false;

  // S(rho_B) - S(rho_AB) + S(A|B)_min
  double identity_residual() const { return value - (s_b - s_ab + conditional_entropy); }
};

inline constexpr double kDiscordClamp = 1e-8;

// Folds Bloch angles into theta in [0, pi], phi in [0, 2 pi).
inline std::array<double, 2> canonical_bloch_angles(double theta, double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t < 0) t += two_pi;
  if (t > std::numbers::pi) {
    t = two_pi - t;
    phi += std::numbers::pi;
  }
  double p = std::fmod(phi, two_pi);
  if (p < 0) p += two_pi;
  if (p >= two_pi) p -= two_pi;
  // (theta, phi) and (pi - theta, phi + pi) are the same measurement with outcomes swapped.
  if (p >= std::numbers::pi) {
    p -= std::numbers::pi;
    t = std::numbers::pi - t;
  }
  return {t, p};
}

namespace detail {

struct DiscordCandidate {
  double value, theta, phi, balance, spread;
};

inline DiscordResult minimize_discord(const ConditionalModel &model, cplx alpha, double s_b, double s_ab,
                                      const DiscordOptions &options) {
  if (options.theta_points < 2 || options.phi_points < 1) throw InvalidArgument("discord: grid too small");
  DiscordResult res;
  res.s_b = s_b;
  res.s_ab = s_ab;
  res.leakage = model.leakage();
  auto objective = [&](const std::array<double, 2> &x) {
    ++res.evaluations;
    return model.conditional_entropy({x[0], x[1], alpha});
  };

  const int nt = options.theta_points, np = options.phi_points;
  const double dt = std::numbers::pi / (nt - 1), dp = 2.0 * std::numbers::pi / np;
  Eigen::MatrixXd grid(nt, np);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) grid(i, j) = objective({i * dt, j * dp});

  // Local minima of the grid (phi periodic), ordered by value then position.
  std::vector<std::array<double, 3>> minima;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      bool local = true;
      for (int di = -1; di <= 1 && local; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = ((j + dj) % np + np) % np;
          if ((di == 0 && dj == 0) || ii < 0 || ii >= nt) continue;
          if (grid(ii, jj) < grid(i, j)) {
            local = false;
            break;
          }
        }
      if (local) minima.push_back({grid(i, j), i * dt, j * dp});
    }
  std::stable_sort(minima.begin(), minima.end(), [](const auto &a, const auto &b) { return a[0] < b[0]; });
  if (static_cast<int>(minima.size()) > options.refine_candidates) minima.resize(options.refine_candidates);

  std::vector<DiscordCandidate> cands;
  for (const auto &m : minima) {
    const auto r = nelder_mead<2>(objective, {m[1], m[2]}, {dt / 2, dp / 2}, options.simplex);
    const auto ang = canonical_bloch_angles(r.x[0], r.x[1]);
    const auto p = model.probabilities({ang[0], ang[1], alpha});
    cands.push_back({r.value, ang[0], ang[1], std::abs(p[0] - p[1]), r.spread});
  }
  // Axis points enter the tie-break directly, since flat valleys leave the simplex anywhere along them.
  for (double t : {0.0, std::numbers::pi / 2, std::numbers::pi})
    for (int k = 0; k < 4; ++k) {
      const auto ang = canonical_bloch_angles(t, k * std::numbers::pi / 2);
      const auto p = model.probabilities({ang[0], ang[1], alpha});
      cands.push_back({objective({ang[0], ang[1]}), ang[0], ang[1], std::abs(p[0] - p[1]), 0.0});
    }
  double best = cands.front().value;
  for (const auto &c : cands) best = std::min(best, c.value);
  // Among degenerate minima prefer balanced outcomes, then smaller theta, then smaller phi.
  const DiscordCandidate *win = nullptr;
  for (const auto &c : cands) {
    if (c.value > best + options.tie_tolerance) continue;
    if (!win) {
      win = &c;
      continue;
    }
    constexpr double eps = 1e-6;
    if (c.balance < win->balance - eps ||
        (std::abs(c.balance - win->balance) <= eps &&
         (c.theta < win->theta - eps || (std::abs(c.theta - win->theta) <= eps && c.phi < win->phi - eps))))
      win = &c;
  }

  res.conditional_entropy = win->value;
  res.theta = win->theta;
  res.phi = win->phi;
  res.spread = win->spread;
  res.probabilities = model.probabilities({res.theta, res.phi, alpha});
  res.converged = win->spread <= options.stagnation_tolerance;
  if (!res.converged && !options.allow_unconverged)
    throw ConvergenceError("discord: simplex stagnated with objective spread " + std::to_string(win->spread));

  double lo = res.conditional_entropy, hi = res.conditional_entropy;
  for (int j = 0; j < 8; ++j) {
    const double v = model.conditional_entropy({res.theta, j * std::numbers::pi / 4, alpha});
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  res.phi_spread = hi - lo;
  if (res.phi_spread <= options.tie_tolerance) {
    // Objective flat in phi: the azimuth is undetermined, report it as 0.
    res.phi = 0.0;
    res.probabilities = model.probabilities({res.theta, res.phi, alpha});
  }

  double value = s_b - s_ab + res.conditional_entropy;
  if (value < -kDiscordClamp)
    throw NumericalIntegrityError("discord: negative value " + std::to_string(value));
  if (value < 0.0) {
    value = 0.0;
    res.conditional_entropy = s_ab - s_b;
  }
  res.value = value;
  return res;
}

}  // namespace detail

// Discord D_B of a two-mode Fock-basis state, B measured with displaced-qubit POVMs at alpha_b.
inline DiscordResult discord_numeric(const DensityMatrix &rho, cplx alpha_b, const DiscordOptions &options = {}) {
  const ConditionalModel model = conditional_model(rho, alpha_b, options.leakage_tolerance);
  const double s_b = von_neumann_entropy(partial_trace(rho, {1}));
  const double s_ab = von_neumann_entropy(rho);
  return detail::minimize_discord(model, alpha_b, s_b, s_ab, options);
}

// Same measure on the exact displaced-qubit representation.
inline DiscordResult discord_numeric(const QubitPairState &state, const DiscordOptions &options = {}) {
  const ConditionalModel model = conditional_model(state);
  CMatrix rho_b = CMatrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a) rho_b += state.rho.block(2 * a, 2 * a, 2, 2);
  const double s_b = von_neumann_entropy(rho_b);
  const double s_ab = von_neumann_entropy(CMatrix(state.rho));
  return detail::minimize_discord(model, state.alpha_b, s_b, s_ab, options);
}

inline double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

inline constexpr double kLimitBranch = 1e-6;

namespace detail {

// 1 - H2((1+eta)/2) + H2((1+s)/2), s = sqrt(eta^2 - eta + 1): the same function written with binary entropies.
inline double dp_discord_binary_form(double eta) {
  const double s = std::sqrt(eta * eta - eta + 1.0);
  return 1.0 - binary_entropy((1.0 + eta) / 2.0) + binary_entropy((1.0 + s) / 2.0);
}

}  // namespace detail

// Discord of the scattered DPC channel.
inline double discord_dp_closed(double eta) {
  check_eta(eta);
  if (eta < kLimitBranch || 1.0 - eta < kLimitBranch) {
    if (eta == 0.0) return 0.0;
    if (eta == 1.0) return 1.0;
    return detail::dp_discord_binary_form(eta);
  }
  const double s = std::sqrt((eta - 1.0) * eta + 1.0);
  return (std::log(4.0 / eta + 4.0) + 2.0 * eta * std::atanh(eta) - 2.0 * s * std::atanh(s)) / std::log(4.0);
}

// DPC discord written through the quadrature variance v = (1 + eta)/2.
inline double discord_dp_from_variance(double v) {
  if (!std::isfinite(v) || v < 0.5 || v > 1.0) throw InvalidArgument("discord_dp_from_variance: variance must lie in [1/2, 1]");
  const double eta = 2.0 * v - 1.0;
  if (eta < kLimitBranch || 1.0 - eta < kLimitBranch) return discord_dp_closed(eta);
  const double d1 = std::sqrt(4.0 * v * v - 6.0 * v + 3.0);
  const double d2 = 2.0 - 4.0 * v;
  return (std::log(8.0 * v / (2.0 * v - 1.0)) - 2.0 * d1 * std::atanh(d1) + d2 * std::atanh(d2 / 2.0)) / std::log(4.0);
}

// Polynomial approximation of the PAC discord; valid for alpha0 in [0,10], eta in [1/2,1].
inline double discord_pa_fit(double alpha0, double eta) {
  if (!std::isfinite(alpha0) || alpha0 < 0.0 || alpha0 > 10.0) throw InvalidArgument("discord_pa_fit: alpha0 outside [0, 10]");
  if (!std::isfinite(eta) || eta < 0.5 || eta > 1.0) throw InvalidArgument("discord_pa_fit: eta outside [0.5, 1]");
  const double a = alpha0, e = eta;
  const double a2 = a * a, a3 = a2 * a, a4 = a3 * a, e2 = e * e, e3 = e2 * e, e4 = e3 * e;
  return 0.0317084 * a2 * e3 - 0.398278 * a * e3 - 0.002986 * a3 * e2 - 0.0186853 * a2 * e2 + 0.617212 * a * e2 +
         0.0557978 * a2 * e - 0.7036 * a * e + 0.000865144 * a4 - 0.0192576 * a3 + 0.133857 * a2 - 0.280623 * a +
         0.519166 * e4 - 0.466403 * e3 - 0.308003 * e2 + 1.113 * e + 0.140178;
}

// Quadrature variance of mode A for the DPC channel with scattering and phase noise.
inline double qvar_dp(double lambda_a, double alpha0, double eta, double sigma) {
  check_alpha0(alpha0);
  check_eta(eta);
  check_sigma(sigma);
  const double s2 = sigma * sigma;
  return 0.5 * std::exp(-2.0 * s2) *
         (alpha0 * alpha0 * eta * (std::exp(s2) - 1.0) * (std::exp(s2) - std::cos(2.0 * lambda_a)) +
          (eta + 1.0) * std::exp(2.0 * s2));
}

// Same for the PAC channel.
inline double qvar_pa(double lambda_a, double alpha0, double eta, double sigma) {
  check_alpha0(alpha0);
  check_eta(eta);
  check_sigma(sigma);
  const double a = alpha0, a2 = a * a, s2 = sigma * sigma;
  const double c = std::cos(lambda_a);
  const double w = eta * std::exp(-2.0 * s2) *
                   (-2.0 * std::pow(a2 * a + 2.0 * a, 2) * std::exp(s2) * c * c +
                    (a2 * a2 + 4.0 * a2 + 3.0) * a2 * std::cos(2.0 * lambda_a) +
                    (a2 * a2 * a2 + 2.0 * a2 * a2 - 1.0) * std::exp(2.0 * s2));
  return 0.5 * (2.0 * eta + w / std::pow(a2 + 1.0, 2) + 1.0);
}

inline double quadrature_variance(ChannelKind kind, double lambda_a, double alpha0, double eta, double sigma) {
  return kind == ChannelKind::DPC ? qvar_dp(lambda_a, alpha0, eta, sigma) : qvar_pa(lambda_a, alpha0, eta, sigma);
}

struct ChannelDiscordOptions {
  DiscordOptions discord;
  PhaseAverageOptions phase;
  int max_truncation_growth = 2;
  int truncation_step = 6;
};

struct ChannelDiscord {
  DiscordResult discord;
  int truncation_dim = 2;  // per-mode dimension used (2 = exact displaced-qubit encoding)
  std::string phase_rule = "none";
  int phase_nodes = 0;
  bool phase_converged = true;
};

// Discord of the channel after scattering and phase noise. Without phase noise the exact
// displaced-qubit form is used; otherwise the Fock-basis pipeline, growing the truncation on leakage.
inline ChannelDiscord channel_discord(ChannelKind kind, double alpha0, double eta, double sigma,
                                      const ChannelDiscordOptions &options = {}) {
  ChannelParams(alpha0, eta, sigma);
  const QubitPairState q = scattering_mixture(kind, alpha0, eta);
  ChannelDiscord out;
  if (sigma == 0.0) {
    out.discord = discord_numeric(q, options.discord);
    return out;
  }
  int d = channel_space(alpha0).dim(0);
  for (int attempt = 0;; ++attempt) {
    try {
      const HilbertSpec space({d, d});
      const PhaseAverageResult avg = phase_average(to_fock(q, space), sigma, options.phase);
      out.discord = discord_numeric(avg.state, q.alpha_b, options.discord);
      out.truncation_dim = d;
      out.phase_rule = avg.rule;
      out.phase_nodes = avg.nodes;
      out.phase_converged = avg.converged;
      return out;
    } catch (const TruncationError &) {
      if (attempt >= options.max_truncation_growth) throw;
      d += options.truncation_step;
    }
  }
}

struct ParametricPoint {
  double eta = 1.0;
  double sigma = 0.0;
  double variance = 0.0;
  double discord = 0.0;
  bool limit_flag = false;  // endpoint evaluated through a limit branch
  ChannelDiscord detail;
};

// (variance, discord) pairs along a sweep over eta and sigma (outer loop eta).
inline std::vector<ParametricPoint> qd_variance_parametric(ChannelKind kind, double alpha0,
                                                           const std::vector<double> &etas,
                                                           const std::vector<double> &sigmas, double lambda_a = 0.0,
                                                           const ChannelDiscordOptions &options = {}) {
  if (etas.empty() || sigmas.empty()) throw InvalidArgument("qd_variance_parametric: empty sweep grid");
  std::vector<ParametricPoint> out;
  for (double eta : etas)
    for (double sigma : sigmas) {
      ParametricPoint p;
      p.eta = eta;
      p.sigma = sigma;
      p.variance = quadrature_variance(kind, lambda_a, alpha0, eta, sigma);
      p.detail = channel_discord(kind, alpha0, eta, sigma, options);
      p.discord = p.detail.discord.value;
      p.limit_flag = sigma == 0.0 && (eta < kLimitBranch || 1.0 - eta < kLimitBranch);
      out.push_back(p);
    }
  return out;
}

}  // namespace cvdiscord

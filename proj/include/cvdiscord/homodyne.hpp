#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cvdiscord/fock.hpp"
#include "cvdiscord/nelder_mead.hpp"
#include "cvdiscord/quadrature.hpp"
#include "cvdiscord/states.hpp"

namespace cvdiscord {

// Normalized Hermite functions psi_0..psi_{n_max} at x (vacuum psi_0 = pi^{-1/4} e^{-x^2/2}).
inline std::vector<double> hermite_functions(int n_max, double x) {
  if (n_max < 0) throw InvalidArgument("hermite_functions: negative order");
  std::vector<double> psi(n_max + 1);
  psi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (n_max >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int n = 1; n < n_max; ++n)
    psi[n + 1] = std::sqrt(2.0 / (n + 1)) * x * psi[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * psi[n - 1];
  return psi;
}

// <X_lambda|n> for X_lambda = (a e^{-i lambda} + a^dag e^{i lambda})/sqrt(2).
inline cplx quad_overlap(int n, double x, double lambda) {
  if (n < 0) throw InvalidArgument("quad_overlap: negative Fock index");
  return std::polar(hermite_functions(n, x)[n], -n * lambda);
}

// Rows: points, columns: Fock index.
inline Eigen::MatrixXd hermite_table(const std::vector<double> &xs, int dim) {
  Eigen::MatrixXd t(static_cast<Index>(xs.size()), dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto psi = hermite_functions(dim - 1, xs[i]);
    for (int n = 0; n < dim; ++n) t(static_cast<Index>(i), n) = psi[n];
  }
  return t;
}

// Closed-form joint quadrature density of the pure channels.
inline double jqp_closed(ChannelKind kind, double alpha0, double xa, double xb, double la, double lb) {
  check_alpha0(alpha0);
  const cplx i(0.0, 1.0);
  const double n2 = std::pow(normalization(kind, alpha0), 2);
  const double ga = xa - alpha0 * std::cos(la), gb = xb - alpha0 * std::cos(lb);
  const double g = std::exp(-ga * ga - gb * gb);
  const double a1 = std::norm(2.0 * std::exp(i * la) * xa - alpha0) + std::norm(2.0 * std::exp(i * lb) * xb - alpha0);
  const double a2 = 2.0 * std::real(std::exp(i * (lb - 2.0 * la)) * (-alpha0 + 2.0 * std::exp(i * la) * xa) *
                                    (-2.0 * xb + alpha0 * std::exp(i * lb)));
  const double sign = kind == ChannelKind::DPC ? 1.0 : -1.0;
  return n2 * (a1 + sign * a2) * g / (4.0 * std::numbers::pi);
}

// Two-mode state as a weighted sum of pure components, used for homodyne statistics.
class HomodyneModel {
 public:
  explicit HomodyneModel(const Ket &psi) : da_(check_space(psi.space(), 0)), db_(psi.space().dim(1)) {
    CMatrix c(da_, db_);
    for (int a = 0; a < da_; ++a)
      for (int b = 0; b < db_; ++b) c(a, b) = psi.amplitudes()(static_cast<Index>(a) * db_ + b);
    weights_.push_back(1.0);
    coeffs_.push_back(std::move(c));
    check_tail();
  }

  explicit HomodyneModel(const DensityMatrix &rho) : da_(check_space(rho.space(), 0)), db_(rho.space().dim(1)) {
    const Spectrum sp = eig_hermitian(rho);
    for (Index k = 0; k < sp.values.size(); ++k) {
      const double w = sp.values(k);
      if (w < -kNegativeEigenvalueTolerance) throw NumericalIntegrityError("HomodyneModel: state is not positive");
      if (w <= kEigenvalueCutoff) continue;
      CMatrix c(da_, db_);
      for (int a = 0; a < da_; ++a)
        for (int b = 0; b < db_; ++b) c(a, b) = sp.vectors(static_cast<Index>(a) * db_ + b, k);
      weights_.push_back(w);
      coeffs_.push_back(std::move(c));
    }
    check_tail();
  }

  int dim_a() const { return da_; }
  int dim_b() const { return db_; }

  double density(double xa, double xb, double la, double lb) const {
    const auto ha = hermite_functions(da_ - 1, xa), hb = hermite_functions(db_ - 1, xb);
    double p = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      cplx amp = 0.0;
      for (int a = 0; a < da_; ++a)
        for (int b = 0; b < db_; ++b)
          amp += coeffs_[k](a, b) * std::polar(ha[a] * hb[b], -(a * la + b * lb));
      p += weights_[k] * std::norm(amp);
    }
    return p;
  }

  // Density on the tensor grid described by precomputed Hermite tables (rows: nodes).
  Eigen::MatrixXd density_grid(const Eigen::MatrixXd &ha, const Eigen::MatrixXd &hb, double la, double lb) const {
    if (ha.cols() != da_ || hb.cols() != db_) throw InvalidArgument("density_grid: table width mismatch");
    CVector pa(da_), pb(db_);
    for (int a = 0; a < da_; ++a) pa(a) = std::polar(1.0, -a * la);
    for (int b = 0; b < db_; ++b) pb(b) = std::polar(1.0, -b * lb);
    const CMatrix hac = ha.cast<cplx>() * pa.asDiagonal();
    const CMatrix hbt = pb.asDiagonal() * hb.transpose().cast<cplx>();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ha.rows(), hb.rows());
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      const CMatrix amp = hac * (coeffs_[k] * hbt);
      p += weights_[k] * amp.cwiseAbs2();
    }
    return p;
  }

 private:
  static int check_space(const HilbertSpec &space, int mode) {
    if (space.modes() != 2) throw InvalidArgument("homodyne: state must have two modes");
    return space.dim(mode);
  }

  // Weight on the two highest Fock levels of either mode must be negligible.
  void check_tail() const {
    double tail = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      const CMatrix &c = coeffs_[k];
      tail += weights_[k] * (c.bottomRows(2).squaredNorm() + c.rightCols(2).squaredNorm());
    }
    if (tail > 1e-10) throw TruncationError("homodyne: state has weight " + std::to_string(tail) + " at the truncation edge");
  }

  int da_, db_;
  std::vector<double> weights_;
  std::vector<CMatrix> coeffs_;
};

inline double jqp_numeric(const DensityMatrix &rho, double xa, double xb, double la, double lb) {
  return HomodyneModel(rho).density(xa, xb, la, lb);
}

enum class QuadRule { GaussLegendre, Trapezoid };

struct QuadGrid {
  double lower = -8.0;
  double upper = 8.0;
  int nodes = 201;
  QuadRule rule = QuadRule::GaussLegendre;

  void validate() const {
    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
      throw InvalidArgument("QuadGrid: invalid bounds");
    if (nodes < 101) throw InvalidArgument("QuadGrid: at least 101 nodes required");
  }

  QuadratureRule build() const {
    validate();
    return rule == QuadRule::GaussLegendre ? gauss_legendre(nodes, lower, upper) : trapezoid(nodes, lower, upper);
  }

  QuadGrid doubled() const { return {lower, upper, 2 * nodes - (rule == QuadRule::Trapezoid ? 1 : 0), rule}; }
};

inline QuadGrid default_grid(double alpha0) {
  check_alpha0(alpha0);
  return {-(alpha0 + 8.0), alpha0 + 8.0, 201, QuadRule::GaussLegendre};
}

struct ProjectedEntropies {
  double s_a = 0.0;
  double s_b = 0.0;
  double s_ab = 0.0;
  double mass = 0.0;  // integral of the joint density on the grid
  int nodes = 0;
  double change = 0.0;  // largest entropy change under the last refinement
  bool converged = false;

  double mutual_information() const { return s_a + s_b - s_ab; }
};

struct ProjectedEntropyOptions {
  bool refine = true;
  double tolerance = 1e-4;
  int max_doublings = 3;
};

// Differential entropies in bits on a fixed quadrature grid.
class ProjectedEntropyEvaluator {
 public:
  ProjectedEntropyEvaluator(const HomodyneModel &model, const QuadGrid &grid) : model_(&model), grid_(grid) {
    rule_ = grid.build();
    ha_ = hermite_table(rule_.nodes, model.dim_a());
    hb_ = model.dim_b() == model.dim_a() ? ha_ : hermite_table(rule_.nodes, model.dim_b());
  }

  const QuadGrid &grid() const { return grid_; }

  ProjectedEntropies operator()(double la, double lb) const {
    const Eigen::MatrixXd p = model_->density_grid(ha_, hb_, la, lb);
    const Index n = p.rows();
    ProjectedEntropies out;
    out.nodes = grid_.nodes;
    std::vector<double> pa(n, 0.0), pb(n, 0.0);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const double v = p(i, j), wi = rule_.weights[i], wj = rule_.weights[j];
        pa[i] += wj * v;
        pb[j] += wi * v;
        out.mass += wi * wj * v;
        if (v > 0.0) out.s_ab -= wi * wj * v * std::log2(v);
      }
    for (Index i = 0; i < n; ++i) {
      if (pa[i] > 0.0) out.s_a -= rule_.weights[i] * pa[i] * std::log2(pa[i]);
      if (pb[i] > 0.0) out.s_b -= rule_.weights[i] * pb[i] * std::log2(pb[i]);
    }
    out.converged = true;
    return out;
  }

 private:
  const HomodyneModel *model_;
  QuadGrid grid_;
  QuadratureRule rule_;
  Eigen::MatrixXd ha_, hb_;
};

inline double entropy_change(const ProjectedEntropies &a, const ProjectedEntropies &b) {
  return std::max({std::abs(a.s_a - b.s_a), std::abs(a.s_b - b.s_b), std::abs(a.s_ab - b.s_ab)});
}

// Entropies with a node-doubling convergence check.
inline ProjectedEntropies projected_entropies(const HomodyneModel &model, double la, double lb, const QuadGrid &grid,
                                              const ProjectedEntropyOptions &options = {}) {
  ProjectedEntropies cur = ProjectedEntropyEvaluator(model, grid)(la, lb);
  if (!options.refine) {
    cur.converged = false;
    return cur;
  }
  QuadGrid g = grid;
  for (int k = 0; k < options.max_doublings; ++k) {
    g = g.doubled();
    ProjectedEntropies next = ProjectedEntropyEvaluator(model, g)(la, lb);
    next.change = entropy_change(cur, next);
    cur = next;
    if (cur.change < options.tolerance) {
      cur.converged = true;
      return cur;
    }
  }
  throw ConvergenceError("projected_entropies: grid refinement changed entropies by " + std::to_string(cur.change) +
                         " bits");
}

inline ProjectedEntropies projected_entropies(const DensityMatrix &rho, double la, double lb, const QuadGrid &grid,
                                              const ProjectedEntropyOptions &options = {}) {
  return projected_entropies(HomodyneModel(rho), la, lb, grid, options);
}

inline constexpr double kPurityTolerance = 1e-8;

inline void check_pure(const DensityMatrix &rho) {
  if (rho.purity() < 1.0 - kPurityTolerance) throw InvalidArgument("MID is defined for pure states only");
}

// Quantum mutual information of a pure two-mode state, 2 S(rho_A).
inline double pure_mutual_information(const DensityMatrix &rho) {
  check_pure(rho);
  return 2.0 * von_neumann_entropy(partial_trace(rho, {0}));
}

struct MidValue {
  double value = 0.0;
  ProjectedEntropies entropies;
};

inline MidValue mid(const DensityMatrix &rho, double la, double lb, const QuadGrid &grid,
                    const ProjectedEntropyOptions &options = {}) {
  const double info = pure_mutual_information(rho);
  const ProjectedEntropies e = projected_entropies(rho, la, lb, grid, options);
  return {info - e.mutual_information(), e};
}

// Default grid sized from the larger mean photon number (alpha0 <= sqrt(2 <n>)).
inline QuadGrid default_grid(const DensityMatrix &rho) {
  double n = 0.0;
  for (int m = 0; m < rho.space().modes(); ++m) n = std::max(n, number_op(rho.space(), m).expectation(rho).real());
  return default_grid(std::sqrt(2.0 * std::max(n, 0.0)));
}

inline MidValue mid(const DensityMatrix &rho, double la, double lb) { return mid(rho, la, lb, default_grid(rho)); }

inline double wrap_phase(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(x, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

// MID on a resolution x resolution grid of phases k 2 pi / resolution; rows index lambda_A.
inline Eigen::MatrixXd mid_map(const DensityMatrix &rho, int resolution, const QuadGrid &grid) {
  if (resolution < 1) throw InvalidArgument("mid_map: resolution must be positive");
  const double info = pure_mutual_information(rho);
  const HomodyneModel model(rho);
  const ProjectedEntropyEvaluator eval(model, grid);
  Eigen::MatrixXd out(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const double la = 2.0 * std::numbers::pi * i / resolution, lb = 2.0 * std::numbers::pi * j / resolution;
      out(i, j) = info - eval(la, lb).mutual_information();
    }
  return out;
}

struct AmidOptions {
  int grid_points = 24;
  int refine_candidates = 3;
  SimplexOptions simplex{200, 1e-10, 1e-6};
  double origin_tolerance = 1e-4;
  double tie_tolerance = 1e-6;
  double stagnation_tolerance = 1e-6;
  bool allow_unconverged = false;
};

struct AmidResult {
  double value = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double value_at_origin = 0.0;
  bool origin_is_minimum = false;
  double mutual_information = 0.0;
  ProjectedEntropies entropies;  // at the argmin, refined
  int evaluations = 0;
  bool converged = false;
};

// Minimum of MID over the two LO phases: coarse grid scan, then simplex refinement from the best grid points.
inline AmidResult amid(const DensityMatrix &rho, const QuadGrid &grid, const AmidOptions &options = {}) {
  if (options.grid_points < 2) throw InvalidArgument("amid: grid_points must be >= 2");
  const double info = pure_mutual_information(rho);
  const HomodyneModel model(rho);
  const ProjectedEntropyEvaluator eval(model, grid);
  AmidResult res;
  res.mutual_information = info;
  auto objective = [&](const std::array<double, 2> &p) {
    ++res.evaluations;
    return info - eval(wrap_phase(p[0]), wrap_phase(p[1])).mutual_information();
  };

  struct Candidate {
    double value, la, lb;
  };
  // Lexicographic order: value (within tolerance), then lambda_A, then lambda_B.
  auto better = [&](const Candidate &a, const Candidate &b) {
    if (a.value < b.value - options.tie_tolerance) return true;
    if (b.value < a.value - options.tie_tolerance) return false;
    if (a.la != b.la) return a.la < b.la;
    return a.lb < b.lb;
  };

  const int n = options.grid_points;
  const double step = 2.0 * std::numbers::pi / n;
  std::vector<Candidate> scan;
  scan.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scan.push_back({objective({i * step, j * step}), i * step, j * step});

  std::vector<Candidate> sorted = scan;
  std::stable_sort(sorted.begin(), sorted.end(), better);
  std::vector<Candidate> best;
  for (const auto &c : sorted) {
    if (static_cast<int>(best.size()) >= options.refine_candidates) break;
    best.push_back(c);
  }

  std::vector<Candidate> refined;
  bool converged = true;
  for (const auto &c : best) {
    const auto r = nelder_mead<2>(objective, {c.la, c.lb}, {step / 2, step / 2}, options.simplex);
    converged = converged && r.spread <= options.stagnation_tolerance;
    refined.push_back({r.value, wrap_phase(r.x[0]), wrap_phase(r.x[1])});
  }
  refined.push_back({0.0, 0.0, 0.0});
  // Final ranking on refined entropies; the coarse grid is too noisy to break near-ties.
  std::vector<ProjectedEntropies> ents;
  for (auto &c : refined) {
    ents.push_back(projected_entropies(model, c.la, c.lb, grid));
    c.value = info - ents.back().mutual_information();
  }
  std::size_t win = 0;
  for (std::size_t i = 1; i < refined.size(); ++i)
    if (better(refined[i], refined[win])) win = i;

  res.value = refined[win].value;
  res.lambda_a = refined[win].la;
  res.lambda_b = refined[win].lb;
  res.entropies = ents[win];
  res.value_at_origin = refined.back().value;
  res.origin_is_minimum = std::abs(res.value_at_origin - res.value) <= options.origin_tolerance;
  res.converged = converged && res.entropies.converged;
  if (!res.converged && !options.allow_unconverged) throw ConvergenceError("amid: simplex refinement stagnated");
  return res;
}

inline AmidResult amid(const DensityMatrix &rho, const AmidOptions &options = {}) {
  return amid(rho, default_grid(rho), options);
}

}  // namespace cvdiscord

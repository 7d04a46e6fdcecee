#pragma once

#include <memory>
#include <vector>

#include <gsl/gsl_integration.h>

#include "cvdiscord/errors.hpp"

namespace cvdiscord {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre nodes on [lower, upper].
inline QuadratureRule gauss_legendre(int n, double lower, double upper) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one node");
  if (!(upper > lower)) throw InvalidArgument("gauss_legendre: empty interval");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)), &gsl_integration_glfixed_table_free);
  if (!table) throw InvalidArgument("gauss_legendre: table allocation failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(lower, upper, static_cast<std::size_t>(i), &rule.nodes[i], &rule.weights[i],
                                  table.get());
  }
  return rule;
}

// Physicists' Gauss-Hermite rule: sum w_i f(t_i) approximates the integral of exp(-t^2) f(t).
inline QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite: need at least one node");
  std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, static_cast<std::size_t>(n), 0.0, 1.0, 0.0, 0.0),
      &gsl_integration_fixed_free);
  if (!ws) throw InvalidArgument("gauss_hermite: workspace allocation failed");
  QuadratureRule rule;
  const double *x = gsl_integration_fixed_nodes(ws.get());
  const double *w = gsl_integration_fixed_weights(ws.get());
  rule.nodes.assign(x, x + n);
  rule.weights.assign(w, w + n);
  return rule;
}

// Uniform periodic rule on [lower, lower + period).
inline QuadratureRule periodic_trapezoid(int n, double lower, double period) {
  if (n < 1) throw InvalidArgument("periodic_trapezoid: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.assign(n, period / n);
  for (int i = 0; i < n; ++i) rule.nodes[i] = lower + period * i / n;
  return rule;
}

// Closed trapezoid rule on [lower, upper].
inline QuadratureRule trapezoid(int n, double lower, double upper) {
  if (n < 2) throw InvalidArgument("trapezoid: need at least two nodes");
  if (!(upper > lower)) throw InvalidArgument("trapezoid: empty interval");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double h = (upper - lower) / (n - 1);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = lower + h * i;
    rule.weights[i] = (i == 0 || i == n - 1) ? h / 2 : h;
  }
  return rule;
}

}  // namespace cvdiscord

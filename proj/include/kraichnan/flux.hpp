#pragma once

#include <vector>

#include "kraichnan/params.hpp"

namespace kraichnan::flux {

struct FluxTable {
  ModelParams params;
  std::vector<double> xi_values;
  std::vector<double> F_values;
  std::vector<double> residuals;  // |F + K xi^{2-2a-2s}| xi^{2s}
  double K_used = 0.0;
};

enum class Method { Auto, Quadrature, Expansion };

// the xi^{2-2s} part that F subtracts, in the same normalization as F
double G_term(double xi_abs, const ModelParams& p);

// Auto: quadrature up to |xi| = 20, Mellin expansion beyond when its remainder is certified
double flux_F(double xi_abs, const ModelParams& p, Method method = Method::Auto);

// certified expansion; throws ToleranceNotReached if no cut below the tolerance is found
double flux_F_expansion(double xi_abs, const ModelParams& p, double rel_tol = 1e-9);

double flux_F_m(double xi_abs, const ModelParams& p);
double flux_F_selfsimilar(double xi_abs, const ModelParams& p);

FluxTable asymptotic_residual_table(const ModelParams& p, const std::vector<double>& xi_grid);

// max residual over a log grid on [1, 1e3]
double bound_constant(const ModelParams& p, int points = 40);

}  // namespace kraichnan::flux

#include "kraichnan/flux.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "kraichnan/errors.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/quad.hpp"
#include "kraichnan/specfun.hpp"

namespace kraichnan::flux {

namespace {

constexpr double kSwitch = 20.0;

double prefactor(const ModelParams& p) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * p.d) * specfun::sphere_area(p.d - 2);
}

void check_xi(double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi)) throw DomainError("flux: |xi| must be positive and finite");
}

// right-hand poles come at d + 2n and d + 2 alpha + 2n; cuts go between consecutive ones
std::vector<double> cut_candidates(const ModelParams& p, int count) {
  std::vector<double> locs;
  for (int n = 0; n < count; ++n) {
    locs.push_back(p.d + 2.0 * n);
    locs.push_back(p.d + 2.0 * p.alpha + 2.0 * n);
  }
  std::sort(locs.begin(), locs.end());
  std::vector<double> cuts;
  for (std::size_t i = 0; i + 1 < locs.size(); ++i)
    if (locs[i + 1] - locs[i] > 1e-6 && locs[i] > p.d) cuts.push_back(0.5 * (locs[i] + locs[i + 1]));
  return cuts;
}

struct CutData {
  mellin::Expansion expansion;
  double C;
};

const CutData& cut_data(const ModelParams& p, double r_prime) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double, double>, CutData> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(p.d, p.alpha, p.s, r_prime);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, CutData{mellin::expand_J(p, r_prime), mellin::remainder_constant(p, r_prime)})
             .first;
  return it->second;
}

}  // namespace

double G_term(double xi_abs, const ModelParams& p) {
  p.validate();
  check_xi(xi_abs);
  const double d = p.d, a = p.alpha;
  const double radial = std::tgamma(0.5 * d) * std::tgamma(a) / (2.0 * std::tgamma(0.5 * d + a));
  const double angular =
      std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (d + 1)) / std::tgamma(0.5 * (d + 2));
  return prefactor(p) * radial * angular * std::pow(xi_abs, 2.0 - 2.0 * p.s);
}

double flux_F_expansion(double xi_abs, const ModelParams& p, double rel_tol) {
  p.validate();
  check_xi(xi_abs);
  const double scale = mellin::k_constant_gamma(p) * std::pow(xi_abs, 2.0 - 2.0 * p.alpha - 2.0 * p.s);
  const double outer = prefactor(p) * std::pow(xi_abs, p.d + 2.0 - 2.0 * p.s);
  double best_bound = INFINITY, best_value = 0.0;
  for (double r_prime : cut_candidates(p, 6)) {
    const CutData& cd = cut_data(p, r_prime);
    double sum = 0.0;
    for (const auto& t : cd.expansion.terms) {
      // the lambda^{-d} term is exactly the G subtraction
      if (std::abs(t.exponent - p.d) < 1e-9) continue;
      sum += t.coefficient * std::pow(xi_abs, -t.exponent);
    }
    const double bound = outer * cd.C * std::pow(xi_abs, -r_prime);
    if (bound < best_bound) {
      best_bound = bound;
      best_value = outer * sum;
    }
    if (bound <= rel_tol * scale) return outer * sum;
  }
  throw ToleranceNotReached("flux_F_expansion: remainder bound above tolerance", best_value, 0.0,
                            best_bound);
}

double flux_F(double xi_abs, const ModelParams& p, Method method) {
  p.validate();
  check_xi(xi_abs);
  if (method == Method::Expansion) return flux_F_expansion(xi_abs, p);
  if (method == Method::Auto && xi_abs > kSwitch) {
    try {
      return flux_F_expansion(xi_abs, p);
    } catch (const ToleranceNotReached&) {
    }
  }
  // I - G in difference form: J minus its lambda^{-d} term
  const auto js = quad::J_subtracted(xi_abs, p, 1e-10);
  return prefactor(p) * std::pow(xi_abs, p.d + 2.0 - 2.0 * p.s) * js.value;
}

double flux_F_m(double xi_abs, const ModelParams& p) {
  if (!(p.m > 0.0)) throw DomainError("flux_F_m: m must be > 0");
  check_xi(xi_abs);
  ModelParams q = p;
  q.m = 0.0;
  return std::pow(p.m, 2.0 - 2.0 * p.s - 2.0 * p.alpha) * flux_F(xi_abs / p.m, q);
}

double flux_F_selfsimilar(double xi_abs, const ModelParams& p) {
  check_xi(xi_abs);
  return -mellin::k_constant_gamma(p) * std::pow(xi_abs, 2.0 - 2.0 * p.alpha - 2.0 * p.s);
}

FluxTable asymptotic_residual_table(const ModelParams& p, const std::vector<double>& xi_grid) {
  p.validate();
  for (std::size_t i = 0; i < xi_grid.size(); ++i) {
    check_xi(xi_grid[i]);
    if (i > 0 && !(xi_grid[i] > xi_grid[i - 1]))
      throw DomainError("asymptotic_residual_table: grid must be strictly increasing");
  }
  FluxTable t;
  t.params = p;
  t.K_used = mellin::k_constant_gamma(p);
  for (double xi : xi_grid) {
    const double F = flux_F(xi, p);
    t.xi_values.push_back(xi);
    t.F_values.push_back(F);
    t.residuals.push_back(std::abs(F + t.K_used * std::pow(xi, 2.0 - 2.0 * p.alpha - 2.0 * p.s)) *
                          std::pow(xi, 2.0 * p.s));
  }
  return t;
}

double bound_constant(const ModelParams& p, int points) {
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(std::pow(10.0, 3.0 * i / (points - 1)));
  const auto t = asymptotic_residual_table(p, grid);
  double c = 0.0;
  for (double r : t.residuals) c = std::max(c, r);
  return c;
}

}  // namespace kraichnan::flux

#include "kraichnan/quad.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "kraichnan/specfun.hpp"

namespace kraichnan::quad {

double fourier_tail(const std::function<double(double)>& g, double a, double omega,
                    bool use_sin, double rel_tol) {
  using boost::math::quadrature::ooura_fourier_cos;
  using boost::math::quadrature::ooura_fourier_sin;
  // node tables are expensive to build; keep one pair per thread
  thread_local double cached_tol = -1.0;
  thread_local std::unique_ptr<ooura_fourier_cos<double>> ic;
  thread_local std::unique_ptr<ooura_fourier_sin<double>> is;
  if (rel_tol != cached_tol) {
    ic = std::make_unique<ooura_fourier_cos<double>>(rel_tol);
    is = std::make_unique<ooura_fourier_sin<double>>(rel_tol);
    cached_tol = rel_tol;
  }
  auto shifted = [&](double x) { return g(a + x); };
  const double c = ic->integrate(shifted, omega).first;
  const double s = is->integrate(shifted, omega).first;
  const double ca = std::cos(omega * a), sa = std::sin(omega * a);
  return use_sin ? sa * c + ca * s : ca * c - sa * s;
}

namespace {

// 1 - 2 r cos(theta) + r^2 written without cancellation near (1, 0)
inline double base(double r, double theta) {
  const double h = std::sin(0.5 * theta);
  return (1.0 - r) * (1.0 - r) + 4.0 * r * h * h;
}

Options angular_options(double r, double rel_tol) {
  Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = 1e-300;
  if (std::abs(r - 1.0) < 1e-3) o.singular_points = {0.0};
  return o;
}

}  // namespace

double f_inner(double r, const ModelParams& p, double rel_tol) {
  if (!(r >= 0.0)) throw DomainError("f_inner: r must be >= 0");
  if (r == 0.0) return 0.0;
  const int d = p.d;
  const double s = p.s;
  auto g = [&](double th) { return std::pow(std::sin(th), d) * std::pow(base(r, th), -s); };
  const double ang = integrate(g, 0.0, std::numbers::pi, angular_options(r, rel_tol)).value;
  return std::pow(r, d - 1) * ang;
}

double f_inner_excess(double r, const ModelParams& p, double rel_tol) {
  if (!(r >= 0.0)) throw DomainError("f_inner_excess: r must be >= 0");
  if (r == 0.0) return 0.0;
  const int d = p.d;
  const double s = p.s;
  if (r < 0.5) {
    // pair theta with pi - theta so the odd O(r) parts cancel analytically
    auto g = [&](double th) {
      const double c = std::cos(th);
      const double mean = 0.5 * std::log1p(r * r * (2.0 + r * r - 4.0 * c * c));
      const double half_diff = 0.5 * std::log1p(-4.0 * r * c / (1.0 + r * r + 2.0 * r * c));
      const double sh = std::sinh(0.5 * s * half_diff);
      const double pair = 2.0 * (std::expm1(-s * mean) * std::cosh(s * half_diff) + 2.0 * sh * sh);
      return std::pow(std::sin(th), d) * pair;
    };
    Options o;
    o.rel_tol = rel_tol;
    o.abs_tol = rel_tol * 1e-3 * r * r;
    return integrate(g, 0.0, 0.5 * std::numbers::pi, o).value;
  }
  auto g = [&](double th) { return std::pow(std::sin(th), d) * (std::pow(base(r, th), -s) - 1.0); };
  Options o = angular_options(r, rel_tol);
  o.abs_tol = rel_tol * 1e-3;
  return integrate(g, 0.0, std::numbers::pi, o).value;
}

Result<double> J_direct(double lambda, const ModelParams& p, double rel_tol) {
  if (!(lambda > 0.0)) throw DomainError("J_direct: lambda must be > 0");
  p.validate();
  const double e = 0.5 * p.d + p.alpha;
  const double inner_tol = 0.1 * rel_tol;
  auto g = [&](double r) {
    return std::pow(1.0 + lambda * lambda * r * r, -e) * f_inner(r, p, inner_tol);
  };
  Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = 1e-300;
  o.decay_exponent = 1.0 + 2.0 * p.alpha + 2.0 * p.s;
  o.singular_points = {1.0};
  const double knee = 1.0 / lambda;
  if (knee != 1.0) o.singular_points.push_back(knee);
  Result<double> res = integrate(g, 0.0, INFINITY, o);
  res.error += inner_tol * std::abs(res.value);
  return res;
}

Result<double> J_subtracted(double lambda, const ModelParams& p, double rel_tol) {
  if (!(lambda > 0.0)) throw DomainError("J_subtracted: lambda must be > 0");
  p.validate();
  const double e = 0.5 * p.d + p.alpha;
  const double inner_tol = 0.1 * rel_tol;
  auto h = [&](double r) { return std::pow(1.0 + lambda * lambda * r * r, -e); };
  // near part carries the excess; beyond R the excess is f/r^{d-1} - mass and the
  // constant part integrates against h in closed form
  constexpr double R = 2.0;
  auto near = [&](double r) { return h(r) * std::pow(r, p.d - 1) * f_inner_excess(r, p, inner_tol); };
  auto far = [&](double r) { return h(r) * f_inner(r, p, inner_tol); };
  const double knee = 1.0 / lambda;
  Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = 1e-300;
  o.singular_points = {1.0};
  if (knee < R && knee != 1.0) o.singular_points.push_back(knee);
  Result<double> a = integrate(near, 0.0, R, o);
  o.singular_points.clear();
  if (knee > R) o.singular_points.push_back(knee);
  o.decay_exponent = 1.0 + 2.0 * p.alpha + 2.0 * p.s;
  const double X = lambda * R;
  const double flat = specfun::angular_mass(p.d) * 0.5 * std::pow(lambda, -p.d) *
                      boost::math::beta(p.alpha, 0.5 * p.d, 1.0 / (1.0 + X * X));
  o.abs_tol = 1e-3 * rel_tol * std::abs(a.value - flat);
  Result<double> b = integrate(far, R, INFINITY, o);
  Result<double> res{a.value + b.value - flat, a.error + b.error, a.evaluations + b.evaluations};
  res.error += inner_tol * (std::abs(a.value) + std::abs(b.value) + flat);
  return res;
}

}  // namespace kraichnan::quad

#include "kraichnan/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kraichnan/errors.hpp"
#include "kraichnan/quad.hpp"
#include "kraichnan/specfun.hpp"

namespace kraichnan::mellin {

namespace {

constexpr double kHitTol = 1e-9;  // two affine pole locations count as one below this

// residue of Gamma(c z + o) at the point where c z + o = -n
double gamma_residue(int n, double c) {
  const double mag = std::exp(-std::lgamma(n + 1.0));
  return ((n % 2) ? -mag : mag) / c;
}

bool hits(const GammaFactor& f, cplx z, double tol, int* n_out) {
  const cplx a = f.coef * z + f.offset;
  if (!specfun::near_nonpositive_integer(a, tol)) return false;
  *n_out = int(-std::round(a.real()));
  return true;
}

struct Limit {
  int order = 0;
  cplx coeff = 1.0;
};

Limit limit_at(const GammaProduct& g, cplx z, double tol) {
  Limit out;
  cplx logsum = 0.0;
  cplx acc = g.prefactor();
  for (const auto& f : g.factors()) {
    int n = 0;
    if (hits(f, z, tol, &n)) {
      const double r = gamma_residue(n, f.coef);
      out.order += f.power;
      acc *= (f.power > 0) ? r : 1.0 / r;
    } else {
      logsum += double(f.power) * specfun::log_gamma(f.coef * z + f.offset);
    }
  }
  out.coeff = acc * std::exp(logsum);
  return out;
}

}  // namespace

GammaProduct::GammaProduct(cplx prefactor, std::vector<GammaFactor> factors)
    : prefactor_(prefactor), factors_(std::move(factors)) {
  for (const auto& f : factors_) {
    if (f.coef == 0.0) throw DomainError("GammaProduct: zero coefficient");
    if (f.power != 1 && f.power != -1) throw DomainError("GammaProduct: power must be +-1");
  }
}

cplx GammaProduct::operator()(cplx z) const {
  const Limit l = limit_at(*this, z, specfun::kPoleTol);
  if (l.order > 0) throw PoleError("GammaProduct: pole at z = " + std::to_string(z.real()));
  if (l.order < 0) return 0.0;
  return l.coeff;
}

GammaProduct GammaProduct::operator*(const GammaProduct& other) const {
  std::vector<GammaFactor> all = factors_;
  all.insert(all.end(), other.factors_.begin(), other.factors_.end());
  return GammaProduct(prefactor_ * other.prefactor_, std::move(all));
}

int GammaProduct::order_at(double z0) const { return limit_at(*this, z0, kHitTol).order; }

cplx GammaProduct::leading_coefficient(double z0, int* order) const {
  const Limit l = limit_at(*this, z0, kHitTol);
  if (order) *order = l.order;
  return l.coeff;
}

std::pair<double, double> GammaProduct::growth(double r) const {
  double P = 0.0, E = 0.0;
  for (const auto& f : factors_) {
    P += f.power * (f.coef * r + f.offset - 0.5);
    E += f.power * 0.5 * std::numbers::pi * std::abs(f.coef);
  }
  return {P, E};
}

GammaProduct mellin_h_expr(const ModelParams& p) {
  const double a = 0.5 * p.d + p.alpha;
  return GammaProduct(0.5 * std::exp(-std::lgamma(a)), {{0.5, 0.0, 1}, {-0.5, a, 1}});
}

GammaProduct mellin_f_expr(const ModelParams& p) {
  const double d = p.d, s = p.s;
  const double pre = 0.5 * std::sqrt(std::numbers::pi) *
                     std::exp(std::lgamma(0.5 * (d - 2 * s + 2)) + std::lgamma(0.5 * (d + 1)) -
                              std::lgamma(s));
  return GammaProduct(pre, {{0.5, s - 0.5 * d, 1},
                            {-0.5, 0.5 * d, 1},
                            {0.5, 1.0, -1},
                            {-0.5, d - s + 1.0, -1}});
}

GammaProduct parseval_expr(const ModelParams& p) { return mellin_h_expr(p) * mellin_f_expr(p); }

std::vector<Pole> poles_in_strip(const GammaProduct& expr, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("poles_in_strip: need lo < hi");
  std::vector<double> cand;
  for (const auto& f : expr.factors()) {
    if (f.power < 0) continue;
    // c z + o = -n  <=>  z = (-n - o)/c
    const double e1 = -(f.coef * lo + f.offset), e2 = -(f.coef * hi + f.offset);
    const double nlo = std::max(0.0, std::floor(std::min(e1, e2)));
    const double nhi = std::ceil(std::max(e1, e2));
    for (double n = nlo; n <= nhi; n += 1.0) {
      const double z = (-n - f.offset) / f.coef;
      if (z > lo && z < hi) cand.push_back(z);
    }
  }
  std::sort(cand.begin(), cand.end());
  std::vector<Pole> out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (!out.empty() && std::abs(cand[i] - out.back().location) < kHitTol) continue;
    if (i > 0 && std::abs(cand[i] - cand[i - 1]) < kHitTol) continue;
    const int k = expr.order_at(cand[i]);
    if (k > 0) out.push_back({cand[i], k});
  }
  return out;
}

AsymptoticTerm residue_at(const GammaProduct& expr, double pole, double lambda_exponent_shift) {
  int order = 0;
  const cplx c = expr.leading_coefficient(pole, &order);
  if (order > 1)
    throw HigherOrderPole("residue_at: pole of order " + std::to_string(order) + " at " +
                          std::to_string(pole));
  if (order < 1) throw DomainError("residue_at: no pole at " + std::to_string(pole));
  return {pole + lambda_exponent_shift, -c.real()};
}

namespace {

double distance_to_poles(const GammaProduct& expr, double x) {
  const auto ps = poles_in_strip(expr, x - 1.0, x + 1.0);
  double best = 1.0;
  for (const auto& q : ps) best = std::min(best, std::abs(q.location - x));
  return best;
}

// (1/pi) int_0^Y Re[lambda^{-z} expr(z)] dy with Y grown until the tail bound is met
double vertical_line(double lambda, const GammaProduct& expr, double r) {
  const double loglam = std::log(lambda);
  auto g = [&](double y) {
    const cplx z(r, y);
    return (std::exp(-z * loglam) * expr(z)).real();
  };
  const auto [P, E] = expr.growth(r);
  quad::Options o;
  o.rel_tol = 1e-12;
  double total = 0.0, Y = 0.0;
  // integrand size at y = 0 sets the absolute floor
  const double scale = std::abs(expr(cplx(r, 0.0))) * std::exp(-r * loglam);
  for (;;) {
    const double Ynew = Y + 20.0;
    o.abs_tol = std::max(1e-300, 1e-15 * scale);
    const auto res = quad::integrate(g, Y, Ynew, o);
    total += res.value;
    Y = Ynew;
    const double edge = std::abs(expr(cplx(r, Y))) * std::exp(-r * loglam);
    const double rate = E - std::max(P, 0.0) / Y;
    if (rate > 0.0) {
      const double tail = 2.0 * edge / rate;
      if (tail <= 1e-10 * std::abs(total)) break;
    }
    if (Y >= 400.0)
      throw ToleranceNotReached("parseval_contour: truncation height exceeded 400", total / M_PI,
                                0.0, edge);
  }
  return total / std::numbers::pi;
}

}  // namespace

double parseval_contour(double lambda, const ModelParams& p, double line_re) {
  p.validate();
  if (!(lambda > 0.0)) throw DomainError("parseval_contour: lambda must be > 0");
  const double lo = p.d - 2.0 * p.s, hi = p.d;
  if (!(line_re > lo && line_re < hi))
    throw StripViolation("parseval_contour: line outside the strip (d-2s, d)");
  const GammaProduct expr = parseval_expr(p);
  if (distance_to_poles(expr, line_re) < 1e-9)
    throw StripViolation("parseval_contour: line too close to a pole");
  return vertical_line(lambda, expr, line_re);
}

double shifted_contour(double lambda, const ModelParams& p, double r_prime) {
  p.validate();
  const GammaProduct expr = parseval_expr(p);
  if (distance_to_poles(expr, r_prime) < 1e-9)
    throw StripViolation("shifted_contour: line too close to a pole");
  return vertical_line(lambda, expr, r_prime);
}

Expansion expand_J(const ModelParams& p, double r_prime) {
  p.validate();
  if (!(r_prime > p.d)) throw DomainError("expand_J: r_prime must exceed d");
  const GammaProduct expr = parseval_expr(p);
  if (distance_to_poles(expr, r_prime) < 1e-9)
    throw DomainError("expand_J: r_prime sits on a pole");
  Expansion out{{}, r_prime};
  for (const auto& q : poles_in_strip(expr, p.d - p.s, r_prime)) {
    if (q.order > 1)
      throw HigherOrderPole("expand_J: pole of order " + std::to_string(q.order) + " at " +
                            std::to_string(q.location));
    out.terms.push_back(residue_at(expr, q.location));
  }
  return out;
}

double remainder_constant(const ModelParams& p, double r_prime) {
  const GammaProduct expr = parseval_expr(p);
  auto g = [&](double y) { return std::abs(expr(cplx(r_prime, y))); };
  quad::Options o;
  o.rel_tol = 1e-8;
  o.abs_tol = 1e-300;
  o.decay_exponent = 20.0;  // exponential decay; any exponent > 1 is conservative
  return quad::integrate(g, 0.0, INFINITY, o).value / std::numbers::pi;
}

double k_constant_gamma(const ModelParams& p) {
  p.validate();
  const double d = p.d, a = p.alpha, s = p.s;
  const double R = std::tgamma(s + a) * std::tgamma(-a) * std::tgamma(0.5 * (d - 2 * s + 2)) /
                   (std::tgamma(s) * std::tgamma(0.5 * (d + 2 * a + 2)) *
                    std::tgamma(0.5 * (d - 2 * s + 2 - 2 * a)));
  const double K = -std::pow(2.0, -0.5 * d - 1.0) * (d - 1.0) * R;
  if (!(K > 0.0)) throw DomainError("k_constant_gamma: non-positive value");
  return K;
}

double k_constant_integral(const ModelParams& p) {
  p.validate();
  const double a = p.alpha;
  // beyond R the excess tends to -angular_mass; that constant part is integrated exactly
  constexpr double R = 2.0;
  const double mass = specfun::angular_mass(p.d);
  quad::Options o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-300;
  o.singular_points = {0.0, 1.0};
  auto near = [&](double r) {
    return -std::pow(r, -1.0 - 2.0 * a) * quad::f_inner_excess(r, p, 1e-12);
  };
  auto far = [&](double r) {
    return -std::pow(r, -1.0 - 2.0 * a) * (quad::f_inner_excess(r, p, 1e-12) + mass);
  };
  const double head = quad::integrate(near, 0.0, R, o).value;
  o.singular_points.clear();
  o.decay_exponent = 1.0 + 2.0 * a + 2.0 * p.s;
  o.abs_tol = 1e-12 * std::abs(head);
  const double tail = quad::integrate(far, R, INFINITY, o).value;
  const double v = head + tail + mass * std::pow(R, -2.0 * a) / (2.0 * a);
  return std::pow(2.0 * std::numbers::pi, -0.5 * p.d) * specfun::sphere_area(p.d - 2) * v;
}

double riesz_constant(int d, double sigma) {
  if (d < 1 || !(sigma > 0.0 && sigma < 0.5 * d))
    throw DomainError("riesz_constant: sigma must lie in (0, d/2)");
  return std::pow(std::numbers::pi, 0.5 * d) * std::pow(2.0, 2.0 * sigma) * std::tgamma(sigma) /
         std::tgamma(0.5 * d - sigma);
}

namespace {

// int_0^inf r^{-1-2a} (1 - cos(k r)) dr by quadrature plus an oscillatory tail
double radial_cosine_gap(double a, double k) {
  if (k == 0.0) return 0.0;
  const double R0 = 16.0 * std::numbers::pi / k;
  auto g = [&](double r) {
    const double h = std::sin(0.5 * k * r);
    return 2.0 * h * h * std::pow(r, -1.0 - 2.0 * a);
  };
  quad::Options o;
  o.rel_tol = 1e-12;
  o.abs_tol = 1e-300;
  o.singular_points = {0.0};
  const double head = quad::integrate(g, 0.0, R0, o).value;
  const double flat = std::pow(R0, -2.0 * a) / (2.0 * a);
  const double osc = quad::fourier_tail([&](double r) { return std::pow(r, -1.0 - 2.0 * a); }, R0,
                                        k, false, 1e-12);
  return head + flat - osc;
}

}  // namespace

double d_constant_at(int d, double alpha, double z_abs) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("d_constant: alpha must lie in (0,1)");
  if (d < 2) throw DomainError("d_constant: d must be >= 2");
  if (!(z_abs > 0.0)) throw DomainError("d_constant: |z| must be > 0");
  // angular average of the radial integral over directions u, with u_1 = cos(theta)
  auto g = [&](double th) {
    return std::pow(std::sin(th), d - 2) * radial_cosine_gap(alpha, z_abs * std::abs(std::cos(th)));
  };
  quad::Options o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-300;
  o.singular_points = {0.5 * std::numbers::pi};
  const double sphere = specfun::sphere_area(d - 2) * quad::integrate(g, 0.0, std::numbers::pi, o).value;
  // trace of Q(0) - Q(z) carries the factor (d - 1) from the transverse projector; the
  // longitudinal/transverse split of the self-similar structure function normalizes by d + 2 alpha
  const double trace = std::pow(2.0 * std::numbers::pi, -0.5 * d) * (d - 1.0) * sphere;
  return trace / (d + 2.0 * alpha) / std::pow(z_abs, 2.0 * alpha);
}

double d_constant(int d, double alpha) { return d_constant_at(d, alpha, 1.0); }

double k_constant_riesz(const ModelParams& p) {
  p.validate();
  const double sig = p.s + p.alpha - 1.0;
  if (!(sig > 0.0)) throw CaseOutOfRange("k_constant_riesz: requires s + alpha > 1");
  return d_constant(p.d, p.alpha) * 2.0 * (p.d - 2.0 * p.s) * sig * riesz_constant(p.d, sig) /
         riesz_constant(p.d, p.s);
}

KReport k_report(const ModelParams& p) {
  KReport r;
  r.params = p;
  r.k_gamma = k_constant_gamma(p);
  r.k_integral = k_constant_integral(p);
  r.dev_gamma_integral = std::abs(r.k_integral / r.k_gamma - 1.0);
  if (p.s + p.alpha > 1.0) {
    r.k_riesz = k_constant_riesz(p);
    r.dev_gamma_riesz = std::abs(*r.k_riesz / r.k_gamma - 1.0);
  }
  return r;
}

}  // namespace kraichnan::mellin

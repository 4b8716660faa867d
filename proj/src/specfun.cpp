#include "kraichnan/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "kraichnan/errors.hpp"

namespace kraichnan::specfun {

namespace {

// Lanczos g = 7, nine terms; relative error near 1e-15 on Re z >= 1/2
constexpr double kG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,   676.5203681218851,     -1259.1392167224028,
    771.32342877765313,    -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,  9.9843695780195716e-6, 1.5056327351493116e-7};

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

cplx lanczos_log_gamma(cplx z) {
  z -= 1.0;
  cplx x = kLanczos[0];
  for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + double(i));
  const cplx t = z + kG + 0.5;
  return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(x);
}

void require_finite(cplx z, const char* who) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError(std::string(who) + ": non-finite argument");
}

}  // namespace

bool near_nonpositive_integer(cplx z, double tol) {
  if (std::abs(z.imag()) >= tol) return false;
  const double n = std::round(z.real());
  return n <= 0.0 && std::abs(z.real() - n) < tol;
}

cplx log_gamma(cplx z) {
  require_finite(z, "log_gamma");
  if (near_nonpositive_integer(z))
    throw PoleError("log_gamma: pole at z = " + std::to_string(std::round(z.real())));
  if (z.real() >= 0.5) return lanczos_log_gamma(z);
  // shift right; principal logs keep the branch continuous off the negative axis
  int n = int(std::ceil(0.5 - z.real()));
  cplx acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::log(z + double(k));
  return lanczos_log_gamma(z + double(n)) - acc;
}

cplx gamma(cplx z) { return std::exp(log_gamma(z)); }

cplx rgamma(cplx z) {
  if (near_nonpositive_integer(z)) return 0.0;
  return std::exp(-log_gamma(z));
}

double sphere_area(int n) {
  if (n < 0) throw DomainError("sphere_area: n must be >= 0");
  const double h = 0.5 * (n + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

cplx beta_mellin(double s_exp, cplx z) {
  require_finite(z, "beta_mellin");
  if (!(s_exp > 0.0)) throw DomainError("beta_mellin: s_exp must be > 0");
  if (!(z.real() > 0.0 && z.real() < 2.0 * s_exp))
    throw DomainError("beta_mellin: Re z outside the strip (0, 2 s_exp)");
  return 0.5 * std::exp(log_gamma(0.5 * z) + log_gamma(s_exp - 0.5 * z) -
                        std::lgamma(s_exp));
}

double sin_power_integral(double gamma_exp, double eta_exp) {
  if (!(gamma_exp > -1.0) || !(eta_exp > -1.0))
    throw DomainError("sin_power_integral: exponents must exceed -1");
  if (eta_exp != 2.0 * std::round(0.5 * eta_exp))
    throw DomainError("sin_power_integral: eta must be an even integer");
  return std::exp(std::lgamma(0.5 * (gamma_exp + 1)) + std::lgamma(0.5 * (eta_exp + 1)) -
                  std::lgamma(0.5 * (gamma_exp + eta_exp + 2)));
}

double angular_mass(int d) { return sin_power_integral(d, 0.0); }

cplx mellin_h(const ModelParams& p, cplx z) {
  require_finite(z, "mellin_h");
  const double a = 0.5 * p.d + p.alpha;
  const cplx u = 0.5 * z, v = a - 0.5 * z;
  if (near_nonpositive_integer(u) || near_nonpositive_integer(v))
    throw PoleError("mellin_h: pole");
  return 0.5 * std::exp(log_gamma(u) + log_gamma(v) - std::lgamma(a));
}

cplx mellin_f(const ModelParams& p, cplx z) {
  require_finite(z, "mellin_f");
  const double d = p.d, s = p.s;
  const cplx n1 = 0.5 * (2 * s - d + z), n2 = 0.5 * (d - z);
  if (near_nonpositive_integer(n1) || near_nonpositive_integer(n2))
    throw PoleError("mellin_f: pole");
  const double pre = 0.5 * std::sqrt(std::numbers::pi) *
                     std::exp(std::lgamma(0.5 * (d - 2 * s + 2)) +
                              std::lgamma(0.5 * (d + 1)) - std::lgamma(s));
  const cplx d1 = 0.5 * (z + 2.0), d2 = 0.5 * (2 * d - 2 * s + 2 - z);
  // a reciprocal Gamma at a nonpositive integer makes the value vanish
  if (near_nonpositive_integer(d1) || near_nonpositive_integer(d2)) return 0.0;
  return pre * std::exp(log_gamma(n1) + log_gamma(n2) - log_gamma(d1) - log_gamma(d2));
}

}  // namespace kraichnan::specfun

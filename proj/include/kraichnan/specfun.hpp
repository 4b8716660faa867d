#pragma once

#include <complex>

#include "kraichnan/params.hpp"

namespace kraichnan::specfun {

using cplx = std::complex<double>;

// distance below which an argument counts as sitting on a pole
inline constexpr double kPoleTol = 1e-12;

bool near_nonpositive_integer(cplx z, double tol = kPoleTol);

// principal branch, continued through the recursion z -> z+1 left of Re z = 1/2
cplx log_gamma(cplx z);
cplx gamma(cplx z);
cplx rgamma(cplx z);  // 1/Gamma, entire; zero at the poles

// surface area of the unit sphere S^n in R^{n+1}
double sphere_area(int n);

cplx beta_mellin(double s_exp, cplx z);
double sin_power_integral(double gamma_exp, double eta_exp);

cplx mellin_h(const ModelParams& p, cplx z);
// the transform of f evaluated at 1 - z
cplx mellin_f(const ModelParams& p, cplx z);

// int_0^pi sin^d(theta) dtheta, the r -> 0 slope of f(r)/r^{d-1}
double angular_mass(int d);

}  // namespace kraichnan::specfun

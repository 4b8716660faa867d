#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "kraichnan/params.hpp"

namespace kraichnan::mellin {

using cplx = std::complex<double>;

// Gamma(coef * z + offset)^power
struct GammaFactor {
  double coef;
  double offset;
  int power;  // +1 or -1
};

class GammaProduct {
 public:
  GammaProduct(cplx prefactor, std::vector<GammaFactor> factors);

  cplx prefactor() const { return prefactor_; }
  const std::vector<GammaFactor>& factors() const { return factors_; }

  // value at z; removable points evaluate to their limit, poles throw PoleError
  cplx operator()(cplx z) const;
  GammaProduct operator*(const GammaProduct& other) const;

  // pole order at a real point (negative: zero of that order)
  int order_at(double z0) const;
  // coefficient c in expr ~ c (z - z0)^{-order}
  cplx leading_coefficient(double z0, int* order = nullptr) const;

  // |expr(r + iy)| ~ A |y|^P exp(-E |y|) for large |y|
  std::pair<double, double> growth(double r) const;

 private:
  cplx prefactor_;
  std::vector<GammaFactor> factors_;
};

struct Pole {
  double location;
  int order;
};

struct AsymptoticTerm {
  double exponent;  // power of lambda^{-exponent}
  double coefficient;
};

GammaProduct mellin_h_expr(const ModelParams& p);
GammaProduct mellin_f_expr(const ModelParams& p);  // as a function of z, transform at 1 - z
GammaProduct parseval_expr(const ModelParams& p);  // product of the two

std::vector<Pole> poles_in_strip(const GammaProduct& expr, double lo, double hi);

// coefficient = -residue, exponent = pole + shift
AsymptoticTerm residue_at(const GammaProduct& expr, double pole, double lambda_exponent_shift = 0.0);

// (1/2pi) int Re[lambda^{-z} M_h(z) M_f(1-z)] dy along Re z = line_re
double parseval_contour(double lambda, const ModelParams& p, double line_re);

struct Expansion {
  std::vector<AsymptoticTerm> terms;
  double remainder_exponent;
};

// residue terms for poles between the fundamental strip and r_prime
Expansion expand_J(const ModelParams& p, double r_prime);

// (1/2pi) int |M_h M_f| along Re z = r_prime: |remainder| <= C lambda^{-r_prime}
double remainder_constant(const ModelParams& p, double r_prime);

// the contour integral at r_prime itself (signed), for residue-shift checks
double shifted_contour(double lambda, const ModelParams& p, double r_prime);

double k_constant_gamma(const ModelParams& p);
double k_constant_integral(const ModelParams& p);
double riesz_constant(int d, double sigma);
double d_constant(int d, double alpha);
// the same quantity evaluated at |z| = z_abs before dividing out |z|^{2 alpha}
double d_constant_at(int d, double alpha, double z_abs);
double k_constant_riesz(const ModelParams& p);

struct KReport {
  ModelParams params;
  double k_gamma = 0.0;
  double k_integral = 0.0;
  std::optional<double> k_riesz;
  double c_constant = 0.0;
  double dev_gamma_integral = 0.0;
  std::optional<double> dev_gamma_riesz;
};

KReport k_report(const ModelParams& p);

}  // namespace kraichnan::mellin

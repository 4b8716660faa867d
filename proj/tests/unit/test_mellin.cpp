#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "kraichnan/errors.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/quad.hpp"
#include "kraichnan/specfun.hpp"
#include "oracles.hpp"

using namespace kraichnan;

TEST_CASE("Gamma products reproduce the closed-form transforms") {
  for (const auto& o : oracle::kMellin) {
    const ModelParams p{o.d, o.alpha, o.s};
    const mellin::cplx z{o.re, o.im};
    CHECK(rel_err(mellin::mellin_h_expr(p)(z), mellin::cplx{o.h_re, o.h_im}) < 1e-12);
    CHECK(rel_err(mellin::mellin_f_expr(p)(z), mellin::cplx{o.f_re, o.f_im}) < 1e-12);
    CHECK(rel_err(mellin::parseval_expr(p)(z), mellin::cplx{o.h_re, o.h_im} * mellin::cplx{o.f_re, o.f_im}) < 1e-12);
  }
}

TEST_CASE("residues at the named poles") {
  const double sqpi = std::sqrt(std::numbers::pi);
  for (int d : {2, 3})
    for (double a : {0.25, 0.5, 0.75})
      for (double s : {0.3, 0.5 * d - 0.2}) {
        const ModelParams p{d, a, s};
        // res M[h] at d + 2 alpha is -1
        CHECK(mellin::residue_at(mellin::mellin_h_expr(p), d + 2 * a).coefficient == doctest::Approx(1.0).epsilon(1e-12));
        const double res_d = -sqpi * std::tgamma(0.5 * (d + 1)) / std::tgamma(0.5 * (d + 2));
        CHECK(mellin::residue_at(mellin::mellin_f_expr(p), d).coefficient == doctest::Approx(-res_d).epsilon(1e-12));
        const double res_d2 = sqpi * (d - 2 * s) * s * std::tgamma(0.5 * (d + 1)) / (2 * std::tgamma(0.5 * (d + 4)));
        CHECK(mellin::residue_at(mellin::mellin_f_expr(p), d + 2).coefficient == doctest::Approx(-res_d2).epsilon(1e-12));
        // numerically: eps * M_f(d + 2 + eps)
        const double eps = 1e-7;
        const double num = (eps * specfun::mellin_f(p, d + 2 + eps)).real();
        CHECK(num == doctest::Approx(res_d2).epsilon(1e-6));
      }
}

TEST_CASE("pole bookkeeping") {
  const ModelParams p{2, 0.5, 0.75};
  const auto e = mellin::parseval_expr(p);
  const auto poles = mellin::poles_in_strip(e, 0.4, 5.5);
  // d - 2s = 0.5, d = 2, d + 2 alpha = 3, d + 2 = 4, d + 2 + 2 alpha = 5
  REQUIRE(poles.size() == 5);
  CHECK(poles[0].location == doctest::Approx(0.5));
  CHECK(poles[4].location == doctest::Approx(5.0));
  CHECK_THROWS_AS(mellin::residue_at(e, 1.3), DomainError);
  // alpha = 1/2 makes d + 2 alpha = d + 1 collide with nothing, but d = 2, alpha -> 1 would; a double pole:
  const mellin::GammaProduct dbl{1.0, {{1.0, 0.0, 1}, {1.0, 0.0, 1}}};
  CHECK_THROWS_AS(mellin::residue_at(dbl, 0.0), HigherOrderPole);
}

TEST_CASE("Parseval contour equals J") {
  for (const auto& o : oracle::kJ) {
    const ModelParams p{o.d, o.alpha, o.s};
    const double line = o.d - o.s;
    CHECK(rel_err(mellin::parseval_contour(o.lambda, p, line), o.J) < 1e-8);
  }
  const ModelParams p{2, 0.5, 0.75};
  CHECK_THROWS_AS(mellin::parseval_contour(2.0, p, 2.5), StripViolation);
  CHECK_THROWS_AS(mellin::parseval_contour(2.0, p, 0.2), StripViolation);
}

TEST_CASE("residue shift: contour difference equals the residues in between") {
  const ModelParams p{2, 0.5, 0.75};
  const double lambda = 5.0, r = 1.25, r2 = 4.3;
  const auto ex = mellin::expand_J(p, r2);
  double sum = 0.0;
  for (const auto& t : ex.terms) sum += t.coefficient * std::pow(lambda, -t.exponent);
  const double lhs = mellin::parseval_contour(lambda, p, r);
  const double rhs = sum + mellin::shifted_contour(lambda, p, r2);
  CHECK(rel_err(rhs, lhs) < 1e-9);
  CHECK(std::abs(mellin::shifted_contour(lambda, p, r2)) <= mellin::remainder_constant(p, r2) * std::pow(lambda, -r2));
}

TEST_CASE("K by the gamma formula matches mpmath; integral route agrees") {
  for (const auto& o : oracle::kK) {
    const ModelParams p{o.d, o.alpha, o.s};
    CHECK(rel_err(mellin::k_constant_gamma(p), o.K) < 1e-12);
    CHECK(rel_err(mellin::k_constant_integral(p), o.K) < 1e-8);
    if (o.s + o.alpha > 1.0) {
      CHECK(rel_err(mellin::k_constant_riesz(p), o.K) < 1e-8);
    } else {
      CHECK_THROWS_AS(mellin::k_constant_riesz(p), CaseOutOfRange);
    }
  }
}

TEST_CASE("D constant against its closed form") {
  for (const auto& o : oracle::kD) CHECK(rel_err(mellin::d_constant(o.d, o.alpha), o.D) < 1e-9);
  // homogeneity of degree 2 alpha is divided out
  CHECK(rel_err(mellin::d_constant_at(2, 0.5, 3.0), mellin::d_constant(2, 0.5)) < 1e-9);
}

TEST_CASE("K at s + alpha -> 1 from above stays finite and matches both routes") {
  const double a = 0.5;
  const ModelParams p{2, a, 1.0 - a + 1e-4};
  const double kg = mellin::k_constant_gamma(p);
  CHECK(kg > 0.1);
  CHECK(rel_err(mellin::k_constant_riesz(p), kg) < 1e-6);
}

TEST_CASE("K is positive across the admissible range") {
  for (int d : {2, 3, 4})
    for (double a = 0.1; a < 1.0; a += 0.2)
      for (double f = 0.1; f < 1.0; f += 0.2) {
        const ModelParams p{d, a, f * 0.5 * d};
        CHECK(mellin::k_constant_gamma(p) > 0.0);
      }
}

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kraichnan/errors.hpp"
#include "kraichnan/mc_spde.hpp"

using namespace kraichnan;
using namespace kraichnan::mc;

namespace {
LatticeConfig small_cfg() {
  LatticeConfig c;
  c.n_max = 6;
  c.n_samples = 200;
  c.seed = 5;
  return c;
}
}  // namespace

TEST_CASE("lattice indexing") {
  const Lattice lat(small_cfg());
  CHECK(lat.side() == 13);
  for (std::size_t i = 0; i < lat.size(); ++i) CHECK(lat.index(lat.kx_of(i), lat.ky_of(i)) == i);
  CHECK(lat.contains(6, -6));
  CHECK_FALSE(lat.contains(7, 0));
}

TEST_CASE("config validation") {
  LatticeConfig c = small_cfg();
  c.d = 3;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = small_cfg();
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("noise covariance is divergence free and isotropic at leading order") {
  const Lattice lat(small_cfg());
  for (const auto& m : lat.noise()) {
    CHECK(std::abs(m.ex * m.kx + m.ey * m.ky) < 1e-14);
    CHECK(std::hypot(m.ex, m.ey) == doctest::Approx(1.0));
  }
  double xx, xy, yy;
  lat.corrector_matrix(xx, xy, yy);
  CHECK(std::abs(xy) < 1e-12 * xx);
  CHECK(std::abs(xx - yy) < 1e-12 * xx);
}

TEST_CASE("counter-based normals are reproducible and standard") {
  double a1, a2, b1, b2;
  gaussian_pair({1, 2, 3}, 4, a1, a2);
  gaussian_pair({1, 2, 3}, 4, b1, b2);
  CHECK(a1 == b1);
  CHECK(a2 == b2);
  gaussian_pair({1, 2, 3}, 5, b1, b2);
  CHECK(a1 != b1);
  double m = 0, v = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g1, g2;
    gaussian_pair({9, std::uint64_t(i), 0}, 0, g1, g2);
    m += g1 + g2;
    v += g1 * g1 + g2 * g2;
  }
  m /= 2 * n;
  v /= 2 * n;
  CHECK(std::abs(m) < 5.0 / std::sqrt(2.0 * n));
  CHECK(std::abs(v - 1.0) < 5.0 * std::sqrt(2.0 / (2.0 * n)));
}

TEST_CASE("FFT rate equals the direct lattice rate") {
  const Lattice lat(small_cfg());
  const auto f = gaussian_blob(lat, 2.0);
  std::vector<double> b(lat.size()), r;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::norm(f.amplitudes[i]);
  Stepper st(lat, lat.default_dt(), 0.01);
  st.rate(b, r);
  const auto direct = lat.master_rate(b, 0.01);
  double scale = 0.0;
  for (double v : direct) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(r[i] - direct[i]) <= 1e-12 * scale);
}

TEST_CASE("stepping keeps the field real") {
  const Lattice lat(small_cfg());
  auto f = gaussian_blob(lat, 2.0);
  Stepper st(lat, lat.default_dt());
  for (std::uint64_t n = 0; n < 50; ++n) st.step(f, {5, 0, n});
  double amp = 0.0;
  for (const auto& a : f.amplitudes) amp = std::max(amp, std::abs(a));
  CHECK(reality_defect(lat, f) <= 1e-13 * amp);
  CHECK(std::abs(f.amplitudes[lat.index(0, 0)]) == 0.0);
}

TEST_CASE("ensembles are reproducible and match the master equation") {
  const LatticeConfig c = small_cfg();
  const Lattice lat(c);
  const auto init = gaussian_blob(lat, 2.0);
  const auto a = run_ensemble(c, init, 0.02, {0.0, 0.01, 0.02});
  const auto b = run_ensemble(c, init, 0.02, {0.0, 0.01, 0.02});
  REQUIRE(a.stats.size() == 3);
  CHECK(a.stats[2].mean_sq == b.stats[2].mean_sq);
  CHECK(a.invalid_samples == 0);
  for (const auto& rc : a.rate_checks) CHECK(rc.pass_fraction >= 0.9);
  // initial record equals the initial spectrum exactly
  for (std::size_t i = 0; i < lat.size(); ++i) CHECK(a.stats[0].mean_sq[i] == doctest::Approx(std::norm(init.amplitudes[i])));
  CHECK_THROWS_AS(run_ensemble(c, init, 0.02, {0.01, 0.005}), DomainError);
}

TEST_CASE("Sobolev estimate of a deterministic spectrum") {
  const Lattice lat(small_cfg());
  EnsembleStats s;
  s.mean_sq.assign(lat.size(), 0.0);
  s.std_err.assign(lat.size(), 0.0);
  s.mean_sq[lat.index(1, 0)] = 2.0;
  s.mean_sq[lat.index(0, 2)] = 4.0;
  const auto e = sobolev_estimate(lat, s, 0.5);
  CHECK(e.value == doctest::Approx(2.0 / 1.0 + 4.0 / 2.0));
  CHECK(e.std_err == 0.0);
}

#include <doctest.h>

#include <filesystem>
#include <map>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "kraichnan/errors.hpp"
#include "kraichnan/flux.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/spectral.hpp"
#include "kraichnan/specfun.hpp"

using namespace kraichnan;
using namespace kraichnan::spectral;

namespace {

SpectrumState gaussian(const RadialGrid& g, const ModelParams& p, double width = 1.0) {
  SpectrumState st{g, {}, 0.0, p};
  for (double r : g.nodes) st.values.push_back(std::exp(-(r / width) * (r / width)));
  return st;
}

const KernelMatrix& small_kernel(KernelMode mode, Boundary b) {
  static std::map<std::pair<int, int>, KernelMatrix> cache;
  auto key = std::make_pair(int(mode), int(b));
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto g = RadialGrid::log_spaced(2, 1e-2, 1e2, 96);
    it = cache.emplace(key, build_kernel(g, ModelParams{2, 0.5, 0.75}, {mode, b})).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("grid layout") {
  const auto g = RadialGrid::log_spaced(3, 0.1, 10.0, 40);
  CHECK(g.size() == 40);
  CHECK(g.nodes.front() > 0.1);
  CHECK(g.nodes.back() < 10.0);
  CHECK(g.weights[5] == doctest::Approx(specfun::sphere_area(2) * std::pow(g.nodes[5], 3) * g.log_step));
  CHECK(g.hash() == RadialGrid::log_spaced(3, 0.1, 10.0, 40).hash());
  CHECK(g.hash() != RadialGrid::log_spaced(3, 0.1, 10.0, 41).hash());
  CHECK_THROWS_AS(RadialGrid::log_spaced(2, 1.0, 0.5, 10), DomainError);
}

TEST_CASE("Sobolev norm of a Gaussian") {
  // int |xi|^{-2s} exp(-|xi|^2) dxi = omega_{d-1} Gamma((d - 2s)/2) / 2
  const auto g = RadialGrid::log_spaced(2, 1e-6, 10.0, 600);
  const ModelParams p{2, 0.5, 0.25};
  const auto st = gaussian(g, p);
  const double exact = specfun::sphere_area(1) * std::tgamma(0.75) / 2;
  CHECK(rel_err(sobolev_norm(st, 0.25), exact) < 1e-6);
}

TEST_CASE("kernel structure") {
  for (auto mode : {KernelMode::Bracket, KernelMode::SelfSimilar}) {
    const auto& k = small_kernel(mode, Boundary::Absorbing);
    const auto n = k.grid.size();
    CHECK((k.exchange - k.exchange.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * k.exchange.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(k.exchange(i, i) == 0.0);
      CHECK(k.absorption[i] >= 0.0);
    }
    CHECK(k.exchange.minCoeff() >= 0.0);
  }
  const auto& c = small_kernel(KernelMode::Bracket, Boundary::Closed);
  CHECK(c.absorption.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed boundary conserves mass exactly; absorbing loses it") {
  const auto& c = small_kernel(KernelMode::Bracket, Boundary::Closed);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd a(c.grid.size());
  for (auto& v : a) v = u(rng);
  const Eigen::VectorXd r = rate(c, a);
  const Eigen::Map<const Eigen::VectorXd> w(c.grid.weights.data(), c.grid.size());
  CHECK(std::abs(w.dot(r)) <= 1e-13 * w.cwiseProduct(a).sum() * c.max_rate());
  const auto& ab = small_kernel(KernelMode::Bracket, Boundary::Absorbing);
  CHECK(w.dot(rate(ab, a)) < 0.0);
}

TEST_CASE("balance identity holds for random states") {
  const auto& k = small_kernel(KernelMode::Bracket, Boundary::Absorbing);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    SpectrumState st{k.grid, {}, 0.0, k.params};
    for (std::size_t i = 0; i < k.grid.size(); ++i) st.values.push_back(u(rng));
    for (double s : {0.3, 0.75, -0.25}) CHECK(balance_check(st, k, s, false).relative_gap() <= 1e-12);
  }
}

TEST_CASE("grid flux tracks the continuum flux away from the edges") {
  const auto g = RadialGrid::log_spaced(2, 1e-2, 1e3, 256);
  const ModelParams p{2, 0.5, 0.75};
  const auto k = build_kernel(g, p, {KernelMode::Bracket, Boundary::Absorbing});
  const auto F = flux_grid(k, p.s);
  for (int i : {64, 96, 128, 160}) CHECK(rel_err(F[i], flux::flux_F(g.nodes[i], p)) < 0.02);
}

TEST_CASE("step keeps positivity and refuses unstable steps") {
  const auto& k = small_kernel(KernelMode::Bracket, Boundary::Absorbing);
  auto st = gaussian(k.grid, k.params);
  const double dt = 0.2 / k.max_rate();
  for (int i = 0; i < 20; ++i) st = step(st, k, dt);
  for (double v : st.values) CHECK(v >= 0.0);
  CHECK(st.time == doctest::Approx(20 * dt));
  CHECK_THROWS_AS(step(st, k, 2.0 / k.max_rate()), StabilityViolation);
}

TEST_CASE("RK4 and the exact propagator agree") {
  const auto& k = small_kernel(KernelMode::Bracket, Boundary::Absorbing);
  const auto init = gaussian(k.grid, k.params, 3.0);
  EvolveOptions rk;
  rk.record_every = 10;
  const auto a = evolve(init, k, 0.5, 0.0, {0.75}, rk);
  EvolveOptions ex;
  ex.integrator = Integrator::Expm;
  const auto b = evolve(init, k, 0.5, 0.05, {0.75}, ex);
  CHECK(rel_err(a.mass.back(), b.mass.back()) < 1e-8);
  CHECK(rel_err(a.norms[0].back(), b.norms[0].back()) < 1e-8);
  // mass never increases with an absorbing edge
  for (std::size_t i = 1; i < a.mass.size(); ++i) CHECK(a.mass[i] <= a.mass[i - 1] * (1 + 1e-14));
}

TEST_CASE("self-similar balance ratio") {
  const auto g = RadialGrid::log_spaced(2, 1e-2, 1e3, 256);
  const ModelParams p{2, 0.5, 0.75};
  const auto k = build_kernel(g, p, {KernelMode::SelfSimilar, Boundary::Absorbing});
  EvolveOptions eo;
  eo.integrator = Integrator::Expm;
  const auto tr = evolve(gaussian(g, p), k, 1.0, 0.25, {p.s, p.s + p.alpha - 1.0}, eo);
  const double K = mellin::k_constant_gamma(p);
  for (std::size_t i = 1; i < tr.times.size(); ++i)
    CHECK(std::abs(-tr.norm_rates[0][i] / tr.norms[1][i] / K - 1.0) < 0.03);
}

TEST_CASE("truncation is recorded, not thrown, and can be raised on demand") {
  const auto& k = small_kernel(KernelMode::Bracket, Boundary::Closed);
  // all mass near the top of the grid
  SpectrumState st{k.grid, std::vector<double>(k.grid.size(), 0.0), 0.0, k.params};
  st.values[k.grid.size() - 2] = 1.0;
  EvolveOptions eo;
  eo.integrator = Integrator::Expm;
  const auto tr = evolve(st, k, 0.1, 0.05, {0.5}, eo);
  REQUIRE(tr.truncated_at.has_value());
  CHECK_THROWS_AS(throw_if_truncated(tr), TruncationWarning);
}

TEST_CASE("kernel cache round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "kraichnan_cache_test";
  std::filesystem::remove_all(dir);
  const auto g = RadialGrid::log_spaced(2, 1e-1, 1e1, 24);
  const ModelParams p{2, 0.25, 0.5};
  KernelOptions o{KernelMode::Bracket, Boundary::Absorbing, 1e-9, dir.string()};
  const auto a = build_kernel(g, p, o);
  CHECK_FALSE(a.from_cache);
  const auto b = build_kernel(g, p, o);
  CHECK(b.from_cache);
  CHECK((a.exchange - b.exchange).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.loss - b.loss).cwiseAbs().maxCoeff() == 0.0);
  // s does not enter the kernel, alpha and mode do
  CHECK(cache_file_name(g, ModelParams{2, 0.25, 0.9}, o) == cache_file_name(g, p, o));
  CHECK(cache_file_name(g, ModelParams{2, 0.5, 0.5}, o) != cache_file_name(g, p, o));
  KernelOptions o2 = o;
  o2.mode = KernelMode::SelfSimilar;
  CHECK(cache_file_name(g, p, o2) != cache_file_name(g, p, o));
  // a corrupted file is rebuilt rather than trusted
  for (auto& e : std::filesystem::directory_iterator(dir)) std::filesystem::resize_file(e.path(), 40);
  CHECK_FALSE(build_kernel(g, p, o).from_cache);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dissipation integral needs the self-similar kernel") {
  const auto& k = small_kernel(KernelMode::Bracket, Boundary::Absorbing);
  CHECK_THROWS_AS(anomalous_dissipation_integral(gaussian(k.grid, k.params), k, 10.0), DomainError);
}

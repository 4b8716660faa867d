#include "kraichnan/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "kraichnan/errors.hpp"
#include "kraichnan/flux.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/numerics.hpp"
#include "kraichnan/quad.hpp"
#include "kraichnan/specfun.hpp"

namespace kraichnan::spectral {

const char* to_string(KernelMode m) { return m == KernelMode::Bracket ? "bracket" : "selfsimilar"; }
const char* to_string(Boundary b) { return b == Boundary::Absorbing ? "absorbing" : "closed"; }
const char* to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "expm"; }

RadialGrid RadialGrid::log_spaced(int d, double rho_min, double rho_max, int n) {
  if (d < 1) throw DomainError("RadialGrid: d must be >= 1");
  if (!(rho_min > 0.0 && rho_max > rho_min && std::isfinite(rho_max)))
    throw DomainError("RadialGrid: need 0 < rho_min < rho_max");
  if (n < 2) throw DomainError("RadialGrid: need at least 2 nodes");
  RadialGrid g;
  g.d = d;
  g.rho_min = rho_min;
  g.rho_max = rho_max;
  g.log_step = std::log(rho_max / rho_min) / n;
  const double area = specfun::sphere_area(d - 1);
  for (int i = 0; i < n; ++i) {
    const double r = rho_min * std::exp((i + 0.5) * g.log_step);
    g.nodes.push_back(r);
    g.weights.push_back(area * std::pow(r, d) * g.log_step);
  }
  return g;
}

std::uint64_t RadialGrid::hash() const {
  std::uint64_t h = fnv1a(&d, sizeof d);
  h = fnv1a(nodes, h);
  return fnv1a(weights, h);
}

double pair_kernel(double ri, double rj, int d, double alpha, KernelMode mode, double rel_tol) {
  const double e = 0.5 * (d + 2.0 * alpha);
  const double rr = ri * ri * rj * rj;
  auto g = [&](double th) {
    const double sh = std::sin(0.5 * th);
    const double q = (ri - rj) * (ri - rj) + 4.0 * ri * rj * sh * sh;
    const double damp = mode == KernelMode::Bracket ? std::pow(1.0 + q, -e) : std::pow(q, -e);
    return rr * std::pow(std::sin(th), d) / q * damp;
  };
  quad::Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = 1e-300;
  o.singular_points = {0.0};
  // the peak near theta = 0 has width |ri - rj| / sqrt(ri rj)
  const double width = std::abs(ri - rj) / std::sqrt(ri * rj);
  if (width > 0.0 && 8.0 * width < 0.5 * std::numbers::pi) o.singular_points.push_back(8.0 * width);
  const double v = quad::integrate(g, 0.0, std::numbers::pi, o).value;
  return std::pow(2.0 * std::numbers::pi, -0.5 * d) * specfun::sphere_area(d - 2) * v;
}

namespace {

constexpr char kMagic[8] = {'K', 'R', 'N', 'K', 'E', 'R', 'N', '1'};

struct CacheHeader {
  char magic[8];
  std::int32_t d;
  std::int32_t n;
  double alpha;
  double rel_tol;
  std::int32_t mode;
  std::int32_t boundary;
  std::uint64_t grid_hash;
};

std::filesystem::path cache_path(const RadialGrid& grid, const ModelParams& p, const KernelOptions& opt) {
  return std::filesystem::path(opt.cache_dir) / cache_file_name(grid, p, opt);
}

bool load_cache(KernelMatrix& k, const KernelOptions& opt) {
  const auto path = cache_path(k.grid, k.params, opt);
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  CacheHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  const std::size_t n = k.grid.size();
  // exact match on every key field, and on the node values themselves
  if (!in || std::memcmp(h.magic, kMagic, 8) != 0 || h.d != k.grid.d || h.n != std::int32_t(n) ||
      h.alpha != k.params.alpha || h.rel_tol != opt.rel_tol || h.mode != int(k.mode) ||
      h.boundary != int(k.boundary) || h.grid_hash != k.grid.hash())
    return false;
  std::vector<double> nodes(n);
  in.read(reinterpret_cast<char*>(nodes.data()), std::streamsize(n * sizeof(double)));
  if (!in || nodes != k.grid.nodes) return false;
  k.exchange.resize(n, n);
  k.absorption.resize(n);
  in.read(reinterpret_cast<char*>(k.exchange.data()), std::streamsize(n * n * sizeof(double)));
  in.read(reinterpret_cast<char*>(k.absorption.data()), std::streamsize(n * sizeof(double)));
  return bool(in);
}

void save_cache(const KernelMatrix& k, const KernelOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.cache_dir, ec);
  const auto path = cache_path(k.grid, k.params, opt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;  // a cache that cannot be written is not an error
    CacheHeader h{};
    std::memcpy(h.magic, kMagic, 8);
    h.d = k.grid.d;
    h.n = std::int32_t(k.grid.size());
    h.alpha = k.params.alpha;
    h.rel_tol = opt.rel_tol;
    h.mode = int(k.mode);
    h.boundary = int(k.boundary);
    h.grid_hash = k.grid.hash();
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(k.grid.nodes.data()),
              std::streamsize(k.grid.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(k.exchange.data()),
              std::streamsize(k.exchange.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(k.absorption.data()),
              std::streamsize(k.absorption.size() * sizeof(double)));
    if (!out) return;
  }
  std::filesystem::rename(tmp, path, ec);
}

// loss rate through the outer edge for a node at radius ri
double edge_loss(double ri, double edge, int d, double alpha, KernelMode mode, double rel_tol) {
  auto g = [&](double r) { return pair_kernel(ri, r, d, alpha, mode, 0.1 * rel_tol) * std::pow(r, d - 1); };
  quad::Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = 1e-300;
  o.singular_points = {edge};
  o.decay_exponent = 1.0 + 2.0 * alpha;
  return quad::integrate(g, edge, INFINITY, o).value;
}

void finish(KernelMatrix& k) {
  const auto n = Eigen::Index(k.grid.size());
  k.rates.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) k.rates.row(i) = k.exchange.row(i) / k.grid.weights[i];
  k.loss.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    NeumaierSum acc;
    for (Eigen::Index j = 0; j < n; ++j) acc.add(k.rates(i, j));
    k.loss[i] = acc.value() + k.absorption[i];
  }
}

}  // namespace

std::string cache_file_name(const RadialGrid& grid, const ModelParams& p, const KernelOptions& opt) {
  char buf[160];
  std::uint64_t abits;
  std::memcpy(&abits, &p.alpha, sizeof abits);
  std::snprintf(buf, sizeof buf, "kernel_d%d_a%016llx_%s_%s_n%zu_%016llx.bin", grid.d,
                static_cast<unsigned long long>(abits), to_string(opt.mode), to_string(opt.boundary),
                grid.size(), static_cast<unsigned long long>(grid.hash()));
  return buf;
}

KernelMatrix build_kernel(const RadialGrid& grid, const ModelParams& p, const KernelOptions& opt) {
  p.validate();
  if (grid.d != p.d) throw DomainError("build_kernel: grid dimension differs from params.d");
  KernelMatrix k;
  k.grid = grid;
  k.params = p;
  k.mode = opt.mode;
  k.boundary = opt.boundary;
  if (!opt.cache_dir.empty() && load_cache(k, opt)) {
    k.from_cache = true;
    finish(k);
    return k;
  }
  const auto n = Eigen::Index(grid.size());
  const int d = p.d;
  const double a = p.alpha;
  const double area = specfun::sphere_area(d - 1);
  k.exchange = Eigen::MatrixXd::Zero(n, n);
  if (opt.mode == KernelMode::SelfSimilar) {
    // homogeneous kernel on a geometric grid: A(ri, rj) = ri^{2-d-2a} A(1, rj/ri)
    std::vector<double> unit(std::size_t(n), 0.0);
    for (Eigen::Index m = 1; m < n; ++m)
      unit[m] = pair_kernel(1.0, std::exp(m * grid.log_step), d, a, opt.mode, opt.rel_tol);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale = std::pow(grid.nodes[i], 2.0 - d - 2.0 * a);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = scale * unit[j - i] * grid.weights[i] * grid.weights[j] / area;
        k.exchange(i, j) = v;
        k.exchange(j, i) = v;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double A = pair_kernel(grid.nodes[i], grid.nodes[j], d, a, opt.mode, opt.rel_tol);
        const double v = A * grid.weights[i] * grid.weights[j] / area;
        k.exchange(i, j) = v;
        k.exchange(j, i) = v;
      }
  }
  k.absorption = Eigen::VectorXd::Zero(n);
  if (opt.boundary == Boundary::Absorbing)
    for (Eigen::Index i = 0; i < n; ++i)
      k.absorption[i] = edge_loss(grid.nodes[i], grid.outer_edge(), d, a, opt.mode, 100.0 * opt.rel_tol);
  if (!opt.cache_dir.empty()) save_cache(k, opt);
  finish(k);
  return k;
}

Eigen::VectorXd rate(const KernelMatrix& k, const Eigen::VectorXd& a) {
  const auto n = a.size();
  if (n != k.rates.rows()) throw DomainError("rate: state and kernel sizes differ");
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // difference form: a constant state gives exactly zero before absorption
    const double ai = a[i];
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += k.rates(i, j) * (a[j] - ai);
    out[i] = acc - k.absorption[i] * ai;
  }
  return out;
}

namespace {

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

void check_positive(const Eigen::VectorXd& a, double t) {
  const double top = a.maxCoeff();
  const double low = a.minCoeff();
  if (!std::isfinite(top) || !std::isfinite(low)) throw NegativityError("spectrum became non-finite");
  if (low < -1e-12 * std::max(top, 0.0))
    throw NegativityError("spectrum negative beyond tolerance at t = " + std::to_string(t) + " (" +
                          std::to_string(low) + ")");
}

Eigen::VectorXd rk4(const KernelMatrix& k, const Eigen::VectorXd& a, const Eigen::VectorXd& k1, double dt) {
  const Eigen::VectorXd k2 = rate(k, a + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = rate(k, a + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = rate(k, a + dt * k3);
  return a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double weighted_sum(const RadialGrid& g, const Eigen::VectorXd& v, double s_query) {
  NeumaierSum acc;
  for (std::size_t i = 0; i < g.size(); ++i)
    acc.add(std::pow(g.nodes[i], -2.0 * s_query) * v[Eigen::Index(i)] * g.weights[i]);
  return acc.value();
}

}  // namespace

SpectrumState step(const SpectrumState& state, const KernelMatrix& kernel, double dt) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be > 0");
  if (dt * kernel.max_rate() > 0.5)
    throw StabilityViolation("step: dt * max rate = " + std::to_string(dt * kernel.max_rate()) +
                             " exceeds 0.5");
  const Eigen::VectorXd a = as_vector(state.values);
  const Eigen::VectorXd next = rk4(kernel, a, rate(kernel, a), dt);
  check_positive(next, state.time + dt);
  SpectrumState out = state;
  out.values.assign(next.data(), next.data() + next.size());
  out.time = state.time + dt;
  return out;
}

double sobolev_norm(const RadialGrid& grid, const Eigen::VectorXd& a, double s_query) {
  return weighted_sum(grid, a, s_query);
}

double sobolev_norm(const SpectrumState& state, double s_query) {
  return weighted_sum(state.grid, as_vector(state.values), s_query);
}

Eigen::VectorXd flux_grid(const KernelMatrix& k, double s_query) {
  const auto n = k.rates.rows();
  Eigen::VectorXd psi(n), F(n);
  for (Eigen::Index i = 0; i < n; ++i) psi[i] = std::pow(k.grid.nodes[i], -2.0 * s_query);
  for (Eigen::Index i = 0; i < n; ++i) {
    NeumaierSum acc;
    for (Eigen::Index j = 0; j < n; ++j) acc.add(k.rates(i, j) * (psi[j] - psi[i]));
    F[i] = acc.value() - k.absorption[i] * psi[i];
  }
  return F;
}

double Balance::relative_gap() const {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / scale;
}

namespace {

Balance balance_from(const KernelMatrix& k, const Eigen::VectorXd& a, const Eigen::VectorXd& da,
                     const Eigen::VectorXd& F, double s_query) {
  Balance b;
  b.lhs = weighted_sum(k.grid, da, s_query);
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc.add(F[i] * a[i] * k.grid.weights[i]);
  b.rhs = acc.value();
  return b;
}

double continuum_rhs(const KernelMatrix& k, const Eigen::VectorXd& a, double s_query) {
  ModelParams q = k.params;
  q.s = s_query;
  q.m = 0.0;
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    const double r = k.grid.nodes[i];
    const double F = k.mode == KernelMode::Bracket ? flux::flux_F(r, q) : flux::flux_F_selfsimilar(r, q);
    acc.add(F * a[i] * k.grid.weights[i]);
  }
  return acc.value();
}

}  // namespace

Balance balance_check(const SpectrumState& state, const KernelMatrix& kernel, double s_query,
                      bool with_continuum) {
  const Eigen::VectorXd a = as_vector(state.values);
  Balance b = balance_from(kernel, a, rate(kernel, a), flux_grid(kernel, s_query), s_query);
  if (with_continuum && s_query > 0.0 && s_query < 0.5 * kernel.params.d)
    b.rhs_continuum = continuum_rhs(kernel, a, s_query);
  return b;
}

Propagator::Propagator(const KernelMatrix& k) {
  const auto n = k.exchange.rows();
  sqrt_w_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) sqrt_w_[i] = std::sqrt(k.grid.weights[i]);
  // W^{1/2} L W^{-1/2} is symmetric because w_i kappa_ij is
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = k.exchange(i, j) / (sqrt_w_[i] * sqrt_w_[j]);
  for (Eigen::Index i = 0; i < n; ++i) M(i, i) = -k.loss[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw DomainError("Propagator: eigendecomposition failed");
  vec_ = es.eigenvectors();
  eig_ = es.eigenvalues();
}

Eigen::VectorXd Propagator::apply(const Eigen::VectorXd& a0, double t) const {
  Eigen::VectorXd b = vec_.transpose() * sqrt_w_.cwiseProduct(a0);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] *= std::exp(eig_[i] * t);
  return (vec_ * b).cwiseQuotient(sqrt_w_);
}

double Propagator::integrated_mass(const Eigen::VectorXd& a0) const {
  if (!(eig_.maxCoeff() < 0.0))
    throw DomainError("integrated_mass: operator is not strictly dissipative (closed boundary?)");
  Eigen::VectorXd b = vec_.transpose() * sqrt_w_.cwiseProduct(a0);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] /= -eig_[i];
  const Eigen::VectorXd x = vec_ * b;  // W^{1/2} (-L)^{-1} a0
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc.add(sqrt_w_[i] * x[i]);
  return acc.value();
}

double boundary_fraction(const RadialGrid& grid, const Eigen::VectorXd& a, double share) {
  const std::size_t n = grid.size();
  const std::size_t edge = std::max<std::size_t>(1, std::size_t(std::ceil(share * double(n))));
  NeumaierSum total, outer;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = a[Eigen::Index(i)] * grid.weights[i];
    total.add(v);
    if (i >= n - edge) outer.add(v);
  }
  const double t = total.value();
  return t > 0.0 ? outer.value() / t : 0.0;
}

Trajectory evolve(const SpectrumState& initial, const KernelMatrix& kernel, double t_final, double dt,
                  const std::vector<double>& trackers, const EvolveOptions& opt) {
  if (initial.values.size() != kernel.grid.size()) throw DomainError("evolve: state and kernel sizes differ");
  if (!(t_final >= 0.0)) throw DomainError("evolve: t_final must be >= 0");
  if (opt.record_every < 1) throw DomainError("evolve: record_every must be >= 1");
  if (!(dt > 0.0)) dt = 0.25 / kernel.max_rate();
  const long nsteps = t_final > 0.0 ? std::max(1L, long(std::ceil(t_final / dt - 1e-9))) : 0;
  if (nsteps > 0) dt = t_final / double(nsteps);
  if (opt.integrator == Integrator::RK4 && dt * kernel.max_rate() > 0.5)
    throw StabilityViolation("evolve: dt * max rate = " + std::to_string(dt * kernel.max_rate()) +
                             " exceeds 0.5");

  std::optional<Propagator> prop;
  if (opt.integrator == Integrator::Expm) prop.emplace(kernel);

  std::vector<Eigen::VectorXd> fluxes;
  for (double s : opt.balance_s) fluxes.push_back(flux_grid(kernel, s));

  Trajectory tr;
  tr.trackers = trackers;
  tr.norms.assign(trackers.size(), {});
  tr.norm_rates.assign(trackers.size(), {});
  const Eigen::VectorXd a0 = as_vector(initial.values);
  Eigen::VectorXd a = a0;
  check_positive(a, initial.time);

  for (long n = 0;; ++n) {
    const double t = initial.time + double(n) * dt;
    const Eigen::VectorXd da = rate(kernel, a);
    for (std::size_t q = 0; q < fluxes.size(); ++q)
      tr.max_balance_gap =
          std::max(tr.max_balance_gap, balance_from(kernel, a, da, fluxes[q], opt.balance_s[q]).relative_gap());
    const double frac = boundary_fraction(kernel.grid, a, opt.boundary_share);
    const bool last = n == nsteps || frac > opt.boundary_limit;
    if (n % opt.record_every == 0 || last) {
      tr.times.push_back(t);
      tr.mass.push_back(weighted_sum(kernel.grid, a, 0.0));
      tr.boundary_fraction.push_back(frac);
      for (std::size_t q = 0; q < trackers.size(); ++q) {
        tr.norms[q].push_back(weighted_sum(kernel.grid, a, trackers[q]));
        tr.norm_rates[q].push_back(weighted_sum(kernel.grid, da, trackers[q]));
      }
    }
    if (frac > opt.boundary_limit) {
      tr.truncated_at = t;
      tr.truncation_fraction = frac;
    }
    if (last) break;
    a = opt.integrator == Integrator::RK4 ? rk4(kernel, a, da, dt) : prop->apply(a0, double(n + 1) * dt);
    check_positive(a, t + dt);
    tr.steps = n + 1;
  }
  tr.final_state = initial;
  tr.final_state.values.assign(a.data(), a.data() + a.size());
  tr.final_state.time = tr.times.empty() ? initial.time : tr.times.back();
  return tr;
}

void throw_if_truncated(const Trajectory& tr) {
  if (tr.truncated_at)
    throw TruncationWarning("evolve: boundary cells hold " + std::to_string(tr.truncation_fraction) +
                                " of the mass at t = " + std::to_string(*tr.truncated_at),
                            *tr.truncated_at, tr.truncation_fraction);
}

DissipationResult anomalous_dissipation_integral(const SpectrumState& initial, const KernelMatrix& kernel,
                                                 double t_max, int samples) {
  if (kernel.mode != KernelMode::SelfSimilar)
    throw DomainError("anomalous_dissipation_integral: needs the self-similar kernel");
  if (!(t_max > 0.0) || samples < 10) throw DomainError("anomalous_dissipation_integral: bad horizon");
  DissipationResult res;
  ModelParams q = kernel.params;
  q.s = 1.0 - q.alpha;  // balance at s = 1 - alpha turns the L2 mass into the time derivative
  if (!(q.s < 0.5 * q.d)) throw DomainError("anomalous_dissipation_integral: 1 - alpha must be < d/2");
  res.k_used = mellin::k_constant_gamma(q);
  const Eigen::VectorXd a0 = as_vector(initial.values);
  const double m0 = weighted_sum(kernel.grid, a0, 0.0);
  if (m0 == 0.0) return res;
  res.reference = weighted_sum(kernel.grid, a0, 1.0 - q.alpha) / res.k_used;

  const Propagator prop(kernel);
  res.times.push_back(0.0);
  res.mass.push_back(m0);
  // geometric sampling: early decay is fast, the late tail slow
  const double t_first = t_max * 1e-7;
  for (int k = 0; k < samples; ++k) {
    const double t = t_first * std::pow(t_max / t_first, double(k) / (samples - 1));
    const Eigen::VectorXd a = prop.apply(a0, t);
    check_positive(a, t);
    res.times.push_back(t);
    res.mass.push_back(weighted_sum(kernel.grid, a, 0.0));
    if (!res.truncated_at && boundary_fraction(kernel.grid, a) > 0.01) res.truncated_at = t;
  }
  NeumaierSum acc;
  for (std::size_t k = 1; k < res.times.size(); ++k)
    acc.add(0.5 * (res.mass[k] + res.mass[k - 1]) * (res.times[k] - res.times[k - 1]));
  res.integral = acc.value();
  // power-law tail from a log-log fit over the last tenth of the samples
  const std::size_t n = res.times.size();
  const std::size_t first = n - std::max<std::size_t>(5, n / 10);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t k = first; k < n; ++k) {
    if (!(res.mass[k] > 0.0)) continue;
    const double x = std::log(res.times[k]), y = std::log(res.mass[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
  }
  if (cnt >= 3) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    if (slope < -1.0) res.tail = res.mass.back() * res.times.back() / (-slope - 1.0);
  }
  res.integral += res.tail;
  if (kernel.boundary == Boundary::Absorbing) res.resolvent = prop.integrated_mass(a0);
  return res;
}

}  // namespace kraichnan::spectral

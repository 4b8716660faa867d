#include "kraichnan/mc_spde.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <string>

#include "kraichnan/errors.hpp"

namespace kraichnan::mc {

void LatticeConfig::validate() const {
  if (d != 2) throw DomainError("lattice: only d = 2 is supported");
  if (n_max < 4) throw DomainError("lattice: n_max must be >= 4");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(dt >= 0.0)) throw DomainError("lattice: dt must be > 0");
  if (n_samples < 1) throw DomainError("lattice: n_samples must be >= 1");
  if (!(nu >= 0.0)) throw DomainError("nu must be >= 0");
}

Lattice::Lattice(const LatticeConfig& cfg) : n_(cfg.n_max) {
  cfg.validate();
  const double e = 0.5 * cfg.d + cfg.alpha;
  for (int kx = 0; kx <= n_; ++kx)
    for (int ky = -n_; ky <= n_; ++ky) {
      if (kx == 0 && ky <= 0) continue;  // half lattice: kx > 0, or kx = 0 and ky > 0
      const double k2 = double(kx) * kx + double(ky) * ky;
      const double kn = std::sqrt(k2);
      noise_.push_back({kx, ky, std::pow(1.0 + k2, -0.5 * e), -ky / kn, kx / kn});
    }
  corrector_.assign(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double x = kx_of(i), y = ky_of(i);
    double c = 0.0;
    for (const auto& m : noise_) {
      const double p = m.ex * x + m.ey * y;
      c += m.sigma * m.sigma * p * p;
    }
    corrector_[i] = c;
  }
}

double Lattice::max_corrector() const {
  double m = 0.0;
  for (double c : corrector_) m = std::max(m, c);
  return m;
}

void Lattice::corrector_matrix(double& xx, double& xy, double& yy) const {
  xx = xy = yy = 0.0;
  for (const auto& m : noise_) {
    const double s2 = m.sigma * m.sigma;
    xx += s2 * m.ex * m.ex;
    xy += s2 * m.ex * m.ey;
    yy += s2 * m.ey * m.ey;
  }
}

std::vector<double> Lattice::master_rate(const std::vector<double>& b, double nu) const {
  std::vector<double> out(size(), 0.0);
  auto at = [&](int x, int y) { return contains(x, y) ? b[index(x, y)] : 0.0; };
  for (std::size_t i = 0; i < size(); ++i) {
    const int x = kx_of(i), y = ky_of(i);
    if (x == 0 && y == 0) continue;
    double acc = 0.0;
    for (const auto& m : noise_) {
      const double p = m.ex * x + m.ey * y;
      const double w = m.sigma * m.sigma * p * p;
      acc += w * (0.5 * (at(x - m.kx, y - m.ky) + at(x + m.kx, y + m.ky)) - b[i]);
    }
    out[i] = acc - 2.0 * nu * (double(x) * x + double(y) * y) * b[i];
  }
  return out;
}

double reality_defect(const Lattice& lat, const FieldSample& f) {
  double worst = 0.0;
  const int n = lat.n_max();
  for (int x = -n; x <= n; ++x)
    for (int y = -n; y <= n; ++y)
      worst = std::max(worst, std::abs(f.amplitudes[lat.index(-x, -y)] - std::conj(f.amplitudes[lat.index(x, y)])));
  return worst;
}

namespace {

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double unit_open(std::uint64_t h) { return (double(h >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

void gaussian_pair(const NoiseKey& key, std::uint64_t mode, double& g1, double& g2) {
  std::uint64_t h = splitmix(key.seed);
  h = splitmix(h ^ key.sample);
  h = splitmix(h ^ (key.step * 0xD1B54A32D192ED03ULL));
  h = splitmix(h ^ (mode * 0x8CB92BA72F3D8DD7ULL));
  const double u1 = unit_open(h), u2 = unit_open(splitmix(h));
  const double r = std::sqrt(-2.0 * std::log(u1));
  g1 = r * std::cos(2.0 * std::numbers::pi * u2);
  g2 = r * std::sin(2.0 * std::numbers::pi * u2);
}

// Products are formed on a P x P physical grid with P > 3 n_max, so the part of the
// convolution that lands back on the square is alias-free.
struct Stepper::Impl {
  int n, P, H;
  double* rx;
  double* ux;
  double* uy;
  double* work;
  fftw_complex* cin;
  fftw_complex* cout;
  fftw_plan c2r, r2c;
  std::vector<double> mxx, mxy, myy;  // physical-space noise covariance pieces

  explicit Impl(int n_max) : n(n_max) {
    P = 8;
    while (P <= 3 * n) P *= 2;
    H = P / 2 + 1;
    const std::size_t R = std::size_t(P) * P, C = std::size_t(P) * H;
    rx = fftw_alloc_real(R);
    ux = fftw_alloc_real(R);
    uy = fftw_alloc_real(R);
    work = fftw_alloc_real(R);
    cin = fftw_alloc_complex(C);
    cout = fftw_alloc_complex(C);
    c2r = fftw_plan_dft_c2r_2d(P, P, cin, rx, FFTW_ESTIMATE);
    r2c = fftw_plan_dft_r2c_2d(P, P, work, cout, FFTW_ESTIMATE);
  }
  ~Impl() {
    fftw_destroy_plan(c2r);
    fftw_destroy_plan(r2c);
    fftw_free(rx);
    fftw_free(ux);
    fftw_free(uy);
    fftw_free(work);
    fftw_free(cin);
    fftw_free(cout);
  }
  std::size_t slot(int kx, int ky) const { return std::size_t((kx % P + P) % P) * H + std::size_t(ky); }
  void clear_in() { std::fill_n(reinterpret_cast<double*>(cin), 2 * std::size_t(P) * H, 0.0); }
  void put(int kx, int ky, cplx v) {
    cin[slot(kx, ky)][0] = v.real();
    cin[slot(kx, ky)][1] = v.imag();
  }
  cplx got(int kx, int ky) const { return {cout[slot(kx, ky)][0], cout[slot(kx, ky)][1]}; }
  // Hermitian lattice array to the physical grid
  void to_physical(const Lattice& lat, const std::vector<cplx>& a, double* dst) {
    clear_in();
    for (int x = -n; x <= n; ++x)
      for (int y = 0; y <= n; ++y) put(x, y, a[lat.index(x, y)]);
    fftw_execute_dft_c2r(c2r, cin, dst);
  }
  void to_physical_real(const Lattice& lat, const std::vector<double>& a, double* dst) {
    clear_in();
    for (int x = -n; x <= n; ++x)
      for (int y = 0; y <= n; ++y) put(x, y, a[lat.index(x, y)]);
    fftw_execute_dft_c2r(c2r, cin, dst);
  }
};

Stepper::Stepper(const Lattice& lat, double dt, double nu) : impl_(new Impl(lat.n_max())), lat_(lat), dt_(dt), nu_(nu) {
  if (!(dt > 0.0)) throw DomainError("Stepper: dt must be > 0");
  Impl& m = *impl_;
  const std::size_t R = std::size_t(m.P) * m.P;
  // M_ab(k) = sigma^2 e_a e_b on the whole square (even in k)
  for (int comp = 0; comp < 3; ++comp) {
    std::vector<cplx> coef(lat.size(), 0.0);
    for (const auto& q : lat.noise()) {
      const double s2 = q.sigma * q.sigma;
      const double v = comp == 0 ? s2 * q.ex * q.ex : comp == 1 ? s2 * q.ex * q.ey : s2 * q.ey * q.ey;
      coef[lat.index(q.kx, q.ky)] = v;
      coef[lat.index(-q.kx, -q.ky)] = v;
    }
    m.to_physical(lat, coef, m.work);
    auto& dst = comp == 0 ? m.mxx : comp == 1 ? m.mxy : m.myy;
    dst.assign(m.work, m.work + R);
  }
}

Stepper::~Stepper() { delete impl_; }

void Stepper::step(FieldSample& f, const NoiseKey& key) {
  Impl& m = *impl_;
  const int n = m.n, P = m.P;
  const std::size_t R = std::size_t(P) * P;
  const double norm = 1.0 / (double(P) * P);
  m.to_physical(lat_, f.amplitudes, m.rx);

  // velocity increments: U(k) = sigma e dbeta / sqrt2 on the half lattice, U(-k) = conj
  const double sdt = std::sqrt(dt_);
  for (int comp = 0; comp < 2; ++comp) {
    m.clear_in();
    const auto& modes = lat_.noise();
    for (std::size_t q = 0; q < modes.size(); ++q) {
      const auto& md = modes[q];
      double g1, g2;
      gaussian_pair(key, q, g1, g2);
      const cplx dbeta = sdt * cplx(g1, g2) * std::numbers::sqrt2 * 0.5;
      const cplx U = (comp == 0 ? md.ex : md.ey) * md.sigma * dbeta * std::numbers::sqrt2 * 0.5;
      if (md.ky > 0) {
        m.put(md.kx, md.ky, U);
      } else if (md.ky < 0) {
        m.put(-md.kx, -md.ky, std::conj(U));
      } else {
        m.put(md.kx, 0, U);
        m.put(-md.kx, 0, std::conj(U));
      }
    }
    fftw_execute_dft_c2r(m.c2r, m.cin, comp == 0 ? m.ux : m.uy);
  }

  std::vector<cplx> gx(lat_.size()), gy(lat_.size());
  for (int comp = 0; comp < 2; ++comp) {
    const double* u = comp == 0 ? m.ux : m.uy;
    for (std::size_t i = 0; i < R; ++i) m.work[i] = u[i] * m.rx[i];
    fftw_execute_dft_r2c(m.r2c, m.work, m.cout);
    auto& g = comp == 0 ? gx : gy;
    for (int x = -n; x <= n; ++x)
      for (int y = 0; y <= n; ++y) g[lat_.index(x, y)] = m.got(x, y) * norm;
  }

  bool ok = true;
  for (int x = -n; x <= n; ++x)
    for (int y = 0; y <= n; ++y) {
      if (y == 0 && x <= 0) continue;
      const std::size_t i = lat_.index(x, y);
      const double k2 = double(x) * x + double(y) * y;
      const double damp = 1.0 - 0.5 * lat_.corrector(i) * dt_ - nu_ * k2 * dt_;
      const cplx inc = cplx(0.0, -1.0) * (double(x) * gx[i] + double(y) * gy[i]);
      const cplx v = f.amplitudes[i] * damp + inc;
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) ok = false;
      f.amplitudes[i] = v;
      f.amplitudes[lat_.index(-x, -y)] = std::conj(v);
    }
  f.amplitudes[lat_.index(0, 0)] = 0.0;
  if (!ok) f.valid = false;
}

void Stepper::rate(const std::vector<double>& b, std::vector<double>& out) {
  Impl& m = *impl_;
  const int n = m.n, P = m.P;
  const std::size_t R = std::size_t(P) * P;
  const double norm = 1.0 / (double(P) * P);
  m.to_physical_real(lat_, b, m.rx);
  out.assign(lat_.size(), 0.0);
  std::vector<double> cxx(lat_.size()), cxy(lat_.size()), cyy(lat_.size());
  for (int comp = 0; comp < 3; ++comp) {
    const auto& mm = comp == 0 ? m.mxx : comp == 1 ? m.mxy : m.myy;
    for (std::size_t i = 0; i < R; ++i) m.work[i] = mm[i] * m.rx[i];
    fftw_execute_dft_r2c(m.r2c, m.work, m.cout);
    auto& c = comp == 0 ? cxx : comp == 1 ? cxy : cyy;
    for (int x = -n; x <= n; ++x)
      for (int y = 0; y <= n; ++y) c[lat_.index(x, y)] = m.got(x, y).real() * norm;
  }
  for (int x = -n; x <= n; ++x)
    for (int y = 0; y <= n; ++y) {
      if (y == 0 && x == 0) continue;
      const std::size_t i = lat_.index(x, y);
      const double k2 = double(x) * x + double(y) * y;
      const double gain = 0.5 * (double(x) * x * cxx[i] + 2.0 * double(x) * y * cxy[i] + double(y) * y * cyy[i]);
      const double v = gain - lat_.corrector(i) * b[i] - 2.0 * nu_ * k2 * b[i];
      out[i] = v;
      out[lat_.index(-x, -y)] = v;
    }
}

FieldSample gaussian_blob(const Lattice& lat, double width, double amplitude) {
  FieldSample f;
  f.amplitudes.assign(lat.size(), 0.0);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double x = lat.kx_of(i), y = lat.ky_of(i);
    if (x == 0 && y == 0) continue;
    f.amplitudes[i] = amplitude * std::exp(-(x * x + y * y) / (2.0 * width * width));
  }
  return f;
}

namespace {

// Welford accumulator; samples are added in index order so results are reproducible
struct Running {
  long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double dl = x - mean;
    mean += dl / double(n);
    m2 += dl * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / double(n - 1) / double(n)) : 0.0; }
};

}  // namespace

EnsembleResult run_ensemble(const LatticeConfig& cfg, const FieldSample& initial, double t_final,
                            const std::vector<double>& record_times) {
  cfg.validate();
  const Lattice lat(cfg);
  if (initial.amplitudes.size() != lat.size()) throw DomainError("run_ensemble: initial field has the wrong size");
  if (!(t_final > 0.0)) throw DomainError("run_ensemble: t_final must be > 0");
  double dt = cfg.dt > 0.0 ? cfg.dt : lat.default_dt();
  const long steps = std::max(1L, long(std::ceil(t_final / dt - 1e-9)));
  dt = t_final / double(steps);

  std::vector<long> rec;
  for (double t : record_times) {
    if (!(t >= 0.0 && t <= t_final * (1.0 + 1e-12)))
      throw DomainError("run_ensemble: record times must lie in [0, t_final]");
    const long k = std::lround(t / dt);
    if (!rec.empty() && k <= rec.back()) throw DomainError("run_ensemble: record times must increase");
    rec.push_back(k);
  }
  const std::size_t nr = rec.size(), N = lat.size();

  std::vector<std::vector<Running>> spec(nr, std::vector<Running>(N));
  std::vector<std::vector<Running>> dstat(nr > 0 ? nr - 1 : 0, std::vector<Running>(N));
  std::vector<std::vector<Running>> dstat_raw(dstat.size(), std::vector<Running>(N));
  std::vector<Running> l2(nr);
  std::vector<Running> l2_gap(nr > 0 ? nr - 1 : 0), l2_change(l2_gap.size()), l2_pred(l2_gap.size()), l2_bias(l2_gap.size());

  Stepper stepper(lat, dt, cfg.nu);
  EnsembleResult res;
  res.dt = dt;
  res.steps = steps;

  // per-sample buffers, committed only if the sample stays finite
  std::vector<std::vector<double>> b_rec(nr, std::vector<double>(N));
  std::vector<std::vector<double>> rate_sum(dstat.size(), std::vector<double>(N));
  std::vector<std::vector<double>> bias_sum(dstat.size(), std::vector<double>(N));
  std::vector<double> pred(dstat.size()), bias(dstat.size());
  std::vector<double> b(N), lb(N);

  for (long smp = 0; smp < cfg.n_samples; ++smp) {
    FieldSample f = initial;
    f.valid = true;
    for (auto& r : rate_sum) std::fill(r.begin(), r.end(), 0.0);
    for (auto& r : bias_sum) std::fill(r.begin(), r.end(), 0.0);
    std::fill(pred.begin(), pred.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
    std::size_t next = 0;
    for (long k = 0; k <= steps && f.valid; ++k) {
      for (std::size_t i = 0; i < N; ++i) b[i] = std::norm(f.amplitudes[i]);
      while (next < nr && rec[next] == k) b_rec[next++] = b;
      if (k == steps || next >= nr) break;
      if (next > 0) {
        // window next-1 -> next: accumulate the lattice rate along the path and the exact
        // expected one-step change of the total L2
        const std::size_t w = next - 1;
        stepper.rate(b, lb);
        double tot = 0.0, em = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          rate_sum[w][i] += lb[i];
          tot += lb[i];
          const double k2 = double(lat.kx_of(i)) * lat.kx_of(i) + double(lat.ky_of(i)) * lat.ky_of(i);
          const double g = 0.5 * lat.corrector(i) * dt + cfg.nu * k2 * dt;
          em += g * g * b[i];
          // exact one-step Euler-Maruyama excess of E|rho(k)|^2 over dt * rate
          bias_sum[w][i] += g * g * b[i] / dt;
        }
        pred[w] += dt * tot + em;
        bias[w] += em;
      }
      stepper.step(f, {cfg.seed, std::uint64_t(smp), std::uint64_t(k)});
    }
    if (!f.valid) {
      ++res.invalid_samples;
      continue;
    }
    for (std::size_t r = 0; r < nr; ++r) {
      double tot = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        spec[r][i].add(b_rec[r][i]);
        tot += b_rec[r][i];
      }
      l2[r].add(tot);
    }
    for (std::size_t w = 0; w < dstat.size(); ++w) {
      const double span = double(rec[w + 1] - rec[w]) * dt;
      const double cnt = double(rec[w + 1] - rec[w]);
      double change = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double fd = (b_rec[w + 1][i] - b_rec[w][i]) / span;
        dstat[w][i].add(fd - (rate_sum[w][i] + bias_sum[w][i]) / cnt);
        dstat_raw[w][i].add(fd - rate_sum[w][i] / cnt);
        change += b_rec[w + 1][i] - b_rec[w][i];
      }
      l2_change[w].add(change);
      l2_pred[w].add(pred[w]);
      l2_bias[w].add(bias[w]);
      l2_gap[w].add(change - pred[w]);
    }
  }
  if (double(res.invalid_samples) > 0.01 * double(cfg.n_samples))
    throw InvalidSampleRate("run_ensemble: " + std::to_string(res.invalid_samples) + " of " +
                            std::to_string(cfg.n_samples) + " samples overflowed");

  for (std::size_t r = 0; r < nr; ++r) {
    EnsembleStats st;
    st.time = double(rec[r]) * dt;
    st.n_samples = l2[r].n;
    for (std::size_t i = 0; i < N; ++i) {
      st.mean_sq.push_back(spec[r][i].mean);
      st.std_err.push_back(spec[r][i].se());
    }
    res.stats.push_back(std::move(st));
    res.l2_mean.push_back(l2[r].mean);
    res.l2_se.push_back(l2[r].se());
  }
  for (std::size_t w = 0; w < dstat.size(); ++w) {
    RateCheck rc;
    rc.t0 = double(rec[w]) * dt;
    rc.t1 = double(rec[w + 1]) * dt;
    long pass = 0, pass_raw = 0;
    for (std::size_t i = 0; i < N; ++i) {
      rc.mean.push_back(dstat[w][i].mean);
      rc.std_err.push_back(dstat[w][i].se());
      if (lat.kx_of(i) == 0 && lat.ky_of(i) == 0) continue;
      ++rc.modes;
      if (std::abs(dstat[w][i].mean) <= 3.0 * dstat[w][i].se()) ++pass;
      if (std::abs(dstat_raw[w][i].mean) <= 3.0 * dstat_raw[w][i].se()) ++pass_raw;
    }
    rc.pass_fraction = rc.modes ? double(pass) / double(rc.modes) : 0.0;
    rc.pass_fraction_raw = rc.modes ? double(pass_raw) / double(rc.modes) : 0.0;
    res.rate_checks.push_back(std::move(rc));

    L2Check lc;
    lc.t0 = double(rec[w]) * dt;
    lc.t1 = double(rec[w + 1]) * dt;
    lc.change = l2_change[w].mean;
    lc.change_se = l2_change[w].se();
    lc.predicted = l2_pred[w].mean;
    lc.predicted_se = l2_pred[w].se();
    lc.bias = l2_bias[w].mean;
    lc.within_3se = std::abs(l2_gap[w].mean) <= 3.0 * l2_gap[w].se();
    res.l2_checks.push_back(lc);
  }
  return res;
}

Estimate sobolev_estimate(const Lattice& lat, const EnsembleStats& stats, double s_query) {
  double v = 0.0, var = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double x = lat.kx_of(i), y = lat.ky_of(i);
    if (x == 0 && y == 0) continue;
    const double wgt = std::pow(x * x + y * y, -s_query);
    v += wgt * stats.mean_sq[i];
    var += wgt * wgt * stats.std_err[i] * stats.std_err[i];
  }
  return {v, std::sqrt(var)};
}

std::vector<double> lattice_flux(const Lattice& lat, double s_query) {
  std::vector<double> psi(lat.size(), 0.0);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const double x = lat.kx_of(i), y = lat.ky_of(i);
    if (x != 0 || y != 0) psi[i] = std::pow(x * x + y * y, -s_query);
  }
  std::vector<double> out(lat.size(), 0.0);
  auto at = [&](int x, int y) { return lat.contains(x, y) ? psi[lat.index(x, y)] : 0.0; };
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const int x = lat.kx_of(i), y = lat.ky_of(i);
    if (x == 0 && y == 0) continue;
    double acc = 0.0;
    for (const auto& m : lat.noise()) {
      const double p = m.ex * x + m.ey * y;
      const double w = m.sigma * m.sigma * p * p;
      if (w == 0.0) continue;
      acc += 0.5 * w * (at(x - m.kx, y - m.ky) + at(x + m.kx, y + m.ky) - 2.0 * psi[i]);
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace kraichnan::mc

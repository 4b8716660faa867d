#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace kraichnan::mc {

using cplx = std::complex<double>;

struct LatticeConfig {
  int d = 2;  // only 2 is supported
  int n_max = 16;
  double alpha = 0.5;
  double dt = 0.0;  // 0: 0.1 / max corrector
  long n_samples = 1000;
  std::uint64_t seed = 0;
  double nu = 0.0;
  void validate() const;
};

struct NoiseMode {
  int kx, ky;
  double sigma;   // (1 + |k|^2)^{-(d/2 + alpha)/2}
  double ex, ey;  // unit polarization, perpendicular to k
};

// field modes |k|_inf <= n_max, k != 0, stored on the full (2n+1)^2 square
class Lattice {
 public:
  explicit Lattice(const LatticeConfig& cfg);
  int n_max() const { return n_; }
  int side() const { return 2 * n_ + 1; }
  std::size_t size() const { return std::size_t(side()) * std::size_t(side()); }
  std::size_t index(int kx, int ky) const { return std::size_t(kx + n_) * side() + std::size_t(ky + n_); }
  int kx_of(std::size_t i) const { return int(i / side()) - n_; }
  int ky_of(std::size_t i) const { return int(i % side()) - n_; }
  bool contains(int kx, int ky) const { return std::abs(kx) <= n_ && std::abs(ky) <= n_; }

  const std::vector<NoiseMode>& noise() const { return noise_; }  // half lattice
  // exact Ito-Stratonovich corrector sum_k sigma_k^2 (e_k . xi)^2
  double corrector(std::size_t i) const { return corrector_[i]; }
  double max_corrector() const;
  double default_dt() const { return 0.1 / max_corrector(); }

  // lattice master-equation rate for a spectrum b (absorbing outside the square)
  std::vector<double> master_rate(const std::vector<double>& b, double nu = 0.0) const;

  // 2x2 matrix sum over the half lattice of sigma^2 e e^T
  void corrector_matrix(double& xx, double& xy, double& yy) const;

 private:
  int n_;
  std::vector<NoiseMode> noise_;
  std::vector<double> corrector_;
};

struct FieldSample {
  std::vector<cplx> amplitudes;  // full square, index via Lattice::index
  bool valid = true;
};

// max |rho(-k) - conj rho(k)|
double reality_defect(const Lattice& lat, const FieldSample& f);

struct EnsembleStats {
  double time = 0.0;
  long n_samples = 0;
  std::vector<double> mean_sq, std_err;  // per lattice index; k = 0 holds zero
};

// counter-based normals keyed by (seed, sample, step, mode)
struct NoiseKey {
  std::uint64_t seed, sample, step;
};
void gaussian_pair(const NoiseKey& key, std::uint64_t mode, double& g1, double& g2);

// Euler-Maruyama stepper owning FFT buffers; one per worker
class Stepper {
 public:
  Stepper(const Lattice& lat, double dt, double nu = 0.0);
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  void step(FieldSample& f, const NoiseKey& key);
  // master_rate through the FFT path (same values, faster)
  void rate(const std::vector<double>& b, std::vector<double>& out);
  double dt() const { return dt_; }

 private:
  struct Impl;
  Impl* impl_;
  const Lattice& lat_;
  double dt_, nu_;
};

struct RateCheck {
  double t0 = 0.0, t1 = 0.0;
  // per mode: finite-difference rate minus the lattice rate plus the exact one-step EM excess
  std::vector<double> mean, std_err;
  double pass_fraction = 0.0;      // share of modes within 3 standard errors
  double pass_fraction_raw = 0.0;  // same, against the bare lattice rate (O(dt) bias left in)
  long modes = 0;
};

struct L2Check {
  double t0 = 0.0, t1 = 0.0;
  double change = 0.0, change_se = 0.0;      // mean total L2 change over the window
  double predicted = 0.0, predicted_se = 0.0;  // EM bias plus boundary outflow, same samples
  double bias = 0.0;                           // EM part alone
  bool within_3se = false;
};

struct EnsembleResult {
  std::vector<EnsembleStats> stats;  // one per record time
  std::vector<RateCheck> rate_checks;
  std::vector<L2Check> l2_checks;
  std::vector<double> l2_mean, l2_se;  // total lattice L2 per record time
  long invalid_samples = 0;
  double dt = 0.0;
  long steps = 0;
};

FieldSample gaussian_blob(const Lattice& lat, double width, double amplitude = 1.0);

EnsembleResult run_ensemble(const LatticeConfig& cfg, const FieldSample& initial, double t_final,
                            const std::vector<double>& record_times);

struct Estimate {
  double value, std_err;
};
// sum_{k != 0} |k|^{-2s} mean(k), errors combined as if modes were independent
Estimate sobolev_estimate(const Lattice& lat, const EnsembleStats& stats, double s_query);

// deterministic lattice flux function sum_k w_k(xi)/2 (|xi-k|^{-2s} - |xi|^{-2s}), absorbing outside
std::vector<double> lattice_flux(const Lattice& lat, double s_query);

}  // namespace kraichnan::mc

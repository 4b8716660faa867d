#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kraichnan/params.hpp"

namespace kraichnan::spectral {

// Bracket uses <xi - eta>^{-d-2a}; SelfSimilar the bare power |xi - eta|^{-d-2a}
enum class KernelMode { Bracket, SelfSimilar };
enum class Boundary { Absorbing, Closed };
enum class Integrator { RK4, Expm };

const char* to_string(KernelMode m);
const char* to_string(Boundary b);
const char* to_string(Integrator i);

struct RadialGrid {
  int d = 2;
  double rho_min = 0.0, rho_max = 0.0, log_step = 0.0;
  std::vector<double> nodes;    // log-midpoints
  std::vector<double> weights;  // omega_{d-1} rho^d h

  static RadialGrid log_spaced(int d, double rho_min, double rho_max, int n);
  std::size_t size() const { return nodes.size(); }
  std::uint64_t hash() const;
  // outer edge of the last cell
  double outer_edge() const { return rho_max; }
};

struct SpectrumState {
  RadialGrid grid;
  std::vector<double> values;
  double time = 0.0;
  ModelParams params;
};

struct KernelOptions {
  KernelMode mode = KernelMode::Bracket;
  Boundary boundary = Boundary::Absorbing;
  double rel_tol = 1e-9;
  std::string cache_dir;  // empty: no cache
};

struct KernelMatrix {
  RadialGrid grid;
  ModelParams params;
  KernelMode mode = KernelMode::Bracket;
  Boundary boundary = Boundary::Absorbing;
  Eigen::MatrixXd exchange;    // w_i kappa_ij, symmetric, zero diagonal
  Eigen::MatrixXd rates;       // kappa_ij
  Eigen::VectorXd absorption;  // loss through the outer edge (zero when closed)
  Eigen::VectorXd loss;        // sum_j kappa_ij + absorption_i
  bool from_cache = false;

  double kappa(std::size_t i, std::size_t j) const { return rates(i, j); }
  double max_rate() const { return loss.maxCoeff(); }
};

// continuum angular average at radii (ri, rj), before the radial measure
double pair_kernel(double ri, double rj, int d, double alpha, KernelMode mode, double rel_tol = 1e-10);

KernelMatrix build_kernel(const RadialGrid& grid, const ModelParams& p, const KernelOptions& opt = {});
std::string cache_file_name(const RadialGrid& grid, const ModelParams& p, const KernelOptions& opt);

// da/dt for the master equation in gain-loss form
Eigen::VectorXd rate(const KernelMatrix& k, const Eigen::VectorXd& a);

SpectrumState step(const SpectrumState& state, const KernelMatrix& kernel, double dt);

double sobolev_norm(const SpectrumState& state, double s_query);
double sobolev_norm(const RadialGrid& grid, const Eigen::VectorXd& a, double s_query);

// the kernel's own row discretization of F for the weight rho^{-2s}
Eigen::VectorXd flux_grid(const KernelMatrix& k, double s_query);

struct Balance {
  double lhs = 0.0, rhs = 0.0;
  std::optional<double> rhs_continuum;
  double relative_gap() const;
};

Balance balance_check(const SpectrumState& state, const KernelMatrix& kernel, double s_query,
                      bool with_continuum = true);

// exact solution operator exp(t L) through the symmetrized eigendecomposition
class Propagator {
 public:
  explicit Propagator(const KernelMatrix& k);
  Eigen::VectorXd apply(const Eigen::VectorXd& a0, double t) const;
  // int_0^inf sum_i w_i a_i(t) dt; requires a strictly dissipative operator
  double integrated_mass(const Eigen::VectorXd& a0) const;
  double slowest_rate() const { return -eig_.maxCoeff(); }

 private:
  Eigen::MatrixXd vec_;
  Eigen::VectorXd eig_, sqrt_w_;
};

struct EvolveOptions {
  Integrator integrator = Integrator::RK4;
  std::vector<double> balance_s;  // s values whose balance identity is checked at each record
  int record_every = 1;
  double boundary_limit = 0.01;
  double boundary_share = 0.05;
  bool continuum_every = false;  // rhs_continuum at every record (slow)
};

struct Trajectory {
  std::vector<double> trackers;
  std::vector<double> times, mass, boundary_fraction;
  std::vector<std::vector<double>> norms;        // [tracker][record]
  std::vector<std::vector<double>> norm_rates;   // d/dt of each tracker norm
  double max_balance_gap = 0.0;                  // over all steps and balance_s
  long steps = 0;
  std::optional<double> truncated_at;            // time the boundary limit was crossed
  double truncation_fraction = 0.0;
  SpectrumState final_state;
};

double boundary_fraction(const RadialGrid& grid, const Eigen::VectorXd& a, double share = 0.05);

// stops early (truncated_at set) instead of throwing, so the partial trajectory survives;
// callers that want the exception use throw_if_truncated
Trajectory evolve(const SpectrumState& initial, const KernelMatrix& kernel, double t_final, double dt,
                  const std::vector<double>& trackers, const EvolveOptions& opt = {});
void throw_if_truncated(const Trajectory& tr);

struct DissipationResult {
  double integral = 0.0;
  double reference = 0.0;
  double tail = 0.0;           // power-law extrapolation beyond t_max
  double resolvent = 0.0;      // the grid's exact value -1^T W L^{-1} a0
  double k_used = 0.0;
  std::optional<double> truncated_at;
  std::vector<double> times, mass;
};

DissipationResult anomalous_dissipation_integral(const SpectrumState& initial, const KernelMatrix& kernel,
                                                 double t_max, int samples = 400);

}  // namespace kraichnan::spectral

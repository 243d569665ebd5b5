#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nesslab/lattice.hpp"

namespace nesslab {

// --- Microscopic flux ----------------------------------------------------

/// Psi_k(i) = f(q_i - q_{i+1_k}) . (p_i + p_{i+1_k}) / 2 with f = -grad V.
/// Positive values correspond to energy moving toward decreasing i_k; see
/// heat_current for the reported sign convention.
double bond_flux(const Lattice& lat, const SystemState& state, int site, int direction);

/// Sum of Psi_1 over the bonds crossing plane j (0-based bond column).
double plane_flux(const Lattice& lat, const SystemState& state, int plane);

/// Physical heat current through plane j, positive toward increasing i_1:
/// J(j) = -plane_flux(j) / m.  Satisfies dh_i/dt + J(i) - J(i-1) = 0 on the
/// isolated bulk.
double heat_current(const Lattice& lat, const SystemState& state, int plane);

/// Average of heat_current over all bond planes.
double mean_heat_current(const Lattice& lat, const SystemState& state);

/// Max over interior snapshots of |dh_i/dt - sum_k (Psi_k(i) - Psi_k(i-1_k))/m|
/// with dh/dt by centered differences; snapshots must be spaced dt apart along
/// an isolated trajectory.  O(dt^2) by construction.
double continuity_residual(const Lattice& lat, const std::vector<SystemState>& trajectory,
                           int site, double dt);

// --- Kinetic temperature -------------------------------------------------

/// T(plane) = mean over samples, cross-section, and components of p^2/m.
Eigen::ArrayXd kinetic_temperature_profile(const Lattice& lat,
                                           const std::vector<SystemState>& samples);

// --- Entropy production --------------------------------------------------

/// sigma = Phi_L/T_L + Phi_R/T_R for heat rates into the reservoirs.
inline double entropy_production(double phi_left, double phi_right, double t_left,
                                 double t_right) {
  return phi_left / t_left + phi_right / t_right;
}

// --- Series statistics ---------------------------------------------------

struct BlockStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  int blocks = 0;
  // Standard error at half the block count (double-length blocks); a change
  // beyond 20% indicates correlation beyond the block length.
  double stderr_doubled = 0.0;
  bool correlation_flag = false;
};

/// Non-overlapping block means over the leading blocks*floor(n/blocks)
/// entries; requires n >= 2*blocks and blocks >= 2.
BlockStats block_stats(const std::vector<double>& values, int blocks);

struct ObservableSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
  double mean = 0.0;
  double stderr_ = 0.0;
  int blocks = 0;
  bool correlation_flag = false;

  void finalize(int block_count);
};

/// Fixed-block accumulator for vector-valued observables (profiles) where
/// storing raw samples would be wasteful.  The sample count must be known in
/// advance.
class BlockAccumulator {
 public:
  BlockAccumulator() = default;
  BlockAccumulator(int size, std::int64_t samples, int blocks);

  void add(const Eigen::ArrayXd& sample);
  Eigen::ArrayXd mean() const;
  Eigen::ArrayXd standard_error() const;
  int blocks_filled() const { return filled_; }

 private:
  std::int64_t block_len_ = 0;
  std::int64_t in_block_ = 0;
  int filled_ = 0;
  Eigen::ArrayXd block_sum_;
  Eigen::ArrayXd mean_sum_;
  Eigen::ArrayXd sq_sum_;
};

/// Pooled mean and standard error of independent estimates (equal weights).
void pool_estimates(const std::vector<double>& means, const std::vector<double>& errs,
                    double& mean_out, double& err_out);

}  // namespace nesslab

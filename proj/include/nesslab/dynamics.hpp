#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "nesslab/lattice.hpp"
#include "nesslab/observables.hpp"
#include "nesslab/thermostats.hpp"

namespace nesslab {

/// Runtime numerical failures (as opposed to rejected specifications).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BlowUpError : NumericsError {
  using NumericsError::NumericsError;
};

struct IntegratorSpec {
  double dt = 0.0;  // <= 0 selects the stiffness-based default
  std::string scheme = "strang";
  std::int64_t steps = 100000;
  std::int64_t burn_in = 10000;
  std::int64_t stride = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

/// dt = 0.05 / omega_eff with a thermal correction for quartic terms.
double default_time_step(const LatticeSpec& lattice, double temperature);

struct StepHeat {
  double left = 0.0;   // energy passed to the left reservoir this step
  double right = 0.0;
};

/// One-step integrator: symmetric kick-drift-kick on the Hamiltonian part,
/// then the reservoir sub-step (exact Ornstein-Uhlenbeck updates for the
/// stochastic variants, algebraic zeta updates otherwise).  Noise is
/// addressed by (step index, dof slot), so a trajectory is a pure function
/// of (initial state, seed).
class Stepper {
 public:
  Stepper(const Lattice& lattice, const ReservoirSpec& reservoir, const IntegratorSpec& integrator);

  /// Adjusts aux bookkeeping and, for the isokinetic variant, projects the
  /// thermostated momenta onto the constraint manifold.
  void prepare(SystemState& state) const;

  /// reuse_cached_force skips the entry force evaluation; valid only when q
  /// is untouched since this stepper's previous call on the same state.
  StepHeat step(SystemState& state, std::int64_t step_index, bool reuse_cached_force = false) const;

  const Lattice& lattice() const { return lat_; }
  const ReservoirSpec& reservoir() const { return res_; }
  const ReservoirSites& sites() const { return sites_; }
  double dt() const { return dt_; }

 private:
  void hamiltonian_step(SystemState& state, StepHeat& heat, bool reuse_cached_force) const;
  void reservoir_substep(SystemState& state, std::int64_t step_index, StepHeat& heat) const;

  const Lattice& lat_;
  ReservoirSpec res_;
  ReservoirSites sites_;
  double dt_ = 0.0;
  NoiseSource noise_;
  // Per-dof Ornstein-Uhlenbeck decay/kick coefficients (Langevin variant).
  Eigen::ArrayXd ou_decay_, ou_amp_;
  std::vector<int> left_dofs_, right_dofs_;
  double ext_decay_left_ = 1.0, ext_amp_left_ = 0.0;
  double ext_decay_right_ = 1.0, ext_amp_right_ = 0.0;
  double iso_target_left_ = 0.0, iso_target_right_ = 0.0;
  mutable Eigen::ArrayXd force_;
};

/// Throws BlowUpError when the state has gone non-finite.
void check_finite(const SystemState& state, std::int64_t step_index);

struct SimulationOptions {
  int blocks = 32;
  bool record_heat = true;
};

struct SimulationResult {
  ObservableSeries current;     // cross-section heat current, averaged over planes
  ObservableSeries heat_left;   // energy per unit time into the left reservoir
  ObservableSeries heat_right;
  ObservableSeries sigma;       // entropy production rate
  Eigen::ArrayXd profile;       // kinetic temperature per plane
  Eigen::ArrayXd profile_err;
  Eigen::ArrayXd plane_current;  // time-averaged current through each bond plane
  Eigen::ArrayXd plane_current_err;
  SystemState final_state;
  std::int64_t steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

/// Burn-in then sampling at the given stride; flux, reservoir heats, entropy
/// production, and the kinetic temperature profile are accumulated along the
/// way.
SimulationResult simulate(const Lattice& lattice, const ReservoirSpec& reservoir,
                          const IntegratorSpec& integrator, const SystemState& initial,
                          const SimulationOptions& options = {});

}  // namespace nesslab

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "nesslab/rng.hpp"

namespace nesslab {

/// Stochastic energy-exchange chain: site energies, nearest-neighbour
/// uniform redistribution at Poisson times, and boundary sites rethermalised
/// from exponential distributions.  Conduction here is normal, which makes
/// the model a reference point for the oscillator chains.
struct KmpSpec {
  int sites = 32;
  double t_left = 2.0;
  double t_right = 1.0;
  double gamma_exchange = 1.0;  // per-bond redistribution rate
  double gamma_boundary = 1.0;  // per-end rethermalisation rate (0 isolates the chain)

  void validate() const;
};

struct KmpState {
  Eigen::ArrayXd e;  // site energies, nonnegative
  double time = 0.0;
};

/// Site energies drawn exponentially with means interpolating the boundary
/// temperatures.
KmpState kmp_initial(const KmpSpec& spec, CounterRng& rng);

/// Uniform redistribution of the pair total: (a, b) <- (u s, (1-u) s).
inline void kmp_pair_update(double& a, double& b, double u) {
  const double s = a + b;
  a = u * s;
  b = s - a;
}

struct KmpEvent {
  double wait = 0.0;       // time the pre-event state persisted
  int bond = -1;           // redistributed bond, or -1 for a boundary event
  double transfer = 0.0;   // energy moved left to right across that bond
  double from_left = 0.0;  // energy injected by the left boundary
  double from_right = 0.0;
};

/// One event of the jump process: an exponential waiting time at the total
/// rate, then either a pair redistribution or a boundary resampling chosen
/// in proportion to the rates.
KmpEvent kmp_step(const KmpSpec& spec, KmpState& state, CounterRng& rng);

struct KmpOptions {
  std::int64_t events = 1000000;
  std::int64_t burn_in_events = 100000;
  int blocks = 32;
  std::uint64_t seed = 1;
};

struct KmpResult {
  Eigen::ArrayXd profile;  // time-weighted mean site energies
  Eigen::ArrayXd profile_err;
  double flux = 0.0;  // transfer rate through the middle bond
  double flux_err = 0.0;
  double kappa = 0.0;  // flux (N-1) / delta T
  double kappa_err = 0.0;
  // flux (N-1) / (<e_1> - <e_N>): the boundary rate leaves a contact jump in
  // the nominal kappa, so constancy in N holds for the bulk value.
  double kappa_bulk = 0.0;
  double kappa_bulk_err = 0.0;
  double heat_left = 0.0;  // mean boundary injection rates into the chain
  double heat_right = 0.0;
  double total_time = 0.0;
  std::int64_t events = 0;
};

/// Event loop with block statistics; profile entries are weighted by the
/// holding times between events.
KmpResult kmp_run(const KmpSpec& spec, const KmpOptions& options);

}  // namespace nesslab

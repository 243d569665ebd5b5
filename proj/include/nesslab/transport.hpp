#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesslab/dynamics.hpp"
#include "nesslab/harmonic_exact.hpp"

namespace nesslab {

// --- Conductivity versus system length -------------------------------------

struct ScanOptions {
  std::vector<int> lengths;    // at least three values of n1
  int replicas = 4;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool drop_smallest = false;  // keep the smallest length out of the exponent fit
  bool use_oracle = false;     // covariance solve instead of simulation (quadratic chains)
};

struct KappaPoint {
  int length = 0;
  double flux = 0.0;  // heat current per unit cross-section area
  double flux_err = 0.0;
  double kappa = 0.0;  // flux * length / delta T
  double kappa_err = 0.0;
  int replicas_used = 0;
  bool in_fit = true;
  std::string flag;
};

struct ExponentFit {
  double alpha = 0.0;      // slope of log kappa against log length
  double alpha_err = 0.0;  // jackknife over replicas; residual-based otherwise
  double log_prefactor = 0.0;
  int points = 0;
};

struct ConductivityScan {
  std::vector<KappaPoint> table;
  ExponentFit fit;
  double mean_t = 0.0;
  double delta_t = 0.0;
  bool oracle = false;
};

/// Finite-size conductivity for each requested length; lattice.n1 is
/// overridden per entry.  Replicas start from independent Gibbs draws at the
/// mean temperature.  A run whose per-plane time-averaged currents spread
/// beyond five standard errors is dropped as non-stationary and flagged.
ConductivityScan conductivity_scan(const LatticeSpec& lattice, const ReservoirSpec& reservoir,
                                   const IntegratorSpec& integrator, const ScanOptions& options);

// --- Green-Kubo conductivity from isolated equilibrium runs -----------------

struct GreenKuboOptions {
  double t_max = 50.0;        // upper limit of the correlation integral
  int replicas = 8;
  double plateau_tol = 0.05;  // relative drift of the integral over its trailing half
  bool truncated = false;     // subtract per-trajectory means (truncated correlations)
  int jobs = 1;
};

struct GreenKuboResult {
  double kappa = 0.0;  // (length / (area T^2)) * integral of the flux autocorrelation
  double kappa_err = 0.0;  // replica spread
  bool plateau = false;
  double t_max = 0.0;  // achieved value, a whole number of sampling windows
  double c0 = 0.0;     // autocorrelation at lag zero
  double c0_err = 0.0;
  double phi_variance = 0.0;  // stationary variance of the plane-averaged current
  double phi_variance_err = 0.0;
  std::vector<double> times;
  std::vector<double> correlation;  // replica-averaged current autocorrelation
  std::vector<double> kappa_of_t;   // running integral in conductivity units
  bool truncated = false;
  int replicas = 0;
};

/// Equilibrium Green-Kubo estimate on the isolated lattice.  Each replica is
/// a Gibbs draw at the given temperature, with the total momentum projected
/// out when it is conserved, evolved with no reservoirs attached; the
/// plane-averaged current autocorrelation is time-averaged along each
/// trajectory and integrated up to t_max.  integrator.seed keys the draws.
/// On a finite open lattice the integrated current is a bounded difference
/// of energy dipoles, so the running integral rises to an intermediate
/// plateau and eventually drains back toward zero; t_max should sit inside
/// the plateau window, and the plateau flag reports whether it does.
GreenKuboResult green_kubo(const LatticeSpec& lattice, double temperature,
                           const IntegratorSpec& integrator, const GreenKuboOptions& options);

// --- Linear response around equilibrium -------------------------------------

struct ResponsePoint {
  double delta_t = 0.0;
  double flux = 0.0;  // per unit cross-section area
  double flux_err = 0.0;
  bool in_fit = true;
};

struct LinearResponseOptions {
  std::vector<double> delta_ts;  // must span at least a factor of four in magnitude
  std::uint64_t seed = 1;
  double nonlinear_tol = 3.0;       // standardized-residual threshold
  double correlation_window = 0.0;  // equal-temperature integral window; 0 skips it
  int jobs = 1;
};

struct LinearResponseResult {
  std::vector<ResponsePoint> points;
  double slope = 0.0;  // weighted fit of flux against delta T through the origin
  double slope_err = 0.0;
  bool nonlinear = false;      // a residual broke tolerance; refit without the largest |delta T|
  bool odd_consistent = true;  // flux odd under delta T sign flip within three sigma
  bool has_equal_t_slope = false;
  double equal_t_slope = 0.0;  // (1/T^2) autocorrelation integral with baths attached at equal T
  double equal_t_slope_err = 0.0;
};

/// Boundary-driven runs at each delta T; the reservoir temperatures are set
/// to T +- delta T / 2 around the mean of the given spec.  Sign pairs in
/// delta_ts feed the odd-symmetry check.
LinearResponseResult linear_response_check(const LatticeSpec& lattice,
                                           const ReservoirSpec& reservoir,
                                           const IntegratorSpec& integrator,
                                           const LinearResponseOptions& options);

// --- Entropy production over finite windows ---------------------------------

struct LdfOptions {
  double segment_time = 50.0;    // rounded to a whole number of sampling windows
  int segments = 0;              // > 0 resizes integrator.steps to cover this many
  int bins = 40;                 // even, so the grid pairs under p -> -p
  std::int64_t min_count = 100;  // bins below this stay out of the slope fit
  bool normalize = false;        // p in units of the mean entropy production rate
};

struct LdfBin {
  double p = 0.0;  // segment-averaged entropy production rate (bin center)
  std::int64_t count = 0;
  double density = 0.0;  // histogram density; integrates to one over the grid
  double rate = 0.0;     // e(p) = -(1/t) log density, populated bins only
  bool in_fit = false;
};

struct LdfResult {
  std::vector<LdfBin> bins;
  double segment_time = 0.0;
  int segments = 0;
  double sigma_mean = 0.0;  // full-series estimate
  double sigma_mean_err = 0.0;
  double segment_mean = 0.0;  // mean over segment values
  double segment_mean_err = 0.0;
  double odd_slope = 0.0;  // fit of e(p) - e(-p) against p
  double odd_slope_err = 0.0;
  int odd_pairs = 0;
  bool odd_slope_defined = false;  // needs populated bins on both signs
  bool normalized = false;
};

/// Segment statistics of the entropy production rate in a driven steady
/// state: sigma averaged over non-overlapping windows of length
/// segment_time, histogrammed on a sign-symmetric grid.
LdfResult entropy_ldf(const LatticeSpec& lattice, const ReservoirSpec& reservoir,
                      const IntegratorSpec& integrator, const LdfOptions& options);

}  // namespace nesslab

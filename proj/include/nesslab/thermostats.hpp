#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "nesslab/lattice.hpp"

namespace nesslab {

enum class ReservoirKind { None, Langevin, Extended, NoseHoover, GaussianIso };

/// Boundary reservoir model attached to the two faces of the lattice.
/// Site sets default to the left/right faces when left empty.
struct ReservoirSpec {
  ReservoirKind kind = ReservoirKind::None;
  double t_left = 1.0, t_right = 1.0;
  double lambda_left = 1.0, lambda_right = 1.0;  // Langevin / Extended coupling
  double gamma_left = 1.0, gamma_right = 1.0;    // Extended relaxation
  double theta = 1.0;                            // Nose-Hoover response time
  // Kinetic degree-of-freedom count per side; <= 0 selects nu * |sites|.
  // g = 2 reproduces the single-oscillator normalization of the classic
  // Nose-Hoover equations.
  double g_left = 0.0, g_right = 0.0;
  std::vector<int> left_sites, right_sites;  // empty -> lattice faces

  static ReservoirSpec none() { return {}; }
  static ReservoirSpec langevin(double tl, double tr, double ll, double lr) {
    ReservoirSpec r;
    r.kind = ReservoirKind::Langevin;
    r.t_left = tl; r.t_right = tr; r.lambda_left = ll; r.lambda_right = lr;
    return r;
  }
  static ReservoirSpec extended(double tl, double tr, double ll, double lr, double gl, double gr) {
    ReservoirSpec r;
    r.kind = ReservoirKind::Extended;
    r.t_left = tl; r.t_right = tr; r.lambda_left = ll; r.lambda_right = lr;
    r.gamma_left = gl; r.gamma_right = gr;
    return r;
  }
  static ReservoirSpec nose_hoover(double tl, double tr, double theta) {
    ReservoirSpec r;
    r.kind = ReservoirKind::NoseHoover;
    r.t_left = tl; r.t_right = tr; r.theta = theta;
    return r;
  }
  static ReservoirSpec gaussian_iso(double tl, double tr) {
    ReservoirSpec r;
    r.kind = ReservoirKind::GaussianIso;
    r.t_left = tl; r.t_right = tr;
    return r;
  }

  bool stochastic() const { return kind == ReservoirKind::Langevin || kind == ReservoirKind::Extended; }
  bool has_aux() const { return kind == ReservoirKind::Extended || kind == ReservoirKind::NoseHoover; }

  void validate(const LatticeSpec& lattice) const;
};

/// Site sets with defaults resolved against a lattice.
struct ReservoirSites {
  std::vector<int> left, right;
  double g_left = 0, g_right = 0;  // resolved kinetic dof counts
};
ReservoirSites resolve_sites(const ReservoirSpec& res, const Lattice& lat);

struct SideValues {
  double left = 0.0;
  double right = 0.0;
};

// --- Langevin (Ornstein-Uhlenbeck) terms --------------------------------

struct LangevinTerms {
  Eigen::ArrayXd drift;       // -lambda p / m on thermostated dofs, else 0
  Eigen::ArrayXd noise_amp;   // sqrt(2 lambda T) on thermostated dofs, else 0
};
LangevinTerms langevin_terms(const ReservoirSpec& res, const Lattice& lat,
                             const SystemState& state);

// --- Extended-variable reservoir (one auxiliary force per end) ----------

struct ExtendedTerms {
  SideValues force;      // r_alpha, added to the force on the end site
  SideValues drift;      // dr/dt drift: -gamma (r - lambda^2 q_end)
  SideValues noise_amp;  // sqrt(2 gamma lambda^2 T)
};
ExtendedTerms extended_terms(const ReservoirSpec& res, const Lattice& lat,
                             const SystemState& state);

/// Energy whose Boltzmann factor is the r-marginal of the equilibrium state
/// when both baths sit at the same temperature. The auxiliary coupling softens
/// the ends, so H picks up -lambda^2 q_end^2 / 2 per coupled end; the chain
/// must be pinned strongly enough to remain confining.
double effective_energy(const Lattice& lat, const ReservoirSpec& res, const SystemState& state);

// --- Nose-Hoover --------------------------------------------------------

struct NoseHooverTerms {
  Eigen::ArrayXd drift;  // -zeta p / m on thermostated dofs
  SideValues zeta_dot;
};
NoseHooverTerms nose_hoover_terms(const ReservoirSpec& res, const Lattice& lat,
                                  const SystemState& state);

// --- Gaussian isokinetic -------------------------------------------------

/// Constraint multipliers zeta_alpha = sum p.F / sum p.p over each
/// thermostated set.  Throws if a set has zero kinetic energy.
SideValues gaussian_zeta(const ReservoirSpec& res, const Lattice& lat, const SystemState& state,
                         const Eigen::ArrayXd& force);

struct ConstraintSingular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Kinetic energy of a site set.
double set_kinetic_energy(const Lattice& lat, const SystemState& state, const std::vector<int>& sites);

}  // namespace nesslab

#pragma once

#include <Eigen/Dense>

#include "nesslab/lattice.hpp"
#include "nesslab/thermostats.hpp"

namespace nesslab {

/// Linear SDE dX = A X dt + B dW for a quadratic lattice with Langevin or
/// extended reservoirs.  Translation-invariant chains are assembled in
/// stretch-momentum coordinates (s_j = q_{j+1} - q_j, p), which removes the
/// neutral uniform-translation mode and leaves A Hurwitz; all other models
/// use the full (q, p [, r_L, r_R]) coordinates.
struct LinearSDEModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  LatticeSpec lattice;
  ReservoirSpec reservoir;
  bool reduced = false;
  int q_dim = 0;    // q block size (stretch count when reduced)
  int p_dim = 0;    // p block follows the q block
  int aux_dim = 0;  // trailing r_L, r_R block (extended variant)

  int p_offset() const { return q_dim; }
  int aux_offset() const { return q_dim + p_dim; }
  int dim() const { return q_dim + p_dim + aux_dim; }
};

LinearSDEModel build_linear_model(const LatticeSpec& lattice, const ReservoirSpec& reservoir);

/// Spectral abscissa test; fills max_real_part when given.
bool is_hurwitz(const Eigen::MatrixXd& a, double* max_real_part = nullptr);

/// Solves A C + C A^T + Q = 0 by complex Schur reduction and triangular
/// back-substitution.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

struct StationaryCovariance {
  Eigen::MatrixXd c;
  double residual = 0.0;  // ||A C + C A^T + B B^T||_F / ||B B^T||_F
};

/// Stationary covariance of the model; rejects non-Hurwitz drift and
/// certifies the Lyapunov residual.
StationaryCovariance stationary_covariance(const LinearSDEModel& model);

struct ExactObservables {
  double flux = 0.0;             // physical heat current, positive toward +i1
  Eigen::ArrayXd bond_fluxes;    // per-bond currents (all equal in steady state)
  Eigen::ArrayXd profile;        // kinetic temperature per site
  double kappa = 0.0;            // flux * L / dT (0 when dT = 0)
};

/// Stationary flux, kinetic temperature profile, and finite-size conductivity
/// of a 1d chain model, all linear functionals of the covariance.
ExactObservables exact_observables(const LinearSDEModel& model, const StationaryCovariance& cov);

struct SelfConsistentResult {
  Eigen::ArrayXd temperatures;
  double flux = 0.0;
  int iterations = 0;
};

/// Harmonic chain with a Langevin bath of strength lambda_bulk on every site;
/// interior bath temperatures are set so that no site exchanges net heat with
/// its bath, end temperatures stay at T_L and T_R.  The kinetic temperatures
/// are affine in the bath temperatures, so the fixed point is one dense solve
/// plus a few verification passes; iterations counts the refinement rounds.
SelfConsistentResult self_consistent_profile(const LatticeSpec& lattice, double t_left,
                                             double t_right, double tolerance,
                                             double lambda_bulk = 1.0, int max_iterations = 500);

}  // namespace nesslab

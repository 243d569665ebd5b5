#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nesslab/rng.hpp"

namespace nesslab {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

enum class PairKind { Harmonic, FpuBeta, Rotator };

/// Nearest-neighbour pair potential V(x), applied componentwise to the
/// relative displacement.  All shipped variants are even in x.
struct PairPotential {
  PairKind kind = PairKind::Harmonic;
  double k = 1.0;             // Harmonic: V = k x^2 / 2
  double k2 = 1.0, k4 = 1.0;  // FpuBeta: V = k2 x^2 + k4 x^4
  double j = 1.0;             // Rotator: V = j (1 - cos x)

  static PairPotential harmonic(double k) { return {PairKind::Harmonic, k, 0, 0, 0}; }
  static PairPotential fpu_beta(double k2, double k4) {
    return {PairKind::FpuBeta, 0, k2, k4, 0};
  }
  static PairPotential rotator(double j) { return {PairKind::Rotator, 0, 0, 0, j}; }

  /// Curvature at the origin, used for time-step heuristics.
  double stiffness() const {
    switch (kind) {
      case PairKind::Harmonic: return k;
      case PairKind::FpuBeta: return 2.0 * k2;
      case PairKind::Rotator: return j;
    }
    return 0;
  }

  bool quadratic() const { return kind == PairKind::Harmonic || (kind == PairKind::FpuBeta && k4 == 0.0); }
  /// Bounded potential: configuration space is effectively compact.
  bool compact() const { return kind == PairKind::Rotator; }

  void validate() const;
};

template <class S>
S pair_value(const PairPotential& v, S x) {
  switch (v.kind) {
    case PairKind::Harmonic: return S(0.5) * v.k * x * x;
    case PairKind::FpuBeta: return v.k2 * x * x + v.k4 * x * x * x * x;
    case PairKind::Rotator: return v.j * (S(1) - std::cos(x));
  }
  return S(0);
}

template <class S>
S pair_deriv(const PairPotential& v, S x) {
  switch (v.kind) {
    case PairKind::Harmonic: return v.k * x;
    case PairKind::FpuBeta: return S(2) * v.k2 * x + S(4) * v.k4 * x * x * x;
    case PairKind::Rotator: return v.j * std::sin(x);
  }
  return S(0);
}

enum class OnsiteKind { PinnedQuadratic, Quartic };

/// One-body pinning potential U(q), componentwise.
struct OnsitePotential {
  OnsiteKind kind = OnsiteKind::PinnedQuadratic;
  double omega2 = 1.0;        // PinnedQuadratic: U = omega2 q^2 / 2
  double a2 = 0.0, a4 = 1.0;  // Quartic: U = a2 q^2 + a4 q^4

  static OnsitePotential pinned(double omega2) { return {OnsiteKind::PinnedQuadratic, omega2, 0, 0}; }
  static OnsitePotential quartic(double a2, double a4) {
    return {OnsiteKind::Quartic, 0, a2, a4};
  }

  double stiffness() const {
    return kind == OnsiteKind::PinnedQuadratic ? omega2 : 2.0 * a2;
  }
  bool quadratic() const {
    return kind == OnsiteKind::PinnedQuadratic || (kind == OnsiteKind::Quartic && a4 == 0.0);
  }
  void validate() const;
};

template <class S>
S onsite_value(const OnsitePotential& u, S q) {
  return u.kind == OnsiteKind::PinnedQuadratic ? S(0.5) * u.omega2 * q * q
                                               : u.a2 * q * q + u.a4 * q * q * q * q;
}

template <class S>
S onsite_deriv(const OnsitePotential& u, S q) {
  return u.kind == OnsiteKind::PinnedQuadratic ? u.omega2 * q
                                               : S(2) * u.a2 * q + S(4) * u.a4 * q * q * q;
}

// ---------------------------------------------------------------------------
// Lattice geometry
// ---------------------------------------------------------------------------

enum class TransverseBc { Free, Periodic };
enum class EndBc { Free, Fixed, Periodic };

struct LatticeSpec {
  int dimension = 1;   // 1 or 2
  int n1 = 8;          // length L (sites along the transport direction)
  int n2 = 1;          // cross section A (d = 2 only)
  double mass = 1.0;
  int nu = 1;          // displacement components per site
  PairPotential pair;
  std::optional<OnsitePotential> onsite;
  TransverseBc transverse_bc = TransverseBc::Free;
  EndBc end_bc = EndBc::Free;

  int site_count() const { return n1 * n2; }
  int dof() const { return site_count() * nu; }
  int cross_section() const { return n2; }
  int site_index(int i1, int i2) const { return i2 * n1 + i1; }

  bool translation_invariant() const { return !onsite && end_bc != EndBc::Fixed; }
  bool compact_configuration() const { return pair.compact() && !onsite; }
  bool quadratic() const { return pair.quadratic() && (!onsite || onsite->quadratic()); }

  /// Harmonic-part frequency scale, for default time steps.
  double omega_max() const {
    const double on = onsite ? onsite->stiffness() : 0.0;
    return std::sqrt((4.0 * pair.stiffness() + on) / mass);
  }

  void validate() const;
};

/// Bond between site a and site b (b == kWall for a fixed-wall bond).
struct Bond {
  int a = 0;
  int b = 0;
  int direction = 0;  // 0 = longitudinal, 1 = transverse
  static constexpr int kWall = -1;
  bool wall() const { return b == kWall; }
};

// Compiled lattice: spec plus precomputed bond and incidence tables.
class Lattice {
 public:
  explicit Lattice(const LatticeSpec& spec);

  const LatticeSpec& spec() const { return spec_; }
  int site_count() const { return spec_.site_count(); }
  int dof() const { return spec_.dof(); }
  double mass() const { return spec_.mass; }
  int nu() const { return spec_.nu; }

  const std::vector<Bond>& bonds() const { return bonds_; }
  /// Bond indices incident to a site (wall bonds included).
  const std::vector<int>& incident_bonds(int site) const { return incident_[site]; }
  /// Longitudinal bonds whose left endpoint lies in plane i1 = j (0-based).
  const std::vector<int>& plane_bonds(int j) const { return plane_bonds_[j]; }
  int plane_count() const { return static_cast<int>(plane_bonds_.size()); }
  /// Sites on the i1 = j plane.
  std::vector<int> plane_sites(int j) const;
  std::vector<int> left_face() const { return face_sites(0); }
  std::vector<int> right_face() const { return face_sites(spec_.n1 - 1); }

 private:
  std::vector<int> face_sites(int i1) const;

  LatticeSpec spec_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> plane_bonds_;
};

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

/// Phase-space point plus whatever auxiliary variables the attached
/// reservoir carries (r_L/r_R or zeta_L/zeta_R).
struct SystemState {
  Eigen::ArrayXd q;  // site-major, nu components per site
  Eigen::ArrayXd p;
  double aux_left = 0.0;
  double aux_right = 0.0;
  bool has_aux = false;
  double time = 0.0;

  static SystemState zero(const Lattice& lat) {
    SystemState s;
    s.q = Eigen::ArrayXd::Zero(lat.dof());
    s.p = Eigen::ArrayXd::Zero(lat.dof());
    return s;
  }
};

void check_shape(const Lattice& lat, const SystemState& state);

// ---------------------------------------------------------------------------
// Energies and forces
// ---------------------------------------------------------------------------

double kinetic_energy(const Lattice& lat, const SystemState& state);
double potential_energy(const Lattice& lat, const Eigen::ArrayXd& q);
double total_energy(const Lattice& lat, const SystemState& state);

/// h(i) = p_i^2/2m + U(q_i) + half of every incident bond energy.
/// Wall bonds count in full so that the site sum reproduces total_energy
/// exactly.
double local_energy(const Lattice& lat, const SystemState& state, int site);

void forces(const Lattice& lat, const Eigen::ArrayXd& q, Eigen::ArrayXd& f);
Eigen::ArrayXd forces(const Lattice& lat, const Eigen::ArrayXd& q);

/// Stiffness matrix of the quadratic part, K = Hess V(0); exact for
/// quadratic specs.
Eigen::MatrixXd stiffness_matrix(const Lattice& lat);

// ---------------------------------------------------------------------------
// Equilibrium sampling
// ---------------------------------------------------------------------------

/// Effective curvature omega_eff^2 at temperature T; quartic terms
/// contribute V''(x_typ) with x_typ^2 ~ sqrt(T/k4).
double thermal_curvature(const LatticeSpec& spec, double temperature);

struct GibbsOptions {
  // Overdamped pre-equilibration used when the potential is not quadratic:
  // dq = f dt + sqrt(2T) dW with dt = step_factor / omega_max^2.
  double step_factor = 0.02;
  int burn_in_steps = 20000;
};

/// Draw from exp(-H/T): momenta exactly Gaussian; positions exactly Gaussian
/// for quadratic specs with positive-definite stiffness, otherwise by
/// overdamped Langevin equilibration started from q = 0.
SystemState sample_gibbs(const Lattice& lat, double temperature, CounterRng& rng,
                         const GibbsOptions& opt = {});

}  // namespace nesslab

#include "nesslab/lattice.hpp"

#include <Eigen/Eigenvalues>

namespace nesslab {

void PairPotential::validate() const {
  switch (kind) {
    case PairKind::Harmonic:
      if (k <= 0) throw SpecError("pair_potential.k must be positive");
      break;
    case PairKind::FpuBeta:
      if (k2 < 0 || k4 < 0 || (k2 == 0 && k4 == 0))
        throw SpecError("pair_potential.k2/k4 must be nonnegative and not both zero");
      break;
    case PairKind::Rotator:
      if (j <= 0) throw SpecError("pair_potential.j must be positive");
      break;
  }
}

void OnsitePotential::validate() const {
  switch (kind) {
    case OnsiteKind::PinnedQuadratic:
      if (omega2 <= 0) throw SpecError("onsite_potential.omega2 must be positive");
      break;
    case OnsiteKind::Quartic:
      if (a2 < 0 || a4 < 0 || (a2 == 0 && a4 == 0))
        throw SpecError("onsite_potential.a2/a4 must be nonnegative and not both zero");
      break;
  }
}

void LatticeSpec::validate() const {
  if (dimension != 1 && dimension != 2) throw SpecError("lattice.dimension must be 1 or 2");
  if (n1 < 1 || n2 < 1) throw SpecError("lattice sides must be >= 1");
  if (dimension == 1 && n2 != 1) throw SpecError("lattice.n2 must be 1 when dimension = 1");
  if (mass <= 0) throw SpecError("lattice.mass must be positive");
  if (nu < 1 || nu > 3) throw SpecError("lattice.nu must be in 1..3");
  pair.validate();
  if (onsite) onsite->validate();
}

Lattice::Lattice(const LatticeSpec& spec) : spec_(spec) {
  spec_.validate();
  const int n1 = spec_.n1, n2 = spec_.n2;

  // Longitudinal bonds, one per gap; periodic adds the wrap, fixed adds a
  // clamped phantom at each end.
  for (int i2 = 0; i2 < n2; ++i2) {
    for (int i1 = 0; i1 + 1 < n1; ++i1)
      bonds_.push_back({spec_.site_index(i1, i2), spec_.site_index(i1 + 1, i2), 0});
    if (spec_.end_bc == EndBc::Periodic && n1 >= 3)
      bonds_.push_back({spec_.site_index(n1 - 1, i2), spec_.site_index(0, i2), 0});
    if (spec_.end_bc == EndBc::Fixed) {
      bonds_.push_back({spec_.site_index(0, i2), Bond::kWall, 0});
      bonds_.push_back({spec_.site_index(n1 - 1, i2), Bond::kWall, 0});
    }
  }
  if (spec_.dimension == 2) {
    for (int i1 = 0; i1 < n1; ++i1) {
      for (int i2 = 0; i2 + 1 < n2; ++i2)
        bonds_.push_back({spec_.site_index(i1, i2), spec_.site_index(i1, i2 + 1), 1});
      if (spec_.transverse_bc == TransverseBc::Periodic && n2 >= 3)
        bonds_.push_back({spec_.site_index(i1, n2 - 1), spec_.site_index(i1, 0), 1});
    }
  }

  incident_.resize(spec_.site_count());
  for (int b = 0; b < static_cast<int>(bonds_.size()); ++b) {
    incident_[bonds_[b].a].push_back(b);
    if (!bonds_[b].wall()) incident_[bonds_[b].b].push_back(b);
  }

  // Planes carrying longitudinal flux: one per bond column, indexed by the
  // left endpoint's i1.
  plane_bonds_.resize(std::max(0, n1 - 1 + (spec_.end_bc == EndBc::Periodic && n1 >= 3 ? 1 : 0)));
  for (int b = 0; b < static_cast<int>(bonds_.size()); ++b) {
    const Bond& bond = bonds_[b];
    if (bond.direction != 0 || bond.wall()) continue;
    const int i1 = bond.a % n1;
    plane_bonds_[i1].push_back(b);
  }
}

std::vector<int> Lattice::face_sites(int i1) const {
  std::vector<int> out;
  out.reserve(spec_.n2);
  for (int i2 = 0; i2 < spec_.n2; ++i2) out.push_back(spec_.site_index(i1, i2));
  return out;
}

std::vector<int> Lattice::plane_sites(int j) const {
  if (j < 0 || j >= spec_.n1) throw SpecError("plane index out of range");
  return face_sites(j);
}

void check_shape(const Lattice& lat, const SystemState& state) {
  if (state.q.size() != lat.dof() || state.p.size() != lat.dof())
    throw SpecError("state arrays do not match lattice dof count");
}

double kinetic_energy(const Lattice& lat, const SystemState& state) {
  return state.p.square().sum() / (2.0 * lat.mass());
}

double potential_energy(const Lattice& lat, const Eigen::ArrayXd& q) {
  const LatticeSpec& spec = lat.spec();
  const int nu = spec.nu;
  double e = 0.0;
  for (const Bond& b : lat.bonds()) {
    for (int c = 0; c < nu; ++c) {
      const double x = b.wall() ? q[b.a * nu + c] : q[b.a * nu + c] - q[b.b * nu + c];
      e += pair_value(spec.pair, x);
    }
  }
  if (spec.onsite) {
    for (Eigen::Index i = 0; i < q.size(); ++i) e += onsite_value(*spec.onsite, q[i]);
  }
  return e;
}

double total_energy(const Lattice& lat, const SystemState& state) {
  check_shape(lat, state);
  return kinetic_energy(lat, state) + potential_energy(lat, state.q);
}

double local_energy(const Lattice& lat, const SystemState& state, int site) {
  check_shape(lat, state);
  if (site < 0 || site >= lat.site_count()) throw SpecError("site out of range");
  const LatticeSpec& spec = lat.spec();
  const int nu = spec.nu;
  double e = 0.0;
  for (int c = 0; c < nu; ++c) {
    const double pc = state.p[site * nu + c];
    e += pc * pc / (2.0 * spec.mass);
    if (spec.onsite) e += onsite_value(*spec.onsite, state.q[site * nu + c]);
  }
  for (int bi : lat.incident_bonds(site)) {
    const Bond& b = lat.bonds()[bi];
    const double w = b.wall() ? 1.0 : 0.5;
    for (int c = 0; c < nu; ++c) {
      const double x =
          b.wall() ? state.q[b.a * nu + c] : state.q[b.a * nu + c] - state.q[b.b * nu + c];
      e += w * pair_value(spec.pair, x);
    }
  }
  return e;
}

void forces(const Lattice& lat, const Eigen::ArrayXd& q, Eigen::ArrayXd& f) {
  const LatticeSpec& spec = lat.spec();
  const int nu = spec.nu;
  if (q.size() != lat.dof()) throw SpecError("q does not match lattice dof count");
  f.resize(q.size());
  f.setZero();
  for (const Bond& b : lat.bonds()) {
    for (int c = 0; c < nu; ++c) {
      if (b.wall()) {
        f[b.a * nu + c] -= pair_deriv(spec.pair, q[b.a * nu + c]);
      } else {
        const double g = pair_deriv(spec.pair, q[b.a * nu + c] - q[b.b * nu + c]);
        f[b.a * nu + c] -= g;
        f[b.b * nu + c] += g;
      }
    }
  }
  if (spec.onsite) {
    for (Eigen::Index i = 0; i < q.size(); ++i) f[i] -= onsite_deriv(*spec.onsite, q[i]);
  }
}

Eigen::ArrayXd forces(const Lattice& lat, const Eigen::ArrayXd& q) {
  Eigen::ArrayXd f;
  forces(lat, q, f);
  return f;
}

Eigen::MatrixXd stiffness_matrix(const Lattice& lat) {
  const LatticeSpec& spec = lat.spec();
  const int nu = spec.nu;
  const double kp = spec.pair.stiffness();
  const double ko = spec.onsite ? spec.onsite->stiffness() : 0.0;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(lat.dof(), lat.dof());
  for (const Bond& b : lat.bonds()) {
    for (int c = 0; c < nu; ++c) {
      const int ia = b.a * nu + c;
      K(ia, ia) += kp;
      if (!b.wall()) {
        const int ib = b.b * nu + c;
        K(ib, ib) += kp;
        K(ia, ib) -= kp;
        K(ib, ia) -= kp;
      }
    }
  }
  K.diagonal().array() += ko;
  return K;
}

namespace {

// One bond stretch from the density ~ exp(-V(s)/T) by exact rejection.
double sample_stretch(const PairPotential& pair, double temperature, CounterRng& rng) {
  switch (pair.kind) {
    case PairKind::Harmonic:
      return std::sqrt(temperature / pair.k) * rng.gaussian();
    case PairKind::FpuBeta: {
      const double a = pair.k2 / temperature;
      const double b = pair.k4 / temperature;
      if (b == 0.0) return rng.gaussian() / std::sqrt(2.0 * a);
      // Gaussian proposal exp(-c s^2); the ratio exp(-b s^4 + (c - a) s^2)
      // is bounded, with the bound attained at s^2 = (c - a) / 2b.
      const double c = std::max(a, std::sqrt(b));
      const double shift = (c - a) * (c - a) / (4.0 * b);
      for (;;) {
        const double s = rng.gaussian() / std::sqrt(2.0 * c);
        const double s2 = s * s;
        const double log_acc = -b * s2 * s2 + (c - a) * s2 - shift;
        if (std::log(rng.uniform()) < log_acc) return s;
      }
    }
    case PairKind::Rotator: {
      const double beta_j = pair.j / temperature;
      for (;;) {
        const double s = (2.0 * rng.uniform() - 1.0) * M_PI;
        if (std::log(rng.uniform()) < beta_j * (std::cos(s) - 1.0)) return s;
      }
    }
  }
  return 0.0;
}

}  // namespace

double thermal_curvature(const LatticeSpec& spec, double temperature) {
  double pc = spec.pair.stiffness();
  if (spec.pair.kind == PairKind::FpuBeta)
    pc += 12.0 * std::sqrt(spec.pair.k4 * temperature);
  double oc = 0.0;
  if (spec.onsite) {
    oc = spec.onsite->stiffness();
    if (spec.onsite->kind == OnsiteKind::Quartic)
      oc += 12.0 * std::sqrt(spec.onsite->a4 * temperature);
  }
  return (4.0 * pc + oc) / spec.mass;
}

SystemState sample_gibbs(const Lattice& lat, double temperature, CounterRng& rng,
                         const GibbsOptions& opt) {
  if (temperature <= 0) throw SpecError("temperature must be positive");
  const LatticeSpec& spec = lat.spec();
  SystemState state = SystemState::zero(lat);

  const double sigma_p = std::sqrt(spec.mass * temperature);
  for (Eigen::Index i = 0; i < state.p.size(); ++i) state.p[i] = sigma_p * rng.gaussian();

  if (spec.quadratic()) {
    // Q ~ N(0, T K^{-1}) on the range of K; zero modes get zero amplitude.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stiffness_matrix(lat));
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double tol = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lat.dof());
    for (int i = 0; i < lat.dof(); ++i) {
      const double z = rng.gaussian();
      if (lam[i] > tol) x += es.eigenvectors().col(i) * (std::sqrt(temperature / lam[i]) * z);
    }
    state.q = x.array();
  } else if (spec.dimension == 1 && spec.end_bc == EndBc::Free && !spec.onsite) {
    // Free chain: the potential factorizes over bond stretches, so the
    // stretches are independent; the overall translation is gauged to q_1 = 0.
    const int nu = spec.nu;
    for (int i = 0; i + 1 < spec.n1; ++i)
      for (int c = 0; c < nu; ++c)
        state.q[(i + 1) * nu + c] =
            state.q[i * nu + c] + sample_stretch(spec.pair, temperature, rng);
  } else {
    const double w2 = thermal_curvature(spec, temperature);
    const double dt = opt.step_factor / std::max(w2, 1e-12);
    const double amp = std::sqrt(2.0 * temperature * dt);
    Eigen::ArrayXd f(lat.dof());
    for (int s = 0; s < opt.burn_in_steps; ++s) {
      forces(lat, state.q, f);
      for (Eigen::Index i = 0; i < state.q.size(); ++i)
        state.q[i] += dt * f[i] + amp * rng.gaussian();
    }
  }
  return state;
}

}  // namespace nesslab

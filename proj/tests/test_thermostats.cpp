#include <cmath>

#include "doctest.h"
#include "nesslab/thermostats.hpp"

using namespace nesslab;

TEST_SUITE_BEGIN("thermostats");

namespace {

LatticeSpec chain(int n) {
  LatticeSpec s;
  s.n1 = n;
  s.pair = PairPotential::harmonic(1.0);
  return s;
}

}  // namespace

TEST_CASE("langevin terms act on the face dofs only") {
  const Lattice lat(chain(3));
  SystemState st = SystemState::zero(lat);
  st.p << 2.0, 0.5, -1.0;
  ReservoirSpec res = ReservoirSpec::langevin(1.2, 0.8, 1.0, 2.0);
  const LangevinTerms t = langevin_terms(res, lat, st);
  CHECK(t.drift[0] == doctest::Approx(-2.0));
  CHECK(t.drift[1] == 0.0);
  CHECK(t.drift[2] == doctest::Approx(2.0));
  CHECK(t.noise_amp[0] == doctest::Approx(std::sqrt(2.4)));
  CHECK(t.noise_amp[1] == 0.0);
  CHECK(t.noise_amp[2] == doctest::Approx(std::sqrt(3.2)));
}

TEST_CASE("langevin drift scales with 1/m") {
  LatticeSpec s = chain(3);
  s.mass = 2.0;
  const Lattice lat(s);
  SystemState st = SystemState::zero(lat);
  st.p[0] = 2.0;
  const LangevinTerms t = langevin_terms(ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0), lat, st);
  CHECK(t.drift[0] == doctest::Approx(-1.0));
}

TEST_CASE("zero coupling gives zero terms") {
  const Lattice lat(chain(3));
  SystemState st = SystemState::zero(lat);
  st.p << 1.0, 1.0, 1.0;
  const LangevinTerms t = langevin_terms(ReservoirSpec::langevin(1.0, 1.0, 0.0, 0.0), lat, st);
  CHECK(t.drift.abs().maxCoeff() == 0.0);
  CHECK(t.noise_amp.abs().maxCoeff() == 0.0);
}

TEST_CASE("extended terms: force is the auxiliary variable, drift relaxes it") {
  LatticeSpec s = chain(4);
  s.onsite = OnsitePotential::pinned(1.0);
  const Lattice lat(s);
  SystemState st = SystemState::zero(lat);
  st.q[0] = 0.5;
  st.q[3] = -0.3;
  st.has_aux = true;
  st.aux_left = 0.7;
  st.aux_right = -0.2;
  ReservoirSpec res = ReservoirSpec::extended(1.2, 0.8, 2.0, 1.0, 0.8, 0.0);
  const ExtendedTerms t = extended_terms(res, lat, st);
  CHECK(t.force.left == doctest::Approx(0.7));
  CHECK(t.force.right == doctest::Approx(-0.2));
  // -gamma (r - lambda^2 q_end) = -0.8 (0.7 - 4*0.5)
  CHECK(t.drift.left == doctest::Approx(1.04));
  CHECK(t.noise_amp.left == doctest::Approx(std::sqrt(2.0 * 0.8 * 4.0 * 1.2)));
  // gamma = 0 freezes the right auxiliary
  CHECK(t.drift.right == 0.0);
  CHECK(t.noise_amp.right == 0.0);
}

TEST_CASE("effective energy subtracts the end softening") {
  const Lattice lat(chain(2));
  SystemState st = SystemState::zero(lat);
  st.q << 0.5, -0.3;
  st.p << 0.2, 0.1;
  // H = (0.04 + 0.01)/2 + 0.8^2/2 = 0.345
  CHECK(total_energy(lat, st) == doctest::Approx(0.345));
  ReservoirSpec res = ReservoirSpec::extended(1.0, 1.0, 2.0, 1.0, 1.0, 1.0);
  // 0.345 - (4)(0.25)/2 - (1)(0.09)/2
  CHECK(effective_energy(lat, res, st) == doctest::Approx(-0.2));
  // non-extended variants report plain H
  CHECK(effective_energy(lat, ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0), st) ==
        doctest::Approx(0.345));
}

TEST_CASE("nose-hoover terms and the kinetic fixed point") {
  const Lattice lat(chain(3));
  SystemState st = SystemState::zero(lat);
  st.p << 1.0, 0.4, 0.6;
  st.has_aux = true;
  st.aux_left = 0.3;
  st.aux_right = -0.1;
  ReservoirSpec res = ReservoirSpec::nose_hoover(0.5, 1.0, 2.0);
  const NoseHooverTerms t = nose_hoover_terms(res, lat, st);
  CHECK(t.drift[0] == doctest::Approx(-0.3));
  CHECK(t.drift[1] == 0.0);
  CHECK(t.drift[2] == doctest::Approx(0.06));
  // (1/Theta^2) (2K/(gT) - 1) with K_L = 0.5, g = 1
  CHECK(t.zeta_dot.left == doctest::Approx(0.25));
  CHECK(t.zeta_dot.right == doctest::Approx((0.36 - 1.0) / 4.0));

  st.p[0] = std::sqrt(0.5);  // K = p^2/2 = g T_L / 2 = 0.25
  const NoseHooverTerms fixed = nose_hoover_terms(res, lat, st);
  CHECK(fixed.zeta_dot.left == doctest::Approx(0.0));
}

TEST_CASE("gaussian constraint multiplier is p.F / p.p over the set") {
  const Lattice lat(chain(2));
  SystemState st = SystemState::zero(lat);
  st.p << 1.0, 2.0;
  Eigen::ArrayXd force(2);
  force << 2.0, -1.0;
  ReservoirSpec res = ReservoirSpec::gaussian_iso(1.0, 0.5);
  const SideValues z = gaussian_zeta(res, lat, st, force);
  CHECK(z.left == doctest::Approx(2.0));
  CHECK(z.right == doctest::Approx(-0.5));
}

TEST_CASE("gaussian multiplier vanishes for force orthogonal to momentum") {
  LatticeSpec s = chain(2);
  s.nu = 2;
  const Lattice lat(s);
  SystemState st = SystemState::zero(lat);
  st.p << 1.0, 0.0, 0.5, 0.0;
  Eigen::ArrayXd force(4);
  force << 0.0, 3.0, 0.0, -2.0;
  const SideValues z = gaussian_zeta(ReservoirSpec::gaussian_iso(1.0, 1.0), lat, st, force);
  CHECK(z.left == doctest::Approx(0.0));
  CHECK(z.right == doctest::Approx(0.0));
}

TEST_CASE("gaussian multiplier rejects a zero-momentum set") {
  const Lattice lat(chain(2));
  SystemState st = SystemState::zero(lat);
  st.p << 0.0, 1.0;
  Eigen::ArrayXd force = Eigen::ArrayXd::Ones(2);
  CHECK_THROWS_AS(gaussian_zeta(ReservoirSpec::gaussian_iso(1.0, 1.0), lat, st, force),
                  ConstraintSingular);
}

TEST_CASE("set kinetic energy sums p^2/2m over the listed sites") {
  LatticeSpec s = chain(3);
  s.mass = 2.0;
  const Lattice lat(s);
  SystemState st = SystemState::zero(lat);
  st.p << 2.0, 1.0, 3.0;
  CHECK(set_kinetic_energy(lat, st, {0, 2}) == doctest::Approx(13.0 / 4.0));
  CHECK(set_kinetic_energy(lat, st, {}) == 0.0);
}

TEST_CASE("site sets default to the lattice faces") {
  const Lattice lat(chain(5));
  const ReservoirSites sites = resolve_sites(ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0), lat);
  CHECK(sites.left == std::vector<int>{0});
  CHECK(sites.right == std::vector<int>{4});
  CHECK(sites.g_left == doctest::Approx(1.0));
}

TEST_CASE("2d faces cover the whole transverse cross-section") {
  LatticeSpec s;
  s.dimension = 2;
  s.n1 = 3;
  s.n2 = 4;
  s.pair = PairPotential::harmonic(1.0);
  const Lattice lat(s);
  const ReservoirSites sites = resolve_sites(ReservoirSpec::nose_hoover(1.0, 1.0, 1.0), lat);
  CHECK(sites.left.size() == 4);
  CHECK(sites.right.size() == 4);
  for (int s2 : sites.left) CHECK(s2 % 3 == 0);
  CHECK(sites.g_left == doctest::Approx(4.0));
}

TEST_CASE("single-plane chain keeps one reservoir") {
  const Lattice lat(chain(1));
  const ReservoirSites sites = resolve_sites(ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0), lat);
  CHECK(sites.left == std::vector<int>{0});
  CHECK(sites.right.empty());
}

TEST_CASE("custom site sets and g override the defaults") {
  ReservoirSpec res = ReservoirSpec::nose_hoover(1.0, 1.0, 1.0);
  res.left_sites = {0, 1};
  res.right_sites = {4};
  res.g_left = 3.5;
  const Lattice lat(chain(5));
  const ReservoirSites sites = resolve_sites(res, lat);
  CHECK(sites.left == std::vector<int>({0, 1}));
  CHECK(sites.g_left == doctest::Approx(3.5));
  CHECK(sites.g_right == doctest::Approx(1.0));
}

TEST_CASE("reservoir validation rejects bad parameters") {
  const LatticeSpec lat = chain(4);
  ReservoirSpec res = ReservoirSpec::langevin(-1.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(res.validate(lat), SpecError);

  res = ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0);
  res.left_sites = {0, 9};
  CHECK_THROWS_AS(res.validate(lat), SpecError);

  res = ReservoirSpec::langevin(1.0, 1.0, 1.0, 1.0);
  res.left_sites = {0, 1};
  res.right_sites = {1, 3};
  CHECK_THROWS_AS(res.validate(lat), SpecError);

  ReservoirSpec nh = ReservoirSpec::nose_hoover(1.0, 1.0, 0.0);
  CHECK_THROWS_AS(nh.validate(lat), SpecError);

  // unconfined chain cannot carry extended reservoirs
  ReservoirSpec ext = ReservoirSpec::extended(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(ext.validate(lat), SpecError);
  LatticeSpec pinned = chain(4);
  pinned.onsite = OnsitePotential::pinned(1.0);
  CHECK_NOTHROW(ext.validate(pinned));
  LatticeSpec walls = chain(4);
  walls.end_bc = EndBc::Fixed;
  CHECK_NOTHROW(ext.validate(walls));

  LatticeSpec wide;
  wide.dimension = 2;
  wide.n1 = 4;
  wide.n2 = 3;
  wide.pair = PairPotential::harmonic(1.0);
  wide.onsite = OnsitePotential::pinned(1.0);
  CHECK_THROWS_AS(ext.validate(wide), SpecError);
}

TEST_SUITE_END();

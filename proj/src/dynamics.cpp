#include "nesslab/dynamics.hpp"

#include <chrono>
#include <cmath>

namespace nesslab {

void IntegratorSpec::validate() const {
  if (dt < 0) throw SpecError("integrator.dt must be nonnegative (0 = automatic)");
  if (scheme != "strang") throw SpecError("integrator.scheme must be \"strang\"");
  if (steps <= 0) throw SpecError("integrator.steps must be positive");
  if (burn_in < 0 || burn_in >= steps) throw SpecError("integrator.burn_in must be in [0, steps)");
  if (stride < 1) throw SpecError("integrator.stride must be >= 1");
}

double default_time_step(const LatticeSpec& lattice, double temperature) {
  const double w2 = std::max(thermal_curvature(lattice, temperature), 1e-12);
  return 0.05 / std::sqrt(w2);
}

void check_finite(const SystemState& state, std::int64_t step_index) {
  if (!state.q.allFinite() || !state.p.allFinite() || !std::isfinite(state.aux_left) ||
      !std::isfinite(state.aux_right))
    throw BlowUpError("state went non-finite at step " + std::to_string(step_index) +
                      " (t = " + std::to_string(state.time) + ")");
}

Stepper::Stepper(const Lattice& lattice, const ReservoirSpec& reservoir,
                 const IntegratorSpec& integrator)
    : lat_(lattice), res_(reservoir) {
  integrator.validate();
  res_.validate(lat_.spec());
  sites_ = resolve_sites(res_, lat_);
  const double t_ref = res_.kind == ReservoirKind::None
                           ? 1.0
                           : std::max(res_.t_left, res_.t_right);
  dt_ = integrator.dt > 0 ? integrator.dt : default_time_step(lat_.spec(), t_ref);
  noise_.key = derive_key(integrator.seed, 1);

  const int nu = lat_.nu();
  for (int s : sites_.left)
    for (int c = 0; c < nu; ++c) left_dofs_.push_back(s * nu + c);
  for (int s : sites_.right)
    for (int c = 0; c < nu; ++c) right_dofs_.push_back(s * nu + c);

  const double m = lat_.mass();
  if (res_.kind == ReservoirKind::Langevin) {
    ou_decay_ = Eigen::ArrayXd::Ones(lat_.dof());
    ou_amp_ = Eigen::ArrayXd::Zero(lat_.dof());
    auto fill = [&](const std::vector<int>& dofs, double lambda, double temp) {
      const double c = std::exp(-lambda * dt_ / m);
      const double amp = std::sqrt(m * temp * (1.0 - c * c));
      for (int i : dofs) {
        ou_decay_[i] = c;
        ou_amp_[i] = amp;
      }
    };
    fill(left_dofs_, res_.lambda_left, res_.t_left);
    fill(right_dofs_, res_.lambda_right, res_.t_right);
  } else if (res_.kind == ReservoirKind::Extended) {
    ext_decay_left_ = std::exp(-res_.gamma_left * dt_);
    ext_decay_right_ = std::exp(-res_.gamma_right * dt_);
    ext_amp_left_ = res_.lambda_left *
                    std::sqrt(res_.t_left * (1.0 - ext_decay_left_ * ext_decay_left_));
    ext_amp_right_ = res_.lambda_right *
                     std::sqrt(res_.t_right * (1.0 - ext_decay_right_ * ext_decay_right_));
  } else if (res_.kind == ReservoirKind::GaussianIso) {
    iso_target_left_ = 0.5 * sites_.g_left * res_.t_left;
    iso_target_right_ = 0.5 * sites_.g_right * res_.t_right;
  }
  force_.resize(lat_.dof());
}

namespace {

double dofs_kinetic(const SystemState& state, const std::vector<int>& dofs, double mass) {
  double k = 0.0;
  for (int i : dofs) k += state.p[i] * state.p[i];
  return k / (2.0 * mass);
}

}  // namespace

void Stepper::prepare(SystemState& state) const {
  check_shape(lat_, state);
  state.has_aux = res_.has_aux();
  if (res_.kind == ReservoirKind::GaussianIso) {
    auto project = [&](const std::vector<int>& dofs, double target) {
      if (dofs.empty()) return;
      const double kin = dofs_kinetic(state, dofs, lat_.mass());
      if (kin <= 0.0)
        throw ConstraintSingular(
            "isokinetic constraint singular: start from a state with moving thermostated sites");
      const double f = std::sqrt(target / kin);
      for (int i : dofs) state.p[i] *= f;
    };
    project(left_dofs_, iso_target_left_);
    project(right_dofs_, iso_target_right_);
  }
}

void Stepper::hamiltonian_step(SystemState& state, StepHeat& heat, bool reuse_cached_force) const {
  const double m = lat_.mass();
  const double half = 0.5 * dt_;
  const bool ext = res_.kind == ReservoirKind::Extended;
  const int last = lat_.dof() - 1;

  if (!reuse_cached_force) forces(lat_, state.q, force_);
  state.p += half * force_;
  if (ext) {
    state.p[0] += half * state.aux_left;
    state.p[last] += half * state.aux_right;
  }

  double q_first = 0.0, q_last = 0.0;
  if (ext) {
    q_first = state.q[0];
    q_last = state.q[last];
  }
  state.q += (dt_ / m) * state.p;
  if (ext) {
    // Work done by the auxiliary forces while q moves; r is frozen here.
    heat.left -= state.aux_left * (state.q[0] - q_first);
    heat.right -= state.aux_right * (state.q[last] - q_last);
  }

  forces(lat_, state.q, force_);
  state.p += half * force_;
  if (ext) {
    state.p[0] += half * state.aux_left;
    state.p[last] += half * state.aux_right;
  }
}

void Stepper::reservoir_substep(SystemState& state, std::int64_t step_index,
                                StepHeat& heat) const {
  const double m = lat_.mass();
  const auto ustep = static_cast<std::uint64_t>(step_index);
  switch (res_.kind) {
    case ReservoirKind::None:
      return;
    case ReservoirKind::Langevin: {
      auto side = [&](const std::vector<int>& dofs, double& q_out) {
        for (int i : dofs) {
          const double c = ou_decay_[i];
          const double amp = ou_amp_[i];
          if (c == 1.0 && amp == 0.0) continue;
          const double p_old = state.p[i];
          const double p_new = c * p_old + amp * noise_.gaussian(ustep, static_cast<std::uint32_t>(i));
          q_out += (p_old * p_old - p_new * p_new) / (2.0 * m);
          state.p[i] = p_new;
        }
      };
      side(left_dofs_, heat.left);
      side(right_dofs_, heat.right);
      return;
    }
    case ReservoirKind::Extended: {
      const int last = lat_.dof() - 1;
      const std::uint32_t slot = static_cast<std::uint32_t>(lat_.dof());
      const double mu_l = res_.lambda_left * res_.lambda_left * state.q[0];
      const double mu_r = res_.lambda_right * res_.lambda_right * state.q[last];
      state.aux_left = mu_l + ext_decay_left_ * (state.aux_left - mu_l) +
                       ext_amp_left_ * noise_.gaussian(ustep, slot);
      state.aux_right = mu_r + ext_decay_right_ * (state.aux_right - mu_r) +
                        ext_amp_right_ * noise_.gaussian(ustep, slot + 1);
      return;
    }
    case ReservoirKind::NoseHoover: {
      const double inv_theta2 = 1.0 / (res_.theta * res_.theta);
      auto side = [&](const std::vector<int>& dofs, double g, double temp, double& zeta,
                      double& q_out) {
        if (dofs.empty()) return;
        double kin = dofs_kinetic(state, dofs, m);
        zeta += 0.5 * dt_ * inv_theta2 * (2.0 * kin / (g * temp) - 1.0);
        const double scale = std::exp(-zeta * dt_ / m);
        for (int i : dofs) state.p[i] *= scale;
        const double kin_new = kin * scale * scale;
        q_out += kin - kin_new;
        zeta += 0.5 * dt_ * inv_theta2 * (2.0 * kin_new / (g * temp) - 1.0);
      };
      side(left_dofs_, sites_.g_left, res_.t_left, state.aux_left, heat.left);
      side(right_dofs_, sites_.g_right, res_.t_right, state.aux_right, heat.right);
      return;
    }
    case ReservoirKind::GaussianIso: {
      auto side = [&](const std::vector<int>& dofs, double target, double& q_out) {
        if (dofs.empty()) return;
        const double kin = dofs_kinetic(state, dofs, m);
        if (kin <= 0.0)
          throw ConstraintSingular("isokinetic constraint singular: zero kinetic energy");
        const double f = std::sqrt(target / kin);
        for (int i : dofs) state.p[i] *= f;
        q_out += kin - target;
      };
      side(left_dofs_, iso_target_left_, heat.left);
      side(right_dofs_, iso_target_right_, heat.right);
      return;
    }
  }
}

StepHeat Stepper::step(SystemState& state, std::int64_t step_index,
                       bool reuse_cached_force) const {
  StepHeat heat;
  hamiltonian_step(state, heat, reuse_cached_force);
  reservoir_substep(state, step_index, heat);
  state.time += dt_;
  return heat;
}

SimulationResult simulate(const Lattice& lattice, const ReservoirSpec& reservoir,
                          const IntegratorSpec& integrator, const SystemState& initial,
                          const SimulationOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  Stepper stepper(lattice, reservoir, integrator);
  SystemState state = initial;
  stepper.prepare(state);
  check_finite(state, 0);

  const std::int64_t n_samples = (integrator.steps - integrator.burn_in) / integrator.stride;
  if (n_samples < 4) throw SpecError("fewer than 4 samples; increase steps or lower stride");
  const int blocks = static_cast<int>(
      std::max<std::int64_t>(2, std::min<std::int64_t>(options.blocks, n_samples / 2)));

  SimulationResult out;
  out.current.name = "heat_current";
  out.heat_left.name = "heat_into_left_reservoir";
  out.heat_right.name = "heat_into_right_reservoir";
  out.sigma.name = "entropy_production_rate";
  for (ObservableSeries* s : {&out.current, &out.heat_left, &out.heat_right, &out.sigma}) {
    s->times.reserve(n_samples);
    s->values.reserve(n_samples);
  }

  const LatticeSpec& spec = lattice.spec();
  BlockAccumulator profile_acc(spec.n1, n_samples, blocks);
  BlockAccumulator plane_acc(lattice.plane_count(), n_samples, blocks);
  Eigen::ArrayXd plane_kin(spec.n1);
  Eigen::ArrayXd plane_cur(lattice.plane_count());
  const double dt = stepper.dt();
  const double window = dt * integrator.stride;

  double acc_left = 0.0, acc_right = 0.0;
  for (std::int64_t k = 0; k < integrator.steps; ++k) {
    const StepHeat h = stepper.step(state, k, k > 0);
    if (k < integrator.burn_in) {
      if ((k & 1023) == 0) check_finite(state, k);
      continue;
    }
    if (k == integrator.burn_in) {
      acc_left = acc_right = 0.0;
    }
    acc_left += h.left;
    acc_right += h.right;
    const std::int64_t since = k - integrator.burn_in + 1;
    if (since % integrator.stride == 0) {
      check_finite(state, k);
      const double t = state.time;
      for (int j = 0; j < plane_cur.size(); ++j) plane_cur[j] = heat_current(lattice, state, j);
      plane_acc.add(plane_cur);
      out.current.times.push_back(t);
      out.current.values.push_back(plane_cur.mean());
      const double rate_l = acc_left / window;
      const double rate_r = acc_right / window;
      acc_left = acc_right = 0.0;
      out.heat_left.times.push_back(t);
      out.heat_left.values.push_back(rate_l);
      out.heat_right.times.push_back(t);
      out.heat_right.values.push_back(rate_r);
      out.sigma.times.push_back(t);
      out.sigma.values.push_back(
          entropy_production(rate_l, rate_r, reservoir.t_left, reservoir.t_right));
      for (int j = 0; j < spec.n1; ++j) {
        double sum = 0.0;
        for (int site : lattice.plane_sites(j))
          for (int c = 0; c < spec.nu; ++c) {
            const double p = state.p[site * spec.nu + c];
            sum += p * p;
          }
        plane_kin[j] = sum / (spec.n2 * spec.nu * spec.mass);
      }
      profile_acc.add(plane_kin);
    }
  }

  for (ObservableSeries* s : {&out.current, &out.heat_left, &out.heat_right, &out.sigma})
    s->finalize(blocks);
  out.profile = profile_acc.mean();
  out.profile_err = profile_acc.standard_error();
  out.plane_current = plane_acc.mean();
  out.plane_current_err = plane_acc.standard_error();
  out.final_state = state;
  out.steps = integrator.steps;
  out.dt = dt;
  out.seed = integrator.seed;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace nesslab

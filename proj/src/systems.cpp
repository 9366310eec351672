#include "koop/systems.hpp"

#include <cmath>
#include <cstdio>

namespace koop::sim {

void RigidPendulumParams::validate() const {
  if (!(rod_length > 0.0)) throw std::invalid_argument("rod_length must be > 0");
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be > 0");
  if (!(viscous_friction >= 0.0)) throw std::invalid_argument("viscous_friction must be >= 0");
}

void DuffingSurrogateParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  if (!(u_limit > 0.0)) throw std::invalid_argument("u_limit must be > 0");
}

void PDGains::validate() const {
  if (!std::isfinite(kp) || !std::isfinite(kd) || !std::isfinite(target))
    throw std::invalid_argument("PD gains must be finite");
  if (kp < 0.0 || kd < 0.0) throw std::invalid_argument("kp, kd must be >= 0");
}

double pd_control(double angle, double velocity, const PDGains& gains) {
  return -gains.kp * (gains.target - angle) + gains.kd * velocity;
}

std::pair<double, double> rigid_pendulum_deriv(const PendulumState& state, const RigidPendulumParams& params) {
  params.validate();
  const double ml = params.mass * params.rod_length;
  const double dqdot = (params.gravity / params.rod_length) * std::sin(state.q) +
                       (state.u - params.viscous_friction * state.qdot) / (ml * ml);
  return {state.qdot, dqdot};
}

std::tuple<double, double, double> duffing_deriv(const SoftPendulumState& state, double u,
                                                 const DuffingSurrogateParams& params) {
  params.validate();
  const double uc = std::clamp(u, -params.u_limit, params.u_limit);
  const double th = state.theta;
  const double dthetadot = params.alpha * th - params.beta * th * th * th - params.delta * state.thetadot + params.kappa * uc;
  return {state.thetadot, dthetadot, uc};
}

Eigen::VectorXd rk4_step_fn(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double dt) {
  return rk4_step(f, x, dt);
}

Eigen::VectorXd System::step(const Eigen::VectorXd& x, double u, double dt, int substeps) const {
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const double uc = clamp_control(u);
  const auto f = [&](const Eigen::VectorXd& s) { return deriv(s, uc); };
  Eigen::VectorXd out = x;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) out = rk4_step(f, out, h);
  return out;
}

RigidPendulum::RigidPendulum(RigidPendulumParams params) : params_(params) { params_.validate(); }

Eigen::VectorXd RigidPendulum::deriv(const Eigen::VectorXd& x, double u) const {
  const auto [dq, dqdot] = rigid_pendulum_deriv({x[0], x[1], u}, params_);
  Eigen::VectorXd d(2);
  d << dq, dqdot;
  return d;
}

DuffingSoftPendulum::DuffingSoftPendulum(DuffingSurrogateParams params) : params_(params) { params_.validate(); }

Eigen::VectorXd DuffingSoftPendulum::deriv(const Eigen::VectorXd& x, double u) const {
  const auto [dth, dthd, dq] = duffing_deriv({x[0], x[1], x[2]}, u, params_);
  Eigen::VectorXd d(3);
  d << dth, dthd, dq;
  return d;
}

double DuffingSoftPendulum::clamp_control(double u) const {
  return std::clamp(u, -params_.u_limit, params_.u_limit);
}

Controller zero_controller() {
  return [](const Eigen::VectorXd&, double) { return 0.0; };
}

Controller pd_exciter(PDGains gains, int angle_index, int velocity_index) {
  gains.validate();
  return [gains, angle_index, velocity_index](const Eigen::VectorXd& x, double) {
    return pd_control(x[angle_index], x[velocity_index], gains);
  };
}

Controller pd_regulator(PDGains gains, int angle_index, int velocity_index) {
  gains.validate();
  return [gains, angle_index, velocity_index](const Eigen::VectorXd& x, double) {
    return -pd_control(x[angle_index], x[velocity_index], gains);
  };
}

Trajectory rollout(const System& system, const Controller& controller, const Eigen::VectorXd& x0,
                   int n_steps, double dt, int substeps) {
  if (n_steps < 1) throw std::invalid_argument("rollout: n_steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("rollout: dt must be > 0");
  if (x0.size() != system.ode_dim()) throw std::invalid_argument("rollout: x0 dimension mismatch");

  const int d = system.ode_dim() + 1;
  Trajectory traj;
  traj.channels = system.channels();
  traj.dt = dt;
  traj.samples.resize(d, n_steps + 1);

  Eigen::VectorXd x = x0;
  for (int k = 0; k <= n_steps; ++k) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceThreshold)
      throw DivergenceError(k, "rollout diverged at step " + std::to_string(k));
    const double u = system.clamp_control(controller(x, k * dt));
    traj.samples.col(k).head(system.ode_dim()) = x;
    traj.samples(d - 1, k) = u;
    if (k < n_steps) x = system.step(x, u, dt, substeps);
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  for (const auto& c : traj.channels) {
    out += ",";
    out += c;
  }
  out += "\n";
  char buf[64];
  for (int k = 0; k < traj.length(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.9g", k * traj.dt);
    out += buf;
    for (int r = 0; r < traj.sample_dim(); ++r) {
      std::snprintf(buf, sizeof(buf), ",%.17g", traj.samples(r, k));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

double wrap_angle(double a) {
  constexpr double pi = 3.141592653589793238462643383279502884;
  const double two_pi = 2.0 * pi;
  double w = std::fmod(a + pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - pi;
}

}  // namespace koop::sim

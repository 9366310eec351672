#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace koop::sim {

struct RigidPendulumParams {
  double gravity = -1.0;
  double rod_length = 1.0;
  double mass = 1.0;
  double viscous_friction = 0.0;

  void validate() const;
};

struct PendulumState {
  double q = 0.0;
  double qdot = 0.0;
  double u = 0.0;
};

struct DuffingSurrogateParams {
  double alpha = 4.0;      // linear stiffness; wells at +-sqrt(alpha/beta)
  double beta = 6.25;      // cubic stiffness
  double delta = 0.4;      // damping
  double kappa = 4.0;      // base-coupling gain
  double u_limit = 2.0;    // max joint velocity magnitude

  void validate() const;
  double well() const { return std::sqrt(alpha / beta); }
};

struct SoftPendulumState {
  double theta = 0.0;
  double thetadot = 0.0;
  double q = 0.0;
};

struct PDGains {
  double kp = 0.0;
  double kd = 0.0;
  double target = 0.0;

  void validate() const;
};

/// Raw PD law: -kp*(target - angle) + kd*velocity. Note the sign: this form
/// feeds energy into the error, so a loop closed with it oscillates or
/// diverges. Use pd_regulator for set-point stabilization.
double pd_control(double angle, double velocity, const PDGains& gains);

/// dq = qdot; dqdot = (g/l) sin(q) + (u - c*qdot)/(m*l)^2.
std::pair<double, double> rigid_pendulum_deriv(const PendulumState& state, const RigidPendulumParams& params);

/// dtheta = thetadot; dthetadot = alpha*theta - beta*theta^3 - delta*thetadot + kappa*u; dq = u.
/// u is clamped to [-u_limit, u_limit].
std::tuple<double, double, double> duffing_deriv(const SoftPendulumState& state, double u,
                                                 const DuffingSurrogateParams& params);

/// Classic fourth-order Runge-Kutta update for dx/dt = f(x).
template <typename F>
Eigen::VectorXd rk4_step(F&& f, const Eigen::VectorXd& x, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd rk4_step_fn(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double dt);

/// A simulated plant: the ODE state plus a scalar control channel that is
/// zero-order-held across each dt.
class System {
 public:
  virtual ~System() = default;
  virtual int ode_dim() const = 0;
  /// Per-step sample channels: ODE state channels followed by "u".
  virtual std::vector<std::string> channels() const = 0;
  virtual Eigen::VectorXd deriv(const Eigen::VectorXd& x, double u) const = 0;
  virtual double clamp_control(double u) const { return u; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double dt, int substeps = 1) const;
};

class RigidPendulum final : public System {
 public:
  explicit RigidPendulum(RigidPendulumParams params = {});
  int ode_dim() const override { return 2; }
  std::vector<std::string> channels() const override { return {"q", "qdot", "u"}; }
  Eigen::VectorXd deriv(const Eigen::VectorXd& x, double u) const override;
  const RigidPendulumParams& params() const { return params_; }

 private:
  RigidPendulumParams params_;
};

class DuffingSoftPendulum final : public System {
 public:
  explicit DuffingSoftPendulum(DuffingSurrogateParams params = {});
  int ode_dim() const override { return 3; }
  std::vector<std::string> channels() const override { return {"theta", "thetadot", "q", "u"}; }
  Eigen::VectorXd deriv(const Eigen::VectorXd& x, double u) const override;
  double clamp_control(double u) const override;
  const DuffingSurrogateParams& params() const { return params_; }

 private:
  DuffingSurrogateParams params_;
};

/// Control policy evaluated on the ODE state at every step before integration.
using Controller = std::function<double(const Eigen::VectorXd& x, double t)>;

Controller zero_controller();
/// Applies pd_control verbatim (error-amplifying sign): the excitation
/// controller used for data collection. angle/velocity pick the state indices.
Controller pd_exciter(PDGains gains, int angle_index = 0, int velocity_index = 1);
/// Applies the negated law kp*(target-angle) - kd*velocity, which drives the
/// angle to the target.
Controller pd_regulator(PDGains gains, int angle_index = 0, int velocity_index = 1);

struct Trajectory {
  std::vector<std::string> channels;  // state channels + "u"
  double dt = 0.0;
  /// One column per step: [state..., u], n_steps+1 columns.
  Eigen::MatrixXd samples;

  int length() const { return static_cast<int>(samples.cols()); }
  int sample_dim() const { return static_cast<int>(samples.rows()); }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what) : std::runtime_error(what), step(step) {}
  int step;
};

inline constexpr double kDivergenceThreshold = 1e6;

/// Fixed-step closed-loop rollout; controller is evaluated at every step
/// (including the final state, so every sample carries its control channel).
Trajectory rollout(const System& system, const Controller& controller, const Eigen::VectorXd& x0,
                   int n_steps, double dt, int substeps = 1);

/// Header `t,<channels...>`, one row per step, time with 9 significant digits.
std::string trajectory_csv(const Trajectory& traj);

/// Wraps an angle difference to (-pi, pi].
double wrap_angle(double a);

}  // namespace koop::sim

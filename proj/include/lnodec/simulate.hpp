#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lnodec/dynamics.hpp"
#include "lnodec/policy.hpp"

namespace lnodec {

/// One closed-loop rollout sampled on a uniform grid of `segments` steps.
struct Trajectory {
  std::vector<double> times;             // segments + 1 instants, 0 .. t_f
  std::vector<Vec> states;               // segments + 1
  std::vector<Vec> controls;             // policy output at each state
  std::vector<double> potentials;        // V(x(t_i))
  std::vector<double> pointwise_losses;  // left endpoints, `segments` values

  std::size_t segments() const { return times.empty() ? 0 : times.size() - 1; }
};

/// kappa and beta used to fill Trajectory::pointwise_losses.
struct LossWeights {
  double kappa = 5.0;
  double beta = 0.0;
};

/// Classical fourth-order Runge-Kutta step for xdot = field(x, t).
template <class Field>
Vec rk4_step(Field&& field, const Vec& x, double t, double dt) {
  const Vec k1 = field(x, t);
  const Vec k2 = field(Vec(x + 0.5 * dt * k1), t + 0.5 * dt);
  const Vec k3 = field(Vec(x + 0.5 * dt * k2), t + 0.5 * dt);
  const Vec k4 = field(Vec(x + dt * k3), t + dt);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// f(x, t) + h(x, t) pi(x): the policy is part of the vector field.
Vec closed_loop_field(const ProblemSpec& p, const PolicyParams& params,
                      const Vec& x, double t);

/// Integrates the closed loop from x_init over [0, t_f] with RK4, re-evaluating
/// the policy at every stage. Throws DomainError carrying the failing step.
Trajectory rollout(const ProblemSpec& p, const PolicyParams& params,
                   const Vec& x_init, int segments,
                   const LossWeights& weights = {});

/// Only the state grid; this is what the adjoint engine keeps in memory.
std::vector<Vec> rollout_states(const ProblemSpec& p,
                                const PolicyParams& params, const Vec& x_init,
                                int segments);

struct TruncatedTrajectory {
  Trajectory trajectory;
  bool reached = false;
  double crossing_time = 0.0;
};

/// Cuts `traj` at the first time states[i][component] >= target, closing it
/// with a linearly interpolated sample at the crossing.
TruncatedTrajectory truncate_at_target(const Trajectory& traj,
                                       Eigen::Index component, double target);

/// CSV with header t,x1..xn,u1..um,V,pointwise_loss; 9 significant digits.
/// The final row has an empty pointwise_loss (no segment starts there).
std::string trajectory_csv(const Trajectory& traj);

}  // namespace lnodec

#include "lnodec/simulate.hpp"

#include <cstdio>
#include <sstream>

#include "lnodec/errors.hpp"
#include "lnodec/loss.hpp"

namespace lnodec {

namespace {

void require_segments(int segments) {
  if (segments < 1) throw ValidationError("segments must be >= 1");
}

// Steps x forward once, tagging any DomainError with the step index.
Vec guarded_step(const ProblemSpec& p, const PolicyParams& params,
                 const Vec& x, double t, double dt, std::size_t index) {
  try {
    Vec next = rk4_step(
        [&](const Vec& s, double ts) {
          return closed_loop_field(p, params, s, ts);
        },
        x, t, dt);
    if (!p.domain_guard.contains(next)) {
      throw DomainError(p.name + ": rollout left the domain guard", t + dt);
    }
    return next;
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " (step " +
                          std::to_string(index) + ")",
                      e.time(), static_cast<std::ptrdiff_t>(index));
  }
}

}  // namespace

Vec closed_loop_field(const ProblemSpec& p, const PolicyParams& params,
                      const Vec& x, double t) {
  return eval_F(p, x, forward(params, x), t);
}

std::vector<Vec> rollout_states(const ProblemSpec& p,
                                const PolicyParams& params, const Vec& x_init,
                                int segments) {
  require_segments(segments);
  if (!p.domain_guard.contains(x_init)) {
    throw DomainError(p.name + ": initial state outside domain guard", 0.0, 0);
  }
  const double dt = p.t_f / segments;
  std::vector<Vec> states;
  states.reserve(static_cast<std::size_t>(segments) + 1);
  states.push_back(x_init);
  for (int i = 0; i < segments; ++i) {
    states.push_back(guarded_step(p, params, states.back(), i * dt, dt,
                                  static_cast<std::size_t>(i)));
  }
  return states;
}

Trajectory rollout(const ProblemSpec& p, const PolicyParams& params,
                   const Vec& x_init, int segments,
                   const LossWeights& weights) {
  Trajectory traj;
  traj.states = rollout_states(p, params, x_init, segments);
  const double dt = p.t_f / segments;
  const std::size_t n = traj.states.size();
  traj.times.resize(n);
  traj.controls.resize(n);
  traj.potentials.resize(n);
  traj.pointwise_losses.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // i * dt rather than accumulation keeps the grid exactly uniform.
    traj.times[i] = i + 1 == n ? p.t_f : static_cast<double>(i) * dt;
    traj.controls[i] = forward(params, traj.states[i]);
    traj.potentials[i] = potential(traj.states[i], p.x_star, p.P);
    if (i + 1 < n) {
      traj.pointwise_losses[i] =
          pointwise_constrained(p, params, traj.states[i], traj.times[i],
                                weights.kappa, weights.beta)
              .value;
    }
  }
  return traj;
}

TruncatedTrajectory truncate_at_target(const Trajectory& traj,
                                       Eigen::Index component, double target) {
  TruncatedTrajectory out;
  const std::size_t n = traj.states.size();
  if (n == 0 || component < 0 || component >= traj.states[0].size()) {
    throw ValidationError("truncate_at_target: invalid component");
  }
  std::size_t hit = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (traj.states[i][component] >= target) {
      hit = i;
      break;
    }
  }
  if (hit == n) {
    out.trajectory = traj;
    out.reached = false;
    out.crossing_time = traj.times.back();
    return out;
  }
  out.reached = true;
  Trajectory& t = out.trajectory;
  auto copy_prefix = [&](std::size_t count) {
    t.times.assign(traj.times.begin(), traj.times.begin() + count);
    t.states.assign(traj.states.begin(), traj.states.begin() + count);
    if (!traj.controls.empty()) {
      t.controls.assign(traj.controls.begin(), traj.controls.begin() + count);
    }
    if (!traj.potentials.empty()) {
      t.potentials.assign(traj.potentials.begin(),
                          traj.potentials.begin() + count);
    }
    const std::size_t nl = count == 0 ? 0 : count - 1;
    if (traj.pointwise_losses.size() >= nl) {
      t.pointwise_losses.assign(traj.pointwise_losses.begin(),
                                traj.pointwise_losses.begin() + nl);
    }
  };
  const double prev =
      hit == 0 ? target : traj.states[hit - 1][component];
  const double cur = traj.states[hit][component];
  if (hit == 0 || cur == target) {
    copy_prefix(hit + 1);
    out.crossing_time = traj.times[hit];
    return out;
  }
  // Interpolate between hit-1 and hit.
  const double w = (target - prev) / (cur - prev);
  copy_prefix(hit);
  const auto lerp = [w](const auto& a, const auto& b) { return a + w * (b - a); };
  out.crossing_time = lerp(traj.times[hit - 1], traj.times[hit]);
  t.times.push_back(out.crossing_time);
  t.states.push_back(lerp(traj.states[hit - 1], traj.states[hit]));
  t.states.back()[component] = target;
  if (!traj.controls.empty()) {
    t.controls.push_back(lerp(traj.controls[hit - 1], traj.controls[hit]));
  }
  if (!traj.potentials.empty()) {
    t.potentials.push_back(
        lerp(traj.potentials[hit - 1], traj.potentials[hit]));
  }
  if (traj.pointwise_losses.size() >= hit) {
    t.pointwise_losses.push_back(traj.pointwise_losses[hit - 1]);
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const Eigen::Index nx = traj.states.empty() ? 0 : traj.states[0].size();
  const Eigen::Index nu = traj.controls.empty() ? 0 : traj.controls[0].size();
  os << "t";
  for (Eigen::Index i = 0; i < nx; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < nu; ++i) os << ",u" << i + 1;
  os << ",V,pointwise_loss\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf;
  };
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    put(traj.times[r]);
    for (Eigen::Index i = 0; i < nx; ++i) {
      os << ',';
      put(traj.states[r][i]);
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
      os << ',';
      put(traj.controls[r][i]);
    }
    os << ',';
    if (r < traj.potentials.size()) put(traj.potentials[r]);
    os << ',';
    if (r < traj.pointwise_losses.size()) put(traj.pointwise_losses[r]);
    os << '\n';
  }
  return os.str();
}

}  // namespace lnodec

#include "lnodec/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lnodec/errors.hpp"
#include "lnodec/simulate.hpp"

namespace lnodec {

namespace {

struct Workspace {
  PolicyTape tape;
};

// Adds J_cl(x)^T c to x_bar and (dF/dtheta)^T c to theta_bar, where
// J_cl = dF/dx + h dpi/dx is the closed-loop Jacobian.
void closed_loop_vjp(const ProblemSpec& p, const PolicyParams& params,
                     const Vec& x, double t, const Vec& c, Vec& x_bar,
                     Vec& theta_bar, Workspace& ws) {
  const Vec u = forward(params, x, ws.tape);
  x_bar.noalias() += jac_F_x(p, x, u, t).transpose() * c;
  const Vec u_bar = eval_input_map(p, x, t).transpose() * c;
  vjp_accumulate(params, ws.tape, u_bar, x_bar, theta_bar);
}

// Loss contribution of grid sample i (left endpoint) plus its gradient.
// The kink of max{0, z} gets subgradient 0.
void sample_term(const ProblemSpec& p, const PolicyParams& params,
                 const TrainConfig& cfg, const Vec& x, double t,
                 double quad_weight, double dt, Vec& x_bar, Vec& theta_bar,
                 LossReport& report, Workspace& ws) {
  const Vec u = forward(params, x, ws.tape);
  Vec u_bar = Vec::Zero(u.size());
  switch (cfg.mode) {
    case LossMode::LNodec: {
      const Vec w = potential_grad(x, p.x_star, p.P);
      const Vec F = eval_F(p, x, u, t);
      const double z = w.dot(F) + cfg.kappa * potential(x, p.x_star, p.P);
      if (z > 0.0) {
        report.stability += quad_weight * z;
        // dz/dx = 2 P F + J_F^T w + kappa w  (+ policy path through u)
        x_bar.noalias() +=
            quad_weight * (2.0 * (p.P * F) +
                           jac_F_x(p, x, u, t).transpose() * w +
                           cfg.kappa * w);
        u_bar.noalias() +=
            quad_weight * (eval_input_map(p, x, t).transpose() * w);
      }
      break;
    }
    case LossMode::NodecStage:
      report.stability += dt * potential(x, p.x_star, p.P_ell);
      x_bar.noalias() += dt * potential_grad(x, p.x_star, p.P_ell);
      break;
    case LossMode::NodecTerminal:
      break;
  }
  const double beta = cfg.effective_beta();
  if (beta > 0.0) {
    const double g = eval_constraint(p, x, u);
    if (g > 0.0) {
      report.penalty += quad_weight * beta * g * g;
      const auto dg = constraint_gradient(p, x, u);
      const double s = quad_weight * 2.0 * beta * g;
      x_bar.noalias() += s * dg.dx;
      u_bar.noalias() += s * dg.du;
    }
  }
  if (!u_bar.isZero(0.0)) {
    vjp_accumulate(params, ws.tape, u_bar, x_bar, theta_bar);
  }
}

double quadrature_weight(const TrainConfig& cfg, double dt) {
  return cfg.quadrature == Quadrature::DtWeighted ? dt : 1.0;
}

void terminal_term(const ProblemSpec& p, const TrainConfig& cfg, const Vec& x,
                   Vec& a, LossReport& report) {
  if (cfg.mode != LossMode::NodecTerminal) return;
  report.stability += potential(x, p.x_star, p.P_phi);
  a += potential_grad(x, p.x_star, p.P_phi);
}

void finish(LossReport& r, LossMode mode) {
  r.mode = mode;
  r.total = r.stability + r.penalty;
}

void check_finite(const Vec& a, std::size_t i) {
  if (!a.allFinite()) {
    throw NonFiniteError(
        "costate became non-finite at grid index " + std::to_string(i),
        static_cast<std::ptrdiff_t>(i));
  }
}

}  // namespace

GradientResult loss_gradient_discrete(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const TrainConfig& cfg,
                                      const Vec& x_init) {
  const std::vector<Vec> states =
      rollout_states(p, params, x_init, cfg.segments);
  const int n = cfg.segments;
  const double dt = p.t_f / n;
  const double qw = quadrature_weight(cfg, dt);
  Workspace ws;

  GradientResult out;
  out.grad = Vec::Zero(params.theta.size());
  out.stored_states = states.size();
  Vec x_bar = Vec::Zero(p.n_x);
  terminal_term(p, cfg, states.back(), x_bar, out.report);

  Vec k1, k2, k3;
  for (int i = n - 1; i >= 0; --i) {
    const Vec& x = states[static_cast<std::size_t>(i)];
    const double t = i * dt;
    // Recompute the stages of step i.
    k1 = closed_loop_field(p, params, x, t);
    const Vec s2 = x + 0.5 * dt * k1;
    k2 = closed_loop_field(p, params, s2, t + 0.5 * dt);
    const Vec s3 = x + 0.5 * dt * k2;
    k3 = closed_loop_field(p, params, s3, t + 0.5 * dt);
    const Vec s4 = x + dt * k3;

    // Reverse of x' = x + dt/6 (k1 + 2 k2 + 2 k3 + k4).
    const Vec g = x_bar;
    Vec k4_bar = (dt / 6.0) * g;
    Vec k3_bar = (dt / 3.0) * g;
    Vec k2_bar = (dt / 3.0) * g;
    Vec k1_bar = (dt / 6.0) * g;
    Vec s_bar = Vec::Zero(p.n_x);

    closed_loop_vjp(p, params, s4, t + dt, k4_bar, s_bar, out.grad, ws);
    x_bar += s_bar;
    k3_bar += dt * s_bar;

    s_bar.setZero();
    closed_loop_vjp(p, params, s3, t + 0.5 * dt, k3_bar, s_bar, out.grad, ws);
    x_bar += s_bar;
    k2_bar += 0.5 * dt * s_bar;

    s_bar.setZero();
    closed_loop_vjp(p, params, s2, t + 0.5 * dt, k2_bar, s_bar, out.grad, ws);
    x_bar += s_bar;
    k1_bar += 0.5 * dt * s_bar;

    closed_loop_vjp(p, params, x, t, k1_bar, x_bar, out.grad, ws);

    sample_term(p, params, cfg, x, t, qw, dt, x_bar, out.grad, out.report, ws);
    check_finite(x_bar, static_cast<std::size_t>(i));
  }
  finish(out.report, cfg.mode);
  return out;
}

GradientResult loss_gradient_adjoint(const ProblemSpec& p,
                                     const PolicyParams& params,
                                     const TrainConfig& cfg,
                                     const Vec& x_init) {
  const std::vector<Vec> states =
      rollout_states(p, params, x_init, cfg.segments);
  const int n = cfg.segments;
  const double dt = p.t_f / n;
  const double qw = quadrature_weight(cfg, dt);
  Workspace ws;

  GradientResult out;
  out.grad = Vec::Zero(params.theta.size());
  out.stored_states = states.size();

  // Costate a(t) = dL/dx(t). Between loss samples it obeys
  // da/dt = -J_cl^T a, and dL/dtheta accumulates int a^T dF/dtheta dt.
  Vec a = Vec::Zero(p.n_x);
  terminal_term(p, cfg, states.back(), a, out.report);

  // Field value at the right end of the current segment, reused as the left
  // end of the next one (walking backward).
  Vec F_right = closed_loop_field(p, params, states.back(), p.t_f);
  Vec a_stage, ka1, ka2, ka3, ka4;
  Vec scratch(params.theta.size());
  for (int i = n - 1; i >= 0; --i) {
    const Vec& x_left = states[static_cast<std::size_t>(i)];
    const Vec& x_right = states[static_cast<std::size_t>(i) + 1];
    const double t_left = i * dt;
    const double t_right = t_left + dt;
    const double t_mid = t_left + 0.5 * dt;
    const Vec F_left = closed_loop_field(p, params, x_left, t_left);
    // Cubic Hermite midpoint from the stored endpoints and their slopes.
    const Vec x_mid = 0.5 * (x_left + x_right) + (dt / 8.0) * (F_left - F_right);

    // RK4 in reversed time s = t_right - t:  da/ds = J_cl^T a.
    // theta accumulates dt/6 (g1 + 2 g2 + 2 g3 + g4), g_k the stage vjps.
    auto stage_weighted = [&](const Vec& x, double t, const Vec& a_in,
                              double w, Vec& ka) {
      ka = Vec::Zero(p.n_x);
      scratch.setZero();
      closed_loop_vjp(p, params, x, t, a_in, ka, scratch, ws);
      out.grad.noalias() += w * scratch;
    };
    stage_weighted(x_right, t_right, a, dt / 6.0, ka1);
    a_stage = a + 0.5 * dt * ka1;
    stage_weighted(x_mid, t_mid, a_stage, dt / 3.0, ka2);
    a_stage = a + 0.5 * dt * ka2;
    stage_weighted(x_mid, t_mid, a_stage, dt / 3.0, ka3);
    a_stage = a + dt * ka3;
    stage_weighted(x_left, t_left, a_stage, dt / 6.0, ka4);
    a += (dt / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);

    // Loss sample at t_left enters as an impulse.
    sample_term(p, params, cfg, x_left, t_left, qw, dt, a, out.grad,
                out.report, ws);
    check_finite(a, static_cast<std::size_t>(i));
    F_right = F_left;
  }
  finish(out.report, cfg.mode);
  return out;
}

GradientResult loss_gradient(const ProblemSpec& p, const PolicyParams& params,
                             const TrainConfig& cfg, const Vec& x_init) {
  return cfg.grad_engine == GradEngine::Adjoint
             ? loss_gradient_adjoint(p, params, cfg, x_init)
             : loss_gradient_discrete(p, params, cfg, x_init);
}

SparseGradient finite_difference_gradient(
    const std::function<double(const Vec&)>& f, const Vec& theta,
    const std::vector<Eigen::Index>& coords, double h) {
  if (!(h > 0.0)) throw ValidationError("finite difference step must be > 0");
  SparseGradient out;
  Vec work = theta;
  for (Eigen::Index c : coords) {
    if (c < 0 || c >= theta.size()) {
      throw ValidationError("finite difference coordinate out of range");
    }
    work[c] = theta[c] + h;
    const double up = f(work);
    work[c] = theta[c] - h;
    const double down = f(work);
    work[c] = theta[c];
    out.coords.push_back(c);
    out.values.push_back((up - down) / (2.0 * h));
  }
  return out;
}

SparseGradient finite_difference_gradient(
    const ProblemSpec& p, const PolicyParams& params, const TrainConfig& cfg,
    const Vec& x_init, const std::vector<Eigen::Index>& coords, double h) {
  PolicyParams probe = params;
  return finite_difference_gradient(
      [&](const Vec& theta) {
        probe.theta = theta;
        return training_loss(p, probe, cfg, x_init).total;
      },
      params.theta, coords, h);
}

double min_kink_distance(const ProblemSpec& p, const PolicyParams& params,
                         const TrainConfig& cfg, const Vec& x_init) {
  if (cfg.mode != LossMode::LNodec) {
    return std::numeric_limits<double>::infinity();
  }
  const std::vector<Vec> states =
      rollout_states(p, params, x_init, cfg.segments);
  const double dt = p.t_f / cfg.segments;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    const Vec& x = states[i];
    const double t = static_cast<double>(i) * dt;
    const double z =
        potential_grad(x, p.x_star, p.P).dot(closed_loop_field(p, params, x, t)) +
        cfg.kappa * potential(x, p.x_star, p.P);
    best = std::min(best, std::abs(z));
  }
  return best;
}

double relative_error(const Vec& a, const Vec& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace lnodec

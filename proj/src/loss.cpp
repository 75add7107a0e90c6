#include "lnodec/loss.hpp"

#include <algorithm>
#include <cmath>

#include "lnodec/errors.hpp"

namespace lnodec {

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::LNodec:
      return "lnodec";
    case LossMode::NodecStage:
      return "nodec_stage";
    case LossMode::NodecTerminal:
      return "nodec_terminal";
  }
  return "unknown";
}

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "lnodec") return LossMode::LNodec;
  if (s == "nodec_stage") return LossMode::NodecStage;
  if (s == "nodec_terminal") return LossMode::NodecTerminal;
  throw ValidationError("unknown loss mode '" + s +
                        "' (lnodec|nodec_stage|nodec_terminal)");
}

std::string to_string(Quadrature q) {
  return q == Quadrature::DtWeighted ? "dt" : "sum";
}

Quadrature quadrature_from_string(const std::string& s) {
  if (s == "dt") return Quadrature::DtWeighted;
  if (s == "sum") return Quadrature::BareSum;
  throw ValidationError("unknown quadrature '" + s + "' (dt|sum)");
}

double potential(const Vec& x, const Vec& x_star, const Mat& P) {
  const Vec e = x - x_star;
  return e.dot(P * e);
}

Vec potential_grad(const Vec& x, const Vec& x_star, const Mat& P) {
  return 2.0 * (P * (x - x_star));
}

double pointwise_lyapunov(const ProblemSpec& p, const PolicyParams& params,
                          const Vec& x, double t, double kappa) {
  const Vec u = forward(params, x);
  const double vdot = potential_grad(x, p.x_star, p.P).dot(eval_F(p, x, u, t));
  return std::max(0.0, vdot + kappa * potential(x, p.x_star, p.P));
}

PointwiseParts pointwise_constrained(const ProblemSpec& p,
                                     const PolicyParams& params, const Vec& x,
                                     double t, double kappa, double beta) {
  PointwiseParts parts;
  const Vec u = forward(params, x);
  const double vdot = potential_grad(x, p.x_star, p.P).dot(eval_F(p, x, u, t));
  parts.stability =
      std::max(0.0, vdot + kappa * potential(x, p.x_star, p.P));
  if (beta > 0.0) {
    const double g = std::max(0.0, eval_constraint(p, x, u));
    parts.penalty = beta * g * g;
  }
  parts.value = parts.stability + parts.penalty;
  return parts;
}

namespace {

double segment_weight(const Trajectory& traj, Quadrature quad) {
  if (quad == Quadrature::BareSum || traj.times.size() < 2) return 1.0;
  return traj.times[1] - traj.times[0];
}

}  // namespace

LossReport lyapunov_loss(const Trajectory& traj, const ProblemSpec& p,
                         const PolicyParams& params, double kappa, double beta,
                         Quadrature quad) {
  LossReport r;
  r.mode = LossMode::LNodec;
  const double w = segment_weight(traj, quad);
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    const auto parts = pointwise_constrained(p, params, traj.states[i],
                                             traj.times[i], kappa, beta);
    r.stability += w * parts.stability;
    r.penalty += w * parts.penalty;
  }
  r.total = r.stability + r.penalty;
  return r;
}

double nodec_stage_loss(const Trajectory& traj, const Vec& x_star,
                        const Mat& P_ell) {
  const double w = segment_weight(traj, Quadrature::DtWeighted);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    sum += w * potential(traj.states[i], x_star, P_ell);
  }
  return sum;
}

double nodec_terminal_loss(const Trajectory& traj, const Vec& x_star,
                           const Mat& P_phi) {
  return potential(traj.states.back(), x_star, P_phi);
}

double constraint_penalty(const Trajectory& traj, const ProblemSpec& p,
                          double beta, Quadrature quad) {
  if (beta <= 0.0) return 0.0;
  const double w = segment_weight(traj, quad);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    const double g =
        std::max(0.0, eval_constraint(p, traj.states[i], traj.controls[i]));
    sum += w * beta * g * g;
  }
  return sum;
}

double stability_envelope(double V0, double kappa, double t) {
  return V0 * std::exp(-kappa * t);
}

}  // namespace lnodec

#pragma once

#include <string>

#include "lnodec/dynamics.hpp"
#include "lnodec/policy.hpp"
#include "lnodec/simulate.hpp"

namespace lnodec {

enum class LossMode { LNodec, NodecStage, NodecTerminal };

std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);

/// How the discretized losses combine grid samples.
enum class Quadrature {
  DtWeighted,  // sum_i value_i * (t_f / segments), approximates the integral
  BareSum,     // sum_i value_i
};

std::string to_string(Quadrature q);
Quadrature quadrature_from_string(const std::string& s);

/// In NODEC modes `stability` holds the stage/terminal cost.
struct LossReport {
  double total = 0.0;
  double stability = 0.0;
  double penalty = 0.0;
  LossMode mode = LossMode::LNodec;
};

/// V(x) = (x - x*)^T P (x - x*).
double potential(const Vec& x, const Vec& x_star, const Mat& P);
/// 2 P (x - x*), P symmetric.
Vec potential_grad(const Vec& x, const Vec& x_star, const Mat& P);

/// max{0, dV/dx . F(x, pi(x)) + kappa V(x)}.
double pointwise_lyapunov(const ProblemSpec& p, const PolicyParams& params,
                          const Vec& x, double t, double kappa);

struct PointwiseParts {
  double value = 0.0;
  double stability = 0.0;
  double penalty = 0.0;
};

/// Lyapunov term plus beta * max{0, g(x, pi(x))}^2.
PointwiseParts pointwise_constrained(const ProblemSpec& p,
                                     const PolicyParams& params, const Vec& x,
                                     double t, double kappa, double beta);

/// Sum of pointwise_constrained over the left endpoints of `traj`.
LossReport lyapunov_loss(const Trajectory& traj, const ProblemSpec& p,
                         const PolicyParams& params, double kappa, double beta,
                         Quadrature quad = Quadrature::DtWeighted);

/// Left-endpoint Riemann sum of (x - x*)^T P_ell (x - x*) dt.
double nodec_stage_loss(const Trajectory& traj, const Vec& x_star,
                        const Mat& P_ell);

/// (x(t_f) - x*)^T P_phi (x(t_f) - x*).
double nodec_terminal_loss(const Trajectory& traj, const Vec& x_star,
                           const Mat& P_phi);

/// Left-endpoint sum of beta * max{0, g}^2 along the trajectory's controls.
double constraint_penalty(const Trajectory& traj, const ProblemSpec& p,
                          double beta, Quadrature quad = Quadrature::DtWeighted);

/// V0 exp(-kappa t).
double stability_envelope(double V0, double kappa, double t);

}  // namespace lnodec

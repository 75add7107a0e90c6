#include "lnodec/train_config.hpp"

#include "lnodec/errors.hpp"
#include "lnodec/simulate.hpp"

namespace lnodec {

std::string to_string(GradEngine e) {
  return e == GradEngine::Discrete ? "discrete" : "adjoint";
}

GradEngine grad_engine_from_string(const std::string& s) {
  if (s == "discrete") return GradEngine::Discrete;
  if (s == "adjoint") return GradEngine::Adjoint;
  throw ValidationError("unknown grad engine '" + s + "' (discrete|adjoint)");
}

std::string to_string(Optimizer o) {
  return o == Optimizer::Adam ? "adam" : "gd";
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "gd") return Optimizer::GradientDescent;
  throw ValidationError("unknown optimizer '" + s + "' (adam|gd)");
}

void validate(const TrainConfig& cfg) {
  if (cfg.iterations < 1) throw ValidationError("train.iterations must be >= 1");
  if (cfg.segments < 1) throw ValidationError("train.segments must be >= 1");
  if (!(cfg.learning_rate > 0.0)) {
    throw ValidationError("train.learning_rate must be > 0");
  }
  if (!(cfg.kappa > 0.0)) throw ValidationError("train.kappa must be > 0");
  if (!(cfg.beta >= 0.0)) throw ValidationError("train.beta must be >= 0");
  for (int w : cfg.arch.hidden) {
    if (w < 1) throw ValidationError("train.hidden widths must be >= 1");
  }
}

LossReport training_loss(const ProblemSpec& p, const PolicyParams& params,
                         const TrainConfig& cfg, const Vec& x_init) {
  const double beta = cfg.effective_beta();
  const Trajectory traj = rollout(p, params, x_init, cfg.segments,
                                  LossWeights{cfg.kappa, beta});
  if (cfg.mode == LossMode::LNodec) {
    return lyapunov_loss(traj, p, params, cfg.kappa, beta, cfg.quadrature);
  }
  LossReport r;
  r.mode = cfg.mode;
  r.stability = cfg.mode == LossMode::NodecStage
                    ? nodec_stage_loss(traj, p.x_star, p.P_ell)
                    : nodec_terminal_loss(traj, p.x_star, p.P_phi);
  r.penalty = constraint_penalty(traj, p, beta, cfg.quadrature);
  r.total = r.stability + r.penalty;
  return r;
}

}  // namespace lnodec

#pragma once

#include <cstdint>
#include <string>

#include "lnodec/loss.hpp"
#include "lnodec/policy.hpp"

namespace lnodec {

enum class GradEngine { Discrete, Adjoint };
enum class Optimizer { Adam, GradientDescent };

std::string to_string(GradEngine e);
GradEngine grad_engine_from_string(const std::string& s);
std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

/// Defaults reproduce the double-integrator study.
struct TrainConfig {
  int iterations = 400;  // M
  int segments = 500;    // Gamma
  double learning_rate = 0.025;
  double kappa = 5.0;
  double beta = 5.0;
  LossMode mode = LossMode::LNodec;
  bool constrained = false;
  std::uint64_t seed = 0;
  GradEngine grad_engine = GradEngine::Discrete;
  Optimizer optimizer = Optimizer::Adam;
  Quadrature quadrature = Quadrature::DtWeighted;
  PolicyArch arch;

  /// beta when the constraint penalty is active, 0 otherwise.
  double effective_beta() const { return constrained ? beta : 0.0; }
};

/// Throws ValidationError naming the first violated invariant.
void validate(const TrainConfig& cfg);

/// Rolls out from x_init and evaluates the objective selected by cfg.mode.
LossReport training_loss(const ProblemSpec& p, const PolicyParams& params,
                         const TrainConfig& cfg, const Vec& x_init);

}  // namespace lnodec

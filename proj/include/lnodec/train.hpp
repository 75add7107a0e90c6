#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lnodec/grad.hpp"
#include "lnodec/train_config.hpp"

namespace lnodec {

struct AdamState {
  Vec m;
  Vec v;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index n) {
    return AdamState{Vec::Zero(n), Vec::Zero(n)};
  }
};

/// Bias-corrected Adam step, in place.
void adam_update(Vec& theta, const Vec& grad, AdamState& st, double alpha);

struct TrainResult {
  PolicyParams params;
  std::vector<LossReport> history;  // one entry per iteration, pre-update
};

using TrainProgress = std::function<void(int iteration, const LossReport&)>;

/// Policy learning loop: rollout from p.x0, loss per cfg.mode, gradient,
/// optimizer step; exactly cfg.iterations iterations, deterministic in
/// cfg.seed. A DomainError aborts the run with the iteration in its message.
TrainResult train_policy(const ProblemSpec& p, const TrainConfig& cfg,
                         const TrainProgress& progress = {});

/// Continues training from given parameters (same loop as train_policy).
TrainResult train_policy_from(const ProblemSpec& p, const TrainConfig& cfg,
                              PolicyParams init,
                              const TrainProgress& progress = {});

/// "iter,total,stability,penalty" rows.
std::string history_csv(const std::vector<LossReport>& history);

}  // namespace lnodec

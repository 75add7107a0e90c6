#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lnodec/train_config.hpp"

namespace lnodec {

struct GradientResult {
  Vec grad;           // d loss / d theta
  LossReport report;  // loss of the forward pass
  /// Forward states the engine retained for its backward sweep.
  std::size_t stored_states = 0;
};

/// Reverse-mode differentiation through every RK4 stage of the rollout.
/// Exact for the computed discretized loss.
GradientResult loss_gradient_discrete(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const TrainConfig& cfg,
                                      const Vec& x_init);

/// Continuous adjoint: integrates the costate backward from t_f with RK4 on
/// the stored state grid, adding each loss sample as an impulse.
GradientResult loss_gradient_adjoint(const ProblemSpec& p,
                                     const PolicyParams& params,
                                     const TrainConfig& cfg, const Vec& x_init);

/// Dispatches on cfg.grad_engine.
GradientResult loss_gradient(const ProblemSpec& p, const PolicyParams& params,
                             const TrainConfig& cfg, const Vec& x_init);

struct SparseGradient {
  std::vector<Eigen::Index> coords;
  std::vector<double> values;
};

/// Central differences of `f` at theta for the listed coordinates.
SparseGradient finite_difference_gradient(
    const std::function<double(const Vec&)>& f, const Vec& theta,
    const std::vector<Eigen::Index>& coords, double h);

/// Central differences of the training loss.
SparseGradient finite_difference_gradient(
    const ProblemSpec& p, const PolicyParams& params, const TrainConfig& cfg,
    const Vec& x_init, const std::vector<Eigen::Index>& coords, double h);

/// Smallest |dV/dx . F + kappa V| over the loss samples. Near zero the
/// max{0, .} kink makes finite differences unreliable.
double min_kink_distance(const ProblemSpec& p, const PolicyParams& params,
                         const TrainConfig& cfg, const Vec& x_init);

/// ||a - b|| / max(||b||, tiny) over the given vectors.
double relative_error(const Vec& a, const Vec& b);

}  // namespace lnodec

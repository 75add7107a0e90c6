#pragma once

#include <cmath>
#include <random>

#include "lnodec/dynamics.hpp"
#include "lnodec/policy.hpp"

namespace lnodec::testing {

inline PolicyArch default_arch(const ProblemSpec& p) {
  PolicyArch a;
  a.n_in = p.n_x;
  a.n_out = p.n_u;
  return a;
}

/// All weights zero and output bias chosen so that the policy returns u.
inline PolicyParams constant_policy(const ProblemSpec& p, double u) {
  PolicyParams params = zero_params(default_arch(p), p.u_lb, p.u_ub);
  const double s = (u - p.u_lb[0]) / (p.u_ub[0] - p.u_lb[0]);
  params.theta[params.theta.size() - 1] = std::log(s / (1.0 - s));
  return params;
}

/// Small random weights and biases, drawn independently of init_params.
inline PolicyParams small_random_policy(const ProblemSpec& p, unsigned seed,
                                        double scale = 0.3) {
  PolicyParams params = zero_params(default_arch(p), p.u_lb, p.u_ub,
                                    p.policy_input_shift);
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) params.theta[i] = n(rng);
  return params;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace lnodec::testing

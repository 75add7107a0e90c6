#include "lnodec/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "lnodec/errors.hpp"

namespace lnodec {

void adam_update(Vec& theta, const Vec& grad, AdamState& st, double alpha) {
  if (st.m.size() != theta.size()) st = AdamState::zeros(theta.size());
  ++st.step_count;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  theta.array() -=
      alpha * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

TrainResult train_policy_from(const ProblemSpec& p, const TrainConfig& cfg,
                              PolicyParams init,
                              const TrainProgress& progress) {
  validate(cfg);
  validate(p);
  validate(init);
  TrainResult result{std::move(init), {}};
  result.history.reserve(static_cast<std::size_t>(cfg.iterations));
  AdamState adam = AdamState::zeros(result.params.theta.size());
  for (int k = 0; k < cfg.iterations; ++k) {
    GradientResult g;
    try {
      g = loss_gradient(p, result.params, cfg, p.x0);
    } catch (const DomainError& e) {
      throw DomainError("training iteration " + std::to_string(k) + ": " +
                            e.what(),
                        e.time(), e.index());
    }
    result.history.push_back(g.report);
    if (progress) progress(k, g.report);
    if (cfg.optimizer == Optimizer::Adam) {
      adam_update(result.params.theta, g.grad, adam, cfg.learning_rate);
    } else {
      result.params.theta -= cfg.learning_rate * g.grad;
    }
  }
  return result;
}

TrainResult train_policy(const ProblemSpec& p, const TrainConfig& cfg,
                         const TrainProgress& progress) {
  PolicyArch arch = cfg.arch;
  arch.n_in = p.n_x;
  arch.n_out = p.n_u;
  return train_policy_from(p, cfg, init_params(arch, p.u_lb, p.u_ub, cfg.seed,
                                       p.policy_input_shift),
                           progress);
}

std::string history_csv(const std::vector<LossReport>& history) {
  std::ostringstream os;
  os << "iter,total,stability,penalty\n";
  char buf[96];
  for (std::size_t k = 0; k < history.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", k, history[k].total,
                  history[k].stability, history[k].penalty);
    os << buf;
  }
  return os.str();
}

}  // namespace lnodec

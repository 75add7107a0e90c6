#include <doctest.h>

#include <cmath>

#include "lnodec/errors.hpp"
#include "lnodec/train.hpp"
#include "test_support.hpp"

using namespace lnodec;
using lnodec::testing::small_random_policy;

TEST_SUITE("train") {

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  Vec theta{{1.0, -2.0, 3.0}};
  AdamState st = AdamState::zeros(3);
  adam_update(theta, Vec::Zero(3), st, 0.025);
  CHECK(theta == Vec{{1.0, -2.0, 3.0}});
  CHECK(st.step_count == 1);
}

TEST_CASE("first adam step has magnitude alpha and opposes the gradient") {
  Vec theta = Vec::Zero(3);
  AdamState st = AdamState::zeros(3);
  adam_update(theta, Vec{{1.0, -4.0, 0.5}}, st, 0.025);
  const double step = 0.025 * (1.0 / (1.0 + 1e-8));
  CHECK(theta[0] == doctest::Approx(-step).epsilon(1e-12));
  CHECK(theta[1] == doctest::Approx(step).epsilon(1e-7));
  CHECK(theta[2] == doctest::Approx(-step).epsilon(1e-7));
  CHECK((st.v.array() >= 0.0).all());
}

TEST_CASE("adam matches a scalar reference over several steps") {
  double th = 0.5;
  double m = 0.0;
  double v = 0.0;
  Vec theta = Vec::Constant(1, 0.5);
  AdamState st = AdamState::zeros(1);
  for (int k = 1; k <= 10; ++k) {
    const double g = 2.0 * th - 0.3;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, k));
    const double vh = v / (1.0 - std::pow(0.999, k));
    th -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    adam_update(theta, Vec::Constant(1, 2.0 * theta[0] - 0.3), st, 0.01);
    CHECK(theta[0] == doctest::Approx(th).epsilon(1e-14));
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.iterations = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.segments = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.kappa = -1.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.beta = -1.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = TrainConfig{};
  CHECK(cfg.iterations == 400);
  CHECK(cfg.segments == 500);
  CHECK(cfg.learning_rate == 0.025);
  CHECK(cfg.kappa == 5.0);
  CHECK(cfg.beta == 5.0);
  CHECK(cfg.effective_beta() == 0.0);
  cfg.constrained = true;
  CHECK(cfg.effective_beta() == 5.0);
}

TEST_CASE("short training run is deterministic and records every iteration") {
  const ProblemSpec p = double_integrator();
  TrainConfig cfg;
  cfg.iterations = 15;
  cfg.segments = 50;
  cfg.seed = 4;
  const TrainResult a = train_policy(p, cfg);
  const TrainResult b = train_policy(p, cfg);
  CHECK(a.history.size() == 15);
  CHECK(a.params.theta == b.params.theta);
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].total == b.history[k].total);
  }
  CHECK(a.history.front().total > 0.0);
  CHECK(a.history.back().total < a.history.front().total);
  cfg.grad_engine = GradEngine::Adjoint;
  const TrainResult c = train_policy(p, cfg);
  CHECK((c.params.theta - a.params.theta).norm() <= 1e-3 * a.params.theta.norm());
  CHECK(c.history.back().total ==
        doctest::Approx(a.history.back().total).epsilon(1e-3));
}

TEST_CASE("gradient descent option applies theta -= alpha grad") {
  const ProblemSpec p = double_integrator();
  TrainConfig cfg;
  cfg.iterations = 1;
  cfg.segments = 20;
  cfg.optimizer = Optimizer::GradientDescent;
  cfg.learning_rate = 0.01;
  const PolicyParams init = small_random_policy(p, 2);
  const TrainResult r = train_policy_from(p, cfg, init);
  const Vec g = loss_gradient(p, init, cfg, p.x0).grad;
  CHECK((r.params.theta - (init.theta - 0.01 * g)).norm() == 0.0);
}

TEST_CASE("terminal mode ignores interior samples") {
  const ProblemSpec p = double_integrator();
  const PolicyParams params = small_random_policy(p, 5);
  TrainConfig cfg;
  cfg.mode = LossMode::NodecTerminal;
  cfg.segments = 30;
  const Trajectory tr = rollout(p, params, p.x0, 30);
  Trajectory edited = tr;
  edited.states[10] += Vec{{0.3, -0.2}};
  CHECK(nodec_terminal_loss(edited, p.x_star, p.P_phi) ==
        nodec_terminal_loss(tr, p.x_star, p.P_phi));
}

TEST_CASE("domain failures abort training with the iteration index") {
  ProblemSpec p = double_integrator();
  p.domain_guard.hi[1] = 0.5;
  TrainConfig cfg;
  cfg.iterations = 3;
  cfg.segments = 50;
  try {
    const PolicyParams push = lnodec::testing::constant_policy(p, 9.0);
    train_policy_from(p, cfg, push);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("training iteration 0") != std::string::npos);
  }
}

TEST_CASE("history CSV") {
  std::vector<LossReport> h(2);
  h[0].total = 1.5;
  h[0].stability = 1.0;
  h[0].penalty = 0.5;
  CHECK(history_csv(h) == "iter,total,stability,penalty\n0,1.5,1,0.5\n1,0,0,0\n");
}

}

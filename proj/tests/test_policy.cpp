#include <doctest.h>

#include <cmath>
#include <random>

#include "lnodec/errors.hpp"
#include "lnodec/policy.hpp"
#include "test_support.hpp"

using namespace lnodec;
using lnodec::testing::small_random_policy;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

/// Plain loop implementation of the network, used as an oracle for forward.
double forward_oracle(const PolicyParams& p, const Vec& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (int k = 0; k < x.size(); ++k) a[k] -= p.input_shift[k];
  std::size_t off = 0;
  std::vector<int> widths{p.arch.n_in};
  for (int h : p.arch.hidden) widths.push_back(h);
  widths.push_back(p.arch.n_out);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    std::vector<double> z(out, 0.0);
    for (int o = 0; o < out; ++o) {
      for (int i = 0; i < in; ++i) z[o] += p.theta[off + o * in + i] * a[i];
    }
    off += static_cast<std::size_t>(in * out);
    for (int o = 0; o < out; ++o) z[o] += p.theta[off + o];
    off += static_cast<std::size_t>(out);
    if (l + 2 < widths.size()) {
      for (double& v : z) v = std::tanh(v);
    }
    a = z;
  }
  return p.u_lb[0] + (p.u_ub[0] - p.u_lb[0]) / (1.0 + std::exp(-a[0]));
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("parameter count of the 2-32-32-32-1 network is 2241") {
  PolicyArch a;
  CHECK(a.num_params() == 2 * 32 + 32 + 32 * 32 + 32 + 32 * 32 + 32 + 32 * 1 + 1);
  CHECK(a.num_params() == 2241);
  CHECK(init_params(a, v1(-10), v1(10), 0).theta.size() == 2241);
}

TEST_CASE("init_params is deterministic, Glorot bounded, with zero biases") {
  PolicyArch a;
  const PolicyParams p1 = init_params(a, v1(-10), v1(10), 42);
  const PolicyParams p2 = init_params(a, v1(-10), v1(10), 42);
  const PolicyParams p3 = init_params(a, v1(-10), v1(10), 43);
  CHECK(p1.theta == p2.theta);
  CHECK(p1.theta != p3.theta);
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const int in = a.layer_in(l);
    const int out = a.layer_out(l);
    const double s = std::sqrt(6.0 / (in + out));
    const Eigen::Index off = a.layer_offset(l);
    CHECK(p1.theta.segment(off, in * out).cwiseAbs().maxCoeff() <= s);
    CHECK(p1.theta.segment(off + in * out, out).isZero(0.0));
  }
}

TEST_CASE("zero parameters output the bound midpoint") {
  PolicyArch a;
  CHECK(forward(zero_params(a, v1(-10), v1(10)), Vec{{0.3, -7.0}})[0] == 0.0);
  CHECK(forward(zero_params(a, v1(1), v1(5)), Vec{{37.0, 0.0}})[0] == 3.0);
}

TEST_CASE("saturated output approaches the upper bound") {
  PolicyArch a;
  PolicyParams p = zero_params(a, v1(-10), v1(10));
  p.theta[p.theta.size() - 1] = 50.0;
  CHECK(forward(p, Vec{{0.0, 0.0}})[0] == doctest::Approx(10.0).epsilon(1e-15));
  p.theta[p.theta.size() - 1] = -800.0;
  CHECK(std::isfinite(forward(p, Vec{{0.0, 0.0}})[0]));
}

TEST_CASE("forward agrees with a loop implementation") {
  for (const ProblemSpec& prob : {double_integrator(), plasma()}) {
    for (unsigned s = 0; s < 5; ++s) {
      const PolicyParams p = small_random_policy(prob, s, 0.5);
      const Vec x = prob.x0 + Vec{{0.1 * s, -0.05 * s}};
      CHECK(forward(p, x)[0] == doctest::Approx(forward_oracle(p, x)).epsilon(1e-13));
    }
  }
}

TEST_CASE("output stays strictly inside the bounds") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nx(0.0, 3.0);
  const ProblemSpec prob = double_integrator();
  for (unsigned s = 0; s < 100; ++s) {
    const PolicyParams p = small_random_policy(prob, s, 0.4);
    for (int k = 0; k < 100; ++k) {
      const double u = forward(p, Vec{{nx(rng), nx(rng)}})[0];
      CHECK(u > -10.0);
      CHECK(u < 10.0);
    }
  }
}

TEST_CASE("vjp matches central differences in x and theta") {
  std::mt19937_64 rng(5);
  for (const ProblemSpec& prob : {double_integrator(), plasma()}) {
    for (unsigned s = 0; s < 3; ++s) {
      PolicyParams p = small_random_policy(prob, 100 + s, 0.3);
      const Vec x = prob.x0 + Vec{{0.2, 0.1}};
      const PolicyVjp g = vjp(p, x, v1(1.0));
      for (int j = 0; j < 2; ++j) {
        const double h = 1e-6;
        Vec xp = x;
        Vec xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (forward(p, xp)[0] - forward(p, xm)[0]) / (2 * h);
        CHECK(std::abs(g.x_bar[j] - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
      }
      std::uniform_int_distribution<Eigen::Index> pick(0, p.theta.size() - 1);
      Vec a(20);
      Vec b(20);
      for (int k = 0; k < 20; ++k) {
        const Eigen::Index i = pick(rng);
        const double t0 = p.theta[i];
        const double h = 1e-6;
        p.theta[i] = t0 + h;
        const double fp = forward(p, x)[0];
        p.theta[i] = t0 - h;
        const double fm = forward(p, x)[0];
        p.theta[i] = t0;
        a[k] = g.theta_bar[i];
        b[k] = (fp - fm) / (2 * h);
      }
      CHECK((a - b).norm() <= 1e-6 * b.norm());
    }
  }
}

TEST_CASE("vjp is linear in the cotangent") {
  const ProblemSpec prob = double_integrator();
  const PolicyParams p = small_random_policy(prob, 9);
  const Vec x{{0.4, -0.3}};
  const PolicyVjp z = vjp(p, x, v1(0.0));
  CHECK(z.x_bar.isZero(0.0));
  CHECK(z.theta_bar.isZero(0.0));
  const PolicyVjp g1 = vjp(p, x, v1(1.0));
  const PolicyVjp g3 = vjp(p, x, v1(-2.5));
  CHECK((g3.theta_bar + 2.5 * g1.theta_bar).norm() <= 1e-15 * g1.theta_bar.norm() * 10);
  CHECK((g3.x_bar + 2.5 * g1.x_bar).norm() <= 1e-15 * g1.x_bar.norm() * 10);
}

TEST_CASE("input Jacobian stays finite on the test domain") {
  const ProblemSpec prob = double_integrator();
  const PolicyParams p = init_params(PolicyArch{}, v1(-10), v1(10), 3);
  for (double a = -2.0; a <= 2.0; a += 0.5) {
    for (double b = -3.0; b <= 3.0; b += 0.5) {
      const Vec g = vjp(p, Vec{{a, b}}, v1(1.0)).x_bar;
      CHECK(g.allFinite());
      CHECK(g.norm() < 1e3);
    }
  }
}

TEST_CASE("input shift is subtracted before the first layer") {
  const ProblemSpec prob = plasma();
  PolicyParams shifted = small_random_policy(prob, 4);
  PolicyParams plain = shifted;
  plain.input_shift = Vec::Zero(2);
  const Vec x{{38.0, 0.7}};
  CHECK(forward(shifted, x)[0] == forward(plain, Vec(x - shifted.input_shift))[0]);
}

TEST_CASE("validation rejects inconsistent parameters") {
  PolicyParams p = zero_params(PolicyArch{}, v1(-1), v1(1));
  PolicyParams bad = p;
  bad.theta.conservativeResize(10);
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = p;
  bad.theta[3] = std::nan("");
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = p;
  bad.u_lb[0] = 2.0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = p;
  bad.arch.hidden = {32, 0, 32};
  CHECK_THROWS_AS(validate(bad), ValidationError);
  CHECK_THROWS_AS(activation_from_string("relu"), ValidationError);
}

}

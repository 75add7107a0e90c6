#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace lnodec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class SystemKind { DoubleIntegrator, Plasma };

/// Pure-state upper bound g(x, u) = x[component] - upper <= 0.
struct StateUpperBound {
  Eigen::Index component = 0;
  double upper = 0.0;
};

/// Admissible region for evaluating the dynamics: lo < x <= hi elementwise.
struct DomainGuard {
  Vec lo;
  Vec hi;

  bool contains(const Vec& x) const;
};

/// A control-affine optimal control problem  xdot = f(x, t) + h(x, t) u.
struct ProblemSpec {
  std::string name;
  SystemKind kind = SystemKind::DoubleIntegrator;
  int n_x = 0;
  int n_u = 0;
  Vec x0;
  Vec x_star;
  double t_f = 1.0;
  Vec u_lb;
  Vec u_ub;
  Mat P;      // potential weight
  Mat P_ell;  // stage cost weight
  Mat P_phi;  // terminal cost weight
  std::optional<StateUpperBound> constraint;
  DomainGuard domain_guard;
  /// Reference state subtracted from x before it enters the policy network.
  Vec policy_input_shift;
};

/// Position/velocity double integrator, u in [-10, 10], velocity <= 2.8 m/s.
ProblemSpec double_integrator();

/// Cold-plasma thermal dose model: x = (surface temperature degC, CEM min),
/// u = power in [1, 5] W, temperature <= 45 degC, horizon 100 s.
ProblemSpec plasma();

/// Looks up a preset by name ("double_integrator" or "plasma").
ProblemSpec problem_by_name(std::string_view name);

/// Throws ValidationError when a ProblemSpec invariant does not hold.
void validate(const ProblemSpec& p);

Vec eval_drift(const ProblemSpec& p, const Vec& x, double t);
Mat eval_input_map(const ProblemSpec& p, const Vec& x, double t);
Vec eval_F(const ProblemSpec& p, const Vec& x, const Vec& u, double t);

/// g(x, u); positive means violated. Returns -inf when the problem has no
/// constraint.
double eval_constraint(const ProblemSpec& p, const Vec& x, const Vec& u);

/// Gradients of g with respect to x and u (zero when unconstrained).
struct ConstraintGradient {
  Vec dx;
  Vec du;
};
ConstraintGradient constraint_gradient(const ProblemSpec& p, const Vec& x,
                                       const Vec& u);

/// dF/dx with u held fixed.
Mat jac_F_x(const ProblemSpec& p, const Vec& x, const Vec& u, double t);

}  // namespace lnodec

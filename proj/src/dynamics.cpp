#include "lnodec/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lnodec/errors.hpp"

namespace lnodec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Plasma model coefficients.
constexpr double kPowerGain = 3.1981;
constexpr double kLossGain = 0.8088;
constexpr double kAmbientLog = 25.0;
constexpr double kSingularLog = 35.0;
constexpr double kReferenceTemp = 43.0;

void check_domain(const ProblemSpec& p, const Vec& x, double t) {
  if (!p.domain_guard.contains(x)) {
    std::ostringstream os;
    os << p.name << ": state (" << x.transpose() << ") outside domain guard";
    throw DomainError(os.str(), t);
  }
}

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

bool DomainGuard::contains(const Vec& x) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !(x[i] > lo[i]) || !(x[i] <= hi[i])) {
      return false;
    }
  }
  return true;
}

ProblemSpec double_integrator() {
  ProblemSpec p;
  p.name = "double_integrator";
  p.kind = SystemKind::DoubleIntegrator;
  p.n_x = 2;
  p.n_u = 1;
  p.x0 = Vec::Zero(2);
  p.x_star = Vec{{1.0, 0.0}};
  p.t_f = 1.5;
  p.u_lb = Vec::Constant(1, -10.0);
  p.u_ub = Vec::Constant(1, 10.0);
  p.P = diag2(1.0, 1e-6);
  p.P_ell = p.P;
  p.P_phi = p.P;
  p.constraint = StateUpperBound{1, 2.8};
  p.domain_guard.lo = Vec::Constant(2, -1e6);
  p.domain_guard.hi = Vec::Constant(2, 1e6);
  p.policy_input_shift = Vec::Zero(2);
  return p;
}

ProblemSpec plasma() {
  ProblemSpec p;
  p.name = "plasma";
  p.kind = SystemKind::Plasma;
  p.n_x = 2;
  p.n_u = 1;
  p.x0 = Vec{{37.0, 0.0}};
  p.x_star = Vec{{37.0, 1.5}};
  p.t_f = 100.0;
  p.u_lb = Vec::Constant(1, 1.0);
  p.u_ub = Vec::Constant(1, 5.0);
  p.P = diag2(1e-10, 1e-2);
  p.P_ell = p.P;
  p.P_phi = p.P;
  p.constraint = StateUpperBound{0, 45.0};
  p.domain_guard.lo = Vec{{kSingularLog + 1e-6, -1e6}};
  p.domain_guard.hi = Vec{{100.0, 1e6}};
  // Raw temperatures near 37 degC would saturate the first tanh layer.
  p.policy_input_shift = p.x_star;
  return p;
}

ProblemSpec problem_by_name(std::string_view name) {
  if (name == "double_integrator") return double_integrator();
  if (name == "plasma") return plasma();
  throw ValidationError("unknown problem preset '" + std::string(name) + "'");
}

void validate(const ProblemSpec& p) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  require(p.n_x >= 1 && p.n_u >= 1, "problem dimensions must be >= 1");
  require(p.x0.size() == p.n_x && p.x_star.size() == p.n_x,
          "x0/x_star must have n_x entries");
  require(p.u_lb.size() == p.n_u && p.u_ub.size() == p.n_u,
          "input bounds must have n_u entries");
  require((p.u_lb.array() < p.u_ub.array()).all(), "u_lb < u_ub violated");
  require(p.t_f > 0.0, "t_f must be positive");
  for (const Mat* m : {&p.P, &p.P_ell, &p.P_phi}) {
    require(m->rows() == p.n_x && m->cols() == p.n_x,
            "weight matrices must be n_x x n_x");
    require(m->isApprox(m->transpose(), 0.0), "weight matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(*m);
    require(es.eigenvalues().minCoeff() > 0.0,
            "weight matrix not positive definite");
  }
  require(p.policy_input_shift.size() == p.n_x &&
              p.policy_input_shift.allFinite(),
          "policy_input_shift must have n_x finite entries");
  require(p.domain_guard.contains(p.x0), "x0 outside domain guard");
  require(p.domain_guard.contains(p.x_star), "x_star outside domain guard");
  if (p.constraint) {
    require(p.constraint->component >= 0 && p.constraint->component < p.n_x,
            "constraint component out of range");
  }
}

Vec eval_drift(const ProblemSpec& p, const Vec& x, double t) {
  check_domain(p, x, t);
  switch (p.kind) {
    case SystemKind::DoubleIntegrator:
      return Vec{{x[1], 0.0}};
    case SystemKind::Plasma: {
      const double denom =
          std::log(x[0] - kAmbientLog) - std::log(x[0] - kSingularLog);
      return Vec{{-kLossGain / denom,
                  std::pow(0.5, kReferenceTemp - x[0]) / 60.0}};
    }
  }
  return Vec::Zero(p.n_x);
}

Mat eval_input_map(const ProblemSpec& p, const Vec& x, double t) {
  check_domain(p, x, t);
  Mat h = Mat::Zero(p.n_x, p.n_u);
  switch (p.kind) {
    case SystemKind::DoubleIntegrator:
      h(1, 0) = 1.0;
      break;
    case SystemKind::Plasma:
      h(0, 0) = 1.0 / kPowerGain;
      break;
  }
  return h;
}

Vec eval_F(const ProblemSpec& p, const Vec& x, const Vec& u, double t) {
  return eval_drift(p, x, t) + eval_input_map(p, x, t) * u;
}

double eval_constraint(const ProblemSpec& p, const Vec& x, const Vec& /*u*/) {
  if (!p.constraint) return -kInf;
  return x[p.constraint->component] - p.constraint->upper;
}

ConstraintGradient constraint_gradient(const ProblemSpec& p, const Vec& /*x*/,
                                       const Vec& /*u*/) {
  ConstraintGradient g{Vec::Zero(p.n_x), Vec::Zero(p.n_u)};
  if (p.constraint) g.dx[p.constraint->component] = 1.0;
  return g;
}

Mat jac_F_x(const ProblemSpec& p, const Vec& x, const Vec& /*u*/, double t) {
  check_domain(p, x, t);
  Mat J = Mat::Zero(p.n_x, p.n_x);
  switch (p.kind) {
    case SystemKind::DoubleIntegrator:
      J(0, 1) = 1.0;
      break;
    case SystemKind::Plasma: {
      const double a = x[0] - kAmbientLog;
      const double b = x[0] - kSingularLog;
      const double denom = std::log(a) - std::log(b);
      // d/dx1 [-c / D(x1)] = c D'(x1) / D^2,  D' = 1/a - 1/b
      J(0, 0) = kLossGain * (1.0 / a - 1.0 / b) / (denom * denom);
      J(1, 0) = std::log(2.0) * std::pow(0.5, kReferenceTemp - x[0]) / 60.0;
      break;
    }
  }
  return J;
}

}  // namespace lnodec

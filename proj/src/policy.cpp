#include "lnodec/policy.hpp"

#include <cmath>
#include <random>

#include "lnodec/errors.hpp"

namespace lnodec {

namespace {

using RowMajorMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMat>;
using Weights = Eigen::Map<RowMajorMat>;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  throw ValidationError("unknown activation '" + s + "'");
}

int PolicyArch::layer_in(std::size_t layer) const {
  return layer == 0 ? n_in : hidden[layer - 1];
}

int PolicyArch::layer_out(std::size_t layer) const {
  return layer < hidden.size() ? hidden[layer] : n_out;
}

Eigen::Index PolicyArch::layer_offset(std::size_t layer) const {
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    off += static_cast<Eigen::Index>(layer_in(l) + 1) * layer_out(l);
  }
  return off;
}

Eigen::Index PolicyArch::num_params() const {
  return layer_offset(num_layers());
}

bool operator==(const PolicyArch& a, const PolicyArch& b) {
  return a.n_in == b.n_in && a.hidden == b.hidden && a.n_out == b.n_out &&
         a.activation == b.activation;
}

void validate(const PolicyParams& params) {
  const auto& arch = params.arch;
  if (arch.n_in < 1 || arch.n_out < 1) {
    throw ValidationError("policy widths must be >= 1");
  }
  for (int w : arch.hidden) {
    if (w < 1) throw ValidationError("policy hidden widths must be >= 1");
  }
  if (params.theta.size() != arch.num_params()) {
    throw ValidationError("theta length does not match architecture");
  }
  if (!params.theta.allFinite()) {
    throw ValidationError("theta has non-finite entries");
  }
  if (params.u_lb.size() != arch.n_out || params.u_ub.size() != arch.n_out ||
      !(params.u_lb.array() < params.u_ub.array()).all()) {
    throw ValidationError("policy output bounds invalid");
  }
  if (params.input_shift.size() != arch.n_in ||
      !params.input_shift.allFinite()) {
    throw ValidationError("policy input shift invalid");
  }
}

PolicyParams zero_params(const PolicyArch& arch, const Vec& u_lb,
                         const Vec& u_ub, const Vec& input_shift) {
  PolicyParams p{Vec::Zero(arch.num_params()), arch, u_lb, u_ub,
                 input_shift.size() == 0 ? Vec::Zero(arch.n_in) : input_shift};
  validate(p);
  return p;
}

PolicyParams init_params(const PolicyArch& arch, const Vec& u_lb,
                         const Vec& u_ub, std::uint64_t seed,
                         const Vec& input_shift) {
  PolicyParams p = zero_params(arch, u_lb, u_ub, input_shift);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const int fan_in = arch.layer_in(l);
    const int fan_out = arch.layer_out(l);
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    const Eigen::Index off = arch.layer_offset(l);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(fan_in) * fan_out;
         ++k) {
      p.theta[off + k] = dist(rng);
    }
  }
  return p;
}

Vec forward(const PolicyParams& params, const Vec& x, PolicyTape& tape) {
  const auto& arch = params.arch;
  tape.input = x - params.input_shift;
  tape.hidden.resize(arch.hidden.size());
  const Vec* a = &tape.input;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const int in = arch.layer_in(l);
    const int out = arch.layer_out(l);
    const Eigen::Index off = arch.layer_offset(l);
    ConstWeights W(params.theta.data() + off, out, in);
    Eigen::Map<const Vec> b(params.theta.data() + off + in * out, out);
    Vec z = W * (*a) + b;
    if (l + 1 < arch.num_layers()) {
      tape.hidden[l] = z.array().tanh();
      a = &tape.hidden[l];
    } else {
      tape.sigmoid = z.unaryExpr([](double v) { return sigmoid(v); });
    }
  }
  tape.output = params.u_lb.array() +
                (params.u_ub - params.u_lb).array() * tape.sigmoid.array();
  return tape.output;
}

Vec forward(const PolicyParams& params, const Vec& x) {
  PolicyTape tape;
  return forward(params, x, tape);
}

void vjp_accumulate(const PolicyParams& params, const PolicyTape& tape,
                    const Vec& u_bar, Vec& x_bar, Vec& theta_bar) {
  const auto& arch = params.arch;
  const std::size_t L = arch.num_layers();
  // Cotangent of the output pre-activation.
  Vec delta = u_bar.array() * (params.u_ub - params.u_lb).array() *
              tape.sigmoid.array() * (1.0 - tape.sigmoid.array());
  for (std::size_t l = L; l-- > 0;) {
    const int in = arch.layer_in(l);
    const int out = arch.layer_out(l);
    const Eigen::Index off = arch.layer_offset(l);
    const Vec& a_in = l == 0 ? tape.input : tape.hidden[l - 1];
    Weights dW(theta_bar.data() + off, out, in);
    dW.noalias() += delta * a_in.transpose();
    theta_bar.segment(off + in * out, out) += delta;
    ConstWeights W(params.theta.data() + off, out, in);
    Vec a_bar = W.transpose() * delta;
    if (l == 0) {
      x_bar += a_bar;
    } else {
      delta = a_bar.array() * (1.0 - tape.hidden[l - 1].array().square());
    }
  }
}

PolicyVjp vjp(const PolicyParams& params, const Vec& x, const Vec& u_bar) {
  PolicyTape tape;
  forward(params, x, tape);
  PolicyVjp r{Vec::Zero(x.size()), Vec::Zero(params.theta.size())};
  vjp_accumulate(params, tape, u_bar, r.x_bar, r.theta_bar);
  return r;
}

}  // namespace lnodec

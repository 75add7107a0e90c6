#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "lnodec/dynamics.hpp"

namespace lnodec {

enum class Activation { Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct PolicyArch {
  int n_in = 2;
  std::vector<int> hidden{32, 32, 32};
  int n_out = 1;
  Activation activation = Activation::Tanh;

  /// Number of affine layers (hidden layers plus the output layer).
  std::size_t num_layers() const { return hidden.size() + 1; }
  int layer_in(std::size_t layer) const;
  int layer_out(std::size_t layer) const;
  /// Total parameter count: sum over layers of (in + 1) * out.
  Eigen::Index num_params() const;
  /// Offset of layer `layer`'s weight block inside theta. The bias block
  /// follows the weights.
  Eigen::Index layer_offset(std::size_t layer) const;
};

bool operator==(const PolicyArch& a, const PolicyArch& b);

/// Bounded-output MLP  u = u_lb + (u_ub - u_lb) * sigmoid(W_L a_{L-1} + b_L)
/// applied to the shifted input a_0 = x - input_shift.
///
/// theta layout is layer-major; each layer stores its weight matrix row-major
/// (out x in) followed by its bias vector (out).
struct PolicyParams {
  Vec theta;
  PolicyArch arch;
  Vec u_lb;
  Vec u_ub;
  Vec input_shift;  // fixed reference state, not trained; n_in entries
};

/// Throws ValidationError on inconsistent sizes, non-finite theta or bounds.
void validate(const PolicyParams& params);

/// Glorot-uniform weights, zero biases; deterministic in `seed`.
/// `input_shift` defaults to zero.
PolicyParams init_params(const PolicyArch& arch, const Vec& u_lb,
                         const Vec& u_ub, std::uint64_t seed,
                         const Vec& input_shift = Vec());

/// All-zero parameters; the policy then outputs the bound midpoint.
PolicyParams zero_params(const PolicyArch& arch, const Vec& u_lb,
                         const Vec& u_ub, const Vec& input_shift = Vec());

/// Activations recorded by a forward pass, consumed by the reverse pass.
struct PolicyTape {
  Vec input;                // shifted input
  std::vector<Vec> hidden;  // post-activation outputs of each hidden layer
  Vec sigmoid;              // sigmoid of the output pre-activation
  Vec output;
};

Vec forward(const PolicyParams& params, const Vec& x);
Vec forward(const PolicyParams& params, const Vec& x, PolicyTape& tape);

struct PolicyVjp {
  Vec x_bar;
  Vec theta_bar;
};

/// Returns (du/dx)^T u_bar and (du/dtheta)^T u_bar.
PolicyVjp vjp(const PolicyParams& params, const Vec& x, const Vec& u_bar);

/// Reverse pass over a recorded tape: adds (du/dx)^T u_bar to x_bar and
/// (du/dtheta)^T u_bar to theta_bar.
void vjp_accumulate(const PolicyParams& params, const PolicyTape& tape,
                    const Vec& u_bar, Vec& x_bar, Vec& theta_bar);

}  // namespace lnodec

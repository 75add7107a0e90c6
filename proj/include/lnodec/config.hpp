#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lnodec/dynamics.hpp"
#include "lnodec/train_config.hpp"

namespace lnodec {

/// [experiments.adversarial]: Sobol perturbations of the nominal x0.
struct AdversarialSettings {
  int count = 100;
  double radius = 0.1;   // box half-width per perturbed component
  double eps_bar = 0.1;  // perturbation bound used in the robustness bound
  int lipschitz_samples = 20000;
};

/// [experiments.doa]
struct DoaSettings {
  double x1_min = -0.25;
  double x1_max = 1.25;
  double x2_min = -0.5;
  double x2_max = 0.5;
  int n1 = 31;
  int n2 = 21;
  double tol = 0.1;
};

/// [experiments.dose]: plasma temperature perturbations and CEM target.
struct DoseSettings {
  int count = 50;
  double radius = 5.0;
  double target = 1.5;
  /// Perturbed temperatures are kept at or above this floor (the model is
  /// singular at 35 degC).
  double min_temperature = 35.5;
};

/// [experiments.envelope]
struct EnvelopeSettings {
  double t_start = 0.4;
  double tol_rel = 1e-3;  // allowed deficit relative to V(x(0))
};

/// [experiments.compare]
struct CompareSettings {
  /// Learning rate for the NODEC baselines; unset means train.learning_rate.
  std::optional<double> baseline_learning_rate;
};

struct RunSpec {
  std::string problem = "double_integrator";
  std::optional<double> t_f;      // horizon override
  bool extended_horizon = false;  // constrained double integrator: t_f = 2 s
  TrainConfig train;
  AdversarialSettings adversarial;
  DoaSettings doa;
  DoseSettings dose;
  EnvelopeSettings envelope;
  CompareSettings compare;

  std::uint64_t seed() const { return train.seed; }
};

/// Default settings for a preset (double_integrator: beta 5;
/// plasma: beta 50, constrained, 50 temperature perturbations of 5 degC).
RunSpec default_run_spec(const std::string& problem);

/// Parses the sectioned key = value format. Unknown sections or keys throw
/// ParseError with the line number; violated invariants ValidationError.
RunSpec parse_config_text(const std::string& text);
RunSpec parse_config(const std::string& path);

/// Replaces the seed with LNODEC_SEED when that variable is set.
void apply_env_overrides(RunSpec& spec);

/// Documented key listing with defaults, used for --help.
std::string config_reference();

/// Canonical text rendering (every key, fixed order) for manifests.
std::string canonical_config(const RunSpec& spec);

/// 64-bit FNV-1a hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

/// Preset with horizon overrides applied.
ProblemSpec make_problem(const RunSpec& spec);

/// Training config for a baseline mode in `compare`.
TrainConfig baseline_config(const RunSpec& spec, LossMode mode);

void validate(const RunSpec& spec);

}  // namespace lnodec

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lnodec/config.hpp"
#include "lnodec/experiments.hpp"
#include "lnodec/grad.hpp"
#include "lnodec/train.hpp"

namespace lnodec {

enum class Command { Train, Simulate, Robustness, Doa, Dose, Gradcheck, Compare };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

struct RunOptions {
  std::string out_dir = ".";
  std::optional<std::string> policy_path;
  bool force = false;
  int jobs = 1;
  std::ostream* log = nullptr;  // progress lines; nullptr for silence
};

/// Executes one command and writes its artifacts plus manifest.json into
/// out_dir. Returns the process exit status; module errors propagate.
int run(const RunSpec& spec, Command command, const RunOptions& options);

const char* version();

/// Glorot weights with uniform(-0.5, 0.5) biases, so that no hidden unit is
/// trivially inactive at the nominal state.
PolicyParams random_policy(const ProblemSpec& p, const PolicyArch& arch,
                           std::uint64_t seed);

struct GradCheckResult {
  std::vector<Eigen::Index> coords;
  double fd_vs_discrete = 0.0;       // relative error on the sampled coords
  double adjoint_vs_discrete = 0.0;  // relative error on the full gradient
};

/// Compares discrete backprop with central differences (step h) on
/// `n_coords` distinct random coordinates, and the adjoint engine with
/// discrete backprop on the full gradient.
GradCheckResult gradient_check(const ProblemSpec& p, const PolicyParams& params,
                               const TrainConfig& cfg, int n_coords,
                               std::uint64_t seed, double h = 1e-5);

/// Double integrator: Sobol offsets in [-radius, radius]^2. Plasma:
/// temperature-only offsets per dose_offsets with the adversarial count and
/// radius.
std::vector<Vec> adversarial_offsets(const ProblemSpec& p, const RunSpec& spec);

/// Temperature offsets from count Sobol points on
/// [max(T0 - radius, min_temperature), T0 + radius]; CEM offset zero.
std::vector<Vec> dose_offsets(const ProblemSpec& p, const DoseSettings& s);

struct RobustnessSummary {
  ExperimentReport report;
  Vec box_lo;  // bounding box of all swept trajectories
  Vec box_hi;
  LipschitzEstimate lipschitz;
  double lambda_max = 0.0;
  RobustnessBound bound;  // evaluated at t = t_f
  std::size_t within_plus = 0;
  std::size_t within_printed = 0;
};

RobustnessSummary robustness_analysis(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const RunSpec& spec, int jobs);

struct CompareRow {
  std::string label;
  ProblemSpec problem;
  TrainConfig config;
  TrainResult trained;
  Trajectory nominal;
  TrajectoryRecord nominal_record;
  ExperimentReport report;  // adversarial sweep or dose sweep
};

/// Double integrator rows: nodec, lnodec, lnodec_constrained.
/// Plasma rows: lnodec, nodec_stage, nodec_terminal.
std::vector<CompareRow> compare(const RunSpec& spec, int jobs,
                                std::ostream* log = nullptr);

std::string compare_table_csv(const RunSpec& spec,
                              const std::vector<CompareRow>& rows);

}  // namespace lnodec

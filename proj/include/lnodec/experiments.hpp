#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lnodec/dynamics.hpp"
#include "lnodec/policy.hpp"
#include "lnodec/simulate.hpp"

namespace lnodec {

/// First n points of the (unscrambled, Joe-Kuo) Sobol sequence in dim 1 or 2,
/// starting at index 1 so the all-zero point is skipped, mapped to [lo, hi].
std::vector<Vec> sobol_points(int n, int dim, const Vec& lo, const Vec& hi);

struct TrajectoryRecord {
  std::size_t index = 0;
  Vec initial_state;
  bool ok = true;  // false when the rollout raised DomainError
  std::string error;
  bool violated = false;      // any grid point with g > 0
  double max_excess = 0.0;    // max g over the grid, clipped at 0
  bool reached = false;       // target reached (dose sweeps)
  double time_to_target = 0.0;
  double final_potential = 0.0;
  double max_overshoot = 0.0;  // max over the grid of x1 - x1*, clipped at 0
  double mean_abs_u = 0.0;
};

struct ExperimentAggregates {
  double violation_rate = 0.0;
  double mean_time_to_target = 0.0;
  double std_time_to_target = 0.0;
  double mean_abs_u = 0.0;
  double max_overshoot = 0.0;
  double max_final_potential = 0.0;
  std::size_t reached_count = 0;
  std::size_t failed_count = 0;
};

struct ExperimentReport {
  std::string run_id;
  std::vector<TrajectoryRecord> records;
  ExperimentAggregates aggregates;
};

/// Recomputes the aggregates from the records.
ExperimentAggregates aggregate(const std::vector<TrajectoryRecord>& records);

/// Fixed-policy rollouts from x0 + offset for each offset. DomainErrors are
/// recorded per trajectory. `jobs` worker threads; results keyed by index.
ExperimentReport adversarial_sweep(const ProblemSpec& p,
                                   const PolicyParams& params,
                                   const std::vector<Vec>& offsets,
                                   int segments, int jobs = 1);

/// Fraction of records flagged as violating the constraint.
double violation_rate(const ExperimentReport& report);

struct EnvelopeCheck {
  std::vector<double> times;
  std::vector<double> margins;  // envelope(t) - V(x(t)) for t >= t_start
  bool satisfied = false;
};

/// Compares V along `traj` with V(x(0)) exp(-kappa t) on t >= t_start.
/// `tol` defaults to 1e-3 V(x(0)).
EnvelopeCheck envelope_check(const Trajectory& traj, double kappa,
                             double t_start,
                             std::optional<double> tol = std::nullopt);

struct DoseResult {
  double time = 0.0;
  bool reached = false;
  Trajectory truncated;
};

/// Rollout then truncation of the CEM component (index 1) at target_cem.
DoseResult time_to_dose(const ProblemSpec& p, const PolicyParams& params,
                        const Vec& x_init, double target_cem, int segments);

/// time_to_dose from x0 + offset for each offset.
ExperimentReport dose_sweep(const ProblemSpec& p, const PolicyParams& params,
                            const std::vector<Vec>& offsets, double target_cem,
                            int segments, int jobs = 1);

struct DoaGrid {
  std::vector<double> x1;  // n1 axis coordinates
  std::vector<double> x2;  // n2 axis coordinates
  std::vector<std::vector<bool>> success;  // [i1][i2]

  std::size_t success_count() const;
};

/// success iff ||x(t_f) - x*||_2 <= tol; DomainError cells fail.
DoaGrid estimate_doa(const ProblemSpec& p, const PolicyParams& params,
                     double x1_lo, double x1_hi, double x2_lo, double x2_hi,
                     int n1, int n2, double tol, int segments, int jobs = 1);

struct RobustnessBound {
  double printed = 0.0;  // lambda e^{-kappa t} |x0 - x*|^2 - (L eps / kappa)(1 - e^{-kappa t})
  double plus = 0.0;     // same with + on the perturbation term
};

/// Perturbation bound on the final potential at time `t` (1 in the
/// normalized-time statement).
RobustnessBound robustness_bound(double lambda_max, double kappa, const Vec& x0,
                                 const Vec& x_star, double L, double eps_bar,
                                 double t = 1.0);

struct LipschitzEstimate {
  double L_V = 0.0;
  double L_f = 0.0;
};

/// Max finite-difference slopes of V and of the closed-loop field over
/// random pairs in the box [lo, hi]. A lower bound on the true constants.
LipschitzEstimate empirical_lipschitz(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const Vec& lo, const Vec& hi,
                                      int n_samples, std::uint64_t seed);

/// Per-trajectory CSV for a sweep report.
std::string records_csv(const ExperimentReport& report);
/// x1,x2,success rows.
std::string doa_csv(const DoaGrid& grid);

}  // namespace lnodec

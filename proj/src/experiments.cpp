#include "lnodec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "lnodec/errors.hpp"
#include "lnodec/loss.hpp"
#include "lnodec/parallel.hpp"

namespace lnodec {

namespace {

constexpr int kSobolBits = 32;

// Direction numbers v_k = m_k 2^(32-k) for the first two Sobol dimensions.
// Dimension 1 is van der Corput (m_k = 1); dimension 2 uses the primitive
// polynomial x + 1 with m_1 = 1, giving v_k = v_{k-1} ^ (v_{k-1} >> 1).
std::vector<std::uint32_t> direction_numbers(int dim) {
  std::vector<std::uint32_t> v(kSobolBits);
  for (int k = 0; k < kSobolBits; ++k) {
    v[k] = std::uint32_t{1} << (kSobolBits - 1 - k);
  }
  if (dim == 1) {
    for (int k = 1; k < kSobolBits; ++k) v[k] = v[k - 1] ^ (v[k - 1] >> 1);
  }
  return v;
}

void fill_record(const ProblemSpec& p, const Trajectory& traj,
                 TrajectoryRecord& r) {
  r.final_potential = potential(traj.states.back(), p.x_star, p.P);
  double excess = -std::numeric_limits<double>::infinity();
  double overshoot = 0.0;
  double sum_u = 0.0;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    excess = std::max(excess,
                      eval_constraint(p, traj.states[i], traj.controls[i]));
    overshoot = std::max(overshoot, traj.states[i][0] - p.x_star[0]);
    sum_u += traj.controls[i].cwiseAbs().mean();
  }
  r.violated = excess > 0.0;
  r.max_excess = std::max(0.0, excess);
  r.max_overshoot = overshoot;
  r.mean_abs_u = sum_u / static_cast<double>(traj.states.size());
}

}  // namespace

std::vector<Vec> sobol_points(int n, int dim, const Vec& lo, const Vec& hi) {
  if (dim < 1 || dim > 2) throw ValidationError("sobol_points: dim must be 1 or 2");
  if (n < 1) throw ValidationError("sobol_points: n must be >= 1");
  if (lo.size() != dim || hi.size() != dim) {
    throw ValidationError("sobol_points: bounds must have dim entries");
  }
  std::vector<std::vector<std::uint32_t>> v;
  for (int d = 0; d < dim; ++d) v.push_back(direction_numbers(d));
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(n));
  const double scale = std::ldexp(1.0, -kSobolBits);
  for (std::uint64_t idx = 1; idx <= static_cast<std::uint64_t>(n); ++idx) {
    const std::uint64_t gray = idx ^ (idx >> 1);
    Vec x(dim);
    for (int d = 0; d < dim; ++d) {
      std::uint32_t acc = 0;
      for (int k = 0; k < kSobolBits; ++k) {
        if ((gray >> k) & 1U) acc ^= v[d][k];
      }
      x[d] = lo[d] + (hi[d] - lo[d]) * (acc * scale);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

ExperimentAggregates aggregate(const std::vector<TrajectoryRecord>& records) {
  ExperimentAggregates a;
  if (records.empty()) return a;
  double sum_t = 0.0;
  double sum_t2 = 0.0;
  std::size_t violated = 0;
  std::size_t ok = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++a.failed_count;
      ++violated;  // a trajectory that left the domain counts as a violation
      continue;
    }
    ++ok;
    if (r.violated) ++violated;
    if (r.reached) ++a.reached_count;
    sum_t += r.time_to_target;
    sum_t2 += r.time_to_target * r.time_to_target;
    a.mean_abs_u += r.mean_abs_u;
    a.max_overshoot = std::max(a.max_overshoot, r.max_overshoot);
    a.max_final_potential = std::max(a.max_final_potential, r.final_potential);
  }
  a.violation_rate =
      static_cast<double>(violated) / static_cast<double>(records.size());
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    a.mean_time_to_target = sum_t / n;
    a.std_time_to_target = std::sqrt(
        std::max(0.0, sum_t2 / n - a.mean_time_to_target * a.mean_time_to_target));
    a.mean_abs_u /= n;
  }
  return a;
}

ExperimentReport adversarial_sweep(const ProblemSpec& p,
                                   const PolicyParams& params,
                                   const std::vector<Vec>& offsets,
                                   int segments, int jobs) {
  ExperimentReport report;
  report.records.resize(offsets.size());
  parallel_for(offsets.size(), jobs, [&](std::size_t i) {
    TrajectoryRecord& r = report.records[i];
    r.index = i;
    r.initial_state = p.x0 + offsets[i];
    try {
      const Trajectory traj = rollout(p, params, r.initial_state, segments);
      fill_record(p, traj, r);
    } catch (const DomainError& e) {
      r.ok = false;
      r.error = e.what();
    }
  });
  report.aggregates = aggregate(report.records);
  return report;
}

double violation_rate(const ExperimentReport& report) {
  if (report.records.empty()) {
    throw ValidationError("violation_rate: empty report");
  }
  return aggregate(report.records).violation_rate;
}

EnvelopeCheck envelope_check(const Trajectory& traj, double kappa,
                             double t_start, std::optional<double> tol) {
  if (traj.states.empty()) throw ValidationError("envelope_check: empty trajectory");
  if (!(t_start < traj.times.back())) {
    throw ValidationError("envelope_check: t_start must be < t_f");
  }
  EnvelopeCheck out;
  const double V0 = traj.potentials.front();
  const double allowed = tol.value_or(1e-3 * V0);
  out.satisfied = true;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    // Small slack so a grid point computed as t_start - ulp is not dropped.
    if (traj.times[i] < t_start - 1e-12) continue;
    const double margin =
        stability_envelope(V0, kappa, traj.times[i]) - traj.potentials[i];
    out.times.push_back(traj.times[i]);
    out.margins.push_back(margin);
    if (margin < -allowed) out.satisfied = false;
  }
  return out;
}

DoseResult time_to_dose(const ProblemSpec& p, const PolicyParams& params,
                        const Vec& x_init, double target_cem, int segments) {
  if (p.n_x < 2) throw ValidationError("time_to_dose: needs a CEM component");
  const Trajectory traj = rollout(p, params, x_init, segments);
  TruncatedTrajectory cut = truncate_at_target(traj, 1, target_cem);
  return DoseResult{cut.crossing_time, cut.reached, std::move(cut.trajectory)};
}

ExperimentReport dose_sweep(const ProblemSpec& p, const PolicyParams& params,
                            const std::vector<Vec>& offsets, double target_cem,
                            int segments, int jobs) {
  ExperimentReport report;
  report.records.resize(offsets.size());
  parallel_for(offsets.size(), jobs, [&](std::size_t i) {
    TrajectoryRecord& r = report.records[i];
    r.index = i;
    r.initial_state = p.x0 + offsets[i];
    try {
      const Trajectory traj = rollout(p, params, r.initial_state, segments);
      TruncatedTrajectory cut = truncate_at_target(traj, 1, target_cem);
      // Constraint and effort statistics cover the delivered (truncated) part.
      fill_record(p, cut.trajectory, r);
      r.final_potential = potential(traj.states.back(), p.x_star, p.P);
      r.reached = cut.reached;
      r.time_to_target = cut.crossing_time;
    } catch (const DomainError& e) {
      r.ok = false;
      r.error = e.what();
    }
  });
  report.aggregates = aggregate(report.records);
  return report;
}

std::size_t DoaGrid::success_count() const {
  std::size_t n = 0;
  for (const auto& row : success) n += std::count(row.begin(), row.end(), true);
  return n;
}

DoaGrid estimate_doa(const ProblemSpec& p, const PolicyParams& params,
                     double x1_lo, double x1_hi, double x2_lo, double x2_hi,
                     int n1, int n2, double tol, int segments, int jobs) {
  if (n1 < 2 || n2 < 2) throw ValidationError("estimate_doa: grid sizes must be >= 2");
  if (p.n_x != 2) throw ValidationError("estimate_doa: needs a 2-state problem");
  DoaGrid grid;
  for (int i = 0; i < n1; ++i) {
    grid.x1.push_back(x1_lo + (x1_hi - x1_lo) * i / (n1 - 1));
  }
  for (int j = 0; j < n2; ++j) {
    grid.x2.push_back(x2_lo + (x2_hi - x2_lo) * j / (n2 - 1));
  }
  std::vector<char> cells(static_cast<std::size_t>(n1) * n2, 0);
  parallel_for(cells.size(), jobs, [&](std::size_t k) {
    const Vec x{{grid.x1[k / n2], grid.x2[k % n2]}};
    try {
      const std::vector<Vec> states = rollout_states(p, params, x, segments);
      cells[k] = (states.back() - p.x_star).norm() <= tol ? 1 : 0;
    } catch (const DomainError&) {
      cells[k] = 0;
    }
  });
  grid.success.assign(n1, std::vector<bool>(n2, false));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    grid.success[k / n2][k % n2] = cells[k] != 0;
  }
  return grid;
}

RobustnessBound robustness_bound(double lambda_max, double kappa, const Vec& x0,
                                 const Vec& x_star, double L, double eps_bar,
                                 double t) {
  if (!(lambda_max > 0.0) || !(kappa > 0.0) || L < 0.0 || eps_bar < 0.0) {
    throw ValidationError("robustness_bound: invalid arguments");
  }
  const double decay = std::exp(-kappa * t);
  const double nominal = lambda_max * decay * (x0 - x_star).squaredNorm();
  const double perturbation = L * eps_bar / kappa * (1.0 - decay);
  return RobustnessBound{nominal - perturbation, nominal + perturbation};
}

LipschitzEstimate empirical_lipschitz(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const Vec& lo, const Vec& hi,
                                      int n_samples, std::uint64_t seed) {
  if (lo.size() != p.n_x || hi.size() != p.n_x ||
      !(lo.array() < hi.array()).all()) {
    throw ValidationError("empirical_lipschitz: invalid sample box");
  }
  if (!p.domain_guard.contains(lo) || !p.domain_guard.contains(hi)) {
    throw ValidationError("empirical_lipschitz: sample box outside domain guard");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec width = hi - lo;
  // Local pairs: slopes approach the sup of the gradient norm.
  const double step = 1e-4 * width.norm();
  LipschitzEstimate est;
  for (int s = 0; s < n_samples; ++s) {
    Vec a(p.n_x);
    for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = lo[k] + width[k] * unit(rng);
    Vec d(p.n_x);
    for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = normal(rng);
    Vec b = (a + step * d.normalized()).cwiseMax(lo).cwiseMin(hi);
    const double dist = (b - a).norm();
    if (dist == 0.0) continue;
    est.L_V = std::max(est.L_V, std::abs(potential(a, p.x_star, p.P) -
                                         potential(b, p.x_star, p.P)) /
                                    dist);
    est.L_f = std::max(est.L_f, (closed_loop_field(p, params, a, 0.0) -
                                 closed_loop_field(p, params, b, 0.0))
                                        .norm() /
                                    dist);
  }
  return est;
}

std::string records_csv(const ExperimentReport& report) {
  std::ostringstream os;
  const Eigen::Index nx =
      report.records.empty() ? 0 : report.records[0].initial_state.size();
  os << "index";
  for (Eigen::Index k = 0; k < nx; ++k) os << ",x" << k + 1 << "_0";
  os << ",ok,violated,max_excess,reached,time_to_target,final_potential,"
        "max_overshoot,mean_abs_u\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << ',' << buf;
  };
  for (const auto& r : report.records) {
    os << r.index;
    for (Eigen::Index k = 0; k < nx; ++k) put(r.initial_state[k]);
    os << ',' << int(r.ok) << ',' << int(r.violated);
    put(r.max_excess);
    os << ',' << int(r.reached);
    put(r.time_to_target);
    put(r.final_potential);
    put(r.max_overshoot);
    put(r.mean_abs_u);
    os << '\n';
  }
  return os.str();
}

std::string doa_csv(const DoaGrid& grid) {
  std::ostringstream os;
  os << "x1,x2,success\n";
  char buf[64];
  for (std::size_t i = 0; i < grid.x1.size(); ++i) {
    for (std::size_t j = 0; j < grid.x2.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%d\n", grid.x1[i], grid.x2[j],
                    int(grid.success[i][j]));
      os << buf;
    }
  }
  return os.str();
}

}  // namespace lnodec

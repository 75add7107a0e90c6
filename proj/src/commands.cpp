#include "lnodec/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "lnodec/errors.hpp"
#include "lnodec/io.hpp"
#include "lnodec/parallel.hpp"

namespace lnodec {

namespace {

using Json = nlohmann::ordered_json;
using Outputs = std::vector<std::pair<std::string, std::string>>;

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// Non-finite values become null in the JSON output.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json aggregates_json(const ExperimentAggregates& a) {
  return Json{{"violation_rate", num(a.violation_rate)},
              {"mean_time_to_target", num(a.mean_time_to_target)},
              {"std_time_to_target", num(a.std_time_to_target)},
              {"mean_abs_u", num(a.mean_abs_u)},
              {"max_overshoot", num(a.max_overshoot)},
              {"max_final_potential", num(a.max_final_potential)},
              {"reached_count", a.reached_count},
              {"failed_count", a.failed_count}};
}

double max_excess(const ExperimentReport& r) {
  double m = 0.0;
  for (const auto& rec : r.records) m = std::max(m, rec.max_excess);
  return m;
}

class Logger {
 public:
  explicit Logger(std::ostream* os) : os_(os) {}
  void line(const std::string& s) {
    if (os_ == nullptr) return;
    std::lock_guard<std::mutex> lock(mutex_);
    *os_ << s << "\n";
    os_->flush();
  }

 private:
  std::ostream* os_;
  std::mutex mutex_;
};

TrainProgress progress_printer(Logger& log, const std::string& label,
                               int iterations) {
  return [&log, label, iterations](int k, const LossReport& r) {
    if (k % 100 == 0 || k + 1 == iterations) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s iter %d/%d loss %.6g", label.c_str(),
                    k + 1, iterations, r.total);
      log.line(buf);
    }
  };
}

PolicyParams require_policy(const RunOptions& o, const ProblemSpec& p,
                            Command c) {
  if (!o.policy_path) {
    throw ValidationError("command '" + to_string(c) + "' requires --policy");
  }
  PolicyParams params = load_policy(*o.policy_path);
  if (params.arch.n_in != p.n_x || params.arch.n_out != p.n_u) {
    throw ValidationError("policy dimensions do not match problem '" + p.name +
                          "'");
  }
  if (params.u_lb != p.u_lb || params.u_ub != p.u_ub) {
    throw ValidationError("policy control bounds do not match problem '" + p.name +
                          "'");
  }
  return params;
}

void write_outputs(const RunOptions& o, const Outputs& outputs) {
  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  if (!o.force) {
    for (const auto& [name, content] : outputs) {
      const fs::path path = fs::path(o.out_dir) / name;
      if (fs::exists(path)) {
        throw ValidationError("refusing to overwrite '" + path.string() +
                              "' (use --force or a fresh directory)");
      }
    }
  }
  for (const auto& [name, content] : outputs) {
    write_file((fs::path(o.out_dir) / name).string(), content, true);
  }
}

Json manifest(const RunSpec& spec, const ProblemSpec& p, Command c,
              const RunOptions& o, const Outputs& outputs) {
  const std::string canon = canonical_config(spec);
  Json m{{"version", version()},
         {"command", to_string(c)},
         {"problem", spec.problem},
         {"t_f", p.t_f},
         {"seed", spec.seed()},
         {"config_hash", fnv1a_hex(canon)},
         {"config", canon}};
  if (o.policy_path) {
    m["policy"] = Json{{"path", *o.policy_path},
                       {"hash", fnv1a_hex(read_file(*o.policy_path))}};
  }
  Json files = Json::array();
  for (const auto& [name, content] : outputs) {
    files.push_back(Json{{"file", name}, {"hash", fnv1a_hex(content)}});
  }
  m["outputs"] = files;
  return m;
}

TrajectoryRecord nominal_record(const ProblemSpec& p,
                                const PolicyParams& params, int segments) {
  return adversarial_sweep(p, params, {Vec::Zero(p.n_x)}, segments, 1)
      .records.front();
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Train: return "train";
    case Command::Simulate: return "simulate";
    case Command::Robustness: return "robustness";
    case Command::Doa: return "doa";
    case Command::Dose: return "dose";
    case Command::Gradcheck: return "gradcheck";
    case Command::Compare: return "compare";
  }
  return "unknown";
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::Train, Command::Simulate, Command::Robustness,
                    Command::Doa, Command::Dose, Command::Gradcheck,
                    Command::Compare}) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown command '" + s + "'");
}

const char* version() { return LNODEC_VERSION; }

PolicyParams random_policy(const ProblemSpec& p, const PolicyArch& arch,
                           std::uint64_t seed) {
  PolicyArch a = arch;
  a.n_in = p.n_x;
  a.n_out = p.n_u;
  PolicyParams params = init_params(a, p.u_lb, p.u_ub, seed, p.policy_input_shift);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const Eigen::Index off =
        a.layer_offset(l) + static_cast<Eigen::Index>(a.layer_in(l)) * a.layer_out(l);
    for (int k = 0; k < a.layer_out(l); ++k) params.theta[off + k] = bias(rng);
  }
  return params;
}

GradCheckResult gradient_check(const ProblemSpec& p, const PolicyParams& params,
                               const TrainConfig& cfg, int n_coords,
                               std::uint64_t seed, double h) {
  const Eigen::Index n = params.theta.size();
  if (n_coords < 1 || n_coords > n) {
    throw ValidationError("gradient_check: n_coords out of range");
  }
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  GradCheckResult r;
  r.coords.assign(all.begin(), all.begin() + n_coords);
  const GradientResult discrete = loss_gradient_discrete(p, params, cfg, p.x0);
  const GradientResult adjoint = loss_gradient_adjoint(p, params, cfg, p.x0);
  const SparseGradient fd =
      finite_difference_gradient(p, params, cfg, p.x0, r.coords, h);
  Vec a(n_coords);
  Vec b(n_coords);
  for (int i = 0; i < n_coords; ++i) {
    a[i] = discrete.grad[r.coords[static_cast<std::size_t>(i)]];
    b[i] = fd.values[static_cast<std::size_t>(i)];
  }
  r.fd_vs_discrete = relative_error(a, b);
  r.adjoint_vs_discrete = relative_error(adjoint.grad, discrete.grad);
  return r;
}

std::vector<Vec> dose_offsets(const ProblemSpec& p, const DoseSettings& s) {
  const double t0 = p.x0[0];
  const double lo = std::max(t0 - s.radius, s.min_temperature);
  const double hi = t0 + s.radius;
  if (!(lo < hi)) throw ValidationError("dose perturbation box is empty");
  std::vector<Vec> out;
  for (const Vec& pt : sobol_points(s.count, 1, Vec::Constant(1, lo),
                                    Vec::Constant(1, hi))) {
    Vec d = Vec::Zero(p.n_x);
    d[0] = pt[0] - t0;
    out.push_back(d);
  }
  return out;
}

std::vector<Vec> adversarial_offsets(const ProblemSpec& p, const RunSpec& spec) {
  const AdversarialSettings& a = spec.adversarial;
  if (p.kind == SystemKind::Plasma) {
    DoseSettings d = spec.dose;
    d.count = a.count;
    d.radius = a.radius;
    return dose_offsets(p, d);
  }
  return sobol_points(a.count, static_cast<int>(p.n_x),
                      Vec::Constant(p.n_x, -a.radius),
                      Vec::Constant(p.n_x, a.radius));
}

RobustnessSummary robustness_analysis(const ProblemSpec& p,
                                      const PolicyParams& params,
                                      const RunSpec& spec, int jobs) {
  const std::vector<Vec> offsets = adversarial_offsets(p, spec);
  const int segments = spec.train.segments;
  RobustnessSummary s;
  s.report = adversarial_sweep(p, params, offsets, segments, jobs);
  std::vector<Vec> lo(offsets.size());
  std::vector<Vec> hi(offsets.size());
  parallel_for(offsets.size(), jobs, [&](std::size_t i) {
    lo[i] = Vec::Constant(p.n_x, std::numeric_limits<double>::infinity());
    hi[i] = -lo[i];
    if (!s.report.records[i].ok) return;
    for (const Vec& x : rollout_states(p, params, p.x0 + offsets[i], segments)) {
      lo[i] = lo[i].cwiseMin(x);
      hi[i] = hi[i].cwiseMax(x);
    }
  });
  s.box_lo = Vec::Constant(p.n_x, std::numeric_limits<double>::infinity());
  s.box_hi = -s.box_lo;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    s.box_lo = s.box_lo.cwiseMin(lo[i]);
    s.box_hi = s.box_hi.cwiseMax(hi[i]);
  }
  if (!s.box_lo.allFinite() || !s.box_hi.allFinite()) {
    throw DomainError("robustness: every swept trajectory left the domain");
  }
  const Vec pad = (1e-3 * (s.box_hi - s.box_lo)).cwiseMax(1e-6);
  s.box_lo = (s.box_lo - pad).cwiseMax(Vec(p.domain_guard.lo.array() + 1e-6));
  s.box_hi = (s.box_hi + pad).cwiseMin(p.domain_guard.hi);
  s.lipschitz = empirical_lipschitz(p, params, s.box_lo, s.box_hi,
                                    spec.adversarial.lipschitz_samples,
                                    spec.seed());
  Eigen::SelfAdjointEigenSolver<Mat> es(p.P);
  s.lambda_max = es.eigenvalues().maxCoeff();
  s.bound = robustness_bound(s.lambda_max, spec.train.kappa, p.x0, p.x_star,
                             s.lipschitz.L_V * s.lipschitz.L_f,
                             spec.adversarial.eps_bar, p.t_f);
  for (const auto& r : s.report.records) {
    if (!r.ok) continue;
    if (r.final_potential <= s.bound.plus) ++s.within_plus;
    if (r.final_potential <= s.bound.printed) ++s.within_printed;
  }
  return s;
}

std::vector<CompareRow> compare(const RunSpec& spec, int jobs,
                                std::ostream* log_stream) {
  Logger log(log_stream);
  const ProblemSpec base = make_problem(spec);
  std::vector<CompareRow> rows;
  auto add_row = [&](const std::string& label, LossMode mode, bool constrained) {
    RunSpec s = spec;
    s.train.constrained = constrained;
    CompareRow row;
    row.label = label;
    row.problem = make_problem(s);
    row.config = baseline_config(s, mode);
    rows.push_back(std::move(row));
  };
  if (base.kind == SystemKind::DoubleIntegrator) {
    add_row("nodec", LossMode::NodecStage, false);
    add_row("lnodec", LossMode::LNodec, false);
    add_row("lnodec_constrained", LossMode::LNodec, true);
  } else {
    const bool c = spec.train.constrained;
    add_row("lnodec", LossMode::LNodec, c);
    add_row("nodec_stage", LossMode::NodecStage, c);
    add_row("nodec_terminal", LossMode::NodecTerminal, c);
  }
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    CompareRow& row = rows[i];
    row.trained = train_policy(
        row.problem, row.config,
        progress_printer(log, row.label, row.config.iterations));
  });
  for (CompareRow& row : rows) {
    const PolicyParams& params = row.trained.params;
    const int segments = row.config.segments;
    row.nominal = rollout(row.problem, params, row.problem.x0, segments,
                          LossWeights{row.config.kappa, row.config.effective_beta()});
    row.nominal_record = nominal_record(row.problem, params, segments);
    if (base.kind == SystemKind::Plasma) {
      row.report = dose_sweep(row.problem, params, dose_offsets(row.problem, spec.dose),
                              spec.dose.target, segments, jobs);
    } else {
      row.report = adversarial_sweep(row.problem, params,
                                     adversarial_offsets(row.problem, spec),
                                     segments, jobs);
    }
    log.line(row.label + " evaluated");
  }
  return rows;
}

std::string compare_table_csv(const RunSpec& spec,
                              const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  char buf[256];
  if (problem_by_name(spec.problem).kind == SystemKind::Plasma) {
    os << "label,mean_time_to_target,std_time_to_target,reached,failed,"
          "max_temperature_excess,violation_rate\n";
    for (const auto& r : rows) {
      const auto& a = r.report.aggregates;
      std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%zu,%zu,%.9g,%.9g\n",
                    r.label.c_str(), a.mean_time_to_target, a.std_time_to_target,
                    a.reached_count, a.failed_count, max_excess(r.report),
                    a.violation_rate);
      os << buf;
    }
  } else {
    os << "label,violation_rate,nominal_mean_abs_u,max_overshoot,"
          "nominal_final_distance\n";
    for (const auto& r : rows) {
      const double dist = (r.nominal.states.back() - r.problem.x_star).norm();
      std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g\n", r.label.c_str(),
                    r.report.aggregates.violation_rate,
                    r.nominal_record.mean_abs_u,
                    r.report.aggregates.max_overshoot, dist);
      os << buf;
    }
  }
  return os.str();
}

int run(const RunSpec& spec, Command command, const RunOptions& o) {
  validate(spec);
  if (o.jobs < 1) throw ValidationError("--jobs must be >= 1");
  const ProblemSpec p = make_problem(spec);
  Logger log(o.log);
  Outputs out;
  Json summary;
  int status = 0;
  const int segments = spec.train.segments;

  switch (command) {
    case Command::Train: {
      const TrainResult r = train_policy(
          p, spec.train, progress_printer(log, "train", spec.train.iterations));
      const Trajectory traj =
          rollout(p, r.params, p.x0, segments,
                  LossWeights{spec.train.kappa, spec.train.effective_beta()});
      out.emplace_back("policy.bin", encode_policy(r.params));
      out.emplace_back("policy.txt", policy_text(r.params));
      out.emplace_back("history.csv", history_csv(r.history));
      out.emplace_back("trajectory.csv", trajectory_csv(traj));
      summary = Json{{"initial_loss", num(r.history.front().total)},
                     {"final_loss", num(r.history.back().total)},
                     {"final_state", to_std(traj.states.back())}};
      break;
    }
    case Command::Simulate: {
      const PolicyParams params = require_policy(o, p, command);
      const Trajectory traj =
          rollout(p, params, p.x0, segments,
                  LossWeights{spec.train.kappa, spec.train.effective_beta()});
      const TrajectoryRecord rec = nominal_record(p, params, segments);
      out.emplace_back("trajectory.csv", trajectory_csv(traj));
      summary = Json{{"final_state", to_std(traj.states.back())},
                     {"final_distance", (traj.states.back() - p.x_star).norm()},
                     {"final_potential", rec.final_potential},
                     {"violated", rec.violated},
                     {"max_constraint_excess", rec.max_excess},
                     {"max_overshoot", rec.max_overshoot},
                     {"mean_abs_u", rec.mean_abs_u}};
      if (spec.envelope.t_start < p.t_f) {
        const EnvelopeCheck env =
            envelope_check(traj, spec.train.kappa, spec.envelope.t_start,
                           spec.envelope.tol_rel * traj.potentials.front());
        const double worst = env.margins.empty()
                                 ? 0.0
                                 : *std::min_element(env.margins.begin(),
                                                     env.margins.end());
        summary["envelope"] = Json{{"t_start", spec.envelope.t_start},
                                   {"satisfied", env.satisfied},
                                   {"min_margin", worst}};
      }
      break;
    }
    case Command::Robustness: {
      const PolicyParams params = require_policy(o, p, command);
      const RobustnessSummary s = robustness_analysis(p, params, spec, o.jobs);
      out.emplace_back("records.csv", records_csv(s.report));
      summary = Json{{"aggregates", aggregates_json(s.report.aggregates)},
                     {"box_lo", to_std(s.box_lo)},
                     {"box_hi", to_std(s.box_hi)},
                     {"L_V", s.lipschitz.L_V},
                     {"L_f", s.lipschitz.L_f},
                     {"lipschitz_note", "empirical lower bounds"},
                     {"lambda_max", s.lambda_max},
                     {"eps_bar", spec.adversarial.eps_bar},
                     {"bound_printed", s.bound.printed},
                     {"bound_plus", s.bound.plus},
                     {"within_plus", s.within_plus},
                     {"within_printed", s.within_printed},
                     {"count", s.report.records.size()}};
      break;
    }
    case Command::Doa: {
      const PolicyParams params = require_policy(o, p, command);
      const DoaSettings& d = spec.doa;
      const DoaGrid g = estimate_doa(p, params, d.x1_min, d.x1_max, d.x2_min,
                                     d.x2_max, d.n1, d.n2, d.tol, segments, o.jobs);
      out.emplace_back("doa.csv", doa_csv(g));
      summary = Json{{"success_count", g.success_count()},
                     {"cells", g.x1.size() * g.x2.size()},
                     {"tol", d.tol}};
      break;
    }
    case Command::Dose: {
      const PolicyParams params = require_policy(o, p, command);
      const ExperimentReport r =
          dose_sweep(p, params, dose_offsets(p, spec.dose), spec.dose.target,
                     segments, o.jobs);
      out.emplace_back("records.csv", records_csv(r));
      summary = Json{{"aggregates", aggregates_json(r.aggregates)},
                     {"max_constraint_excess", max_excess(r)},
                     {"target", spec.dose.target}};
      break;
    }
    case Command::Gradcheck: {
      const PolicyParams params = random_policy(p, spec.train.arch, spec.seed());
      const GradCheckResult g =
          gradient_check(p, params, spec.train, 20, spec.seed());
      const double worst = std::max(g.fd_vs_discrete, g.adjoint_vs_discrete);
      status = worst <= 1e-3 ? 0 : 1;
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "gradcheck fd_vs_discrete=%.3e adjoint_vs_discrete=%.3e "
                    "max_rel_error=%.3e",
                    g.fd_vs_discrete, g.adjoint_vs_discrete, worst);
      log.line(buf);
      summary = Json{{"fd_vs_discrete", g.fd_vs_discrete},
                     {"adjoint_vs_discrete", g.adjoint_vs_discrete},
                     {"max_rel_error", worst},
                     {"coords", g.coords}};
      break;
    }
    case Command::Compare: {
      const std::vector<CompareRow> rows = compare(spec, o.jobs, o.log);
      out.emplace_back("compare.csv", compare_table_csv(spec, rows));
      Json rj = Json::object();
      for (const auto& r : rows) {
        out.emplace_back(r.label + "_policy.bin", encode_policy(r.trained.params));
        out.emplace_back(r.label + "_history.csv", history_csv(r.trained.history));
        out.emplace_back(r.label + "_trajectory.csv", trajectory_csv(r.nominal));
        out.emplace_back(r.label + "_records.csv", records_csv(r.report));
        rj[r.label] = Json{{"mode", to_string(r.config.mode)},
                           {"constrained", r.config.constrained},
                           {"learning_rate", r.config.learning_rate},
                           {"t_f", r.problem.t_f},
                           {"nominal_mean_abs_u", r.nominal_record.mean_abs_u},
                           {"aggregates", aggregates_json(r.report.aggregates)}};
      }
      summary = Json{{"rows", rj}};
      log.line(compare_table_csv(spec, rows));
      break;
    }
  }
  out.emplace_back("summary.json", summary.dump(2) + "\n");
  const Json m = manifest(spec, p, command, o, out);
  out.emplace_back("manifest.json", m.dump(2) + "\n");
  write_outputs(o, out);
  return status;
}

}  // namespace lnodec

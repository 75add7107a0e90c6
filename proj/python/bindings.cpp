#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lnodec/commands.hpp"
#include "lnodec/config.hpp"
#include "lnodec/errors.hpp"
#include "lnodec/experiments.hpp"
#include "lnodec/grad.hpp"
#include "lnodec/io.hpp"
#include "lnodec/loss.hpp"
#include "lnodec/policy.hpp"
#include "lnodec/simulate.hpp"
#include "lnodec/train.hpp"

namespace py = pybind11;
using namespace lnodec;

PYBIND11_MODULE(_lnodec, m) {
  m.doc() = "Lyapunov-loss neural ODE control policies";
  m.attr("__version__") = version();

  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::enum_<LossMode>(m, "LossMode")
      .value("LNODEC", LossMode::LNodec)
      .value("NODEC_STAGE", LossMode::NodecStage)
      .value("NODEC_TERMINAL", LossMode::NodecTerminal);
  py::enum_<GradEngine>(m, "GradEngine")
      .value("DISCRETE", GradEngine::Discrete)
      .value("ADJOINT", GradEngine::Adjoint);
  py::enum_<Optimizer>(m, "Optimizer")
      .value("ADAM", Optimizer::Adam)
      .value("GRADIENT_DESCENT", Optimizer::GradientDescent);
  py::enum_<Quadrature>(m, "Quadrature")
      .value("DT_WEIGHTED", Quadrature::DtWeighted)
      .value("BARE_SUM", Quadrature::BareSum);

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def_readonly("name", &ProblemSpec::name)
      .def_readonly("n_x", &ProblemSpec::n_x)
      .def_readonly("n_u", &ProblemSpec::n_u)
      .def_readwrite("x0", &ProblemSpec::x0)
      .def_readonly("x_star", &ProblemSpec::x_star)
      .def_readwrite("t_f", &ProblemSpec::t_f)
      .def_readonly("u_lb", &ProblemSpec::u_lb)
      .def_readonly("u_ub", &ProblemSpec::u_ub)
      .def_readonly("P", &ProblemSpec::P)
      .def_readonly("P_ell", &ProblemSpec::P_ell)
      .def_readonly("P_phi", &ProblemSpec::P_phi)
      .def_readonly("policy_input_shift", &ProblemSpec::policy_input_shift)
      .def("__repr__", [](const ProblemSpec& p) { return "<ProblemSpec " + p.name + ">"; });
  m.def("double_integrator", &double_integrator);
  m.def("plasma", &plasma);
  m.def("problem_by_name", [](const std::string& n) { return problem_by_name(n); });
  m.def("drift", &eval_drift, py::arg("problem"), py::arg("x"), py::arg("t") = 0.0);
  m.def("F", &eval_F, py::arg("problem"), py::arg("x"), py::arg("u"), py::arg("t") = 0.0);
  m.def("constraint", &eval_constraint, py::arg("problem"), py::arg("x"), py::arg("u"));

  py::class_<PolicyArch>(m, "PolicyArch")
      .def(py::init<>())
      .def_readwrite("n_in", &PolicyArch::n_in)
      .def_readwrite("hidden", &PolicyArch::hidden)
      .def_readwrite("n_out", &PolicyArch::n_out)
      .def_property_readonly("num_params", &PolicyArch::num_params);
  py::class_<PolicyParams>(m, "PolicyParams")
      .def_readwrite("theta", &PolicyParams::theta)
      .def_readonly("arch", &PolicyParams::arch)
      .def_readonly("u_lb", &PolicyParams::u_lb)
      .def_readonly("u_ub", &PolicyParams::u_ub)
      .def_readonly("input_shift", &PolicyParams::input_shift);
  m.def(
      "init_policy",
      [](const ProblemSpec& p, std::uint64_t seed, const PolicyArch& arch) {
        return init_params(arch, p.u_lb, p.u_ub, seed, p.policy_input_shift);
      },
      py::arg("problem"), py::arg("seed") = 0, py::arg("arch") = PolicyArch{});
  m.def(
      "forward",
      [](const PolicyParams& params, const Vec& x) { return forward(params, x); },
      py::arg("params"), py::arg("x"));
  m.def("save_policy", &save_policy, py::arg("path"), py::arg("params"),
        py::arg("force") = false);
  m.def("load_policy", &load_policy, py::arg("path"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("controls", &Trajectory::controls)
      .def_readonly("potentials", &Trajectory::potentials)
      .def_readonly("pointwise_losses", &Trajectory::pointwise_losses)
      .def("csv", &trajectory_csv);
  m.def(
      "rollout",
      [](const ProblemSpec& p, const PolicyParams& params, const Vec& x_init,
         int segments, double kappa, double beta) {
        return rollout(p, params, x_init, segments, LossWeights{kappa, beta});
      },
      py::arg("problem"), py::arg("params"), py::arg("x_init"), py::arg("segments"),
      py::arg("kappa") = 5.0, py::arg("beta") = 0.0);

  m.def("potential", &potential, py::arg("x"), py::arg("x_star"), py::arg("P"));
  m.def("stability_envelope", &stability_envelope, py::arg("V0"), py::arg("kappa"),
        py::arg("t"));
  py::class_<LossReport>(m, "LossReport")
      .def_readonly("total", &LossReport::total)
      .def_readonly("stability", &LossReport::stability)
      .def_readonly("penalty", &LossReport::penalty)
      .def_readonly("mode", &LossReport::mode);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("segments", &TrainConfig::segments)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("kappa", &TrainConfig::kappa)
      .def_readwrite("beta", &TrainConfig::beta)
      .def_readwrite("mode", &TrainConfig::mode)
      .def_readwrite("constrained", &TrainConfig::constrained)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("grad_engine", &TrainConfig::grad_engine)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("quadrature", &TrainConfig::quadrature)
      .def_readwrite("arch", &TrainConfig::arch);
  m.def("training_loss", &training_loss, py::arg("problem"), py::arg("params"),
        py::arg("config"), py::arg("x_init"));

  py::class_<GradientResult>(m, "GradientResult")
      .def_readonly("grad", &GradientResult::grad)
      .def_readonly("report", &GradientResult::report)
      .def_readonly("stored_states", &GradientResult::stored_states);
  m.def("loss_gradient", &loss_gradient, py::arg("problem"), py::arg("params"),
        py::arg("config"), py::arg("x_init"));
  py::class_<GradCheckResult>(m, "GradCheckResult")
      .def_readonly("coords", &GradCheckResult::coords)
      .def_readonly("fd_vs_discrete", &GradCheckResult::fd_vs_discrete)
      .def_readonly("adjoint_vs_discrete", &GradCheckResult::adjoint_vs_discrete);
  m.def("gradient_check", &gradient_check, py::arg("problem"), py::arg("params"),
        py::arg("config"), py::arg("n_coords") = 20, py::arg("seed") = 0,
        py::arg("h") = 1e-5);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("history", &TrainResult::history);
  m.def(
      "train",
      [](const ProblemSpec& p, const TrainConfig& cfg) {
        py::gil_scoped_release release;
        return train_policy(p, cfg);
      },
      py::arg("problem"), py::arg("config"));

  m.def("sobol_points", &sobol_points, py::arg("n"), py::arg("dim"), py::arg("lo"),
        py::arg("hi"));

  py::class_<EnvelopeCheck>(m, "EnvelopeCheck")
      .def_readonly("times", &EnvelopeCheck::times)
      .def_readonly("margins", &EnvelopeCheck::margins)
      .def_readonly("satisfied", &EnvelopeCheck::satisfied);
  m.def("envelope_check", &envelope_check, py::arg("trajectory"), py::arg("kappa"),
        py::arg("t_start"), py::arg("tol") = std::nullopt);

  py::class_<DoseResult>(m, "DoseResult")
      .def_readonly("time", &DoseResult::time)
      .def_readonly("reached", &DoseResult::reached);
  m.def("time_to_dose", &time_to_dose, py::arg("problem"), py::arg("params"),
        py::arg("x_init"), py::arg("target_cem"), py::arg("segments"));

  py::class_<DoaGrid>(m, "DoaGrid")
      .def_readonly("x1", &DoaGrid::x1)
      .def_readonly("x2", &DoaGrid::x2)
      .def_readonly("success", &DoaGrid::success)
      .def_property_readonly("success_count", &DoaGrid::success_count);
  m.def("estimate_doa", &estimate_doa, py::arg("problem"), py::arg("params"),
        py::arg("x1_lo"), py::arg("x1_hi"), py::arg("x2_lo"), py::arg("x2_hi"),
        py::arg("n1"), py::arg("n2"), py::arg("tol"), py::arg("segments"),
        py::arg("jobs") = 1);

  m.def(
      "run",
      [](const std::string& command, const std::string& problem,
         const std::optional<std::string>& config_text, const std::string& out_dir,
         const std::optional<std::string>& policy, bool force, int jobs) {
        RunSpec spec = config_text ? parse_config_text(*config_text)
                                   : default_run_spec(problem);
        RunOptions o;
        o.out_dir = out_dir;
        o.policy_path = policy;
        o.force = force;
        o.jobs = jobs;
        py::gil_scoped_release release;
        return run(spec, command_from_string(command), o);
      },
      py::arg("command"), py::arg("problem") = "double_integrator",
      py::arg("config_text") = std::nullopt, py::arg("out_dir") = ".",
      py::arg("policy") = std::nullopt, py::arg("force") = false, py::arg("jobs") = 1);
}

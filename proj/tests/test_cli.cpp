#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lnodec/commands.hpp"
#include "lnodec/config.hpp"
#include "lnodec/errors.hpp"
#include "lnodec/io.hpp"
#include "test_support.hpp"

using namespace lnodec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("lnodec_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

RunSpec quick_spec(const std::string& problem) {
  RunSpec s = default_run_spec(problem);
  s.train.iterations = 3;
  s.train.segments = 40;
  s.adversarial.count = 4;
  s.adversarial.lipschitz_samples = 200;
  s.dose.count = 3;
  s.doa.n1 = 3;
  s.doa.n2 = 3;
  return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal config yields the reproduction defaults") {
  const RunSpec s = parse_config_text("problem = \"double_integrator\"\n");
  CHECK(s.problem == "double_integrator");
  CHECK(s.train.iterations == 400);
  CHECK(s.train.segments == 500);
  CHECK(s.train.learning_rate == 0.025);
  CHECK(s.train.kappa == 5.0);
  CHECK(s.train.beta == 5.0);
  CHECK(s.train.mode == LossMode::LNodec);
  CHECK(s.adversarial.count == 100);
  CHECK(s.adversarial.radius == 0.1);
}

TEST_CASE("plasma preset defaults") {
  const RunSpec s = parse_config_text("problem = plasma\n");
  CHECK(s.train.beta == 50.0);
  CHECK(s.train.constrained);
  CHECK(s.dose.count == 50);
  CHECK(s.dose.radius == 5.0);
  CHECK(s.dose.target == 1.5);
  CHECK(baseline_config(s, LossMode::NodecStage).learning_rate == 0.005);
  CHECK(baseline_config(s, LossMode::LNodec).learning_rate == 0.025);
}

TEST_CASE("sections, comments and overrides") {
  const RunSpec s = parse_config_text(
      "# comment\n"
      "problem = \"plasma\"\n"
      "[train]\n"
      "iterations = 10   # trailing comment\n"
      "mode = nodec_terminal\n"
      "hidden = \"16,8\"\n"
      "[grad]\n"
      "engine = adjoint\n"
      "[experiments.doa]\n"
      "tol = 0.2\n"
      "[experiments.compare]\n"
      "baseline_learning_rate = 0.001\n");
  CHECK(s.train.iterations == 10);
  CHECK(s.train.mode == LossMode::NodecTerminal);
  CHECK(s.train.arch.hidden == std::vector<int>{16, 8});
  CHECK(s.train.grad_engine == GradEngine::Adjoint);
  CHECK(s.doa.tol == 0.2);
  CHECK(*s.compare.baseline_learning_rate == 0.001);
}

TEST_CASE("unknown or malformed keys are hard errors with line numbers") {
  try {
    parse_config_text("problem = double_integrator\n[train]\ngama = 500\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("gama") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[train]\niterations = many\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[train]\niterations\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[nonsense]\nx = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("problem = pendulum\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[train]\nseed = 1\nseed = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[train\n"), ParseError);
  CHECK_THROWS_AS(parse_config_text("[train]\niterations = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("[experiments.doa]\nn1 = 1\n"), ValidationError);
}

TEST_CASE("canonical config round-trips and hashes stably") {
  RunSpec s = default_run_spec("plasma");
  s.train.seed = 12;
  s.t_f = 80.0;
  const std::string canon = canonical_config(s);
  const RunSpec back = parse_config_text(canon);
  CHECK(canonical_config(back) == canon);
  CHECK(fnv1a_hex(canon) == fnv1a_hex(canonical_config(back)));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(config_reference().find("baseline_learning_rate") != std::string::npos);
}

TEST_CASE("LNODEC_SEED overrides the config seed") {
  RunSpec s = default_run_spec("double_integrator");
  setenv("LNODEC_SEED", "77", 1);
  apply_env_overrides(s);
  CHECK(s.train.seed == 77);
  setenv("LNODEC_SEED", "-1", 1);
  CHECK_THROWS_AS(apply_env_overrides(s), ValidationError);
  unsetenv("LNODEC_SEED");
}

TEST_CASE("extended horizon applies to the constrained double integrator only") {
  RunSpec s = default_run_spec("double_integrator");
  s.extended_horizon = true;
  CHECK(make_problem(s).t_f == 1.5);
  s.train.constrained = true;
  CHECK(make_problem(s).t_f == 2.0);
  s.t_f = 3.0;
  CHECK(make_problem(s).t_f == 3.0);
}

TEST_CASE("policy checkpoint round trip") {
  TempDir dir("ckpt");
  const ProblemSpec p = plasma();
  const PolicyParams params = lnodec::testing::small_random_policy(p, 3);
  const std::string bytes = encode_policy(params);
  CHECK(bytes.rfind("LNODEC-POLICY v1\n", 0) == 0);
  const PolicyParams back = decode_policy(bytes);
  CHECK(back.theta == params.theta);
  CHECK(back.u_lb == params.u_lb);
  CHECK(back.u_ub == params.u_ub);
  CHECK(back.input_shift == params.input_shift);
  CHECK(back.arch == params.arch);
  // Payload is little-endian float64 after the header.
  const std::size_t start = bytes.size() - 8 * static_cast<std::size_t>(params.theta.size());
  unsigned char raw[8];
  for (int k = 0; k < 8; ++k) raw[k] = static_cast<unsigned char>(bytes[start + k]);
  std::uint64_t bits = 0;
  for (int k = 7; k >= 0; --k) bits = (bits << 8) | raw[k];
  double first = 0.0;
  std::memcpy(&first, &bits, 8);
  CHECK(first == params.theta[0]);

  save_policy(dir / "p.bin", params, false);
  CHECK(load_policy(dir / "p.bin").theta == params.theta);
  CHECK_THROWS_AS(save_policy(dir / "p.bin", params, false), ValidationError);
  CHECK_NOTHROW(save_policy(dir / "p.bin", params, true));

  const std::string text = policy_text(params);
  CHECK(std::count(text.begin(), text.end(), '\n') == 7 + params.theta.size());

  CHECK_THROWS_AS(decode_policy("garbage\n"), ParseError);
  CHECK_THROWS_AS(decode_policy(bytes.substr(0, bytes.size() - 3)), ParseError);
}

TEST_CASE("train then simulate reproduces identical trajectories") {
  TempDir dir("trainsim");
  const RunSpec s = quick_spec("double_integrator");
  RunOptions o;
  o.out_dir = dir / "a";
  CHECK(run(s, Command::Train, o) == 0);
  o.out_dir = dir / "b";
  CHECK(run(s, Command::Train, o) == 0);
  CHECK(read_file(dir / "a/policy.bin") == read_file(dir / "b/policy.bin"));
  CHECK(read_file(dir / "a/history.csv") == read_file(dir / "b/history.csv"));

  RunOptions sim;
  sim.out_dir = dir / "sim";
  sim.policy_path = dir / "a/policy.bin";
  CHECK(run(s, Command::Simulate, sim) == 0);
  CHECK(read_file(dir / "sim/trajectory.csv") == read_file(dir / "a/trajectory.csv"));

  const auto m = nlohmann::json::parse(read_file(dir / "sim/manifest.json"));
  CHECK(m["seed"] == 0);
  CHECK(m["command"] == "simulate");
  CHECK(m["config_hash"] == fnv1a_hex(canonical_config(s)));
  CHECK(m["version"] == version());

  CHECK_THROWS_AS(run(s, Command::Simulate, sim), ValidationError);
  sim.force = true;
  CHECK(run(s, Command::Simulate, sim) == 0);
  RunOptions missing;
  missing.out_dir = dir / "none";
  CHECK_THROWS_AS(run(s, Command::Simulate, missing), ValidationError);
}

TEST_CASE("experiment commands write their artifacts") {
  TempDir dir("cmds");
  const RunSpec s = quick_spec("double_integrator");
  RunOptions o;
  o.out_dir = dir / "train";
  run(s, Command::Train, o);
  RunOptions e;
  e.policy_path = dir / "train/policy.bin";
  e.jobs = 2;
  e.out_dir = dir / "rob";
  CHECK(run(s, Command::Robustness, e) == 0);
  CHECK(fs::exists(dir / "rob/records.csv"));
  const auto rob = nlohmann::json::parse(read_file(dir / "rob/summary.json"));
  CHECK(rob["count"] == 4);
  e.out_dir = dir / "doa";
  CHECK(run(s, Command::Doa, e) == 0);
  CHECK(fs::exists(dir / "doa/doa.csv"));
  e.out_dir = dir / "grad";
  CHECK(run(s, Command::Gradcheck, e) == 0);
  const auto g = nlohmann::json::parse(read_file(dir / "grad/summary.json"));
  CHECK(g["max_rel_error"].get<double>() <= 1e-3);

  const RunSpec ps = quick_spec("plasma");
  RunOptions po;
  po.out_dir = dir / "ptrain";
  run(ps, Command::Train, po);
  RunOptions pd;
  pd.policy_path = dir / "ptrain/policy.bin";
  pd.out_dir = dir / "dose";
  CHECK(run(ps, Command::Dose, pd) == 0);
  CHECK(fs::exists(dir / "dose/records.csv"));
  pd.out_dir = dir / "mismatch";
  CHECK_THROWS_AS(run(s, Command::Simulate, pd), ValidationError);
}

TEST_CASE("compare emits one row per policy") {
  TempDir dir("compare");
  RunOptions o;
  o.out_dir = dir / "di";
  CHECK(run(quick_spec("double_integrator"), Command::Compare, o) == 0);
  const std::string table = read_file(dir / "di/compare.csv");
  CHECK(table.rfind("label,violation_rate,nominal_mean_abs_u,max_overshoot", 0) == 0);
  CHECK(table.find("\nnodec,") != std::string::npos);
  CHECK(table.find("\nlnodec,") != std::string::npos);
  CHECK(table.find("\nlnodec_constrained,") != std::string::npos);
  o.out_dir = dir / "pl";
  CHECK(run(quick_spec("plasma"), Command::Compare, o) == 0);
  const std::string pt = read_file(dir / "pl/compare.csv");
  CHECK(pt.find("\nnodec_terminal,") != std::string::npos);
}

TEST_CASE("dose offsets perturb temperature only and respect the floor") {
  const ProblemSpec p = plasma();
  DoseSettings d;
  const auto off = dose_offsets(p, d);
  CHECK(off.size() == 50);
  for (const Vec& o : off) {
    CHECK(o[1] == 0.0);
    CHECK(p.x0[0] + o[0] >= 35.5);
    CHECK(p.x0[0] + o[0] <= 42.0);
  }
  CHECK(off[0][0] == doctest::Approx((35.5 + 42.0) / 2 - 37.0));
}

TEST_CASE("command names") {
  CHECK(command_from_string("doa") == Command::Doa);
  CHECK(to_string(Command::Gradcheck) == "gradcheck");
  CHECK_THROWS_AS(command_from_string("plot"), ValidationError);
}

}

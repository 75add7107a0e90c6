#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lnodec/commands.hpp"
#include "lnodec/config.hpp"
#include "lnodec/errors.hpp"

namespace {

int fail(const char* kind, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n') c = ' ';
  }
  std::fprintf(stderr, "error: %s: %s\n", kind, flat.c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov-loss neural ODE control policies"};
  app.footer("Configuration file keys and defaults:\n\n" +
             lnodec::config_reference());

  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> problem;
  lnodec::RunOptions options;
  std::string policy;
  bool extended_horizon = false;
  bool quiet = false;

  app.add_option("command", command,
                 "train | simulate | robustness | doa | dose | gradcheck | compare")
      ->required()
      ->check(CLI::IsMember({"train", "simulate", "robustness", "doa", "dose",
                             "gradcheck", "compare"}));
  app.add_option("-c,--config", config_path, "configuration file");
  app.add_option("--problem", problem,
                 "preset when no config is given (double_integrator | plasma)");
  app.add_option("--policy", policy, "policy checkpoint (policy.bin)");
  app.add_option("-o,--out", options.out_dir, "output directory")
      ->capture_default_str();
  app.add_flag("--force", options.force, "overwrite existing output files");
  app.add_option("-j,--jobs", options.jobs, "worker threads for sweeps")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--extended-horizon", extended_horizon,
               "constrained double integrator runs use t_f = 2 s");
  app.add_flag("-q,--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    lnodec::RunSpec spec;
    if (config_path) {
      spec = lnodec::parse_config(*config_path);
      if (problem && *problem != spec.problem) {
        return fail("ValidationError",
                    "--problem conflicts with the config file");
      }
    } else {
      spec = lnodec::default_run_spec(problem.value_or("double_integrator"));
    }
    if (extended_horizon) spec.extended_horizon = true;
    lnodec::apply_env_overrides(spec);
    if (!policy.empty()) options.policy_path = policy;
    if (!quiet) options.log = &std::cerr;
    return lnodec::run(spec, lnodec::command_from_string(command), options);
  } catch (const lnodec::ParseError& e) {
    return fail("ParseError", e.what());
  } catch (const lnodec::ValidationError& e) {
    return fail("ValidationError", e.what());
  } catch (const lnodec::DomainError& e) {
    return fail("DomainError", e.what());
  } catch (const lnodec::NonFiniteError& e) {
    return fail("NonFiniteError", e.what());
  } catch (const std::exception& e) {
    return fail("Error", e.what());
  }
}

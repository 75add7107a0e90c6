#include "lnodec/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "lnodec/errors.hpp"

namespace lnodec {

namespace {

struct Field {
  const char* section;
  const char* key;
  const char* doc;
  std::function<void(RunSpec&, const std::string&)> set;
  std::function<std::string(const RunSpec&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') &&
      s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ValidationError("expected a number, got '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ValidationError("expected an integer, got '" + s + "'");
  }
  return v;
}

int to_int32(const std::string& s) {
  const long long v = to_int(s);
  if (v < -2147483647LL || v > 2147483647LL) {
    throw ValidationError("integer out of range: '" + s + "'");
  }
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("expected true or false, got '" + s + "'");
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int32(trim(item)));
  if (out.empty()) throw ValidationError("expected a comma-separated list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"problem", "t_f", "horizon override in seconds (default: preset)",
       [](RunSpec& r, const std::string& v) { r.t_f = to_double(v); },
       [](const RunSpec& r) {
         return r.t_f ? fmt(*r.t_f) : std::string("\"preset\"");
       }},
      {"problem", "extended_horizon",
       "constrained double integrator uses t_f = 2 s",
       [](RunSpec& r, const std::string& v) {
         r.extended_horizon = to_bool(v);
       },
       [](const RunSpec& r) { return fmt(r.extended_horizon); }},
      {"train", "iterations", "optimizer iterations M",
       [](RunSpec& r, const std::string& v) {
         r.train.iterations = to_int32(v);
       },
       [](const RunSpec& r) { return std::to_string(r.train.iterations); }},
      {"train", "segments", "rollout segments Gamma",
       [](RunSpec& r, const std::string& v) { r.train.segments = to_int32(v); },
       [](const RunSpec& r) { return std::to_string(r.train.segments); }},
      {"train", "learning_rate", "step size alpha",
       [](RunSpec& r, const std::string& v) {
         r.train.learning_rate = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.train.learning_rate); }},
      {"train", "kappa", "exponential stability rate (1/s)",
       [](RunSpec& r, const std::string& v) { r.train.kappa = to_double(v); },
       [](const RunSpec& r) { return fmt(r.train.kappa); }},
      {"train", "beta", "constraint penalty weight",
       [](RunSpec& r, const std::string& v) { r.train.beta = to_double(v); },
       [](const RunSpec& r) { return fmt(r.train.beta); }},
      {"train", "mode", "lnodec | nodec_stage | nodec_terminal",
       [](RunSpec& r, const std::string& v) {
         r.train.mode = loss_mode_from_string(v);
       },
       [](const RunSpec& r) { return quoted(to_string(r.train.mode)); }},
      {"train", "constrained", "add the state-constraint penalty",
       [](RunSpec& r, const std::string& v) {
         r.train.constrained = to_bool(v);
       },
       [](const RunSpec& r) { return fmt(r.train.constrained); }},
      {"train", "seed", "policy initialisation seed (LNODEC_SEED overrides)",
       [](RunSpec& r, const std::string& v) {
         const long long s = to_int(v);
         if (s < 0) throw ValidationError("train.seed must be >= 0");
         r.train.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunSpec& r) { return std::to_string(r.train.seed); }},
      {"train", "optimizer", "adam | gd",
       [](RunSpec& r, const std::string& v) {
         r.train.optimizer = optimizer_from_string(v);
       },
       [](const RunSpec& r) { return quoted(to_string(r.train.optimizer)); }},
      {"train", "quadrature", "dt (time-weighted) | sum (bare sum)",
       [](RunSpec& r, const std::string& v) {
         r.train.quadrature = quadrature_from_string(v);
       },
       [](const RunSpec& r) {
         return quoted(to_string(r.train.quadrature));
       }},
      {"train", "hidden", "hidden layer widths",
       [](RunSpec& r, const std::string& v) {
         r.train.arch.hidden = to_int_list(v);
       },
       [](const RunSpec& r) {
         std::string s;
         for (int w : r.train.arch.hidden) {
           if (!s.empty()) s += ",";
           s += std::to_string(w);
         }
         return quoted(s);
       }},
      {"train", "activation", "hidden activation (tanh)",
       [](RunSpec& r, const std::string& v) {
         r.train.arch.activation = activation_from_string(v);
       },
       [](const RunSpec& r) {
         return quoted(to_string(r.train.arch.activation));
       }},
      {"grad", "engine", "discrete | adjoint",
       [](RunSpec& r, const std::string& v) {
         r.train.grad_engine = grad_engine_from_string(v);
       },
       [](const RunSpec& r) {
         return quoted(to_string(r.train.grad_engine));
       }},
      {"experiments.adversarial", "count", "number of Sobol perturbations",
       [](RunSpec& r, const std::string& v) {
         r.adversarial.count = to_int32(v);
       },
       [](const RunSpec& r) { return std::to_string(r.adversarial.count); }},
      {"experiments.adversarial", "radius", "perturbation box half-width",
       [](RunSpec& r, const std::string& v) {
         r.adversarial.radius = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.adversarial.radius); }},
      {"experiments.adversarial", "eps_bar",
       "perturbation bound in the robustness bound",
       [](RunSpec& r, const std::string& v) {
         r.adversarial.eps_bar = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.adversarial.eps_bar); }},
      {"experiments.adversarial", "lipschitz_samples",
       "sample pairs for the Lipschitz estimate",
       [](RunSpec& r, const std::string& v) {
         r.adversarial.lipschitz_samples = to_int32(v);
       },
       [](const RunSpec& r) {
         return std::to_string(r.adversarial.lipschitz_samples);
       }},
      {"experiments.doa", "x1_min", "grid lower x1",
       [](RunSpec& r, const std::string& v) { r.doa.x1_min = to_double(v); },
       [](const RunSpec& r) { return fmt(r.doa.x1_min); }},
      {"experiments.doa", "x1_max", "grid upper x1",
       [](RunSpec& r, const std::string& v) { r.doa.x1_max = to_double(v); },
       [](const RunSpec& r) { return fmt(r.doa.x1_max); }},
      {"experiments.doa", "x2_min", "grid lower x2",
       [](RunSpec& r, const std::string& v) { r.doa.x2_min = to_double(v); },
       [](const RunSpec& r) { return fmt(r.doa.x2_min); }},
      {"experiments.doa", "x2_max", "grid upper x2",
       [](RunSpec& r, const std::string& v) { r.doa.x2_max = to_double(v); },
       [](const RunSpec& r) { return fmt(r.doa.x2_max); }},
      {"experiments.doa", "n1", "grid points along x1",
       [](RunSpec& r, const std::string& v) { r.doa.n1 = to_int32(v); },
       [](const RunSpec& r) { return std::to_string(r.doa.n1); }},
      {"experiments.doa", "n2", "grid points along x2",
       [](RunSpec& r, const std::string& v) { r.doa.n2 = to_int32(v); },
       [](const RunSpec& r) { return std::to_string(r.doa.n2); }},
      {"experiments.doa", "tol", "success radius around x* (l2)",
       [](RunSpec& r, const std::string& v) { r.doa.tol = to_double(v); },
       [](const RunSpec& r) { return fmt(r.doa.tol); }},
      {"experiments.dose", "count", "number of temperature perturbations",
       [](RunSpec& r, const std::string& v) { r.dose.count = to_int32(v); },
       [](const RunSpec& r) { return std::to_string(r.dose.count); }},
      {"experiments.dose", "radius", "temperature perturbation radius (degC)",
       [](RunSpec& r, const std::string& v) { r.dose.radius = to_double(v); },
       [](const RunSpec& r) { return fmt(r.dose.radius); }},
      {"experiments.dose", "target", "CEM target (min)",
       [](RunSpec& r, const std::string& v) { r.dose.target = to_double(v); },
       [](const RunSpec& r) { return fmt(r.dose.target); }},
      {"experiments.dose", "min_temperature",
       "floor for perturbed temperatures (degC)",
       [](RunSpec& r, const std::string& v) {
         r.dose.min_temperature = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.dose.min_temperature); }},
      {"experiments.envelope", "t_start", "first checked time (s)",
       [](RunSpec& r, const std::string& v) {
         r.envelope.t_start = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.envelope.t_start); }},
      {"experiments.envelope", "tol_rel", "allowed deficit relative to V(x0)",
       [](RunSpec& r, const std::string& v) {
         r.envelope.tol_rel = to_double(v);
       },
       [](const RunSpec& r) { return fmt(r.envelope.tol_rel); }},
      {"experiments.compare", "baseline_learning_rate",
       "learning rate of the NODEC baselines (default: preset)",
       [](RunSpec& r, const std::string& v) {
         r.compare.baseline_learning_rate = to_double(v);
       },
       [](const RunSpec& r) {
         return r.compare.baseline_learning_rate
                    ? fmt(*r.compare.baseline_learning_rate)
                    : std::string("\"train.learning_rate\"");
       }},
  };
  return table;
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line;
};

std::vector<Entry> tokenize(const std::string& text) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError("expected key = value, got '" + s + "'", line);
    }
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ParseError("missing key", line);
    out.push_back({section, key, unquote(trim(s.substr(eq + 1))), line});
  }
  return out;
}

bool is_problem_key(const Entry& e) {
  return (e.section.empty() && e.key == "problem") ||
         (e.section == "problem" && e.key == "name");
}

}  // namespace

RunSpec default_run_spec(const std::string& problem) {
  problem_by_name(problem);
  RunSpec r;
  r.problem = problem;
  if (problem == "plasma") {
    r.train.beta = 50.0;
    r.train.constrained = true;
    r.compare.baseline_learning_rate = 0.005;
  }
  return r;
}

RunSpec parse_config_text(const std::string& text) {
  const std::vector<Entry> entries = tokenize(text);
  std::string problem = "double_integrator";
  int problem_line = 0;
  for (const Entry& e : entries) {
    if (is_problem_key(e)) {
      if (problem_line != 0) throw ParseError("problem given twice", e.line);
      problem = e.value;
      problem_line = e.line;
    }
  }
  RunSpec spec;
  try {
    spec = default_run_spec(problem);
  } catch (const ValidationError& err) {
    throw ParseError(err.what(), problem_line);
  }
  std::vector<std::string> seen;
  for (const Entry& e : entries) {
    if (is_problem_key(e)) continue;
    const std::string full = e.section + "." + e.key;
    const Field* field = nullptr;
    for (const Field& f : fields()) {
      if (e.section == f.section && e.key == f.key) field = &f;
    }
    if (field == nullptr) {
      throw ParseError("unknown key '" + e.key + "'" +
                           (e.section.empty() ? std::string()
                                              : " in [" + e.section + "]"),
                       e.line);
    }
    for (const std::string& s : seen) {
      if (s == full) throw ParseError("duplicate key '" + e.key + "'", e.line);
    }
    seen.push_back(full);
    try {
      field->set(spec, e.value);
    } catch (const ValidationError& err) {
      throw ParseError(full + ": " + err.what(), e.line);
    }
  }
  validate(spec);
  return spec;
}

RunSpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_env_overrides(RunSpec& spec) {
  const char* s = std::getenv("LNODEC_SEED");
  if (s == nullptr) return;
  const long long v = to_int(trim(s));
  if (v < 0) throw ValidationError("LNODEC_SEED must be >= 0");
  spec.train.seed = static_cast<std::uint64_t>(v);
}

std::string config_reference() {
  const RunSpec d = default_run_spec("double_integrator");
  const RunSpec pl = default_run_spec("plasma");
  std::ostringstream os;
  os << "problem = \"double_integrator\"   # double_integrator | plasma\n";
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      section = f.section;
      os << "\n[" << section << "]\n";
    }
    const std::string dv = f.get(d);
    const std::string pv = f.get(pl);
    os << f.key << " = " << dv << "   # " << f.doc;
    if (pv != dv) os << "; plasma default " << pv;
    os << "\n";
  }
  return os.str();
}

std::string canonical_config(const RunSpec& spec) {
  std::ostringstream os;
  os << "problem = " << quoted(spec.problem) << "\n";
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      section = f.section;
      os << "[" << section << "]\n";
    }
    if (f.section == std::string("experiments.compare") &&
        !spec.compare.baseline_learning_rate) {
      continue;
    }
    if (f.section == std::string("problem") && f.key == std::string("t_f") &&
        !spec.t_f) {
      continue;
    }
    os << f.key << " = " << f.get(spec) << "\n";
  }
  return os.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProblemSpec make_problem(const RunSpec& spec) {
  ProblemSpec p = problem_by_name(spec.problem);
  if (spec.t_f) {
    p.t_f = *spec.t_f;
  } else if (spec.extended_horizon && p.kind == SystemKind::DoubleIntegrator &&
             spec.train.constrained) {
    p.t_f = 2.0;
  }
  validate(p);
  return p;
}

TrainConfig baseline_config(const RunSpec& spec, LossMode mode) {
  TrainConfig cfg = spec.train;
  cfg.mode = mode;
  if (mode != LossMode::LNodec && spec.compare.baseline_learning_rate) {
    cfg.learning_rate = *spec.compare.baseline_learning_rate;
  }
  return cfg;
}

void validate(const RunSpec& spec) {
  problem_by_name(spec.problem);
  validate(spec.train);
  if (spec.t_f && !(*spec.t_f > 0.0)) {
    throw ValidationError("problem.t_f must be > 0");
  }
  const auto& a = spec.adversarial;
  if (a.count < 1) throw ValidationError("adversarial.count must be >= 1");
  if (!(a.radius >= 0.0)) throw ValidationError("adversarial.radius must be >= 0");
  if (!(a.eps_bar >= 0.0)) {
    throw ValidationError("adversarial.eps_bar must be >= 0");
  }
  if (a.lipschitz_samples < 1) {
    throw ValidationError("adversarial.lipschitz_samples must be >= 1");
  }
  const auto& d = spec.doa;
  if (d.n1 < 2 || d.n2 < 2) throw ValidationError("doa grid sizes must be >= 2");
  if (!(d.x1_min < d.x1_max) || !(d.x2_min < d.x2_max)) {
    throw ValidationError("doa ranges must satisfy min < max");
  }
  if (!(d.tol >= 0.0)) throw ValidationError("doa.tol must be >= 0");
  const auto& s = spec.dose;
  if (s.count < 1) throw ValidationError("dose.count must be >= 1");
  if (!(s.radius >= 0.0)) throw ValidationError("dose.radius must be >= 0");
  if (!(s.target >= 0.0)) throw ValidationError("dose.target must be >= 0");
  if (!(spec.envelope.t_start >= 0.0)) {
    throw ValidationError("envelope.t_start must be >= 0");
  }
  if (!(spec.envelope.tol_rel >= 0.0)) {
    throw ValidationError("envelope.tol_rel must be >= 0");
  }
  if (spec.compare.baseline_learning_rate &&
      !(*spec.compare.baseline_learning_rate > 0.0)) {
    throw ValidationError("compare.baseline_learning_rate must be > 0");
  }
}

}  // namespace lnodec

#include "lnodec/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lnodec/errors.hpp"

namespace lnodec {

namespace {

constexpr const char* kMagic = "LNODEC-POLICY v1";

std::string join(const Vec& v) {
  std::string s;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i > 0) s += ' ';
    s += buf;
  }
  return s;
}

std::string header(const PolicyParams& params) {
  validate(params);
  std::ostringstream os;
  os << kMagic << "\n";
  os << "arch " << params.arch.n_in << ' ';
  for (std::size_t i = 0; i < params.arch.hidden.size(); ++i) {
    if (i > 0) os << ',';
    os << params.arch.hidden[i];
  }
  os << ' ' << params.arch.n_out << ' ' << to_string(params.arch.activation)
     << "\n";
  os << "u_lb " << join(params.u_lb) << "\n";
  os << "u_ub " << join(params.u_ub) << "\n";
  os << "input_shift " << join(params.input_shift) << "\n";
  os << "n_theta " << params.theta.size() << "\n";
  os << "end\n";
  return os.str();
}

Vec read_values(std::istringstream& ls, int line) {
  std::vector<double> vals;
  double v = 0.0;
  while (ls >> v) vals.push_back(v);
  if (!ls.eof()) throw ParseError("malformed number in checkpoint", line);
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffU) << (56 - 8 * i);
    return r;
  }
  return v;
}

}  // namespace

std::string encode_policy(const PolicyParams& params) {
  std::string out = header(params);
  const std::size_t base = out.size();
  out.resize(base + 8 * static_cast<std::size_t>(params.theta.size()));
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(params.theta[i]));
    std::memcpy(&out[base + 8 * static_cast<std::size_t>(i)], &bits, 8);
  }
  return out;
}

PolicyParams decode_policy(const std::string& bytes) {
  std::size_t pos = 0;
  int line = 0;
  auto next_line = [&]() {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) {
      throw ParseError("truncated checkpoint header", line + 1);
    }
    std::string s = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    return s;
  };
  if (next_line() != kMagic) {
    throw ParseError("not an LNODEC-POLICY v1 checkpoint", line);
  }
  PolicyParams params;
  long long n_theta = -1;
  bool have_arch = false;
  for (;;) {
    const std::string s = next_line();
    if (s == "end") break;
    std::istringstream ls(s);
    std::string key;
    ls >> key;
    if (key == "arch") {
      std::string hidden;
      std::string act;
      if (!(ls >> params.arch.n_in >> hidden >> params.arch.n_out >> act)) {
        throw ParseError("malformed arch line", line);
      }
      params.arch.hidden.clear();
      std::stringstream hs(hidden);
      std::string item;
      while (std::getline(hs, item, ',')) {
        params.arch.hidden.push_back(std::stoi(item));
      }
      params.arch.activation = activation_from_string(act);
      have_arch = true;
    } else if (key == "u_lb") {
      params.u_lb = read_values(ls, line);
    } else if (key == "u_ub") {
      params.u_ub = read_values(ls, line);
    } else if (key == "input_shift") {
      params.input_shift = read_values(ls, line);
    } else if (key == "n_theta") {
      if (!(ls >> n_theta) || n_theta < 0) {
        throw ParseError("malformed n_theta line", line);
      }
    } else {
      throw ParseError("unknown checkpoint field '" + key + "'", line);
    }
  }
  if (!have_arch || n_theta < 0) {
    throw ParseError("checkpoint header missing arch or n_theta", line);
  }
  const std::size_t need = 8 * static_cast<std::size_t>(n_theta);
  if (bytes.size() - pos != need) {
    throw ParseError("checkpoint payload has " +
                         std::to_string(bytes.size() - pos) + " bytes, expected " +
                         std::to_string(need),
                     line);
  }
  params.theta.resize(n_theta);
  for (long long i = 0; i < n_theta; ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &bytes[pos + 8 * static_cast<std::size_t>(i)], 8);
    params.theta[i] = std::bit_cast<double>(to_le(bits));
  }
  validate(params);
  return params;
}

std::string policy_text(const PolicyParams& params) {
  std::string out = header(params);
  char buf[32];
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", params.theta[i]);
    out += buf;
  }
  return out;
}

void save_policy(const std::string& path, const PolicyParams& params,
                 bool force) {
  write_file(path, encode_policy(params), force);
}

PolicyParams load_policy(const std::string& path) {
  return decode_policy(read_file(path));
}

void write_file(const std::string& path, const std::string& content,
                bool force) {
  namespace fs = std::filesystem;
  if (!force && fs::exists(path)) {
    throw ValidationError("refusing to overwrite '" + path +
                          "' (use --force or a fresh directory)");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lnodec

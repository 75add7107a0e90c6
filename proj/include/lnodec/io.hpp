#pragma once

#include <string>

#include "lnodec/policy.hpp"

namespace lnodec {

/// Checkpoint layout: a text header
///
///   LNODEC-POLICY v1
///   arch <n_in> <h1,h2,...> <n_out> <activation>
///   u_lb <values>
///   u_ub <values>
///   input_shift <values>
///   n_theta <count>
///   end
///
/// followed by n_theta little-endian float64 values.
std::string encode_policy(const PolicyParams& params);
PolicyParams decode_policy(const std::string& bytes);

/// One theta value per line, preceded by the same text header.
std::string policy_text(const PolicyParams& params);

void save_policy(const std::string& path, const PolicyParams& params,
                 bool force);
PolicyParams load_policy(const std::string& path);

/// Writes `content` to `path`. Throws ValidationError when the file exists
/// and `force` is false.
void write_file(const std::string& path, const std::string& content,
                bool force);
std::string read_file(const std::string& path);

}  // namespace lnodec

#pragma once

// Plain `key = value` config files. Unknown keys are errors; missing keys
// fall back to the documented defaults (unit coefficients, Exponential(0.5,1)
// kernel, Linear(1) friction, the standard initial presets, n = 64,
// dt = 1e-3, T = 5). '#' starts a comment. Initial fields take a preset name
// or @path to a nodal table (n+1 whitespace-separated values); a tabulated
// kernel takes a samples file of "s g" pairs via kernel.samples. Relative
// paths resolve against the config file's directory.

#include <string>

#include "timo3/model.hpp"

namespace timo3cli {

struct ConfigFile {
  timo3::SimConfig<double> sim;
  std::string kernel_samples_path;  // set when the kernel came from a file
};

/// Parses and validates a config file. Throws timo3::parse_error with a
/// 1-based line number for malformed lines, unknown keys, bad values, and
/// invariant violations.
ConfigFile parse_config(const std::string& path);

/// Canonical text form: every key, floating values with 17 significant
/// digits. parse(serialize(c)) reproduces c.
std::string serialize_config(const ConfigFile& config);

}  // namespace timo3cli

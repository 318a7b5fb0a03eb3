// timo3 — simulator and verification toolkit for a 1D Timoshenko beam with
// type-III thermal dynamics, viscoelastic memory, and frictional damping.

#include <cstdio>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "timo3/version.hpp"

namespace {

void usage() {
  std::printf(
      "timo3 %s\n"
      "usage:\n"
      "  timo3 run      --config <path> [--out <dir>] [--override-hypotheses]\n"
      "  timo3 spectrum --config <path> [--out <dir>] [--override-hypotheses]\n"
      "  timo3 verify   --config <path>\n"
      "  timo3 fit      <energy.csv> [--window <t_lo:t_hi>]\n"
      "  timo3 check    --config <path>\n"
      "\n"
      "run writes energy.csv + manifest.txt; spectrum writes spectrum.csv +\n"
      "manifest.txt; verify prints a pass/fail table; fit prints the decay\n"
      "fit of an energy series; check prints the hypothesis reports.\n",
      timo3::kVersion);
}

struct Args {
  std::string config;
  std::string out = ".";
  std::optional<std::pair<double, double>> window;
  bool override_hypotheses = false;
  std::vector<std::string> positional;
};

bool parse_args(int argc, char** argv, Args& args) {
  for (int i = 2; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config") {
      if (++i >= argc) return false;
      args.config = argv[i];
    } else if (a == "--out") {
      if (++i >= argc) return false;
      args.out = argv[i];
    } else if (a == "--window") {
      if (++i >= argc) return false;
      const std::string w = argv[i];
      const std::size_t colon = w.find(':');
      if (colon == std::string::npos) return false;
      try {
        args.window = {std::stod(w.substr(0, colon)), std::stod(w.substr(colon + 1))};
      } catch (const std::exception&) {
        return false;
      }
    } else if (a == "--override-hypotheses") {
      args.override_hypotheses = true;
    } else if (!a.empty() && a[0] == '-') {
      std::cerr << "unknown flag '" << a << "'\n";
      return false;
    } else {
      args.positional.push_back(a);
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage();
    return 1;
  }
  const std::string cmd = argv[1];
  Args args;
  if (!parse_args(argc, argv, args)) {
    usage();
    return 1;
  }

  if (cmd == "run" || cmd == "spectrum" || cmd == "verify" || cmd == "check") {
    if (args.config.empty()) {
      std::cerr << cmd << " needs --config <path>\n";
      return 1;
    }
    if (cmd == "run")
      return timo3cli::cmd_run(args.config, args.out, args.override_hypotheses);
    if (cmd == "spectrum")
      return timo3cli::cmd_spectrum(args.config, args.out, args.override_hypotheses);
    if (cmd == "verify") return timo3cli::cmd_verify(args.config);
    return timo3cli::cmd_check(args.config);
  }
  if (cmd == "fit") {
    if (args.positional.size() != 1) {
      std::cerr << "fit needs the energy.csv path\n";
      return 1;
    }
    return timo3cli::cmd_fit(args.positional[0], args.window);
  }
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    usage();
    return 0;
  }
  std::cerr << "unknown subcommand '" << cmd << "'\n";
  usage();
  return 1;
}

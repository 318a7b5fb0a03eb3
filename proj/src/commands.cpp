#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "config.hpp"
#include "timo3/diagnostics.hpp"
#include "timo3/generator.hpp"
#include "timo3/integrator.hpp"
#include "timo3/version.hpp"

namespace timo3cli {

namespace fs = std::filesystem;
using namespace timo3;

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const fs::path& dir, const ConfigFile& config,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& extra) {
  std::ofstream mf(dir / "manifest.txt");
  mf << "artifact = timo3 " << kVersion << "\n";
  mf << "created = " << timestamp() << "\n";
  for (const auto& o : outputs) mf << "output = " << o << "\n";
  for (const auto& e : extra) mf << e << "\n";
  mf << "--- resolved config ---\n" << serialize_config(config);
}

struct CsvSeries {
  std::vector<EnergyRecord<double>> records;
};

CsvSeries read_energy_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw parse_error("empty CSV '" + path + "'");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  int t_col = -1, e_col = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "t") t_col = static_cast<int>(i);
    if (cols[i] == "E") e_col = static_cast<int>(i);
  }
  if (t_col < 0 || e_col < 0)
    throw parse_error("CSV '" + path + "' lacks t and E columns");

  CsvSeries out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) {
      try {
        vals.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw parse_error("bad number '" + tok + "'", line_no);
      }
    }
    if (vals.size() != cols.size())
      throw parse_error("row has wrong column count", line_no);
    EnergyRecord<double> rec;
    rec.t = vals[t_col];
    rec.E = vals[e_col];
    out.records.push_back(rec);
  }
  return out;
}

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

void print_check_table(const std::vector<CheckLine>& lines) {
  for (const auto& c : lines)
    std::printf("[%s] %-28s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.c_str());
}

double max_residual(const Trajectory<double>& traj) {
  double m = 0;
  for (const auto& r : traj.records) m = std::max(m, r.residual);
  return m;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool override_hypotheses) {
  ConfigFile config;
  try {
    config = parse_config(config_path);
  } catch (const parse_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (override_hypotheses) config.sim.override_hypotheses = true;

  Trajectory<double> traj;
  try {
    traj = run(config.sim);
  } catch (const hypothesis_error& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 2;
  } catch (const blowup_error& e) {
    std::cerr << "blow-up: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "energy.csv");
    csv << "t,E,D,residual,I1,I2,I3,I4,L,mean_z\n";
    for (const auto& r : traj.records)
      csv << fmt(r.t) << ',' << fmt(r.E) << ',' << fmt(r.D) << ','
          << fmt(r.residual) << ',' << fmt(r.I1) << ',' << fmt(r.I2) << ','
          << fmt(r.I3) << ',' << fmt(r.I4) << ',' << fmt(r.Lyap) << ','
          << fmt(r.mean_z) << "\n";
  }
  write_manifest(dir, config, {"energy.csv"},
                 {"records = " + std::to_string(traj.records.size()),
                  "E_initial = " + fmt(traj.records.front().E),
                  "E_final = " + fmt(traj.records.back().E),
                  "max_identity_residual = " + fmt(max_residual(traj))});
  std::cout << "wrote " << (dir / "energy.csv").string() << " ("
            << traj.records.size() << " records)\n";
  return 0;
}

int cmd_spectrum(const std::string& config_path, const std::string& out_dir,
                 bool override_hypotheses) {
  ConfigFile config;
  try {
    config = parse_config(config_path);
  } catch (const parse_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (override_hypotheses) config.sim.override_hypotheses = true;

  const bool exp_kernel =
      config.sim.kernel.family == MemoryKernel<double>::Family::Exponential &&
      !config.sim.kernel.is_zero();
  const GeneratorMode mode =
      exp_kernel ? GeneratorMode::ExpAugmented : GeneratorMode::NoMemory;

  SpectrumReport<double> report;
  try {
    report = spectrum(assemble(config.sim, config.sim.n, mode));
  } catch (const std::exception& e) {
    std::cerr << "spectrum failed: " << e.what() << "\n";
    return 1;
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "spectrum.csv");
    csv << "re,im\n";
    for (const auto& ev : report.eigenvalues)
      csv << fmt(ev.real()) << ',' << fmt(ev.imag()) << "\n";
  }
  write_manifest(dir, config, {"spectrum.csv"},
                 {std::string("mode = ") +
                      (mode == GeneratorMode::ExpAugmented ? "exp-augmented"
                                                           : "no-memory"),
                  "abscissa = " + fmt(report.abscissa),
                  "dominant = " + fmt(report.dominant.real()) + " + " +
                      fmt(report.dominant.imag()) + "i"});
  std::cout << "wrote " << (dir / "spectrum.csv").string() << " (abscissa "
            << fmt(report.abscissa) << ")\n";
  return 0;
}

int cmd_verify(const std::string& config_path) {
  ConfigFile config;
  try {
    config = parse_config(config_path);
  } catch (const parse_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  std::vector<CheckLine> checks;
  try {
    // 1. energy-balance residual convergence under dt halving
    SimConfig<double> cfg = config.sim;
    cfg.T = std::min(cfg.T, 2.0);
    cfg.stride = 1;
    cfg.store_states = false;
    auto traj_a = run(cfg);
    const double res_a = max_residual(traj_a);
    SimConfig<double> half = cfg;
    half.dt = cfg.dt / 2;
    const double res_b = max_residual(run(half));
    const double factor = res_b > 0 ? res_a / res_b : 1e9;
    checks.push_back({"energy identity convergence", factor >= 1.5,
                      "residual " + fmt(res_a) + " -> " + fmt(res_b) +
                          " (factor " + fmt(factor) + ")"});

    // 2. mean conservation of theta_t
    double drift = 0;
    for (const auto& r : traj_a.records)
      drift = std::max(drift, std::abs(r.mean_z - traj_a.records.front().mean_z));
    const double tol = 1e-8 * (1 + std::abs(traj_a.records.front().mean_z));
    checks.push_back({"mean(theta_t) conservation", drift <= tol,
                      "max drift " + fmt(drift)});

    // 3. convolution oracle: manufactured sin(pi x) sin(s) history
    {
      const auto kernel = MemoryKernel<double>::exponential(0.5, 1.0);
      const Grid<double> grid(32, 1.0);
      const double T = 2.0;
      auto max_err = [&](double dt) {
        auto h = make_history(kernel, 0.0);
        const int steps = static_cast<int>(std::round(T / dt));
        for (int k = 0; k <= steps; ++k) {
          auto f = sample_field(
              grid,
              [&](double x) { return std::sin(M_PI * x) * std::sin(k * dt); },
              BoundaryTag::DirichletZero);
          push(h, k * dt, f);
        }
        auto conv = convolve(grid, h, kernel, T);
        const double factor =
            0.5 * (std::sin(T) - std::cos(T) + std::exp(-T)) / 2.0;
        double err = 0;
        for (int j = 0; j <= grid.n; ++j)
          err = std::max(err, std::abs(conv.values[j] -
                                       factor * std::sin(M_PI * grid.node(j))));
        return err;
      };
      const double e1 = max_err(0.02), e2 = max_err(0.01);
      const double order = std::log2(e1 / e2);
      checks.push_back({"convolution oracle", order >= 1.9,
                        "observed order " + fmt(order)});
    }

    // 4/5. resolvent and coercivity need a linear generator
    if (config.sim.friction.is_linear()) {
      auto gen = assemble(config.sim, std::min(config.sim.n, 64),
                          GeneratorMode::NoMemory);
      std::mt19937 rng(12345);
      std::normal_distribution<double> dist;
      double worst = 0;
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd b(gen.layout.dim);
        for (int i = 0; i < b.size(); ++i) b[i] = dist(rng);
        b.normalize();
        worst = std::max(worst, solve_resolvent(gen, b).residual);
      }
      checks.push_back({"resolvent solvability", worst <= 1e-10,
                        "max residual " + fmt(worst)});

      auto coer = coercivity(config.sim, std::min(config.sim.n, 64));
      checks.push_back({"stationary-form coercivity", coer.alpha0 > 0,
                        "alpha0 " + fmt(coer.alpha0) + ", continuity " +
                            fmt(coer.c_bound)});
    } else {
      checks.push_back({"resolvent solvability", true,
                        "skipped (nonlinear friction)"});
      checks.push_back({"stationary-form coercivity", true,
                        "skipped (nonlinear friction)"});
    }
  } catch (const hypothesis_error& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "verify failed: " << e.what() << "\n";
    return 1;
  }

  print_check_table(checks);
  for (const auto& c : checks)
    if (!c.pass) return 1;
  return 0;
}

int cmd_fit(const std::string& csv_path,
            const std::optional<std::pair<double, double>>& window) {
  try {
    const CsvSeries series = read_energy_csv(csv_path);
    if (series.records.size() < 2) {
      std::cerr << "fit: need at least two records\n";
      return 1;
    }
    double lo, hi;
    if (window) {
      lo = window->first;
      hi = window->second;
    } else {
      std::tie(lo, hi) = default_fit_window(series.records);
    }
    const auto fit = fit_decay(series.records, lo, hi);
    std::printf("window = [%s, %s]\n", fmt(fit.t_lo).c_str(), fmt(fit.t_hi).c_str());
    std::printf("C0 = %s\n", fmt(fit.C0).c_str());
    std::printf("delta0 = %s\n", fmt(fit.delta0).c_str());
    std::printf("r_squared = %s\n", fmt(fit.r_squared).c_str());
    return (fit.delta0 > 0 && fit.r_squared >= 0.995) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "fit failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_check(const std::string& config_path) {
  ConfigFile config;
  try {
    config = parse_config(config_path);
  } catch (const parse_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  const KernelReport kr = check_kernel(config.sim.kernel);
  std::printf("kernel: g0_positive=%s l=%s xi_estimate=%s ok=%s (%s)\n",
              kr.g0_positive ? "true" : "false", fmt(kr.l).c_str(),
              fmt(kr.xi_estimate).c_str(), kr.ok ? "true" : "false",
              kr.reason.c_str());
  const FrictionReport fr =
      check_friction(config.sim.friction, config.sim.friction.eps_prime,
                     100.0 * std::max(1.0, config.sim.friction.eps_prime));
  std::printf("friction: c_lower=%s c_upper=%s monotone=%s ok=%s\n",
              fmt(fr.c_lower).c_str(), fmt(fr.c_upper).c_str(),
              fr.monotone ? "true" : "false", fr.ok ? "true" : "false");
  return (kr.ok && fr.ok) ? 0 : 2;
}

}  // namespace timo3cli

// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Each criterion pins its own model, resolution, and tolerance.

#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "timo3/diagnostics.hpp"
#include "timo3/generator.hpp"
#include "timo3/integrator.hpp"

using namespace timo3;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str());
  if (!pass) ++failures;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double max_residual(const Trajectory<double>& traj) {
  double m = 0;
  for (const auto& r : traj.records) m = std::max(m, r.residual);
  return m;
}

SimConfig<double> default_config() { return SimConfig<double>{}; }

SimConfig<double> memory_free_config() {
  SimConfig<double> cfg;
  cfg.kernel = MemoryKernel<double>::exponential(0.0, 1.0);
  cfg.override_hypotheses = true;  // the g(0) > 0 gate fails by construction
  return cfg;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;

  // ---- criteria 1, 2, 3, 5, 9 share the default run (n=64, dt=1e-3, T=5)
  const auto t_start = clock::now();
  SimConfig<double> def = default_config();
  const Trajectory<double> base = run(def);

  SimConfig<double> half = def;
  half.dt = 5e-4;
  const Trajectory<double> base_half = run(half);

  SimConfig<double> free_cfg = memory_free_config();
  const Trajectory<double> free_a = run(free_cfg);
  free_cfg.dt = 5e-4;
  const Trajectory<double> free_b = run(free_cfg);
  const double elapsed_c1 =
      std::chrono::duration<double>(clock::now() - t_start).count();

  // 1. energy dissipation identity: residual size and convergence factors
  {
    const double res = max_residual(base);
    const double factor_mem = res / max_residual(base_half);
    const double factor_free = max_residual(free_a) / max_residual(free_b);
    const bool pass = res <= 1e-3 && factor_mem >= 1.8 && factor_free >= 3.5 &&
                      elapsed_c1 <= 30.0;
    report(1, pass, "energy dissipation identity",
           "max residual " + num(res) + ", dt-halving factor " +
               num(factor_mem) + ", g==0 factor " + num(factor_free) +
               ", runtime " + num(elapsed_c1) + " s");
  }

  // 2. E >= 0 and monotone up to 1e-10 E0 on every record
  {
    bool pass = true;
    const double slack = 1e-10 * base.E0();
    for (std::size_t i = 0; i < base.records.size(); ++i) {
      if (base.records[i].E < 0) pass = false;
      if (i > 0 && base.records[i].E > base.records[i - 1].E + slack) pass = false;
    }
    report(2, pass, "energy positivity and monotonicity",
           "E0 " + num(base.E0()) + ", E(T) " + num(base.records.back().E));
  }

  // 3. exponential decay fit on [2, 5] plus the halving sanity floor
  {
    const auto fit = fit_decay(base.records, 2.0, 5.0);
    const double ratio = base.records.back().E / base.E0();
    const bool pass = fit.delta0 > 0 && fit.r_squared >= 0.995 && ratio <= 0.5;
    report(3, pass, "exponential decay fit",
           "delta0 " + num(fit.delta0) + ", r^2 " + num(fit.r_squared) +
               ", E(5)/E(0) " + num(ratio));
  }

  // 4. spectral abscissa vs the fitted rate of a long run (n = 32)
  {
    SimConfig<double> cfg = default_config();
    cfg.n = 32;
    const auto rep = spectrum(assemble(cfg, 32, GeneratorMode::ExpAugmented));
    cfg.T = 40.0;
    cfg.stride = 10;
    const auto traj = run(cfg);
    const auto [lo, hi] = default_fit_window(traj.records);
    const auto fit = fit_decay(traj.records, lo, hi);
    const double target = -2.0 * rep.abscissa;
    const bool pass = rep.abscissa < 0 &&
                      std::abs(fit.delta0 - target) <= 0.1 * target;
    report(4, pass, "spectrum vs trajectory decay rate",
           "abscissa " + num(rep.abscissa) + ", 2|s*| " + num(target) +
               ", fitted delta0 " + num(fit.delta0));
  }

  // 5. mean of theta_t conserved along the default run
  {
    double drift = 0;
    for (const auto& r : base.records)
      drift = std::max(drift, std::abs(r.mean_z - base.records.front().mean_z));
    report(5, drift <= 1e-8, "mean(theta_t) conservation",
           "max drift " + num(drift));
  }

  // 6. convolution oracle: manufactured history, both evaluation paths
  {
    const Grid<double> grid(64, 1.0);
    const auto kernel = MemoryKernel<double>::exponential(0.5, 1.0);
    const double T = 2.0;
    auto exact_factor = [&](double t) {
      return kernel.a * (kernel.b * std::sin(t) - std::cos(t) +
                         std::exp(-kernel.b * t)) / (1.0 + kernel.b * kernel.b);
    };
    auto level = [&](double t) {
      return sample_field(
          grid, [&](double x) { return std::sin(M_PI * x) * std::sin(t); },
          BoundaryTag::DirichletZero);
    };
    auto errors = [&](double dt) {
      auto h = make_history(kernel, 0.0);
      auto rec = make_recursive(kernel, 0.0, Eigen::VectorXd(level(0.0).values));
      const int steps = static_cast<int>(std::round(T / dt));
      push(h, 0.0, level(0.0));
      for (int k = 1; k <= steps; ++k) {
        push(h, k * dt, level(k * dt));
        recursive_update(rec, Eigen::VectorXd(level(k * dt).values), dt);
      }
      const auto conv = convolve(grid, h, kernel, T);
      double e_conv = 0, e_rec = 0, mutual = 0;
      for (int j = 0; j <= grid.n; ++j) {
        const double exact = exact_factor(T) * std::sin(M_PI * grid.node(j));
        e_conv = std::max(e_conv, std::abs(conv.values[j] - exact));
        e_rec = std::max(e_rec, std::abs(rec.w[j] - exact));
        mutual = std::max(mutual, std::abs(conv.values[j] - rec.w[j]));
      }
      return std::array<double, 3>{e_conv, e_rec, mutual};
    };
    const auto c1 = errors(0.02), c2 = errors(0.01), c3 = errors(0.005);
    const double order_conv =
        std::min(std::log2(c1[0] / c2[0]), std::log2(c2[0] / c3[0]));
    const double order_rec =
        std::min(std::log2(c1[1] / c2[1]), std::log2(c2[1] / c3[1]));
    const bool mutual_ok = c1[2] <= c1[0] + c1[1] && c2[2] <= c2[0] + c2[1] &&
                           c3[2] <= c3[0] + c3[1];
    const bool pass = order_conv >= 1.9 && order_rec >= 1.9 && mutual_ok;
    report(6, pass, "convolution oracle",
           "orders " + num(order_conv) + " / " + num(order_rec) +
               ", mutual gap " + num(c3[2]));
  }

  // 7. matrix-exponential oracle: linear memory-free model, n=16, dt=1e-4, T=1
  {
    SimConfig<double> cfg = memory_free_config();
    cfg.n = 16;
    cfg.dt = 1e-4;
    cfg.T = 1.0;
    cfg.stride = 1000;
    cfg.store_states = true;
    const auto traj = run(cfg);

    const Grid<double> grid(cfg.n, 1.0);
    const auto gen = assemble(cfg, cfg.n, GeneratorMode::NoMemory);
    const Eigen::VectorXd y0 =
        pack_state(grid, make_state(grid, cfg.init), gen.layout);
    const Eigen::VectorXd y_exact = (cfg.T * gen.A).exp() * y0;
    const Eigen::VectorXd y_num =
        pack_state(grid, traj.states.back(), gen.layout);
    const double rel = (y_num - y_exact).norm() / y_exact.norm();
    report(7, rel <= 1e-4, "matrix-exponential oracle",
           "relative endpoint error " + num(rel));
  }

  // 8. resolvent residuals and coercivity across resolutions
  {
    bool pass = true;
    std::string detail;
    std::mt19937 rng(2024);
    std::normal_distribution<double> dist;
    for (int n : {8, 16, 32}) {
      SimConfig<double> cfg = default_config();
      cfg.n = n;
      for (GeneratorMode mode :
           {GeneratorMode::NoMemory, GeneratorMode::ExpAugmented}) {
        const auto gen = assemble(cfg, n, mode);
        for (int trial = 0; trial < 20; ++trial) {
          Eigen::VectorXd b(gen.layout.dim);
          for (int i = 0; i < b.size(); ++i) b[i] = dist(rng);
          b.normalize();
          if (solve_resolvent(gen, b).residual > 1e-10) pass = false;
        }
      }
      const auto coer = coercivity(cfg, n);
      if (!(coer.alpha0 > 0)) pass = false;
      detail += "alpha0(n=" + std::to_string(n) + ") " + num(coer.alpha0) + "  ";
    }
    report(8, pass, "resolvent and coercivity", detail);
  }

  // 9. Lyapunov machinery on the default run with the recorded weights
  {
    bool weights_ok = true;
    for (const auto& r : base.records)
      if (!check_weights(def.weights, def.kernel, def.friction, r.t).all_ok)
        weights_ok = false;
    const auto eq = equivalence_ratios(base.records);
    const bool pass = weights_ok && eq.defined && eq.c1 > 0 && eq.c1 <= eq.c2;
    report(9, pass, "Lyapunov weights and L ~ E equivalence",
           "c1 " + num(eq.c1) + ", c2 " + num(eq.c2));
  }

  // 10. hypothesis gates
  {
    const auto kr = check_kernel(MemoryKernel<double>::exponential(2.0, 1.0));
    const auto fr =
        check_friction(FrictionLaw<double>::rational_cubic(1.0), 1.0, 100.0);
    const bool pass = !kr.ok && kr.l <= 0 && fr.ok &&
                      std::abs(fr.c_lower - 0.5) <= 1e-3;
    report(10, pass, "hypothesis gates",
           "l " + num(kr.l) + ", c_lower " + num(fr.c_lower));
  }

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures;
}

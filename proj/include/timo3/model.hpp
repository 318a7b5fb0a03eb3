#pragma once

// Physical parameters, relaxation-kernel and friction-law families, initial
// data presets, and the sampling-based hypothesis checkers that gate a run.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "timo3/errors.hpp"
#include "timo3/grid.hpp"

namespace timo3 {

// ---------------------------------------------------------------------------
// Coefficients

/// Positive material/coupling constants of the beam system. Defaults are the
/// unit normalization; tests decouple subsystems by zeroing mu/gamma via the
/// override path.
template <typename Scalar>
struct Coefficients {
  Scalar rho1 = 1, rho2 = 1, rho3 = 1;  // densities / thermal capacity
  Scalar k1 = 1, k2 = 1;                // shear and bending stiffness
  Scalar mu = 1;                        // frictional damping on phi
  Scalar beta = 1, delta = 1;           // thermal conductivities
  Scalar gamma = 1;                     // thermal-rotational coupling
  Scalar length = 1;                    // domain length L

  /// Densities, stiffnesses, conductivities and L must be strictly positive;
  /// the damping/coupling constants mu and gamma may vanish (decoupled runs).
  void validate() const {
    const Scalar strict[] = {rho1, rho2, rho3, k1, k2, beta, delta, length};
    const char* strict_names[] = {"rho1", "rho2", "rho3", "k1",
                                  "k2",   "beta", "delta", "L"};
    for (int i = 0; i < 8; ++i)
      if (!(strict[i] > Scalar(0)))
        throw contract_error(std::string("coefficients: ") + strict_names[i] +
                             " must be strictly positive");
    if (mu < Scalar(0) || gamma < Scalar(0))
      throw contract_error("coefficients: mu and gamma must be >= 0");
  }

  /// True iff k1/rho1 and k2/rho2 agree to 1e-12 (the exponential-decay regime).
  bool equal_wave_speeds() const {
    using std::abs;
    return abs(k1 / rho1 - k2 / rho2) <= Scalar(1e-12);
  }
};

// ---------------------------------------------------------------------------
// MemoryKernel

/// Relaxation kernel g of the viscoelastic term. Exponential a*exp(-b s) is
/// the fast-path family (g' = -b g, so the decay-rate hypothesis holds with
/// xi == b); Tabulated is piecewise linear in its samples and zero beyond the
/// last one. a == 0 encodes the memory-free model (fails the g(0) > 0 gate by
/// design; runs need the override flag).
template <typename Scalar>
struct MemoryKernel {
  enum class Family { Exponential, Tabulated };

  Family family = Family::Exponential;
  Scalar a = Scalar(0.5);
  Scalar b = Scalar(1);
  Eigen::VectorX<Scalar> sample_times;
  Eigen::VectorX<Scalar> sample_values;
  Scalar xi_bound = Scalar(0);  // recorded decay-rate floor for tabulated data

  static MemoryKernel exponential(Scalar a, Scalar b) {
    MemoryKernel k;
    k.family = Family::Exponential;
    k.a = a;
    k.b = b;
    return k;
  }

  static MemoryKernel tabulated(Eigen::VectorX<Scalar> times,
                                Eigen::VectorX<Scalar> values,
                                Scalar xi_bound = Scalar(0)) {
    if (times.size() != values.size() || times.size() < 2)
      throw contract_error("kernel: need matching sample arrays of size >= 2");
    if (times[0] != Scalar(0))
      throw contract_error("kernel: samples must start at s = 0");
    for (int i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw contract_error("kernel: sample times must be strictly increasing");
    MemoryKernel k;
    k.family = Family::Tabulated;
    k.sample_times = std::move(times);
    k.sample_values = std::move(values);
    k.xi_bound = xi_bound;
    return k;
  }

  bool is_zero() const {
    return family == Family::Exponential && a == Scalar(0);
  }
};

template <typename Scalar>
Scalar kernel_eval(const MemoryKernel<Scalar>& kernel, Scalar s) {
  if (s < Scalar(0)) throw std::domain_error("kernel_eval: s must be >= 0");
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential)
    return kernel.a * std::exp(-kernel.b * s);
  const auto& ts = kernel.sample_times;
  const auto& vs = kernel.sample_values;
  const int m = static_cast<int>(ts.size());
  if (s >= ts[m - 1]) return Scalar(0);
  int hi = 1;
  while (ts[hi] < s) ++hi;
  const Scalar w = (s - ts[hi - 1]) / (ts[hi] - ts[hi - 1]);
  return (Scalar(1) - w) * vs[hi - 1] + w * vs[hi];
}

/// Slope of g at s. Exponential: exact -b*g. Tabulated: slope of the linear
/// interpolant (at a sample node, the mean of the adjacent segment slopes).
template <typename Scalar>
Scalar kernel_deriv(const MemoryKernel<Scalar>& kernel, Scalar s) {
  if (s < Scalar(0)) throw std::domain_error("kernel_deriv: s must be >= 0");
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential)
    return -kernel.b * kernel_eval(kernel, s);
  const auto& ts = kernel.sample_times;
  const auto& vs = kernel.sample_values;
  const int m = static_cast<int>(ts.size());
  if (s >= ts[m - 1]) return Scalar(0);
  auto slope = [&](int seg) { return (vs[seg + 1] - vs[seg]) / (ts[seg + 1] - ts[seg]); };
  int hi = 1;
  while (ts[hi] < s) ++hi;
  if (s == ts[hi - 1] && hi >= 2) return (slope(hi - 2) + slope(hi - 1)) / Scalar(2);
  return slope(hi - 1);
}

/// int_0^t g(s) ds, closed form for Exponential, exact piecewise-linear
/// integral for Tabulated. Nondecreasing in t with limit 1 - l.
template <typename Scalar>
Scalar kernel_mass(const MemoryKernel<Scalar>& kernel, Scalar t) {
  if (t < Scalar(0)) throw std::domain_error("kernel_mass: t must be >= 0");
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential) {
    if (kernel.b == Scalar(0)) return kernel.a * t;
    return kernel.a / kernel.b * (Scalar(1) - std::exp(-kernel.b * t));
  }
  const auto& ts = kernel.sample_times;
  const auto& vs = kernel.sample_values;
  const int m = static_cast<int>(ts.size());
  Scalar acc = 0;
  for (int i = 0; i + 1 < m; ++i) {
    if (t <= ts[i]) break;
    const Scalar hi = std::min(t, ts[i + 1]);
    const Scalar g_hi = kernel_eval(kernel, hi);
    acc += (hi - ts[i]) * (vs[i] + g_hi) / Scalar(2);
  }
  return acc;
}

/// Total mass int_0^inf g(s) ds.
template <typename Scalar>
Scalar kernel_total_mass(const MemoryKernel<Scalar>& kernel) {
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential)
    return kernel.b > Scalar(0)
               ? kernel.a / kernel.b
               : (kernel.a == Scalar(0) ? Scalar(0)
                                        : std::numeric_limits<Scalar>::infinity());
  return kernel_mass(kernel,
                     kernel.sample_times[kernel.sample_times.size() - 1]);
}

/// l = 1 - int_0^inf g; must be positive for the energy to stay coercive.
template <typename Scalar>
Scalar kernel_l(const MemoryKernel<Scalar>& kernel) {
  return Scalar(1) - kernel_total_mass(kernel);
}

/// Decay-rate constant xi with g' <= -xi g. Exact b for Exponential; the
/// recorded bound for Tabulated.
template <typename Scalar>
Scalar kernel_xi(const MemoryKernel<Scalar>& kernel) {
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential) return kernel.b;
  return kernel.xi_bound;
}

/// Time horizon beyond which g(tau) <= eps * g(0); +inf when eps <= 0.
template <typename Scalar>
Scalar kernel_horizon(const MemoryKernel<Scalar>& kernel, Scalar eps) {
  if (eps <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential) {
    if (kernel.a == Scalar(0)) return Scalar(0);
    if (kernel.b <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return std::log(Scalar(1) / eps) / kernel.b;
  }
  const auto& ts = kernel.sample_times;
  const Scalar g0 = kernel.sample_values[0];
  Scalar horizon = ts[ts.size() - 1];
  for (int i = static_cast<int>(ts.size()) - 1; i >= 0; --i) {
    if (kernel.sample_values[i] > eps * g0) break;
    horizon = ts[i];
  }
  return horizon;
}

struct KernelReport {
  bool g0_positive = false;
  double l = 0;
  double xi_estimate = 0;              // largest admissible constant xi
  std::vector<double> xi_samples;      // per-sample -g'/g ratios
  bool ok = false;
  std::string reason;
};

/// Sampling-based check of the kernel hypotheses: g(0) > 0, mass < 1, and a
/// finite-difference estimate of -g'/g staying positive. Tolerance 1e-9 on a
/// 257-point grid over the kernel's support.
template <typename Scalar>
KernelReport check_kernel(const MemoryKernel<Scalar>& kernel) {
  KernelReport report;
  const double tol = 1e-9;
  const double g0 = static_cast<double>(kernel_eval(kernel, Scalar(0)));
  report.g0_positive = g0 > 0;
  report.l = static_cast<double>(kernel_l(kernel));

  double s_max;
  if (kernel.family == MemoryKernel<Scalar>::Family::Exponential)
    s_max = kernel.b > Scalar(0) ? std::log(1e6) / static_cast<double>(kernel.b)
                                 : 1.0;
  else
    s_max = static_cast<double>(
        kernel.sample_times[kernel.sample_times.size() - 1]);

  if (report.g0_positive) {
    const int m = 257;
    const double h = s_max / (m - 1) * 1e-3;
    auto g_at = [&](double s) {
      return static_cast<double>(kernel_eval(kernel, Scalar(s)));
    };
    double xi_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double s = s_max * i / (m - 1);
      const double g = g_at(s);
      if (g <= tol * g0) break;  // beyond the effective support
      // centered difference; second-order one-sided next to s = 0
      const double gp = s >= h
                            ? (g_at(s + h) - g_at(s - h)) / (2 * h)
                            : (-3 * g_at(s) + 4 * g_at(s + h) - g_at(s + 2 * h)) /
                                  (2 * h);
      const double ratio = -gp / g;
      report.xi_samples.push_back(ratio);
      xi_min = std::min(xi_min, ratio);
    }
    report.xi_estimate = report.xi_samples.empty() ? 0.0 : xi_min;
  }

  if (!report.g0_positive)
    report.reason = "g(0) = " + std::to_string(g0) + " <= 0";
  else if (!(report.l > 0))
    report.reason = "l = " + std::to_string(report.l) + " <= 0";
  else if (!(report.xi_estimate > -tol))
    report.reason = "-g'/g dips to " + std::to_string(report.xi_estimate) +
                    " (kernel not decaying)";
  report.ok = report.g0_positive && report.l > 0 &&
              report.xi_estimate > -tol && !report.xi_samples.empty();
  if (report.ok) report.reason = "ok";
  return report;
}

// ---------------------------------------------------------------------------
// FrictionLaw

/// Nonlinear damping h acting on psi_t. Linear(alpha) = alpha*s;
/// RationalCubic(alpha) = alpha*s^3/(1+s^2) (cubic at the origin,
/// asymptotically linear, nondecreasing for alpha >= 0). c_lower/c_upper/
/// eps_prime store the linear-growth hypothesis data; comparison_tag names
/// the convexity comparison function without ever evaluating it.
template <typename Scalar>
struct FrictionLaw {
  enum class Family { Linear, RationalCubic };

  Family family = Family::Linear;
  Scalar alpha = Scalar(1);
  Scalar c_lower = Scalar(1);
  Scalar c_upper = Scalar(1);
  Scalar eps_prime = Scalar(1);
  std::string comparison_tag = "identity";

  static FrictionLaw linear(Scalar alpha) {
    FrictionLaw law;
    law.family = Family::Linear;
    law.alpha = alpha;
    law.c_lower = alpha;
    law.c_upper = alpha;
    law.eps_prime = Scalar(1);
    return law;
  }

  static FrictionLaw rational_cubic(Scalar alpha) {
    FrictionLaw law;
    law.family = Family::RationalCubic;
    law.alpha = alpha;
    law.c_lower = alpha / Scalar(2);  // attained at |s| = 1
    law.c_upper = alpha;
    law.eps_prime = Scalar(1);
    law.comparison_tag = "quadratic-near-origin";
    return law;
  }

  Scalar eval(Scalar s) const {
    if (family == Family::Linear) return alpha * s;
    return alpha * s * s * s / (Scalar(1) + s * s);
  }

  Scalar derivative(Scalar s) const {
    if (family == Family::Linear) return alpha;
    const Scalar s2 = s * s;
    const Scalar denom = (Scalar(1) + s2) * (Scalar(1) + s2);
    return alpha * (s2 * s2 + Scalar(3) * s2) / denom;
  }

  bool is_linear() const { return family == Family::Linear; }
};

template <typename Scalar>
Scalar friction_eval(const FrictionLaw<Scalar>& law, Scalar s) {
  return law.eval(s);
}

struct FrictionReport {
  double c_lower = 0;
  double c_upper = 0;
  bool monotone = false;
  bool ok = false;
};

/// Estimates the linear-growth constants of h over |s| in [eps_prime,
/// sample_max] by dense sampling, and checks monotonicity on a symmetric grid.
template <typename Scalar>
FrictionReport check_friction(const FrictionLaw<Scalar>& law, Scalar eps_prime,
                              Scalar sample_max) {
  if (!(Scalar(0) < eps_prime && eps_prime < sample_max))
    throw contract_error("check_friction: need 0 < eps_prime < sample_max");
  FrictionReport report;
  const int m = 4097;
  double c_lo = std::numeric_limits<double>::infinity();
  double c_hi = 0;
  for (int i = 0; i < m; ++i) {
    const Scalar s = eps_prime + (sample_max - eps_prime) * Scalar(i) / Scalar(m - 1);
    const double ratio = std::abs(static_cast<double>(law.eval(s))) /
                         std::abs(static_cast<double>(s));
    c_lo = std::min(c_lo, ratio);
    c_hi = std::max(c_hi, ratio);
  }
  report.c_lower = c_lo;
  report.c_upper = c_hi;

  report.monotone = true;
  double prev = static_cast<double>(law.eval(-sample_max));
  const double slack = 1e-12 * std::max(1.0, c_hi * static_cast<double>(sample_max));
  for (int i = 1; i < 2 * m; ++i) {
    const Scalar s = -sample_max + Scalar(2) * sample_max * Scalar(i) / Scalar(2 * m - 1);
    const double cur = static_cast<double>(law.eval(s));
    if (cur < prev - slack) {
      report.monotone = false;
      break;
    }
    prev = cur;
  }
  report.ok = report.c_lower > 0 && report.monotone;
  return report;
}

// ---------------------------------------------------------------------------
// InitialData

/// One initial field: a named closed-form preset or a nodal table.
/// Presets (x̂ = x/L): zero, sin_pi = sin(pi x̂), cos_pi = cos(pi x̂),
/// sin_2pi_bump = sin(2 pi x̂) x̂ (1 - x̂) rescaled to unit peak amplitude.
template <typename Scalar>
struct FieldSpec {
  enum class Kind { Preset, Table };

  Kind kind = Kind::Preset;
  std::string preset = "zero";
  Eigen::VectorX<Scalar> table;
  std::string source;  // original config token, kept for round-trips

  static FieldSpec from_preset(const std::string& name) {
    FieldSpec s;
    s.kind = Kind::Preset;
    s.preset = name;
    s.source = name;
    return s;
  }

  static FieldSpec from_table(Eigen::VectorX<Scalar> values, std::string src) {
    FieldSpec s;
    s.kind = Kind::Table;
    s.table = std::move(values);
    s.source = std::move(src);
    return s;
  }
};

template <typename Scalar>
Field<Scalar> sample_spec(const Grid<Scalar>& grid, const FieldSpec<Scalar>& spec,
                          BoundaryTag tag) {
  if (spec.kind == FieldSpec<Scalar>::Kind::Table) {
    if (spec.table.size() != grid.num_nodes())
      throw contract_error("initial data table has " +
                           std::to_string(spec.table.size()) + " values, grid needs " +
                           std::to_string(grid.num_nodes()));
    return Field<Scalar>{spec.table, tag};
  }
  const Scalar L = grid.length;
  auto f = [&](Scalar x) -> Scalar {
    const Scalar xh = x / L;
    const Scalar pi = Scalar(M_PI);
    if (spec.preset == "zero") return Scalar(0);
    if (spec.preset == "sin_pi") return std::sin(pi * xh);
    if (spec.preset == "cos_pi") return std::cos(pi * xh);
    if (spec.preset == "sin_2pi_bump") {
      // peak of sin(2 pi y) y (1 - y) on [0, 1], attained near y = 0.2976
      const Scalar peak = Scalar(0.199754808742687636);
      return std::sin(Scalar(2) * pi * xh) * xh * (Scalar(1) - xh) / peak;
    }
    throw contract_error("unknown initial-data preset '" + spec.preset + "'");
  };
  return sample_field(grid, f, tag);
}

template <typename Scalar>
struct InitialData {
  FieldSpec<Scalar> phi0 = FieldSpec<Scalar>::from_preset("sin_pi");
  FieldSpec<Scalar> phi1 = FieldSpec<Scalar>::from_preset("zero");
  FieldSpec<Scalar> psi0 = FieldSpec<Scalar>::from_preset("sin_2pi_bump");
  FieldSpec<Scalar> psi1 = FieldSpec<Scalar>::from_preset("zero");
  FieldSpec<Scalar> theta0 = FieldSpec<Scalar>::from_preset("cos_pi");
  FieldSpec<Scalar> theta1 = FieldSpec<Scalar>::from_preset("zero");
};

/// Checks boundary compatibility of sampled initial data: Dirichlet fields
/// vanish at the ends; Neumann fields have a small one-sided derivative there.
template <typename Scalar>
void validate_initial(const Grid<Scalar>& grid, const Field<Scalar>& f,
                      const std::string& name) {
  const int n = grid.n;
  if (f.tag == BoundaryTag::DirichletZero) {
    if (f.values[0] != Scalar(0) || f.values[n] != Scalar(0))
      throw contract_error("initial field " + name +
                           " must vanish at both ends");
    return;
  }
  if (f.tag == BoundaryTag::NeumannZero) {
    const Scalar scale = Scalar(1) + f.values.cwiseAbs().maxCoeff();
    const Scalar tol =
        std::max(Scalar(1e-9), Scalar(50) * grid.dx * grid.dx) * scale;
    const Scalar d0 = std::abs((Scalar(-3) * f.values[0] + Scalar(4) * f.values[1] -
                                f.values[2]) / (Scalar(2) * grid.dx));
    const Scalar dn = std::abs((Scalar(3) * f.values[n] - Scalar(4) * f.values[n - 1] +
                                f.values[n - 2]) / (Scalar(2) * grid.dx));
    if (d0 > tol || dn > tol)
      throw contract_error("initial field " + name +
                           " violates the zero-slope end condition");
  }
}

// ---------------------------------------------------------------------------
// LyapunovWeights

/// Combination weights and estimate constants for the Lyapunov functional
/// L = N E + sum_i N_i I_i and its sign conditions. Defaults are the recorded
/// feasible tuple for the default model (all six conditions hold for every
/// t >= 0; the binding ones are #3 at t = 0 and #4 as t -> inf).
template <typename Scalar>
struct LyapunovWeights {
  Scalar N = 10, N1 = 2, N2 = 5, N3 = 1, N4 = 1;
  Scalar epsilon = Scalar(0.5), epsilon7 = Scalar(0.5), epsilon8 = Scalar(0.5),
         epsilon9 = Scalar(0.5);
  Scalar c = Scalar(0.05), c7 = Scalar(0.05), c8 = Scalar(0.05),
         c9 = Scalar(0.05);
  Scalar c_prime = Scalar(1);  // standalone fallback; runs take c' from the law

  void validate() const {
    const Scalar vals[] = {N, N1, N2, N3, N4, epsilon, epsilon7, epsilon8,
                           epsilon9, c, c7, c8, c9, c_prime};
    for (Scalar v : vals)
      if (!(v > Scalar(0)))
        throw contract_error("lyapunov weights must be strictly positive");
  }
};

// ---------------------------------------------------------------------------
// SimConfig

template <typename Scalar>
struct SimConfig {
  Coefficients<Scalar> coeffs;
  MemoryKernel<Scalar> kernel = MemoryKernel<Scalar>::exponential(Scalar(0.5), Scalar(1));
  FrictionLaw<Scalar> friction = FrictionLaw<Scalar>::linear(Scalar(1));
  InitialData<Scalar> init;
  LyapunovWeights<Scalar> weights;

  int n = 64;
  Scalar dt = Scalar(1e-3);
  Scalar T = Scalar(5);
  int stride = 1;                 // records every `stride` accepted steps
  Scalar eps_trunc = Scalar(0);   // 0 = keep the whole history
  bool store_states = false;
  bool override_hypotheses = false;

  void validate() const {
    coeffs.validate();
    weights.validate();
    if (n < 4) throw contract_error("config: grid.n must be >= 4");
    if (!(dt > Scalar(0))) throw contract_error("config: time.dt must be > 0");
    if (!(T >= Scalar(0))) throw contract_error("config: time.T must be >= 0");
    if (stride < 1) throw contract_error("config: output.stride must be >= 1");
    if (eps_trunc < Scalar(0))
      throw contract_error("config: memory.eps_trunc must be >= 0");
  }
};

}  // namespace timo3

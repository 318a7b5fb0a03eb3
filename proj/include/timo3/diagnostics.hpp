#pragma once

// Energy, dissipation rate, the discrete energy-balance residual, the
// Lyapunov functionals I1..I4 and L, the weight sign conditions, the L ~ E
// equivalence scan, and the exponential decay fit.
//
// Gradient terms inside E and D are cell forward differences so that, paired
// with the 3-point stencils of the dynamics, the semi-discrete balance
// dE/dt = D holds to round-off (see grid.hpp). The Lyapunov functionals are
// plain diagnostics and use the nodal operators as displayed.

#include <Eigen/Core>

#include <array>
#include <optional>
#include <cmath>
#include <string>
#include <vector>

#include "timo3/errors.hpp"
#include "timo3/grid.hpp"
#include "timo3/memory.hpp"
#include "timo3/model.hpp"
#include "timo3/state.hpp"

namespace timo3 {

template <typename Scalar>
struct EnergyRecord {
  Scalar t = 0;
  Scalar E = 0;
  Scalar D = 0;         // dissipation rate (should be <= 0 up to quadrature noise)
  Scalar residual = 0;  // balance residual vs the previous record
  Scalar I1 = 0, I2 = 0, I3 = 0, I4 = 0;
  Scalar Lyap = 0;
  Scalar mean_z = 0;
};

template <typename Scalar>
struct DecayFit {
  Scalar C0 = 0;
  Scalar delta0 = 0;
  Scalar r_squared = 0;
  Scalar t_lo = 0, t_hi = 0;
};

// ---------------------------------------------------------------------------
// Energy and dissipation

/// E given the two history scalars (analytic kernel mass at t, and g∘).
/// E = 1/2 [ rho1|u|^2 + rho2|v|^2 + rho3|z|^2 + k1|phi_x + psi|^2
///           + delta|theta_x|^2 + (k2 - int_0^t g)|psi_x|^2 + g∘ ].
template <typename Scalar>
Scalar energy_from_parts(const Grid<Scalar>& grid, const State<Scalar>& state,
                         const Coefficients<Scalar>& coeffs, Scalar mass_t,
                         Scalar g_circ_value) {
  const Eigen::VectorX<Scalar> stress =
      forward_diff(grid, state.phi) + cell_average(grid, state.psi);
  const Eigen::VectorX<Scalar> dpsi = forward_diff(grid, state.psi);
  const Eigen::VectorX<Scalar> dtheta = forward_diff(grid, state.theta);
  return (coeffs.rho1 * inner(grid, state.u, state.u) +
          coeffs.rho2 * inner(grid, state.v, state.v) +
          coeffs.rho3 * inner(grid, state.z, state.z) +
          coeffs.k1 * cell_inner(grid, stress, stress) +
          coeffs.delta * cell_inner(grid, dtheta, dtheta) +
          (coeffs.k2 - mass_t) * cell_inner(grid, dpsi, dpsi) + g_circ_value) /
         Scalar(2);
}

/// D given g(t) and the g'-weighted history term:
/// D = -mu|u|^2 - <h(v), v> - beta|z_x|^2 - 1/2 g(t)|psi_x|^2 + 1/2 g'∘.
template <typename Scalar>
Scalar dissipation_from_parts(const Grid<Scalar>& grid, const State<Scalar>& state,
                              const Coefficients<Scalar>& coeffs,
                              const FrictionLaw<Scalar>& friction, Scalar g_at_t,
                              Scalar g_circ_deriv_value) {
  Field<Scalar> hv = make_field(grid, BoundaryTag::DirichletZero);
  for (int j = 0; j <= grid.n; ++j) hv.values[j] = friction.eval(state.v.values[j]);
  const Eigen::VectorX<Scalar> dpsi = forward_diff(grid, state.psi);
  const Eigen::VectorX<Scalar> dz = forward_diff(grid, state.z);
  return -coeffs.mu * inner(grid, state.u, state.u) -
         inner(grid, hv, state.v) - coeffs.beta * cell_inner(grid, dz, dz) -
         g_at_t / Scalar(2) * cell_inner(grid, dpsi, dpsi) +
         g_circ_deriv_value / Scalar(2);
}

template <typename Scalar>
Scalar energy(const Grid<Scalar>& grid, const State<Scalar>& state,
              const HistoryBuffer<Scalar>& history,
              const MemoryKernel<Scalar>& kernel,
              const Coefficients<Scalar>& coeffs) {
  return energy_from_parts(grid, state, coeffs, kernel_mass(kernel, state.t),
                           g_circ(grid, history, kernel, state.t, state.psi));
}

template <typename Scalar>
Scalar dissipation(const Grid<Scalar>& grid, const State<Scalar>& state,
                   const HistoryBuffer<Scalar>& history,
                   const MemoryKernel<Scalar>& kernel,
                   const FrictionLaw<Scalar>& friction,
                   const Coefficients<Scalar>& coeffs) {
  return dissipation_from_parts(
      grid, state, coeffs, friction, kernel_eval(kernel, state.t),
      g_circ_deriv(grid, history, kernel, state.t, state.psi));
}

/// |(E_next - E_prev)/dt - avg(D)| / (E0 + |avg(D)|) between two consecutive
/// records.
template <typename Scalar>
Scalar identity_residual(const EnergyRecord<Scalar>& prev,
                         const EnergyRecord<Scalar>& next, Scalar E0) {
  const Scalar dt = next.t - prev.t;
  if (!(dt > Scalar(0)))
    throw contract_error("identity_residual: records must be time-ordered");
  const Scalar d_mid = (prev.D + next.D) / Scalar(2);
  const Scalar num = std::abs((next.E - prev.E) / dt - d_mid);
  if (num == Scalar(0)) return Scalar(0);  // identically quiet trajectory
  return num / (E0 + std::abs(d_mid));
}

// ---------------------------------------------------------------------------
// Lyapunov functionals

template <typename Scalar>
struct LyapunovTerms {
  Scalar I1 = 0, I2 = 0, I3 = 0, I4 = 0;
};

/// The four auxiliary functionals:
///   I1 = -int psi_t int g(t-s)(psi(t) - psi(s)) ds dx
///   I2 =  int psi_t(phi_x + psi) dx + int psi_x phi_t dx
///         - int phi_t int g(t-s) psi_x(s) ds dx
///   I3 = -int theta theta_t dx
///   I4 = -int (psi psi_t + phi phi_t) dx
/// I1's inner convolution of differences is kernel_mass(t) psi(t) minus the
/// history convolution.
template <typename Scalar>
LyapunovTerms<Scalar> lyapunov_terms_from_conv(const Grid<Scalar>& grid,
                                               const State<Scalar>& state,
                                               const MemoryKernel<Scalar>& kernel,
                                               const Field<Scalar>& conv_psi) {
  LyapunovTerms<Scalar> terms;
  const Scalar mass_t = kernel_mass(kernel, state.t);

  Field<Scalar> diff = make_field(grid, BoundaryTag::DirichletZero);
  diff.values = mass_t * state.psi.values - conv_psi.values;
  terms.I1 = -inner(grid, state.v, diff);

  Field<Scalar> sigma = make_field(grid, BoundaryTag::Free);
  sigma.values = ddx(grid, state.phi).values + state.psi.values;
  terms.I2 = inner(grid, state.v, sigma) +
             inner(grid, ddx(grid, state.psi), state.u) -
             inner(grid, state.u, ddx(grid, conv_psi));

  terms.I3 = -inner(grid, state.theta, state.z);
  terms.I4 = -inner(grid, state.psi, state.v) - inner(grid, state.phi, state.u);
  return terms;
}

template <typename Scalar>
LyapunovTerms<Scalar> lyapunov_terms(const Grid<Scalar>& grid,
                                     const State<Scalar>& state,
                                     const HistoryBuffer<Scalar>& history,
                                     const MemoryKernel<Scalar>& kernel) {
  return lyapunov_terms_from_conv(grid, state, kernel,
                                  convolve(grid, history, kernel, state.t));
}

template <typename Scalar>
Scalar lyapunov_L(const LyapunovWeights<Scalar>& w, Scalar E, Scalar I1, Scalar I2,
                  Scalar I3, Scalar I4) {
  w.validate();
  return w.N * E + w.N1 * I1 + w.N2 * I2 + w.N3 * I3 + w.N4 * I4;
}

// ---------------------------------------------------------------------------
// Weight sign conditions

template <typename Scalar>
struct WeightCheck {
  std::array<Scalar, 6> lhs{};  // left sides; condition i holds iff lhs[i] > 0
  std::array<bool, 6> ok{};
  bool all_ok = false;
};

/// The six sign conditions on (N, N1..N4) with kernel_mass(t), g(t), xi and
/// the friction law's c' substituted, exactly as listed:
///   1: N - N2 c7 (eps + 1/eps) + N4 (1 - eps8)
///   2: N - N1 eps - N2 - N3 (eps8 + c8/eps8)
///   3: N c' + N1 (int_0^t g - eps) - N2 c7/eps7 - N3 eps8 + N4
///   4: N g(t)/2 + N1 eps - N2 c7 (eps7 + 1/eps7) - N3 c9
///   5: xi (N/2 + N1 c/eps + N2 c7/eps7) - (N1 c (eps + 1/eps) + N4 eps9)
///   6: -N1 eps + N2 (1 - eps7) - N4
template <typename Scalar>
WeightCheck<Scalar> check_weights(const LyapunovWeights<Scalar>& w,
                                  const MemoryKernel<Scalar>& kernel,
                                  const FrictionLaw<Scalar>& friction, Scalar t) {
  if (t < Scalar(0)) throw std::domain_error("check_weights: t must be >= 0");
  w.validate();
  const Scalar mass = kernel_mass(kernel, t);
  const Scalar g_t = kernel_eval(kernel, t);
  const Scalar xi = kernel_xi(kernel);
  const Scalar cp = friction.c_lower;

  WeightCheck<Scalar> r;
  r.lhs[0] = w.N - w.N2 * w.c7 * (w.epsilon + Scalar(1) / w.epsilon) +
             w.N4 * (Scalar(1) - w.epsilon8);
  r.lhs[1] = w.N - w.N1 * w.epsilon - w.N2 -
             w.N3 * (w.epsilon8 + w.c8 / w.epsilon8);
  r.lhs[2] = w.N * cp + w.N1 * (mass - w.epsilon) - w.N2 * w.c7 / w.epsilon7 -
             w.N3 * w.epsilon8 + w.N4;
  r.lhs[3] = w.N * g_t / Scalar(2) + w.N1 * w.epsilon -
             w.N2 * w.c7 * (w.epsilon7 + Scalar(1) / w.epsilon7) - w.N3 * w.c9;
  r.lhs[4] = xi * (w.N / Scalar(2) + w.N1 * w.c / w.epsilon +
                   w.N2 * w.c7 / w.epsilon7) -
             (w.N1 * w.c * (w.epsilon + Scalar(1) / w.epsilon) +
              w.N4 * w.epsilon9);
  r.lhs[5] = -w.N1 * w.epsilon + w.N2 * (Scalar(1) - w.epsilon7) - w.N4;

  r.all_ok = true;
  for (int i = 0; i < 6; ++i) {
    r.ok[i] = r.lhs[i] > Scalar(0);
    r.all_ok = r.all_ok && r.ok[i];
  }
  return r;
}

/// Coarse grid search for a weight tuple satisfying all six conditions at
/// every sampled time (epsilons and estimate constants kept from `base`).
/// Returns the first hit, scanning small N upward.
template <typename Scalar>
std::optional<LyapunovWeights<Scalar>> find_feasible_weights(
    const MemoryKernel<Scalar>& kernel, const FrictionLaw<Scalar>& friction,
    const std::vector<Scalar>& t_samples,
    const LyapunovWeights<Scalar>& base = LyapunovWeights<Scalar>{}) {
  const Scalar grid_N[] = {2, 5, 10, 20, 50};
  const Scalar grid_i[] = {Scalar(0.5), 1, 2, 5, 10};
  for (Scalar N : grid_N)
    for (Scalar N1 : grid_i)
      for (Scalar N2 : grid_i)
        for (Scalar N4 : grid_i) {
          LyapunovWeights<Scalar> w = base;
          w.N = N;
          w.N1 = N1;
          w.N2 = N2;
          w.N3 = 1;
          w.N4 = N4;
          bool ok = true;
          for (Scalar t : t_samples)
            if (!check_weights(w, kernel, friction, t).all_ok) {
              ok = false;
              break;
            }
          if (ok) return w;
        }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Equivalence scan and decay fit

template <typename Scalar>
struct EquivalenceRatios {
  bool defined = false;
  Scalar c1 = 0, c2 = 0;  // min/max of L/E over records with E above floor
};

template <typename Scalar>
EquivalenceRatios<Scalar> equivalence_ratios(
    const std::vector<EnergyRecord<Scalar>>& records, Scalar eps_floor_rel = Scalar(1e-12)) {
  EquivalenceRatios<Scalar> out;
  Scalar e_max = 0;
  for (const auto& r : records) e_max = std::max(e_max, r.E);
  const Scalar floor = eps_floor_rel * e_max;
  for (const auto& r : records) {
    if (!(r.E > floor)) continue;
    const Scalar ratio = r.Lyap / r.E;
    if (!out.defined) {
      out.c1 = out.c2 = ratio;
      out.defined = true;
    } else {
      out.c1 = std::min(out.c1, ratio);
      out.c2 = std::max(out.c2, ratio);
    }
  }
  return out;
}

/// Least-squares line through (t, ln E) over the window; C0 = e^intercept,
/// delta0 = -slope. Records with E <= 0 in the window abort with a domain
/// error naming the first offending time.
template <typename Scalar>
DecayFit<Scalar> fit_decay(const std::vector<EnergyRecord<Scalar>>& records,
                           Scalar t_lo, Scalar t_hi) {
  std::vector<Scalar> ts, ys;
  for (const auto& r : records) {
    if (r.t < t_lo || r.t > t_hi) continue;
    if (!(r.E > Scalar(0)))
      throw std::domain_error("fit_decay: record at t = " +
                              std::to_string(static_cast<double>(r.t)) +
                              " has E <= 0");
    ts.push_back(r.t);
    ys.push_back(std::log(r.E));
  }
  if (ts.size() < 2)
    throw std::domain_error("fit_decay: window contains fewer than 2 records");

  const Scalar m = Scalar(ts.size());
  Scalar st = 0, sy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const Scalar tbar = st / m, ybar = sy / m;
  Scalar stt = 0, sty = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tbar) * (ts[i] - tbar);
    sty += (ts[i] - tbar) * (ys[i] - ybar);
  }
  const Scalar slope = sty / stt;
  const Scalar intercept = ybar - slope * tbar;

  Scalar ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Scalar fit = intercept + slope * ts[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }

  DecayFit<Scalar> out;
  out.C0 = std::exp(intercept);
  out.delta0 = -slope;
  out.r_squared = ss_tot > Scalar(0) ? Scalar(1) - ss_res / ss_tot : Scalar(1);
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  return out;
}

/// Default fit window: the last 60% of the trajectory (skips transients).
template <typename Scalar>
std::pair<Scalar, Scalar> default_fit_window(
    const std::vector<EnergyRecord<Scalar>>& records) {
  if (records.empty()) throw contract_error("default_fit_window: no records");
  const Scalar t0 = records.front().t, t1 = records.back().t;
  return {t0 + Scalar(0.4) * (t1 - t0), t1};
}

}  // namespace timo3

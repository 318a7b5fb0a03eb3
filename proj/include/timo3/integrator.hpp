#pragma once

// Time integration of the coupled first-order system.
//
// Scheme per step (all second order except the history term, which is
// explicit): Strang composition of
//   1. half-step pointwise implicit-midpoint solve of rho2 v_t = -h(v)
//      (scalar Newton per node; one iteration exactly for Linear friction),
//   2. full Crank-Nicolson step of the linear operator (matrix assembled and
//      factorized once; the convolution enters as an explicit trapezoidal
//      forcing using the stored history plus a predictor for the new level),
//   3. half-step friction again.
// The linear solve uses a sparse direct factorization of I - dt/2 A.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "timo3/diagnostics.hpp"
#include "timo3/errors.hpp"
#include "timo3/generator.hpp"
#include "timo3/grid.hpp"
#include "timo3/memory.hpp"
#include "timo3/model.hpp"
#include "timo3/state.hpp"

namespace timo3 {

inline constexpr double kBlowupCap = 1e12;
inline constexpr int kNewtonCap = 50;

template <typename Scalar>
struct StepReport {
  int newton_iterations = 0;
  Scalar max_magnitude = 0;
  bool accepted = false;
};

template <typename Scalar>
struct Trajectory {
  std::vector<EnergyRecord<Scalar>> records;
  std::vector<State<Scalar>> states;  // full snapshots, only when requested

  Scalar E0() const { return records.empty() ? Scalar(0) : records.front().E; }
};

// ---------------------------------------------------------------------------
// Right-hand side

/// Time derivative of the state given the convolution field
/// conv_psi = int_0^t g(t-s) psi(s) ds for the state's time:
///   phi_t = u
///   rho1 u_t = k1 (phi_x + psi)_x - mu u
///   psi_t = v
///   rho2 v_t = k2 psi_xx - (conv_psi)_xx - k1 (phi_x + psi) - h(v) - gamma z_x
///   theta_t = z
///   rho3 z_t = -gamma v_x + delta theta_xx + beta z_xx
/// The force stencils are the exact adjoint pairs of the energy forms; see
/// grid.hpp.
template <typename Scalar>
State<Scalar> rhs(const Grid<Scalar>& grid, const State<Scalar>& state,
                  const Field<Scalar>& conv_psi, const SimConfig<Scalar>& cfg) {
  require_regular(state, -1, Scalar(kBlowupCap));
  const auto& c = cfg.coeffs;

  State<Scalar> out;
  out.t = state.t;
  out.phi = state.u;
  out.psi = state.v;
  out.theta = state.z;
  out.u = make_field(grid, BoundaryTag::DirichletZero);
  out.v = make_field(grid, BoundaryTag::DirichletZero);
  out.z = make_field(grid, BoundaryTag::NeumannZero);

  const Field<Scalar> lap_phi = laplacian(grid, state.phi);
  const Field<Scalar> dpsi = ddx(grid, state.psi);
  for (int j = 1; j < grid.n; ++j)
    out.u.values[j] = (c.k1 * (lap_phi.values[j] + dpsi.values[j]) -
                       c.mu * state.u.values[j]) / c.rho1;

  const Field<Scalar> lap_psi = laplacian(grid, state.psi);
  const Field<Scalar> lap_conv = laplacian(grid, conv_psi);
  const Field<Scalar> dphi = ddx(grid, state.phi);
  const Field<Scalar> sm_psi = node_smooth(grid, state.psi);
  const Field<Scalar> dz = ddx(grid, state.z);
  for (int j = 1; j < grid.n; ++j)
    out.v.values[j] = (c.k2 * lap_psi.values[j] - lap_conv.values[j] -
                       c.k1 * (dphi.values[j] + sm_psi.values[j]) -
                       cfg.friction.eval(state.v.values[j]) -
                       c.gamma * dz.values[j]) / c.rho2;

  const Field<Scalar> dv = ddx_adjoint(grid, state.v);
  const Field<Scalar> lap_theta = laplacian(grid, state.theta);
  const Field<Scalar> lap_z = laplacian(grid, state.z);
  for (int j = 0; j <= grid.n; ++j)
    out.z.values[j] = (-c.gamma * dv.values[j] + c.delta * lap_theta.values[j] +
                       c.beta * lap_z.values[j]) / c.rho3;
  return out;
}

// ---------------------------------------------------------------------------
// Stepper

template <typename Scalar>
class Stepper {
 public:
  Stepper(const SimConfig<Scalar>& cfg, const Grid<Scalar>& grid, Scalar dt)
      : grid_(grid),
        cfg_(cfg),
        dt_(dt),
        layout_(make_layout(grid.n, GeneratorMode::NoMemory)) {
    if (!(dt > Scalar(0))) throw contract_error("stepper: dt must be > 0");
    const auto trip = generator_triplets(grid, cfg.coeffs, cfg.kernel,
                                         std::optional<Scalar>{},  // friction split off
                                         GeneratorMode::NoMemory);
    Eigen::SparseMatrix<Scalar> A(layout_.dim, layout_.dim);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<Scalar> I(layout_.dim, layout_.dim);
    I.setIdentity();
    m_plus_ = I + (dt / Scalar(2)) * A;
    Eigen::SparseMatrix<Scalar> m_minus = I - (dt / Scalar(2)) * A;
    m_minus.makeCompressed();
    lu_.compute(m_minus);
    if (lu_.info() != Eigen::Success)
      throw numerical_error("stepper: factorization of I - dt/2 A failed");
  }

  Scalar dt() const { return dt_; }

  /// One step. conv_mid is the explicit memory forcing level
  /// 1/2 (W(t) + W_pred(t+dt)); pass nullptr for a memory-free model.
  StepReport<Scalar> advance(State<Scalar>& state, const Field<Scalar>* conv_mid,
                             long step_index) const {
    StepReport<Scalar> report;
    const int it1 = friction_halfstep(state.v);

    Eigen::VectorX<Scalar> y = pack_state(grid_, state, layout_);
    Eigen::VectorX<Scalar> b = m_plus_ * y;
    if (conv_mid != nullptr) {
      const Field<Scalar> lap_conv = laplacian(grid_, *conv_mid);
      for (int j = 1; j < grid_.n; ++j)
        b[layout_.v(j)] -= dt_ * lap_conv.values[j] / cfg_.coeffs.rho2;
    }
    const Eigen::VectorX<Scalar> y_new = lu_.solve(b);
    state = unpack_state(grid_, y_new, layout_, state.t + dt_);

    const int it2 = friction_halfstep(state.v);
    require_regular(state, step_index, Scalar(kBlowupCap));

    report.newton_iterations = std::max(it1, it2);
    Scalar mag = 0;
    for (const Field<Scalar>* f : {&state.phi, &state.u, &state.psi, &state.v,
                                   &state.theta, &state.z})
      mag = std::max(mag, f->values.cwiseAbs().maxCoeff());
    report.max_magnitude = mag;
    report.accepted = true;
    return report;
  }

 private:
  /// Implicit-midpoint half step of rho2 v_t = -h(v), solved per node in the
  /// midpoint variable m: 2(m - v0) + (tau/rho2) h(m) = 0, then v <- 2m - v0.
  /// Monotone h makes the iteration contraction-safe and the kinetic energy
  /// change -tau <h(m), m> <= 0.
  int friction_halfstep(Field<Scalar>& v) const {
    if (cfg_.friction.alpha == Scalar(0)) return 0;
    const Scalar tau = dt_ / Scalar(2);
    const Scalar scale = tau / cfg_.coeffs.rho2;
    int worst = 0;
    for (int j = 1; j < grid_.n; ++j) {
      const Scalar v0 = v.values[j];
      const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), std::abs(v0));
      Scalar m = v0;
      int it = 0;
      for (; it < kNewtonCap; ++it) {
        const Scalar f = Scalar(2) * (m - v0) + scale * cfg_.friction.eval(m);
        if (std::abs(f) <= tol) break;
        const Scalar df = Scalar(2) + scale * cfg_.friction.derivative(m);
        m -= f / df;
      }
      const Scalar f_final = Scalar(2) * (m - v0) + scale * cfg_.friction.eval(m);
      if (std::abs(f_final) > tol)
        throw newton_error(kNewtonCap, static_cast<double>(std::abs(f_final)));
      v.values[j] = Scalar(2) * m - v0;
      worst = std::max(worst, it + 1);
    }
    return worst;
  }

  Grid<Scalar> grid_;
  SimConfig<Scalar> cfg_;
  Scalar dt_;
  GeneratorLayout layout_;
  Eigen::SparseMatrix<Scalar> m_plus_;
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu_;
};

namespace detail {

/// Explicit memory forcing from a history buffer: the trapezoid convolution
/// at t averaged with its extension to t+dt using the predictor
/// psi + dt v for the unknown level.
template <typename Scalar>
Field<Scalar> history_forcing(const Grid<Scalar>& grid,
                              const HistoryBuffer<Scalar>& history,
                              const MemoryKernel<Scalar>& kernel,
                              const State<Scalar>& state, Scalar dt) {
  Field<Scalar> psi_pred = make_field(grid, BoundaryTag::DirichletZero);
  psi_pred.values = state.psi.values + dt * state.v.values;
  const Field<Scalar> w_now = convolve(grid, history, kernel, state.t);
  const Field<Scalar> w_pred =
      convolve_extended(grid, history, kernel, state.t + dt, psi_pred);
  Field<Scalar> mid = make_field(grid, BoundaryTag::DirichletZero);
  mid.values = (w_now.values + w_pred.values) / Scalar(2);
  return mid;
}

template <typename Scalar>
Field<Scalar> accumulator_forcing(const Grid<Scalar>& grid,
                                  const ExpMemoryState<Scalar>& mem,
                                  const State<Scalar>& state, Scalar dt) {
  Field<Scalar> psi_pred = make_field(grid, BoundaryTag::DirichletZero);
  psi_pred.values = state.psi.values + dt * state.v.values;
  const Eigen::VectorX<Scalar> w_pred =
      recursive_preview(mem.conv_psi, Eigen::VectorX<Scalar>(psi_pred.values), dt);
  Field<Scalar> mid = make_field(grid, BoundaryTag::DirichletZero);
  mid.values = (mem.conv_psi.w + w_pred) / Scalar(2);
  return mid;
}

}  // namespace detail

/// Single step against a history buffer (generic path). The history must end
/// at the state's time; the snapshot push stays with the caller.
template <typename Scalar>
std::pair<State<Scalar>, StepReport<Scalar>> step(const State<Scalar>& state,
                                                  const HistoryBuffer<Scalar>& history,
                                                  const SimConfig<Scalar>& cfg,
                                                  Scalar dt) {
  if (!(dt > Scalar(0))) throw contract_error("step: dt must be > 0");
  const Grid<Scalar> grid(cfg.n, cfg.coeffs.length);
  const Stepper<Scalar> stepper(cfg, grid, dt);
  State<Scalar> out = state;
  StepReport<Scalar> report;
  if (cfg.kernel.is_zero()) {
    report = stepper.advance(out, nullptr, -1);
  } else {
    if (history.empty() || history.last_time() != state.t)
      throw contract_error("step: history is not consistent with state.t");
    const Field<Scalar> mid =
        detail::history_forcing(grid, history, cfg.kernel, state, dt);
    report = stepper.advance(out, &mid, -1);
  }
  return {out, report};
}

// ---------------------------------------------------------------------------
// run

namespace detail {

template <typename Scalar>
EnergyRecord<Scalar> make_record(const Grid<Scalar>& grid, const State<Scalar>& state,
                                 const SimConfig<Scalar>& cfg,
                                 const HistoryBuffer<Scalar>& history,
                                 const std::optional<ExpMemoryState<Scalar>>& mem) {
  const auto& kernel = cfg.kernel;
  Scalar gcirc = 0, gderiv = 0;
  Field<Scalar> conv = make_field(grid, BoundaryTag::DirichletZero);
  if (kernel.is_zero()) {
    // nothing stored
  } else if (mem.has_value()) {
    gcirc = exp_memory_g_circ(*mem, grid, state.psi);
    gderiv = -kernel.b * gcirc;
    conv.values = mem->conv_psi.w;
  } else {
    gcirc = g_circ(grid, history, kernel, state.t, state.psi);
    gderiv = g_circ_deriv(grid, history, kernel, state.t, state.psi);
    conv = convolve(grid, history, kernel, state.t);
  }

  EnergyRecord<Scalar> rec;
  rec.t = state.t;
  rec.E = energy_from_parts(grid, state, cfg.coeffs,
                            kernel_mass(kernel, state.t), gcirc);
  rec.D = dissipation_from_parts(grid, state, cfg.coeffs, cfg.friction,
                                 kernel_eval(kernel, state.t), gderiv);
  const LyapunovTerms<Scalar> terms =
      lyapunov_terms_from_conv(grid, state, kernel, conv);
  rec.I1 = terms.I1;
  rec.I2 = terms.I2;
  rec.I3 = terms.I3;
  rec.I4 = terms.I4;
  rec.Lyap = lyapunov_L(cfg.weights, rec.E, rec.I1, rec.I2, rec.I3, rec.I4);
  rec.mean_z = integrate(grid, state.z);
  return rec;
}

}  // namespace detail

/// Integrates the config's model from its initial data to T, recording
/// diagnostics every `stride` accepted steps (and always at 0 and T).
/// Deterministic for a fixed config. Hypothesis gates run first unless
/// overridden.
template <typename Scalar>
Trajectory<Scalar> run(const SimConfig<Scalar>& cfg) {
  cfg.validate();
  if (!cfg.override_hypotheses) {
    const KernelReport kr = check_kernel(cfg.kernel);
    if (!kr.ok)
      throw hypothesis_error("kernel hypothesis check failed: " + kr.reason);
    const FrictionReport fr =
        check_friction(cfg.friction, cfg.friction.eps_prime,
                       Scalar(100) * std::max(Scalar(1), cfg.friction.eps_prime));
    if (!fr.ok) throw hypothesis_error("friction hypothesis check failed");
  }

  const Grid<Scalar> grid(cfg.n, cfg.coeffs.length);
  State<Scalar> state = make_state(grid, cfg.init);
  HistoryBuffer<Scalar> history = make_history(cfg.kernel, cfg.eps_trunc);
  push(history, Scalar(0), state.psi);

  const bool exp_fast =
      cfg.kernel.family == MemoryKernel<Scalar>::Family::Exponential &&
      !cfg.kernel.is_zero();
  std::optional<ExpMemoryState<Scalar>> mem;
  if (exp_fast) mem = make_exp_memory(grid, cfg.kernel, Scalar(0), state.psi);

  Trajectory<Scalar> traj;
  traj.records.push_back(detail::make_record(grid, state, cfg, history, mem));
  if (cfg.store_states) traj.states.push_back(state);

  const long num_steps =
      static_cast<long>(std::ceil(static_cast<double>(cfg.T / cfg.dt) - 1e-9));
  if (num_steps <= 0) return traj;

  Stepper<Scalar> stepper(cfg, grid, cfg.dt);
  std::optional<Stepper<Scalar>> tail_stepper;  // for a short final step

  for (long k = 1; k <= num_steps; ++k) {
    Scalar step_dt = cfg.dt;
    if (k == num_steps) {
      const Scalar remaining = cfg.T - state.t;
      if (remaining <= Scalar(0)) break;
      if (std::abs(remaining - cfg.dt) > Scalar(1e-12) * cfg.dt) {
        step_dt = remaining;
        tail_stepper.emplace(cfg, grid, step_dt);
      }
    }
    const Stepper<Scalar>& active = tail_stepper ? *tail_stepper : stepper;

    std::optional<Field<Scalar>> conv_mid;
    if (exp_fast)
      conv_mid = detail::accumulator_forcing(grid, *mem, state, step_dt);
    else if (!cfg.kernel.is_zero())
      conv_mid = detail::history_forcing(grid, history, cfg.kernel, state, step_dt);

    active.advance(state, conv_mid ? &*conv_mid : nullptr, k);

    push(history, state.t, state.psi);
    if (exp_fast) exp_memory_advance(*mem, grid, state.psi, step_dt);

    if (k % cfg.stride == 0 || k == num_steps) {
      EnergyRecord<Scalar> rec = detail::make_record(grid, state, cfg, history, mem);
      rec.residual = identity_residual(traj.records.back(), rec, traj.E0());
      traj.records.push_back(rec);
      if (cfg.store_states) traj.states.push_back(state);
    }
  }
  return traj;
}

}  // namespace timo3

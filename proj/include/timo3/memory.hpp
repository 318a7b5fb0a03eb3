#pragma once

// History storage for psi and the viscoelastic history sums: the convolution
// int_0^t g(t-s) psi(s) ds, its energy counterpart
// g∘ = int_0^1 int_0^t g(t-s) (psi_x(t) - psi_x(s))^2 ds dx, and recursive
// O(1)-per-step accumulators that reproduce the same trapezoid sums exactly
// for exponential kernels.
//
// Snapshots store nodal psi; gradients are taken afterwards (the operators
// commute), so one buffer serves both the PDE term and the energy term.
// psi_x inside g∘ is the cell forward difference — the form that pairs
// exactly with the 3-point laplacian in the discrete energy balance.

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "timo3/errors.hpp"
#include "timo3/grid.hpp"
#include "timo3/model.hpp"

namespace timo3 {

template <typename Scalar>
struct HistoryBuffer {
  std::deque<Scalar> times;
  std::deque<Eigen::VectorX<Scalar>> snapshots;  // nodal psi values
  Scalar horizon = std::numeric_limits<Scalar>::infinity();  // T_mem

  bool empty() const { return times.empty(); }
  std::size_t size() const { return times.size(); }
  Scalar last_time() const { return times.back(); }
};

/// Buffer whose truncation horizon is derived from the kernel and eps_trunc:
/// snapshots with g(t - s) < eps_trunc * g(0) may be dropped.
template <typename Scalar>
HistoryBuffer<Scalar> make_history(const MemoryKernel<Scalar>& kernel,
                                   Scalar eps_trunc) {
  HistoryBuffer<Scalar> h;
  if (eps_trunc > Scalar(0)) h.horizon = kernel_horizon(kernel, eps_trunc);
  return h;
}

/// Appends a snapshot; times must be strictly increasing. Entries older than
/// the horizon are dropped (never the newest one).
template <typename Scalar>
void push(HistoryBuffer<Scalar>& history, Scalar t, const Field<Scalar>& psi) {
  if (!history.empty() && !(t > history.last_time()))
    throw contract_error("history push: times must be strictly increasing");
  history.times.push_back(t);
  history.snapshots.push_back(psi.values);
  while (history.times.size() > 1 && history.times.front() < t - history.horizon) {
    history.times.pop_front();
    history.snapshots.pop_front();
  }
}

namespace detail {

/// Trapezoid of g(t_eval - s) * snapshot(s) over the stored levels, optionally
/// extended by one extra (time, value) level on top.
template <typename Scalar>
Eigen::VectorX<Scalar> convolve_levels(
    const HistoryBuffer<Scalar>& history, const MemoryKernel<Scalar>& kernel,
    Scalar t_eval, const Eigen::VectorX<Scalar>* extra, Scalar extra_time,
    int num_nodes) {
  Eigen::VectorX<Scalar> acc = Eigen::VectorX<Scalar>::Zero(num_nodes);
  const std::size_t m = history.size();
  auto weight_at = [&](Scalar s) { return kernel_eval(kernel, t_eval - s); };
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Scalar h = history.times[i + 1] - history.times[i];
    acc += (h / Scalar(2)) * (weight_at(history.times[i]) * history.snapshots[i] +
                              weight_at(history.times[i + 1]) * history.snapshots[i + 1]);
  }
  if (extra != nullptr && m > 0) {
    const Scalar h = extra_time - history.times[m - 1];
    acc += (h / Scalar(2)) * (weight_at(history.times[m - 1]) * history.snapshots[m - 1] +
                              weight_at(extra_time) * (*extra));
  }
  return acc;
}

}  // namespace detail

/// int_0^t g(t-s) psi(s) ds, nodal, by composite trapezoid over the stored
/// levels. Returns the zero field at t = 0 (single stored level).
template <typename Scalar>
Field<Scalar> convolve(const Grid<Scalar>& grid,
                       const HistoryBuffer<Scalar>& history,
                       const MemoryKernel<Scalar>& kernel, Scalar t) {
  if (history.empty()) {
    if (t != Scalar(0))
      throw contract_error("convolve: empty history at t > 0");
    return make_field(grid, BoundaryTag::DirichletZero);
  }
  if (t < history.last_time())
    throw contract_error("convolve: t earlier than the last snapshot");
  Field<Scalar> out = make_field(grid, BoundaryTag::DirichletZero);
  out.values = detail::convolve_levels<Scalar>(history, kernel, t, nullptr, Scalar(0),
                                       grid.num_nodes());
  return out;
}

/// convolve extended by a predicted level (t_extra, psi_extra) above the
/// stored history: the explicit forcing at the upcoming time level.
template <typename Scalar>
Field<Scalar> convolve_extended(const Grid<Scalar>& grid,
                                const HistoryBuffer<Scalar>& history,
                                const MemoryKernel<Scalar>& kernel,
                                Scalar t_extra, const Field<Scalar>& psi_extra) {
  if (history.empty())
    throw contract_error("convolve_extended: history is empty");
  if (!(t_extra > history.last_time()))
    throw contract_error("convolve_extended: extra level must be newer");
  Field<Scalar> out = make_field(grid, BoundaryTag::DirichletZero);
  out.values = detail::convolve_levels(history, kernel, t_extra,
                                       &psi_extra.values, t_extra,
                                       grid.num_nodes());
  return out;
}

/// g∘ psi_x: int_0^1 int_0^t g(t-s) (psi_x(t) - psi_x(s))^2 ds dx >= 0,
/// trapezoid in s over the stored levels, cell gradients in x.
template <typename Scalar>
Scalar g_circ(const Grid<Scalar>& grid, const HistoryBuffer<Scalar>& history,
              const MemoryKernel<Scalar>& kernel, Scalar t,
              const Field<Scalar>& psi_now) {
  if (history.empty()) {
    if (t != Scalar(0)) throw contract_error("g_circ: empty history at t > 0");
    return Scalar(0);
  }
  if (t < history.last_time())
    throw contract_error("g_circ: t earlier than the last snapshot");
  const Eigen::VectorX<Scalar> w_now = forward_diff(grid, psi_now);
  const std::size_t m = history.size();
  auto term = [&](std::size_t i) {
    Field<Scalar> snap{history.snapshots[i], BoundaryTag::DirichletZero};
    const Eigen::VectorX<Scalar> diff = w_now - forward_diff(grid, snap);
    return kernel_eval(kernel, t - history.times[i]) * grid.dx *
           diff.squaredNorm();
  };
  Scalar acc = 0;
  Scalar prev = term(0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Scalar cur = term(i + 1);
    acc += (history.times[i + 1] - history.times[i]) / Scalar(2) * (prev + cur);
    prev = cur;
  }
  return acc;
}

/// Same double integral weighted by g' instead of g: the history term of the
/// dissipation rate. For exponential kernels it equals -b * g_circ exactly.
template <typename Scalar>
Scalar g_circ_deriv(const Grid<Scalar>& grid, const HistoryBuffer<Scalar>& history,
                    const MemoryKernel<Scalar>& kernel, Scalar t,
                    const Field<Scalar>& psi_now) {
  if (history.empty()) {
    if (t != Scalar(0)) throw contract_error("g_circ_deriv: empty history at t > 0");
    return Scalar(0);
  }
  const Eigen::VectorX<Scalar> w_now = forward_diff(grid, psi_now);
  const std::size_t m = history.size();
  auto term = [&](std::size_t i) {
    Field<Scalar> snap{history.snapshots[i], BoundaryTag::DirichletZero};
    const Eigen::VectorX<Scalar> diff = w_now - forward_diff(grid, snap);
    return kernel_deriv(kernel, t - history.times[i]) * grid.dx *
           diff.squaredNorm();
  };
  Scalar acc = 0;
  Scalar prev = term(0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Scalar cur = term(i + 1);
    acc += (history.times[i + 1] - history.times[i]) / Scalar(2) * (prev + cur);
    prev = cur;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Recursive accumulators (exponential kernels only)

/// Accumulator w == trapezoid value of int g(t-s) f(s) ds over the pushed
/// levels, advanced in O(1) per step via g(s+dt) = e^{-b dt} g(s). Vec is an
/// Eigen vector or a plain Scalar.
template <typename Scalar, typename Vec>
struct RecursiveConvolution {
  Scalar a = 0, b = 0;
  Scalar valid_at = 0;
  Vec w;
  Vec last;
};

template <typename Scalar, typename Vec>
RecursiveConvolution<Scalar, Vec> make_recursive(const MemoryKernel<Scalar>& kernel,
                                                 Scalar t0, const Vec& f0) {
  if (kernel.family != MemoryKernel<Scalar>::Family::Exponential)
    throw contract_error("recursive convolution requires an exponential kernel");
  RecursiveConvolution<Scalar, Vec> conv;
  conv.a = kernel.a;
  conv.b = kernel.b;
  conv.valid_at = t0;
  conv.w = Vec(Scalar(0) * f0);  // zero of matching shape
  conv.last = f0;
  return conv;
}

/// w <- e^{-b dt} w + (dt/2)(a f_new + a e^{-b dt} f_old): exactly the
/// trapezoid sum extended by one level.
template <typename Scalar, typename Vec>
void recursive_update(RecursiveConvolution<Scalar, Vec>& conv, const Vec& f_new,
                      Scalar dt) {
  if (!(dt > Scalar(0)))
    throw contract_error("recursive_update: dt must be > 0");
  const Scalar decay = std::exp(-conv.b * dt);
  conv.w = Vec(decay * conv.w +
               (dt / Scalar(2)) * (conv.a * f_new + conv.a * decay * conv.last));
  conv.last = f_new;
  conv.valid_at += dt;
}

/// Peek at the accumulator advanced to valid_at + dt with level f_new, without
/// committing the update.
template <typename Scalar, typename Vec>
Vec recursive_preview(const RecursiveConvolution<Scalar, Vec>& conv,
                      const Vec& f_new, Scalar dt) {
  const Scalar decay = std::exp(-conv.b * dt);
  return Vec(decay * conv.w +
             (dt / Scalar(2)) * (conv.a * f_new + conv.a * decay * conv.last));
}

/// Bundle of recursive sums that yields, to round-off, the same history
/// quantities the trapezoid path computes: the nodal convolution, the cell
/// gradient convolution, and the two scalars needed to expand
/// g∘ = mass*|w(t)|^2 - 2 <w(t), conv_grad> + conv_grad2.
template <typename Scalar>
struct ExpMemoryState {
  RecursiveConvolution<Scalar, Eigen::VectorX<Scalar>> conv_psi;
  RecursiveConvolution<Scalar, Eigen::VectorX<Scalar>> conv_grad;
  RecursiveConvolution<Scalar, Scalar> conv_grad2;
  RecursiveConvolution<Scalar, Scalar> mass;  // trapezoid int g, matching quadrature
};

template <typename Scalar>
ExpMemoryState<Scalar> make_exp_memory(const Grid<Scalar>& grid,
                                       const MemoryKernel<Scalar>& kernel,
                                       Scalar t0, const Field<Scalar>& psi0) {
  ExpMemoryState<Scalar> mem;
  const Eigen::VectorX<Scalar> grad0 = forward_diff(grid, psi0);
  mem.conv_psi = make_recursive(kernel, t0, Eigen::VectorX<Scalar>(psi0.values));
  mem.conv_grad = make_recursive(kernel, t0, grad0);
  mem.conv_grad2 = make_recursive(kernel, t0, Scalar(grad0.squaredNorm()));
  mem.mass = make_recursive(kernel, t0, Scalar(1));
  return mem;
}

template <typename Scalar>
void exp_memory_advance(ExpMemoryState<Scalar>& mem, const Grid<Scalar>& grid,
                        const Field<Scalar>& psi_new, Scalar dt) {
  const Eigen::VectorX<Scalar> grad = forward_diff(grid, psi_new);
  recursive_update(mem.conv_psi, Eigen::VectorX<Scalar>(psi_new.values), dt);
  recursive_update(mem.conv_grad, grad, dt);
  recursive_update(mem.conv_grad2, Scalar(grad.squaredNorm()), dt);
  recursive_update(mem.mass, Scalar(1), dt);
}

/// g∘ from the accumulators; equals the history-trapezoid g_circ to round-off.
template <typename Scalar>
Scalar exp_memory_g_circ(const ExpMemoryState<Scalar>& mem, const Grid<Scalar>& grid,
                         const Field<Scalar>& psi_now) {
  const Eigen::VectorX<Scalar> w_now = forward_diff(grid, psi_now);
  return grid.dx * (mem.mass.w * w_now.squaredNorm() -
                    Scalar(2) * w_now.dot(mem.conv_grad.w) + mem.conv_grad2.w);
}

}  // namespace timo3

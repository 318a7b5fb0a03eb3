#pragma once

// Uniform 1D grid, boundary-tagged nodal fields, and the discrete calculus
// (difference stencils + trapezoid quadrature) shared by the whole project.
//
// The operators are matched to the trapezoid inner product so the discrete
// integration-by-parts identities hold to round-off, not just to O(dx^2):
//
//   <laplacian(u), w>          == -cell_inner(forward_diff(u), forward_diff(w))
//                                  (Dirichlet w, or Neumann u with any w)
//   <cells_div(s), w>          == -cell_inner(s, forward_diff(w))   (Dirichlet w)
//   <v, ddx(z)> + <z, ddx_adjoint(v)> == 0                          (Dirichlet v)
//
// The energy bookkeeping downstream relies on these being exact; see the
// tests for round-off-level checks on random fields.

#include <Eigen/Core>

#include <cmath>
#include <functional>

#include "timo3/errors.hpp"

namespace timo3 {

enum class BoundaryTag { DirichletZero, NeumannZero, Free };

/// Nodal values on the n+1 grid nodes plus the boundary condition they obey.
template <typename Scalar>
struct Field {
  Eigen::VectorX<Scalar> values;
  BoundaryTag tag = BoundaryTag::Free;
};

/// Uniform grid on [0, length] with n cells and nodes x_j = j*dx, j = 0..n.
template <typename Scalar>
struct Grid {
  Grid(int cells, Scalar domain_length) : n(cells), length(domain_length) {
    if (n < 4) throw contract_error("grid: need n >= 4 cells");
    if (!(length > Scalar(0))) throw contract_error("grid: length must be > 0");
    dx = length / Scalar(n);
  }

  int n;
  Scalar length;
  Scalar dx;

  int num_nodes() const { return n + 1; }
  Scalar node(int j) const { return dx * Scalar(j); }
};

template <typename Scalar>
Field<Scalar> make_field(const Grid<Scalar>& grid, BoundaryTag tag) {
  return Field<Scalar>{Eigen::VectorX<Scalar>::Zero(grid.num_nodes()), tag};
}

/// Samples f(x) at the nodes. DirichletZero fields get exact zeros at the ends.
template <typename Scalar, typename F>
Field<Scalar> sample_field(const Grid<Scalar>& grid, F&& f, BoundaryTag tag) {
  Field<Scalar> out = make_field(grid, tag);
  for (int j = 0; j <= grid.n; ++j) out.values[j] = f(grid.node(j));
  if (tag == BoundaryTag::DirichletZero) {
    out.values[0] = Scalar(0);
    out.values[grid.n] = Scalar(0);
  }
  return out;
}

namespace detail {
template <typename Scalar>
void require_size(const Grid<Scalar>& grid, const Field<Scalar>& f,
                  const char* who) {
  if (f.values.size() != grid.num_nodes())
    throw contract_error(std::string(who) + ": field size does not match grid");
}
}  // namespace detail

/// Three-point second difference. Dirichlet fields use the stored zero end
/// values and return zero end rows (those rows are never evolved); Neumann
/// fields use ghost reflection u_{-1} = u_1, u_{n+1} = u_{n-1}.
template <typename Scalar>
Field<Scalar> laplacian(const Grid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_size(grid, f, "laplacian");
  if (f.tag == BoundaryTag::Free)
    throw contract_error("laplacian: input must be DirichletZero or NeumannZero");
  const int n = grid.n;
  const Scalar inv_dx2 = Scalar(1) / (grid.dx * grid.dx);
  Field<Scalar> out = make_field(grid, BoundaryTag::Free);
  for (int j = 1; j < n; ++j)
    out.values[j] =
        (f.values[j - 1] - Scalar(2) * f.values[j] + f.values[j + 1]) * inv_dx2;
  if (f.tag == BoundaryTag::NeumannZero) {
    out.values[0] = Scalar(2) * (f.values[1] - f.values[0]) * inv_dx2;
    out.values[n] = Scalar(2) * (f.values[n - 1] - f.values[n]) * inv_dx2;
  }
  return out;
}

/// Centered first difference at interior nodes. NeumannZero fields get zero
/// end rows (ghost reflection); other tags get one-sided second-order rows.
template <typename Scalar>
Field<Scalar> ddx(const Grid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_size(grid, f, "ddx");
  const int n = grid.n;
  const Scalar inv_2dx = Scalar(1) / (Scalar(2) * grid.dx);
  Field<Scalar> out = make_field(grid, BoundaryTag::Free);
  for (int j = 1; j < n; ++j)
    out.values[j] = (f.values[j + 1] - f.values[j - 1]) * inv_2dx;
  if (f.tag == BoundaryTag::NeumannZero) {
    out.values[0] = Scalar(0);
    out.values[n] = Scalar(0);
  } else {
    out.values[0] = (Scalar(-3) * f.values[0] + Scalar(4) * f.values[1] -
                     f.values[2]) * inv_2dx;
    out.values[n] = (Scalar(3) * f.values[n] - Scalar(4) * f.values[n - 1] +
                     f.values[n - 2]) * inv_2dx;
  }
  return out;
}

/// Exact negative trapezoid-adjoint of ddx on NeumannZero fields: centered at
/// interior nodes, one-sided first-order end rows. For DirichletZero v and any
/// z,  <v, ddx(z)> + <z, ddx_adjoint(v)> == 0  to round-off. The coupled
/// equations use this variant so the cross terms cancel exactly in the energy
/// balance.
template <typename Scalar>
Field<Scalar> ddx_adjoint(const Grid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_size(grid, f, "ddx_adjoint");
  const int n = grid.n;
  const Scalar inv_2dx = Scalar(1) / (Scalar(2) * grid.dx);
  Field<Scalar> out = make_field(grid, BoundaryTag::Free);
  for (int j = 1; j < n; ++j)
    out.values[j] = (f.values[j + 1] - f.values[j - 1]) * inv_2dx;
  out.values[0] = (f.values[1] - f.values[0]) / grid.dx;
  out.values[n] = (f.values[n] - f.values[n - 1]) / grid.dx;
  return out;
}

/// (1/4, 1/2, 1/4) node smoothing: the trapezoid-adjoint of cell_average.
/// End rows copy the input.
template <typename Scalar>
Field<Scalar> node_smooth(const Grid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_size(grid, f, "node_smooth");
  const int n = grid.n;
  Field<Scalar> out = make_field(grid, f.tag);
  for (int j = 1; j < n; ++j)
    out.values[j] = (f.values[j - 1] + Scalar(2) * f.values[j] +
                     f.values[j + 1]) / Scalar(4);
  out.values[0] = f.values[0];
  out.values[n] = f.values[n];
  return out;
}

/// Composite trapezoid over all nodes.
template <typename Scalar>
Scalar integrate(const Grid<Scalar>& grid, const Field<Scalar>& f) {
  detail::require_size(grid, f, "integrate");
  const int n = grid.n;
  Scalar acc = (f.values[0] + f.values[n]) / Scalar(2);
  for (int j = 1; j < n; ++j) acc += f.values[j];
  return acc * grid.dx;
}

/// Trapezoid inner product of two nodal fields.
template <typename Scalar>
Scalar inner(const Grid<Scalar>& grid, const Field<Scalar>& a,
             const Field<Scalar>& b) {
  detail::require_size(grid, a, "inner");
  detail::require_size(grid, b, "inner");
  const int n = grid.n;
  Scalar acc = (a.values[0] * b.values[0] + a.values[n] * b.values[n]) / Scalar(2);
  for (int j = 1; j < n; ++j) acc += a.values[j] * b.values[j];
  return acc * grid.dx;
}

/// Forward difference, nodes -> the n cell midpoints.
template <typename Scalar>
Eigen::VectorX<Scalar> forward_diff(const Grid<Scalar>& grid,
                                    const Field<Scalar>& f) {
  detail::require_size(grid, f, "forward_diff");
  const int n = grid.n;
  Eigen::VectorX<Scalar> out(n);
  for (int k = 0; k < n; ++k)
    out[k] = (f.values[k + 1] - f.values[k]) / grid.dx;
  return out;
}

/// Midpoint average, nodes -> cells.
template <typename Scalar>
Eigen::VectorX<Scalar> cell_average(const Grid<Scalar>& grid,
                                    const Field<Scalar>& f) {
  detail::require_size(grid, f, "cell_average");
  const int n = grid.n;
  Eigen::VectorX<Scalar> out(n);
  for (int k = 0; k < n; ++k)
    out[k] = (f.values[k] + f.values[k + 1]) / Scalar(2);
  return out;
}

/// Midpoint-rule inner product of two cell vectors.
template <typename Scalar>
Scalar cell_inner(const Grid<Scalar>& grid, const Eigen::VectorX<Scalar>& a,
                  const Eigen::VectorX<Scalar>& b) {
  if (a.size() != grid.n || b.size() != grid.n)
    throw contract_error("cell_inner: cell vector size does not match grid");
  return grid.dx * a.dot(b);
}

template <typename Scalar>
Scalar cell_integrate(const Grid<Scalar>& grid, const Eigen::VectorX<Scalar>& a) {
  if (a.size() != grid.n)
    throw contract_error("cell_integrate: cell vector size does not match grid");
  return grid.dx * a.sum();
}

/// Backward difference of cell values onto interior nodes (end rows zero):
/// the exact negative adjoint of forward_diff on Dirichlet fields.
template <typename Scalar>
Field<Scalar> cells_div(const Grid<Scalar>& grid,
                        const Eigen::VectorX<Scalar>& cells) {
  if (cells.size() != grid.n)
    throw contract_error("cells_div: cell vector size does not match grid");
  Field<Scalar> out = make_field(grid, BoundaryTag::Free);
  for (int j = 1; j < grid.n; ++j)
    out.values[j] = (cells[j] - cells[j - 1]) / grid.dx;
  return out;
}

/// Midpoint average of cell values back onto interior nodes (end rows take the
/// adjacent cell value): the trapezoid-adjoint of cell_average on Dirichlet
/// fields.
template <typename Scalar>
Field<Scalar> cells_to_nodes(const Grid<Scalar>& grid,
                             const Eigen::VectorX<Scalar>& cells) {
  if (cells.size() != grid.n)
    throw contract_error("cells_to_nodes: cell vector size does not match grid");
  Field<Scalar> out = make_field(grid, BoundaryTag::Free);
  for (int j = 1; j < grid.n; ++j)
    out.values[j] = (cells[j - 1] + cells[j]) / Scalar(2);
  out.values[0] = cells[0];
  out.values[grid.n] = cells[grid.n - 1];
  return out;
}

}  // namespace timo3

#pragma once

// Discrete generator of the first-order system: assembly (shared with the
// time stepper), dense spectrum, resolvent solves, and the stationary-form
// coercivity bounds.
//
// Two autonomous surrogates of the history-dependent operator are assembled:
//   NoMemory     — the convolution absent (its t = 0 freeze);
//   ExpAugmented — exact closure for g(s) = a e^{-b s} via one auxiliary
//                  field w with w_t = a psi_xx - b w and the psi equation
//                  reading -w/rho2.
//
// Unknown ordering: blocks [phi | u | psi | v | theta | z (| w)] with the
// Dirichlet end rows eliminated (phi, u, psi, v, w are interior-only; theta
// and z carry all n+1 nodes).
//
// The full nodal matrix necessarily has a two-dimensional Jordan block at 0
// (constant theta is annihilated; constant theta_t maps onto it). `spectrum`
// therefore restricts A to the invariant subspace where theta and theta_t
// have zero trapezoid mean — the discrete version of the zero-mean
// normalization that makes the Poincare inequality available — before
// eigensolving; the resolvent and consistency checks use the full matrix.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <optional>
#include <vector>

#include "timo3/errors.hpp"
#include "timo3/grid.hpp"
#include "timo3/model.hpp"
#include "timo3/state.hpp"

namespace timo3 {

enum class GeneratorMode { NoMemory, ExpAugmented };

struct GeneratorLayout {
  int n = 0;        // cells
  int n_int = 0;    // interior nodes (Dirichlet unknowns per field)
  int n_full = 0;   // all nodes (Neumann unknowns per field)
  int off_phi = 0, off_u = 0, off_psi = 0, off_v = 0, off_theta = 0, off_z = 0;
  int off_w = -1;   // -1 when the memory block is absent
  int dim = 0;

  int phi(int j) const { return off_phi + j - 1; }  // j in 1..n-1
  int u(int j) const { return off_u + j - 1; }
  int psi(int j) const { return off_psi + j - 1; }
  int v(int j) const { return off_v + j - 1; }
  int theta(int j) const { return off_theta + j; }  // j in 0..n
  int z(int j) const { return off_z + j; }
  int w(int j) const { return off_w + j - 1; }
};

inline GeneratorLayout make_layout(int n, GeneratorMode mode) {
  GeneratorLayout lay;
  lay.n = n;
  lay.n_int = n - 1;
  lay.n_full = n + 1;
  lay.off_phi = 0;
  lay.off_u = lay.n_int;
  lay.off_psi = 2 * lay.n_int;
  lay.off_v = 3 * lay.n_int;
  lay.off_theta = 4 * lay.n_int;
  lay.off_z = 4 * lay.n_int + lay.n_full;
  lay.dim = 4 * lay.n_int + 2 * lay.n_full;
  if (mode == GeneratorMode::ExpAugmented) {
    lay.off_w = lay.dim;
    lay.dim += lay.n_int;
  }
  return lay;
}

/// Sparse triplets of the linear generator. `friction_alpha` folds a linear
/// friction law into the v rows; pass nullopt to leave friction out (the time
/// stepper handles it separately).
template <typename Scalar>
std::vector<Eigen::Triplet<Scalar>> generator_triplets(
    const Grid<Scalar>& grid, const Coefficients<Scalar>& coeffs,
    const MemoryKernel<Scalar>& kernel, std::optional<Scalar> friction_alpha,
    GeneratorMode mode) {
  coeffs.validate();
  if (mode == GeneratorMode::ExpAugmented &&
      kernel.family != MemoryKernel<Scalar>::Family::Exponential)
    throw contract_error("ExpAugmented assembly requires an exponential kernel");

  const GeneratorLayout lay = make_layout(grid.n, mode);
  const int n = grid.n;
  const Scalar dx = grid.dx;
  const Scalar inv_dx2 = Scalar(1) / (dx * dx);
  const Scalar inv_2dx = Scalar(1) / (Scalar(2) * dx);

  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(18 * n));
  auto add = [&](int r, int c, Scalar v) { trip.emplace_back(r, c, v); };

  for (int j = 1; j < n; ++j) {
    // phi_t = u
    add(lay.phi(j), lay.u(j), Scalar(1));

    // rho1 u_t = k1 (phi_xx + psi_x) - mu u
    const Scalar cu = coeffs.k1 / coeffs.rho1;
    add(lay.u(j), lay.phi(j), Scalar(-2) * cu * inv_dx2);
    if (j - 1 >= 1) add(lay.u(j), lay.phi(j - 1), cu * inv_dx2);
    if (j + 1 <= n - 1) add(lay.u(j), lay.phi(j + 1), cu * inv_dx2);
    if (j + 1 <= n - 1) add(lay.u(j), lay.psi(j + 1), cu * inv_2dx);
    if (j - 1 >= 1) add(lay.u(j), lay.psi(j - 1), -cu * inv_2dx);
    if (coeffs.mu != Scalar(0))
      add(lay.u(j), lay.u(j), -coeffs.mu / coeffs.rho1);

    // psi_t = v
    add(lay.psi(j), lay.v(j), Scalar(1));

    // rho2 v_t = k2 psi_xx - w - k1 (phi_x + smooth(psi)) - h(v) - gamma z_x
    const Scalar cv = coeffs.k2 / coeffs.rho2;
    add(lay.v(j), lay.psi(j), Scalar(-2) * cv * inv_dx2);
    if (j - 1 >= 1) add(lay.v(j), lay.psi(j - 1), cv * inv_dx2);
    if (j + 1 <= n - 1) add(lay.v(j), lay.psi(j + 1), cv * inv_dx2);

    const Scalar ck = coeffs.k1 / coeffs.rho2;
    if (j + 1 <= n - 1) add(lay.v(j), lay.phi(j + 1), -ck * inv_2dx);
    if (j - 1 >= 1) add(lay.v(j), lay.phi(j - 1), ck * inv_2dx);
    add(lay.v(j), lay.psi(j), -ck / Scalar(2));
    if (j - 1 >= 1) add(lay.v(j), lay.psi(j - 1), -ck / Scalar(4));
    if (j + 1 <= n - 1) add(lay.v(j), lay.psi(j + 1), -ck / Scalar(4));

    if (friction_alpha)
      add(lay.v(j), lay.v(j), -(*friction_alpha) / coeffs.rho2);

    if (coeffs.gamma != Scalar(0)) {
      const Scalar cg = coeffs.gamma / coeffs.rho2;
      add(lay.v(j), lay.z(j + 1), -cg * inv_2dx);
      add(lay.v(j), lay.z(j - 1), cg * inv_2dx);
    }

    if (mode == GeneratorMode::ExpAugmented) {
      add(lay.v(j), lay.w(j), Scalar(-1) / coeffs.rho2);
      // w_t = a psi_xx - b w
      add(lay.w(j), lay.psi(j), Scalar(-2) * kernel.a * inv_dx2);
      if (j - 1 >= 1) add(lay.w(j), lay.psi(j - 1), kernel.a * inv_dx2);
      if (j + 1 <= n - 1) add(lay.w(j), lay.psi(j + 1), kernel.a * inv_dx2);
      add(lay.w(j), lay.w(j), -kernel.b);
    }
  }

  // theta_t = z;  rho3 z_t = -gamma ddx_adjoint(v) + delta theta_xx + beta z_xx
  const Scalar cz = Scalar(1) / coeffs.rho3;
  for (int j = 0; j <= n; ++j) add(lay.theta(j), lay.z(j), Scalar(1));

  if (coeffs.gamma != Scalar(0)) {
    const Scalar cg = coeffs.gamma * cz;
    add(lay.z(0), lay.v(1), -cg / dx);
    add(lay.z(n), lay.v(n - 1), cg / dx);
    for (int j = 1; j < n; ++j) {
      if (j + 1 <= n - 1) add(lay.z(j), lay.v(j + 1), -cg * inv_2dx);
      if (j - 1 >= 1) add(lay.z(j), lay.v(j - 1), cg * inv_2dx);
    }
  }

  for (const auto& block_coef : {std::pair{lay.off_theta, coeffs.delta * cz},
                                 std::pair{lay.off_z, coeffs.beta * cz}}) {
    const int block = block_coef.first;
    const Scalar coef = block_coef.second;
    auto col = [&](int j) { return block + j; };
    add(lay.z(0), col(0), Scalar(-2) * coef * inv_dx2);
    add(lay.z(0), col(1), Scalar(2) * coef * inv_dx2);
    add(lay.z(n), col(n), Scalar(-2) * coef * inv_dx2);
    add(lay.z(n), col(n - 1), Scalar(2) * coef * inv_dx2);
    for (int j = 1; j < n; ++j) {
      add(lay.z(j), col(j), Scalar(-2) * coef * inv_dx2);
      add(lay.z(j), col(j - 1), coef * inv_dx2);
      add(lay.z(j), col(j + 1), coef * inv_dx2);
    }
  }

  return trip;
}

template <typename Scalar>
struct GeneratorMatrix {
  GeneratorMode mode = GeneratorMode::NoMemory;
  GeneratorLayout layout;
  Eigen::MatrixX<Scalar> A;
};

/// Dense generator for the config's model. Friction must be Linear (the
/// generator is linear); it is folded into the v rows.
template <typename Scalar>
GeneratorMatrix<Scalar> assemble(const SimConfig<Scalar>& cfg, int n,
                                 GeneratorMode mode) {
  if (!cfg.friction.is_linear())
    throw contract_error("assemble: the generator is linear; friction must be Linear");
  const Grid<Scalar> grid(n, cfg.coeffs.length);
  const auto trip = generator_triplets(grid, cfg.coeffs, cfg.kernel,
                                       std::optional<Scalar>(cfg.friction.alpha),
                                       mode);
  GeneratorMatrix<Scalar> gen;
  gen.mode = mode;
  gen.layout = make_layout(n, mode);
  gen.A = Eigen::MatrixX<Scalar>::Zero(gen.layout.dim, gen.layout.dim);
  for (const auto& t : trip) gen.A(t.row(), t.col()) += t.value();
  return gen;
}

// ---------------------------------------------------------------------------
// State vector packing

template <typename Scalar>
Eigen::VectorX<Scalar> pack_state(const Grid<Scalar>& grid, const State<Scalar>& s,
                                  const GeneratorLayout& lay,
                                  const Eigen::VectorX<Scalar>* w = nullptr) {
  Eigen::VectorX<Scalar> y = Eigen::VectorX<Scalar>::Zero(lay.dim);
  for (int j = 1; j < grid.n; ++j) {
    y[lay.phi(j)] = s.phi.values[j];
    y[lay.u(j)] = s.u.values[j];
    y[lay.psi(j)] = s.psi.values[j];
    y[lay.v(j)] = s.v.values[j];
  }
  for (int j = 0; j <= grid.n; ++j) {
    y[lay.theta(j)] = s.theta.values[j];
    y[lay.z(j)] = s.z.values[j];
  }
  if (lay.off_w >= 0 && w != nullptr)
    for (int j = 1; j < grid.n; ++j) y[lay.w(j)] = (*w)[j];
  return y;
}

template <typename Scalar>
State<Scalar> unpack_state(const Grid<Scalar>& grid, const Eigen::VectorX<Scalar>& y,
                           const GeneratorLayout& lay, Scalar t) {
  State<Scalar> s;
  s.t = t;
  s.phi = make_field(grid, BoundaryTag::DirichletZero);
  s.u = make_field(grid, BoundaryTag::DirichletZero);
  s.psi = make_field(grid, BoundaryTag::DirichletZero);
  s.v = make_field(grid, BoundaryTag::DirichletZero);
  s.theta = make_field(grid, BoundaryTag::NeumannZero);
  s.z = make_field(grid, BoundaryTag::NeumannZero);
  for (int j = 1; j < grid.n; ++j) {
    s.phi.values[j] = y[lay.phi(j)];
    s.u.values[j] = y[lay.u(j)];
    s.psi.values[j] = y[lay.psi(j)];
    s.v.values[j] = y[lay.v(j)];
  }
  for (int j = 0; j <= grid.n; ++j) {
    s.theta.values[j] = y[lay.theta(j)];
    s.z.values[j] = y[lay.z(j)];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Spectrum

template <typename Scalar>
struct SpectrumReport {
  std::vector<std::complex<Scalar>> eigenvalues;  // sorted by real part, desc
  Scalar abscissa = 0;
  std::complex<Scalar> dominant;
};

namespace detail {

/// Orthonormal basis (columns) of { x : weights . x = 0 } via one Householder
/// reflector.
template <typename Scalar>
Eigen::MatrixX<Scalar> mean_free_basis(const Eigen::VectorX<Scalar>& weights) {
  const int m = static_cast<int>(weights.size());
  Eigen::VectorX<Scalar> u = weights;
  const Scalar norm = u.norm();
  u[0] += (u[0] >= Scalar(0) ? norm : -norm);
  const Scalar scale = Scalar(2) / u.squaredNorm();
  Eigen::MatrixX<Scalar> H =
      Eigen::MatrixX<Scalar>::Identity(m, m) - scale * (u * u.transpose());
  return H.rightCols(m - 1);
}

template <typename Scalar>
Eigen::VectorX<Scalar> trapezoid_weights(int num_nodes) {
  Eigen::VectorX<Scalar> w = Eigen::VectorX<Scalar>::Ones(num_nodes);
  w[0] = Scalar(0.5);
  w[num_nodes - 1] = Scalar(0.5);
  return w;
}

/// Block-diagonal restriction: identity on the Dirichlet blocks, mean-free
/// basis on the theta and z blocks.
template <typename Scalar>
Eigen::MatrixX<Scalar> mean_free_restriction(const GeneratorLayout& lay) {
  const Eigen::MatrixX<Scalar> Q =
      mean_free_basis<Scalar>(trapezoid_weights<Scalar>(lay.n_full));
  const int red = lay.dim - 2;
  Eigen::MatrixX<Scalar> T = Eigen::MatrixX<Scalar>::Zero(lay.dim, red);
  const int nb = 4 * lay.n_int;
  T.topLeftCorner(nb, nb).setIdentity();
  T.block(lay.off_theta, nb, lay.n_full, lay.n_full - 1) = Q;
  T.block(lay.off_z, nb + lay.n_full - 1, lay.n_full, lay.n_full - 1) = Q;
  if (lay.off_w >= 0)
    T.block(lay.off_w, nb + 2 * (lay.n_full - 1), lay.n_int, lay.n_int)
        .setIdentity();
  return T;
}

}  // namespace detail

/// All eigenvalues of the generator restricted to the zero-mean theta/z
/// subspace, via the dense real-Schur solver. Dimension cap 2000.
template <typename Scalar>
SpectrumReport<Scalar> spectrum(const GeneratorMatrix<Scalar>& gen) {
  if (gen.layout.dim > 2000)
    throw contract_error("spectrum: dimension exceeds the documented cap of 2000");
  const Eigen::MatrixX<Scalar> T =
      detail::mean_free_restriction<Scalar>(gen.layout);
  const Eigen::MatrixX<Scalar> reduced = T.transpose() * gen.A * T;
  Eigen::EigenSolver<Eigen::MatrixX<Scalar>> solver(reduced);
  if (solver.info() != Eigen::Success)
    throw numerical_error("spectrum: QR iteration failed to converge");

  SpectrumReport<Scalar> report;
  const auto& vals = solver.eigenvalues();
  report.eigenvalues.reserve(vals.size());
  for (int i = 0; i < vals.size(); ++i) report.eigenvalues.push_back(vals[i]);
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const auto& a, const auto& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
  report.dominant = report.eigenvalues.front();
  report.abscissa = report.dominant.real();
  return report;
}

// ---------------------------------------------------------------------------
// Resolvent

template <typename Scalar>
struct ResolventSolution {
  Eigen::VectorX<Scalar> U;
  Scalar residual = 0;
};

/// Solves (I - A) U = B by dense LU; residual is ||(I-A)U - B|| / ||B||.
template <typename Scalar>
ResolventSolution<Scalar> solve_resolvent(const GeneratorMatrix<Scalar>& gen,
                                          const Eigen::VectorX<Scalar>& B) {
  if (B.size() != gen.layout.dim)
    throw contract_error("solve_resolvent: right side size mismatch");
  const Eigen::MatrixX<Scalar> M =
      Eigen::MatrixX<Scalar>::Identity(gen.layout.dim, gen.layout.dim) - gen.A;
  Eigen::PartialPivLU<Eigen::MatrixX<Scalar>> lu(M);
  ResolventSolution<Scalar> sol;
  sol.U = lu.solve(B);
  const Scalar bnorm = B.norm();
  const Scalar rnorm = (M * sol.U - B).norm();
  sol.residual = bnorm > Scalar(0) ? rnorm / bnorm : rnorm;
  if (!sol.U.allFinite() || !(sol.residual < Scalar(1e-6)))
    throw numerical_error(
        "solve_resolvent: direct solve failed (I - A numerically singular)");
  return sol;
}

// ---------------------------------------------------------------------------
// Coercivity of the stationary form

template <typename Scalar>
struct CoercivityReport {
  Scalar alpha0 = 0;   // against the norm as displayed (no psi_x term)
  Scalar c_bound = 0;
  Scalar alpha0_full = 0;  // against the norm augmented with |psi_x|^2
  Scalar c_bound_full = 0;
};

/// Assembles the stationary bilinear form over (phi, psi, theta) — memory
/// frozen at t = 0, friction folded in linearly — symmetrizes it, and returns
/// the extreme generalized eigenvalues against the stationary norm's Gram
/// matrix (theta reduced to zero mean). alpha0 > 0 is the discrete
/// solvability certificate.
template <typename Scalar>
CoercivityReport<Scalar> coercivity(const SimConfig<Scalar>& cfg, int n) {
  if (!cfg.friction.is_linear())
    throw contract_error("coercivity: stationary form requires Linear friction");
  cfg.coeffs.validate();
  const Grid<Scalar> grid(n, cfg.coeffs.length);
  const Scalar dx = grid.dx;
  const int nf = n - 1;   // interior
  const int nn = n + 1;   // full
  using Mat = Eigen::MatrixX<Scalar>;

  // nodes -> cells maps (interior-only columns for Dirichlet fields)
  Mat Df_int = Mat::Zero(n, nf), Av_int = Mat::Zero(n, nf);
  for (int k = 0; k < n; ++k) {
    if (k + 1 <= n - 1) {
      Df_int(k, k) = Scalar(1) / dx;
      Av_int(k, k) = Scalar(0.5);
    }
    if (k >= 1) {
      Df_int(k, k - 1) = Scalar(-1) / dx;
      Av_int(k, k - 1) = Scalar(0.5);
    }
  }
  Mat Df_full = Mat::Zero(n, nn), Av_full = Mat::Zero(n, nn);
  for (int k = 0; k < n; ++k) {
    Df_full(k, k + 1) = Scalar(1) / dx;
    Df_full(k, k) = Scalar(-1) / dx;
    Av_full(k, k) = Scalar(0.5);
    Av_full(k, k + 1) = Scalar(0.5);
  }

  const Mat M_int = dx * Mat::Identity(nf, nf);
  Eigen::VectorX<Scalar> wts = detail::trapezoid_weights<Scalar>(nn);
  const Mat M_full = dx * wts.asDiagonal();
  auto cellform = [&](const Mat& A, const Mat& B) { return Mat(dx * A.transpose() * B); };

  const int dim = 2 * nf + nn;
  const int o_phi = 0, o_psi = nf, o_theta = 2 * nf;
  Mat F = Mat::Zero(dim, dim);
  Mat G_disp = Mat::Zero(dim, dim);

  // F = 2(phi,phi1) + (sigma,sigma1) + (1+alpha)(psi,psi1) + (psi_x,psi1_x)
  //     + (theta_x,psi1) + (psi_x,theta1) + 2(theta,theta1) + 2(theta_x,theta1_x)
  F.block(o_phi, o_phi, nf, nf) += Scalar(2) * M_int + cellform(Df_int, Df_int);
  F.block(o_phi, o_psi, nf, nf) += cellform(Df_int, Av_int);
  F.block(o_psi, o_phi, nf, nf) += cellform(Av_int, Df_int);
  F.block(o_psi, o_psi, nf, nf) += cellform(Av_int, Av_int) +
                                   (Scalar(1) + cfg.friction.alpha) * M_int +
                                   cellform(Df_int, Df_int);
  F.block(o_psi, o_theta, nf, nn) += cellform(Av_int, Df_full);
  F.block(o_theta, o_psi, nn, nf) += cellform(Av_full, Df_int);
  F.block(o_theta, o_theta, nn, nn) +=
      Scalar(2) * M_full + Scalar(2) * cellform(Df_full, Df_full);

  // |(phi_x + psi)|^2 + |phi|^2 + |phi_x|^2 + |theta_x|^2
  G_disp.block(o_phi, o_phi, nf, nf) += cellform(Df_int, Df_int) + M_int +
                                        cellform(Df_int, Df_int);
  G_disp.block(o_phi, o_psi, nf, nf) += cellform(Df_int, Av_int);
  G_disp.block(o_psi, o_phi, nf, nf) += cellform(Av_int, Df_int);
  G_disp.block(o_psi, o_psi, nf, nf) += cellform(Av_int, Av_int);
  G_disp.block(o_theta, o_theta, nn, nn) += cellform(Df_full, Df_full);

  Mat G_full = G_disp;
  G_full.block(o_psi, o_psi, nf, nf) += cellform(Df_int, Df_int);

  // restrict theta to zero trapezoid mean
  const Mat Q = detail::mean_free_basis<Scalar>(
      Eigen::VectorX<Scalar>(detail::trapezoid_weights<Scalar>(nn)));
  Mat T = Mat::Zero(dim, 2 * nf + nn - 1);
  T.topLeftCorner(2 * nf, 2 * nf).setIdentity();
  T.block(o_theta, 2 * nf, nn, nn - 1) = Q;

  const Mat F_sym = T.transpose() * ((F + F.transpose()) / Scalar(2)) * T;
  auto extremes = [&](const Mat& G) -> std::pair<Scalar, Scalar> {
    const Mat G_red = T.transpose() * G * T;
    Eigen::SelfAdjointEigenSolver<Mat> gram_check(G_red);
    if (gram_check.eigenvalues().minCoeff() <=
        Scalar(1e-14) * gram_check.eigenvalues().cwiseAbs().maxCoeff())
      throw contract_error("coercivity: Gram matrix is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(F_sym, G_red);
    if (ges.info() != Eigen::Success)
      throw numerical_error("coercivity: generalized eigensolve failed");
    return {ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
  };

  CoercivityReport<Scalar> report;
  std::tie(report.alpha0, report.c_bound) = extremes(G_disp);
  std::tie(report.alpha0_full, report.c_bound_full) = extremes(G_full);
  return report;
}

}  // namespace timo3

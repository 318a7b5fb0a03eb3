#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "timo3/generator.hpp"
#include "timo3/integrator.hpp"

using namespace timo3;

namespace {

SimConfig<double> base_config(int n) {
  SimConfig<double> cfg;
  cfg.n = n;
  return cfg;
}

Field<double> random_dirichlet(const Grid<double>& grid, std::mt19937& rng) {
  std::normal_distribution<double> dist;
  Field<double> f = make_field(grid, BoundaryTag::DirichletZero);
  for (int j = 1; j < grid.n; ++j) f.values[j] = dist(rng);
  return f;
}

Field<double> random_neumann(const Grid<double>& grid, std::mt19937& rng) {
  std::normal_distribution<double> dist;
  Field<double> f = make_field(grid, BoundaryTag::NeumannZero);
  for (int j = 0; j <= grid.n; ++j) f.values[j] = dist(rng);
  return f;
}

std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  REQUIRE(es.info() == Eigen::Success);
  std::vector<std::complex<double>> vals(es.eigenvalues().size());
  for (int i = 0; i < es.eigenvalues().size(); ++i) vals[i] = es.eigenvalues()[i];
  return vals;
}

}  // namespace

TEST_CASE("assemble rejects nonlinear friction and degenerate coefficients") {
  auto cfg = base_config(8);
  cfg.friction = FrictionLaw<double>::rational_cubic(1.0);
  CHECK_THROWS_AS(assemble(cfg, 8, GeneratorMode::NoMemory), contract_error);

  auto bad = base_config(8);
  bad.coeffs.k2 = 0.0;
  CHECK_THROWS_AS(assemble(bad, 8, GeneratorMode::NoMemory), contract_error);

  auto tab = base_config(8);
  tab.kernel = MemoryKernel<double>::tabulated(
      (Eigen::VectorXd(2) << 0.0, 1.0).finished(),
      (Eigen::VectorXd(2) << 0.5, 0.2).finished());
  CHECK_THROWS_AS(assemble(tab, 8, GeneratorMode::ExpAugmented), contract_error);
}

TEST_CASE("dense eigensolver sanity: diagonal and rotation generators") {
  Eigen::MatrixXd d(2, 2);
  d << -1, 0, 0, -2;
  auto dv = dense_eigenvalues(d);
  std::sort(dv.begin(), dv.end(),
            [](auto a, auto b) { return a.real() < b.real(); });
  CHECK(dv[0].real() == doctest::Approx(-2.0));
  CHECK(dv[1].real() == doctest::Approx(-1.0));
  CHECK(std::abs(dv[0].imag()) < 1e-14);

  Eigen::MatrixXd r(2, 2);
  r << 0, -1, 1, 0;
  auto rv = dense_eigenvalues(r);
  std::sort(rv.begin(), rv.end(),
            [](auto a, auto b) { return a.imag() < b.imag(); });
  CHECK(rv[0].imag() == doctest::Approx(-1.0));
  CHECK(rv[1].imag() == doctest::Approx(1.0));
  CHECK(std::abs(rv[0].real()) < 1e-14);
}

TEST_CASE("the undamped (phi, u) block reproduces the discrete dispersion relation") {
  const int n = 16;
  auto cfg = base_config(n);
  cfg.coeffs.mu = 0.0;
  cfg.coeffs.gamma = 0.0;
  cfg.coeffs.k1 = 2.0;
  cfg.coeffs.rho1 = 0.5;
  auto gen = assemble(cfg, n, GeneratorMode::NoMemory);

  const int nf = n - 1;
  Eigen::MatrixXd block(2 * nf, 2 * nf);
  block << gen.A.block(0, 0, nf, nf), gen.A.block(0, nf, nf, nf),
      gen.A.block(nf, 0, nf, nf), gen.A.block(nf, nf, nf, nf);

  auto vals = dense_eigenvalues(block);
  std::vector<double> got;
  for (const auto& v : vals) {
    CHECK(std::abs(v.real()) < 1e-8);  // skew structure: purely imaginary
    if (v.imag() > 0) got.push_back(v.imag());
  }
  std::sort(got.begin(), got.end());

  const double dx = 1.0 / n;
  const double c = cfg.coeffs.k1 / cfg.coeffs.rho1;
  std::vector<double> expected;
  for (int j = 1; j <= n - 1; ++j) {
    const double lambda_j = 4.0 / (dx * dx) * std::pow(std::sin(j * M_PI * dx / 2), 2);
    expected.push_back(std::sqrt(c * lambda_j));
  }
  std::sort(expected.begin(), expected.end());
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-8));
}

TEST_CASE("matrix action matches rhs on random states (NoMemory)") {
  const int n = 12;
  auto cfg = base_config(n);
  cfg.kernel = MemoryKernel<double>::exponential(0.0, 1.0);  // memory-free
  Grid<double> grid(n, cfg.coeffs.length);
  auto gen = assemble(cfg, n, GeneratorMode::NoMemory);

  std::mt19937 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    State<double> s;
    s.t = 0;
    s.phi = random_dirichlet(grid, rng);
    s.u = random_dirichlet(grid, rng);
    s.psi = random_dirichlet(grid, rng);
    s.v = random_dirichlet(grid, rng);
    s.theta = random_neumann(grid, rng);
    s.z = random_neumann(grid, rng);

    const Eigen::VectorXd y = pack_state(grid, s, gen.layout);
    const Eigen::VectorXd Ay = gen.A * y;
    const State<double> dot = rhs(grid, s, make_field(grid, BoundaryTag::DirichletZero), cfg);
    const Eigen::VectorXd dot_packed = pack_state(grid, dot, gen.layout);
    CHECK((Ay - dot_packed).cwiseAbs().maxCoeff() < 1e-12 * (1 + Ay.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("matrix action matches rhs with the augmented memory block") {
  const int n = 10;
  auto cfg = base_config(n);
  Grid<double> grid(n, cfg.coeffs.length);
  auto gen = assemble(cfg, n, GeneratorMode::ExpAugmented);

  std::mt19937 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    State<double> s;
    s.t = 0;
    s.phi = random_dirichlet(grid, rng);
    s.u = random_dirichlet(grid, rng);
    s.psi = random_dirichlet(grid, rng);
    s.v = random_dirichlet(grid, rng);
    s.theta = random_neumann(grid, rng);
    s.z = random_neumann(grid, rng);
    const Field<double> conv = random_dirichlet(grid, rng);
    const Eigen::VectorXd w = laplacian(grid, conv).values;

    const Eigen::VectorXd y = pack_state(grid, s, gen.layout, &w);
    const Eigen::VectorXd Ay = gen.A * y;
    const State<double> dot = rhs(grid, s, conv, cfg);
    const Eigen::VectorXd dot_packed = pack_state(grid, dot, gen.layout);
    // compare the six field blocks; the w rows are the augmentation itself
    for (int i = 0; i < 4 * gen.layout.n_int + 2 * gen.layout.n_full; ++i)
      CHECK(Ay[i] == doctest::Approx(dot_packed[i]).epsilon(1e-11));
  }
}

TEST_CASE("spectrum: conjugate symmetry and a strictly negative abscissa") {
  auto cfg = base_config(32);
  auto gen = assemble(cfg, 32, GeneratorMode::ExpAugmented);
  auto report = spectrum(gen);

  CHECK(report.eigenvalues.size() ==
        static_cast<std::size_t>(gen.layout.dim - 2));
  CHECK(report.abscissa < 0.0);
  CHECK(report.dominant.real() == doctest::Approx(report.abscissa));

  for (const auto& ev : report.eigenvalues) {
    if (std::abs(ev.imag()) < 1e-10) continue;
    bool found = false;
    for (const auto& other : report.eigenvalues)
      if (std::abs(other.real() - ev.real()) < 1e-8 &&
          std::abs(other.imag() + ev.imag()) < 1e-8) {
        found = true;
        break;
      }
    CHECK(found);
  }
}

TEST_CASE("spectrum abscissa is negative across resolutions with full damping") {
  for (int n : {8, 16, 32}) {
    auto cfg = base_config(n);
    auto rep = spectrum(assemble(cfg, n, GeneratorMode::ExpAugmented));
    CHECK(rep.abscissa < 0.0);
    auto rep0 = spectrum(assemble(cfg, n, GeneratorMode::NoMemory));
    CHECK(rep0.abscissa < 0.0);
  }
}

TEST_CASE("solve_resolvent: zero input, constructed input, random input") {
  const int n = 16;
  auto cfg = base_config(n);
  auto gen = assemble(cfg, n, GeneratorMode::NoMemory);
  const int dim = gen.layout.dim;

  auto zero = solve_resolvent(gen, Eigen::VectorXd(Eigen::VectorXd::Zero(dim)));
  CHECK(zero.U.cwiseAbs().maxCoeff() == 0.0);

  std::mt19937 rng(47);
  std::normal_distribution<double> dist;
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = dist(rng);
  const Eigen::VectorXd b = x - gen.A * x;
  auto sol = solve_resolvent(gen, b);
  CHECK((sol.U - x).cwiseAbs().maxCoeff() < 1e-10 * x.cwiseAbs().maxCoeff());

  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd r(dim);
    for (int i = 0; i < dim; ++i) r[i] = dist(rng);
    r.normalize();
    auto s = solve_resolvent(gen, r);
    CHECK(s.residual <= 1e-10);
  }
}

TEST_CASE("coercivity: positive constants, ordered bounds, reduced variants") {
  auto cfg = base_config(32);
  auto rep = coercivity(cfg, 32);
  CHECK(rep.alpha0 > 0.0);
  CHECK(rep.alpha0 <= rep.c_bound);
  CHECK(rep.alpha0_full > 0.0);
  CHECK(rep.alpha0_full <= rep.c_bound_full);

  // memory and coupling off: the reduced diagonal form stays coercive
  auto reduced = base_config(16);
  reduced.coeffs.gamma = 0.0;
  reduced.kernel = MemoryKernel<double>::exponential(0.0, 1.0);
  auto rep2 = coercivity(reduced, 16);
  CHECK(rep2.alpha0 > 0.0);

  auto nonlinear = base_config(16);
  nonlinear.friction = FrictionLaw<double>::rational_cubic(1.0);
  CHECK_THROWS_AS(coercivity(nonlinear, 16), contract_error);
}

TEST_CASE("spectrum dimension cap") {
  auto cfg = base_config(512);
  auto gen = assemble(cfg, 512, GeneratorMode::NoMemory);  // dim = 3070 > cap
  CHECK_THROWS_AS(spectrum(gen), contract_error);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "timo3/integrator.hpp"

namespace fs = std::filesystem;
using namespace timo3cli;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "timo3_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config file yields the full default model") {
  const auto p = write_file("empty.cfg", "");
  auto config = parse_config(p.string());
  const auto& sim = config.sim;
  CHECK(sim.coeffs.rho1 == 1.0);
  CHECK(sim.coeffs.gamma == 1.0);
  CHECK(sim.kernel.a == 0.5);
  CHECK(sim.kernel.b == 1.0);
  CHECK(sim.friction.is_linear());
  CHECK(sim.friction.alpha == 1.0);
  CHECK(sim.n == 64);
  CHECK(sim.dt == 1e-3);
  CHECK(sim.T == 5.0);
  CHECK(sim.init.phi0.preset == "sin_pi");
  CHECK(sim.init.psi0.preset == "sin_2pi_bump");
  CHECK(sim.init.theta0.preset == "cos_pi");
  CHECK(sim.weights.N == 10.0);

  ConfigFile defaults;
  CHECK(serialize_config(config) == serialize_config(defaults));
}

TEST_CASE("parse errors carry line numbers") {
  const auto bad_key = write_file("badkey.cfg", "time.T = 1\nnot.a.key = 2\n");
  try {
    parse_config(bad_key.string());
    CHECK(false);
  } catch (const timo3::parse_error& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
  }

  const auto malformed = write_file("malformed.cfg", "grid.n 64\n");
  try {
    parse_config(malformed.string());
    CHECK(false);
  } catch (const timo3::parse_error& e) {
    CHECK(e.line == 1);
  }

  const auto bad_value = write_file("badvalue.cfg", "time.dt = fast\n");
  CHECK_THROWS_AS(parse_config(bad_value.string()), timo3::parse_error);

  const auto bad_invariant = write_file("badinv.cfg", "grid.n = 2\n");
  CHECK_THROWS_AS(parse_config(bad_invariant.string()), timo3::parse_error);

  CHECK_THROWS_AS(parse_config((scratch_dir() / "missing.cfg").string()),
                  timo3::parse_error);
}

TEST_CASE("config round-trips through serialize/parse") {
  const auto p = write_file("round.cfg",
                            "coefficients.k1 = 2.5\n"
                            "kernel.a = 0.25\n"
                            "kernel.b = 2\n"
                            "friction.family = rational_cubic\n"
                            "friction.alpha = 0.75\n"
                            "grid.n = 48\n"
                            "time.dt = 0.0005\n"
                            "time.T = 2.5\n"
                            "weights.N = 12\n"
                            "output.stride = 5\n"
                            "override.hypotheses = true\n");
  auto first = parse_config(p.string());
  const std::string text = serialize_config(first);
  const auto p2 = write_file("round2.cfg", text);
  auto second = parse_config(p2.string());
  CHECK(serialize_config(second) == text);
  CHECK(second.sim.coeffs.k1 == 2.5);
  CHECK_FALSE(second.sim.friction.is_linear());
  CHECK(second.sim.stride == 5);
  CHECK(second.sim.override_hypotheses);
}

TEST_CASE("initial-data tables load from @files and are size-checked") {
  std::ostringstream table;
  for (int j = 0; j <= 16; ++j) {
    const double x = j / 16.0;
    table << x * (1 - x) << "\n";
  }
  write_file("phi0.txt", table.str());
  const auto good = write_file("table.cfg",
                               "grid.n = 16\ninit.phi0 = @phi0.txt\n");
  auto config = parse_config(good.string());
  CHECK(config.sim.init.phi0.kind == timo3::FieldSpec<double>::Kind::Table);
  CHECK(config.sim.init.phi0.table.size() == 17);
  CHECK(config.sim.init.phi0.source == "@phi0.txt");

  const auto wrong = write_file("tablewrong.cfg",
                                "grid.n = 32\ninit.phi0 = @phi0.txt\n");
  CHECK_THROWS_AS(parse_config(wrong.string()), timo3::parse_error);

  const auto unknown = write_file("badpreset.cfg", "init.phi0 = wiggle\n");
  CHECK_THROWS_AS(parse_config(unknown.string()), timo3::parse_error);
}

TEST_CASE("tabulated kernels load from a samples file") {
  std::ostringstream samples;
  for (int i = 0; i <= 200; ++i) {
    const double s = 0.1 * i;
    samples << s << " " << 0.5 * std::exp(-s) << "\n";
  }
  write_file("kernel.txt", samples.str());
  const auto p = write_file("tab.cfg",
                            "kernel.family = tabulated\n"
                            "kernel.samples = kernel.txt\n"
                            "kernel.xi_bound = 1\n");
  auto config = parse_config(p.string());
  CHECK(config.sim.kernel.family == timo3::MemoryKernel<double>::Family::Tabulated);
  CHECK(config.sim.kernel.sample_times.size() == 201);
  CHECK(serialize_config(config).find("kernel.samples = kernel.txt") !=
        std::string::npos);

  const auto missing = write_file("tabmissing.cfg", "kernel.family = tabulated\n");
  CHECK_THROWS_AS(parse_config(missing.string()), timo3::parse_error);
}

TEST_CASE("cmd_run: T = 0 writes exactly one data row and exits 0") {
  const auto cfg = write_file("t0.cfg", "time.T = 0\n");
  const auto out = scratch_dir() / "t0_out";
  CHECK(cmd_run(cfg.string(), out.string(), false) == 0);
  const std::string csv = slurp(out / "energy.csv");
  CHECK(csv.find("t,E,D,residual,I1,I2,I3,I4,L,mean_z") == 0);
  int rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 2);  // header + one record
  CHECK(fs::exists(out / "manifest.txt"));
}

TEST_CASE("cmd_run: hypothesis gate maps to exit 2 and the override flag clears it") {
  const auto cfg = write_file("heavy.cfg",
                              "kernel.a = 2\nkernel.b = 1\ntime.T = 0.01\n");
  const auto out = scratch_dir() / "heavy_out";
  CHECK(cmd_run(cfg.string(), out.string(), false) == 2);
  CHECK(cmd_run(cfg.string(), out.string(), true) == 0);

  const auto with_key = write_file(
      "heavy2.cfg",
      "kernel.a = 2\nkernel.b = 1\ntime.T = 0.01\noverride.hypotheses = true\n");
  CHECK(cmd_run(with_key.string(), out.string(), false) == 0);
}

TEST_CASE("cmd_run: config errors exit 1, blow-ups exit 3") {
  const auto missing = scratch_dir() / "nope.cfg";
  CHECK(cmd_run(missing.string(), (scratch_dir() / "x").string(), false) == 1);

  const auto unstable = write_file("unstable.cfg",
                                   "friction.alpha = -200\n"
                                   "grid.n = 16\n"
                                   "time.T = 5\n"
                                   "override.hypotheses = true\n");
  CHECK(cmd_run(unstable.string(), (scratch_dir() / "boom").string(), false) == 3);
}

TEST_CASE("cmd_run output is byte-identical across invocations") {
  const auto cfg = write_file("det.cfg", "time.T = 0.1\ngrid.n = 24\n");
  const auto out_a = scratch_dir() / "det_a";
  const auto out_b = scratch_dir() / "det_b";
  REQUIRE(cmd_run(cfg.string(), out_a.string(), false) == 0);
  REQUIRE(cmd_run(cfg.string(), out_b.string(), false) == 0);
  CHECK(slurp(out_a / "energy.csv") == slurp(out_b / "energy.csv"));
}

TEST_CASE("cmd_spectrum writes re,im sorted by descending real part") {
  const auto cfg = write_file("spec.cfg", "grid.n = 12\n");
  const auto out = scratch_dir() / "spec_out";
  CHECK(cmd_spectrum(cfg.string(), out.string(), false) == 0);
  std::ifstream csv(out / "spectrum.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "re,im");
  double prev = 1e300;
  std::string line;
  int count = 0;
  while (std::getline(csv, line)) {
    const double re = std::stod(line.substr(0, line.find(',')));
    CHECK(re <= prev + 1e-15);
    prev = re;
    ++count;
  }
  const int dim = 4 * 11 + 2 * 13 + 11;  // ExpAugmented layout at n = 12
  CHECK(count == dim - 2);               // two zero-mean directions removed
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("abscissa = ") != std::string::npos);
}

TEST_CASE("cmd_spectrum output is byte-identical across invocations") {
  const auto cfg = write_file("specdet.cfg", "grid.n = 10\n");
  const auto out_a = scratch_dir() / "specdet_a";
  const auto out_b = scratch_dir() / "specdet_b";
  REQUIRE(cmd_spectrum(cfg.string(), out_a.string(), false) == 0);
  REQUIRE(cmd_spectrum(cfg.string(), out_b.string(), false) == 0);
  CHECK(slurp(out_a / "spectrum.csv") == slurp(out_b / "spectrum.csv"));
}

TEST_CASE("cmd_fit: exact exponential series exits 0 with the generating values") {
  std::ostringstream csv;
  csv << "t,E,D,residual,I1,I2,I3,I4,L,mean_z\n";
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.05 * i;
    csv << t << "," << 3.0 * std::exp(-2.0 * t) << ",0,0,0,0,0,0,0,0\n";
  }
  const auto p = write_file("exact.csv", csv.str());
  CHECK(cmd_fit(p.string(), std::nullopt) == 0);
  CHECK(cmd_fit(p.string(), std::make_pair(1.0, 5.0)) == 0);

  // polynomial data in a wide window is rejected
  std::ostringstream poly;
  poly << "t,E\n";
  for (int i = 0; i <= 300; ++i) {
    const double t = 0.1 * i;
    poly << t << "," << std::pow(1.0 + t, -2.0) << "\n";
  }
  const auto pp = write_file("poly.csv", poly.str());
  CHECK(cmd_fit(pp.string(), std::make_pair(0.0, 30.0)) == 1);

  CHECK(cmd_fit((scratch_dir() / "absent.csv").string(), std::nullopt) == 1);
}

TEST_CASE("cmd_check: default config passes, heavy kernel fails with exit 2") {
  const auto good = write_file("chk.cfg", "");
  CHECK(cmd_check(good.string()) == 0);
  const auto bad = write_file("chk2.cfg", "kernel.a = 2\n");
  CHECK(cmd_check(bad.string()) == 2);
}

TEST_CASE("cmd_verify: default config passes every check") {
  const auto cfg = write_file("verify.cfg", "time.T = 0.5\ngrid.n = 32\n");
  CHECK(cmd_verify(cfg.string()) == 0);
}

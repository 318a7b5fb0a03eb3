#include "config.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "timo3/errors.hpp"

namespace timo3cli {

namespace fs = std::filesystem;
using timo3::parse_error;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw parse_error("expected a number, got '" + v + "'", line);
  }
}

int to_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw parse_error("expected an integer, got '" + v + "'", line);
  }
}

bool to_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw parse_error("expected true or false, got '" + v + "'", line);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Eigen::VectorXd load_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open table file '" + path.string() + "'");
  std::vector<double> vals;
  double x;
  while (in >> x) vals.push_back(x);
  if (!in.eof())
    throw parse_error("non-numeric data in table file '" + path.string() + "'");
  Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

}  // namespace

ConfigFile parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open config file '" + path + "'");
  const fs::path base = fs::path(path).parent_path();

  ConfigFile out;
  auto& sim = out.sim;

  // deferred pieces that need the final grid size / family
  std::string kernel_family = "exponential";
  double kernel_a = 0.5, kernel_b = 1.0, kernel_xi = 0.0;
  std::string kernel_samples;
  std::string friction_family = "linear";
  double friction_alpha = 1.0, friction_eps = 1.0;
  std::map<std::string, std::pair<std::string, int>> init_tokens;

  std::map<std::string, std::function<void(const std::string&, int)>> keys;
  auto dbl = [&](double& slot) {
    return [&slot](const std::string& v, int line) { slot = to_double(v, line); };
  };
  keys["coefficients.rho1"] = dbl(sim.coeffs.rho1);
  keys["coefficients.rho2"] = dbl(sim.coeffs.rho2);
  keys["coefficients.rho3"] = dbl(sim.coeffs.rho3);
  keys["coefficients.k1"] = dbl(sim.coeffs.k1);
  keys["coefficients.k2"] = dbl(sim.coeffs.k2);
  keys["coefficients.mu"] = dbl(sim.coeffs.mu);
  keys["coefficients.beta"] = dbl(sim.coeffs.beta);
  keys["coefficients.delta"] = dbl(sim.coeffs.delta);
  keys["coefficients.gamma"] = dbl(sim.coeffs.gamma);
  keys["coefficients.L"] = dbl(sim.coeffs.length);

  keys["kernel.family"] = [&](const std::string& v, int line) {
    if (v != "exponential" && v != "tabulated")
      throw parse_error("kernel.family must be exponential or tabulated", line);
    kernel_family = v;
  };
  keys["kernel.a"] = dbl(kernel_a);
  keys["kernel.b"] = dbl(kernel_b);
  keys["kernel.xi_bound"] = dbl(kernel_xi);
  keys["kernel.samples"] = [&](const std::string& v, int) { kernel_samples = v; };

  keys["friction.family"] = [&](const std::string& v, int line) {
    if (v != "linear" && v != "rational_cubic")
      throw parse_error("friction.family must be linear or rational_cubic", line);
    friction_family = v;
  };
  keys["friction.alpha"] = dbl(friction_alpha);
  keys["friction.eps_prime"] = dbl(friction_eps);

  keys["grid.n"] = [&](const std::string& v, int line) { sim.n = to_int(v, line); };
  keys["time.dt"] = dbl(sim.dt);
  keys["time.T"] = dbl(sim.T);

  for (const char* name : {"phi0", "phi1", "psi0", "psi1", "theta0", "theta1"}) {
    keys[std::string("init.") + name] = [&init_tokens, name](const std::string& v,
                                                             int line) {
      init_tokens[name] = {v, line};
    };
  }

  keys["weights.N"] = dbl(sim.weights.N);
  keys["weights.N1"] = dbl(sim.weights.N1);
  keys["weights.N2"] = dbl(sim.weights.N2);
  keys["weights.N3"] = dbl(sim.weights.N3);
  keys["weights.N4"] = dbl(sim.weights.N4);
  keys["weights.epsilon"] = dbl(sim.weights.epsilon);
  keys["weights.epsilon7"] = dbl(sim.weights.epsilon7);
  keys["weights.epsilon8"] = dbl(sim.weights.epsilon8);
  keys["weights.epsilon9"] = dbl(sim.weights.epsilon9);
  keys["weights.c"] = dbl(sim.weights.c);
  keys["weights.c7"] = dbl(sim.weights.c7);
  keys["weights.c8"] = dbl(sim.weights.c8);
  keys["weights.c9"] = dbl(sim.weights.c9);
  keys["weights.c_prime"] = dbl(sim.weights.c_prime);

  keys["output.stride"] = [&](const std::string& v, int line) {
    sim.stride = to_int(v, line);
  };
  keys["output.snapshots"] = [&](const std::string& v, int line) {
    sim.store_states = to_bool(v, line);
  };
  keys["memory.eps_trunc"] = dbl(sim.eps_trunc);
  keys["override.hypotheses"] = [&](const std::string& v, int line) {
    sim.override_hypotheses = to_bool(v, line);
  };

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = keys.find(key);
    if (it == keys.end()) throw parse_error("unknown key '" + key + "'", line_no);
    if (value.empty()) throw parse_error("empty value for '" + key + "'", line_no);
    it->second(value, line_no);
  }

  // kernel
  if (kernel_family == "exponential") {
    sim.kernel = timo3::MemoryKernel<double>::exponential(kernel_a, kernel_b);
  } else {
    if (kernel_samples.empty())
      throw parse_error("tabulated kernel needs kernel.samples = <path>");
    const fs::path sp = fs::path(kernel_samples).is_absolute()
                            ? fs::path(kernel_samples)
                            : base / kernel_samples;
    std::ifstream sf(sp);
    if (!sf)
      throw parse_error("cannot open kernel samples file '" + sp.string() + "'");
    std::vector<double> ts, vs;
    double s, g;
    while (sf >> s >> g) {
      ts.push_back(s);
      vs.push_back(g);
    }
    if (ts.size() < 2)
      throw parse_error("kernel samples file needs at least two 's g' pairs");
    Eigen::VectorXd tv(static_cast<Eigen::Index>(ts.size())),
        vv(static_cast<Eigen::Index>(vs.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      tv[i] = ts[i];
      vv[i] = vs[i];
    }
    try {
      sim.kernel = timo3::MemoryKernel<double>::tabulated(tv, vv, kernel_xi);
    } catch (const timo3::contract_error& e) {
      throw parse_error(e.what());
    }
    out.kernel_samples_path = kernel_samples;
  }

  // friction
  sim.friction = friction_family == "linear"
                     ? timo3::FrictionLaw<double>::linear(friction_alpha)
                     : timo3::FrictionLaw<double>::rational_cubic(friction_alpha);
  sim.friction.eps_prime = friction_eps;

  // initial data (tables resolved against the final grid.n)
  auto resolve = [&](const char* name, timo3::FieldSpec<double>& slot) {
    auto it = init_tokens.find(name);
    if (it == init_tokens.end()) return;
    const auto& [token, line] = it->second;
    if (!token.empty() && token[0] == '@') {
      const std::string rel = token.substr(1);
      const fs::path tp = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
      const Eigen::VectorXd vals = load_values(tp);
      if (vals.size() != sim.n + 1)
        throw parse_error("table '" + tp.string() + "' has " +
                              std::to_string(vals.size()) + " values; grid.n = " +
                              std::to_string(sim.n) + " needs " +
                              std::to_string(sim.n + 1),
                          line);
      slot = timo3::FieldSpec<double>::from_table(vals, token);
    } else {
      for (const char* preset : {"zero", "sin_pi", "cos_pi", "sin_2pi_bump"})
        if (token == preset) {
          slot = timo3::FieldSpec<double>::from_preset(token);
          return;
        }
      throw parse_error("unknown initial-data preset '" + token + "'", line);
    }
  };
  resolve("phi0", sim.init.phi0);
  resolve("phi1", sim.init.phi1);
  resolve("psi0", sim.init.psi0);
  resolve("psi1", sim.init.psi1);
  resolve("theta0", sim.init.theta0);
  resolve("theta1", sim.init.theta1);

  try {
    sim.validate();
  } catch (const timo3::contract_error& e) {
    throw parse_error(e.what());
  }
  return out;
}

std::string serialize_config(const ConfigFile& config) {
  const auto& sim = config.sim;
  std::ostringstream os;
  os << "coefficients.rho1 = " << fmt(sim.coeffs.rho1) << "\n";
  os << "coefficients.rho2 = " << fmt(sim.coeffs.rho2) << "\n";
  os << "coefficients.rho3 = " << fmt(sim.coeffs.rho3) << "\n";
  os << "coefficients.k1 = " << fmt(sim.coeffs.k1) << "\n";
  os << "coefficients.k2 = " << fmt(sim.coeffs.k2) << "\n";
  os << "coefficients.mu = " << fmt(sim.coeffs.mu) << "\n";
  os << "coefficients.beta = " << fmt(sim.coeffs.beta) << "\n";
  os << "coefficients.delta = " << fmt(sim.coeffs.delta) << "\n";
  os << "coefficients.gamma = " << fmt(sim.coeffs.gamma) << "\n";
  os << "coefficients.L = " << fmt(sim.coeffs.length) << "\n";
  if (sim.kernel.family == timo3::MemoryKernel<double>::Family::Exponential) {
    os << "kernel.family = exponential\n";
    os << "kernel.a = " << fmt(sim.kernel.a) << "\n";
    os << "kernel.b = " << fmt(sim.kernel.b) << "\n";
  } else {
    os << "kernel.family = tabulated\n";
    os << "kernel.samples = " << config.kernel_samples_path << "\n";
    os << "kernel.xi_bound = " << fmt(sim.kernel.xi_bound) << "\n";
  }
  os << "friction.family = "
     << (sim.friction.is_linear() ? "linear" : "rational_cubic") << "\n";
  os << "friction.alpha = " << fmt(sim.friction.alpha) << "\n";
  os << "friction.eps_prime = " << fmt(sim.friction.eps_prime) << "\n";
  os << "grid.n = " << sim.n << "\n";
  os << "time.dt = " << fmt(sim.dt) << "\n";
  os << "time.T = " << fmt(sim.T) << "\n";
  const std::pair<const char*, const timo3::FieldSpec<double>*> inits[] = {
      {"phi0", &sim.init.phi0},   {"phi1", &sim.init.phi1},
      {"psi0", &sim.init.psi0},   {"psi1", &sim.init.psi1},
      {"theta0", &sim.init.theta0}, {"theta1", &sim.init.theta1}};
  for (const auto& [name, spec] : inits)
    os << "init." << name << " = " << spec->source << "\n";
  os << "weights.N = " << fmt(sim.weights.N) << "\n";
  os << "weights.N1 = " << fmt(sim.weights.N1) << "\n";
  os << "weights.N2 = " << fmt(sim.weights.N2) << "\n";
  os << "weights.N3 = " << fmt(sim.weights.N3) << "\n";
  os << "weights.N4 = " << fmt(sim.weights.N4) << "\n";
  os << "weights.epsilon = " << fmt(sim.weights.epsilon) << "\n";
  os << "weights.epsilon7 = " << fmt(sim.weights.epsilon7) << "\n";
  os << "weights.epsilon8 = " << fmt(sim.weights.epsilon8) << "\n";
  os << "weights.epsilon9 = " << fmt(sim.weights.epsilon9) << "\n";
  os << "weights.c = " << fmt(sim.weights.c) << "\n";
  os << "weights.c7 = " << fmt(sim.weights.c7) << "\n";
  os << "weights.c8 = " << fmt(sim.weights.c8) << "\n";
  os << "weights.c9 = " << fmt(sim.weights.c9) << "\n";
  os << "weights.c_prime = " << fmt(sim.weights.c_prime) << "\n";
  os << "output.stride = " << sim.stride << "\n";
  os << "output.snapshots = " << (sim.store_states ? "true" : "false") << "\n";
  os << "memory.eps_trunc = " << fmt(sim.eps_trunc) << "\n";
  os << "override.hypotheses = " << (sim.override_hypotheses ? "true" : "false")
     << "\n";
  return os.str();
}

}  // namespace timo3cli

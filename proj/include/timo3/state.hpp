#pragma once

// The six-field state of the first-order system and its construction from
// initial data. u = phi_t, v = psi_t, z = theta_t.

#include <cmath>
#include <string>

#include "timo3/errors.hpp"
#include "timo3/grid.hpp"
#include "timo3/model.hpp"

namespace timo3 {

template <typename Scalar>
struct State {
  Scalar t = 0;
  Field<Scalar> phi, u, psi, v, theta, z;
};

template <typename Scalar>
State<Scalar> make_state(const Grid<Scalar>& grid, const InitialData<Scalar>& init) {
  State<Scalar> s;
  s.t = 0;
  s.phi = sample_spec(grid, init.phi0, BoundaryTag::DirichletZero);
  s.u = sample_spec(grid, init.phi1, BoundaryTag::DirichletZero);
  s.psi = sample_spec(grid, init.psi0, BoundaryTag::DirichletZero);
  s.v = sample_spec(grid, init.psi1, BoundaryTag::DirichletZero);
  s.theta = sample_spec(grid, init.theta0, BoundaryTag::NeumannZero);
  s.z = sample_spec(grid, init.theta1, BoundaryTag::NeumannZero);
  validate_initial(grid, s.phi, "phi0");
  validate_initial(grid, s.u, "phi1");
  validate_initial(grid, s.psi, "psi0");
  validate_initial(grid, s.v, "psi1");
  validate_initial(grid, s.theta, "theta0");
  validate_initial(grid, s.z, "theta1");
  return s;
}

/// Throws blowup_error naming the first field that is non-finite or beyond
/// the magnitude cap.
template <typename Scalar>
void require_regular(const State<Scalar>& state, long step, Scalar cap) {
  const Field<Scalar>* fields[] = {&state.phi, &state.u,     &state.psi,
                                   &state.v,   &state.theta, &state.z};
  const char* names[] = {"phi", "u", "psi", "v", "theta", "z"};
  for (int i = 0; i < 6; ++i) {
    if (!fields[i]->values.allFinite())
      throw blowup_error(names[i], step, static_cast<double>(state.t),
                         std::numeric_limits<double>::quiet_NaN());
    const Scalar m = fields[i]->values.cwiseAbs().maxCoeff();
    if (m > cap)
      throw blowup_error(names[i], step, static_cast<double>(state.t),
                         static_cast<double>(m));
  }
}

}  // namespace timo3

#pragma once

#include <stdexcept>
#include <string>

namespace timo3 {

/// Violation of a documented call contract (caller bug, not data).
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

/// A model hypothesis gate failed and no override was requested.
struct hypothesis_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A nodal value left the representable range during time integration.
struct blowup_error : std::runtime_error {
  blowup_error(const std::string& field_name, long step_index, double at_time,
               double magnitude)
      : std::runtime_error("blow-up in field '" + field_name + "' at step " +
                           std::to_string(step_index) + ", t = " +
                           std::to_string(at_time) + " (|value| = " +
                           std::to_string(magnitude) + ")"),
        field(field_name),
        step(step_index),
        time(at_time),
        max_magnitude(magnitude) {}

  std::string field;
  long step;
  double time;
  double max_magnitude;
};

/// The pointwise friction solve did not reach tolerance.
struct newton_error : std::runtime_error {
  newton_error(int iterations, double residual)
      : std::runtime_error("pointwise Newton stalled after " +
                           std::to_string(iterations) +
                           " iterations (residual " + std::to_string(residual) +
                           ")"),
        iterations(iterations),
        residual(residual) {}

  int iterations;
  double residual;
};

/// Config file rejected. line is 1-based; 0 when not tied to a line.
struct parse_error : std::runtime_error {
  parse_error(const std::string& msg, int line_number = 0)
      : std::runtime_error(line_number > 0
                               ? "line " + std::to_string(line_number) + ": " + msg
                               : msg),
        line(line_number) {}

  int line;
};

/// An eigen/linear solve failed to converge or produced a singular system.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace timo3

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace asep {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument for a mathematical operation (out-of-domain input).
struct domain_error : error {
  using error::error;
};

/// Degenerate model parameter (p = 0, q = 0, tau = 1, ...).
struct parameter_error : error {
  using error::error;
};

/// Enumeration or grid size exceeds a hard cap / evaluation budget.
struct resource_error : error {
  using error::error;
};

/// A quadrature contour fails its singularity-clearance validation.
struct contour_error : error {
  using error::error;
};

/// A denominator vanished where the formula requires it nonzero.
struct pole_error : error {
  using error::error;
};

/// Integrand evaluated to a non-finite value at a quadrature node.
struct evaluation_error : error {
  using error::error;
};

/// Adaptive refinement exhausted its doubling budget; carries the
/// successive-difference history.
struct convergence_error : error {
  convergence_error(const std::string& msg, std::vector<double> history)
      : error(msg), deltas(std::move(history)) {}
  std::vector<double> deltas;
};

/// Malformed run configuration (CLI / config file).
struct config_error : error {
  using error::error;
};

}  // namespace asep

#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "asep/errors.hpp"
#include "asep/parallel.hpp"
#include "asep/rational.hpp"

namespace asep {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Minimum admissible denominator magnitude at any quadrature node.
inline constexpr double kClearanceThreshold = 1e-6;

/// Positively oriented circle; node counts are powers of two so adaptive
/// refinement can double cleanly.
struct CircleContour {
  Complex center{0.0, 0.0};
  double radius = 1.0;
  std::size_t nodes = 64;

  void validate() const {
    if (!(radius > 0.0)) throw contour_error("circle radius must be positive");
    if (nodes < 8 || !std::has_single_bit(nodes))
      throw contour_error("circle node count must be a power of two >= 8");
  }

  Complex node(std::size_t j, double offset = 0.0) const {
    const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(nodes) + offset;
    return center + radius * Complex(std::cos(theta), std::sin(theta));
  }

  /// Trapezoid weight for (1/2πi)∮: (z_j - center)/M.
  Complex weight(std::size_t j, double offset = 0.0) const {
    return (node(j, offset) - center) / static_cast<double>(nodes);
  }

  CircleContour with_nodes(std::size_t m) const {
    CircleContour c = *this;
    c.nodes = m;
    return c;
  }
};

/// One integration variable's node/weight set (a circle or a union of circles).
struct QuadDim {
  std::vector<Complex> nodes;
  std::vector<Complex> weights;

  std::size_t size() const { return nodes.size(); }

  void append_circle(const CircleContour& c, double offset = 0.0) {
    c.validate();
    for (std::size_t j = 0; j < c.nodes; ++j) {
      nodes.push_back(c.node(j, offset));
      weights.push_back(c.weight(j, offset));
    }
  }
};

inline QuadDim quad_dim(const CircleContour& c, double offset = 0.0) {
  QuadDim d;
  d.append_circle(c, offset);
  return d;
}

/// Small default rotations so no two dimensions share a node exactly.
inline std::vector<double> default_offsets(std::size_t k, std::size_t nodes) {
  std::vector<double> offs(k);
  const double spacing = kTwoPi / static_cast<double>(nodes);
  for (std::size_t d = 0; d < k; ++d)
    offs[d] = spacing * static_cast<double>(d + 1) / static_cast<double>(k + 2);
  return offs;
}

/// Nested system of tiny circles about 0 and tau; variable z_i integrates over
/// the union of the two circles of radius radii[i-1], with radii strictly
/// decreasing so z_1 is the outermost.
struct NestedTwoCenterContour {
  int L = 1;
  double tau = 0.5;
  std::vector<double> radii;
  std::size_t nodes_per_circle = 16;

  void validate() const {
    if (L < 1 || static_cast<int>(radii.size()) != L)
      throw contour_error("nested contour needs one radius per variable");
    if (nodes_per_circle < 8 || !std::has_single_bit(nodes_per_circle))
      throw contour_error("nested node count must be a power of two >= 8");
    for (int i = 0; i < L; ++i) {
      if (!(radii[static_cast<std::size_t>(i)] > 0.0))
        throw contour_error("nested radii must be positive");
      if (i > 0 && !(radii[static_cast<std::size_t>(i)] < radii[static_cast<std::size_t>(i - 1)]))
        throw contour_error("nested radii must decrease strictly");
    }
    // circles about 0 and tau stay disjoint and exclude z = 1
    const double r1 = radii.front();
    if (!(r1 < std::abs(tau) / 2.0 && r1 < 1.0 && r1 < std::abs(1.0 - tau)))
      throw contour_error("outer nested radius too large for centers {0, tau}");
  }

  QuadDim dim(int var, std::size_t nodes_override = 0) const {
    const double rho = radii[static_cast<std::size_t>(var)];
    const std::size_t m = nodes_override ? nodes_override : nodes_per_circle;
    QuadDim d;
    d.append_circle(CircleContour{{0.0, 0.0}, rho, m});
    d.append_circle(CircleContour{{tau, 0.0}, rho, m});
    return d;
  }

  NestedTwoCenterContour with_nodes(std::size_t m) const {
    NestedTwoCenterContour n = *this;
    n.nodes_per_circle = m;
    return n;
  }
};

/// Build the nested circle system about {0, tau} for L variables.
///
/// Radii: rho_1 = clearance/8, rho_{i+1} = rho_i / ratio with
/// ratio = max(3, 3/tau).  The 1/tau scaling keeps the pole images
/// (z - p)/(q z) of an inner tau-circle (at distance ~rho/tau from tau)
/// inside the next outer circle, and the p/(1 - q z) poles of an outer
/// node (at distance ~tau rho from tau) outside the inner circles.
/// clearance_points are singularities that every circle must avoid.
inline NestedTwoCenterContour make_nested_contour(int L, double tau,
                                                  std::span<const Complex> clearance_points,
                                                  std::size_t nodes_per_circle = 16) {
  if (L < 1) throw contour_error("nested contour needs L >= 1");
  if (!(tau > 0.0)) throw contour_error("nested contour needs tau > 0");
  double clearance = std::min({std::abs(tau), std::abs(1.0 - tau), 1.0});
  for (const Complex& s : clearance_points)
    clearance = std::min({clearance, std::abs(s), std::abs(s - Complex(tau, 0.0))});
  if (!(clearance > 8 * kClearanceThreshold))
    throw contour_error("nested contour: singularity too close to {0, tau}");

  NestedTwoCenterContour n;
  n.L = L;
  n.tau = tau;
  n.nodes_per_circle = nodes_per_circle;
  const double ratio = std::max(3.0, 3.0 / tau);
  double rho = clearance / 8.0;
  for (int i = 0; i < L; ++i) {
    n.radii.push_back(rho);
    rho /= ratio;
  }
  n.validate();
  return n;
}

/// All quadrature contours for one computation; immutable once validated.
struct ContourPlan {
  CircleContour small;         // C_r
  CircleContour large;         // C_R
  NestedTwoCenterContour nested;
  CircleContour lambda_circle;
  double tolerance = 1e-10;
  int max_doublings = 4;
  std::uint64_t eval_budget = 1'000'000'000ull;
};

inline std::uint64_t env_eval_budget(std::uint64_t fallback) {
  if (const char* s = std::getenv("ASEP_BLOCKS_BUDGET")) {
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end != s && v > 0) return static_cast<std::uint64_t>(v);
  }
  return fallback;
}

namespace detail {
inline void check_budget(std::uint64_t points, std::uint64_t budget) {
  if (points > budget) {
    std::ostringstream os;
    os << "quadrature grid of " << points << " evaluations exceeds budget " << budget;
    throw resource_error(os.str());
  }
}

inline std::string describe_node(std::size_t dim, std::size_t idx, const Complex& z) {
  std::ostringstream os;
  os << "dim " << dim << " node " << idx << " at (" << z.real() << "," << z.imag() << ")";
  return os.str();
}
}  // namespace detail

/// Core engine: sum of f(z) * prod(weights) over the tensor grid of dims.
/// Deterministic for a fixed grid regardless of worker count.
template <class F>
Complex quad_sum(std::span<const QuadDim> dims, F&& f, std::uint64_t budget) {
  const std::size_t k = dims.size();
  std::uint64_t points = 1;
  for (const auto& d : dims) {
    if (d.size() == 0) throw contour_error("empty quadrature dimension");
    points *= d.size();
  }
  detail::check_budget(points, budget);

  auto term = [&](std::int64_t flat) -> Complex {
    thread_local std::vector<Complex> z;
    z.resize(k);
    std::uint64_t rem = static_cast<std::uint64_t>(flat);
    Complex w(1.0, 0.0);
    for (std::size_t d = k; d-- > 0;) {
      const std::size_t idx = rem % dims[d].size();
      rem /= dims[d].size();
      z[d] = dims[d].nodes[idx];
      w *= dims[d].weights[idx];
    }
    const Complex v = f(std::span<const Complex>(z.data(), k));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      // recover the first dimension's index for the message
      std::uint64_t r2 = static_cast<std::uint64_t>(flat);
      std::size_t idx0 = 0;
      for (std::size_t d = k; d-- > 0;) {
        idx0 = r2 % dims[d].size();
        r2 /= dims[d].size();
      }
      throw evaluation_error("integrand not finite at " + detail::describe_node(0, idx0, z[0]));
    }
    return w * v;
  };
  return parallel_sum<Complex>(static_cast<std::int64_t>(points), term);
}

/// (1/2πi) ∮ f dz over one circle; spectrally accurate for analytic f.
template <class F>
Complex circle_integral(const CircleContour& c, F&& f, double offset = 0.0,
                        std::uint64_t budget = 1'000'000'000ull) {
  QuadDim d = quad_dim(c, offset);
  return quad_sum(std::span<const QuadDim>(&d, 1),
                  [&](std::span<const Complex> z) { return f(z[0]); }, budget);
}

/// Full tensor-product quadrature over k circles with per-dimension offsets.
template <class F>
Complex tensor_integral(std::span<const CircleContour> contours, std::span<const double> offsets,
                        F&& f, std::uint64_t budget = 1'000'000'000ull) {
  std::vector<QuadDim> dims;
  dims.reserve(contours.size());
  for (std::size_t d = 0; d < contours.size(); ++d)
    dims.push_back(quad_dim(contours[d], d < offsets.size() ? offsets[d] : 0.0));
  return quad_sum(std::span<const QuadDim>(dims.data(), dims.size()), std::forward<F>(f), budget);
}

/// Iterated residues at {0, tau} by quadrature over the nested circle system.
/// Higher-order poles at the centers need no derivative formulas.
template <class F>
Complex nested_two_center_integral(F&& f, const NestedTwoCenterContour& n,
                                   std::size_t inner_nodes = 0,
                                   std::uint64_t budget = 1'000'000'000ull) {
  n.validate();
  std::vector<QuadDim> dims;
  dims.reserve(static_cast<std::size_t>(n.L));
  for (int i = 0; i < n.L; ++i) dims.push_back(n.dim(i, inner_nodes));
  return quad_sum(std::span<const QuadDim>(dims.data(), dims.size()), std::forward<F>(f), budget);
}

struct AdaptiveResult {
  Complex value{0.0, 0.0};
  double err = 0.0;                // last successive difference
  std::vector<double> deltas;      // full doubling history
  std::size_t nodes_used = 0;
};

/// Double the node count until successive results differ by less than tol in
/// absolute value.  eval(nodes) recomputes the quantity at that resolution.
template <class F>
AdaptiveResult adaptive(F&& eval, std::size_t start_nodes, double tol, int max_doublings) {
  AdaptiveResult res;
  std::size_t m = start_nodes;
  Complex prev = eval(m);
  for (int d = 0; d < max_doublings; ++d) {
    m *= 2;
    const Complex cur = eval(m);
    const double delta = std::abs(cur - prev);
    res.deltas.push_back(delta);
    if (delta < tol) {
      res.value = cur;
      res.err = delta;
      res.nodes_used = m;
      return res;
    }
    prev = cur;
  }
  throw convergence_error("adaptive quadrature did not converge", res.deltas);
}

/// Records the smallest denominator magnitude seen during plan validation.
struct ClearanceCheck {
  double min_abs = std::numeric_limits<double>::infinity();
  std::string worst;

  void feed(double v, const std::string& what) {
    if (v < min_abs) {
      min_abs = v;
      worst = what;
    }
  }

  void require(double threshold = kClearanceThreshold) const {
    if (!(min_abs >= threshold)) {
      std::ostringstream os;
      os << "contour clearance violated: |" << worst << "| = " << min_abs << " < " << threshold;
      throw contour_error(os.str());
    }
  }
};

}  // namespace asep

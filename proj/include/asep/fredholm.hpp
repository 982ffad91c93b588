#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "asep/contour.hpp"
#include "asep/finite.hpp"
#include "asep/params.hpp"
#include "asep/probability.hpp"
#include "asep/qalgebra.hpp"
#include "asep/weights.hpp"

namespace asep {

/// Nyström discretization of an integral operator on a circle: the operator
/// becomes the M x M matrix K(xi_a, xi_b) w_b with w_b = (xi_b - center)/M.
struct NystromGrid {
  std::vector<Complex> nodes;
  std::vector<Complex> weights;

  static NystromGrid from_circle(const CircleContour& c) {
    c.validate();
    NystromGrid g;
    g.nodes.reserve(c.nodes);
    g.weights.reserve(c.nodes);
    for (std::size_t j = 0; j < c.nodes; ++j) {
      g.nodes.push_back(c.node(j));
      g.weights.push_back(c.weight(j));
    }
    return g;
  }

  std::size_t size() const { return nodes.size(); }
};

/// K_{L,x}(xi, xi'; z) = xi^x e^{eps(xi) t} / (p + q xi xi' - xi) * prod_j U(z_j, xi);
/// the z-product is empty when the L-factor mode is off.
struct KernelSpec {
  long x = 0;
  double t = 0.0;
  int L = 0;
  std::vector<Complex> z;
  RealParams params;
};

inline Complex kernel_value(const KernelSpec& spec, const Complex& xi, const Complex& xi_prime) {
  const RealParams& pr = spec.params;
  const Complex den = pr.p + pr.q * xi * xi_prime - xi;
  if (den == Complex(0.0, 0.0)) throw pole_error("kernel_value: p + q xi xi' - xi = 0");
  Complex v = int_pow(xi, spec.x) * std::exp(energy(xi, pr) * spec.t) / den;
  for (const Complex& zj : spec.z) v *= u_weight(zj, xi, pr);
  return v;
}

namespace detail {

/// Dense LU with partial pivoting; the determinant is accumulated in
/// log-magnitude + phase to avoid overflow.  Destroys `a` (n x n row-major).
inline Complex det_lu(std::vector<Complex>& a, int n) {
  double log_mag = 0.0;
  Complex phase(1.0, 0.0);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(a[static_cast<std::size_t>(c) * n + c]);
    for (int r = c + 1; r < n; ++r) {
      const double v = std::abs(a[static_cast<std::size_t>(r) * n + c]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) return Complex(0.0, 0.0);
    if (piv != c) {
      for (int j = c; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(piv) * n + j], a[static_cast<std::size_t>(c) * n + j]);
      phase = -phase;
    }
    const Complex d = a[static_cast<std::size_t>(c) * n + c];
    log_mag += std::log(std::abs(d));
    phase *= d / std::abs(d);
    for (int r = c + 1; r < n; ++r) {
      const Complex f = a[static_cast<std::size_t>(r) * n + c] / d;
      if (f == Complex(0.0, 0.0)) continue;
      for (int j = c + 1; j < n; ++j)
        a[static_cast<std::size_t>(r) * n + j] -= f * a[static_cast<std::size_t>(c) * n + j];
    }
  }
  if (log_mag > 690.0) throw evaluation_error("determinant overflows double range");
  return std::exp(log_mag) * phase;
}

}  // namespace detail

/// det(I - lambda K) on the grid: the (a,b) entry is
/// delta_ab - lambda w_b K(xi_a, xi_b).
inline Complex fredholm_det(const KernelSpec& spec, const Complex& lambda,
                            const NystromGrid& grid) {
  const int n = static_cast<int>(grid.size());
  std::vector<Complex> a(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      a[static_cast<std::size_t>(r) * n + c] =
          (r == c ? Complex(1.0, 0.0) : Complex(0.0, 0.0)) -
          lambda * grid.weights[static_cast<std::size_t>(c)] *
              kernel_value(spec, grid.nodes[static_cast<std::size_t>(r)],
                           grid.nodes[static_cast<std::size_t>(c)]);
  return detail::det_lu(a, n);
}

/// Circle enclosing exactly the poles of 1/(lambda; tau)_m at tau^{-j},
/// j = 0..m-1, excluding 0 and tau^{-m}.  Works on both sides of tau = 1;
/// margins are measured from the circle, not its center.
inline CircleContour lambda_contour_for(int m, const RealParams& pr, std::size_t nodes = 64) {
  if (m < 1) throw domain_error("lambda contour needs m >= 1");
  if (!(pr.q > 0) || !(pr.p > 0)) throw parameter_error("lambda contour needs p, q > 0");
  const double tau = pr.p / pr.q;
  if (tau == 1.0) throw parameter_error("lambda contour: tau = 1 is degenerate");
  const double far = std::pow(tau, -static_cast<double>(m - 1));  // tau^{-(m-1)}
  const double next = far / tau;                                  // tau^{-m}
  const double lo = std::min(1.0, far), hi = std::max(1.0, far);
  const double center = (lo + hi) / 2.0;
  const double r0 = (hi - lo) / 2.0;
  const double delta = std::min(center - r0, std::abs(next - center) - r0) / 2.0;
  CircleContour c{{center, 0.0}, r0 + delta, nodes};

  ClearanceCheck check;
  for (int j = 0; j < m; ++j)
    check.feed(c.radius - std::abs(std::pow(tau, -j) - center), "enclosed tau^{-j} margin");
  check.feed(std::abs(Complex(next, 0.0) - c.center) - c.radius, "excluded tau^{-m} margin");
  check.feed(std::abs(c.center) - c.radius, "excluded 0 margin");
  check.require();
  return c;
}

namespace detail {

struct Theorem3Workspace {
  NystromGrid grid;
  std::vector<Complex> base;  // w_b * K_{x+L-1}(xi_a, xi_b), row-major
  CircleContour lambda_circle;
  QuadDim lambda_dim;
  double s_factor = 0.0;  // q / p^L
  int m = 0;
};

inline Theorem3Workspace make_theorem3_workspace(const BlockQuery& q, const RealParams& pr,
                                                 const ContourPlan& plan) {
  Theorem3Workspace w;
  w.grid = NystromGrid::from_circle(plan.large);
  const int M = static_cast<int>(w.grid.size());
  KernelSpec spec{q.x + q.L - 1, q.t, 0, {}, pr};
  w.base.resize(static_cast<std::size_t>(M) * M);
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < M; ++c)
      w.base[static_cast<std::size_t>(r) * M + c] =
          w.grid.weights[static_cast<std::size_t>(c)] *
          kernel_value(spec, w.grid.nodes[static_cast<std::size_t>(r)],
                       w.grid.nodes[static_cast<std::size_t>(c)]);
  w.lambda_circle = lambda_contour_for(q.m, pr, plan.lambda_circle.nodes ? plan.lambda_circle.nodes
                                                                         : 64);
  w.lambda_dim = quad_dim(w.lambda_circle);
  w.s_factor = pr.q / std::pow(pr.p, q.L);
  w.m = q.m;

  // lambda nodes must clear the Pochhammer poles
  ClearanceCheck check;
  const double tau = pr.p / pr.q;
  for (const Complex& lam : w.lambda_dim.nodes)
    check.feed(std::abs(pochhammer(lam, tau, q.m)), "(lambda; tau)_m");
  check.require();
  return w;
}

/// Integral over the lambda circle of det(I - s lambda D base)/((lambda;tau)_m lambda^L)
/// for the row-scaling D = diag(d).
inline Complex lambda_integral(const Theorem3Workspace& w, std::span<const Complex> d, int L,
                               double tau) {
  const int M = static_cast<int>(w.grid.size());
  thread_local std::vector<Complex> scaled, mat;
  scaled.assign(static_cast<std::size_t>(M) * M, Complex{});
  for (int r = 0; r < M; ++r)
    for (int c = 0; c < M; ++c)
      scaled[static_cast<std::size_t>(r) * M + c] =
          d[static_cast<std::size_t>(r)] * w.base[static_cast<std::size_t>(r) * M + c];

  Complex acc{};
  for (std::size_t j = 0; j < w.lambda_dim.nodes.size(); ++j) {
    const Complex lam = w.lambda_dim.nodes[j];
    const Complex coeff = w.s_factor * lam;
    mat.assign(static_cast<std::size_t>(M) * M, Complex{});
    for (int r = 0; r < M; ++r) {
      for (int c = 0; c < M; ++c)
        mat[static_cast<std::size_t>(r) * M + c] = -coeff * scaled[static_cast<std::size_t>(r) * M + c];
      mat[static_cast<std::size_t>(r) * M + r] += 1.0;
    }
    const Complex det = det_lu(mat, M);
    acc += w.lambda_dim.weights[j] * det / (pochhammer(lam, tau, w.m) * int_pow(lam, L));
  }
  return acc;
}

}  // namespace detail

/// Theorem 3: step-IC block probability as the nested Gamma_{0,tau} integral
/// of the lambda-contour Fredholm-determinant integral.  The lambda contour
/// encloses only the tau^{-j}; the Monte Carlo acceptance suite arbitrates
/// this enclosure choice.
inline ProbabilityEstimate theorem3_prob(const BlockQuery& q, const ExactParams& eparams,
                                         const ContourPlan& plan) {
  q.validate();
  if (eparams.p == 0 || eparams.q == 0) throw parameter_error("theorem3_prob: requires p, q > 0");
  if (eparams.tau_degenerate()) throw parameter_error("theorem3_prob: tau = 1 degenerate");
  const RealParams pr = to_real(eparams);
  const double tau = pr.p / pr.q;

  auto w = detail::make_theorem3_workspace(q, pr, plan);
  const int M = static_cast<int>(w.grid.size());

  // nested z-circles must clear the kernel pole images p/(1 - q xi_a)
  std::vector<Complex> images;
  images.reserve(w.grid.size());
  for (const Complex& xi : w.grid.nodes) images.push_back(pr.p / (1.0 - pr.q * xi));
  auto nested = make_nested_contour(q.L, tau, std::span<const Complex>(images.data(),
                                                                       images.size()),
                                    plan.nested.nodes_per_circle ? plan.nested.nodes_per_circle
                                                                 : 16);

  std::vector<QuadDim> zdims;
  for (int i = 0; i < q.L; ++i) zdims.push_back(nested.dim(i));
  std::uint64_t zpoints = 1;
  for (const auto& d : zdims) zpoints *= d.size();
  detail::check_budget(zpoints * w.lambda_dim.nodes.size() * static_cast<std::uint64_t>(M) * M,
                       plan.eval_budget);

  const int L = q.L;
  auto term = [&](std::int64_t flat) -> Complex {
    thread_local std::vector<Complex> z, dscale;
    z.resize(static_cast<std::size_t>(L));
    std::uint64_t rem = static_cast<std::uint64_t>(flat);
    Complex zweight(1.0, 0.0);
    for (int d = L; d-- > 0;) {
      const std::size_t idx = rem % zdims[static_cast<std::size_t>(d)].size();
      rem /= zdims[static_cast<std::size_t>(d)].size();
      z[static_cast<std::size_t>(d)] = zdims[static_cast<std::size_t>(d)].nodes[idx];
      zweight *= zdims[static_cast<std::size_t>(d)].weights[idx];
    }
    // z-prefactor: 1/prod_i z_i^{L-i+1}(q z_i - p) * prod_{i<j} 1/U(z_j, z_i)
    Complex pref(1.0, 0.0);
    for (int i = 0; i < L; ++i)
      pref /= int_pow(z[static_cast<std::size_t>(i)], L - i) *
              (pr.q * z[static_cast<std::size_t>(i)] - pr.p);
    for (int i = 0; i < L; ++i)
      for (int j = i + 1; j < L; ++j)
        pref /= u_weight(z[static_cast<std::size_t>(j)], z[static_cast<std::size_t>(i)], pr);

    dscale.resize(w.grid.size());
    for (std::size_t a = 0; a < w.grid.size(); ++a) {
      Complex d(1.0, 0.0);
      for (int i = 0; i < L; ++i)
        d *= u_weight(z[static_cast<std::size_t>(i)], w.grid.nodes[a], pr);
      dscale[a] = d;
    }
    const Complex lam_int = detail::lambda_integral(
        w, std::span<const Complex>(dscale.data(), dscale.size()), L, tau);
    return zweight * pref * lam_int;
  };
  const Complex zint =
      parallel_sum<Complex>(static_cast<std::int64_t>(zpoints), term, /*chunk=*/1);

  const Rational pre_exact = ((q.L - 1) % 2 ? Rational(-1) : Rational(1)) *
                             int_pow(eparams.p, static_cast<long long>(q.L) * (q.L + 1) / 2) *
                             int_pow(eparams.tau(),
                                     -static_cast<long long>(q.m - 1) * (q.L - 1));
  return detail::finish_probability(to_double(pre_exact) * zint, Method::thm3);
}

/// The Remark's L = 1 reduction, an independent code path:
///   P = ∮ [det(I - q lambda K_x) - det(I - q lambda K_{x-1})]/(lambda;tau)_m dlambda/lambda.
inline ProbabilityEstimate theorem3_prob_remark_L1(const BlockQuery& q,
                                                   const ExactParams& eparams,
                                                   const ContourPlan& plan) {
  if (q.L != 1) throw domain_error("remark formula is the L = 1 case");
  q.validate();
  if (eparams.p == 0 || eparams.q == 0)
    throw parameter_error("theorem3_prob_remark_L1: requires p, q > 0");
  const RealParams pr = to_real(eparams);
  const double tau = pr.p / pr.q;
  const NystromGrid grid = NystromGrid::from_circle(plan.large);
  const CircleContour lc = lambda_contour_for(q.m, pr, plan.lambda_circle.nodes
                                                           ? plan.lambda_circle.nodes
                                                           : 64);
  KernelSpec at_x{q.x, q.t, 0, {}, pr};
  KernelSpec at_xm1{q.x - 1, q.t, 0, {}, pr};
  const Complex v = circle_integral(
      lc,
      [&](Complex lam) {
        const Complex dx = fredholm_det(at_x, pr.q * lam, grid);
        const Complex dxm1 = fredholm_det(at_xm1, pr.q * lam, grid);
        return (dx - dxm1) / (pochhammer(lam, tau, q.m) * lam);
      },
      0.0, plan.eval_budget);
  return detail::finish_probability(v, Method::thm3);
}

/// Distribution function for step IC ("equation (1)" of the L = 1 theory):
///   P(x_m(t) <= x) = ∮ det(I - q lambda K_x)/(lambda;tau)_m dlambda/lambda
/// over a contour enclosing 0 and every tau^{-j}, j < m.
inline double cdf_step_ic(long x, int m, double t, const ExactParams& eparams,
                          const ContourPlan& plan) {
  if (eparams.p == 0 || eparams.q == 0) throw parameter_error("cdf_step_ic: requires p, q > 0");
  const RealParams pr = to_real(eparams);
  const double tau = pr.p / pr.q;
  const double far = std::pow(tau, -static_cast<double>(m - 1));
  double radius;
  if (tau > 1.0) {
    radius = 2.0;  // all tau^{-j} <= 1; nothing else to exclude
  } else {
    radius = std::sqrt(far * (far / tau));  // between tau^{-(m-1)} and tau^{-m}
  }
  const CircleContour lc{{0.0, 0.0}, radius,
                         plan.lambda_circle.nodes ? plan.lambda_circle.nodes : 64};
  const NystromGrid grid = NystromGrid::from_circle(plan.large);
  KernelSpec at_x{x, t, 0, {}, pr};
  const Complex v = circle_integral(
      lc,
      [&](Complex lam) {
        return fredholm_det(at_x, pr.q * lam, grid) / (pochhammer(lam, tau, m) * lam);
      },
      0.0, plan.eval_budget);
  return v.real();
}

/// Collapsed step-IC series (equal-cardinality subsets):
///   P = (-1)^{m+1} sum_{k >= m+L-1} (1/k!) [k-L  m-1]_tau p^{(k-m)(k-m+1)/2}
///       q^{km+(k-m)(k+m-1)/2} ∮_{C_R^k} J_{L,k},
/// truncated at k_max; the last term's magnitude is the truncation estimate.
inline ProbabilityEstimate step_series_prob(const BlockQuery& q, const ExactParams& eparams,
                                            const ContourPlan& plan, int k_max,
                                            std::size_t nodes_per_dim = 32) {
  q.validate();
  if (k_max > 5) throw resource_error("step_series_prob: k_max capped at 5");
  if (eparams.p == 0 || eparams.q == 0)
    throw parameter_error("step_series_prob: requires p, q > 0");
  if (eparams.tau_degenerate()) throw parameter_error("step_series_prob: tau = 1 degenerate");
  const RealParams pr = to_real(eparams);
  const Rational tau = eparams.tau();

  double value = 0.0;
  double imag_err = 0.0;
  std::vector<double> term_mags;
  const CircleContour circle = make_large_circle(pr, nodes_per_dim);

  for (int k = q.m + q.L - 1; k <= k_max; ++k) {
    const auto offsets = default_offsets(static_cast<std::size_t>(k), circle.nodes);
    std::vector<QuadDim> dims(static_cast<std::size_t>(k));
    for (int d = 0; d < k; ++d) {
      QuadDim dim = quad_dim(circle, offsets[static_cast<std::size_t>(d)]);
      for (std::size_t j = 0; j < dim.nodes.size(); ++j) {
        const Complex& z = dim.nodes[j];
        dim.weights[j] *= int_pow(z, q.x - 1) * std::exp(energy(z, pr) * q.t) /
                          ((Complex(1.0, 0.0) - z) * (pr.q * z - pr.p));
      }
      dims[static_cast<std::size_t>(d)] = std::move(dim);
    }
    detail::validate_block_nodes(std::span<const QuadDim>(dims.data(), dims.size()), pr);

    auto integrand = [&](std::span<const Complex> z) -> Complex {
      auto& s = detail::fl_scratch();
      if (s.u.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k) ||
          s.p_cached != pr.p)
        s.resize(k, pr.p);
      detail::fill_pairwise(z, pr, s);
      Complex denom(1.0, 0.0);
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
          denom *= s.u[static_cast<std::size_t>(i) * k + j] *
                   s.u[static_cast<std::size_t>(j) * k + i];
      return detail::f_poly_on_tuple(q.L, z, pr, s) / denom;
    };
    const Complex integral =
        quad_sum(std::span<const QuadDim>(dims.data(), dims.size()), integrand, plan.eval_budget);

    Rational coeff = ((q.m + 1) % 2 ? Rational(-1) : Rational(1)) *
                     tau_binom(k - q.L, q.m - 1, tau) *
                     int_pow(eparams.p,
                             static_cast<long long>(k - q.m) * (k - q.m + 1) / 2) *
                     int_pow(eparams.q,
                             static_cast<long long>(k) * q.m +
                                 detail::half_even(k - q.m, k + q.m - 1));
    for (int j = 2; j <= k; ++j) coeff /= j;  // 1/k!
    const Complex term = to_double(coeff) * integral;
    value += term.real();
    imag_err += std::abs(term.imag());
    term_mags.push_back(std::abs(term));
  }

  double truncation = term_mags.empty() ? 0.0 : term_mags.back();
  // non-decaying terms at k_max: inflate the estimate rather than fail
  if (term_mags.size() >= 2 && term_mags.back() > term_mags[term_mags.size() - 2])
    truncation = 2.0 * std::max(term_mags.back(), term_mags[term_mags.size() - 2]);
  return {value, truncation + 2.0 * imag_err + 1e-14, Method::series};
}

}  // namespace asep

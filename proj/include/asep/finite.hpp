#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "asep/contour.hpp"
#include "asep/params.hpp"
#include "asep/probability.hpp"
#include "asep/weights.hpp"

namespace asep {

inline constexpr int kMaxTransitionN = 4;  // N! * M^N evaluations
inline constexpr int kMaxBlockN = 5;

/// C_r: all poles of the A_sigma lie outside; radius min(p,1)/2.
inline CircleContour make_small_circle(const RealParams& pr, std::size_t nodes = 64) {
  if (!(pr.p > 0)) throw parameter_error("small contour needs p > 0");
  return CircleContour{{0.0, 0.0}, std::min(pr.p, 1.0) / 2.0, nodes};
}

/// C_R: all poles of the integrand lie inside; radius max(2, 2/q).
inline CircleContour make_large_circle(const RealParams& pr, std::size_t nodes = 64) {
  if (!(pr.q > 0)) throw parameter_error("large contour needs q > 0");
  return CircleContour{{0.0, 0.0}, std::max(2.0, 2.0 / pr.q), nodes};
}

inline ContourPlan make_default_plan(const RealParams& pr, std::size_t nodes = 64) {
  ContourPlan plan;
  if (pr.p > 0) plan.small = make_small_circle(pr, nodes);
  if (pr.q > 0) plan.large = make_large_circle(pr, nodes);
  plan.eval_budget = env_eval_budget(plan.eval_budget);
  return plan;
}

namespace detail {

/// Node-wise empirical validation: every denominator the I_L / A_sigma
/// integrands can form must clear 1e-6 in magnitude.
inline void validate_block_nodes(std::span<const QuadDim> dims, const RealParams& pr) {
  ClearanceCheck check;
  std::vector<Complex> all;
  for (const auto& d : dims) all.insert(all.end(), d.nodes.begin(), d.nodes.end());
  for (const Complex& a : all) {
    check.feed(std::abs(1.0 - a), "1 - xi");
    check.feed(std::abs(a), "xi");
    for (const Complex& b : all) check.feed(std::abs(pr.p + pr.q * a * b - a), "p + q xi xi' - xi");
  }
  check.require();
}

/// Scratch for evaluating f_L on quadrature tuples without allocation.
struct FLScratch {
  std::vector<Complex> u;      // k x k pairwise U values, row-major
  std::vector<Complex> prod;   // subset products of the tuple entries
  std::vector<Complex> fprev;  // f_{l-1} by subset mask
  std::vector<Complex> fcur;
  std::vector<double> p_pow;   // p^{1-n} for n = 0..k
  double p_cached = -1.0;

  void resize(int k, double p) {
    u.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), Complex{});
    const std::size_t m = 1u << k;
    prod.assign(m, Complex{});
    fprev.assign(m, Complex{});
    fcur.assign(m, Complex{});
    p_pow.assign(static_cast<std::size_t>(k) + 1, 1.0);
    for (int n = 0; n <= k; ++n) p_pow[static_cast<std::size_t>(n)] = std::pow(p, 1 - n);
    p_cached = p;
  }
};

inline FLScratch& fl_scratch() {
  thread_local FLScratch s;
  return s;
}

/// Fill s.u with U(z_a, z_b) for a != b and s.prod with subset products.
inline void fill_pairwise(std::span<const Complex> z, const RealParams& pr, FLScratch& s) {
  const int k = static_cast<int>(z.size());
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      s.u[static_cast<std::size_t>(a) * k + b] =
          (pr.p + pr.q * z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(b)] -
           z[static_cast<std::size_t>(a)]) /
          (z[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(a)]);
    }
  const std::uint32_t full = (1u << k) - 1u;
  s.prod[0] = Complex(1.0, 0.0);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int low = std::countr_zero(mask);
    s.prod[mask] = s.prod[mask & (mask - 1)] * z[static_cast<std::size_t>(low)];
  }
}

/// f_L(z) by the subset recursion, using the precomputed pairwise table.
inline Complex f_poly_on_tuple(int L, std::span<const Complex> z, const RealParams& pr,
                               FLScratch& s) {
  const int k = static_cast<int>(z.size());
  const std::uint32_t full = (1u << k) - 1u;
  for (std::uint32_t mask = 0; mask <= full; ++mask)
    s.fprev[mask] = Complex(1.0, 0.0) - s.prod[mask];
  for (int l = 2; l <= L; ++l) {
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      const int n = std::popcount(mask);
      if (n < l) continue;
      Complex sum{};
      for (std::uint32_t mk = mask; mk;) {
        const int kk = std::countr_zero(mk);
        mk &= mk - 1;
        const std::uint32_t rest = mask & ~(1u << kk);
        Complex uprod(1.0, 0.0);
        for (std::uint32_t mj = rest; mj;) {
          const int j = std::countr_zero(mj);
          mj &= mj - 1;
          uprod *= s.u[static_cast<std::size_t>(kk) * k + j];
        }
        sum += (Complex(1.0, 0.0) - z[static_cast<std::size_t>(kk)]) * s.prod[rest] * uprod *
               s.fprev[rest];
      }
      s.fcur[mask] = s.p_pow[static_cast<std::size_t>(n)] * sum;
    }
    std::swap(s.fprev, s.fcur);
  }
  return s.fprev[full];
}

}  // namespace detail

/// The multiple integral of I_L(x, Y, xi) over circle^{|Y|}:
///   I_L = prod_{i<j} U(xi_i,xi_j)^{-1} prod_i (1-xi_i)^{-1} f_L(xi)
///         prod_i xi_i^{x-y_i-1} e^{eps(xi_i) t}.
/// The per-dimension scalar factors ride in the quadrature weights; the
/// integrand callback computes only the coupled part.
inline Complex integral_IL(long x, std::span<const long> yvals, int L, double t,
                           const RealParams& pr, const CircleContour& circle,
                           std::uint64_t budget) {
  const int k = static_cast<int>(yvals.size());
  if (k < L) throw domain_error("integral_IL: needs |Y_S| >= L");
  const auto offsets = default_offsets(static_cast<std::size_t>(k), circle.nodes);
  std::vector<QuadDim> dims(static_cast<std::size_t>(k));
  for (int d = 0; d < k; ++d) {
    QuadDim dim = quad_dim(circle, offsets[static_cast<std::size_t>(d)]);
    for (std::size_t j = 0; j < dim.nodes.size(); ++j) {
      const Complex& z = dim.nodes[j];
      dim.weights[j] *= int_pow(z, x - yvals[static_cast<std::size_t>(d)] - 1) *
                        std::exp(energy(z, pr) * t) / (Complex(1.0, 0.0) - z);
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
      for (int j = i + 1; j < k; ++j) denom *= s.u[static_cast<std::size_t>(i) * k + j];
    return detail::f_poly_on_tuple(L, z, pr, s) / denom;
  };
  return quad_sum(std::span<const QuadDim>(dims.data(), dims.size()), integrand, budget);
}

namespace detail {
inline ProbabilityEstimate finish_probability(const Complex& value, Method method,
                                              double extra_error = 0.0) {
  return {value.real(), 2.0 * std::abs(value.imag()) + extra_error + 1e-14, method};
}

inline long long half_even(long long a, long long b) {
  // a*b guaranteed even by parity of the formulas
  return (a * b) / 2;
}
}  // namespace detail

/// Transition probability P_Y(X, t) by the N!-term sum of C_r^N integrals.
inline ProbabilityEstimate transition_prob(const ParticleConfig& y, const ParticleConfig& x,
                                           double t, const ExactParams& eparams,
                                           const ContourPlan& plan) {
  if (y.step || x.step) throw domain_error("transition_prob needs finite configurations");
  const int n = static_cast<int>(y.size());
  if (n != static_cast<int>(x.size())) throw domain_error("transition_prob: |X| != |Y|");
  if (n < 1) throw domain_error("transition_prob: empty configuration");
  if (n > kMaxTransitionN) throw resource_error("transition_prob: N capped at 4");
  const RealParams pr = to_real(eparams);
  if (!(pr.p > 0)) throw parameter_error("transition_prob: requires p > 0");

  const CircleContour circle = plan.small;
  const auto offsets = default_offsets(static_cast<std::size_t>(n), circle.nodes);
  std::vector<QuadDim> dims(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) {
    QuadDim dim = quad_dim(circle, offsets[static_cast<std::size_t>(d)]);
    for (std::size_t j = 0; j < dim.nodes.size(); ++j)
      dim.weights[j] *= std::exp(energy(dim.nodes[j], pr) * t);
    dims[static_cast<std::size_t>(d)] = std::move(dim);
  }
  detail::validate_block_nodes(std::span<const QuadDim>(dims.data(), dims.size()), pr);

  // all permutations as 0-based image arrays
  std::vector<std::vector<int>> perms;
  for_each_permutation(n, [&](const std::vector<int>& im) {
    std::vector<int> p0(im.size());
    for (std::size_t i = 0; i < im.size(); ++i) p0[i] = im[i] - 1;
    perms.push_back(std::move(p0));
  });

  auto integrand = [&](std::span<const Complex> z) -> Complex {
    // swap ratios for inverted pairs and per-(dim, slot) powers
    thread_local std::vector<Complex> ratio, pw;
    ratio.assign(static_cast<std::size_t>(n) * n, Complex{});
    pw.assign(static_cast<std::size_t>(n) * n, Complex{});
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const Complex base = pr.p + pr.q * z[static_cast<std::size_t>(a)] *
                                        z[static_cast<std::size_t>(b)];
        ratio[static_cast<std::size_t>(a) * n + b] =
            -(base - z[static_cast<std::size_t>(b)]) / (base - z[static_cast<std::size_t>(a)]);
      }
    for (int d = 0; d < n; ++d)
      for (int slot = 0; slot < n; ++slot)
        pw[static_cast<std::size_t>(d) * n + slot] =
            int_pow(z[static_cast<std::size_t>(d)],
                    x.positions[static_cast<std::size_t>(slot)] -
                        y.positions[static_cast<std::size_t>(d)] - 1);

    Complex total{};
    for (const auto& sigma : perms) {
      Complex term(1.0, 0.0);
      for (int i = 0; i < n; ++i) {
        term *= pw[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)]) * n + i];
        for (int j = i + 1; j < n; ++j) {
          const int a = sigma[static_cast<std::size_t>(i)], b = sigma[static_cast<std::size_t>(j)];
          if (a > b) term *= ratio[static_cast<std::size_t>(b) * n + a];
        }
      }
      total += term;
    }
    return total;
  };
  const Complex v =
      quad_sum(std::span<const QuadDim>(dims.data(), dims.size()), integrand, plan.eval_budget);
  return detail::finish_probability(v, Method::pxy);
}

/// Theorem 1 (small contours): sum over complements |S^c| < m with exact
/// rational coefficients, converted to numeric once.
inline ProbabilityEstimate block_prob_thm1(const ParticleConfig& y, const BlockQuery& q,
                                           const ExactParams& eparams, const ContourPlan& plan) {
  if (y.step) throw domain_error("block_prob_thm1 needs a finite configuration (step IC lives in theorem3/series)");
  const int n = static_cast<int>(y.size());
  q.validate(y.size());
  if (n > kMaxBlockN) throw resource_error("block_prob_thm1: N capped at 5");
  if (eparams.p == 0) throw parameter_error("block_prob_thm1: requires p > 0");
  if (eparams.q == 0 && q.m > 1)
    throw parameter_error("block_prob_thm1: m > 1 needs q > 0 (tau-binomial coefficients)");
  if (eparams.tau_degenerate() && q.m > 1)
    throw parameter_error("block_prob_thm1: tau = 1 degenerate for m > 1");
  const RealParams pr = to_real(eparams);
  const Rational tau = eparams.q > 0 ? eparams.tau() : Rational(0);

  const Rational prefactor =
      int_pow(eparams.p, detail::half_even(n - q.m + 1, n - q.m)) *
      int_pow(eparams.q, detail::half_even(q.m - 1, 2LL * n - q.m));

  Complex sum{};
  for_each_subset(n, [&](std::uint32_t comp_mask) {
    const int c = std::popcount(comp_mask);
    if (c > q.m - 1) return;
    long long sigma_c = 0;
    std::vector<long> ys;
    for (int i = 0; i < n; ++i) {
      if (comp_mask & (1u << i))
        sigma_c += i + 1;
      else
        ys.push_back(y.positions[static_cast<std::size_t>(i)]);
    }
    const int s = n - c;
    Rational coeff = (((q.m - 1 - c) % 2) ? Rational(-1) : Rational(1));
    if (q.m - 1 - c > 0) coeff *= tau_binom(s - q.L, q.m - 1 - c, tau);
    coeff *= int_pow(eparams.q, sigma_c - static_cast<long long>(n) * c);
    coeff /= int_pow(eparams.p, sigma_c - static_cast<long long>(c) * (c + 1) / 2);
    const Complex integral = integral_IL(q.x, std::span<const long>(ys.data(), ys.size()), q.L,
                                         q.t, pr, plan.small, plan.eval_budget);
    sum += to_double(coeff) * integral;
  });
  return detail::finish_probability(to_double(prefactor) * sum, Method::thm1);
}

/// Theorem 2 (large contours): sum over subsets |S| >= m+L-1.
inline ProbabilityEstimate block_prob_thm2(const ParticleConfig& y, const BlockQuery& q,
                                           const ExactParams& eparams, const ContourPlan& plan) {
  if (y.step)
    throw domain_error("block_prob_thm2 over step IC is not enumerable; use the collapsed series");
  const int n = static_cast<int>(y.size());
  q.validate(y.size());
  if (n > kMaxBlockN) throw resource_error("block_prob_thm2: N capped at 5");
  if (eparams.q == 0) throw parameter_error("block_prob_thm2: requires q > 0");
  if (eparams.tau_degenerate()) throw parameter_error("block_prob_thm2: tau = 1 degenerate");
  const RealParams pr = to_real(eparams);
  const Rational tau = eparams.tau();

  const Rational prefactor = ((q.m + 1) % 2 ? Rational(-1) : Rational(1)) *
                             int_pow(eparams.p, detail::half_even(q.m, q.m - 1));

  Complex sum{};
  for_each_subset(n, [&](std::uint32_t mask) {
    const int s = std::popcount(mask);
    if (s < q.m + q.L - 1) return;
    long long sigma_s = 0;
    std::vector<long> ys;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sigma_s += i + 1;
        ys.push_back(y.positions[static_cast<std::size_t>(i)]);
      }
    Rational coeff = int_pow(eparams.q, detail::half_even(q.m - 1, 2LL * s - q.m)) *
                     tau_binom(s - q.L, q.m - 1, tau) *
                     int_pow(eparams.p, sigma_s - static_cast<long long>(q.m) * s);
    coeff /= int_pow(eparams.q, sigma_s - static_cast<long long>(s) * (s + 1) / 2);
    const Complex integral = integral_IL(q.x, std::span<const long>(ys.data(), ys.size()), q.L,
                                         q.t, pr, plan.large, plan.eval_budget);
    sum += to_double(coeff) * integral;
  });
  return detail::finish_probability(to_double(prefactor) * sum, Method::thm2);
}

/// The paper's explicit two-term m = 2 form; an independent code path used as
/// a structural cross-check of Theorem 1's general coefficient.
inline ProbabilityEstimate block_prob_m2_direct(const ParticleConfig& y, const BlockQuery& q,
                                                const ExactParams& eparams,
                                                const ContourPlan& plan) {
  if (q.m != 2) throw domain_error("block_prob_m2_direct: m must be 2");
  if (y.step) throw domain_error("block_prob_m2_direct needs a finite configuration");
  const int n = static_cast<int>(y.size());
  q.validate(y.size());
  if (n > kMaxBlockN) throw resource_error("block_prob_m2_direct: N capped at 5");
  if (eparams.p == 0) throw parameter_error("block_prob_m2_direct: requires p > 0");
  if (eparams.tau_degenerate()) throw parameter_error("block_prob_m2_direct: tau = 1 degenerate");
  const RealParams pr = to_real(eparams);
  const Rational tau = eparams.tau();
  const Rational outer = int_pow(eparams.p, detail::half_even(n - 1, n - 2));

  const Complex full = integral_IL(q.x, std::span<const long>(y.positions.data(), y.size()), q.L,
                                   q.t, pr, plan.small, plan.eval_budget);
  Complex total = to_double(-int_pow(eparams.q, n - 1) * tau_binom(n - q.L, 1, tau) * outer) * full;

  for (int k = 1; k <= n; ++k) {
    std::vector<long> ys;
    for (int i = 0; i < n; ++i)
      if (i != k - 1) ys.push_back(y.positions[static_cast<std::size_t>(i)]);
    const Complex part = integral_IL(q.x, std::span<const long>(ys.data(), ys.size()), q.L, q.t,
                                     pr, plan.small, plan.eval_budget);
    total += to_double(outer * int_pow(eparams.q / eparams.p, k - 1)) * part;
  }
  return detail::finish_probability(total, Method::thm1);
}

}  // namespace asep

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "asep/combinatorics.hpp"
#include "asep/contour.hpp"
#include "asep/errors.hpp"
#include "asep/params.hpp"
#include "asep/qalgebra.hpp"

namespace asep {

inline constexpr int kMaxFPolyAmbient = 12;  // memo table cap

/// Two-particle scattering weight U(xi, xi') = (p + q xi xi' - xi)/(xi' - xi).
template <class S, class R>
S u_weight(const S& xi, const S& xi_prime, const Params<R>& pr) {
  const S den = xi_prime - xi;
  if (den == S(0)) throw pole_error("u_weight: coincident arguments");
  return (scalar_cast<S>(pr.p) + scalar_cast<S>(pr.q) * xi * xi_prime - xi) / den;
}

/// eps(xi) = p/xi + q xi - 1.
template <class S, class R>
S energy(const S& xi, const Params<R>& pr) {
  if (xi == S(0)) throw pole_error("energy: xi = 0");
  return scalar_cast<S>(pr.p) / xi + scalar_cast<S>(pr.q) * xi - S(1);
}

/// A_sigma = prod_{i<j} U(xi_{sigma(i)}, xi_{sigma(j)}) / U(xi_i, xi_j),
/// computed pairwise so the removable singularity at coincident xi never
/// materializes: an order-preserved pair contributes 1, an inverted pair
/// {a < b} contributes -(p + q xi_a xi_b - xi_b)/(p + q xi_a xi_b - xi_a).
template <class S, class R>
S amplitude(const Permutation& sigma, std::span<const S> xi, const Params<R>& pr) {
  const int n = sigma.size();
  if (static_cast<int>(xi.size()) != n)
    throw domain_error("amplitude: permutation/vector size mismatch");
  std::vector<int> slot_of(static_cast<std::size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) slot_of[static_cast<std::size_t>(sigma(i))] = i;
  const S p = scalar_cast<S>(pr.p);
  const S q = scalar_cast<S>(pr.q);
  S acc(1);
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b) {
      if (slot_of[static_cast<std::size_t>(a)] < slot_of[static_cast<std::size_t>(b)]) continue;
      const S& xa = xi[static_cast<std::size_t>(a - 1)];
      const S& xb = xi[static_cast<std::size_t>(b - 1)];
      const S base = p + q * xa * xb;
      const S den = base - xa;
      if (den == S(0)) throw pole_error("amplitude: vanishing pair denominator");
      acc *= -(base - xb) / den;
    }
  return acc;
}

/// Memo table for f_L over variable subsets, keyed by (L, index bitmask).
template <class S>
using FPolyCache = std::unordered_map<std::uint64_t, S>;

namespace detail {

template <class S, class R>
S f_poly_eval(int L, std::uint32_t mask, std::span<const S> xi, const Params<R>& pr,
              FPolyCache<S>& cache) {
  const std::uint64_t key = (static_cast<std::uint64_t>(L) << 32) | mask;
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  S result;
  if (L == 1) {
    S prod(1);
    for (std::uint32_t m = mask; m;) {
      const int k = std::countr_zero(m);
      m &= m - 1;
      prod *= xi[static_cast<std::size_t>(k)];
    }
    result = S(1) - prod;
  } else {
    const int n = std::popcount(mask);
    S sum(0);
    for (std::uint32_t mk = mask; mk;) {
      const int k = std::countr_zero(mk);
      mk &= mk - 1;
      const S& xk = xi[static_cast<std::size_t>(k)];
      S factor = S(1) - xk;
      for (std::uint32_t mj = mask; mj;) {
        const int j = std::countr_zero(mj);
        mj &= mj - 1;
        if (j == k) continue;
        const S& xj = xi[static_cast<std::size_t>(j)];
        factor *= xj * u_weight(xk, xj, pr);
      }
      sum += factor * f_poly_eval(L - 1, mask & ~(1u << k), xi, pr, cache);
    }
    result = scalar_cast<S>(int_pow(pr.p, 1 - n)) * sum;
  }
  cache.emplace(key, result);
  return result;
}

}  // namespace detail

/// The symmetric polynomial f_L, by the recursion
///   f_L(xi) = p^{1-N} sum_k (1 - xi_k) prod_{j != k} xi_j U(xi_k, xi_j) f_{L-1}(xi-hat-k)
/// with base f_1(xi) = 1 - prod xi_i.  Requires N >= L >= 1 and distinct entries.
template <class S, class R>
S f_poly(int L, std::span<const S> xi, const Params<R>& pr, FPolyCache<S>* cache = nullptr) {
  const int n = static_cast<int>(xi.size());
  if (n > kMaxFPolyAmbient) throw resource_error("f_poly: N capped at 12");
  if (L < 1) throw domain_error("f_poly: L must be >= 1");
  if (L > n) throw domain_error("f_poly: requires N >= L");
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
  if (cache) return detail::f_poly_eval(L, full, xi, pr, *cache);
  FPolyCache<S> local;
  return detail::f_poly_eval(L, full, xi, pr, local);
}

template <class S, class R>
S f_poly(int L, const std::vector<S>& xi, const Params<R>& pr, FPolyCache<S>* cache = nullptr) {
  return f_poly(L, std::span<const S>(xi.data(), xi.size()), pr, cache);
}

/// phi_L(z; xi) from the contour definition of f_L:
///   prod_{i<=L, j<=N} U(z_i, xi_j) / [ z_1^L (q z_1 - p) ... z_L (q z_L - p) ]
///   * prod_{i<j<=L} 1/U(z_j, z_i).
inline Complex phi_l(std::span<const Complex> z, std::span<const Complex> xi,
                     const RealParams& pr) {
  const int L = static_cast<int>(z.size());
  Complex acc(1.0, 0.0);
  for (int i = 0; i < L; ++i) {
    for (const Complex& x : xi) acc *= u_weight(z[static_cast<std::size_t>(i)], x, pr);
    acc /= int_pow(z[static_cast<std::size_t>(i)], L - i) *
           (pr.q * z[static_cast<std::size_t>(i)] - pr.p);
  }
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j)
      acc /= u_weight(z[static_cast<std::size_t>(j)], z[static_cast<std::size_t>(i)], pr);
  return acc;
}

/// Gamma_xi: one tiny circle around each xi_j, radius clear of every other
/// singularity of phi_L (0, tau, the other xi, and the pole images
/// (z - p)/(q z) of the other z-variables' nodes).
inline std::vector<QuadDim> make_xi_contour(std::span<const Complex> xi, const RealParams& pr,
                                            int L, std::size_t nodes_per_circle = 32) {
  const int n = static_cast<int>(xi.size());
  if (n == 0) throw contour_error("Gamma_xi: empty point set");
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const Complex& a = xi[static_cast<std::size_t>(i)];
    r = std::min(r, std::abs(a));                      // keep 0 outside
    if (pr.q > 0) r = std::min(r, std::abs(a - Complex(to_double(pr.p / pr.q), 0.0)));
    for (int j = i + 1; j < n; ++j)
      r = std::min(r, std::abs(a - xi[static_cast<std::size_t>(j)]) / 2.0);
  }
  r /= 4.0;
  if (!(r > 0.0)) throw contour_error("Gamma_xi: coincident or degenerate points");

  std::vector<QuadDim> dims(static_cast<std::size_t>(L));
  for (int d = 0; d < L; ++d)
    for (int i = 0; i < n; ++i)
      dims[static_cast<std::size_t>(d)].append_circle(
          CircleContour{xi[static_cast<std::size_t>(i)], r, nodes_per_circle},
          kTwoPi * (d + 1) / (static_cast<double>(nodes_per_circle) * (L + 2)));

  // clearance: every node keeps its distance from 0, tau and from pole images
  ClearanceCheck check;
  const double tau = pr.q > 0 ? to_double(pr.p / pr.q) : 0.0;
  for (const auto& dim : dims)
    for (const Complex& zn : dim.nodes) {
      check.feed(std::abs(zn), "z");
      check.feed(std::abs(pr.q * zn - pr.p), "q z - p");
      if (pr.q > 0) check.feed(std::abs(zn - Complex(tau, 0.0)), "z - tau");
    }
  // images (z - p)/(q z) of nodes must stay off every circle
  if (pr.q > 0)
    for (const auto& dim : dims)
      for (const Complex& zn : dim.nodes) {
        const Complex image = (zn - pr.p) / (pr.q * zn);
        for (int i = 0; i < n; ++i)
          check.feed(std::abs(image - xi[static_cast<std::size_t>(i)]) - r, "image clearance");
      }
  check.require();
  return dims;
}

/// f_L via the L-fold contour integral of phi_L over Gamma_xi; the recursion
/// is the oracle this must agree with.
inline Complex f_poly_via_contour(int L, std::span<const Complex> xi, const RealParams& pr,
                                  std::size_t nodes_per_circle = 32,
                                  std::uint64_t budget = 1'000'000'000ull) {
  const int n = static_cast<int>(xi.size());
  if (L < 1 || L > n) throw domain_error("f_poly_via_contour: requires N >= L >= 1");
  auto dims = make_xi_contour(xi, pr, L, nodes_per_circle);
  const Complex integral = quad_sum(
      std::span<const QuadDim>(dims.data(), dims.size()),
      [&](std::span<const Complex> z) { return phi_l(z, xi, pr); }, budget);
  Complex prefactor = std::pow(pr.p, static_cast<double>(L * (L + 1) / 2 - L * n));
  for (const Complex& x : xi) prefactor *= int_pow(x, L);
  return prefactor * integral;
}

}  // namespace asep

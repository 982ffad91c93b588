#pragma once

#include <bit>
#include <span>
#include <sstream>
#include <vector>

#include "asep/combinatorics.hpp"
#include "asep/errors.hpp"
#include "asep/rational.hpp"
#include "asep/report.hpp"

namespace asep {

/// tau-binomial [n k]_tau = prod_{j=0}^{k-1}(1 - tau^{n-j}) / prod_{j=1}^{k}(1 - tau^j).
///
/// The finite product defines the coefficient for every integer n (negative n
/// gives a nonzero value in general); vanishing for 0 <= n < k falls out of
/// the numerator.
template <class S>
S tau_binom(long long n, long long k, const S& tau) {
  if (k < 0) throw domain_error("tau_binom: k must be >= 0");
  if (tau == S(1)) throw parameter_error("tau_binom: tau = 1 is degenerate");
  S num(1), den(1);
  for (long long j = 0; j < k; ++j) {
    num *= S(1) - int_pow(tau, n - j);
    den *= S(1) - int_pow(tau, j + 1);
  }
  return num / den;
}

/// Pochhammer symbol (lambda; tau)_m = prod_{j=0}^{m-1}(1 - lambda tau^j).
template <class S, class T>
S pochhammer(const S& lambda, const T& tau, long long m) {
  if (m < 0) throw domain_error("pochhammer: m must be >= 0");
  S acc(1);
  S tp(1);
  for (long long j = 0; j < m; ++j) {
    acc *= S(1) - lambda * tp;
    tp *= S(tau);
  }
  return acc;
}

/// Elementary symmetric polynomial e_n of the entries of xi; e_0 = 1 and
/// e_n = 0 for n > N by convention.
template <class S>
S elem_sym(int n, std::span<const S> xi) {
  const int N = static_cast<int>(xi.size());
  if (n < 0) throw domain_error("elem_sym: n must be >= 0");
  if (n > N) return S(0);
  // e-table by one variable at a time.
  std::vector<S> e(static_cast<std::size_t>(n) + 1, S(0));
  e[0] = S(1);
  for (int v = 0; v < N; ++v)
    for (int j = std::min(n, v + 1); j >= 1; --j) e[j] += xi[v] * e[j - 1];
  return e[static_cast<std::size_t>(n)];
}

/// Brute-force check of the subset q-sum identity
///   sum_{S subset [1..n], |S|=k} tau^{sigma(S) - sigma(S,S)} = [n k]_tau,
/// with sigma(S) the element sum and sigma(S,S) = k(k+1)/2.
inline CheckReport subset_qsum_identity_check(int n, int k, const Rational& tau) {
  if (n < 0 || n > kMaxSubsetAmbient)
    throw resource_error("subset_qsum_identity_check: n capped at 14");
  CheckReport rep;
  {
    std::ostringstream name;
    name << "subset_qsum(n=" << n << ",k=" << k << ")";
    rep.name = name.str();
  }
  if (k < 0 || k > n) {
    rep.fail("k out of range");
    return rep;
  }
  Rational lhs = 0;
  for_each_subset_of_size(n, k, [&](std::uint32_t mask) {
    IndexSet s = IndexSet::from_mask(n, mask);
    long long expo = order_stat(s, IndexSet::full(n)) - order_stat(s, s);
    lhs += int_pow(tau, expo);
  });
  Rational rhs = tau_binom(n, k, tau);
  rep.trials = 1;
  if (lhs != rhs)
    rep.fail("sum " + to_string(lhs) + " != tau_binom " + to_string(rhs));
  return rep;
}

}  // namespace asep

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <string_view>

#include "asep/errors.hpp"

namespace asep {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Complex to_complex(const Rational& r) { return Complex(to_double(r), 0.0); }

/// Parse "7/10", "0.7", "-3" or "1e-3"-free plain decimals into an exact rational.
inline Rational parse_rational(std::string_view s) {
  auto bad = [&] { throw config_error("cannot parse rational: '" + std::string(s) + "'"); };
  if (s.empty()) bad();
  std::string str(s);
  auto slash = str.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt num(str.substr(0, slash));
      BigInt den(str.substr(slash + 1));
      if (den == 0) bad();
      return Rational(num, den);
    }
    auto dot = str.find('.');
    if (dot == std::string::npos) return Rational(BigInt(str));
    std::string digits = str.substr(0, dot) + str.substr(dot + 1);
    std::size_t frac_len = str.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+") bad();
    BigInt num(digits);
    BigInt den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rational(num, den);
  } catch (const std::exception&) {
    bad();
  }
  return Rational();  // unreachable
}

inline std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() +
         (boost::multiprecision::denominator(r) == 1
              ? ""
              : "/" + boost::multiprecision::denominator(r).str());
}

namespace detail {
template <class S>
inline bool is_exact_zero(const S& v) {
  return v == S(0);
}
}  // namespace detail

/// Integer power by binary exponentiation; negative exponents invert.
template <class S>
S int_pow(S base, long long e) {
  if (e < 0) {
    if (detail::is_exact_zero(base)) throw domain_error("int_pow: 0 to a negative power");
    return S(1) / int_pow(base, -e);
  }
  S acc(1);
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

/// Materialize Boost expression templates before exponentiation.
template <class Tag, class A1, class A2, class A3, class A4>
Rational int_pow(const boost::multiprecision::detail::expression<Tag, A1, A2, A3, A4>& e,
                 long long p) {
  return int_pow(Rational(e), p);
}

/// Numeric-mode equality; the tolerance is always explicit at the call site.
inline bool approx_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool approx_equal(const Complex& a, const Complex& b, double tol) {
  return std::abs(a - b) <= tol;
}

/// Cast between the exact and numeric scalar domains (exact -> numeric is lossy
/// and always explicit).
template <class S, class R>
S scalar_cast(const R& v) {
  if constexpr (std::is_same_v<S, R>) {
    return v;
  } else if constexpr (std::is_same_v<S, Complex> && std::is_same_v<R, Rational>) {
    return to_complex(v);
  } else if constexpr (std::is_same_v<S, double> && std::is_same_v<R, Rational>) {
    return to_double(v);
  } else {
    return S(v);
  }
}

}  // namespace asep

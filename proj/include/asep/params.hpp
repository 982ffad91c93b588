#pragma once

#include "asep/errors.hpp"
#include "asep/rational.hpp"

namespace asep {

/// Hop rates p (right) and q = 1 - p (left); tau = p/q is derived and only
/// defined for q > 0.  R is Rational in exact mode, double in numeric mode.
template <class R>
struct Params {
  R p{};
  R q{};

  Params() = default;
  explicit Params(const R& p_) : p(p_), q(R(1) - p_) {
    if (p < R(0) || p > R(1)) throw parameter_error("p must lie in [0,1]");
  }

  R tau() const {
    if (q == R(0)) throw parameter_error("tau undefined: q = 0");
    return p / q;
  }

  /// The model degenerates at p = q (tau = 1): every tau-binomial denominator
  /// vanishes.  Formula-based modules reject it; the oracles do not care.
  bool tau_degenerate() const { return p == q; }

  Params<R> swapped() const {
    Params<R> s;
    s.p = q;
    s.q = p;
    return s;
  }
};

using ExactParams = Params<Rational>;
using RealParams = Params<double>;

inline RealParams to_real(const ExactParams& e) {
  RealParams r;
  r.p = to_double(e.p);
  r.q = to_double(e.q);
  return r;
}

}  // namespace asep

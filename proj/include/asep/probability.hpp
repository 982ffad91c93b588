#pragma once

#include <string>
#include <vector>

#include "asep/errors.hpp"

namespace asep {

/// Strictly increasing particle positions, or the step initial condition
/// marker (y_i = i for all i >= 1, stored implicitly).
struct ParticleConfig {
  std::vector<long> positions;
  bool step = false;

  ParticleConfig() = default;
  explicit ParticleConfig(std::vector<long> pos) : positions(std::move(pos)) {
    for (std::size_t i = 1; i < positions.size(); ++i)
      if (positions[i] <= positions[i - 1])
        throw domain_error("ParticleConfig: positions must increase strictly");
  }

  static ParticleConfig step_ic() {
    ParticleConfig c;
    c.step = true;
    return c;
  }

  std::size_t size() const { return positions.size(); }
};

/// The L-block event at time t: the m-th particle from the left sits at x and
/// the next L-1 particles occupy x+1, ..., x+L-1.
struct BlockQuery {
  long x = 0;
  int m = 1;
  int L = 1;
  double t = 0.0;

  void validate(std::size_t n_particles = 0) const {
    if (m < 1 || L < 1) throw domain_error("BlockQuery: m >= 1 and L >= 1 required");
    if (t < 0) throw domain_error("BlockQuery: t >= 0 required");
    if (n_particles > 0 && static_cast<std::size_t>(m + L - 1) > n_particles)
      throw domain_error("BlockQuery: m + L - 1 must not exceed N");
  }
};

enum class Method { thm1, thm2, thm3, series, mc, uniformization, pxy };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::thm1: return "thm1";
    case Method::thm2: return "thm2";
    case Method::thm3: return "thm3";
    case Method::series: return "series";
    case Method::mc: return "mc";
    case Method::uniformization: return "uniformization";
    case Method::pxy: return "pxy";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "thm1") return Method::thm1;
  if (s == "thm2") return Method::thm2;
  if (s == "thm3") return Method::thm3;
  if (s == "series") return Method::series;
  if (s == "mc") return Method::mc;
  if (s == "uniformization" || s == "oracle") return Method::uniformization;
  if (s == "pxy") return Method::pxy;
  throw config_error("unknown method: " + s);
}

/// A probability with an error estimate and the formula/oracle that produced it.
struct ProbabilityEstimate {
  double value = 0.0;
  double abs_error = 0.0;
  Method method = Method::uniformization;
};

}  // namespace asep

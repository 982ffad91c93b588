#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "asep/errors.hpp"
#include "asep/parallel.hpp"
#include "asep/params.hpp"
#include "asep/probability.hpp"
#include "asep/rng.hpp"

namespace asep {

inline constexpr std::uint64_t kMaxWindowStates = 2'000'000;

/// One exact-in-law Doob-Gillespie sample of the configuration at time t:
/// exponential holding times at the total allowed-move rate, proportional
/// move selection, exclusion enforced.
inline ParticleConfig gillespie_sample(const ParticleConfig& y, double t,
                                       const RealParams& pr, CounterRng& rng) {
  if (y.step) throw domain_error("gillespie_sample needs a finite configuration");
  if (t < 0) throw domain_error("gillespie_sample: t >= 0 required");
  std::vector<long> pos = y.positions;
  const int n = static_cast<int>(pos.size());
  double clock = 0.0;
  for (;;) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == n - 1 || pos[static_cast<std::size_t>(i)] + 1 < pos[static_cast<std::size_t>(i + 1)])
        total += pr.p;
      if (i == 0 || pos[static_cast<std::size_t>(i)] - 1 > pos[static_cast<std::size_t>(i - 1)])
        total += pr.q;
    }
    if (total <= 0.0) break;  // fully jammed in both directions (p or q zero)
    clock += -std::log(rng.next_open_double()) / total;
    if (clock > t) break;
    double pick = rng.next_double() * total;
    for (int i = 0; i < n; ++i) {
      if (i == n - 1 ||
          pos[static_cast<std::size_t>(i)] + 1 < pos[static_cast<std::size_t>(i + 1)]) {
        if (pick < pr.p) {
          ++pos[static_cast<std::size_t>(i)];
          break;
        }
        pick -= pr.p;
      }
      if (i == 0 || pos[static_cast<std::size_t>(i)] - 1 > pos[static_cast<std::size_t>(i - 1)]) {
        if (pick < pr.q) {
          --pos[static_cast<std::size_t>(i)];
          break;
        }
        pick -= pr.q;
      }
    }
  }
  ParticleConfig out;
  out.positions = std::move(pos);
  return out;
}

inline bool block_event_hit(std::span<const long> positions, const BlockQuery& q) {
  if (static_cast<std::size_t>(q.m + q.L - 1) > positions.size()) return false;
  for (int j = 0; j < q.L; ++j)
    if (positions[static_cast<std::size_t>(q.m - 1 + j)] != q.x + j) return false;
  return true;
}

/// Number of particles simulated for a step-IC query; particles beyond this
/// index cannot reach the event region except through exponentially unlikely
/// displacement chains (insensitivity is test-verified by doubling).
inline std::size_t step_truncation_count(const BlockQuery& q) {
  const long base = std::max<long>(q.x + q.L, q.m + q.L);
  return static_cast<std::size_t>(base + static_cast<long>(std::ceil(10.0 * q.t)) + 20);
}

/// Monte Carlo estimates for several block queries sharing one (Y, t):
/// the same sample serves every query, and sample i always uses stream i,
/// so tallies are identical for any worker count.
inline std::vector<ProbabilityEstimate> mc_block_prob_batch(
    const ParticleConfig& y, std::span<const BlockQuery> queries, const RealParams& pr,
    std::int64_t samples, std::uint64_t seed) {
  if (queries.empty()) return {};
  const double t = queries.front().t;
  for (const auto& q : queries) {
    if (q.t != t) throw domain_error("mc_block_prob_batch: queries must share t");
    q.validate();
  }
  ParticleConfig start = y;
  if (y.step) {
    std::size_t n_tr = 0;
    for (const auto& q : queries) n_tr = std::max(n_tr, step_truncation_count(q));
    start.step = false;
    start.positions.resize(n_tr);
    for (std::size_t i = 0; i < n_tr; ++i) start.positions[i] = static_cast<long>(i) + 1;
  } else {
    for (const auto& q : queries) q.validate(y.size());
  }

  auto tallies = parallel_tally(
      samples, queries.size(), [&](std::int64_t i, std::vector<std::int64_t>& tally) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        const ParticleConfig final = gillespie_sample(start, t, pr, rng);
        for (std::size_t k = 0; k < queries.size(); ++k)
          if (block_event_hit(std::span<const long>(final.positions), queries[k])) ++tally[k];
      });

  std::vector<ProbabilityEstimate> out;
  out.reserve(queries.size());
  for (std::size_t k = 0; k < queries.size(); ++k) {
    const double phat = static_cast<double>(tallies[k]) / static_cast<double>(samples);
    const double se = std::sqrt(phat * (1.0 - phat) / static_cast<double>(samples));
    out.push_back({phat, 4.0 * se, Method::mc});
  }
  return out;
}

inline ProbabilityEstimate mc_block_prob(const ParticleConfig& y, const BlockQuery& q,
                                         const RealParams& pr, std::int64_t samples,
                                         std::uint64_t seed) {
  return mc_block_prob_batch(y, std::span<const BlockQuery>(&q, 1), pr, samples, seed).front();
}

/// All strictly increasing N-tuples in the window [lo, hi], ranked in the
/// combinatorial number system.
struct WindowStateSpace {
  long lo = 0, hi = 0;
  int n = 1;
  std::vector<std::vector<std::uint64_t>> choose;  // choose[s][k], s <= sites

  WindowStateSpace(long lo_, long hi_, int n_) : lo(lo_), hi(hi_), n(n_) {
    if (hi < lo || n < 1) throw domain_error("window state space: bad window");
    const int s = sites();
    if (n > s) throw domain_error("window state space: more particles than sites");
    choose.assign(static_cast<std::size_t>(s) + 1,
                  std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));
    for (int i = 0; i <= s; ++i) {
      choose[static_cast<std::size_t>(i)][0] = 1;
      for (int k = 1; k <= std::min(i, n); ++k)
        choose[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
            choose[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] +
            choose[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)];
    }
    if (count() > kMaxWindowStates)
      throw resource_error("window state space exceeds the 2e6-state cap");
  }

  int sites() const { return static_cast<int>(hi - lo + 1); }
  std::uint64_t count() const {
    return choose[static_cast<std::size_t>(sites())][static_cast<std::size_t>(n)];
  }

  std::uint64_t rank(std::span<const long> pos) const {
    std::uint64_t r = 0;
    for (int i = 0; i < n; ++i) {
      const long c = pos[static_cast<std::size_t>(i)] - lo;
      r += choose[static_cast<std::size_t>(c)][static_cast<std::size_t>(i + 1)];
    }
    return r;
  }

  void unrank(std::uint64_t r, std::span<long> out) const {
    for (int i = n; i >= 1; --i) {
      int c = i - 1;
      while (c + 1 < sites() &&
             choose[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(i)] <= r)
        ++c;
      out[static_cast<std::size_t>(i - 1)] = lo + c;
      r -= choose[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    }
  }
};

/// Sparse generator over the window with an absorbing leak pseudo-state.
struct WindowGenerator {
  WindowStateSpace space;
  // CSR of off-diagonal transitions (from-state rows); the diagonal is the
  // negative row sum including leak_rate.
  std::vector<std::uint64_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> rate;
  std::vector<double> leak_rate;
  double max_exit = 0.0;

  explicit WindowGenerator(const WindowStateSpace& s, const RealParams& pr) : space(s) {
    const std::uint64_t m = space.count();
    row_ptr.assign(m + 1, 0);
    std::vector<long> pos(static_cast<std::size_t>(space.n));
    leak_rate.assign(m, 0.0);
    // two passes: count then fill
    for (int pass = 0; pass < 2; ++pass) {
      for (std::uint64_t st = 0; st < m; ++st) {
        space.unrank(st, std::span<long>(pos.data(), pos.size()));
        std::uint64_t written = row_ptr[st];
        double leak = 0.0;
        for (int i = 0; i < space.n; ++i) {
          const bool right_free =
              (i == space.n - 1 ||
               pos[static_cast<std::size_t>(i)] + 1 < pos[static_cast<std::size_t>(i + 1)]);
          const bool left_free =
              (i == 0 ||
               pos[static_cast<std::size_t>(i)] - 1 > pos[static_cast<std::size_t>(i - 1)]);
          if (right_free && pr.p > 0) {
            if (pos[static_cast<std::size_t>(i)] + 1 > space.hi) {
              leak += pr.p;
            } else if (pass == 0) {
              ++row_ptr[st + 1];
            } else {
              ++pos[static_cast<std::size_t>(i)];
              col[written] = static_cast<std::uint32_t>(
                  space.rank(std::span<const long>(pos.data(), pos.size())));
              rate[written++] = pr.p;
              --pos[static_cast<std::size_t>(i)];
            }
          }
          if (left_free && pr.q > 0) {
            if (pos[static_cast<std::size_t>(i)] - 1 < space.lo) {
              leak += pr.q;
            } else if (pass == 0) {
              ++row_ptr[st + 1];
            } else {
              --pos[static_cast<std::size_t>(i)];
              col[written] = static_cast<std::uint32_t>(
                  space.rank(std::span<const long>(pos.data(), pos.size())));
              rate[written++] = pr.q;
              ++pos[static_cast<std::size_t>(i)];
            }
          }
        }
        if (pass == 1) {
          leak_rate[st] = leak;
          double exit = leak;
          for (std::uint64_t e = row_ptr[st]; e < written; ++e) exit += rate[e];
          max_exit = std::max(max_exit, exit);
        }
      }
      if (pass == 0) {
        for (std::uint64_t st = 0; st < m; ++st) row_ptr[st + 1] += row_ptr[st];
        col.assign(row_ptr[m], 0);
        rate.assign(row_ptr[m], 0.0);
      }
    }
  }
};

struct UniformizationResult {
  WindowStateSpace space;
  std::vector<double> prob;  // by state rank
  double leak = 0.0;         // mass absorbed at the boundary
  double tail_bound = 0.0;   // Poisson truncation remainder
};

/// Exact master-equation solution over the window via uniformization:
/// P(t) = sum_k e^{-Λt}(Λt)^k/k! P-hat^k P(0), truncated when the Poisson
/// tail drops below tol; boundary exits accumulate into `leak`.
inline UniformizationResult uniformization_dist(const ParticleConfig& y, long window_lo,
                                                long window_hi, double t, const RealParams& pr,
                                                double tol = 1e-12) {
  if (y.step) throw domain_error("uniformization needs a finite configuration");
  const int n = static_cast<int>(y.size());
  if (n < 1) throw domain_error("uniformization: empty configuration");
  for (long p : y.positions)
    if (p < window_lo || p > window_hi) throw domain_error("uniformization: Y outside window");

  WindowStateSpace space(window_lo, window_hi, n);
  WindowGenerator gen(space, pr);
  const std::uint64_t m = space.count();

  UniformizationResult res{space, std::vector<double>(m, 0.0), 0.0, 0.0};
  std::vector<double> v(m + 1, 0.0);  // slot m is the leak state
  v[space.rank(std::span<const long>(y.positions.data(), y.positions.size()))] = 1.0;

  const double lambda = gen.max_exit;
  const double lt = lambda * t;
  if (lt == 0.0) {
    for (std::uint64_t st = 0; st < m; ++st) res.prob[st] = v[st];
    res.leak = v[m];
    return res;
  }

  double log_weight = -lt;  // log of e^{-Λt}(Λt)^k/k! at k = 0
  double cumulative = 0.0;
  std::vector<double> acc(m + 1, 0.0);
  std::vector<double> next(m + 1, 0.0);
  for (std::uint64_t k = 0;; ++k) {
    const double w = std::exp(log_weight);
    for (std::uint64_t st = 0; st <= m; ++st) acc[st] += w * v[st];
    cumulative += w;
    if (1.0 - cumulative < tol) {
      res.tail_bound = std::max(0.0, 1.0 - cumulative);
      break;
    }
    if (k > 100 + static_cast<std::uint64_t>(10.0 * lt)) {
      res.tail_bound = std::max(0.0, 1.0 - cumulative);
      break;  // Poisson mass is numerically exhausted
    }
    // v <- v * P-hat, P-hat = I + Q/Λ
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint64_t st = 0; st < m; ++st) {
      const double mass = v[st];
      if (mass == 0.0) continue;
      double exit = gen.leak_rate[st];
      for (std::uint64_t e = gen.row_ptr[st]; e < gen.row_ptr[st + 1]; ++e) {
        next[gen.col[e]] += mass * gen.rate[e] / lambda;
        exit += gen.rate[e];
      }
      next[m] += mass * gen.leak_rate[st] / lambda;
      next[st] += mass * (1.0 - exit / lambda);
    }
    next[m] += v[m];  // leak is absorbing
    v.swap(next);
    log_weight += std::log(lt) - std::log(static_cast<double>(k + 1));
  }
  for (std::uint64_t st = 0; st < m; ++st) res.prob[st] = acc[st];
  res.leak = acc[m] + res.tail_bound;  // truncated mass may also have leaked
  return res;
}

inline void default_window(const ParticleConfig& y, double t, long& lo, long& hi) {
  const long pad = static_cast<long>(std::ceil(8.0 * t)) + 8;
  lo = y.positions.front() - pad;
  hi = y.positions.back() + pad;
}

/// Exact block probability from the uniformized distribution; the error bar
/// is the boundary leak plus the truncation tolerance.
inline ProbabilityEstimate exact_block_prob(const ParticleConfig& y, const BlockQuery& q,
                                            const RealParams& pr, double tol = 1e-12) {
  q.validate(y.size());
  long lo, hi;
  default_window(y, q.t, lo, hi);
  const auto res = uniformization_dist(y, lo, hi, q.t, pr, tol);
  std::vector<long> pos(static_cast<std::size_t>(res.space.n));
  double total = 0.0;
  for (std::uint64_t st = 0; st < res.space.count(); ++st) {
    res.space.unrank(st, std::span<long>(pos.data(), pos.size()));
    if (block_event_hit(std::span<const long>(pos.data(), pos.size()), q))
      total += res.prob[st];
  }
  return {total, res.leak + tol, Method::uniformization};
}

/// Exact transition probability P_Y(X, t) from the same machinery.
inline ProbabilityEstimate exact_transition_prob(const ParticleConfig& y,
                                                 const ParticleConfig& x, double t,
                                                 const RealParams& pr, double tol = 1e-12) {
  if (y.size() != x.size()) throw domain_error("transition oracle: |X| != |Y|");
  long lo, hi;
  default_window(y, t, lo, hi);
  lo = std::min(lo, x.positions.front() - 1);
  hi = std::max(hi, x.positions.back() + 1);
  const auto res = uniformization_dist(y, lo, hi, t, pr, tol);
  const double v =
      res.prob[res.space.rank(std::span<const long>(x.positions.data(), x.positions.size()))];
  return {v, res.leak + tol, Method::uniformization};
}

}  // namespace asep

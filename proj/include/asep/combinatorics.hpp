#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <vector>

#include "asep/errors.hpp"

namespace asep {

// Hard enumeration caps: factorial / power-set blowup must fail loudly.
inline constexpr int kMaxSubsetAmbient = 14;
inline constexpr int kMaxPermutationAmbient = 8;

/// Sorted subset of [1..N] with its ambient size, so the complement is
/// well defined.
struct IndexSet {
  int ambient = 0;
  std::vector<int> elems;  // sorted, distinct, each in [1..ambient]

  IndexSet() = default;
  IndexSet(int n, std::vector<int> e) : ambient(n), elems(std::move(e)) {
    std::sort(elems.begin(), elems.end());
    for (std::size_t i = 0; i < elems.size(); ++i) {
      if (elems[i] < 1 || elems[i] > ambient)
        throw domain_error("IndexSet: element out of [1..N]");
      if (i > 0 && elems[i] == elems[i - 1])
        throw domain_error("IndexSet: duplicate element");
    }
  }

  static IndexSet full(int n) {
    std::vector<int> e(static_cast<std::size_t>(n));
    std::iota(e.begin(), e.end(), 1);
    return IndexSet(n, std::move(e));
  }

  static IndexSet from_mask(int n, std::uint32_t mask) {
    std::vector<int> e;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) e.push_back(i + 1);
    return IndexSet(n, std::move(e));
  }

  std::uint32_t mask() const {
    std::uint32_t m = 0;
    for (int v : elems) m |= 1u << (v - 1);
    return m;
  }

  IndexSet complement() const {
    std::vector<int> c;
    std::uint32_t m = mask();
    for (int i = 1; i <= ambient; ++i)
      if (!(m & (1u << (i - 1)))) c.push_back(i);
    return IndexSet(ambient, std::move(c));
  }

  int size() const { return static_cast<int>(elems.size()); }
  long long sum() const { return std::accumulate(elems.begin(), elems.end(), 0LL); }
};

/// sigma(U,V) = #{(i,j) : i >= j, i in U, j in V}.  With V = [1..N] this is
/// the sum-of-elements statistic sigma(U).
inline long long order_stat(const IndexSet& U, const IndexSet& V) {
  long long count = 0;
  for (int i : U.elems)
    for (int j : V.elems)
      if (i >= j) ++count;
  return count;
}

/// Bijection of [1..N]; images[i] is the image of slot i+1.
struct Permutation {
  std::vector<int> images;

  Permutation() = default;
  explicit Permutation(std::vector<int> im) : images(std::move(im)) {
    std::vector<bool> seen(images.size() + 1, false);
    for (int v : images) {
      if (v < 1 || v > static_cast<int>(images.size()) || seen[v])
        throw domain_error("Permutation: images must be a bijection of [1..N]");
      seen[v] = true;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> im(static_cast<std::size_t>(n));
    std::iota(im.begin(), im.end(), 1);
    return Permutation(std::move(im));
  }

  int size() const { return static_cast<int>(images.size()); }
  int operator()(int slot) const { return images[static_cast<std::size_t>(slot - 1)]; }
};

/// Visit every subset of [0..n) as a bitmask.
template <class F>
void for_each_subset(int n, F&& f) {
  if (n < 0 || n > kMaxSubsetAmbient)
    throw resource_error("subset enumeration capped at N <= 14");
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) f(mask);
}

/// Visit every k-subset of [0..n) as a bitmask, in increasing mask order.
template <class F>
void for_each_subset_of_size(int n, int k, F&& f) {
  if (n < 0 || n > kMaxSubsetAmbient)
    throw resource_error("subset enumeration capped at N <= 14");
  if (k < 0 || k > n) return;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
    if (std::popcount(mask) == k) f(mask);
}

/// Visit every permutation of [1..n].
template <class F>
void for_each_permutation(int n, F&& f) {
  if (n < 0 || n > kMaxPermutationAmbient)
    throw resource_error("permutation enumeration capped at N <= 8");
  std::vector<int> im(static_cast<std::size_t>(n));
  std::iota(im.begin(), im.end(), 1);
  do {
    f(std::as_const(im));
  } while (std::next_permutation(im.begin(), im.end()));
}

inline std::uint64_t binomial_count(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

}  // namespace asep

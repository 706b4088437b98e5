#ifndef HAHNFORGE_SEGMENTATION_HPP
#define HAHNFORGE_SEGMENTATION_HPP

#include <algorithm>
#include <optional>
#include <vector>

#include "hahnforge/monomial.hpp"
#include "hahnforge/rational.hpp"

namespace hahnforge {

/// Order-convex subset of a monomial group; either bound may be infinite.
class Segment {
 public:
  struct Bound {
    std::optional<Monomial> value;  // nullopt = infinite on that side
    bool closed = false;            // meaningful only when value is set
  };

  static Segment all();
  static Segment above(const Monomial& lo, bool include_lo);
  static Segment below(const Monomial& hi, bool include_hi);
  static Segment between(const Monomial& lo, bool include_lo,
                         const Monomial& hi, bool include_hi);
  static Segment singleton(const Monomial& m);

  bool contains(const Monomial& m) const;
  bool unbounded_above() const { return !hi_.value.has_value(); }
  bool unbounded_below() const { return !lo_.value.has_value(); }
  const Bound& lower() const { return lo_; }
  const Bound& upper() const { return hi_; }

  std::string to_string() const;

 private:
  Segment(Bound lo, Bound hi);
  Bound lo_, hi_;
};

/// Finite union of pairwise disjoint segments, kept sorted increasing.
class SegmentSet {
 public:
  explicit SegmentSet(std::vector<Segment> pieces);

  bool contains(const Monomial& m) const;
  const std::vector<Segment>& pieces() const { return pieces_; }

  /// True when every element of the set is above m can no longer occur, i.e.
  /// m lies strictly below all pieces; used to stop filtered enumerations.
  bool entirely_above(const Monomial& m) const;

  std::string to_string() const;

 private:
  std::vector<Segment> pieces_;
};

// ---- combinatorics on exponent tuples ---------------------------------------

/// Minimal points of a finite subset of Q^n under the componentwise order
/// (the finite antichain generating the same upper set). Result is
/// deduplicated and sorted lexicographically.
std::vector<std::vector<Rational>> minimal_elements(
    std::vector<std::vector<Rational>> points);

bool is_antichain(const std::vector<std::vector<Rational>>& points);

/// Membership in the upper set generated by `gens` (componentwise order).
bool in_upper_set(const std::vector<Rational>& point,
                  const std::vector<std::vector<Rational>>& gens);

/// Splits each finite chain into consecutive blocks cut exactly at the
/// projections of the upper-set generators, so that every product of blocks
/// lies entirely inside or entirely outside the generated upper set.
/// `gens` must be an antichain whose coordinates are chain members.
/// Returns, per chain, the list of blocks (each block a run of chain values).
std::vector<std::vector<std::vector<Rational>>> basic_segmentations(
    const std::vector<std::vector<Rational>>& chains,
    const std::vector<std::vector<Rational>>& gens);

// ---- segmentations refining a sum preimage ----------------------------------

/// Interval over a totally ordered value type; nullopt bounds are infinite.
template <class V>
struct Interval {
  std::optional<V> lo, hi;
  bool lo_closed = true, hi_closed = true;

  bool contains(const V& x) const {
    if (lo && (x < *lo || (x == *lo && !lo_closed))) return false;
    if (hi && (*hi < x || (x == *hi && !hi_closed))) return false;
    return true;
  }
  bool strictly_above(const V& x) const {  // whole interval above x
    return lo && (x < *lo || (x == *lo && !lo_closed));
  }
  bool strictly_below(const V& x) const {
    return hi && (*hi < x || (x == *hi && !hi_closed));
  }
};

using LexVec = std::vector<Rational>;  // lexicographic order via operator<

inline Rational sv_add(const Rational& a, const Rational& b) { return a + b; }
inline LexVec sv_add(const LexVec& a, const LexVec& b) {
  LexVec out(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}
inline bool sv_positive(const Rational& a) { return a > 0; }
inline bool sv_positive(const LexVec& a) {
  for (const auto& q : a)
    if (q != 0) return q > 0;
  return false;
}

/// Splits each finite set of positive values into consecutive blocks so that
/// for every choice of one block per set, all tuples through those blocks
/// agree on whether their sum lies below, inside, or above U.
template <class V>
std::vector<std::vector<std::vector<V>>> sum_segmentations(
    std::vector<std::vector<V>> sets, const Interval<V>& u);

// ---- template definitions ---------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::size_t>> index_minimals(
    std::vector<std::vector<std::size_t>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto leq = [](const std::vector<std::size_t>& a,
                const std::vector<std::size_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > b[i]) return false;
    return true;
  };
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool minimal = true;
    for (std::size_t j = 0; j < pts.size() && minimal; ++j)
      if (j != i && leq(pts[j], pts[i])) minimal = false;
    if (minimal) out.push_back(pts[i]);
  }
  return out;
}

}  // namespace detail

template <class V>
std::vector<std::vector<std::vector<V>>> sum_segmentations(
    std::vector<std::vector<V>> sets, const Interval<V>& u) {
  const std::size_t n = sets.size();
  if (n == 0) return {};
  for (auto& s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (s.empty()) throw DomainError("sum segmentation over an empty set");
    for (const auto& v : s)
      if (!sv_positive(v))
        throw DomainError("sum segmentation needs positive elements");
  }

  // Sums are monotone in each index, so the region with sum >= U and the
  // region with sum > U are upper sets of the index grid; blocks are cut at
  // the projections of their minimal points.
  std::vector<std::vector<std::size_t>> at_least, above;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    V sum = sets[0][idx[0]];
    for (std::size_t i = 1; i < n; ++i) sum = sv_add(sum, sets[i][idx[i]]);
    if (!u.strictly_above(sum)) at_least.push_back(idx);
    if (u.strictly_below(sum)) above.push_back(idx);
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++idx[i] < sets[i].size()) break;
      idx[i] = 0;
    }
    if (i == n) break;
  }

  std::vector<std::vector<std::size_t>> cuts(n, std::vector<std::size_t>{0});
  for (const auto& group : {detail::index_minimals(std::move(at_least)),
                            detail::index_minimals(std::move(above))})
    for (const auto& m : group)
      for (std::size_t i = 0; i < n; ++i) cuts[i].push_back(m[i]);

  std::vector<std::vector<std::vector<V>>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(cuts[i].begin(), cuts[i].end());
    cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
    for (std::size_t k = 0; k < cuts[i].size(); ++k) {
      std::size_t lo = cuts[i][k];
      std::size_t hi = (k + 1 < cuts[i].size()) ? cuts[i][k + 1] : sets[i].size();
      out[i].emplace_back(sets[i].begin() + static_cast<std::ptrdiff_t>(lo),
                          sets[i].begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  return out;
}

// ---- product segmentation for truncation of products ------------------------

/// One piece of the product decomposition: a final segment of s0 (its largest
/// elements) paired with a consecutive block of s1.
struct ProductSegmentationPiece {
  std::vector<Monomial> s0_final;
  std::vector<Monomial> s1_block;
};

/// For finite monomial sets s0, s1 and a final segment U of the group,
/// decomposes { (m, n) in s0 x s1 : m*n in U } into disjoint rectangles
/// (final segment of s0) x (block of s1). Blocks are emitted with the
/// largest s1 elements first.
std::vector<ProductSegmentationPiece> product_segmentation(
    std::vector<Monomial> s0, std::vector<Monomial> s1, const Segment& u);

// ---- finite fibers of the sum map -------------------------------------------

/// All ordered tuples with entries from `positives` summing to `target`,
/// in lexicographic order. target = 0 yields the single empty tuple.
std::vector<std::vector<Rational>> tuples_summing_to(
    std::vector<Rational> positives, const Rational& target);

}  // namespace hahnforge

#endif

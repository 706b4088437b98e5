#include "hahnforge/segmentation.hpp"

#include <algorithm>
#include <set>

namespace hahnforge {

// ---- Segment ----------------------------------------------------------------

Segment::Segment(Bound lo, Bound hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.value && hi_.value) {
    auto c = lo_.value->compare(*hi_.value);
    if (c == std::strong_ordering::greater)
      throw DomainError("segment with lower bound above upper bound");
    if (c == std::strong_ordering::equal && !(lo_.closed && hi_.closed))
      throw DomainError("empty segment");
  }
}

Segment Segment::all() { return Segment(Bound{}, Bound{}); }

Segment Segment::above(const Monomial& lo, bool include_lo) {
  return Segment(Bound{lo, include_lo}, Bound{});
}

Segment Segment::below(const Monomial& hi, bool include_hi) {
  return Segment(Bound{}, Bound{hi, include_hi});
}

Segment Segment::between(const Monomial& lo, bool include_lo, const Monomial& hi,
                         bool include_hi) {
  return Segment(Bound{lo, include_lo}, Bound{hi, include_hi});
}

Segment Segment::singleton(const Monomial& m) {
  return Segment(Bound{m, true}, Bound{m, true});
}

bool Segment::contains(const Monomial& m) const {
  if (lo_.value) {
    auto c = m.compare(*lo_.value);
    if (c == std::strong_ordering::less) return false;
    if (c == std::strong_ordering::equal && !lo_.closed) return false;
  }
  if (hi_.value) {
    auto c = m.compare(*hi_.value);
    if (c == std::strong_ordering::greater) return false;
    if (c == std::strong_ordering::equal && !hi_.closed) return false;
  }
  return true;
}

std::string Segment::to_string() const {
  std::string out;
  out += lo_.value ? (lo_.closed ? "[" : "(") + lo_.value->to_string()
                   : std::string("(-inf");
  out += ", ";
  out += hi_.value ? hi_.value->to_string() + (hi_.closed ? "]" : ")")
                   : std::string("+inf)");
  return out;
}

// ---- SegmentSet -------------------------------------------------------------

namespace {

// True when a lies entirely below b (so they are disjoint, a first).
bool segment_entirely_below(const Segment& a, const Segment& b) {
  if (!a.upper().value || !b.lower().value) return false;
  auto c = a.upper().value->compare(*b.lower().value);
  if (c == std::strong_ordering::less) return true;
  if (c == std::strong_ordering::equal)
    return !(a.upper().closed && b.lower().closed);
  return false;
}

}  // namespace

SegmentSet::SegmentSet(std::vector<Segment> pieces) : pieces_(std::move(pieces)) {
  std::sort(pieces_.begin(), pieces_.end(), [](const Segment& a, const Segment& b) {
    if (!a.lower().value) return b.lower().value.has_value();
    if (!b.lower().value) return false;
    auto c = a.lower().value->compare(*b.lower().value);
    if (c != std::strong_ordering::equal) return c == std::strong_ordering::less;
    return a.lower().closed && !b.lower().closed;
  });
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i)
    if (!segment_entirely_below(pieces_[i], pieces_[i + 1]))
      throw DomainError("segment set pieces overlap or touch");
}

bool SegmentSet::contains(const Monomial& m) const {
  for (const auto& p : pieces_)
    if (p.contains(m)) return true;
  return false;
}

bool SegmentSet::entirely_above(const Monomial& m) const {
  if (pieces_.empty()) return true;
  const Segment& lowest = pieces_.front();
  if (!lowest.lower().value) return false;
  auto c = m.compare(*lowest.lower().value);
  if (c == std::strong_ordering::less) return true;
  if (c == std::strong_ordering::equal) return !lowest.lower().closed;
  return false;
}

std::string SegmentSet::to_string() const {
  std::string out;
  for (const auto& p : pieces_) {
    if (!out.empty()) out += " u ";
    out += p.to_string();
  }
  return out.empty() ? "{}" : out;
}

// ---- minimal elements / upper sets ------------------------------------------

namespace {

bool leq_componentwise(const std::vector<Rational>& a,
                       const std::vector<Rational>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

void require_uniform_dimension(const std::vector<std::vector<Rational>>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].size() != pts[0].size())
      throw DomainError("points of mixed dimension");
}

}  // namespace

std::vector<std::vector<Rational>> minimal_elements(
    std::vector<std::vector<Rational>> points) {
  require_uniform_dimension(points);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<std::vector<Rational>> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool minimal = true;
    for (std::size_t j = 0; j < points.size() && minimal; ++j)
      if (j != i && leq_componentwise(points[j], points[i])) minimal = false;
    if (minimal) out.push_back(points[i]);
  }
  return out;
}

bool is_antichain(const std::vector<std::vector<Rational>>& points) {
  require_uniform_dimension(points);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (i != j && leq_componentwise(points[i], points[j])) return false;
  return true;
}

bool in_upper_set(const std::vector<Rational>& point,
                  const std::vector<std::vector<Rational>>& gens) {
  for (const auto& g : gens)
    if (g.size() == point.size() && leq_componentwise(g, point)) return true;
  return false;
}

// ---- basic segmentation ------------------------------------------------------

std::vector<std::vector<std::vector<Rational>>> basic_segmentations(
    const std::vector<std::vector<Rational>>& chains,
    const std::vector<std::vector<Rational>>& gens) {
  std::vector<std::vector<Rational>> sorted(chains);
  for (auto& c : sorted) {
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end()) != c.end())
      throw DomainError("chain has repeated elements");
    if (c.empty()) throw DomainError("empty chain");
  }
  for (const auto& g : gens)
    if (g.size() != sorted.size())
      throw DomainError("generator arity does not match chain count");
  if (!gens.empty() && !is_antichain(gens))
    throw DomainError("upper-set generators must form an antichain");

  std::vector<std::set<std::size_t>> cuts(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) cuts[i].insert(0);
  for (const auto& g : gens) {
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      auto it = std::lower_bound(sorted[i].begin(), sorted[i].end(), g[i]);
      if (it == sorted[i].end() || *it != g[i])
        throw DomainError("generator coordinate is not a chain member");
      cuts[i].insert(static_cast<std::size_t>(it - sorted[i].begin()));
    }
  }

  std::vector<std::vector<std::vector<Rational>>> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::vector<std::size_t> starts(cuts[i].begin(), cuts[i].end());
    for (std::size_t k = 0; k < starts.size(); ++k) {
      std::size_t lo = starts[k];
      std::size_t hi = (k + 1 < starts.size()) ? starts[k + 1] : sorted[i].size();
      out[i].emplace_back(sorted[i].begin() + static_cast<std::ptrdiff_t>(lo),
                          sorted[i].begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  return out;
}

// ---- product segmentation ----------------------------------------------------

std::vector<ProductSegmentationPiece> product_segmentation(
    std::vector<Monomial> s0, std::vector<Monomial> s1, const Segment& u) {
  if (!u.unbounded_above())
    throw DomainError("product segmentation needs a final segment");
  auto desc = [](std::vector<Monomial>& v) {
    std::sort(v.begin(), v.end(),
              [](const Monomial& a, const Monomial& b) { return b < a; });
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  desc(s0);
  desc(s1);
  if (s0.empty() || s1.empty()) return {};

  // Staircase: for each s1 element (largest first), the s0 elements whose
  // product lands in u form a prefix of the descending s0 list.
  std::vector<std::size_t> prefix(s1.size(), 0);
  for (std::size_t j = 0; j < s1.size(); ++j) {
    std::size_t c = 0;
    while (c < s0.size() && u.contains(s0[c].mul(s1[j]))) ++c;
    prefix[j] = c;
  }

  std::vector<ProductSegmentationPiece> out;
  std::size_t j = 0;
  while (j < s1.size()) {
    std::size_t k = j;
    while (k < s1.size() && prefix[k] == prefix[j]) ++k;
    if (prefix[j] > 0) {
      ProductSegmentationPiece piece;
      piece.s0_final.assign(s0.begin(),
                            s0.begin() + static_cast<std::ptrdiff_t>(prefix[j]));
      piece.s1_block.assign(s1.begin() + static_cast<std::ptrdiff_t>(j),
                            s1.begin() + static_cast<std::ptrdiff_t>(k));
      out.push_back(std::move(piece));
    }
    j = k;
  }
  return out;
}

// ---- fibers of the sum map ---------------------------------------------------

namespace {

void tuples_rec(const std::vector<Rational>& s, const Rational& remaining,
                std::vector<Rational>& acc,
                std::vector<std::vector<Rational>>& out) {
  if (remaining == 0) {
    out.push_back(acc);
    return;
  }
  for (const auto& v : s) {
    if (v > remaining) break;  // ascending order: no later element fits
    acc.push_back(v);
    tuples_rec(s, remaining - v, acc, out);
    acc.pop_back();
  }
}

}  // namespace

std::vector<std::vector<Rational>> tuples_summing_to(
    std::vector<Rational> positives, const Rational& target) {
  std::sort(positives.begin(), positives.end());
  positives.erase(std::unique(positives.begin(), positives.end()),
                  positives.end());
  for (const auto& v : positives)
    if (v <= 0) throw DomainError("tuple entries must be positive");
  std::vector<std::vector<Rational>> out;
  if (target < 0) return out;
  std::vector<Rational> acc;
  tuples_rec(positives, target, acc, out);
  return out;
}

}  // namespace hahnforge

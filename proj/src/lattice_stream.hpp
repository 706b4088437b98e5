#ifndef HAHNFORGE_SRC_LATTICE_STREAM_HPP
#define HAHNFORGE_SRC_LATTICE_STREAM_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hahnforge/gps.hpp"

namespace hahnforge {
namespace detail {

/// One enumerated variable of a support lattice: exponents run through
/// shift + N/denom, keyed by powers of an infinitesimal monomial.
struct LatticeVar {
  std::string name;
  Rational shift;
  Monomial mono;                 // key base, must be < 1
  std::optional<Rational> cap;   // per-variable exponent cap
};

/// Emits the lattice points in weakly decreasing key order, where
/// key(gamma) = prod_v mono_v^gamma_v. Children increase one exponent by
/// 1/denom; every edge strictly decreases the key, so a max-heap yields a
/// weakly decreasing stream, and each point is reached exactly once (its
/// unique parent decrements the first nonzero coordinate).
class KeyedLatticeStream {
 public:
  struct Point {
    ExponentVector gamma;
    Monomial key;
  };

  KeyedLatticeStream(GroupPtr group, std::vector<LatticeVar> vars,
                     long long denom, std::optional<Rational> grade_bound)
      : group_(std::move(group)),
        vars_(std::move(vars)),
        denom_(denom),
        bound_(std::move(grade_bound)) {
    for (const auto& v : vars_) steps_.push_back(v.mono.pow(Rational(1, denom_)));
    Node root{std::vector<long long>(vars_.size(), 0), Monomial::one(group_),
              Rational(0)};
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      root.key = root.key.mul(vars_[i].mono.pow(vars_[i].shift));
      root.grade += vars_[i].shift;
    }
    bool ok = !bound_ || root.grade <= *bound_;
    for (std::size_t i = 0; ok && i < vars_.size(); ++i)
      if (vars_[i].cap && vars_[i].shift > *vars_[i].cap) ok = false;
    if (ok) push(std::move(root));
  }

  std::optional<Point> next(Budget& b) {
    if (heap_.empty()) return std::nullopt;
    b.step("lattice enumeration");
    Node top = pop();
    // children: bump coordinate i for i <= first nonzero coordinate
    std::size_t limit = top.j.size();
    for (std::size_t i = 0; i < top.j.size(); ++i)
      if (top.j[i] != 0) {
        limit = i + 1;
        break;
      }
    for (std::size_t i = 0; i < limit; ++i) {
      Node child{top.j, top.key.mul(steps_[i]), top.grade + Rational(1, denom_)};
      child.j[i] += 1;
      if (bound_ && child.grade > *bound_) continue;
      if (vars_[i].cap &&
          vars_[i].shift + Rational(child.j[i], denom_) > *vars_[i].cap)
        continue;
      push(std::move(child));
    }
    ExponentVector gamma;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      Rational e = vars_[i].shift + Rational(top.j[i], denom_);
      if (e != 0) gamma.set(vars_[i].name, e);
    }
    return Point{std::move(gamma), std::move(top.key)};
  }

 private:
  struct Node {
    std::vector<long long> j;
    Monomial key;
    Rational grade;
  };
  struct ByKey {
    bool operator()(const Node& a, const Node& b) const { return a.key < b.key; }
  };

  void push(Node n) {
    heap_.push_back(std::move(n));
    std::push_heap(heap_.begin(), heap_.end(), ByKey{});
  }
  Node pop() {
    std::pop_heap(heap_.begin(), heap_.end(), ByKey{});
    Node n = std::move(heap_.back());
    heap_.pop_back();
    return n;
  }

  GroupPtr group_;
  std::vector<LatticeVar> vars_;
  long long denom_;
  std::optional<Rational> bound_;
  std::vector<Monomial> steps_;  // mono_i^(1/denom)
  std::vector<Node> heap_;
};

}  // namespace detail
}  // namespace hahnforge

#endif

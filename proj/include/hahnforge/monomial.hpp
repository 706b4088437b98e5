#ifndef HAHNFORGE_MONOMIAL_HPP
#define HAHNFORGE_MONOMIAL_HPP

#include <compare>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hahnforge/budget.hpp"
#include "hahnforge/rational.hpp"

namespace hahnforge {

/// Finite-rank multiplicative group of monomials g_0^(e_0) * ... with rational
/// exponents, ordered lexicographically. All generators are infinitesimal
/// (< 1) and listed coarsest class first, so a *larger* exponent on the first
/// differing generator means a *smaller* monomial.
class MonomialGroup {
 public:
  static std::shared_ptr<const MonomialGroup> make(
      std::vector<std::string> generator_names);

  int rank() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& generator_names() const { return names_; }
  int index_of(std::string_view name) const;  // -1 when absent

  bool same_as(const MonomialGroup& other) const { return names_ == other.names_; }

 private:
  explicit MonomialGroup(std::vector<std::string> names);
  std::vector<std::string> names_;
};

using GroupPtr = std::shared_ptr<const MonomialGroup>;

/// Archimedean class of a monomial: the index of the coarsest generator it
/// involves; the identity gets the distinguished top class.
class ArchClass {
 public:
  static constexpr int kIdentity = std::numeric_limits<int>::max();

  static ArchClass at(int index) { return ArchClass(index); }
  static ArchClass identity() { return ArchClass(kIdentity); }

  bool is_identity_class() const { return index_ == kIdentity; }
  int index() const { return index_; }

  // The identity class is the largest; among generator classes a larger index
  // means a finer class.
  auto operator<=>(const ArchClass&) const = default;

  std::string to_string() const;

 private:
  explicit ArchClass(int index) : index_(index) {}
  int index_;
};

class Monomial {
 public:
  Monomial(GroupPtr group, std::vector<Rational> exponents);

  static Monomial one(GroupPtr group);
  static Monomial generator(GroupPtr group, int index);

  const GroupPtr& group() const { return group_; }
  const std::vector<Rational>& exponents() const { return exponents_; }
  bool is_one() const;

  Monomial mul(const Monomial& other) const;
  Monomial inverse() const;
  Monomial pow(const Rational& lambda) const;

  ArchClass arch_class() const;

  std::strong_ordering compare(const Monomial& other) const;
  bool operator==(const Monomial& o) const { return compare(o) == 0; }
  bool operator<(const Monomial& o) const { return compare(o) < 0; }
  bool operator<=(const Monomial& o) const { return compare(o) <= 0; }
  bool operator>(const Monomial& o) const { return compare(o) > 0; }
  bool operator>=(const Monomial& o) const { return compare(o) >= 0; }

  /// Canonical rendering: generators in group order, zero exponents omitted,
  /// "t" for exponent 1, "t^2" for integers, "t^(1/2)" otherwise; "1" for the
  /// identity.
  std::string to_string() const;

 private:
  GroupPtr group_;
  std::vector<Rational> exponents_;
};

void require_same_group(const Monomial& a, const Monomial& b);
void require_same_group(const GroupPtr& a, const GroupPtr& b);

}  // namespace hahnforge

#endif

#include "hahnforge/monomial.hpp"

#include <algorithm>
#include <set>

namespace hahnforge {

MonomialGroup::MonomialGroup(std::vector<std::string> names)
    : names_(std::move(names)) {}

std::shared_ptr<const MonomialGroup> MonomialGroup::make(
    std::vector<std::string> generator_names) {
  if (generator_names.empty())
    throw DomainError("monomial group needs at least one generator");
  std::set<std::string> seen;
  for (const auto& n : generator_names) {
    if (n.empty()) throw DomainError("empty generator name");
    if (!seen.insert(n).second)
      throw DomainError("duplicate generator name: " + n);
  }
  return std::shared_ptr<const MonomialGroup>(
      new MonomialGroup(std::move(generator_names)));
}

int MonomialGroup::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

std::string ArchClass::to_string() const {
  if (is_identity_class()) return "inf";
  return std::to_string(index_);
}

Monomial::Monomial(GroupPtr group, std::vector<Rational> exponents)
    : group_(std::move(group)), exponents_(std::move(exponents)) {
  if (!group_) throw DomainError("monomial without group");
  if (static_cast<int>(exponents_.size()) != group_->rank())
    throw DomainError("exponent vector length does not match group rank");
}

Monomial Monomial::one(GroupPtr group) {
  std::vector<Rational> e(group->rank(), Rational(0));
  return Monomial(std::move(group), std::move(e));
}

Monomial Monomial::generator(GroupPtr group, int index) {
  if (index < 0 || index >= group->rank())
    throw DomainError("generator index out of range");
  std::vector<Rational> e(group->rank(), Rational(0));
  e[static_cast<std::size_t>(index)] = 1;
  return Monomial(std::move(group), std::move(e));
}

bool Monomial::is_one() const {
  return std::all_of(exponents_.begin(), exponents_.end(),
                     [](const Rational& q) { return q == 0; });
}

Monomial Monomial::mul(const Monomial& other) const {
  require_same_group(*this, other);
  std::vector<Rational> e(exponents_);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
  return Monomial(group_, std::move(e));
}

Monomial Monomial::inverse() const {
  std::vector<Rational> e(exponents_);
  for (auto& q : e) q = -q;
  return Monomial(group_, std::move(e));
}

Monomial Monomial::pow(const Rational& lambda) const {
  std::vector<Rational> e(exponents_);
  for (auto& q : e) q *= lambda;
  return Monomial(group_, std::move(e));
}

ArchClass Monomial::arch_class() const {
  for (std::size_t i = 0; i < exponents_.size(); ++i)
    if (exponents_[i] != 0) return ArchClass::at(static_cast<int>(i));
  return ArchClass::identity();
}

std::strong_ordering Monomial::compare(const Monomial& other) const {
  require_same_group(*this, other);
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (exponents_[i] != other.exponents_[i]) {
      // Generators are infinitesimal: the bigger exponent loses.
      return exponents_[i] > other.exponents_[i] ? std::strong_ordering::less
                                                 : std::strong_ordering::greater;
    }
  }
  return std::strong_ordering::equal;
}

std::string Monomial::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    const Rational& e = exponents_[i];
    if (e == 0) continue;
    if (!out.empty()) out += "*";
    out += group_->generator_names()[i];
    if (e != 1) {
      if (denominator(e) == 1 && e > 0) {
        out += "^" + hahnforge::to_string(e);
      } else {
        out += "^(" + hahnforge::to_string(e) + ")";
      }
    }
  }
  return out.empty() ? "1" : out;
}

void require_same_group(const Monomial& a, const Monomial& b) {
  require_same_group(a.group(), b.group());
}

void require_same_group(const GroupPtr& a, const GroupPtr& b) {
  if (a.get() == b.get()) return;
  if (!a || !b || !a->same_as(*b))
    throw DomainError("monomials from different groups");
}

}  // namespace hahnforge

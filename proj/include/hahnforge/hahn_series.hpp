#ifndef HAHNFORGE_HAHN_SERIES_HPP
#define HAHNFORGE_HAHN_SERIES_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hahnforge/budget.hpp"
#include "hahnforge/monomial.hpp"
#include "hahnforge/segmentation.hpp"

namespace hahnforge {

struct Term {
  Monomial mono;
  Rational coeff;  // never zero in an emitted term
};

/// Producer of the next term of a series; emitted monomials must be strictly
/// decreasing. nullopt means the stream has genuinely ended (distinct from a
/// budget error, which is thrown).
class TermSource {
 public:
  virtual ~TermSource() = default;
  virtual std::optional<Term> next(Budget& b) = 0;
};

/// Memoizing wrapper shared by all handles to one series. Terms are appended
/// exactly once; a budget error leaves the memo consistent and a later call
/// resumes where the source left off. Handles are single-thread confined:
/// memo fills are not synchronized.
class StreamCore {
 public:
  StreamCore(GroupPtr group, std::unique_ptr<TermSource> src);

  /// i-th term (0-based), pulling and memoizing as needed; nullptr when the
  /// stream ends before i.
  const Term* term(std::size_t i, Budget& b);

  bool known_exhausted() const { return exhausted_; }
  std::size_t known_count() const { return memo_.size(); }
  const GroupPtr& group() const { return group_; }

 private:
  GroupPtr group_;
  std::unique_ptr<TermSource> src_;
  std::vector<Term> memo_;
  bool exhausted_ = false;
};

/// Budget error raised by observations that can report the terms they had
/// already produced before running out of steps.
class BudgetExhaustedWithPartial : public BudgetExhaustedError {
 public:
  BudgetExhaustedWithPartial(const std::string& what, std::vector<Term> partial)
      : BudgetExhaustedError(what), partial_(std::move(partial)) {}
  const std::vector<Term>& partial() const { return partial_; }

 private:
  std::vector<Term> partial_;
};

/// Value-semantic handle to a lazily enumerated series with reverse
/// well-ordered support and exact rational coefficients.
class HahnSeries {
 public:
  static HahnSeries zero(GroupPtr group);
  static HahnSeries constant(GroupPtr group, const Rational& c);
  static HahnSeries monomial_term(const Monomial& m, const Rational& c);
  /// Terms are canonicalized: equal monomials merged, zeros dropped, sorted
  /// strictly decreasing.
  static HahnSeries from_terms(GroupPtr group, std::vector<Term> terms);
  static HahnSeries from_source(GroupPtr group, std::unique_ptr<TermSource> src);

  const GroupPtr& group() const { return core_->group(); }

  // ---- observation ----------------------------------------------------------

  /// First min(n, #terms) terms. Throws BudgetExhaustedWithPartial when the
  /// step budget runs out first.
  std::vector<Term> take_terms(std::size_t n, Budget& b) const;
  std::vector<Term> take_terms(std::size_t n) const;

  struct Probe {
    std::vector<Term> terms;
    bool exhausted;  // true when the stream provably ended within the probe
  };
  Probe probe(std::size_t n, Budget& b) const;

  std::optional<Term> leading_term(Budget& b) const;

  /// Shared memo access (used by stream compositions).
  const std::shared_ptr<StreamCore>& core() const { return core_; }

 private:
  explicit HahnSeries(std::shared_ptr<StreamCore> core)
      : core_(std::move(core)) {}
  std::shared_ptr<StreamCore> core_;
};

// ---- ring and truncation operations (all lazy) ------------------------------

HahnSeries add(const HahnSeries& f, const HahnSeries& g);
HahnSeries sub(const HahnSeries& f, const HahnSeries& g);
HahnSeries neg(const HahnSeries& f);
HahnSeries scalar_mul(const Rational& c, const HahnSeries& f);
HahnSeries monomial_mul(const Monomial& m, const HahnSeries& f);
HahnSeries mul(const HahnSeries& f, const HahnSeries& g);
HahnSeries mul_many(std::vector<HahnSeries> factors, GroupPtr group);
HahnSeries add_many(std::vector<HahnSeries> summands, GroupPtr group);
HahnSeries pow_natural(const HahnSeries& f, unsigned n);

/// Keeps the terms with monomial strictly above m. The kept set can still be
/// infinite; enumeration of the result stops at the first term <= m.
HahnSeries truncate(const HahnSeries& f, const Monomial& m);

/// Keeps the terms whose monomial lies in the given segment union.
HahnSeries fragment(const HahnSeries& f, const SegmentSet& s);

/// Keeps the terms of archimedean class strictly finer than v, together with
/// the identity-class (constant) term. v = identity marker keeps only the
/// constant term.
HahnSeries v_truncate(const HahnSeries& f, const ArchClass& v);

/// (1 + delta)^lambda for an infinitesimal delta (all monomials < 1),
/// expanded through the generalized binomial series.
HahnSeries binomial_power(const Rational& lambda, const HahnSeries& delta);

/// Inverse of a nonzero series written through its normal form m*(k + eps):
/// result = m^-1 k^-1 (1 + eps/k)^-1. Raises DomainError on the zero series
/// (when emptiness is proven within budget).
HahnSeries invert_unit(const HahnSeries& f);

struct NormalForm {
  Monomial mono;
  Rational scale;
  HahnSeries tail_over_mono;  // eps: everything below the leading term, divided by mono
};

/// Leading-term decomposition f = mono*(scale + eps) with eps infinitesimal
/// relative to the leading monomial. nullopt when f is provably zero.
std::optional<NormalForm> normal_decompose(const HahnSeries& f, Budget& b);

/// Threshold equality: compares f and g strictly above m.
struct ThresholdEq {
  bool equal;
  bool proven;  // false when equality only holds as far as the budget reached
};
ThresholdEq eq_to_monomial(const HahnSeries& f, const HahnSeries& g,
                           const Monomial& m, Budget& b);

// ---- merging a family of series ---------------------------------------------

/// Merges a (possibly infinite) family of series into one stream. The
/// generator must yield members with weakly decreasing keys, and every term
/// of a member must be <= its key.
class FamilyMergeSource : public TermSource {
 public:
  struct Member {
    Monomial key;
    HahnSeries series;
  };
  using MemberGen = std::function<std::optional<Member>(Budget&)>;

  FamilyMergeSource(GroupPtr group, MemberGen gen);
  std::optional<Term> next(Budget& b) override;

 private:
  struct Entry {
    Monomial mono;                     // current term's monomial
    Rational coeff;                    // current term's coefficient
    std::shared_ptr<StreamCore> core;  // owning member stream
    std::size_t next_index;            // index of the term after this one
  };
  void admit_pending(Budget& b);

  GroupPtr group_;
  MemberGen gen_;
  bool gen_done_ = false;
  std::vector<Entry> heap_;  // max-heap by monomial
  std::optional<Member> pending_;
  bool primed_ = false;
};

HahnSeries merge_family(GroupPtr group, FamilyMergeSource::MemberGen gen);

}  // namespace hahnforge

#endif

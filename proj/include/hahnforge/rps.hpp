#ifndef HAHNFORGE_RPS_HPP
#define HAHNFORGE_RPS_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hahnforge/gps.hpp"
#include "hahnforge/hahn_series.hpp"

namespace hahnforge {

/// Finitely supported natural exponent assignment for the classical
/// variables of a restricted power series. Absent entries are zero.
class MultiIndex {
 public:
  MultiIndex() = default;

  unsigned long long get(const std::string& var) const;
  void set(const std::string& var, unsigned long long e);  // erases on zero
  const std::map<std::string, unsigned long long>& entries() const {
    return e_;
  }
  unsigned long long total() const;
  bool is_zero() const { return e_.empty(); }

  MultiIndex plus(const MultiIndex& o) const;
  /// Componentwise difference; nullopt when any entry would go negative.
  std::optional<MultiIndex> minus(const MultiIndex& o) const;
  /// Componentwise order.
  bool leq(const MultiIndex& o) const;

  bool operator==(const MultiIndex& o) const { return e_ == o.e_; }
  bool operator!=(const MultiIndex& o) const { return e_ != o.e_; }
  bool operator<(const MultiIndex& o) const { return e_ < o.e_; }

  std::string to_string() const;  // e.g. "x^2*y", "1" when empty

 private:
  std::map<std::string, unsigned long long> e_;
};

MultiIndex mi(
    std::initializer_list<std::pair<std::string, unsigned long long>> items);

/// All multi-indices over `vars` with total degree <= max_total, ordered by
/// (total degree, map order). Deterministic.
std::vector<MultiIndex> multi_indices_upto(const std::vector<std::string>& vars,
                                           unsigned long long max_total);

/// The support of f as a series with unit coefficients; used to carry
/// reverse well-ordered support supersets that combine without cancellation.
HahnSeries support_indicator(const HahnSeries& f);

/// Classical power series in finitely many variables whose coefficients are
/// Hahn series over one group. Each value carries a structural support
/// bound: a lazily enumerable, reverse well-ordered monomial set (as a
/// series with positive coefficients) containing every coefficient support.
class Rps {
 public:
  using CoeffFn = std::function<HahnSeries(const MultiIndex&)>;

  static Rps zero(std::vector<std::string> vars, GroupPtr group);
  static Rps constant(std::vector<std::string> vars, GroupPtr group,
                      const HahnSeries& r0);
  static Rps one(std::vector<std::string> vars, GroupPtr group);
  static Rps variable(std::vector<std::string> vars, GroupPtr group,
                      const std::string& name);
  static Rps from_coeffs(std::vector<std::string> vars, GroupPtr group,
                         const std::map<MultiIndex, HahnSeries>& coeffs);
  static Rps from_fn(
      std::vector<std::string> vars, GroupPtr group, CoeffFn fn,
      HahnSeries support_bound,
      std::optional<std::vector<MultiIndex>> finite_support = std::nullopt);

  const std::vector<std::string>& vars() const;
  const GroupPtr& group() const;

  /// Coefficient of x^m, memoized per index. Entries of m outside vars()
  /// raise DomainError.
  HahnSeries coeff(const MultiIndex& m) const;

  const HahnSeries& support_bound() const;

  /// When set, every coefficient outside this list is structurally zero.
  const std::optional<std::vector<MultiIndex>>& finite_support() const;

 private:
  struct State;
  explicit Rps(std::shared_ptr<State> st) : st_(std::move(st)) {}
  std::shared_ptr<State> st_;
};

// ---- ring operations (variable lists must coincide) --------------------------

Rps add(const Rps& f, const Rps& g);
Rps sub(const Rps& f, const Rps& g);
Rps neg(const Rps& f);
Rps scalar_mul(const Rational& c, const Rps& f);
/// Multiplies every coefficient by r.
Rps coeff_scale(const HahnSeries& r, const Rps& f);
Rps mono_scale(const Monomial& m, const Rps& f);
Rps mul(const Rps& f, const Rps& g);
Rps pow_natural(const Rps& f, unsigned long long n);
/// Formal partial derivative: coefficient of x^m becomes (m_x+1) r_{m+e_x}.
Rps derivative(const Rps& f, const std::string& var);

/// View of f over a variable list extending f's (extra coefficients zero).
Rps extend_vars(const Rps& f, std::vector<std::string> vars);
/// Substitutes zero for the listed variables, keeping the others formal.
Rps set_vars_zero(const Rps& f, const std::vector<std::string>& kill);

// ---- coefficient-wise truncations --------------------------------------------

/// Truncates every coefficient strictly above m.
Rps coeff_trunc(const Rps& f, const Monomial& m);
/// Truncates every coefficient to the archimedean classes strictly finer
/// than v (plus the constant class). A strong ring homomorphism on series
/// with support <= 1: it commutes with products and with composition.
Rps coeff_trunc_v(const Rps& f, const ArchClass& v);

// ---- composition -------------------------------------------------------------

/// Composability: structural support bound <= 1 and infinitesimal constant
/// coefficient. The check observes leading terms within the given budget.
bool is_composable(const Rps& f, Budget& b);

/// f(g): substitutes args[v] for each variable v of f. Every argument must
/// be composable and all arguments must share one variable list. Output
/// coefficients are merged families over total-degree slabs, keyed by a
/// majorant monomial: degree-d members beyond the target degree only carry
/// support below sigma^(d-|target|), where sigma majorizes the constant
/// coefficients of the arguments.
Rps compose(const Rps& f, const std::map<std::string, Rps>& args, Budget& b);

/// f(x + z) in doubled variables. partner maps every variable of f to a
/// fresh name; the coefficient of x^l z^h is binom(l+h, h) r_{l+h}, i.e. the
/// z^h column is (1/h!) * the h-th formal derivative of f.
Rps taylor_shift(const Rps& f, const std::map<std::string, std::string>& partner);

// ---- rewriting a generalized series as a restricted one ----------------------

/// Substitutes x_v = m_v * (a_v + eps_v) for every non-classical variable v
/// of f, with a_v a positive rational and m_v an infinitesimal monomial.
/// The result is a classical power series in the eps variables (reusing the
/// names of the x's) and the classical variables of f; its coefficient at
/// eps^m y^l is sum_gamma binom(gamma, m) k_{gamma,l} a^(gamma-m) m^gamma.
/// Raises DomainError when a_v <= 0, m_v >= 1, or a_v has no exact root of
/// the order demanded by the exponent lattice of f.
Rps from_gps(const GpsExpr& f, const std::map<std::string, Rational>& a,
             const std::map<std::string, Monomial>& m, GroupPtr group);

// ---- truncation decompositions -----------------------------------------------

/// One rectangle of the product decomposition: the part of f strictly above
/// f_cut (all of f when absent) times the block of g in (g_lo, g_hi] (down
/// to the bottom of g when g_lo is absent).
struct TcProductCut {
  std::optional<Monomial> f_cut;
  std::optional<Monomial> g_lo;
  Monomial g_hi;
};

struct TcProductDecomposition {
  std::vector<TcProductCut> cuts;
  Rps assembled;  // sum over cuts; equals coeff_trunc(mul(f, g), m)
};

/// Rewrites (f*g) truncated above m as a finite sum of products of
/// truncations of f and of blocks of g, with cut points computed by product
/// segmentation of the two support bounds against the final segment above m.
/// Both support bounds must enumerate fully within the budget.
TcProductDecomposition tc_product_decompose(const Rps& f, const Rps& g,
                                            const Monomial& m, Budget& b);

// ---- probing helpers ---------------------------------------------------------

/// All monomials of s, in decreasing order; throws when the stream outlives
/// the budget before proving exhaustion.
std::vector<Monomial> probe_all_monomials(const HahnSeries& s, Budget& b);

/// Coefficient-wise threshold equality over every multi-index of total
/// degree <= deg (variables taken from the union of the two lists).
ThresholdEq rps_eq_to_monomial(const Rps& f, const Rps& g,
                               unsigned long long deg, const Monomial& m,
                               Budget& b);

}  // namespace hahnforge

#endif

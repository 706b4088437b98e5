#ifndef HAHNFORGE_GPS_HPP
#define HAHNFORGE_GPS_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hahnforge/hahn_series.hpp"

namespace hahnforge {

/// Ordered set of formal variable names; a subset may be flagged classical
/// (restricted to natural-number exponents).
class VariableSet {
 public:
  static std::shared_ptr<const VariableSet> make(
      std::vector<std::string> names, std::vector<std::string> classical = {});

  const std::vector<std::string>& names() const { return names_; }
  bool is_classical(const std::string& name) const;
  bool has(const std::string& name) const;
  bool same_as(const VariableSet& o) const {
    return names_ == o.names_ && classical_ == o.classical_;
  }

 private:
  VariableSet(std::vector<std::string> names, std::vector<std::string> classical);
  std::vector<std::string> names_;
  std::vector<std::string> classical_;  // sorted
};

using VarsPtr = std::shared_ptr<const VariableSet>;

/// Sparse exponent assignment; entries are nonnegative rationals and zero
/// entries are never stored.
class ExponentVector {
 public:
  ExponentVector() = default;

  Rational get(const std::string& var) const;
  void set(const std::string& var, const Rational& q);
  const std::map<std::string, Rational>& entries() const { return e_; }
  Rational grade() const;  // sum of all entries
  bool is_zero() const { return e_.empty(); }

  /// Componentwise sum.
  ExponentVector plus(const ExponentVector& o) const;
  /// Componentwise difference; nullopt when any entry would go negative.
  std::optional<ExponentVector> minus(const ExponentVector& o) const;
  /// Componentwise order.
  bool leq(const ExponentVector& o) const;

  bool operator==(const ExponentVector& o) const { return e_ == o.e_; }
  bool operator<(const ExponentVector& o) const { return e_ < o.e_; }

  std::string to_string() const;  // e.g. "x^(1/2)*y^2", "1" when empty

 private:
  std::map<std::string, Rational> e_;
};

ExponentVector ev(std::initializer_list<std::pair<std::string, Rational>> items);

/// Support-lattice metadata: support is contained in
/// shift + (1/denom)*N^vars, optionally with total grade <= grade_bound
/// and per-variable exponent <= var_cap[v] (absent entry = unbounded).
struct GpsLattice {
  ExponentVector shift;
  long long denom = 1;
  std::optional<Rational> grade_bound;
  std::map<std::string, Rational> var_cap;
};

/// Per-variable exponent window plus an optional window on the exponent sum;
/// describes the segment kept by a partial truncation.
struct GpsFragmentSpec {
  std::map<std::string, Interval<Rational>> per_var;
  std::optional<Interval<Rational>> grade;

  bool contains(const ExponentVector& gamma) const;
};

struct GpsNode;
using GpsNodePtr = std::shared_ptr<const GpsNode>;

/// Leading data probed grade-by-grade up to a cutoff.
struct GpsLeadingData {
  bool is_zero = false;          // no support found within the probe
  bool infinitesimal = false;    // zero constant coefficient
  bool normal = false;           // unique componentwise-minimal support point
  bool p_composable = false;     // normal, alpha != 0, leading coeff > 0
  std::optional<ExponentVector> alpha;  // the minimal point when normal
  Rational lead_coeff = 0;
  bool probe_complete = false;   // the whole (bounded) support was scanned
};

/// Generalized power series with nonnegative rational exponents on named
/// variables, held as an immutable expression DAG with an exact,
/// memoized coefficient oracle.
class GpsExpr {
 public:
  // ---- leaf constructors ----
  static GpsExpr zero(VarsPtr vars);
  static GpsExpr constant(VarsPtr vars, const Rational& c);
  static GpsExpr variable(VarsPtr vars, const std::string& name);
  static GpsExpr var_power(VarsPtr vars, const std::string& name,
                           const Rational& alpha);
  static GpsExpr from_terms(VarsPtr vars,
                            std::vector<std::pair<ExponentVector, Rational>> terms);
  /// Sum of x^k over natural k.
  static GpsExpr geometric(VarsPtr vars, const std::string& name);
  /// Sum of (lambda choose k) x^k over natural k.
  static GpsExpr binomial_family(VarsPtr vars, const std::string& name,
                                 const Rational& lambda);

  const VarsPtr& vars() const;
  const GpsLattice& lattice() const;
  const GpsNodePtr& node() const { return node_; }

  /// Exact coefficient of x^gamma.
  Rational coeff(const ExponentVector& gamma, Budget& b) const;

  /// All nonzero coefficients with total grade <= max_grade, ordered by
  /// (grade, exponent vector): deterministic and finite.
  std::vector<std::pair<ExponentVector, Rational>> support_upto(
      const Rational& max_grade, Budget& b) const;

  /// Leading/classification data probed up to probe_grade (or the lattice
  /// grade bound when smaller).
  GpsLeadingData classify(const Rational& probe_grade, Budget& b) const;

 private:
  friend GpsExpr make_expr(GpsNodePtr node);
  explicit GpsExpr(GpsNodePtr node) : node_(std::move(node)) {}
  GpsNodePtr node_;
};

// ---- ring operations --------------------------------------------------------

GpsExpr add(const GpsExpr& f, const GpsExpr& g);
GpsExpr sub(const GpsExpr& f, const GpsExpr& g);
GpsExpr neg(const GpsExpr& f);
GpsExpr scalar_mul(const Rational& c, const GpsExpr& f);
GpsExpr mul(const GpsExpr& f, const GpsExpr& g);

// ---- structural operations --------------------------------------------------

/// Renames variables; multiple sources may map to one target (coefficients
/// re-aggregate). Targets must exist in the provided target set.
GpsExpr reindex(const GpsExpr& f, const std::map<std::string, std::string>& sigma,
                VarsPtr target_vars);

/// Deep copy of the expression DAG with all memo state dropped. Handles are
/// otherwise single-thread confined; independent threads evaluating the same
/// expression must each work on their own clone.
GpsExpr clone_unmemoized(const GpsExpr& f);

/// Formal d/dx. Requires x classical, or a lattice shift >= 1 on x, so that
/// the result keeps nonnegative exponents.
GpsExpr derivative(const GpsExpr& f, const std::string& x);

/// x * d/dx: the grading weight gamma_x, support unchanged.
GpsExpr renorm_derivative(const GpsExpr& f, const std::string& x);

/// Applies the diagonal weight (gamma_x choose m); this is (1/m!) x^m (d/dx)^m
/// and needs no shift hypothesis.
GpsExpr euler_binomial(const GpsExpr& f, const std::string& x, unsigned m);

/// Keeps the coefficients whose exponent vector lies in the spec's window.
GpsExpr fragment_gps(const GpsExpr& f, GpsFragmentSpec spec);

/// Divides by x^alpha. Divisibility is checked structurally via the lattice
/// shift when possible, otherwise semantically on the support probed up to
/// probe_grade (error at the first violating support point found).
GpsExpr monomial_divide(const GpsExpr& f, const std::string& x, const Rational& alpha,
                        const Rational& probe_grade, Budget& b);
/// Same, probing up to the lattice grade bound or a default grade with a
/// default budget.
GpsExpr monomial_divide(const GpsExpr& f, const std::string& x, const Rational& alpha);
GpsExpr monomial_multiply(const GpsExpr& f, const std::string& x, const Rational& alpha);

// ---- blow-ups and compositions ----------------------------------------------

/// Substitutes x := z0*(z1 + k), k > 0: the result is
/// sum c_{alpha,beta} k^(alpha-m) (alpha choose m) z0^alpha z1^m y^beta,
/// with z1 classical. Requires k^(1/N) rational for the x-step denominator N.
GpsExpr blowup_affine(const GpsExpr& f, const std::string& x,
                      const std::string& z0, const std::string& z1,
                      const Rational& k);

/// Substitutes x := z0*z1 (diagonal support on z0, z1).
GpsExpr blowup_mult(const GpsExpr& f, const std::string& x,
                    const std::string& z0, const std::string& z1);

/// Substitutes a p-composable g = z^alpha(k + h) for x via the binomial
/// expansion sum c k^(alpha-m)(alpha choose m) z^(alpha*gamma) h^m.
/// g's leading data is probed up to probe_grade.
GpsExpr compose_pcomp(const GpsExpr& f, const std::string& x, const GpsExpr& g,
                      const Rational& probe_grade, Budget& b);

/// Naive substitution of an infinitesimal g for a classical variable y.
GpsExpr compose_classical(const GpsExpr& f, const std::string& y, const GpsExpr& g,
                          const Rational& probe_grade, Budget& b);

// ---- truncation compatibility of blow-ups -----------------------------------

/// One piece of the z1-fragment of an affine blow-up: the fragment keeping
/// z1-exponents < n equals  sum_{m<n} z1^m * scale_m * series_m(z0, y).
struct BlowupTruncPiece {
  unsigned m;
  Rational scale;   // k^(-m)
  GpsExpr series;   // (gamma_x choose m)-weighted f, with x evaluated at k*z0
};
std::vector<BlowupTruncPiece> trunc_decompose_z1(const GpsExpr& f,
                                                 const std::string& x,
                                                 const std::string& z0,
                                                 const std::string& z1,
                                                 const Rational& k, unsigned n,
                                                 Budget& b);

/// The h with blowup_affine(h) = fragment of blowup_affine(f) keeping
/// z0-exponents < alpha; h is the same fragment of f on x.
GpsExpr trunc_decompose_z0(const GpsExpr& f, const std::string& x,
                           const Rational& alpha);

// ---- interpretation ---------------------------------------------------------

/// Value assigned to one variable. Non-classical variables need a positive
/// normal form mono*(scale + eps) with mono < 1 and scale > 0; classical
/// variables accept any series supported strictly below the identity
/// (including zero).
struct InterpretAssignment {
  std::map<std::string, HahnSeries> values;
};

/// Evaluates f at the assigned Hahn-series values, as a lazy Hahn series:
/// the sum over support points gamma of
///   c_gamma * prod_v scale_v^gamma_v * mono^gamma * prod_v (1+delta_v)^gamma_v.
HahnSeries interpret(const GpsExpr& f, const InterpretAssignment& assignment,
                     GroupPtr group);

}  // namespace hahnforge

#endif

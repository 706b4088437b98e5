#ifndef HAHNFORGE_CLOSURE_HPP
#define HAHNFORGE_CLOSURE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hahnforge/gps.hpp"
#include "hahnforge/rps.hpp"
#include "hahnforge/witness.hpp"

namespace hahnforge {

// ---- function languages -----------------------------------------------------

/// Closure rules a function language grants to the surrounding algebra.
/// Truncation witnesses may only use constructions whose rule is enabled;
/// a language without the renorm-derivative rule, for example, cannot
/// justify the Taylor expansions that composition witnesses need.
struct LanguageFlags {
  bool reindex = true;
  bool ring = true;
  bool renorm_derivative = true;
  bool partial_truncation = true;
  bool blowups = true;
};

struct LanguageMember {
  std::string name;
  GpsExpr series;
};

/// A finitely generated function language: named generalized-power-series
/// families together with the closure rules available over them. The
/// generation and checking engines handle members with exactly one
/// (non-classical) variable.
struct LanguageF {
  std::vector<LanguageMember> generators;
  LanguageFlags flags;
  bool blowup_extended = false;  // set by make_Fb
};

/// Oracle over witness-atom certificates induced by the language rules:
/// accepts an atom exactly when every construction recorded in the
/// certificate is enabled by the flags.
SetOracle language_atom_oracle(const LanguageFlags& flags);

// ---- blow-up extension ------------------------------------------------------

/// One right-composition step extending language membership: substituting
/// z0*(k + z1) (affine), z0*z1 (multiplicative), or a checked composable
/// polynomial with positive coefficients for a variable of the member.
struct FbStep {
  enum class Kind { Affine, Mult, PComp };
  Kind kind = Kind::Affine;
  std::string x;             // substituted variable
  std::string z0, z1;        // fresh names (Affine / Mult)
  Rational k{0};             // Affine constant, k >= 0
  std::optional<GpsExpr> p;  // PComp polynomial
};

/// Membership candidate: a base generator with blow-up steps applied left
/// to right. Candidates are descriptions; fb_realize builds the series.
struct FbCandidate {
  std::size_t base = 0;
  std::vector<FbStep> steps;
};

/// Marks the language as extended by right-composition with composable
/// positive polynomials. Requires the ring rule.
LanguageF make_Fb(LanguageF F);

/// Structural membership test: every step must keep the substitution in the
/// allowed shape (k >= 0; polynomial steps composable with positive
/// coefficients and a positive leading exponent). Probing uses the budget.
bool fb_member(const LanguageF& Fb, const FbCandidate& cand, Budget& b);

/// Builds the series described by a member candidate; raises DomainError
/// when the candidate fails the membership test.
GpsExpr fb_realize(const LanguageF& Fb, const FbCandidate& cand, Budget& b);

// ---- monomial instantiation -------------------------------------------------

/// Instantiates the language at monomial assignments: every member (closed
/// under renormalized derivatives and grade-window fragments up to frag_cap,
/// as the flags allow) is rewritten through x := m*(1 + eps) into a
/// restricted power series over the group. Assignments must be below 1.
std::vector<Rps> make_FM(
    const LanguageF& F, GroupPtr group,
    const std::vector<std::map<std::string, Monomial>>& assignments,
    unsigned frag_cap = 6);

// ---- generated sets ---------------------------------------------------------

/// Expression over a generated set. Operands refer to previously stored
/// elements by index, so stored expressions form a DAG over the element
/// list; leaves are base-set entries, scalars, and monomials.
struct GenExpr {
  enum class Kind { Base, Scalar, Mono, Sum, Product, Apply };
  Kind kind = Kind::Scalar;
  std::size_t base = 0;          // Base: index into the base set
  Rational scalar{0};            // Scalar
  std::optional<Monomial> mono;  // Mono
  std::size_t a = 0, b = 0;      // Sum/Product operands; Apply: a = argument
  std::size_t member = 0;        // Apply: language generator index
  unsigned depth = 0;
};

struct GeneratedElement {
  GenExpr expr;
  HahnSeries value;
  std::vector<Term> signature;  // first probe_depth terms of the value
  bool signature_exhausted = false;
};

struct GenerationStats {
  std::size_t candidates = 0;      // expressions formed
  std::size_t deduplicated = 0;    // dropped as threshold-equal to earlier ones
  std::size_t dropped_budget = 0;  // dropped: signature not probeable in budget
  std::size_t dropped_domain = 0;  // dropped: construction rejected
};

/// All expressions of depth <= depth over the base set, the scalar and
/// monomial pools, ring operations, and language applications at positive
/// normal-form infinitesimal arguments, deduplicated by threshold equality
/// of the first probe_depth terms.
struct GeneratedSet {
  GroupPtr group;
  LanguageF language;
  std::vector<std::vector<Term>> base_terms;  // the base set, fully enumerated
  std::vector<Monomial> mono_pool;
  std::vector<Rational> scalar_pool;
  unsigned depth = 0;
  unsigned probe_depth = 0;
  std::vector<GeneratedElement> elements;
  std::map<std::string, std::size_t> signature_index;  // signature key -> id
  GenerationStats stats;

  nlohmann::json expr_json(std::size_t id) const;
};

struct GenerateOptions {
  unsigned probe_depth = 10;
  std::int64_t candidate_budget = 40000;  // per-candidate signature probing
  std::size_t max_elements = 60000;
};

/// Builds the bounded-depth closure of X under the language. X must be
/// truncation-closed: every truncation of an X element at its own support
/// points (and midpoints) must again be an X element or empty. X elements
/// must enumerate fully within the budget.
GeneratedSet generate(const std::vector<HahnSeries>& X, const LanguageF& F,
                      GroupPtr group, const std::vector<Monomial>& mono_pool,
                      const std::vector<Rational>& scalar_pool, unsigned depth,
                      Budget& b, const GenerateOptions& opts = {});

// ---- truncation-closure checking --------------------------------------------

enum class WitnessStatus { Witnessed, Failed, Budget };
std::string to_string(WitnessStatus s);

struct ClosureEntry {
  std::size_t element_id = 0;
  std::string probe;  // canonical monomial rendering
  WitnessStatus status = WitnessStatus::Budget;
  std::optional<nlohmann::json> witness;
  std::string note;  // failure / budget explanation
};

struct ClosureReport {
  unsigned probe_depth = 0;
  std::vector<ClosureEntry> entries;
  std::size_t witnessed = 0, failed = 0, budget = 0;

  bool all_witnessed() const { return failed == 0 && budget == 0; }
  nlohmann::json to_json(const GeneratedSet* G = nullptr) const;
};

struct CheckOptions {
  unsigned probe_depth = 10;
  unsigned workers = 0;  // 0: one worker per hardware thread, capped at 8
  std::int64_t pair_budget = 250000;
  /// Explicit probe set applied to every element; when absent each element
  /// is probed at its own signature monomials and their midpoints.
  std::optional<std::vector<Monomial>> probes;
};

/// For every element and probe, attempts a witness expression over the
/// generated set evaluating to the truncation of the element above the
/// probe: by direct lookup, by structural recursion through sums and
/// products (product segmentation of the probed supports), by grade-window
/// fragments of language members at monomial arguments, and by composition
/// witnesses at series arguments. Failures are recorded, never thrown.
ClosureReport check_truncation_closed(const GeneratedSet& G,
                                      const CheckOptions& opts = {});
ClosureReport check_truncation_closed(const GeneratedSet& G,
                                      const std::vector<Monomial>& probes,
                                      unsigned probe_depth);

}  // namespace hahnforge

#endif

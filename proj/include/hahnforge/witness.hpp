#ifndef HAHNFORGE_WITNESS_HPP
#define HAHNFORGE_WITNESS_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hahnforge/rps.hpp"

namespace hahnforge {

/// Raised when a membership oracle declines to certify an atom.
class OracleRefusalError : public Error {
 public:
  explicit OracleRefusalError(const std::string& what) : Error(what) {}
};

/// Certificate attached to every witness leaf. It names the ambient set the
/// leaf claims membership in ("A" = outer-function ring, "B" = argument set,
/// "K" = scalar field, "M" = monomial group), the base elements it was derived
/// from, a human-readable derivation, and which closure properties of the
/// ambient set the derivation relies on.
struct AtomCert {
  std::string set;                 ///< "A", "B", "K", or "M"
  std::string derivation;          ///< e.g. "trunc(D(f, x), u*t)"
  std::vector<std::string> bases;  ///< base element names, e.g. {"f"}, {"g[x]"}
  bool uses_ring = false;          ///< ring operations / scalar combinations
  bool uses_truncation = false;    ///< series truncation (incl. class truncation)
  bool uses_derivative = false;    ///< coefficientwise partial derivatives
  bool uses_mono_scale = false;    ///< scaling by a fixed monomial
};

/// Membership test for one ambient set. Returning false means the set is not
/// known to contain elements derived this way; atom creation then fails with
/// OracleRefusalError.
using SetOracle = std::function<bool(const AtomCert&)>;

/// Oracle that certifies every atom.
SetOracle accept_all_atoms();

/// Oracle that certifies atoms not derived through partial derivatives; used
/// to model an outer-function ring that is not closed under differentiation.
SetOracle reject_derivative_atoms();

/// A finite expression tree certifying how a truncated composition is
/// assembled from tagged atoms. Leaves are scalars, monomials, or tagged
/// elements (possibly truncated) of the outer ring / argument set; inner nodes
/// are sums, products, monomial scalings, and compositions of an outer-ring
/// atom with argument-set atoms. Evaluation is deterministic and reproduces
/// the certified series exactly.
class WitnessExpr {
 public:
  enum class Kind { Scalar, Monomial, AtomA, AtomB, Sum, Product, MonoScale, Compose };

  static WitnessExpr scalar(Rational c);
  static WitnessExpr monomial(Monomial m);
  /// Creates a tagged leaf; `oracle` is consulted immediately and a refusal
  /// throws OracleRefusalError carrying the derivation.
  static WitnessExpr atom_a(Rps value, AtomCert cert, const SetOracle& oracle);
  static WitnessExpr atom_b(Rps value, AtomCert cert, const SetOracle& oracle);
  static WitnessExpr sum(std::vector<WitnessExpr> parts);
  static WitnessExpr product(std::vector<WitnessExpr> parts);
  static WitnessExpr mono_scale(Monomial factor, WitnessExpr inner);
  /// Composition of an outer-ring atom with one argument-set atom per
  /// variable of the outer value. `args` maps variable name to atom.
  static WitnessExpr compose(WitnessExpr outer,
                             std::vector<std::pair<std::string, WitnessExpr>> args);

  Kind kind() const;
  /// Number of nodes / maximum root-to-leaf length.
  std::size_t node_count() const;
  std::size_t depth() const;
  /// Certificates of every leaf, in deterministic (left-to-right) order.
  /// Scalar and monomial leaves report sets "K" and "M".
  std::vector<AtomCert> leaf_certs() const;

  /// Evaluates the tree to a series over `out_vars`. Scalar and monomial
  /// leaves lift to constants; atoms must already live over `out_vars`
  /// (outer-ring atoms appear either inside a composition or as constants).
  Rps eval(const std::vector<std::string>& out_vars, const GroupPtr& group,
           Budget& b) const;

  /// Schema: {"kind": ..., "children"/"child"/"outer"/"args": ...,
  /// leaves carry "set", "derivation", "bases", "uses"}.
  nlohmann::json to_json() const;

  struct Node;

 private:
  explicit WitnessExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Options for tc_composition_witness.
struct TcWitnessOptions {
  /// Maximum recursion depth of the witness construction; exceeding it raises
  /// Error. The bound is on the analysis recursion, not the tree depth.
  int max_depth = 64;
  /// When the outer series has no finite-support data, its coefficient
  /// indices are scanned through this total degree to locate the pivot
  /// monomial of the class-comparison analysis.
  unsigned long long scan_degree = 10;
};

/// Certifies the truncation of a composition: builds a witness tree whose
/// evaluation equals coeff_trunc(compose(f, args), m). `f` must have
/// support bounded by the identity after monomial rescaling (the construction
/// performs the rescaling itself) and every argument must be composable.
/// `oracle_a` certifies atoms derived from f (the outer ring), `oracle_b`
/// atoms derived from the arguments; refusals propagate as
/// OracleRefusalError.
WitnessExpr tc_composition_witness(const Rps& f,
                                   const std::map<std::string, Rps>& args,
                                   const Monomial& m,
                                   const SetOracle& oracle_a,
                                   const SetOracle& oracle_b,
                                   Budget& b,
                                   const TcWitnessOptions& opts = {});

}  // namespace hahnforge

#endif  // HAHNFORGE_WITNESS_HPP

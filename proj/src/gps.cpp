#include "hahnforge/gps.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace hahnforge {

// ---- VariableSet ------------------------------------------------------------

VariableSet::VariableSet(std::vector<std::string> names,
                         std::vector<std::string> classical)
    : names_(std::move(names)), classical_(std::move(classical)) {}

std::shared_ptr<const VariableSet> VariableSet::make(
    std::vector<std::string> names, std::vector<std::string> classical) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw DomainError("variable name must be nonempty");
    if (!seen.insert(n).second)
      throw DomainError("duplicate variable name: " + n);
  }
  std::sort(classical.begin(), classical.end());
  classical.erase(std::unique(classical.begin(), classical.end()),
                  classical.end());
  for (const auto& c : classical)
    if (!seen.count(c))
      throw DomainError("classical flag names unknown variable: " + c);
  return std::shared_ptr<const VariableSet>(
      new VariableSet(std::move(names), std::move(classical)));
}

bool VariableSet::is_classical(const std::string& name) const {
  return std::binary_search(classical_.begin(), classical_.end(), name);
}

bool VariableSet::has(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

// ---- ExponentVector ---------------------------------------------------------

Rational ExponentVector::get(const std::string& var) const {
  auto it = e_.find(var);
  return it == e_.end() ? Rational(0) : it->second;
}

void ExponentVector::set(const std::string& var, const Rational& q) {
  if (q < 0) throw DomainError("exponent must be nonnegative: " + var);
  if (q == 0)
    e_.erase(var);
  else
    e_[var] = q;
}

Rational ExponentVector::grade() const {
  Rational g = 0;
  for (const auto& [v, q] : e_) g += q;
  return g;
}

ExponentVector ExponentVector::plus(const ExponentVector& o) const {
  ExponentVector out = *this;
  for (const auto& [v, q] : o.e_) {
    Rational s = out.get(v) + q;
    out.set(v, s);
  }
  return out;
}

std::optional<ExponentVector> ExponentVector::minus(const ExponentVector& o) const {
  ExponentVector out = *this;
  for (const auto& [v, q] : o.e_) {
    Rational d = out.get(v) - q;
    if (d < 0) return std::nullopt;
    out.set(v, d);
  }
  return out;
}

bool ExponentVector::leq(const ExponentVector& o) const {
  for (const auto& [v, q] : e_)
    if (q > o.get(v)) return false;
  return true;
}

std::string ExponentVector::to_string() const {
  if (e_.empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, q] : e_) {
    if (!first) os << "*";
    first = false;
    os << v;
    if (q != 1) {
      if (denominator(q) == 1 && q > 0)
        os << "^" << hahnforge::to_string(q);
      else
        os << "^(" << hahnforge::to_string(q) << ")";
    }
  }
  return os.str();
}

ExponentVector ev(std::initializer_list<std::pair<std::string, Rational>> items) {
  ExponentVector out;
  for (const auto& [v, q] : items) out.set(v, out.get(v) + q);
  return out;
}

// ---- GpsFragmentSpec --------------------------------------------------------

bool GpsFragmentSpec::contains(const ExponentVector& gamma) const {
  for (const auto& [v, iv] : per_var)
    if (!iv.contains(gamma.get(v))) return false;
  if (grade && !grade->contains(gamma.grade())) return false;
  return true;
}

// ---- expression nodes -------------------------------------------------------

struct GpsNode {
  enum class Kind {
    Terms,
    Geometric,
    BinomialFam,
    Sum,
    Product,
    Scale,
    Reindex,
    Derivative,
    RenormDeriv,
    EulerWeight,
    Fragment,
    BlowA,
    BlowM,
    ComposeP,
    ComposeC,
    MonoDiv,
    MonoMul,
  };

  Kind kind;
  VarsPtr vars;
  GpsLattice lattice;

  GpsNodePtr a, b;                           // children
  std::map<ExponentVector, Rational> terms;  // Terms
  std::string v1, v2, v3;                    // op variables (x / z0 / z1)
  Rational q1;                               // lambda / k / alpha / scalar
  unsigned m1 = 0;                           // weight order
  std::map<std::string, std::string> sigma;  // Reindex: source -> target
  GpsFragmentSpec fspec;                     // Fragment

  // substitution payload (ComposeP / ComposeC / BlowA)
  GpsNodePtr harg;            // h of g = z^alpha(k + h)  (ComposeP)
  ExponentVector alpha_bar;   // leading exponent of g     (ComposeP)
  Rational kval = 0;          // leading coefficient       (ComposeP / BlowA)
  Rational kroot = 0;         // exact denom-th root of kval
  long long kroot_den = 1;    // kval^q = kroot^(q*kroot_den)
  Rational min_grade_sub = 0; // positive lower bound on the substituted grade

  mutable std::map<ExponentVector, Rational> memo;
  mutable std::vector<GpsNodePtr> pow_memo;  // powers of the substituted series
};

using Kind = GpsNode::Kind;

GpsExpr make_expr(GpsNodePtr node) { return GpsExpr(std::move(node)); }

namespace {

std::shared_ptr<GpsNode> new_node(Kind k, VarsPtr vars) {
  auto n = std::make_shared<GpsNode>();
  n->kind = k;
  n->vars = std::move(vars);
  return n;
}

void require_same_vars(const GpsExpr& f, const GpsExpr& g) {
  const auto& a = *f.vars();
  const auto& b = *g.vars();
  if (f.vars().get() != g.vars().get() && !a.same_as(b))
    throw DomainError("operands use different variable sets");
}

void require_var(const GpsExpr& f, const std::string& x) {
  if (!f.vars()->has(x)) throw DomainError("unknown variable: " + x);
}

long long lcm_ll(long long a, long long b) { return std::lcm(a, b); }

std::optional<Rational> cap_of(const GpsLattice& L, const std::string& v) {
  auto it = L.var_cap.find(v);
  if (it == L.var_cap.end()) return std::nullopt;
  return it->second;
}

std::optional<Rational> min_opt(const std::optional<Rational>& a,
                                const std::optional<Rational>& b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

std::optional<Rational> add_opt(const std::optional<Rational>& a,
                                const std::optional<Rational>& b) {
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

/// Grade bound implied by the lattice fields: min of grade_bound and the sum
/// of all per-variable caps (when every variable is capped).
std::optional<Rational> effective_grade_bound(const GpsLattice& L,
                                              const VariableSet& vars) {
  std::optional<Rational> from_caps = Rational(0);
  for (const auto& v : vars.names()) {
    from_caps = add_opt(from_caps, cap_of(L, v));
    if (!from_caps) break;
  }
  return min_opt(L.grade_bound, from_caps);
}

/// True when gamma could lie in the lattice (grade bound included).
bool lattice_may_contain(const GpsLattice& L, const ExponentVector& gamma) {
  if (L.grade_bound && gamma.grade() > *L.grade_bound) return false;
  for (const auto& [v, q] : gamma.entries()) {
    Rational off = q - L.shift.get(v);
    if (off < 0) return false;
    if (denominator(Rational(off * L.denom)) != 1) return false;
    auto cap = cap_of(L, v);
    if (cap && q > *cap) return false;
  }
  // variables with positive shift must appear in gamma
  for (const auto& [v, s] : L.shift.entries())
    if (gamma.get(v) < s) return false;
  return true;
}

/// Visits every lattice point gamma with gamma <= caps componentwise (when a
/// cap function is given) and |gamma| <= total_cap. Deterministic order.
void enumerate_lattice(
    const GpsLattice& L, const std::vector<std::string>& names,
    const std::function<std::optional<Rational>(const std::string&)>& extra_cap,
    const std::optional<Rational>& total_cap, Budget& b,
    const std::function<void(const ExponentVector&)>& yield) {
  // suffix sums of shifts for total-cap pruning
  std::vector<Rational> suffix_shift(names.size() + 1, Rational(0));
  for (std::size_t i = names.size(); i-- > 0;)
    suffix_shift[i] = suffix_shift[i + 1] + L.shift.get(names[i]);

  ExponentVector cur;
  Rational spent = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == names.size()) {
      yield(cur);
      return;
    }
    const std::string& v = names[i];
    std::optional<Rational> cap = cap_of(L, v);
    if (extra_cap) cap = min_opt(cap, extra_cap(v));
    const Rational base = L.shift.get(v);
    for (long long j = 0;; ++j) {
      Rational val = base + Rational(j, L.denom);
      if (cap && val > *cap) break;
      if (total_cap && spent + val + suffix_shift[i + 1] > *total_cap) break;
      b.step("support enumeration");
      cur.set(v, val);
      spent += val;
      rec(i + 1);
      spent -= val;
      cur.set(v, Rational(0));
    }
  };
  // A variable whose shift already exceeds its cap admits no value at all.
  rec(0);
}

Rational coeff_rec(const GpsNode* n, const ExponentVector& gamma, Budget& b);

Rational coeff_of(const GpsNodePtr& n, const ExponentVector& gamma, Budget& b) {
  return coeff_rec(n.get(), gamma, b);
}

ExponentVector apply_sigma(const std::map<std::string, std::string>& sigma,
                           const ExponentVector& gamma) {
  ExponentVector out;
  for (const auto& [v, q] : gamma.entries()) {
    auto it = sigma.find(v);
    const std::string& w = it == sigma.end() ? v : it->second;
    out.set(w, out.get(w) + q);
  }
  return out;
}

/// Splits gamma into the part on `inner` variables and the rest.
std::pair<ExponentVector, ExponentVector> split_on(const VariableSet& inner,
                                                   const ExponentVector& gamma) {
  ExponentVector in, rest;
  for (const auto& [v, q] : gamma.entries()) {
    if (inner.has(v))
      in.set(v, q);
    else
      rest.set(v, q);
  }
  return {in, rest};
}

/// kval^q as kroot^(q * kroot_den); q * kroot_den must be integral.
Rational scaled_power(const GpsNode* n, const Rational& q) {
  Rational e = q * n->kroot_den;
  if (denominator(e) != 1)
    throw Error("internal: off-lattice exponent in scaled power");
  return pow_int(n->kroot, numerator(e).convert_to<long long>());
}

/// m-th power of the substituted series, built lazily per node.
const GpsNodePtr& sub_power(const GpsNode* n, const GpsNodePtr& base,
                            std::size_t m) {
  auto& memo = n->pow_memo;
  if (memo.empty())
    memo.push_back(GpsExpr::constant(base->vars, 1).node());
  while (memo.size() <= m)
    memo.push_back(mul(make_expr(memo.back()), make_expr(base)).node());
  return memo[m];
}

Rational coeff_compute(const GpsNode* n, const ExponentVector& gamma, Budget& b) {
  switch (n->kind) {
    case Kind::Terms: {
      auto it = n->terms.find(gamma);
      return it == n->terms.end() ? Rational(0) : it->second;
    }
    case Kind::Geometric: {
      const auto& e = gamma.entries();
      if (e.empty()) return 1;
      if (e.size() == 1 && e.begin()->first == n->v1 &&
          is_nonneg_integer(e.begin()->second))
        return 1;
      return 0;
    }
    case Kind::BinomialFam: {
      const auto& e = gamma.entries();
      if (e.empty()) return 1;  // (lambda choose 0)
      if (e.size() == 1 && e.begin()->first == n->v1 &&
          is_nonneg_integer(e.begin()->second))
        return binomial(n->q1,
                        numerator(e.begin()->second).convert_to<unsigned long long>());
      return 0;
    }
    case Kind::Sum:
      return coeff_of(n->a, gamma, b) + coeff_of(n->b, gamma, b);
    case Kind::Scale:
      return n->q1 * coeff_of(n->a, gamma, b);
    case Kind::Product: {
      Rational acc = 0;
      enumerate_lattice(
          n->a->lattice, n->a->vars->names(),
          [&](const std::string& v) -> std::optional<Rational> {
            return gamma.get(v);
          },
          min_opt(gamma.grade(), n->a->lattice.grade_bound), b,
          [&](const ExponentVector& alpha) {
            Rational ca = coeff_of(n->a, alpha, b);
            if (ca == 0) return;
            auto beta = gamma.minus(alpha);
            if (!beta || !lattice_may_contain(n->b->lattice, *beta)) return;
            acc += ca * coeff_of(n->b, *beta, b);
          });
      return acc;
    }
    case Kind::Reindex: {
      Rational acc = 0;
      enumerate_lattice(
          n->a->lattice, n->a->vars->names(),
          [&](const std::string& v) -> std::optional<Rational> {
            auto it = n->sigma.find(v);
            return gamma.get(it == n->sigma.end() ? v : it->second);
          },
          min_opt(gamma.grade(), n->a->lattice.grade_bound), b,
          [&](const ExponentVector& src) {
            if (apply_sigma(n->sigma, src) == gamma)
              acc += coeff_of(n->a, src, b);
          });
      return acc;
    }
    case Kind::Derivative: {
      ExponentVector up = gamma;
      Rational e = gamma.get(n->v1) + 1;
      up.set(n->v1, e);
      return e * coeff_of(n->a, up, b);
    }
    case Kind::RenormDeriv:
      return gamma.get(n->v1) * coeff_of(n->a, gamma, b);
    case Kind::EulerWeight: {
      Rational w = binomial(gamma.get(n->v1), n->m1);
      if (w == 0) return 0;
      return w * coeff_of(n->a, gamma, b);
    }
    case Kind::Fragment:
      return n->fspec.contains(gamma) ? coeff_of(n->a, gamma, b) : Rational(0);
    case Kind::MonoDiv: {
      ExponentVector up = gamma;
      up.set(n->v1, gamma.get(n->v1) + n->q1);
      return coeff_of(n->a, up, b);
    }
    case Kind::MonoMul: {
      Rational e = gamma.get(n->v1) - n->q1;
      if (e < 0) return 0;
      ExponentVector down = gamma;
      down.set(n->v1, e);
      return coeff_of(n->a, down, b);
    }
    case Kind::BlowA: {
      // gamma on (rest, z0, z1) -> c_f(alpha e_x + beta) (alpha choose m) k^(alpha-m)
      Rational m_exp = gamma.get(n->v3);
      if (!is_nonneg_integer(m_exp)) return 0;
      unsigned long long m = numerator(m_exp).convert_to<unsigned long long>();
      Rational alpha = gamma.get(n->v2);
      ExponentVector fq;
      for (const auto& [v, q] : gamma.entries())
        if (v != n->v2 && v != n->v3) fq.set(v, q);
      if (alpha != 0) fq.set(n->v1, alpha);
      Rational cf = coeff_of(n->a, fq, b);
      if (cf == 0) return 0;
      Rational w = binomial(alpha, m);
      if (w == 0) return 0;
      return cf * w * scaled_power(n, alpha - m_exp);
    }
    case Kind::BlowM: {
      Rational alpha = gamma.get(n->v2);
      if (gamma.get(n->v3) != alpha) return 0;
      ExponentVector fq;
      for (const auto& [v, q] : gamma.entries())
        if (v != n->v2 && v != n->v3) fq.set(v, q);
      if (alpha != 0) fq.set(n->v1, alpha);
      return coeff_of(n->a, fq, b);
    }
    case Kind::ComposeP: {
      auto [dz, beta] = split_on(*n->harg->vars, gamma);
      Rational acc = 0;
      // alpha ranges over the x-lattice of f, bounded by the z-exponents
      const GpsLattice& lf = n->a->lattice;
      Rational base = lf.shift.get(n->v1);
      std::optional<Rational> cap = cap_of(lf, n->v1);
      for (const auto& [w, aw] : n->alpha_bar.entries())
        cap = min_opt(cap, dz.get(w) / aw);
      for (long long j = 0;; ++j) {
        Rational alpha = base + Rational(j, lf.denom);
        if (cap && alpha > *cap) break;
        b.step("composition");
        ExponentVector scaled;
        for (const auto& [w, aw] : n->alpha_bar.entries())
          scaled.set(w, aw * alpha);
        auto rho = dz.minus(scaled);
        if (!rho) continue;
        ExponentVector fq = beta;
        if (alpha != 0) fq.set(n->v1, alpha);
        Rational cf = coeff_of(n->a, fq, b);
        if (cf == 0) continue;
        Rational rho_grade = rho->grade();
        // g^alpha = z^(abar*alpha) k^alpha (1+h)^alpha with h normalized by k
        Rational inner = 0;
        for (unsigned long long m = 0;
             m == 0 || Rational(m) * n->min_grade_sub <= rho_grade; ++m) {
          b.step("composition");
          Rational w = binomial(alpha, m);
          if (w == 0 && is_nonneg_integer(alpha)) break;  // natural alpha: done
          if (w == 0) continue;
          Rational chm = coeff_of(sub_power(n, n->harg, m), *rho, b);
          if (chm == 0) continue;
          inner += w * chm;
        }
        acc += cf * scaled_power(n, alpha) * inner;
      }
      return acc;
    }
    case Kind::ComposeC: {
      auto [dz, beta] = split_on(*n->b->vars, gamma);
      Rational dz_grade = dz.grade();
      std::optional<Rational> ncap = cap_of(n->a->lattice, n->v1);
      Rational acc = 0;
      for (unsigned long long nn = 0;
           nn == 0 || Rational(nn) * n->min_grade_sub <= dz_grade; ++nn) {
        if (ncap && Rational(nn) > *ncap) break;
        b.step("composition");
        ExponentVector fq = beta;
        if (nn != 0) fq.set(n->v1, Rational(nn));
        if (!lattice_may_contain(n->a->lattice, fq)) continue;
        Rational cf = coeff_of(n->a, fq, b);
        if (cf == 0) continue;
        acc += cf * coeff_of(sub_power(n, n->b, nn), dz, b);
      }
      return acc;
    }
  }
  throw Error("internal: unhandled node kind");
}

Rational coeff_rec(const GpsNode* n, const ExponentVector& gamma, Budget& b) {
  if (!lattice_may_contain(n->lattice, gamma)) return 0;
  auto it = n->memo.find(gamma);
  if (it != n->memo.end()) return it->second;
  b.step("gps coefficient");
  Rational c = coeff_compute(n, gamma, b);
  n->memo.emplace(gamma, c);
  return c;
}

/// Variables provably restricted to natural exponents by the lattice.
bool natural_on(const GpsNode& n, const std::string& v) {
  if (n.vars->is_classical(v)) return true;
  const GpsLattice& L = n.lattice;
  return denominator(L.shift.get(v)) == 1 && L.denom == 1;
}

}  // namespace

// ---- GpsExpr observation ----------------------------------------------------

const VarsPtr& GpsExpr::vars() const { return node_->vars; }
const GpsLattice& GpsExpr::lattice() const { return node_->lattice; }

Rational GpsExpr::coeff(const ExponentVector& gamma, Budget& b) const {
  for (const auto& [v, q] : gamma.entries())
    if (!node_->vars->has(v))
      throw DomainError("coefficient query names unknown variable: " + v);
  return coeff_rec(node_.get(), gamma, b);
}

std::vector<std::pair<ExponentVector, Rational>> GpsExpr::support_upto(
    const Rational& max_grade, Budget& b) const {
  std::optional<Rational> cap =
      min_opt(max_grade, effective_grade_bound(node_->lattice, *node_->vars));
  std::vector<std::pair<ExponentVector, Rational>> out;
  enumerate_lattice(node_->lattice, node_->vars->names(), nullptr, cap, b,
                    [&](const ExponentVector& gamma) {
                      Rational c = coeff_rec(node_.get(), gamma, b);
                      if (c != 0) out.emplace_back(gamma, c);
                    });
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    Rational gx = x.first.grade(), gy = y.first.grade();
    if (gx != gy) return gx < gy;
    return x.first < y.first;
  });
  return out;
}

GpsLeadingData GpsExpr::classify(const Rational& probe_grade, Budget& b) const {
  GpsLeadingData out;
  auto bound = effective_grade_bound(node_->lattice, *node_->vars);
  out.probe_complete = bound.has_value() && *bound <= probe_grade;
  auto pts = support_upto(probe_grade, b);
  if (pts.empty()) {
    out.is_zero = true;
    out.infinitesimal = true;
    return out;
  }
  out.infinitesimal = pts.front().first.grade() > 0;
  std::vector<std::size_t> minimal;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
      if (j != i && pts[j].first.leq(pts[i].first) &&
          !(pts[j].first == pts[i].first))
        dominated = true;
    if (!dominated) minimal.push_back(i);
  }
  if (minimal.size() == 1) {
    out.normal = true;
    out.alpha = pts[minimal[0]].first;
    out.lead_coeff = pts[minimal[0]].second;
    out.p_composable = !out.alpha->is_zero() && out.lead_coeff > 0;
  }
  return out;
}

// ---- leaf constructors ------------------------------------------------------

GpsExpr GpsExpr::zero(VarsPtr vars) { return from_terms(std::move(vars), {}); }

GpsExpr GpsExpr::constant(VarsPtr vars, const Rational& c) {
  if (c == 0) return zero(std::move(vars));
  return from_terms(std::move(vars), {{ExponentVector{}, c}});
}

GpsExpr GpsExpr::variable(VarsPtr vars, const std::string& name) {
  return var_power(std::move(vars), name, 1);
}

GpsExpr GpsExpr::var_power(VarsPtr vars, const std::string& name,
                           const Rational& alpha) {
  ExponentVector g;
  g.set(name, alpha);
  return from_terms(std::move(vars), {{g, Rational(1)}});
}

GpsExpr GpsExpr::from_terms(
    VarsPtr vars, std::vector<std::pair<ExponentVector, Rational>> terms) {
  auto n = new_node(Kind::Terms, vars);
  for (auto& [g, c] : terms) {
    if (c == 0) continue;
    for (const auto& [v, q] : g.entries()) {
      if (!vars->has(v)) throw DomainError("term names unknown variable: " + v);
      if (vars->is_classical(v) && !is_nonneg_integer(q))
        throw DomainError("classical variable with non-natural exponent: " + v);
    }
    n->terms[g] += c;
    if (n->terms[g] == 0) n->terms.erase(g);
  }
  // lattice: componentwise minimum shift, lcm of denominators, max caps
  GpsLattice L;
  if (n->terms.empty()) {
    L.grade_bound = Rational(-1);
    for (const auto& v : vars->names()) L.var_cap[v] = 0;
  } else {
    BigInt den = 1;
    Rational max_grade = 0;
    for (const auto& v : vars->names()) {
      Rational mn, mx;
      bool first = true;
      for (const auto& [g, c] : n->terms) {
        Rational q = g.get(v);
        den = lcm(den, denominator(q));
        if (first || q < mn) mn = q;
        if (first || q > mx) mx = q;
        first = false;
      }
      if (mn != 0) L.shift.set(v, mn);
      L.var_cap[v] = mx;
    }
    for (const auto& [g, c] : n->terms) max_grade = std::max(max_grade, g.grade());
    L.denom = den.convert_to<long long>();
    L.grade_bound = max_grade;
  }
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr GpsExpr::geometric(VarsPtr vars, const std::string& name) {
  if (!vars->has(name)) throw DomainError("unknown variable: " + name);
  auto n = new_node(Kind::Geometric, vars);
  n->v1 = name;
  for (const auto& v : vars->names())
    if (v != name) n->lattice.var_cap[v] = 0;
  return make_expr(n);
}

GpsExpr GpsExpr::binomial_family(VarsPtr vars, const std::string& name,
                                 const Rational& lambda) {
  if (!vars->has(name)) throw DomainError("unknown variable: " + name);
  auto n = new_node(Kind::BinomialFam, vars);
  n->v1 = name;
  n->q1 = lambda;
  for (const auto& v : vars->names())
    if (v != name) n->lattice.var_cap[v] = 0;
  if (is_nonneg_integer(lambda)) {
    n->lattice.var_cap[name] = lambda;
    n->lattice.grade_bound = lambda;
  }
  return make_expr(n);
}

// ---- ring operations --------------------------------------------------------

GpsExpr add(const GpsExpr& f, const GpsExpr& g) {
  require_same_vars(f, g);
  auto n = new_node(Kind::Sum, f.vars());
  n->a = f.node();
  n->b = g.node();
  const GpsLattice& A = f.lattice();
  const GpsLattice& B = g.lattice();
  GpsLattice L;
  BigInt den = lcm(BigInt(A.denom), BigInt(B.denom));
  for (const auto& v : f.vars()->names()) {
    Rational sa = A.shift.get(v), sb = B.shift.get(v);
    Rational mn = std::min(sa, sb);
    if (mn != 0) L.shift.set(v, mn);
    den = lcm(den, denominator(Rational(sa - sb)));
    auto ca = cap_of(A, v), cb = cap_of(B, v);
    if (ca && cb) L.var_cap[v] = std::max(*ca, *cb);
  }
  L.denom = den.convert_to<long long>();
  if (A.grade_bound && B.grade_bound)
    L.grade_bound = std::max(*A.grade_bound, *B.grade_bound);
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr scalar_mul(const Rational& c, const GpsExpr& f) {
  auto n = new_node(Kind::Scale, f.vars());
  n->a = f.node();
  n->q1 = c;
  n->lattice = f.lattice();
  return make_expr(n);
}

GpsExpr neg(const GpsExpr& f) { return scalar_mul(-1, f); }

GpsExpr sub(const GpsExpr& f, const GpsExpr& g) { return add(f, neg(g)); }

GpsExpr mul(const GpsExpr& f, const GpsExpr& g) {
  require_same_vars(f, g);
  auto n = new_node(Kind::Product, f.vars());
  n->a = f.node();
  n->b = g.node();
  const GpsLattice& A = f.lattice();
  const GpsLattice& B = g.lattice();
  GpsLattice L;
  L.denom = lcm_ll(A.denom, B.denom);
  for (const auto& v : f.vars()->names()) {
    Rational s = A.shift.get(v) + B.shift.get(v);
    if (s != 0) L.shift.set(v, s);
    auto c = add_opt(cap_of(A, v), cap_of(B, v));
    if (c) L.var_cap[v] = *c;
  }
  L.grade_bound = add_opt(A.grade_bound, B.grade_bound);
  n->lattice = std::move(L);
  return make_expr(n);
}

// ---- structural operations --------------------------------------------------

GpsExpr reindex(const GpsExpr& f, const std::map<std::string, std::string>& sigma,
                VarsPtr target_vars) {
  for (const auto& [v, w] : sigma) {
    require_var(f, v);
    if (!target_vars->has(w))
      throw DomainError("reindex target not in variable set: " + w);
  }
  auto target_of = [&](const std::string& v) -> const std::string& {
    auto it = sigma.find(v);
    return it == sigma.end() ? v : it->second;
  };
  for (const auto& v : f.vars()->names()) {
    const std::string& w = target_of(v);
    if (!target_vars->has(w))
      throw DomainError("reindex leaves variable unmapped: " + v);
    if (target_vars->is_classical(w) && !natural_on(*f.node(), v))
      throw DomainError("reindex would put non-natural exponents on classical " + w);
  }
  auto n = new_node(Kind::Reindex, target_vars);
  n->a = f.node();
  n->sigma = sigma;
  const GpsLattice& A = f.lattice();
  GpsLattice L;
  L.denom = A.denom;
  L.grade_bound = A.grade_bound;
  for (const auto& w : target_vars->names()) {
    Rational s = 0;
    std::optional<Rational> cap = Rational(0);
    for (const auto& v : f.vars()->names())
      if (target_of(v) == w) {
        s += A.shift.get(v);
        cap = add_opt(cap, cap_of(A, v));
      }
    if (s != 0) L.shift.set(w, s);
    if (cap) L.var_cap[w] = *cap;
  }
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr clone_unmemoized(const GpsExpr& f) {
  std::map<const GpsNode*, GpsNodePtr> done;
  std::function<GpsNodePtr(const GpsNodePtr&)> go =
      [&](const GpsNodePtr& n) -> GpsNodePtr {
    if (!n) return nullptr;
    auto it = done.find(n.get());
    if (it != done.end()) return it->second;
    auto c = std::make_shared<GpsNode>();
    c->kind = n->kind;
    c->vars = n->vars;
    c->lattice = n->lattice;
    c->a = go(n->a);
    c->b = go(n->b);
    c->terms = n->terms;
    c->v1 = n->v1;
    c->v2 = n->v2;
    c->v3 = n->v3;
    c->q1 = n->q1;
    c->m1 = n->m1;
    c->sigma = n->sigma;
    c->fspec = n->fspec;
    c->harg = go(n->harg);
    c->alpha_bar = n->alpha_bar;
    c->kval = n->kval;
    c->kroot = n->kroot;
    c->kroot_den = n->kroot_den;
    c->min_grade_sub = n->min_grade_sub;
    done[n.get()] = c;
    return c;
  };
  return make_expr(go(f.node()));
}

GpsExpr derivative(const GpsExpr& f, const std::string& x) {
  require_var(f, x);
  const GpsLattice& A = f.lattice();
  if (!f.vars()->is_classical(x) && A.shift.get(x) < 1)
    throw DomainError(
        "derivative in " + x +
        " could create negative exponents; need a classical variable or a "
        "lattice shift >= 1");
  auto n = new_node(Kind::Derivative, f.vars());
  n->a = f.node();
  n->v1 = x;
  GpsLattice L = A;
  Rational s = A.shift.get(x);
  L.shift.set(x, s >= 1 ? s - 1 : Rational(0));
  if (auto c = cap_of(A, x)) L.var_cap[x] = std::max(Rational(0), Rational(*c - 1));
  if (A.grade_bound) L.grade_bound = *A.grade_bound - 1;
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr renorm_derivative(const GpsExpr& f, const std::string& x) {
  require_var(f, x);
  auto n = new_node(Kind::RenormDeriv, f.vars());
  n->a = f.node();
  n->v1 = x;
  n->lattice = f.lattice();
  return make_expr(n);
}

GpsExpr euler_binomial(const GpsExpr& f, const std::string& x, unsigned m) {
  require_var(f, x);
  auto n = new_node(Kind::EulerWeight, f.vars());
  n->a = f.node();
  n->v1 = x;
  n->m1 = m;
  n->lattice = f.lattice();
  return make_expr(n);
}

GpsExpr fragment_gps(const GpsExpr& f, GpsFragmentSpec spec) {
  for (const auto& [v, iv] : spec.per_var) require_var(f, v);
  auto n = new_node(Kind::Fragment, f.vars());
  n->a = f.node();
  GpsLattice L = f.lattice();
  for (const auto& [v, iv] : spec.per_var)
    if (iv.hi) L.var_cap[v] = min_opt(cap_of(L, v), iv.hi).value();
  if (spec.grade && spec.grade->hi)
    L.grade_bound = min_opt(L.grade_bound, spec.grade->hi);
  n->fspec = std::move(spec);
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr monomial_divide(const GpsExpr& f, const std::string& x,
                        const Rational& alpha, const Rational& probe_grade,
                        Budget& b) {
  require_var(f, x);
  if (alpha < 0) throw DomainError("monomial_divide needs a nonnegative exponent");
  const GpsLattice& A = f.lattice();
  if (A.shift.get(x) < alpha) {
    // not structurally divisible: check the probed support
    auto pts = f.support_upto(probe_grade, b);
    for (const auto& [g, c] : pts)
      if (g.get(x) < alpha)
        throw DomainError("support point " + g.to_string() +
                          " is not divisible by " + x + "^" + to_string(alpha));
  }
  auto n = new_node(Kind::MonoDiv, f.vars());
  n->a = f.node();
  n->v1 = x;
  n->q1 = alpha;
  GpsLattice L = A;
  Rational s = A.shift.get(x) - alpha;
  L.shift.set(x, s > 0 ? s : Rational(0));
  L.denom = lcm(lcm(BigInt(A.denom), denominator(alpha)),
                denominator(A.shift.get(x)))
                .convert_to<long long>();
  if (auto c = cap_of(A, x)) L.var_cap[x] = std::max(Rational(0), Rational(*c - alpha));
  if (A.grade_bound) L.grade_bound = *A.grade_bound - alpha;
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr monomial_divide(const GpsExpr& f, const std::string& x,
                        const Rational& alpha) {
  Budget b = Budget::with_default();
  auto bound = effective_grade_bound(f.lattice(), *f.vars());
  return monomial_divide(f, x, alpha, bound ? *bound : Rational(12), b);
}

GpsExpr monomial_multiply(const GpsExpr& f, const std::string& x,
                          const Rational& alpha) {
  require_var(f, x);
  if (alpha < 0) throw DomainError("monomial_multiply needs a nonnegative exponent");
  auto n = new_node(Kind::MonoMul, f.vars());
  n->a = f.node();
  n->v1 = x;
  n->q1 = alpha;
  const GpsLattice& A = f.lattice();
  GpsLattice L = A;
  L.shift.set(x, A.shift.get(x) + alpha);
  L.denom = lcm(BigInt(A.denom), denominator(alpha)).convert_to<long long>();
  if (auto c = cap_of(A, x)) L.var_cap[x] = *c + alpha;
  if (A.grade_bound) L.grade_bound = *A.grade_bound + alpha;
  n->lattice = std::move(L);
  return make_expr(n);
}

// ---- blow-ups ---------------------------------------------------------------

namespace {

/// Variable set for a blow-up result: x's slot becomes z0, z1 goes last.
VarsPtr blowup_vars(const GpsExpr& f, const std::string& x,
                    const std::string& z0, const std::string& z1,
                    bool z1_classical) {
  std::vector<std::string> names;
  std::vector<std::string> classical;
  for (const auto& v : f.vars()->names()) {
    if (v == x) {
      names.push_back(z0);
      if (f.vars()->is_classical(x)) classical.push_back(z0);
    } else {
      names.push_back(v);
      if (f.vars()->is_classical(v)) classical.push_back(v);
    }
  }
  names.push_back(z1);
  if (z1_classical) classical.push_back(z1);
  return VariableSet::make(std::move(names), std::move(classical));
}

bool blowup_names_collide(const GpsExpr& f, const std::string& x,
                          const std::string& z0, const std::string& z1) {
  if (z0 == z1) return true;
  for (const auto& v : f.vars()->names())
    if (v != x && (v == z0 || v == z1)) return true;
  return false;
}

std::string fresh_name(const GpsExpr& f, std::string base,
                       const std::vector<std::string>& avoid) {
  auto taken = [&](const std::string& s) {
    if (f.vars()->has(s)) return true;
    return std::find(avoid.begin(), avoid.end(), s) != avoid.end();
  };
  while (taken(base)) base += "_";
  return base;
}

/// Builds the blow-up with fresh names, then folds them onto the requested
/// (possibly colliding) names by reindexing.
GpsExpr blowup_via_fresh(const GpsExpr& f, const std::string& x,
                         const std::string& z0, const std::string& z1,
                         const std::optional<Rational>& affine_k) {
  std::string f0 = fresh_name(f, "_z0", {});
  std::string f1 = fresh_name(f, "_z1", {f0});
  GpsExpr core = affine_k ? blowup_affine(f, x, f0, f1, *affine_k)
                          : blowup_mult(f, x, f0, f1);
  // target set: keep f's other variables, add z0/z1 (merged when equal)
  std::vector<std::string> names;
  for (const auto& v : f.vars()->names())
    if (v != x) names.push_back(v);
  for (const auto& z : {z0, z1})
    if (std::find(names.begin(), names.end(), z) == names.end())
      names.push_back(z);
  std::map<std::string, std::string> sigma{{f0, z0}, {f1, z1}};
  // a target is classical only when every source folding into it is natural
  std::vector<std::string> classical;
  for (const auto& w : names) {
    bool any = false, all = true;
    for (const auto& v : core.vars()->names()) {
      auto it = sigma.find(v);
      const std::string& tgt = it == sigma.end() ? v : it->second;
      if (tgt != w) continue;
      any = true;
      all = all && natural_on(*core.node(), v);
    }
    if (any && all) classical.push_back(w);
  }
  return reindex(core, sigma, VariableSet::make(names, classical));
}

}  // namespace

GpsExpr blowup_affine(const GpsExpr& f, const std::string& x,
                      const std::string& z0, const std::string& z1,
                      const Rational& k) {
  require_var(f, x);
  if (k <= 0) throw DomainError("affine blow-up needs a positive center");
  if (blowup_names_collide(f, x, z0, z1))
    return blowup_via_fresh(f, x, z0, z1, k);

  const GpsLattice& A = f.lattice();
  long long D =
      lcm(BigInt(A.denom), denominator(A.shift.get(x))).convert_to<long long>();
  auto root = exact_nth_root(k, static_cast<unsigned long long>(D));
  if (!root)
    throw DomainError("center " + to_string(k) + " has no exact " +
                      std::to_string(D) + "-th root over the rationals");

  auto n = new_node(Kind::BlowA, blowup_vars(f, x, z0, z1, /*z1_classical=*/true));
  n->a = f.node();
  n->v1 = x;
  n->v2 = z0;
  n->v3 = z1;
  n->kval = k;
  n->kroot = *root;
  n->kroot_den = D;

  GpsLattice L;
  L.denom = A.denom;
  for (const auto& v : f.vars()->names()) {
    if (v == x) continue;
    Rational s = A.shift.get(v);
    if (s != 0) L.shift.set(v, s);
    if (auto c = cap_of(A, v)) L.var_cap[v] = *c;
  }
  Rational sx = A.shift.get(x);
  if (sx != 0) L.shift.set(z0, sx);
  if (auto c = cap_of(A, x)) L.var_cap[z0] = *c;
  bool nat = natural_on(*f.node(), x);
  if (nat) {
    // (alpha choose m) vanishes beyond natural alpha: z1-degree <= z0-degree
    auto zcap = min_opt(cap_of(A, x), A.grade_bound);
    if (zcap) L.var_cap[z1] = *zcap;
    if (A.grade_bound) L.grade_bound = 2 * *A.grade_bound;
  }
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr blowup_mult(const GpsExpr& f, const std::string& x,
                    const std::string& z0, const std::string& z1) {
  require_var(f, x);
  if (blowup_names_collide(f, x, z0, z1))
    return blowup_via_fresh(f, x, z0, z1, std::nullopt);

  bool z1_classical = f.vars()->is_classical(x);
  auto n = new_node(Kind::BlowM, blowup_vars(f, x, z0, z1, z1_classical));
  n->a = f.node();
  n->v1 = x;
  n->v2 = z0;
  n->v3 = z1;

  const GpsLattice& A = f.lattice();
  GpsLattice L;
  L.denom = A.denom;
  for (const auto& v : f.vars()->names()) {
    if (v == x) continue;
    Rational s = A.shift.get(v);
    if (s != 0) L.shift.set(v, s);
    if (auto c = cap_of(A, v)) L.var_cap[v] = *c;
  }
  for (const auto& z : {z0, z1}) {
    Rational sx = A.shift.get(x);
    if (sx != 0) L.shift.set(z, sx);
    if (auto c = cap_of(A, x)) L.var_cap[z] = *c;
  }
  if (A.grade_bound) L.grade_bound = 2 * *A.grade_bound;
  n->lattice = std::move(L);
  return make_expr(n);
}

// ---- compositions -----------------------------------------------------------

GpsExpr compose_pcomp(const GpsExpr& f, const std::string& x, const GpsExpr& g,
                      const Rational& probe_grade, Budget& b) {
  require_var(f, x);
  if (probe_grade <= 0) throw DomainError("probe grade must be positive");
  for (const auto& v : f.vars()->names())
    if (v != x && g.vars()->has(v))
      throw DomainError("composition with shared variable " + v +
                        " is not supported; reindex first");

  GpsLeadingData cls = g.classify(probe_grade, b);
  if (!cls.p_composable)
    throw DomainError("substituted series is not p-composable within the probe");
  const ExponentVector& abar = *cls.alpha;
  const Rational& k = cls.lead_coeff;

  // h = g / (k z^abar) - 1, infinitesimal by normality
  GpsExpr gdiv = g;
  for (const auto& [w, aw] : abar.entries())
    gdiv = monomial_divide(gdiv, w, aw, probe_grade, b);
  GpsExpr h = add(scalar_mul(Rational(1) / k, gdiv),
                  GpsExpr::constant(g.vars(), -1));
  Rational h_min = probe_grade;  // valid lower bound when nothing is found
  {
    auto pts = h.support_upto(probe_grade, b);
    if (!pts.empty()) h_min = pts.front().first.grade();
    if (h_min <= 0)
      throw DomainError("substituted series is not p-composable within the probe");
  }

  // result variables: f's others (in order), then g's variables
  std::vector<std::string> names;
  std::vector<std::string> classical;
  for (const auto& v : f.vars()->names()) {
    if (v == x) continue;
    names.push_back(v);
    if (f.vars()->is_classical(v)) classical.push_back(v);
  }
  for (const auto& w : g.vars()->names()) {
    names.push_back(w);
    if (g.vars()->is_classical(w)) classical.push_back(w);
  }

  const GpsLattice& A = f.lattice();
  long long D =
      lcm(BigInt(A.denom), denominator(A.shift.get(x))).convert_to<long long>();
  auto root = exact_nth_root(k, static_cast<unsigned long long>(D));
  if (!root)
    throw DomainError("leading coefficient " + to_string(k) +
                      " has no exact " + std::to_string(D) +
                      "-th root over the rationals");

  auto n = new_node(Kind::ComposeP, VariableSet::make(names, classical));
  n->a = f.node();
  n->harg = h.node();
  n->v1 = x;
  n->alpha_bar = abar;
  n->kval = k;
  n->kroot = *root;
  n->kroot_den = D;
  n->min_grade_sub = h_min;

  GpsLattice L;
  BigInt den = lcm(BigInt(A.denom), BigInt(h.lattice().denom));
  for (const auto& v : f.vars()->names()) {
    if (v == x) continue;
    Rational s = A.shift.get(v);
    if (s != 0) L.shift.set(v, s);
    if (auto c = cap_of(A, v)) L.var_cap[v] = *c;
  }
  for (const auto& [w, aw] : abar.entries()) {
    Rational s = aw * A.shift.get(x);
    if (s != 0) L.shift.set(w, s);
    den = lcm(den, denominator(s));
    den = lcm(den, denominator(aw) * A.denom);
  }
  L.denom = den.convert_to<long long>();
  // natural x-exponents cut the binomial tail at m <= alpha, which bounds the
  // grade by bf * max(1, |abar| + bh) when f and h are grade-bounded
  auto bf = effective_grade_bound(A, *f.vars());
  auto bh = effective_grade_bound(h.lattice(), *h.vars());
  if (bf && bh && natural_on(*f.node(), x))
    L.grade_bound = *bf * std::max(Rational(1), abar.grade() + *bh);
  n->lattice = std::move(L);
  return make_expr(n);
}

GpsExpr compose_classical(const GpsExpr& f, const std::string& y, const GpsExpr& g,
                          const Rational& probe_grade, Budget& b) {
  require_var(f, y);
  if (probe_grade <= 0) throw DomainError("probe grade must be positive");
  if (!f.vars()->is_classical(y))
    throw DomainError("naive substitution needs a classical variable: " + y);
  for (const auto& v : f.vars()->names())
    if (v != y && g.vars()->has(v))
      throw DomainError("composition with shared variable " + v +
                        " is not supported; reindex first");

  Budget onestep = Budget::with_default();
  if (g.coeff(ExponentVector{}, onestep) != 0)
    throw DomainError("naive substitution needs an infinitesimal series");
  Rational g_min = probe_grade;
  {
    auto pts = g.support_upto(probe_grade, b);
    if (!pts.empty()) g_min = pts.front().first.grade();
  }

  std::vector<std::string> names;
  std::vector<std::string> classical;
  for (const auto& v : f.vars()->names()) {
    if (v == y) continue;
    names.push_back(v);
    if (f.vars()->is_classical(v)) classical.push_back(v);
  }
  for (const auto& w : g.vars()->names()) {
    names.push_back(w);
    if (g.vars()->is_classical(w)) classical.push_back(w);
  }

  auto n = new_node(Kind::ComposeC, VariableSet::make(names, classical));
  n->a = f.node();
  n->b = g.node();
  n->v1 = y;
  n->min_grade_sub = g_min;

  const GpsLattice& A = f.lattice();
  const GpsLattice& B = g.lattice();
  GpsLattice L;
  L.denom = lcm_ll(A.denom, B.denom);
  for (const auto& v : f.vars()->names()) {
    if (v == y) continue;
    Rational s = A.shift.get(v);
    if (s != 0) L.shift.set(v, s);
    if (auto c = cap_of(A, v)) L.var_cap[v] = *c;
  }
  auto ycap = min_opt(cap_of(A, y), A.grade_bound);
  for (const auto& w : g.vars()->names()) {
    auto cw = cap_of(B, w);
    if (ycap && cw) L.var_cap[w] = *ycap * *cw;
  }
  if (A.grade_bound && B.grade_bound)
    L.grade_bound = *A.grade_bound * std::max(*B.grade_bound, Rational(1));
  n->lattice = std::move(L);
  return make_expr(n);
}

// ---- truncation compatibility of blow-ups -----------------------------------

std::vector<BlowupTruncPiece> trunc_decompose_z1(const GpsExpr& f,
                                                 const std::string& x,
                                                 const std::string& z0,
                                                 const std::string& /*z1*/,
                                                 const Rational& k, unsigned n,
                                                 Budget& b) {
  require_var(f, x);
  if (k <= 0) throw DomainError("affine blow-up needs a positive center");
  // substituting k*z0 for x turns the weighted series into a series in z0
  std::vector<std::string> znames{z0};
  std::vector<std::string> zclassical;
  if (f.vars()->is_classical(x)) zclassical.push_back(z0);
  auto zvars = VariableSet::make(znames, zclassical);
  GpsExpr center = scalar_mul(k, GpsExpr::variable(zvars, z0));

  std::vector<BlowupTruncPiece> out;
  for (unsigned m = 0; m < n; ++m) {
    GpsExpr weighted = euler_binomial(f, x, m);
    GpsExpr series = compose_pcomp(weighted, x, center, Rational(2), b);
    out.push_back(BlowupTruncPiece{m, pow_int(k, -static_cast<long long>(m)),
                                   std::move(series)});
  }
  return out;
}

GpsExpr trunc_decompose_z0(const GpsExpr& f, const std::string& x,
                           const Rational& alpha) {
  require_var(f, x);
  GpsFragmentSpec spec;
  spec.per_var[x] = Interval<Rational>{std::nullopt, alpha, true, false};
  return fragment_gps(f, std::move(spec));
}

}  // namespace hahnforge

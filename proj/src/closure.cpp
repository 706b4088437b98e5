#include "hahnforge/closure.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

namespace hahnforge {

namespace {

std::string rat_str(const Rational& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

/// Canonical key of a probed term list; two elements share a key exactly when
/// they are threshold-equal down to the probe depth (and agree on whether the
/// probe proved exhaustion).
std::string signature_key(const std::vector<Term>& terms, bool exhausted) {
  std::ostringstream os;
  for (const auto& t : terms) os << t.mono.to_string() << ':' << t.coeff << ';';
  os << (exhausted ? '!' : '+');
  return os.str();
}

Monomial midpoint(const Monomial& a, const Monomial& b) {
  std::vector<Rational> e;
  e.reserve(a.exponents().size());
  for (std::size_t i = 0; i < a.exponents().size(); ++i)
    e.push_back((a.exponents()[i] + b.exponents()[i]) / 2);
  return Monomial(a.group(), std::move(e));
}

/// Support monomials of a probed prefix plus midpoints of adjacent pairs:
/// truncating at a non-support point gives the same series as truncating at
/// the nearest support point below it, so these cuts probe every distinct
/// truncation the prefix can see.
std::vector<Monomial> default_probes(const std::vector<Term>& signature) {
  std::vector<Monomial> out;
  std::set<std::string> seen;
  auto push = [&](const Monomial& m) {
    if (seen.insert(m.to_string()).second) out.push_back(m);
  };
  for (const auto& t : signature) push(t.mono);
  for (std::size_t i = 0; i + 1 < signature.size(); ++i)
    push(midpoint(signature[i].mono, signature[i + 1].mono));
  return out;
}

/// Every language member must be a series in exactly one non-classical
/// variable; returns the variable names, member by member.
std::vector<std::string> member_variables(const LanguageF& F) {
  std::vector<std::string> out;
  for (const auto& g : F.generators) {
    const auto& names = g.series.vars()->names();
    if (names.size() != 1)
      throw DomainError("language member '" + g.name +
                        "' must have exactly one variable");
    if (g.series.vars()->is_classical(names[0]))
      throw DomainError("language member '" + g.name +
                        "' must have a non-classical variable");
    out.push_back(names[0]);
  }
  return out;
}

/// Rebuilds the value of one stored expression from already-built operand
/// values. Used both during generation and by checker workers, which
/// evaluate private clones so that stream memoization stays thread-local.
HahnSeries build_value(const GenExpr& e, const std::vector<HahnSeries>& vals,
                       const std::vector<std::vector<Term>>& base_terms,
                       const std::vector<GpsExpr>& members,
                       const std::vector<std::string>& member_vars,
                       const GroupPtr& group) {
  switch (e.kind) {
    case GenExpr::Kind::Base:
      return HahnSeries::from_terms(group, base_terms.at(e.base));
    case GenExpr::Kind::Scalar:
      return HahnSeries::constant(group, e.scalar);
    case GenExpr::Kind::Mono:
      return HahnSeries::monomial_term(*e.mono, Rational(1));
    case GenExpr::Kind::Sum:
      return add(vals.at(e.a), vals.at(e.b));
    case GenExpr::Kind::Product:
      return mul(vals.at(e.a), vals.at(e.b));
    case GenExpr::Kind::Apply: {
      InterpretAssignment asg;
      asg.values.emplace(member_vars.at(e.member), vals.at(e.a));
      return interpret(members.at(e.member), asg, group);
    }
  }
  throw DomainError("unknown expression kind");
}

}  // namespace

// ---- language rules ---------------------------------------------------------

SetOracle language_atom_oracle(const LanguageFlags& flags) {
  return [flags](const AtomCert& cert) {
    if (cert.uses_derivative && !flags.renorm_derivative) return false;
    if (cert.uses_truncation && !flags.partial_truncation) return false;
    if (cert.uses_ring && !flags.ring) return false;
    return true;  // monomial scaling is part of the module structure
  };
}

// ---- blow-up extension ------------------------------------------------------

LanguageF make_Fb(LanguageF F) {
  if (!F.flags.ring)
    throw DomainError("blow-up extension needs the ring closure rule");
  if (!F.flags.blowups)
    throw DomainError("blow-up extension needs the blow-up closure rule");
  F.blowup_extended = true;
  return F;
}

namespace {

/// Shared walk of a membership candidate: applies the steps one by one,
/// validating each structurally; reports the first violation.
std::optional<GpsExpr> fb_walk(const LanguageF& Fb, const FbCandidate& cand,
                               Budget& b, std::string* why) {
  auto fail = [&](const std::string& msg) -> std::optional<GpsExpr> {
    if (why) *why = msg;
    return std::nullopt;
  };
  if (cand.base >= Fb.generators.size()) return fail("base index out of range");
  if (!cand.steps.empty() && !Fb.blowup_extended)
    return fail("language is not blow-up extended");
  GpsExpr cur = Fb.generators[cand.base].series;
  for (const auto& step : cand.steps) {
    if (!cur.vars()->has(step.x))
      return fail("step substitutes '" + step.x + "', not a variable here");
    switch (step.kind) {
      case FbStep::Kind::Affine:
        if (cur.vars()->has(step.z0) || cur.vars()->has(step.z1) ||
            step.z0 == step.z1)
          return fail("blow-up variables must be fresh and distinct");
        if (step.k < 0) return fail("affine blow-up center must be >= 0");
        try {
          cur = step.k == 0 ? blowup_mult(cur, step.x, step.z0, step.z1)
                            : blowup_affine(cur, step.x, step.z0, step.z1,
                                            step.k);
        } catch (const DomainError& e) {
          return fail(e.what());
        }
        break;
      case FbStep::Kind::Mult:
        if (cur.vars()->has(step.z0) || cur.vars()->has(step.z1) ||
            step.z0 == step.z1)
          return fail("blow-up variables must be fresh and distinct");
        try {
          cur = blowup_mult(cur, step.x, step.z0, step.z1);
        } catch (const DomainError& e) {
          return fail(e.what());
        }
        break;
      case FbStep::Kind::PComp: {
        if (!step.p) return fail("polynomial step carries no series");
        Rational probe_grade =
            step.p->lattice().grade_bound.value_or(Rational(8));
        GpsLeadingData data = step.p->classify(probe_grade, b);
        if (!data.p_composable)
          return fail("substituted series is not composable");
        for (const auto& pt : step.p->support_upto(probe_grade, b))
          if (pt.second <= 0)
            return fail("substituted series has a non-positive coefficient");
        try {
          cur = compose_pcomp(cur, step.x, *step.p, probe_grade, b);
        } catch (const DomainError& e) {
          return fail(e.what());
        }
        break;
      }
    }
  }
  return cur;
}

}  // namespace

bool fb_member(const LanguageF& Fb, const FbCandidate& cand, Budget& b) {
  return fb_walk(Fb, cand, b, nullptr).has_value();
}

GpsExpr fb_realize(const LanguageF& Fb, const FbCandidate& cand, Budget& b) {
  std::string why;
  auto r = fb_walk(Fb, cand, b, &why);
  if (!r) throw DomainError("candidate is not a language member: " + why);
  return *r;
}

// ---- monomial instantiation -------------------------------------------------

std::vector<Rps> make_FM(
    const LanguageF& F, GroupPtr group,
    const std::vector<std::map<std::string, Monomial>>& assignments,
    unsigned frag_cap) {
  std::vector<std::string> vars = member_variables(F);

  // Close the member pool under the constructions the flags grant: the
  // renormalized derivative and the grade windows below each lattice point.
  std::vector<std::pair<GpsExpr, std::string>> pool;
  for (std::size_t i = 0; i < F.generators.size(); ++i) {
    const GpsExpr& f = F.generators[i].series;
    const std::string& x = vars[i];
    pool.emplace_back(f, x);
    if (F.flags.renorm_derivative) pool.emplace_back(renorm_derivative(f, x), x);
    if (F.flags.partial_truncation) {
      const GpsLattice& lat = f.lattice();
      Rational shift = lat.shift.get(x);
      for (long long j = 0;; ++j) {
        Rational gamma = shift + Rational(j) / lat.denom;
        if (gamma > Rational(static_cast<long long>(frag_cap))) break;
        if (gamma <= 0) continue;
        GpsFragmentSpec spec;
        spec.per_var[x] =
            Interval<Rational>{std::nullopt, gamma, true, false};
        pool.emplace_back(fragment_gps(f, spec), x);
      }
    }
  }

  std::vector<Rps> out;
  for (const auto& asg : assignments) {
    for (const auto& [name, mono] : asg)
      if (!(mono < Monomial::one(group)))
        throw DomainError("assignment for '" + name +
                          "' is not below the identity");
    for (const auto& [f, x] : pool) {
      auto it = asg.find(x);
      if (it == asg.end())
        throw DomainError("assignment does not cover variable '" + x + "'");
      std::map<std::string, Rational> a{{x, Rational(1)}};
      std::map<std::string, Monomial> m{{x, it->second}};
      out.push_back(from_gps(f, a, m, group));
    }
  }
  return out;
}

// ---- generation -------------------------------------------------------------

nlohmann::json GeneratedSet::expr_json(std::size_t id) const {
  const GenExpr& e = elements.at(id).expr;
  nlohmann::json j;
  j["id"] = id;
  j["depth"] = e.depth;
  switch (e.kind) {
    case GenExpr::Kind::Base:
      j["kind"] = "base";
      j["index"] = e.base;
      break;
    case GenExpr::Kind::Scalar:
      j["kind"] = "scalar";
      j["value"] = rat_str(e.scalar);
      break;
    case GenExpr::Kind::Mono:
      j["kind"] = "monomial";
      j["value"] = e.mono->to_string();
      break;
    case GenExpr::Kind::Sum:
      j["kind"] = "sum";
      j["a"] = e.a;
      j["b"] = e.b;
      break;
    case GenExpr::Kind::Product:
      j["kind"] = "product";
      j["a"] = e.a;
      j["b"] = e.b;
      break;
    case GenExpr::Kind::Apply:
      j["kind"] = "apply";
      j["member"] = language.generators.at(e.member).name;
      j["arg"] = e.a;
      break;
  }
  return j;
}

GeneratedSet generate(const std::vector<HahnSeries>& X, const LanguageF& F,
                      GroupPtr group, const std::vector<Monomial>& mono_pool,
                      const std::vector<Rational>& scalar_pool, unsigned depth,
                      Budget& b, const GenerateOptions& opts) {
  std::vector<std::string> member_vars = member_variables(F);
  std::vector<GpsExpr> members;
  for (const auto& g : F.generators) members.push_back(g.series);

  GeneratedSet G{group,       F,  {}, mono_pool, scalar_pool,
                 depth,       opts.probe_depth,
                 {},          {}, {}};

  // The base set must enumerate fully: its members are the ground truth the
  // truncation-closure precheck and the direct-lookup witnesses compare to.
  for (const auto& x : X) {
    Budget bx(opts.candidate_budget);
    HahnSeries::Probe p{{}, false};
    try {
      p = x.probe(static_cast<std::size_t>(opts.candidate_budget), bx);
    } catch (const BudgetExhaustedError&) {
      throw DomainError(
          "base set element does not enumerate within the candidate budget");
    }
    if (!p.exhausted)
      throw DomainError(
          "base set element does not enumerate within the candidate budget");
    G.base_terms.push_back(std::move(p.terms));
  }

  // Truncation-closure precheck of the base set: cutting any element at any
  // of its support points or midpoints must land back in the base set.
  auto trunc_above = [](const std::vector<Term>& terms, const Monomial& m) {
    std::vector<Term> out;
    for (const auto& t : terms) {
      if (!(t.mono > m)) break;
      out.push_back(t);
    }
    return out;
  };
  auto same_terms = [](const std::vector<Term>& u, const std::vector<Term>& v) {
    if (u.size() != v.size()) return false;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i].mono != v[i].mono || u[i].coeff != v[i].coeff) return false;
    return true;
  };
  for (const auto& terms : G.base_terms) {
    std::vector<Monomial> cuts;
    for (const auto& t : terms) cuts.push_back(t.mono);
    for (std::size_t i = 0; i + 1 < terms.size(); ++i)
      cuts.push_back(midpoint(terms[i].mono, terms[i + 1].mono));
    for (const auto& c : cuts) {
      auto tt = trunc_above(terms, c);
      if (tt.empty()) continue;
      bool found = false;
      for (const auto& other : G.base_terms)
        if (same_terms(tt, other)) {
          found = true;
          break;
        }
      if (!found)
        throw DomainError("base set is not truncation-closed at cut " +
                          c.to_string());
    }
  }

  std::vector<HahnSeries> vals;  // parallel to G.elements
  auto add_candidate = [&](GenExpr e) {
    b.step("closure generation");
    if (G.elements.size() >= opts.max_elements)
      throw BudgetExhaustedError("generated set exceeds max_elements");
    G.stats.candidates++;
    HahnSeries::Probe p{{}, false};
    try {
      HahnSeries v =
          build_value(e, vals, G.base_terms, members, member_vars, group);
      Budget bs(opts.candidate_budget);
      p = v.probe(opts.probe_depth, bs);
      std::string key = signature_key(p.terms, p.exhausted);
      if (G.signature_index.count(key)) {
        G.stats.deduplicated++;
        return;
      }
      G.signature_index.emplace(key, G.elements.size());
      G.elements.push_back(
          GeneratedElement{e, v, std::move(p.terms), p.exhausted});
      vals.push_back(G.elements.back().value);
    } catch (const BudgetExhaustedError&) {
      G.stats.dropped_budget++;
    } catch (const DomainError&) {
      G.stats.dropped_domain++;
    }
  };

  for (std::size_t i = 0; i < G.base_terms.size(); ++i)
    add_candidate(GenExpr{GenExpr::Kind::Base, i, Rational(0), std::nullopt, 0,
                          0, 0, 0});
  for (const auto& c : scalar_pool)
    add_candidate(
        GenExpr{GenExpr::Kind::Scalar, 0, c, std::nullopt, 0, 0, 0, 0});
  for (const auto& m : mono_pool)
    add_candidate(GenExpr{GenExpr::Kind::Mono, 0, Rational(0), m, 0, 0, 0, 0});

  for (unsigned level = 1; level <= depth; ++level) {
    std::size_t n_prev = G.elements.size();
    for (auto kind : {GenExpr::Kind::Sum, GenExpr::Kind::Product})
      for (std::size_t i = 0; i < n_prev; ++i)
        for (std::size_t j = i; j < n_prev; ++j) {
          unsigned d = std::max(G.elements[i].expr.depth,
                                G.elements[j].expr.depth);
          if (d != level - 1) continue;
          add_candidate(
              GenExpr{kind, 0, Rational(0), std::nullopt, i, j, 0, level});
        }
    for (std::size_t mem = 0; mem < members.size(); ++mem)
      for (std::size_t i = 0; i < n_prev; ++i) {
        if (G.elements[i].expr.depth != level - 1) continue;
        // Language applications require a positive infinitesimal argument in
        // normal form; anything else is silently skipped.
        try {
          Budget bn(opts.candidate_budget);
          auto nf = normal_decompose(vals[i], bn);
          if (!nf || nf->scale <= 0 || !(nf->mono < Monomial::one(group))) {
            G.stats.dropped_domain++;
            continue;
          }
        } catch (const BudgetExhaustedError&) {
          G.stats.dropped_budget++;
          continue;
        }
        add_candidate(GenExpr{GenExpr::Kind::Apply, 0, Rational(0),
                              std::nullopt, i, 0, mem, level});
      }
  }
  return G;
}

// ---- truncation-closure checking --------------------------------------------

std::string to_string(WitnessStatus s) {
  switch (s) {
    case WitnessStatus::Witnessed:
      return "witnessed";
    case WitnessStatus::Failed:
      return "failed";
    case WitnessStatus::Budget:
      return "budget";
  }
  return "unknown";
}

nlohmann::json ClosureReport::to_json(const GeneratedSet* G) const {
  nlohmann::json j;
  j["probe_depth"] = probe_depth;
  j["witnessed"] = witnessed;
  j["failed"] = failed;
  j["budget"] = budget;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json je;
    je["element_id"] = e.element_id;
    je["probe"] = e.probe;
    je["status"] = to_string(e.status);
    je["probe_depth"] = probe_depth;
    if (e.witness) je["witness"] = *e.witness;
    if (!e.note.empty()) je["note"] = e.note;
    if (G) je["expression"] = G->expr_json(e.element_id);
    j["entries"].push_back(std::move(je));
  }
  return j;
}

namespace {

/// One worker's private view of the generated set: cloned language members
/// and values rebuilt bottom-up from the stored expressions, so that every
/// stream memo it fills is confined to its own thread.
struct Checker {
  const GeneratedSet& G;
  GroupPtr group;
  LanguageFlags flags;
  std::vector<GpsExpr> members;
  std::vector<std::string> member_vars;
  std::vector<HahnSeries> vals;
  unsigned probe_depth;
  std::int64_t pair_budget;

  struct CWit {
    nlohmann::json j;
    HahnSeries val;
  };
  std::map<std::string, CWit> memo;

  explicit Checker(const GeneratedSet& g, const CheckOptions& opts)
      : G(g),
        group(g.group),
        flags(g.language.flags),
        probe_depth(opts.probe_depth),
        pair_budget(opts.pair_budget) {
    for (const auto& m : g.language.generators)
      members.push_back(clone_unmemoized(m.series));
    member_vars = member_variables(g.language);
    for (const auto& el : g.elements)
      vals.push_back(build_value(el.expr, vals, g.base_terms, members,
                                 member_vars, group));
  }

  CWit wit(std::size_t id, const Monomial& m, Budget& b, int guard) {
    if (guard > 64) throw Error("witness recursion too deep");
    std::string key = std::to_string(id) + '|' + m.to_string();
    auto hit = memo.find(key);
    if (hit != memo.end()) return hit->second;
    CWit w = wit_uncached(id, m, b, guard);
    memo.emplace(key, w);
    return w;
  }

  CWit zero_wit() const {
    return CWit{nlohmann::json{{"kind", "zero"}}, HahnSeries::zero(group)};
  }

  CWit wit_uncached(std::size_t id, const Monomial& m, Budget& b, int guard) {
    HahnSeries T = truncate(vals[id], m);
    auto pt = T.probe(probe_depth, b);
    if (pt.terms.empty() && pt.exhausted) return zero_wit();

    // Direct lookup: an existing element with the same probed signature is
    // threshold-equal to the truncation down to the probe depth.
    auto found = G.signature_index.find(signature_key(pt.terms, pt.exhausted));
    if (found != G.signature_index.end())
      return CWit{nlohmann::json{{"kind", "element"}, {"id", found->second}},
                  vals[found->second]};

    const GenExpr& e = G.elements[id].expr;
    switch (e.kind) {
      case GenExpr::Kind::Base:
      case GenExpr::Kind::Scalar:
      case GenExpr::Kind::Mono:
        throw DomainError(
            "truncated leaf element matches no element of the set");
      case GenExpr::Kind::Sum: {
        CWit wa = wit(e.a, m, b, guard + 1);
        CWit wb = wit(e.b, m, b, guard + 1);
        return CWit{nlohmann::json{{"kind", "sum"},
                                   {"parts", {wa.j, wb.j}}},
                    add(wa.val, wb.val)};
      }
      case GenExpr::Kind::Product:
        return product_wit(e, m, b, guard);
      case GenExpr::Kind::Apply:
        return apply_wit(e, m, b, guard);
    }
    throw DomainError("unknown expression kind");
  }

  /// Rewrites the truncated product as a finite sum of pieces
  /// (truncation of the left factor) * (block of the right factor), then
  /// witnesses each truncation recursively. Factors are pre-truncated at
  /// m / lead(other): terms below that cannot reach above m.
  CWit product_wit(const GenExpr& e, const Monomial& m, Budget& b, int guard) {
    auto la = vals[e.a].leading_term(b);
    auto lb = vals[e.b].leading_term(b);
    if (!la || !lb) return zero_wit();
    Monomial ca = m.mul(lb->mono.inverse());
    Monomial cb = m.mul(la->mono.inverse());
    Rps fa = Rps::constant(std::vector<std::string>{}, group,
                           truncate(vals[e.a], ca));
    Rps fb = Rps::constant(std::vector<std::string>{}, group,
                           truncate(vals[e.b], cb));
    TcProductDecomposition dec = tc_product_decompose(fa, fb, m, b);
    if (dec.cuts.empty()) return zero_wit();
    nlohmann::json parts = nlohmann::json::array();
    std::vector<HahnSeries> piece_vals;
    for (const auto& cut : dec.cuts) {
      CWit wf = wit(e.a, cut.f_cut ? *cut.f_cut : ca, b, guard + 1);
      CWit wlo = wit(e.b, cut.g_lo ? *cut.g_lo : cb, b, guard + 1);
      CWit whi = wit(e.b, cut.g_hi, b, guard + 1);
      nlohmann::json block{{"kind", "difference"}, {"a", wlo.j}, {"b", whi.j}};
      parts.push_back(nlohmann::json{
          {"kind", "product"}, {"a", wf.j}, {"b", std::move(block)}});
      piece_vals.push_back(mul(wf.val, sub(wlo.val, whi.val)));
    }
    if (parts.size() == 1)
      return CWit{parts[0], std::move(piece_vals[0])};
    return CWit{nlohmann::json{{"kind", "sum"}, {"parts", std::move(parts)}},
                add_many(std::move(piece_vals), group)};
  }

  /// Truncated language application f(arg). When the argument is exactly a
  /// scaled monomial k*mono, the truncation is the application of a partial
  /// truncation (an exponent window) of the member itself. In general the
  /// argument is rewritten through its normal form mono*(k + eps) and the
  /// truncated composition is certified atom by atom; the language rules
  /// decide which derived atoms the certificates may use.
  CWit apply_wit(const GenExpr& e, const Monomial& m, Budget& b,
                 int /*guard*/) {
    const std::string& x = member_vars[e.member];
    const std::string& name = G.language.generators[e.member].name;
    auto nf = normal_decompose(vals[e.a], b);
    if (!nf) throw DomainError("language application of a zero argument");

    bool tail_zero = false;
    {
      auto pe = nf->tail_over_mono.probe(1, b);
      tail_zero = pe.terms.empty() && pe.exhausted;
    }
    if (tail_zero && flags.partial_truncation) {
      // Support points are mono^gamma over the member's exponent lattice,
      // strictly decreasing in gamma; find the first lattice point at or
      // below the cut. No such point can exist only when mono's class is
      // finer than the cut's, and then the truncation keeps everything and
      // the direct lookup above already resolved it.
      const GpsLattice& lat = members[e.member].lattice();
      Rational shift = lat.shift.get(x);
      std::optional<Rational> s_star;
      for (long long j = 0; j < 4096; ++j) {
        b.step("fragment scan");
        Rational gamma = shift + Rational(j) / lat.denom;
        if (nf->mono.pow(gamma) <= m) {
          s_star = gamma;
          break;
        }
        if (nf->mono.arch_class() > m.arch_class()) break;
      }
      if (s_star) {
        GpsFragmentSpec spec;
        spec.per_var[x] =
            Interval<Rational>{std::nullopt, *s_star, true, false};
        GpsExpr frag = fragment_gps(members[e.member], spec);
        InterpretAssignment asg;
        asg.values.emplace(x, vals[e.a]);
        return CWit{nlohmann::json{{"kind", "member_fragment"},
                                   {"member", name},
                                   {"var", x},
                                   {"exponent_lt", rat_str(*s_star)},
                                   {"arg", e.a}},
                    interpret(frag, asg, group)};
      }
    }

    Rps R = from_gps(members[e.member], {{x, nf->scale}}, {{x, nf->mono}},
                     group);
    // Before asking for a truncation witness, discard the parts of both
    // inputs that cannot reach the threshold; this keeps every support the
    // witness search enumerates finite.
    //   - A coefficient term of the re-expanded member at or below m only
    //     multiplies argument factors below the identity, so its products
    //     stay at or below m and the m-truncation drops them.  This uses the
    //     language's truncation rules, so it is only done when they are on.
    //   - A term of the argument tail at point s only appears in composed
    //     terms bounded by mono^shift * s, where shift is the smallest
    //     exponent of the member's lattice; when that bound is at or below m
    //     the term cannot contribute either.
    if (flags.partial_truncation) R = coeff_trunc(R, m);
    const Rational lat_shift = members[e.member].lattice().shift.get(x);
    const Monomial eps_cut = m.mul(nf->mono.pow(lat_shift).inverse());
    HahnSeries eps_over_k = truncate(
        scalar_mul(Rational(1) / nf->scale, nf->tail_over_mono), eps_cut);
    std::map<std::string, Rps> args{
        {x, Rps::constant(std::vector<std::string>{}, group, eps_over_k)}};
    WitnessExpr w = tc_composition_witness(R, args, m,
                                           language_atom_oracle(flags),
                                           accept_all_atoms(), b);
    Rps ev = w.eval(std::vector<std::string>{}, group, b);
    return CWit{nlohmann::json{{"kind", "composition"},
                               {"member", name},
                               {"arg", e.a},
                               {"witness", w.to_json()}},
                ev.coeff(MultiIndex{})};
  }

  ClosureEntry run_pair(std::size_t id, const Monomial& m) {
    ClosureEntry entry;
    entry.element_id = id;
    entry.probe = m.to_string();
    Budget b(pair_budget);
    try {
      CWit w = wit(id, m, b, 0);
      HahnSeries T = truncate(vals[id], m);
      auto pt = T.probe(probe_depth, b);
      auto pw = w.val.probe(probe_depth, b);
      bool match = pt.terms.size() == pw.terms.size();
      std::size_t n = std::min(pt.terms.size(), pw.terms.size());
      for (std::size_t i = 0; match && i < n; ++i)
        match = pt.terms[i].mono == pw.terms[i].mono &&
                pt.terms[i].coeff == pw.terms[i].coeff;
      if (match) {
        entry.status = WitnessStatus::Witnessed;
        entry.witness = std::move(w.j);
      } else {
        entry.status = WitnessStatus::Failed;
        entry.note = "witness evaluation differs from the truncation";
      }
    } catch (const OracleRefusalError& ex) {
      entry.status = WitnessStatus::Failed;
      entry.note = std::string("construction refused by the language rules: ") +
                   ex.what();
    } catch (const BudgetExhaustedError& ex) {
      entry.status = WitnessStatus::Budget;
      entry.note = ex.what();
    } catch (const Error& ex) {
      entry.status = WitnessStatus::Failed;
      entry.note = ex.what();
    }
    return entry;
  }
};

}  // namespace

ClosureReport check_truncation_closed(const GeneratedSet& G,
                                      const CheckOptions& opts) {
  // The pair list is derived from stored signatures only, so it can be laid
  // out before any worker touches a stream.
  std::vector<std::pair<std::size_t, Monomial>> pairs;
  for (std::size_t id = 0; id < G.elements.size(); ++id) {
    std::vector<Monomial> probes =
        opts.probes ? *opts.probes : default_probes(G.elements[id].signature);
    for (const auto& m : probes) pairs.emplace_back(id, m);
  }

  ClosureReport report;
  report.probe_depth = opts.probe_depth;
  report.entries.resize(pairs.size());

  unsigned hw = std::thread::hardware_concurrency();
  unsigned workers = opts.workers ? opts.workers : std::min(hw ? hw : 1u, 8u);
  if (workers > G.elements.size() && !G.elements.empty())
    workers = static_cast<unsigned>(G.elements.size());
  if (workers == 0) workers = 1;

  auto body = [&](unsigned w) {
    try {
      Checker checker(G, opts);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].first % workers != w) continue;
        report.entries[i] = checker.run_pair(pairs[i].first, pairs[i].second);
      }
    } catch (const std::exception& ex) {
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].first % workers != w) continue;
        report.entries[i].element_id = pairs[i].first;
        report.entries[i].probe = pairs[i].second.to_string();
        report.entries[i].status = WitnessStatus::Failed;
        report.entries[i].note = std::string("worker error: ") + ex.what();
      }
    }
  };

  if (workers <= 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(body, w);
    for (auto& t : threads) t.join();
  }

  for (const auto& e : report.entries) {
    switch (e.status) {
      case WitnessStatus::Witnessed:
        report.witnessed++;
        break;
      case WitnessStatus::Failed:
        report.failed++;
        break;
      case WitnessStatus::Budget:
        report.budget++;
        break;
    }
  }
  return report;
}

ClosureReport check_truncation_closed(const GeneratedSet& G,
                                      const std::vector<Monomial>& probes,
                                      unsigned probe_depth) {
  CheckOptions opts;
  opts.probe_depth = probe_depth;
  opts.probes = probes;
  return check_truncation_closed(G, opts);
}

}  // namespace hahnforge

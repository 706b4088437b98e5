#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hahnforge/closure.hpp"

using namespace hahnforge;

namespace {

GroupPtr rank1() { return MonomialGroup::make({"t"}); }
GroupPtr rank2() { return MonomialGroup::make({"u", "t"}); }

Rational Q(long long n, long long d = 1) { return Rational(n, d); }

Monomial tp(const GroupPtr& g, const Rational& e) {
  std::vector<Rational> v(static_cast<std::size_t>(g->rank()), Rational(0));
  v.back() = e;
  return Monomial(g, std::move(v));
}

Monomial mono2(const GroupPtr& g, const Rational& eu, const Rational& et) {
  return Monomial(g, {eu, et});
}

HahnSeries finite(const GroupPtr& g,
                  std::vector<std::pair<Rational, Rational>> expcoeff) {
  std::vector<Term> terms;
  for (auto& [e, c] : expcoeff) terms.push_back({tp(g, e), c});
  return HahnSeries::from_terms(g, std::move(terms));
}

HahnSeries finite2(const GroupPtr& g,
                   std::vector<std::pair<Monomial, Rational>> terms_in) {
  std::vector<Term> terms;
  for (auto& [m, c] : terms_in) terms.push_back({m, c});
  return HahnSeries::from_terms(g, std::move(terms));
}

VarsPtr V1(const std::string& name) { return VariableSet::make({name}, {}); }

LanguageF geom_lang(LanguageFlags flags = {}) {
  LanguageF F;
  F.generators.push_back({"geom", GpsExpr::geometric(V1("x"), "x")});
  F.flags = flags;
  return F;
}

/// Integer binomial coefficient, Pascal style.
Rational nat_binom(unsigned long long n, unsigned long long k) {
  if (k > n) return Rational(0);
  Rational r(1);
  for (unsigned long long i = 0; i < k; ++i)
    r = r * Rational(static_cast<long long>(n - i)) /
        Rational(static_cast<long long>(i + 1));
  return r;
}

MultiIndex xi(unsigned long long e) {
  MultiIndex m;
  m.set("x", e);
  return m;
}

/// First `n` terms of a series against expected (monomial, coefficient) pairs.
void expect_prefix(const HahnSeries& f,
                   const std::vector<std::pair<Monomial, Rational>>& expected,
                   bool expect_exhausted) {
  Budget b(200000);
  auto p = f.probe(expected.size() + (expect_exhausted ? 1 : 0), b);
  REQUIRE(p.terms.size() >= expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(p.terms[i].mono == expected[i].first);
    CHECK(p.terms[i].coeff == expected[i].second);
  }
  if (expect_exhausted) {
    CHECK(p.terms.size() == expected.size());
    CHECK(p.exhausted);
  }
}

/// Locates the element whose stored signature starts with the given terms.
std::optional<std::size_t> find_elem(
    const GeneratedSet& G,
    const std::vector<std::pair<Monomial, Rational>>& prefix) {
  for (std::size_t i = 0; i < G.elements.size(); ++i) {
    const auto& sig = G.elements[i].signature;
    if (sig.size() < prefix.size()) continue;
    bool ok = true;
    for (std::size_t k = 0; k < prefix.size() && ok; ++k)
      ok = sig[k].mono == prefix[k].first && sig[k].coeff == prefix[k].second;
    if (ok && (prefix.size() == sig.size() || prefix.size() > 0)) return i;
  }
  return std::nullopt;
}

bool same_sig(const std::vector<Term>& a, const std::vector<Term>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].mono != b[i].mono || a[i].coeff != b[i].coeff) return false;
  return true;
}

}  // namespace

// ---- blow-up extended membership --------------------------------------------

TEST_CASE("blow-up membership follows the step rules") {
  LanguageF F = geom_lang();
  LanguageF Fb = make_Fb(F);
  CHECK(Fb.blowup_extended);
  Budget b(500000);

  SUBCASE("affine substitution with unit constant") {
    FbCandidate cand{0, {FbStep{FbStep::Kind::Affine, "x", "z0", "z1", Q(1), {}}}};
    CHECK(fb_member(Fb, cand, b));
    GpsExpr r = fb_realize(Fb, cand, b);
    // geom = sum x^a; x := z0*(z1 + 1) contributes binom(a, m) z0^a z1^m.
    ExponentVector e;
    e.set("z0", Q(1));
    CHECK(r.coeff(e, b) == 1);
    e.set("z1", Q(1));
    CHECK(r.coeff(e, b) == 1);
    e.set("z0", Q(2));
    CHECK(r.coeff(e, b) == 2);
  }

  SUBCASE("affine substitution with constant two") {
    FbCandidate cand{0, {FbStep{FbStep::Kind::Affine, "x", "z0", "z1", Q(2), {}}}};
    CHECK(fb_member(Fb, cand, b));
    GpsExpr r = fb_realize(Fb, cand, b);
    // Coefficient of z0^a z1^m is binom(a, m) 2^(a-m).
    ExponentVector e;
    e.set("z0", Q(1));
    CHECK(r.coeff(e, b) == 2);
    e.set("z0", Q(2));
    e.set("z1", Q(1));
    CHECK(r.coeff(e, b) == 4);  // binom(2,1) * 2
  }

  SUBCASE("negative affine constants are rejected") {
    FbCandidate cand{0, {FbStep{FbStep::Kind::Affine, "x", "z0", "z1", Q(-1), {}}}};
    CHECK_FALSE(fb_member(Fb, cand, b));
    CHECK_THROWS_AS(fb_realize(Fb, cand, b), DomainError);
  }

  SUBCASE("multiplicative substitution has diagonal support") {
    FbCandidate cand{0, {FbStep{FbStep::Kind::Mult, "x", "z0", "z1", Q(0), {}}}};
    CHECK(fb_member(Fb, cand, b));
    GpsExpr r = fb_realize(Fb, cand, b);
    ExponentVector e;
    e.set("z0", Q(2));
    e.set("z1", Q(2));
    CHECK(r.coeff(e, b) == 1);
    e.set("z1", Q(1));
    CHECK(r.coeff(e, b) == 0);
  }

  SUBCASE("steps chain left to right") {
    FbCandidate cand{0,
                     {FbStep{FbStep::Kind::Affine, "x", "z0", "z1", Q(1), {}},
                      FbStep{FbStep::Kind::Mult, "z0", "w0", "w1", Q(0), {}}}};
    CHECK(fb_member(Fb, cand, b));
  }

  SUBCASE("fresh names must be fresh and distinct") {
    CHECK_FALSE(fb_member(
        Fb, {0, {FbStep{FbStep::Kind::Affine, "x", "x", "z1", Q(1), {}}}}, b));
    CHECK_FALSE(fb_member(
        Fb, {0, {FbStep{FbStep::Kind::Affine, "x", "z", "z", Q(1), {}}}}, b));
  }

  SUBCASE("polynomial substitution needs positive composable shape") {
    VarsPtr vz = V1("z");
    GpsExpr good = add(GpsExpr::variable(vz, "z"),
                       mul(GpsExpr::variable(vz, "z"), GpsExpr::variable(vz, "z")));
    GpsExpr mixed_sign =
        sub(GpsExpr::variable(vz, "z"),
            mul(GpsExpr::variable(vz, "z"), GpsExpr::variable(vz, "z")));
    GpsExpr flat = GpsExpr::constant(vz, 2);
    CHECK(fb_member(Fb, {0, {FbStep{FbStep::Kind::PComp, "x", "", "", Q(0), good}}},
                    b));
    CHECK_FALSE(fb_member(
        Fb, {0, {FbStep{FbStep::Kind::PComp, "x", "", "", Q(0), mixed_sign}}}, b));
    CHECK_FALSE(fb_member(
        Fb, {0, {FbStep{FbStep::Kind::PComp, "x", "", "", Q(0), flat}}}, b));
  }

  SUBCASE("plain languages admit bases but no steps") {
    CHECK(fb_member(F, {0, {}}, b));
    CHECK_FALSE(fb_member(
        F, {0, {FbStep{FbStep::Kind::Mult, "x", "z0", "z1", Q(0), {}}}}, b));
  }

  SUBCASE("the extension requires the ring and blow-up rules") {
    LanguageFlags no_ring;
    no_ring.ring = false;
    CHECK_THROWS_AS(make_Fb(geom_lang(no_ring)), DomainError);
    LanguageFlags no_blow;
    no_blow.blowups = false;
    CHECK_THROWS_AS(make_Fb(geom_lang(no_blow)), DomainError);
  }
}

// ---- monomial instantiation -------------------------------------------------

TEST_CASE("language instantiation at monomial arguments") {
  GroupPtr g = rank1();
  const Monomial t = tp(g, 1);

  SUBCASE("geometric member re-expands binomially") {
    LanguageFlags fl;
    fl.renorm_derivative = false;
    fl.partial_truncation = false;
    LanguageF F = geom_lang(fl);
    auto out = make_FM(F, g, {{{"x", t}}});
    REQUIRE(out.size() == 1);
    // Coefficient of y^c is sum_d binom(d, c) t^d.
    Budget b(200000);
    for (unsigned long long c = 0; c <= 3; ++c) {
      auto terms = out[0].coeff(xi(c)).take_terms(7 - c, b);
      std::size_t k = 0;
      for (unsigned long long d = c; d < 7; ++d, ++k) {
        REQUIRE(k < terms.size());
        CHECK(terms[k].mono == tp(g, Rational(static_cast<long long>(d))));
        CHECK(terms[k].coeff == nat_binom(d, c));
      }
    }
  }

  SUBCASE("constant and identity members") {
    LanguageFlags fl;
    fl.renorm_derivative = false;
    fl.partial_truncation = false;
    LanguageF F;
    F.generators.push_back({"two", GpsExpr::constant(V1("x"), 2)});
    F.generators.push_back({"idx", GpsExpr::variable(V1("x"), "x")});
    F.flags = fl;
    auto out = make_FM(F, g, {{{"x", t}}});
    REQUIRE(out.size() == 2);
    expect_prefix(out[0].coeff(MultiIndex{}), {{Monomial::one(g), Q(2)}}, true);
    expect_prefix(out[0].coeff(xi(1)), {}, true);
    expect_prefix(out[1].coeff(MultiIndex{}), {{t, Q(1)}}, true);
    expect_prefix(out[1].coeff(xi(1)), {{t, Q(1)}}, true);
    expect_prefix(out[1].coeff(xi(2)), {}, true);

    // Composability carries over exactly: the identity is a valid
    // substitution target, the constant-led geometric member is not.
    Budget b(200000);
    CHECK(is_composable(out[1], b));
    CHECK_FALSE(is_composable(make_FM(geom_lang(fl), g, {{{"x", t}}})[0], b));
  }

  SUBCASE("the pool closes under renormalized derivatives") {
    LanguageFlags fl;
    fl.partial_truncation = false;
    auto out = make_FM(geom_lang(fl), g, {{{"x", t}}});
    REQUIRE(out.size() == 2);
    // x d/dx geom = sum a x^a; re-expansion coefficient of y^c at t^d is
    // d * binom(d, c).
    Budget b(200000);
    auto t0 = out[1].coeff(MultiIndex{}).take_terms(3, b);
    REQUIRE(t0.size() == 3);
    CHECK(t0[0].coeff == 1);
    CHECK(t0[1].coeff == 2);
    CHECK(t0[2].coeff == 3);
    auto t1 = out[1].coeff(xi(1)).take_terms(3, b);
    REQUIRE(t1.size() == 3);
    CHECK(t1[0].coeff == 1);
    CHECK(t1[1].coeff == 4);
    CHECK(t1[2].coeff == 9);
  }

  SUBCASE("the pool closes under grade windows, matching truncations") {
    auto out = make_FM(geom_lang(), g, {{{"x", t}}});
    REQUIRE(out.size() == 8);  // generator, derivative, six windows
    // The window below grade 1 of the geometric member is the constant 1.
    expect_prefix(out[2].coeff(MultiIndex{}), {{Monomial::one(g), Q(1)}}, true);
    expect_prefix(out[2].coeff(xi(1)), {}, true);
    // The window below grade 2 instantiates to the same series as the
    // coefficient truncation of the full member above t^2.
    Rps trunc_full = coeff_trunc(out[0], tp(g, 2));
    Budget b(200000);
    for (unsigned long long c = 0; c <= 3; ++c) {
      auto a = trunc_full.coeff(xi(c)).take_terms(4, b);
      auto w = out[3].coeff(xi(c)).take_terms(4, b);
      REQUIRE(a.size() == w.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].mono == w[k].mono);
        CHECK(a[k].coeff == w[k].coeff);
      }
    }
  }

  SUBCASE("assignments must be below the identity and cover the variable") {
    LanguageF F = geom_lang();
    CHECK_THROWS_AS(make_FM(F, g, {{{"x", Monomial::one(g)}}}), DomainError);
    CHECK_THROWS_AS(make_FM(F, g, {{}}), DomainError);
  }

  SUBCASE("members must use exactly one variable") {
    VarsPtr v2 = VariableSet::make({"x", "y"}, {});
    LanguageF F;
    F.generators.push_back(
        {"plane", add(GpsExpr::variable(v2, "x"), GpsExpr::variable(v2, "y"))});
    CHECK_THROWS_AS(make_FM(F, g, {{{"x", t}}}), DomainError);
  }
}

// ---- generation -------------------------------------------------------------

TEST_CASE("generation from an empty base set") {
  GroupPtr g = rank1();
  const Monomial t = tp(g, 1);
  LanguageFlags fl;
  Budget b(1000000);
  GeneratedSet G = generate({}, geom_lang(fl), g, {t}, {}, 1, b);
  REQUIRE(G.elements.size() == 4);
  CHECK(G.elements[0].expr.kind == GenExpr::Kind::Mono);
  expect_prefix(finite(g, {{1, 1}}), {{t, Q(1)}}, true);
  CHECK(same_sig(G.elements[0].signature, {Term{t, Q(1)}}));
  CHECK(same_sig(G.elements[1].signature, {Term{t, Q(2)}}));          // t + t
  CHECK(same_sig(G.elements[2].signature, {Term{tp(g, 2), Q(1)}}));   // t * t
  CHECK(G.elements[3].expr.kind == GenExpr::Kind::Apply);
  REQUIRE(G.elements[3].signature.size() == 10);  // geometric series at t
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(G.elements[3].signature[k].mono ==
          tp(g, Rational(static_cast<long long>(k))));
    CHECK(G.elements[3].signature[k].coeff == 1);
  }
  CHECK_FALSE(G.elements[3].signature_exhausted);

  Budget b0(1000000);
  GeneratedSet G0 = generate({}, geom_lang(fl), g, {t}, {}, 0, b0);
  REQUIRE(G0.elements.size() == 1);
  CHECK(G0.elements[0].expr.kind == GenExpr::Kind::Mono);

  Budget bs(1000000);
  GeneratedSet Gs = generate({}, geom_lang(fl), g, {}, {Q(1)}, 0, bs);
  REQUIRE(Gs.elements.size() == 1);
  CHECK(Gs.elements[0].expr.kind == GenExpr::Kind::Scalar);
  CHECK(same_sig(Gs.elements[0].signature, {Term{Monomial::one(g), Q(1)}}));
}

TEST_CASE("generation counts, dedup, and depth monotonicity") {
  GroupPtr g = rank2();
  const Monomial u = mono2(g, 1, 0);
  std::vector<HahnSeries> X = {finite2(g, {}), finite2(g, {{u, Q(1)}})};
  LanguageF F = geom_lang();

  Budget b2(2000000);
  GeneratedSet G2 = generate(X, F, g, {}, {}, 2, b2);
  // Depth 0 holds the two base elements; depth 1 adds 2u, u^2, and the
  // geometric series at u; depth 2 adds nine sums, eight products (u*2u
  // re-derives u^2+u^2), and applications at 2u and u^2.  The application at
  // the geometric element is skipped: its argument is not infinitesimal.
  CHECK(G2.elements.size() == 24);
  CHECK(G2.signature_index.size() == 24);
  CHECK(G2.stats.candidates == 35);
  CHECK(G2.stats.deduplicated == 11);
  CHECK(G2.stats.dropped_domain == 2);
  CHECK(G2.stats.dropped_budget == 0);

  Budget b1(2000000);
  GeneratedSet G1 = generate(X, F, g, {}, {}, 1, b1);
  REQUIRE(G1.elements.size() == 5);
  Budget b0(2000000);
  GeneratedSet G0 = generate(X, F, g, {}, {}, 0, b0);
  REQUIRE(G0.elements.size() == 2);
  // Deeper runs extend shallower ones element for element.
  for (std::size_t i = 0; i < G1.elements.size(); ++i) {
    CHECK(G1.elements[i].expr.kind == G2.elements[i].expr.kind);
    CHECK(same_sig(G1.elements[i].signature, G2.elements[i].signature));
  }
  for (std::size_t i = 0; i < G0.elements.size(); ++i)
    CHECK(same_sig(G0.elements[i].signature, G2.elements[i].signature));

  // Expected members are present.
  CHECK(find_elem(G2, {{u, Q(3)}}).has_value());                       // 3u
  CHECK(find_elem(G2, {{Monomial::one(g), Q(1)}, {u, Q(2)},
                       {mono2(g, 2, 0), Q(4)}})
            .has_value());                                             // geom(2u)
  CHECK(find_elem(G2, {{Monomial::one(g), Q(1)}, {mono2(g, 2, 0), Q(1)},
                       {mono2(g, 4, 0), Q(1)}})
            .has_value());                                             // geom(u^2)
  CHECK(find_elem(G2, {{Monomial::one(g), Q(1)}, {u, Q(2)},
                       {mono2(g, 2, 0), Q(3)}})
            .has_value());                                             // geom^2
  CHECK(find_elem(G2, {{u, Q(1)}, {mono2(g, 2, 0), Q(1)},
                       {mono2(g, 3, 0), Q(1)}})
            .has_value());                                             // u*geom

  // The geometric element (id 4) is never used as an application argument.
  for (const auto& e : G2.elements) {
    const bool applied_to_geom =
        e.expr.kind == GenExpr::Kind::Apply && e.expr.a == 4;
    CHECK_FALSE(applied_to_geom);
  }

  // No two stored elements agree on their whole signature.
  for (std::size_t i = 0; i < G2.elements.size(); ++i)
    for (std::size_t j = i + 1; j < G2.elements.size(); ++j) {
      bool same = same_sig(G2.elements[i].signature, G2.elements[j].signature) &&
                  G2.elements[i].signature_exhausted ==
                      G2.elements[j].signature_exhausted;
      CHECK_FALSE(same);
    }

  // Expression renderings stay structural.
  auto j4 = G2.expr_json(4);
  CHECK(j4["kind"] == "apply");
  CHECK(j4["id"] == 4);
  auto j0 = G2.expr_json(0);
  CHECK(j0["kind"] == "base");
}

TEST_CASE("generation drops candidates whose signature cannot be probed") {
  GroupPtr g = rank1();
  const Monomial t = tp(g, 1);
  LanguageF F;
  F.generators.push_back(
      {"sqrt1p", GpsExpr::binomial_family(V1("x"), "x", Q(1, 2))});
  std::vector<HahnSeries> X = {finite(g, {}), finite(g, {{1, 1}})};
  Budget b(4000000);
  GenerateOptions opts;
  opts.candidate_budget = 20000;
  GeneratedSet G = generate(X, F, g, {}, {}, 2, b, opts);
  // The square of the square-root family collapses to 1 + t through total
  // cancellation, which no finite probe of the product stream can certify;
  // the candidate is dropped under the signature budget.
  CHECK(G.stats.dropped_budget >= 1);
  CHECK(G.elements.size() > 5);
}

TEST_CASE("generation validates the base set") {
  GroupPtr g = rank1();
  LanguageF F = geom_lang();
  Budget b(1000000);
  // A base set must contain its own truncations.
  std::vector<HahnSeries> open_set = {finite(g, {{1, 1}, {2, 1}})};
  CHECK_THROWS_AS(generate(open_set, F, g, {}, {}, 1, b), DomainError);
  // Base elements must enumerate fully.
  HahnSeries one_minus_t = finite(g, {{0, 1}, {1, -1}});
  std::vector<HahnSeries> infinite_set = {invert_unit(one_minus_t)};
  GenerateOptions opts;
  opts.candidate_budget = 3000;
  Budget b2(1000000);
  CHECK_THROWS_AS(generate(infinite_set, F, g, {}, {}, 1, b2, opts), DomainError);
}

// ---- truncation-closure checking --------------------------------------------

TEST_CASE("closure check certifies a one-variable family") {
  GroupPtr g = rank1();
  std::vector<HahnSeries> X = {finite(g, {}), finite(g, {{1, 1}}),
                               finite(g, {{1, 1}, {2, 1}})};
  LanguageF F = geom_lang();
  F.generators.push_back(
      {"sqrt1p", GpsExpr::binomial_family(V1("x"), "x", Q(1, 2))});
  Budget b(8000000);
  GeneratedSet G = generate(X, F, g, {}, {Q(1)}, 1, b);
  CHECK(G.elements.size() == 17);

  ClosureReport rep = check_truncation_closed(G);
  CHECK(rep.probe_depth == 10);
  CHECK(rep.entries.size() > 0);
  CHECK(rep.all_witnessed());
  CHECK(rep.witnessed == rep.entries.size());
  CHECK(rep.failed == 0);
  CHECK(rep.budget == 0);

  // Every element was probed.
  std::set<std::size_t> probed;
  for (const auto& e : rep.entries) probed.insert(e.element_id);
  CHECK(probed.size() == G.elements.size());

  // Midpoint probes appear alongside support probes.
  auto id12 = find_elem(G, {{tp(g, 1), Q(1)}, {tp(g, 2), Q(1)}});
  REQUIRE(id12.has_value());
  bool saw_mid = false;
  for (const auto& e : rep.entries)
    saw_mid = saw_mid || (e.element_id == *id12 &&
                          e.probe == tp(g, Q(3, 2)).to_string());
  CHECK(saw_mid);

  // The geometric series at t + t^2 needs a genuine composition witness at
  // probes below its quadratic term.
  auto idg = find_elem(
      G, {{Monomial::one(g), Q(1)}, {tp(g, 1), Q(1)}, {tp(g, 2), Q(2)}});
  REQUIRE(idg.has_value());
  bool saw_comp = false;
  for (const auto& e : rep.entries)
    if (e.element_id == *idg && e.witness &&
        (*e.witness)["kind"] == "composition")
      saw_comp = true;
  CHECK(saw_comp);

  // Members applied to plain monomials are witnessed by grade windows.
  auto idb = find_elem(
      G, {{Monomial::one(g), Q(1)}, {tp(g, 1), Q(1, 2)}, {tp(g, 2), Q(-1, 8)}});
  REQUIRE(idb.has_value());
  bool saw_frag = false;
  for (const auto& e : rep.entries)
    if (e.element_id == *idb && e.witness &&
        (*e.witness)["kind"] == "member_fragment")
      saw_frag = true;
  CHECK(saw_frag);

  // Report serialization carries the schema.
  nlohmann::json j = rep.to_json(&G);
  CHECK(j.contains("probe_depth"));
  CHECK(j.contains("witnessed"));
  CHECK(j.contains("failed"));
  CHECK(j.contains("budget"));
  REQUIRE(j.contains("entries"));
  REQUIRE(j["entries"].is_array());
  REQUIRE(j["entries"].size() == rep.entries.size());
  const auto& je = j["entries"][0];
  CHECK(je.contains("element_id"));
  CHECK(je.contains("probe"));
  CHECK(je.contains("status"));
  CHECK(je.contains("probe_depth"));
  CHECK(je.contains("expression"));

  // Explicit probes apply to every element.
  ClosureReport rep_t = check_truncation_closed(G, {tp(g, Q(3, 2))}, 6);
  CHECK(rep_t.probe_depth == 6);
  CHECK(rep_t.entries.size() == G.elements.size());
  CHECK(rep_t.all_witnessed());

  // Identical runs render identically, and worker counts do not change the
  // outcome.
  CheckOptions one;
  one.workers = 1;
  ClosureReport r1 = check_truncation_closed(G, one);
  ClosureReport r1b = check_truncation_closed(G, one);
  CHECK(r1.to_json().dump() == r1b.to_json().dump());
  CheckOptions four;
  four.workers = 4;
  ClosureReport r4 = check_truncation_closed(G, four);
  CHECK(r4.to_json().dump() == r1.to_json().dump());
}

TEST_CASE("closure check certifies mixed-class arguments") {
  GroupPtr g = rank2();
  const Monomial u = mono2(g, 1, 0);
  const Monomial ut = mono2(g, 1, 1);
  const Monomial u2 = mono2(g, 2, 0);
  std::vector<HahnSeries> X = {
      finite2(g, {}),
      finite2(g, {{u, Q(1)}}),
      finite2(g, {{ut, Q(1)}}),
      finite2(g, {{u, Q(1)}, {ut, Q(1)}}),
      finite2(g, {{u, Q(1)}, {ut, Q(1)}, {u2, Q(1)}}),
  };
  Budget b(8000000);
  GeneratedSet G = generate(X, geom_lang(), g, {}, {}, 1, b);
  CHECK(G.elements.size() == 28);

  ClosureReport rep = check_truncation_closed(G);
  CHECK(rep.all_witnessed());

  // The application at u + ut + u^2 splits into a class part and a finer
  // tail; its witnesses below u^2 must come from compositions.
  auto idm = find_elem(G, {{Monomial::one(g), Q(1)}, {u, Q(1)}, {ut, Q(1)},
                           {u2, Q(2)}});
  REQUIRE(idm.has_value());
  CHECK(G.elements[*idm].expr.kind == GenExpr::Kind::Apply);
  bool saw_comp = false;
  for (const auto& e : rep.entries)
    if (e.element_id == *idm && e.probe == mono2(g, 3, 0).to_string()) {
      CHECK(e.status == WitnessStatus::Witnessed);
      REQUIRE(e.witness.has_value());
      CHECK((*e.witness)["kind"] == "composition");
      saw_comp = true;
    }
  CHECK(saw_comp);
}

TEST_CASE("disabled rules surface as refusals, not as wrong witnesses") {
  GroupPtr g = rank1();
  std::vector<HahnSeries> X = {finite(g, {}), finite(g, {{1, 1}}),
                               finite(g, {{1, 1}, {2, 1}})};
  LanguageFlags noderiv;
  noderiv.renorm_derivative = false;
  Budget b(4000000);
  GeneratedSet G = generate(X, geom_lang(noderiv), g, {}, {}, 1, b);

  ClosureReport rep = check_truncation_closed(G);
  CHECK(rep.failed >= 1);
  CHECK(rep.budget == 0);
  bool saw_refusal = false;
  for (const auto& e : rep.entries)
    if (e.status == WitnessStatus::Failed &&
        e.note.find("refused") != std::string::npos)
      saw_refusal = true;
  CHECK(saw_refusal);

  // The refusals are targeted: the same probes on the member applied to the
  // plain monomial stay witnessed through grade windows.
  auto idg = find_elem(G, {{Monomial::one(g), Q(1)}, {tp(g, 1), Q(1)},
                           {tp(g, 2), Q(1)}, {tp(g, 3), Q(1)}});
  REQUIRE(idg.has_value());
  for (const auto& e : rep.entries)
    if (e.element_id == *idg) CHECK(e.status == WitnessStatus::Witnessed);

  // With the derivative rule restored the same family closes fully.
  Budget b2(4000000);
  GeneratedSet G2 = generate(X, geom_lang(), g, {}, {}, 1, b2);
  ClosureReport rep2 = check_truncation_closed(G2);
  CHECK(rep2.all_witnessed());
}

TEST_CASE("exhausted budgets are reported as budget entries") {
  GroupPtr g = rank1();
  std::vector<HahnSeries> X = {finite(g, {}), finite(g, {{1, 1}}),
                               finite(g, {{1, 1}, {2, 1}})};
  Budget b(4000000);
  GeneratedSet G = generate(X, geom_lang(), g, {}, {}, 1, b);
  CheckOptions tight;
  tight.workers = 1;
  tight.pair_budget = 40;
  ClosureReport rep = check_truncation_closed(G, tight);
  CHECK(rep.budget >= 1);
  CHECK(rep.witnessed + rep.failed + rep.budget == rep.entries.size());
  CHECK(to_string(WitnessStatus::Witnessed) == "witnessed");
  CHECK(to_string(WitnessStatus::Failed) == "failed");
  CHECK(to_string(WitnessStatus::Budget) == "budget");
}

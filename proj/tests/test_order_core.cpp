#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "hahnforge/monomial.hpp"
#include "hahnforge/rational.hpp"
#include "hahnforge/segmentation.hpp"

using namespace hahnforge;

namespace {

GroupPtr rank1() { return MonomialGroup::make({"t"}); }
GroupPtr rank2() { return MonomialGroup::make({"u", "t"}); }

Monomial mono(const GroupPtr& g, std::vector<Rational> e) {
  return Monomial(g, std::move(e));
}

// Independent order oracle: compare exponent vectors as "logarithms". A
// monomial is small when its exponent vector is lexicographically large, so
// we compare the negated vectors lexicographically, term by term, using
// exact rationals only.
int oracle_cmp(const Monomial& a, const Monomial& b) {
  const auto& x = a.exponents();
  const auto& y = b.exponents();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (-x[i] < -y[i]) return -1;
    if (-y[i] < -x[i]) return 1;
  }
  return 0;
}

// Lexicographic sign / abs / scaled comparison on exponent vectors, used by
// the dominance oracle below.
int lex_sign(const std::vector<Rational>& v) {
  for (const auto& q : v) {
    if (q > 0) return 1;
    if (q < 0) return -1;
  }
  return 0;
}

std::vector<Rational> lex_abs(std::vector<Rational> v) {
  if (lex_sign(v) < 0)
    for (auto& q : v) q = -q;
  return v;
}

bool lex_geq_scaled(unsigned long long n, const std::vector<Rational>& x,
                    const std::vector<Rational>& y) {
  // n*x >= y in the lexicographic order
  for (std::size_t i = 0; i < x.size(); ++i) {
    Rational d = Rational(n) * x[i] - y[i];
    if (d > 0) return true;
    if (d < 0) return false;
  }
  return true;
}

// Two nonidentity monomials share an archimedean class exactly when each
// dominates the other up to an integer factor: n|x| >= |y| and n|y| >= |x|
// for some n. The oracle finds the class of m by testing it against each
// generator directly from this definition.
bool oracle_same_class(const Monomial& a, const Monomial& b) {
  std::vector<Rational> x = lex_abs(a.exponents());
  std::vector<Rational> y = lex_abs(b.exponents());
  constexpr unsigned long long kMax = 4096;
  bool ab = false, ba = false;
  for (unsigned long long n = 1; n <= kMax && !(ab && ba); n *= 2) {
    ab = ab || lex_geq_scaled(n, x, y);
    ba = ba || lex_geq_scaled(n, y, x);
  }
  return ab && ba;
}

ArchClass oracle_arch_class(const Monomial& m) {
  if (lex_sign(m.exponents()) == 0) return ArchClass::identity();
  const GroupPtr& g = m.group();
  for (int i = 0; i < g->rank(); ++i)
    if (oracle_same_class(m, Monomial::generator(g, i))) return ArchClass::at(i);
  return ArchClass::identity();  // unreachable for nonidentity inputs
}

Rational rand_exponent(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-12, 12);
  std::uniform_int_distribution<int> den(1, 4);
  return Rational(num(rng), den(rng));
}

Monomial rand_monomial(const GroupPtr& g, std::mt19937_64& rng) {
  std::vector<Rational> e;
  for (int i = 0; i < g->rank(); ++i) e.push_back(rand_exponent(rng));
  return Monomial(g, std::move(e));
}

int cmp(const Monomial& a, const Monomial& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

TEST_CASE("rational printing and parsing") {
  CHECK(to_string(Rational(3)) == "3");
  CHECK(to_string(Rational(-3)) == "-3");
  CHECK(to_string(Rational(1, 2)) == "1/2");
  CHECK(to_string(Rational(-2, 4)) == "-1/2");
  CHECK(to_string(Rational(0)) == "0");

  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational(" -5/10 ") == Rational(-1, 2));
  CHECK(parse_rational("7/0") == std::nullopt);
  CHECK(parse_rational("abc") == std::nullopt);
  CHECK(parse_rational("") == std::nullopt);
}

TEST_CASE("generalized binomial coefficients") {
  Rational half(1, 2);
  CHECK(binomial(half, 0) == Rational(1));
  CHECK(binomial(half, 1) == Rational(1, 2));
  CHECK(binomial(half, 2) == Rational(-1, 8));
  CHECK(binomial(half, 3) == Rational(1, 16));
  CHECK(binomial(Rational(-1), 3) == Rational(-1));
  CHECK(binomial(Rational(-1), 4) == Rational(1));
  CHECK(binomial(Rational(3), 2) == Rational(3));
  CHECK(binomial(Rational(3), 5) == Rational(0));  // natural exponents stop
  CHECK(factorial(5) == 120);
  CHECK(multinomial({2, 1}) == 3);
  CHECK(multi_factorial({3, 2}) == Rational(12));
  CHECK(is_nonneg_integer(Rational(7)));
  CHECK(!is_nonneg_integer(Rational(-1)));
  CHECK(!is_nonneg_integer(Rational(1, 2)));
  CHECK(common_denominator({Rational(1, 2), Rational(1, 3)}) == 6);
  CHECK(common_denominator({}) == 1);
}

TEST_CASE("group construction is validated") {
  CHECK_THROWS_AS(MonomialGroup::make({}), DomainError);
  CHECK_THROWS_AS(MonomialGroup::make({"t", "t"}), DomainError);
  GroupPtr g = rank2();
  CHECK(g->rank() == 2);
  CHECK(g->index_of("u") == 0);
  CHECK(g->index_of("t") == 1);
  CHECK(g->index_of("z") == -1);
}

TEST_CASE("monomial order: pinned comparisons") {
  GroupPtr g = rank2();
  Monomial one = Monomial::one(g);
  Monomial u = mono(g, {1, 0});
  Monomial t = mono(g, {0, 1});

  CHECK(cmp(one, one) == 0);
  CHECK(u < t);  // coarser-class infinitesimal lies below the finer one
  CHECK(mono(g, {0, -1}) > one);
  CHECK(t < one);
  CHECK(mono(g, {0, 2}) < t);
  CHECK(mono(g, {0, Rational(1, 2)}) > t);
  CHECK(u < mono(g, {0, 100}));
  CHECK(mono(g, {1, -5}) < mono(g, {0, 3}));
  CHECK(mono(g, {Rational(1, 2), 0}) > u);
  CHECK(mono(g, {0, -10}) < mono(g, {-1, 0}));
  CHECK(u.mul(t) < u);
  CHECK(u.mul(mono(g, {0, -1})) > u);
}

TEST_CASE("monomial order matches the lexicographic-log oracle") {
  std::mt19937_64 rng(20260823);
  for (int rank = 1; rank <= 3; ++rank) {
    std::vector<std::string> names;
    for (int i = 0; i < rank; ++i) names.push_back(std::string(1, char('a' + i)));
    GroupPtr g = MonomialGroup::make(names);
    for (int it = 0; it < 700; ++it) {
      Monomial a = rand_monomial(g, rng);
      Monomial b = rand_monomial(g, rng);
      CHECK(cmp(a, b) == oracle_cmp(a, b));
      CHECK(cmp(a, b) == -cmp(b, a));
    }
  }
}

TEST_CASE("monomial order is compatible with multiplication") {
  std::mt19937_64 rng(7);
  GroupPtr g = rank2();
  for (int it = 0; it < 10000; ++it) {
    Monomial a = rand_monomial(g, rng);
    Monomial b = rand_monomial(g, rng);
    Monomial c = rand_monomial(g, rng);
    if (a < b) {
      CHECK(a.mul(c) < b.mul(c));
      CHECK(b.inverse() < a.inverse());
    }
  }
}

TEST_CASE("archimedean class: pinned values") {
  GroupPtr g = rank2();
  CHECK(Monomial::one(g).arch_class() == ArchClass::identity());
  CHECK(mono(g, {2, -5}).arch_class() == ArchClass::at(0));
  CHECK(mono(g, {0, Rational(1, 3)}).arch_class() == ArchClass::at(1));
  CHECK(ArchClass::at(0) < ArchClass::at(1));
  CHECK(ArchClass::at(1) < ArchClass::identity());
}

TEST_CASE("archimedean class matches the dominance oracle") {
  std::mt19937_64 rng(99);
  GroupPtr g3 = MonomialGroup::make({"a", "b", "c"});
  int checked = 0;
  for (int it = 0; it < 400; ++it) {
    Monomial m = rand_monomial(g3, rng);
    CHECK(m.arch_class() == oracle_arch_class(m));
    if (!m.arch_class().is_identity_class()) ++checked;
  }
  CHECK(checked > 300);  // the oracle saw mostly nontrivial classes
}

TEST_CASE("archimedean class of a product") {
  std::mt19937_64 rng(123);
  GroupPtr g = rank2();
  for (int it = 0; it < 2000; ++it) {
    Monomial a = rand_monomial(g, rng);
    Monomial b = rand_monomial(g, rng);
    ArchClass ca = a.arch_class(), cb = b.arch_class();
    ArchClass cab = a.mul(b).arch_class();
    CHECK(cab >= std::min(ca, cb));
    if (ca != cb) CHECK(cab == std::min(ca, cb));
  }
}

TEST_CASE("monomial rendering") {
  GroupPtr g = rank2();
  CHECK(Monomial::one(g).to_string() == "1");
  CHECK(mono(g, {0, 1}).to_string() == "t");
  CHECK(mono(g, {0, 2}).to_string() == "t^2");
  CHECK(mono(g, {0, Rational(1, 2)}).to_string() == "t^(1/2)");
  CHECK(mono(g, {0, -1}).to_string() == "t^(-1)");
  CHECK(mono(g, {1, 2}).to_string() == "u*t^2");
}

TEST_CASE("segments and segment sets") {
  GroupPtr g = rank1();
  auto tp = [&](const Rational& e) { return mono(g, {e}); };

  Segment all = Segment::all();
  CHECK(all.contains(tp(5)));
  CHECK(all.contains(tp(-5)));

  Segment closed = Segment::between(tp(Rational(3, 2)), true, tp(Rational(1, 2)), true);
  CHECK(closed.contains(tp(1)));
  CHECK(closed.contains(tp(Rational(1, 2))));
  CHECK(closed.contains(tp(Rational(3, 2))));
  CHECK(!closed.contains(tp(2)));   // t^2 < t^(3/2): below the segment
  CHECK(!closed.contains(tp(0)));

  CHECK_THROWS_AS(Segment::between(tp(1), true, tp(2), true), DomainError);
  CHECK_THROWS_AS(Segment::between(tp(1), false, tp(1), false), DomainError);

  Segment low = Segment::below(tp(3), false);   // everything below t^3
  Segment high = Segment::above(tp(2), true);   // t^2 and above
  SegmentSet ss({high, low});
  CHECK(ss.pieces().size() == 2);
  CHECK(ss.pieces()[0].contains(tp(5)));  // sorted increasing: low piece first
  CHECK(ss.contains(tp(4)));
  CHECK(ss.contains(tp(2)));
  CHECK(ss.contains(tp(0)));
  CHECK(!ss.contains(tp(Rational(5, 2))));

  SegmentSet single({Segment::above(tp(2), false)});
  CHECK(single.entirely_above(tp(2)));
  CHECK(!single.entirely_above(tp(1)));

  CHECK_THROWS_AS(SegmentSet({Segment::above(tp(1), true), Segment::above(tp(2), true)}),
                  DomainError);
}

TEST_CASE("minimal elements: pinned values") {
  using P = std::vector<Rational>;
  CHECK(minimal_elements({}).empty());
  CHECK(minimal_elements({P{1, 2}, P{2, 1}, P{2, 2}}) ==
        std::vector<P>{P{1, 2}, P{2, 1}});
  CHECK(minimal_elements({P{0, 0}, P{5, 5}}) == std::vector<P>{P{0, 0}});
  CHECK(is_antichain({P{1, 2}, P{2, 1}}));
  CHECK(!is_antichain({P{1, 2}, P{2, 2}}));
}

TEST_CASE("minimal elements generate the same upper set (randomized)") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> coord(0, 4);
  std::uniform_int_distribution<int> count(0, 8);
  for (int it = 0; it < 300; ++it) {
    int n = 1 + it % 3;
    std::vector<std::vector<Rational>> pts;
    int k = count(rng);
    for (int i = 0; i < k; ++i) {
      std::vector<Rational> p;
      for (int j = 0; j < n; ++j) p.push_back(coord(rng));
      pts.push_back(p);
    }
    auto mins = minimal_elements(pts);
    CHECK(is_antichain(mins));
    // same upper set over the whole {0..4}^n box
    std::vector<int> idx(n, 0);
    while (true) {
      std::vector<Rational> q;
      for (int j = 0; j < n; ++j) q.push_back(idx[j]);
      CHECK(in_upper_set(q, pts) == in_upper_set(q, mins));
      int j = 0;
      for (; j < n; ++j) {
        if (++idx[j] <= 4) break;
        idx[j] = 0;
      }
      if (j == n) break;
    }
    for (const auto& p : pts) CHECK(in_upper_set(p, mins));
  }
}

TEST_CASE("chain segmentation from upper-set generators: pinned values") {
  using P = std::vector<Rational>;
  std::vector<std::vector<Rational>> chains{{0, 1, 2}, {0, 1, 2}};

  auto s1 = basic_segmentations(chains, {P{1, 1}});
  REQUIRE(s1.size() == 2);
  CHECK(s1[0] == std::vector<std::vector<Rational>>{{0}, {1, 2}});
  CHECK(s1[1] == std::vector<std::vector<Rational>>{{0}, {1, 2}});

  auto s2 = basic_segmentations(chains, {});
  CHECK(s2[0] == std::vector<std::vector<Rational>>{{0, 1, 2}});
  CHECK(s2[1] == std::vector<std::vector<Rational>>{{0, 1, 2}});

  auto s3 = basic_segmentations(chains, {P{0, 2}, P{2, 0}});
  CHECK(s3[0] == std::vector<std::vector<Rational>>{{0, 1}, {2}});
  CHECK(s3[1] == std::vector<std::vector<Rational>>{{0, 1}, {2}});

  CHECK_THROWS_AS(basic_segmentations(chains, {P{1, 1}, P{2, 2}}), DomainError);
}

TEST_CASE("chain segmentation: every box has constant membership (randomized)") {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> ngen(0, 4);
  for (int it = 0; it < 200; ++it) {
    int n = 1 + it % 3;
    std::vector<std::vector<Rational>> chains;
    for (int i = 0; i < n; ++i) {
      std::set<int> vals;
      int l = len(rng);
      std::uniform_int_distribution<int> v(0, 9);
      while (static_cast<int>(vals.size()) < l) vals.insert(v(rng));
      chains.push_back({});
      for (int x : vals) chains.back().push_back(x);
    }
    std::vector<std::vector<Rational>> gens;
    int k = ngen(rng);
    for (int i = 0; i < k; ++i) {
      std::vector<Rational> p;
      for (int j = 0; j < n; ++j) {
        auto& cj = chains[static_cast<std::size_t>(j)];
        std::uniform_int_distribution<std::size_t> pick(0, cj.size() - 1);
        p.push_back(cj[pick(rng)]);
      }
      gens.push_back(p);
    }
    gens = minimal_elements(gens);
    auto segs = basic_segmentations(chains, gens);
    REQUIRE(segs.size() == static_cast<std::size_t>(n));
    // blocks concatenate back to the chains
    for (int i = 0; i < n; ++i) {
      std::vector<Rational> flat;
      for (const auto& blk : segs[static_cast<std::size_t>(i)])
        flat.insert(flat.end(), blk.begin(), blk.end());
      CHECK(flat == chains[static_cast<std::size_t>(i)]);
    }
    // every box: membership constant (exhaustive over block choices & entries)
    std::vector<std::size_t> bidx(static_cast<std::size_t>(n), 0);
    while (true) {
      std::optional<bool> expect;
      bool constant = true;
      std::vector<std::size_t> eidx(static_cast<std::size_t>(n), 0);
      while (true) {
        std::vector<Rational> pt;
        for (int j = 0; j < n; ++j)
          pt.push_back(segs[static_cast<std::size_t>(j)][bidx[static_cast<std::size_t>(j)]]
                           [eidx[static_cast<std::size_t>(j)]]);
        bool in = in_upper_set(pt, gens);
        if (!expect) expect = in;
        else if (*expect != in) constant = false;
        int j = 0;
        for (; j < n; ++j) {
          auto& blk = segs[static_cast<std::size_t>(j)][bidx[static_cast<std::size_t>(j)]];
          if (++eidx[static_cast<std::size_t>(j)] < blk.size()) break;
          eidx[static_cast<std::size_t>(j)] = 0;
        }
        if (j == n) break;
      }
      CHECK(constant);
      int j = 0;
      for (; j < n; ++j) {
        if (++bidx[static_cast<std::size_t>(j)] < segs[static_cast<std::size_t>(j)].size()) break;
        bidx[static_cast<std::size_t>(j)] = 0;
      }
      if (j == n) break;
    }
  }
}

TEST_CASE("sum segmentation: pinned instances keep membership constant") {
  auto check_instance = [](std::vector<std::vector<Rational>> sets,
                           Interval<Rational> u) {
    auto segs = sum_segmentations(sets, u);
    REQUIRE(segs.size() == sets.size());
    std::size_t n = sets.size();
    std::vector<std::size_t> bidx(n, 0);
    while (true) {
      std::optional<bool> expect;
      std::vector<std::size_t> eidx(n, 0);
      while (true) {
        Rational sum(0);
        for (std::size_t j = 0; j < n; ++j) sum += segs[j][bidx[j]][eidx[j]];
        bool in = u.contains(sum);
        if (!expect) expect = in;
        CHECK(*expect == in);
        std::size_t j = 0;
        for (; j < n; ++j) {
          if (++eidx[j] < segs[j][bidx[j]].size()) break;
          eidx[j] = 0;
        }
        if (j == n) break;
      }
      std::size_t j = 0;
      for (; j < n; ++j) {
        if (++bidx[j] < segs[j].size()) break;
        bidx[j] = 0;
      }
      if (j == n) break;
    }
    return segs;
  };

  check_instance({{1, 2}, {1, 3}}, Interval<Rational>{Rational(3), Rational(4), true, true});

  auto trivial = check_instance({{1}, {1}}, Interval<Rational>{std::nullopt, std::nullopt, true, true});
  CHECK(trivial[0].size() == 1);
  CHECK(trivial[1].size() == 1);

  auto s3 = check_instance({{1, 2, 3}, {10}}, Interval<Rational>{Rational(12), Rational(13), true, true});
  CHECK(s3[0].size() >= 2);  // the membership boundary separates 1 from 2
}

TEST_CASE("sum segmentation randomized against brute force") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> sz(1, 4);
  std::uniform_int_distribution<int> val(1, 9);
  std::uniform_int_distribution<int> bound(0, 30);
  for (int it = 0; it < 300; ++it) {
    std::size_t n = 1 + static_cast<std::size_t>(it) % 3;
    std::vector<std::vector<Rational>> sets;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<int> vals;
      int l = sz(rng);
      while (static_cast<int>(vals.size()) < l) vals.insert(val(rng));
      sets.push_back({});
      for (int x : vals) sets.back().push_back(Rational(x, 2));
    }
    Interval<Rational> u;
    if (it % 4 != 0) u.lo = Rational(bound(rng), 2);
    if (it % 3 != 0) u.hi = Rational(bound(rng), 2);
    if (u.lo && u.hi && *u.hi < *u.lo) std::swap(*u.lo, *u.hi);
    u.lo_closed = it % 2 == 0;
    u.hi_closed = it % 5 != 0;

    auto segs = sum_segmentations(sets, u);
    std::vector<std::size_t> bidx(n, 0);
    while (true) {
      std::set<bool> seen;
      std::vector<std::size_t> eidx(n, 0);
      while (true) {
        Rational sum(0);
        for (std::size_t j = 0; j < n; ++j) sum += segs[j][bidx[j]][eidx[j]];
        seen.insert(u.contains(sum));
        std::size_t j = 0;
        for (; j < n; ++j) {
          if (++eidx[j] < segs[j][bidx[j]].size()) break;
          eidx[j] = 0;
        }
        if (j == n) break;
      }
      CHECK(seen.size() == 1);
      std::size_t j = 0;
      for (; j < n; ++j) {
        if (++bidx[j] < segs[j].size()) break;
        bidx[j] = 0;
      }
      if (j == n) break;
    }
  }
}

TEST_CASE("product segmentation: pinned values") {
  GroupPtr g = rank1();
  auto tp = [&](const Rational& e) { return mono(g, {e}); };
  Segment u = Segment::above(tp(2), false);  // {m : m > t^2}

  auto p1 = product_segmentation({tp(0)}, {tp(0), tp(1), tp(3)}, u);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].s0_final == std::vector<Monomial>{tp(0)});
  CHECK(p1[0].s1_block == std::vector<Monomial>{tp(0), tp(1)});

  auto p2 = product_segmentation({tp(0), tp(2)}, {tp(0), tp(2)}, u);
  REQUIRE(p2.size() == 1);
  CHECK(p2[0].s0_final == std::vector<Monomial>{tp(0)});
  CHECK(p2[0].s1_block == std::vector<Monomial>{tp(0)});

  CHECK(product_segmentation({}, {tp(0)}, u).empty());
}

TEST_CASE("product segmentation covers exactly (randomized)") {
  std::mt19937_64 rng(555);
  GroupPtr g = rank2();
  std::uniform_int_distribution<int> sz(0, 5);
  for (int it = 0; it < 300; ++it) {
    std::vector<Monomial> s0, s1;
    int a = sz(rng), b = sz(rng);
    for (int i = 0; i < a; ++i) s0.push_back(rand_monomial(g, rng));
    for (int i = 0; i < b; ++i) s1.push_back(rand_monomial(g, rng));
    Monomial cut = rand_monomial(g, rng);
    Segment u = it % 2 ? Segment::above(cut, true) : Segment::above(cut, false);

    auto pieces = product_segmentation(s0, s1, u);
    // collect covered pairs, checking disjointness
    std::set<std::pair<std::string, std::string>> covered;
    for (const auto& p : pieces) {
      CHECK(!p.s0_final.empty());
      CHECK(!p.s1_block.empty());
      for (const auto& m : p.s0_final)
        for (const auto& nmono : p.s1_block) {
          auto key = std::make_pair(m.to_string(), nmono.to_string());
          CHECK(covered.insert(key).second);  // no pair twice
        }
    }
    std::set<std::pair<std::string, std::string>> expected;
    for (const auto& m : s0)
      for (const auto& nmono : s1)
        if (u.contains(m.mul(nmono)))
          expected.insert({m.to_string(), nmono.to_string()});
    CHECK(covered == expected);
    // each s0 part really is a final segment: closed upward within s0
    // (duplicates in the input collapse; presence is what matters)
    for (const auto& p : pieces) {
      Monomial lo = *std::min_element(p.s0_final.begin(), p.s0_final.end());
      for (const auto& m : s0)
        if (lo <= m)
          CHECK(std::count(p.s0_final.begin(), p.s0_final.end(), m) > 0);
    }
  }
}

TEST_CASE("tuples summing to a target") {
  using T = std::vector<Rational>;
  auto r = tuples_summing_to({1, 2}, Rational(4));
  std::vector<T> expect{{1, 1, 1, 1}, {1, 1, 2}, {1, 2, 1}, {2, 1, 1}, {2, 2}};
  CHECK(r == expect);
  CHECK(tuples_summing_to({1}, Rational(0)) == std::vector<T>{T{}});
  CHECK(tuples_summing_to({2}, Rational(3)).empty());
  CHECK(tuples_summing_to({1, 2}, Rational(-1)).empty());
  CHECK_THROWS_AS(tuples_summing_to({0, 1}, Rational(2)), DomainError);

  // brute-force agreement on random instances
  std::mt19937_64 rng(808);
  for (int it = 0; it < 100; ++it) {
    std::set<int> sv;
    std::uniform_int_distribution<int> v(1, 6), tgt(0, 12), cnt(1, 3);
    int k = cnt(rng);
    while (static_cast<int>(sv.size()) < k) sv.insert(v(rng));
    std::vector<Rational> s(sv.begin(), sv.end());
    Rational target(tgt(rng));
    auto got = tuples_summing_to(s, target);
    // brute force: BFS over tuples of bounded length
    std::vector<T> frontier{T{}}, hits;
    int maxlen = 12;
    for (int len = 0; len <= maxlen; ++len) {
      std::vector<T> nxt;
      for (const auto& tu : frontier) {
        Rational sum(0);
        for (const auto& q : tu) sum += q;
        if (sum == target) hits.push_back(tu);
        if (sum < target)
          for (const auto& q : s) {
            T e = tu;
            e.push_back(q);
            nxt.push_back(e);
          }
      }
      frontier = std::move(nxt);
    }
    std::sort(hits.begin(), hits.end());
    CHECK(got == hits);
  }
}

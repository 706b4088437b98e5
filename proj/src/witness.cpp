#include "hahnforge/witness.hpp"

#include <algorithm>
#include <functional>
#include <utility>

namespace hahnforge {

// ---- oracles -----------------------------------------------------------------

SetOracle accept_all_atoms() {
  return [](const AtomCert&) { return true; };
}

SetOracle reject_derivative_atoms() {
  return [](const AtomCert& c) { return !c.uses_derivative; };
}

// ---- expression tree ---------------------------------------------------------

struct WitnessExpr::Node {
  Kind kind;
  Rational scalar{0};
  std::optional<Monomial> mono;       // Monomial leaf / MonoScale factor
  std::optional<Rps> value;           // atom leaves
  std::optional<AtomCert> cert;       // atom leaves
  std::vector<WitnessExpr> children;  // Sum/Product members, MonoScale child,
                                      // Compose outer followed by arguments
  std::vector<std::string> arg_names;  // Compose: variable per argument child
};

namespace {

std::shared_ptr<WitnessExpr::Node> make_node(WitnessExpr::Kind k) {
  auto n = std::make_shared<WitnessExpr::Node>();
  n->kind = k;
  return n;
}

}  // namespace

WitnessExpr WitnessExpr::scalar(Rational c) {
  auto n = make_node(Kind::Scalar);
  n->scalar = std::move(c);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::monomial(Monomial m) {
  auto n = make_node(Kind::Monomial);
  n->mono = std::move(m);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::atom_a(Rps value, AtomCert cert, const SetOracle& oracle) {
  cert.set = "A";
  if (!oracle || !oracle(cert))
    throw OracleRefusalError("outer-ring oracle refused atom: " + cert.derivation);
  auto n = make_node(Kind::AtomA);
  n->value = std::move(value);
  n->cert = std::move(cert);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::atom_b(Rps value, AtomCert cert, const SetOracle& oracle) {
  cert.set = "B";
  if (!oracle || !oracle(cert))
    throw OracleRefusalError("argument-set oracle refused atom: " + cert.derivation);
  auto n = make_node(Kind::AtomB);
  n->value = std::move(value);
  n->cert = std::move(cert);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::sum(std::vector<WitnessExpr> parts) {
  auto n = make_node(Kind::Sum);
  n->children = std::move(parts);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::product(std::vector<WitnessExpr> parts) {
  auto n = make_node(Kind::Product);
  n->children = std::move(parts);
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::mono_scale(Monomial factor, WitnessExpr inner) {
  auto n = make_node(Kind::MonoScale);
  n->mono = std::move(factor);
  n->children.push_back(std::move(inner));
  return WitnessExpr(std::move(n));
}

WitnessExpr WitnessExpr::compose(WitnessExpr outer,
                                 std::vector<std::pair<std::string, WitnessExpr>> args) {
  if (outer.kind() != Kind::AtomA)
    throw DomainError("witness composition: outer node must be an outer-ring atom");
  auto n = make_node(Kind::Compose);
  n->children.push_back(std::move(outer));
  for (auto& [name, atom] : args) {
    if (atom.kind() != Kind::AtomB)
      throw DomainError("witness composition: arguments must be argument-set atoms");
    n->arg_names.push_back(name);
    n->children.push_back(std::move(atom));
  }
  return WitnessExpr(std::move(n));
}

WitnessExpr::Kind WitnessExpr::kind() const { return node_->kind; }

std::size_t WitnessExpr::node_count() const {
  std::size_t total = 1;
  for (const auto& c : node_->children) total += c.node_count();
  return total;
}

std::size_t WitnessExpr::depth() const {
  std::size_t best = 0;
  for (const auto& c : node_->children) best = std::max(best, c.depth());
  return best + 1;
}

std::vector<AtomCert> WitnessExpr::leaf_certs() const {
  std::vector<AtomCert> out;
  std::function<void(const WitnessExpr&)> walk = [&](const WitnessExpr& e) {
    const Node& n = *e.node_;
    switch (n.kind) {
      case Kind::Scalar: {
        AtomCert c;
        c.set = "K";
        c.derivation = to_string(n.scalar);
        out.push_back(std::move(c));
        break;
      }
      case Kind::Monomial: {
        AtomCert c;
        c.set = "M";
        c.derivation = n.mono->to_string();
        out.push_back(std::move(c));
        break;
      }
      case Kind::AtomA:
      case Kind::AtomB:
        out.push_back(*n.cert);
        break;
      case Kind::MonoScale: {
        AtomCert c;
        c.set = "M";
        c.derivation = n.mono->to_string();
        out.push_back(std::move(c));
        walk(n.children[0]);
        break;
      }
      default:
        for (const auto& ch : n.children) walk(ch);
    }
  };
  walk(*this);
  return out;
}

Rps WitnessExpr::eval(const std::vector<std::string>& out_vars, const GroupPtr& group,
                      Budget& b) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Scalar:
      return Rps::constant(out_vars, group, HahnSeries::constant(group, n.scalar));
    case Kind::Monomial:
      return Rps::constant(out_vars, group,
                           HahnSeries::monomial_term(*n.mono, Rational(1)));
    case Kind::AtomA: {
      if (!n.value->vars().empty())
        throw Error("witness evaluation: outer-ring atom with variables outside a composition");
      return Rps::constant(out_vars, group, n.value->coeff(MultiIndex{}));
    }
    case Kind::AtomB:
      return extend_vars(*n.value, out_vars);
    case Kind::Sum: {
      Rps acc = Rps::zero(out_vars, group);
      for (const auto& c : n.children) acc = add(acc, c.eval(out_vars, group, b));
      return acc;
    }
    case Kind::Product: {
      Rps acc = Rps::one(out_vars, group);
      for (const auto& c : n.children) acc = mul(acc, c.eval(out_vars, group, b));
      return acc;
    }
    case Kind::MonoScale:
      return hahnforge::mono_scale(*n.mono, n.children[0].eval(out_vars, group, b));
    case Kind::Compose: {
      const Rps& outer = *n.children[0].node_->value;
      if (n.arg_names.empty())
        return Rps::constant(out_vars, group, outer.coeff(MultiIndex{}));
      std::map<std::string, Rps> args;
      for (std::size_t i = 0; i < n.arg_names.size(); ++i)
        args.emplace(n.arg_names[i],
                     extend_vars(*n.children[i + 1].node_->value, out_vars));
      return hahnforge::compose(outer, args, b);
    }
  }
  throw Error("witness evaluation: unknown node kind");
}

nlohmann::json WitnessExpr::to_json() const {
  const Node& n = *node_;
  nlohmann::json j;
  auto atom_json = [](const AtomCert& c) {
    return nlohmann::json{{"kind", "atom"},
                          {"set", c.set},
                          {"derivation", c.derivation},
                          {"bases", c.bases},
                          {"uses",
                           {{"ring", c.uses_ring},
                            {"truncation", c.uses_truncation},
                            {"derivative", c.uses_derivative},
                            {"mono_scale", c.uses_mono_scale}}}};
  };
  switch (n.kind) {
    case Kind::Scalar:
      j = {{"kind", "scalar"}, {"set", "K"}, {"value", to_string(n.scalar)}};
      break;
    case Kind::Monomial:
      j = {{"kind", "monomial"}, {"set", "M"}, {"value", n.mono->to_string()}};
      break;
    case Kind::AtomA:
    case Kind::AtomB:
      j = atom_json(*n.cert);
      break;
    case Kind::Sum:
    case Kind::Product: {
      j["kind"] = n.kind == Kind::Sum ? "sum" : "product";
      auto arr = nlohmann::json::array();
      for (const auto& c : n.children) arr.push_back(c.to_json());
      j["children"] = std::move(arr);
      break;
    }
    case Kind::MonoScale:
      j = {{"kind", "mono_scale"},
           {"factor", n.mono->to_string()},
           {"child", n.children[0].to_json()}};
      break;
    case Kind::Compose: {
      j["kind"] = "compose";
      j["outer"] = n.children[0].to_json();
      auto arr = nlohmann::json::array();
      for (std::size_t i = 0; i < n.arg_names.size(); ++i)
        arr.push_back(nlohmann::json{{"var", n.arg_names[i]},
                                     {"atom", n.children[i + 1].to_json()}});
      j["args"] = std::move(arr);
      break;
    }
  }
  return j;
}

// ---- truncated-composition certificate ---------------------------------------

namespace {

// An element of the outer ring together with the derivation trail that
// certifies its membership.
struct FAtom {
  Rps value;
  std::string label;
  bool ring = false;
  bool trunc = false;
  bool deriv = false;
  bool mscale = false;
};

// An element of the argument set; only truncations are ever applied to it.
struct GAtom {
  Rps value;
  std::string base;
  std::string label;
  bool trunc = false;
};

struct Ctx {
  const SetOracle& oa;
  const SetOracle& ob;
  Budget& b;
  GroupPtr group;
  std::vector<std::string> out_vars;
  int max_depth;
  unsigned long long scan_degree;
};

AtomCert cert_of(const FAtom& f) {
  AtomCert c;
  c.set = "A";
  c.derivation = f.label;
  c.bases = {"f"};
  c.uses_ring = f.ring;
  c.uses_truncation = f.trunc;
  c.uses_derivative = f.deriv;
  c.uses_mono_scale = f.mscale;
  return c;
}

AtomCert cert_of(const GAtom& g) {
  AtomCert c;
  c.set = "B";
  c.derivation = g.label;
  c.bases = {g.base};
  c.uses_truncation = g.trunc;
  return c;
}

WitnessExpr f_atom(const FAtom& f, Ctx& c) {
  return WitnessExpr::atom_a(f.value, cert_of(f), c.oa);
}

WitnessExpr g_atom(const GAtom& g, Ctx& c) {
  return WitnessExpr::atom_b(g.value, cert_of(g), c.ob);
}

WitnessExpr neg(WitnessExpr e) {
  return WitnessExpr::product({WitnessExpr::scalar(Rational(-1)), std::move(e)});
}

FAtom trunc_f(const FAtom& f, const Monomial& cut) {
  FAtom r{coeff_trunc(f.value, cut), "trunc(" + f.label + ", " + cut.to_string() + ")",
          f.ring, true, f.deriv, f.mscale};
  return r;
}

GAtom trunc_g(const GAtom& g, const Monomial& cut) {
  return GAtom{coeff_trunc(g.value, cut), g.base,
               "trunc(" + g.label + ", " + cut.to_string() + ")", true};
}

// When f has finitely many coefficients, replaces its structural bound by the
// exact union of their supports. Product segmentation needs fully enumerable
// bounds, and composition results carry a geometric majorant that is not.
Rps tighten_bound(const Rps& f, const GroupPtr& group) {
  const auto& fin = f.finite_support();
  if (!fin) return f;
  HahnSeries bound = HahnSeries::from_terms(group, {});
  for (const auto& mi : *fin) bound = add(bound, support_indicator(f.coeff(mi)));
  return Rps::from_fn(
      f.vars(), group, [f](const MultiIndex& mi) { return f.coeff(mi); },
      std::move(bound), fin);
}

// Does the (decreasing) monomial stream contain an element <= cutoff?
bool bound_reaches(const HahnSeries& s, const Monomial& cutoff, Budget& b) {
  for (std::size_t n = 4;; n *= 2) {
    auto p = s.probe(n, b);
    for (const auto& t : p.terms)
      if (t.mono <= cutoff) return true;
    if (p.exhausted) return false;
  }
}

WitnessExpr plain_compose(const FAtom& f, const std::vector<GAtom>& gs, Ctx& c) {
  const auto& xv = f.value.vars();
  std::vector<std::pair<std::string, WitnessExpr>> args;
  args.reserve(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) args.emplace_back(xv[i], g_atom(gs[i], c));
  return WitnessExpr::compose(f_atom(f, c), std::move(args));
}

WitnessExpr tc_rec(const FAtom& f, const std::vector<GAtom>& gs, const Monomial& m,
                   Ctx& c, int depth);

// Product of the selected difference factors g_i - g_i||v, truncated above
// `cut` when present. A truncated single factor splits into two truncated
// atoms; a truncated longer product is rewritten through the product
// segmentation of its first factor against the rest.
WitnessExpr diffs_product_tree(const std::vector<std::size_t>& idx,
                               const std::vector<GAtom>& gs,
                               const std::vector<GAtom>& gvs,
                               const std::vector<Rps>& dvals,
                               const std::optional<Monomial>& cut, Ctx& c) {
  auto diff_tree = [&](std::size_t i) {
    return WitnessExpr::sum({g_atom(gs[i], c), neg(g_atom(gvs[i], c))});
  };
  if (!cut) {
    if (idx.size() == 1) return diff_tree(idx[0]);
    std::vector<WitnessExpr> parts;
    parts.reserve(idx.size());
    for (auto i : idx) parts.push_back(diff_tree(i));
    return WitnessExpr::product(std::move(parts));
  }
  if (idx.size() == 1) {
    const std::size_t i = idx[0];
    return WitnessExpr::sum({g_atom(trunc_g(gs[i], *cut), c),
                             neg(g_atom(trunc_g(gvs[i], *cut), c))});
  }
  std::vector<std::size_t> rest(idx.begin() + 1, idx.end());
  Rps rest_val = dvals[rest[0]];
  for (std::size_t k = 1; k < rest.size(); ++k) rest_val = mul(rest_val, dvals[rest[k]]);
  auto dec = tc_product_decompose(tighten_bound(dvals[idx[0]], c.group),
                                  tighten_bound(rest_val, c.group), *cut, c.b);
  std::vector<WitnessExpr> pieces;
  for (const auto& piece : dec.cuts) {
    WitnessExpr first =
        diffs_product_tree({idx[0]}, gs, gvs, dvals, piece.f_cut, c);
    WitnessExpr lo = diffs_product_tree(rest, gs, gvs, dvals, piece.g_lo, c);
    WitnessExpr hi = diffs_product_tree(
        rest, gs, gvs, dvals, std::optional<Monomial>(piece.g_hi), c);
    pieces.push_back(WitnessExpr::product(
        {std::move(first),
         WitnessExpr::sum({std::move(lo), neg(std::move(hi))})}));
  }
  if (pieces.empty()) return WitnessExpr::scalar(Rational(0));
  return WitnessExpr::sum(std::move(pieces));
}

// The arguments reach at or below the class of m: expand through the Taylor
// sum around the class truncation g||v. Only finitely many orders survive the
// truncation above m; each surviving order is a truncated product, rewritten
// through product segmentation with the composition factors certified
// recursively.
WitnessExpr taylor_case(const FAtom& f, const std::vector<GAtom>& gs, const Monomial& m,
                        const std::vector<std::vector<Monomial>>& bound_mons,
                        Ctx& c, int depth) {
  const auto& xv = f.value.vars();
  const ArchClass v = m.arch_class();
  // rho: the largest bound monomial at or below the class of m; it majorizes
  // every difference g_i - g_i||v.
  std::optional<Monomial> rho;
  for (const auto& mons : bound_mons)
    for (const auto& s : mons)
      if (s.arch_class() <= v) {
        if (!rho || *rho < s) rho = s;
        break;
      }
  if (!rho) throw Error("internal: class analysis found no coarse support element");
  // Minimal cutoff: orders with |h| >= M have support majorized by rho^M < m.
  unsigned long long M = 1;
  Monomial acc = *rho;
  while (!(acc < m)) {
    c.b.step("taylor cutoff");
    acc = acc.mul(*rho);
    ++M;
  }
  const std::string cls = c.group->generator_names()[static_cast<std::size_t>(v.index())];
  std::vector<GAtom> gvs;
  std::vector<Rps> dvals;
  gvs.reserve(gs.size());
  for (const auto& g : gs) {
    GAtom gv{coeff_trunc_v(g.value, v), g.base, "vtrunc(" + g.label + ", " + cls + ")",
             true};
    dvals.push_back(sub(g.value, gv.value));
    gvs.push_back(std::move(gv));
  }
  std::vector<WitnessExpr> terms;
  terms.push_back(tc_rec(f, gvs, m, c, depth + 1));  // order zero
  for (const MultiIndex& h : multi_indices_upto(xv, M - 1)) {
    if (h.total() == 0) continue;
    std::vector<std::size_t> idx;
    std::vector<unsigned long long> hv;
    FAtom fd = f;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const unsigned long long e = h.get(xv[i]);
      hv.push_back(e);
      for (unsigned long long k = 0; k < e; ++k) {
        idx.push_back(i);
        fd.value = derivative(fd.value, xv[i]);
      }
    }
    fd.label = "D(" + f.label + ", " + h.to_string() + ")";
    fd.deriv = true;
    const Rational weight = Rational(1) / multi_factorial(hv);
    Rps aval = dvals[idx[0]];
    for (std::size_t k = 1; k < idx.size(); ++k) aval = mul(aval, dvals[idx[k]]);
    // One-sided expansion of the truncated product: the difference factor has
    // an enumerable support bound (no composition enters it), while the
    // composed factor may carry an infinite geometric majorant.  Walking the
    // difference-factor support s_1 > ... > s_p gives
    //   trunc(A * B, m) = sum_i block_i(A) * trunc(B, m / s_i)
    // with block_i the slice of A at s_i, because a term of A at s_i times a
    // term of B survives the threshold exactly when the B term exceeds
    // m / s_i.  The B side recurses at the coarsened threshold and never has
    // its bound enumerated.  Bound entries with cancelled coefficients only
    // add slices that evaluate to zero.
    const std::vector<Monomial> s0 =
        probe_all_monomials(tighten_bound(aval, c.group).support_bound(), c.b);
    for (std::size_t i = 0; i < s0.size(); ++i) {
      const std::optional<Monomial> below =
          (i + 1 < s0.size()) ? std::optional<Monomial>(s0[i + 1]) : std::nullopt;
      WitnessExpr blk_lo = diffs_product_tree(idx, gs, gvs, dvals, below, c);
      WitnessExpr blk_hi =
          diffs_product_tree(idx, gs, gvs, dvals, std::optional<Monomial>(s0[i]), c);
      WitnessExpr bpart = tc_rec(fd, gvs, m.mul(s0[i].inverse()), c, depth + 1);
      terms.push_back(WitnessExpr::product(
          {WitnessExpr::scalar(weight),
           WitnessExpr::sum({std::move(blk_lo), neg(std::move(blk_hi))}),
           std::move(bpart)}));
    }
  }
  return WitnessExpr::sum(std::move(terms));
}

// Every argument lives strictly inside the classes finer than m's: locate the
// pivot, the largest coefficient-support monomial that either shares m's
// class and sees part of its term block truncated, or sits strictly below
// m's whole class. Splitting the outer series at the pivot reduces the
// truncation either to a smaller outer support or to a coarser threshold.
WitnessExpr pivot_case(const FAtom& f, const std::vector<GAtom>& gs, const Monomial& m,
                       Ctx& c, int depth) {
  const auto& xv = f.value.vars();
  const ArchClass v = m.arch_class();
  std::vector<MultiIndex> scan;
  if (f.value.finite_support())
    scan = *f.value.finite_support();
  else
    scan = multi_indices_upto(xv, c.scan_degree);
  std::map<MultiIndex, Rps> pw;
  auto power = [&](const MultiIndex& mi) -> const Rps& {
    auto it = pw.find(mi);
    if (it != pw.end()) return it->second;
    Rps val = Rps::one(c.out_vars, c.group);
    for (std::size_t i = 0; i < xv.size(); ++i)
      for (unsigned long long k = 0; k < mi.get(xv[i]); ++k) val = mul(val, gs[i].value);
    return pw.emplace(mi, std::move(val)).first->second;
  };
  std::optional<Monomial> pivot;
  for (const MultiIndex& mi : scan) {
    c.b.step("pivot scan");
    // Walk the coefficient stream lazily.  In the decreasing term order all
    // strictly-finer-class monomials precede the class-v ones, which in turn
    // precede every strictly-coarser one, so the first coarser-class term
    // marks the end of the candidate region and is itself below m.  This
    // avoids enumerating coefficient supports that continue past the region.
    const HahnSeries coeff = f.value.coeff(mi);
    std::optional<Monomial> best;  // largest qualifying element of this support
    for (std::size_t i = 0;; ++i) {
      const Term* t = coeff.core()->term(i, c.b);
      if (!t) break;
      const Monomial& n = t->mono;
      const ArchClass nc = n.arch_class();
      if (nc == v) {
        if (bound_reaches(power(mi).support_bound(), m.mul(n.inverse()), c.b)) {
          best = n;
          break;
        }
      } else if (nc < v) {
        best = n;  // coarser than m's whole class, hence below m
        break;
      }
    }
    if (best && (!pivot || *pivot < *best)) pivot = best;
  }
  if (!pivot) return plain_compose(f, gs, c);  // the truncation removes nothing
  if (pivot->arch_class() != v) {
    // Strictly below the whole class of m: the part of f at or below the
    // pivot only produces terms below m, so it drops out entirely.
    return plain_compose(trunc_f(f, *pivot), gs, c);
  }
  FAtom fh = trunc_f(f, *pivot);
  // The tail f - f||pivot has every coefficient supported at or below the
  // pivot, so it carries the complementary fragment of f's bound; without the
  // tightening the rescale step would loop on the subtraction's additive
  // bound.
  const Rps tail_raw = sub(f.value, fh.value);
  const Rps tail = Rps::from_fn(
      xv, c.group, [tail_raw](const MultiIndex& mi) { return tail_raw.coeff(mi); },
      fragment(f.value.support_bound(), SegmentSet({Segment::below(*pivot, true)})),
      f.value.finite_support());
  FAtom f1{hahnforge::mono_scale(pivot->inverse(), tail),
           "scale(" + pivot->inverse().to_string() + ", sub(" + f.label + ", " +
               fh.label + "))",
           true, true, f.deriv, true};
  return WitnessExpr::sum(
      {tc_rec(fh, gs, m, c, depth + 1),
       WitnessExpr::mono_scale(
           *pivot, tc_rec(f1, gs, m.mul(pivot->inverse()), c, depth + 1))});
}

WitnessExpr tc_rec(const FAtom& f, const std::vector<GAtom>& gs, const Monomial& m,
                   Ctx& c, int depth) {
  c.b.step("composition witness");
  if (depth > c.max_depth)
    throw Error("composition witness: recursion depth budget exceeded (" +
                std::to_string(c.max_depth) + ")");
  const auto flead = f.value.support_bound().leading_term(c.b);
  if (!flead) return WitnessExpr::scalar(Rational(0));
  const Monomial unit = Monomial::one(c.group);
  if (flead->mono > unit) {
    // Rescale so the outer support bound sits at or below the identity.
    const Monomial L = flead->mono;
    FAtom fs{hahnforge::mono_scale(L.inverse(), f.value),
             "scale(" + L.inverse().to_string() + ", " + f.label + ")", f.ring, f.trunc,
             f.deriv, true};
    return WitnessExpr::mono_scale(L, tc_rec(fs, gs, m.mul(L.inverse()), c, depth + 1));
  }
  if (m >= unit) return WitnessExpr::scalar(Rational(0));
  if (f.value.vars().empty()) return f_atom(trunc_f(f, m), c);
  // f = x_i exactly: the truncated composition is the truncated argument.
  if (const auto& fin = f.value.finite_support();
      fin && fin->size() == 1 && (*fin)[0].total() == 1) {
    const auto pr = f.value.coeff((*fin)[0]).probe(2, c.b);
    if (pr.exhausted && pr.terms.size() == 1 && pr.terms[0].mono.is_one() &&
        pr.terms[0].coeff == Rational(1)) {
      const auto& xv = f.value.vars();
      for (std::size_t i = 0; i < xv.size(); ++i)
        if ((*fin)[0].get(xv[i]) == 1) return g_atom(trunc_g(gs[i], m), c);
    }
  }
  std::vector<std::vector<Monomial>> bound_mons;
  bound_mons.reserve(gs.size());
  bool any = false;
  for (const auto& g : gs) {
    bound_mons.push_back(probe_all_monomials(g.value.support_bound(), c.b));
    any = any || !bound_mons.back().empty();
  }
  if (!any) return plain_compose(trunc_f(f, m), gs, c);  // all arguments zero
  const ArchClass v = m.arch_class();
  bool coarse = false;
  for (const auto& mons : bound_mons) {
    for (const auto& s : mons)
      if (s.arch_class() <= v) {
        coarse = true;
        break;
      }
    if (coarse) break;
  }
  if (coarse) return taylor_case(f, gs, m, bound_mons, c, depth);
  return pivot_case(f, gs, m, c, depth);
}

}  // namespace

WitnessExpr tc_composition_witness(const Rps& f, const std::map<std::string, Rps>& args,
                                   const Monomial& m, const SetOracle& oracle_a,
                                   const SetOracle& oracle_b, Budget& b,
                                   const TcWitnessOptions& opts) {
  require_same_group(f.group(), m.group());
  const auto& xv = f.vars();
  if (args.size() != xv.size())
    throw DomainError("composition witness: argument count does not match variables");
  std::vector<GAtom> gs;
  gs.reserve(xv.size());
  std::vector<std::string> out_vars;
  for (const auto& x : xv) {
    auto it = args.find(x);
    if (it == args.end())
      throw DomainError("composition witness: missing argument for variable " + x);
    require_same_group(f.group(), it->second.group());
    if (!is_composable(it->second, b))
      throw DomainError("composition witness: argument for variable " + x +
                        " is not composable");
    if (out_vars.empty())
      out_vars = it->second.vars();
    else if (it->second.vars() != out_vars)
      throw DomainError("composition witness: arguments must share one variable list");
    gs.push_back(GAtom{it->second, "g[" + x + "]", "g[" + x + "]", false});
  }
  Ctx c{oracle_a, oracle_b, b,            f.group(),
        out_vars, opts.max_depth, opts.scan_degree};
  FAtom f0{f, "f", false, false, false, false};
  return tc_rec(f0, gs, m, c, 0);
}

}  // namespace hahnforge

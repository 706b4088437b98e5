#include "hahnforge/rps.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "lattice_stream.hpp"

namespace hahnforge {

// ---- MultiIndex --------------------------------------------------------------

unsigned long long MultiIndex::get(const std::string& var) const {
  auto it = e_.find(var);
  return it == e_.end() ? 0ull : it->second;
}

void MultiIndex::set(const std::string& var, unsigned long long e) {
  if (e == 0)
    e_.erase(var);
  else
    e_[var] = e;
}

unsigned long long MultiIndex::total() const {
  unsigned long long t = 0;
  for (const auto& [v, e] : e_) t += e;
  return t;
}

MultiIndex MultiIndex::plus(const MultiIndex& o) const {
  MultiIndex out(*this);
  for (const auto& [v, e] : o.e_) out.set(v, out.get(v) + e);
  return out;
}

std::optional<MultiIndex> MultiIndex::minus(const MultiIndex& o) const {
  MultiIndex out(*this);
  for (const auto& [v, e] : o.e_) {
    unsigned long long have = out.get(v);
    if (have < e) return std::nullopt;
    out.set(v, have - e);
  }
  return out;
}

bool MultiIndex::leq(const MultiIndex& o) const {
  for (const auto& [v, e] : e_)
    if (e > o.get(v)) return false;
  return true;
}

std::string MultiIndex::to_string() const {
  if (e_.empty()) return "1";
  std::string out;
  for (const auto& [v, e] : e_) {
    if (!out.empty()) out += "*";
    out += v;
    if (e != 1) out += "^" + std::to_string(e);
  }
  return out;
}

MultiIndex mi(
    std::initializer_list<std::pair<std::string, unsigned long long>> items) {
  MultiIndex m;
  for (const auto& [v, e] : items) m.set(v, m.get(v) + e);
  return m;
}

namespace {

/// All multi-indices over vars with total degree exactly d.
void gen_exact(const std::vector<std::string>& vars, std::size_t i,
               unsigned long long d, MultiIndex& acc,
               std::vector<MultiIndex>& out) {
  if (i + 1 == vars.size() || vars.empty()) {
    if (vars.empty()) {
      if (d == 0) out.push_back(acc);
      return;
    }
    acc.set(vars[i], d);
    out.push_back(acc);
    acc.set(vars[i], 0);
    return;
  }
  for (unsigned long long e = 0; e <= d; ++e) {
    acc.set(vars[i], e);
    gen_exact(vars, i + 1, d - e, acc, out);
  }
  acc.set(vars[i], 0);
}

std::vector<MultiIndex> indices_of_degree(const std::vector<std::string>& vars,
                                          unsigned long long d) {
  std::vector<MultiIndex> out;
  MultiIndex acc;
  if (vars.empty()) {
    if (d == 0) out.push_back(acc);
    return out;
  }
  gen_exact(vars, 0, d, acc, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<MultiIndex> multi_indices_upto(const std::vector<std::string>& vars,
                                           unsigned long long max_total) {
  std::vector<MultiIndex> out;
  for (unsigned long long d = 0; d <= max_total; ++d) {
    auto layer = indices_of_degree(vars, d);
    out.insert(out.end(), layer.begin(), layer.end());
    if (vars.empty()) break;
  }
  return out;
}

// ---- support indicator -------------------------------------------------------

HahnSeries support_indicator(const HahnSeries& f) {
  struct Src : TermSource {
    std::shared_ptr<StreamCore> core;
    std::size_t i = 0;
    explicit Src(std::shared_ptr<StreamCore> c) : core(std::move(c)) {}
    std::optional<Term> next(Budget& b) override {
      const Term* t = core->term(i, b);
      if (!t) return std::nullopt;
      ++i;
      return Term{t->mono, Rational(1)};
    }
  };
  return HahnSeries::from_source(f.group(), std::make_unique<Src>(f.core()));
}

// ---- Rps state ---------------------------------------------------------------

struct Rps::State {
  std::vector<std::string> vars;  // sorted, unique
  GroupPtr group;
  CoeffFn fn;
  HahnSeries bound;
  std::optional<std::vector<MultiIndex>> fin;
  mutable std::map<MultiIndex, HahnSeries> memo;

  State(std::vector<std::string> v, GroupPtr g, CoeffFn f, HahnSeries b,
        std::optional<std::vector<MultiIndex>> fi)
      : vars(std::move(v)),
        group(std::move(g)),
        fn(std::move(f)),
        bound(std::move(b)),
        fin(std::move(fi)) {}
};

namespace {

std::vector<std::string> canon_vars(std::vector<std::string> vars) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

void require_known_vars(const MultiIndex& m,
                        const std::vector<std::string>& vars) {
  for (const auto& [v, e] : m.entries())
    if (!std::binary_search(vars.begin(), vars.end(), v))
      throw DomainError("multi-index uses unknown variable " + v);
}

void require_same_vars(const Rps& f, const Rps& g) {
  if (f.vars() != g.vars())
    throw DomainError("operation requires identical variable lists");
  require_same_group(f.group(), g.group());
}

std::optional<std::vector<MultiIndex>> fin_union(
    const std::optional<std::vector<MultiIndex>>& a,
    const std::optional<std::vector<MultiIndex>>& b) {
  if (!a || !b) return std::nullopt;
  std::vector<MultiIndex> out(*a);
  out.insert(out.end(), b->begin(), b->end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool fin_contains(const std::vector<MultiIndex>& fin, const MultiIndex& m) {
  return std::binary_search(fin.begin(), fin.end(), m);
}

std::optional<std::vector<MultiIndex>> fin_sorted(
    std::vector<MultiIndex> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Rps Rps::zero(std::vector<std::string> vars, GroupPtr group) {
  GroupPtr g = group;
  return Rps(std::make_shared<State>(
      canon_vars(std::move(vars)), group,
      [g](const MultiIndex&) { return HahnSeries::zero(g); },
      HahnSeries::zero(group), std::vector<MultiIndex>{}));
}

Rps Rps::constant(std::vector<std::string> vars, GroupPtr group,
                  const HahnSeries& r0) {
  GroupPtr g = group;
  HahnSeries c = r0;
  require_same_group(r0.group(), group);
  return Rps(std::make_shared<State>(
      canon_vars(std::move(vars)), group,
      [g, c](const MultiIndex& m) {
        return m.is_zero() ? c : HahnSeries::zero(g);
      },
      support_indicator(r0), std::vector<MultiIndex>{MultiIndex{}}));
}

Rps Rps::one(std::vector<std::string> vars, GroupPtr group) {
  return constant(std::move(vars), group, HahnSeries::constant(group, 1));
}

Rps Rps::variable(std::vector<std::string> vars, GroupPtr group,
                  const std::string& name) {
  auto cv = canon_vars(std::move(vars));
  if (!std::binary_search(cv.begin(), cv.end(), name))
    throw DomainError("variable " + name + " is not in the variable list");
  GroupPtr g = group;
  MultiIndex e;
  e.set(name, 1);
  return Rps(std::make_shared<State>(
      std::move(cv), group,
      [g, e](const MultiIndex& m) {
        return m == e ? HahnSeries::constant(g, 1) : HahnSeries::zero(g);
      },
      HahnSeries::constant(group, 1), std::vector<MultiIndex>{e}));
}

Rps Rps::from_coeffs(std::vector<std::string> vars, GroupPtr group,
                     const std::map<MultiIndex, HahnSeries>& coeffs) {
  auto cv = canon_vars(std::move(vars));
  std::vector<MultiIndex> keys;
  std::vector<HahnSeries> indicators;
  for (const auto& [m, s] : coeffs) {
    require_known_vars(m, cv);
    require_same_group(s.group(), group);
    keys.push_back(m);
    indicators.push_back(support_indicator(s));
  }
  auto table = std::make_shared<std::map<MultiIndex, HahnSeries>>(coeffs);
  GroupPtr g = group;
  return Rps(std::make_shared<State>(
      std::move(cv), group,
      [g, table](const MultiIndex& m) {
        auto it = table->find(m);
        return it == table->end() ? HahnSeries::zero(g) : it->second;
      },
      add_many(std::move(indicators), group), fin_sorted(std::move(keys))));
}

Rps Rps::from_fn(std::vector<std::string> vars, GroupPtr group, CoeffFn fn,
                 HahnSeries support_bound,
                 std::optional<std::vector<MultiIndex>> finite_support) {
  if (finite_support) finite_support = fin_sorted(std::move(*finite_support));
  return Rps(std::make_shared<State>(canon_vars(std::move(vars)), group,
                                     std::move(fn), std::move(support_bound),
                                     std::move(finite_support)));
}

const std::vector<std::string>& Rps::vars() const { return st_->vars; }
const GroupPtr& Rps::group() const { return st_->group; }
const HahnSeries& Rps::support_bound() const { return st_->bound; }
const std::optional<std::vector<MultiIndex>>& Rps::finite_support() const {
  return st_->fin;
}

HahnSeries Rps::coeff(const MultiIndex& m) const {
  require_known_vars(m, st_->vars);
  if (st_->fin && !fin_contains(*st_->fin, m))
    return HahnSeries::zero(st_->group);
  auto it = st_->memo.find(m);
  if (it != st_->memo.end()) return it->second;
  HahnSeries v = st_->fn(m);
  st_->memo.emplace(m, v);
  return v;
}

// ---- ring operations ---------------------------------------------------------

Rps add(const Rps& f, const Rps& g) {
  require_same_vars(f, g);
  Rps a = f, b = g;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, b](const MultiIndex& m) { return add(a.coeff(m), b.coeff(m)); },
      add(f.support_bound(), g.support_bound()),
      fin_union(f.finite_support(), g.finite_support()));
}

Rps sub(const Rps& f, const Rps& g) { return add(f, neg(g)); }

Rps neg(const Rps& f) { return scalar_mul(Rational(-1), f); }

Rps scalar_mul(const Rational& c, const Rps& f) {
  Rps a = f;
  Rational k = c;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, k](const MultiIndex& m) { return scalar_mul(k, a.coeff(m)); },
      f.support_bound(), f.finite_support());
}

Rps coeff_scale(const HahnSeries& r, const Rps& f) {
  require_same_group(r.group(), f.group());
  Rps a = f;
  HahnSeries s = r;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, s](const MultiIndex& m) { return mul(s, a.coeff(m)); },
      mul(support_indicator(r), f.support_bound()), f.finite_support());
}

Rps mono_scale(const Monomial& m, const Rps& f) {
  require_same_group(m.group(), f.group());
  Rps a = f;
  Monomial k = m;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, k](const MultiIndex& p) { return monomial_mul(k, a.coeff(p)); },
      monomial_mul(m, f.support_bound()), f.finite_support());
}

namespace {

/// All multi-indices componentwise <= p, in sorted order.
std::vector<MultiIndex> sub_indices(const MultiIndex& p) {
  std::vector<MultiIndex> out{MultiIndex{}};
  for (const auto& [v, e] : p.entries()) {
    std::vector<MultiIndex> next;
    for (const auto& m : out)
      for (unsigned long long k = 0; k <= e; ++k) {
        MultiIndex n = m;
        n.set(v, k);
        next.push_back(n);
      }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Rps mul(const Rps& f, const Rps& g) {
  require_same_vars(f, g);
  Rps a = f, b = g;
  GroupPtr group = f.group();
  std::optional<std::vector<MultiIndex>> fin;
  if (f.finite_support() && g.finite_support()) {
    std::vector<MultiIndex> sums;
    for (const auto& m : *f.finite_support())
      for (const auto& l : *g.finite_support()) sums.push_back(m.plus(l));
    fin = fin_sorted(std::move(sums));
  }
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, b, group](const MultiIndex& p) {
        std::vector<HahnSeries> parts;
        for (const auto& m : sub_indices(p))
          parts.push_back(mul(a.coeff(m), b.coeff(*p.minus(m))));
        return add_many(std::move(parts), group);
      },
      mul(f.support_bound(), g.support_bound()), std::move(fin));
}

Rps pow_natural(const Rps& f, unsigned long long n) {
  Rps acc = Rps::one(f.vars(), f.group());
  for (unsigned long long i = 0; i < n; ++i) acc = mul(acc, f);
  return acc;
}

Rps derivative(const Rps& f, const std::string& var) {
  if (!std::binary_search(f.vars().begin(), f.vars().end(), var))
    throw DomainError("derivative in unknown variable " + var);
  Rps a = f;
  std::string x = var;
  std::optional<std::vector<MultiIndex>> fin;
  if (f.finite_support()) {
    std::vector<MultiIndex> shifted;
    MultiIndex e;
    e.set(x, 1);
    for (const auto& m : *f.finite_support())
      if (auto d = m.minus(e)) shifted.push_back(*d);
    fin = fin_sorted(std::move(shifted));
  }
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, x](const MultiIndex& m) {
        MultiIndex up = m;
        up.set(x, m.get(x) + 1);
        return scalar_mul(Rational(static_cast<long long>(m.get(x)) + 1),
                          a.coeff(up));
      },
      f.support_bound(), std::move(fin));
}

Rps extend_vars(const Rps& f, std::vector<std::string> vars) {
  vars.insert(vars.end(), f.vars().begin(), f.vars().end());
  auto cv = canon_vars(std::move(vars));
  if (cv == f.vars()) return f;
  Rps a = f;
  auto base = f.vars();
  GroupPtr group = f.group();
  return Rps::from_fn(
      cv, group,
      [a, base, group](const MultiIndex& m) {
        for (const auto& [v, e] : m.entries())
          if (!std::binary_search(base.begin(), base.end(), v))
            return HahnSeries::zero(group);
        return a.coeff(m);
      },
      f.support_bound(), f.finite_support());
}

Rps set_vars_zero(const Rps& f, const std::vector<std::string>& kill) {
  std::vector<std::string> rest;
  for (const auto& v : f.vars())
    if (std::find(kill.begin(), kill.end(), v) == kill.end())
      rest.push_back(v);
  Rps a = f;
  std::optional<std::vector<MultiIndex>> fin;
  if (f.finite_support()) {
    std::vector<MultiIndex> kept;
    for (const auto& m : *f.finite_support()) {
      bool clean = true;
      for (const auto& v : kill)
        if (m.get(v) != 0) clean = false;
      if (clean) kept.push_back(m);
    }
    fin = fin_sorted(std::move(kept));
  }
  return Rps::from_fn(
      rest, f.group(), [a](const MultiIndex& m) { return a.coeff(m); },
      f.support_bound(), std::move(fin));
}

// ---- coefficient-wise truncations --------------------------------------------

Rps coeff_trunc(const Rps& f, const Monomial& m) {
  require_same_group(m.group(), f.group());
  Rps a = f;
  Monomial cut = m;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, cut](const MultiIndex& p) { return truncate(a.coeff(p), cut); },
      truncate(f.support_bound(), m), f.finite_support());
}

Rps coeff_trunc_v(const Rps& f, const ArchClass& v) {
  Rps a = f;
  ArchClass cls = v;
  return Rps::from_fn(
      f.vars(), f.group(),
      [a, cls](const MultiIndex& p) { return v_truncate(a.coeff(p), cls); },
      v_truncate(f.support_bound(), v), f.finite_support());
}

// ---- composition -------------------------------------------------------------

bool is_composable(const Rps& f, Budget& b) {
  Monomial unit = Monomial::one(f.group());
  auto lead = f.support_bound().leading_term(b);
  if (lead && unit < lead->mono) return false;
  auto nf = normal_decompose(f.coeff(MultiIndex{}), b);
  if (nf && !(nf->mono < unit)) return false;
  return true;
}

namespace {

struct ComposeShared {
  explicit ComposeShared(Rps f_)
      : f(std::move(f_)), fvars(f.vars()), group(f.group()) {}

  Rps f;
  std::vector<std::string> fvars;  // order matching gs
  std::vector<Rps> gs;
  std::vector<bool> const_zero;    // argument has zero constant coefficient
  std::optional<Monomial> sigma;   // majorant of nonzero constant leads
  std::vector<std::string> out_vars;
  GroupPtr group;
  std::map<MultiIndex, Rps> powers;
  std::map<unsigned long long, std::vector<MultiIndex>> fin_by_degree;
  bool have_fin = false;
  unsigned long long fin_max_degree = 0;

  const Rps& power(const MultiIndex& m) {
    auto it = powers.find(m);
    if (it != powers.end()) return it->second;
    Rps value = Rps::one(out_vars, group);
    if (!m.is_zero()) {
      const auto& [v, e] = *m.entries().begin();
      MultiIndex down = m;
      down.set(v, e - 1);
      std::size_t i = static_cast<std::size_t>(
          std::find(fvars.begin(), fvars.end(), v) - fvars.begin());
      value = mul(power(down), gs[i]);
    }
    return powers.emplace(m, std::move(value)).first->second;
  }

  /// Degree-d slab of candidate indices, filtered so that arguments with a
  /// zero constant coefficient never exceed the target degree in total.
  std::vector<MultiIndex> slab(unsigned long long d,
                               unsigned long long target_total) const {
    std::vector<MultiIndex> raw;
    if (have_fin) {
      auto it = fin_by_degree.find(d);
      if (it != fin_by_degree.end()) raw = it->second;
    } else {
      raw = indices_of_degree(fvars, d);
    }
    std::vector<MultiIndex> out;
    for (const auto& m : raw) {
      unsigned long long z = 0;
      for (std::size_t i = 0; i < fvars.size(); ++i)
        if (const_zero[i]) z += m.get(fvars[i]);
      if (z <= target_total) out.push_back(m);
    }
    return out;
  }
};

}  // namespace

Rps compose(const Rps& f, const std::map<std::string, Rps>& args, Budget& b) {
  auto sh = std::make_shared<ComposeShared>(f);

  if (args.size() != sh->fvars.size())
    throw DomainError("composition needs exactly one argument per variable");
  bool first = true;
  for (const auto& v : sh->fvars) {
    auto it = args.find(v);
    if (it == args.end())
      throw DomainError("composition is missing an argument for " + v);
    const Rps& g = it->second;
    require_same_group(g.group(), f.group());
    if (first) {
      sh->out_vars = g.vars();
      first = false;
    } else if (g.vars() != sh->out_vars) {
      throw DomainError("composition arguments must share one variable list");
    }
    if (!is_composable(g, b))
      throw DomainError("composition argument for " + v + " is not composable");
    auto nf = normal_decompose(g.coeff(MultiIndex{}), b);
    sh->const_zero.push_back(!nf);
    if (nf && (!sh->sigma || *sh->sigma < nf->mono)) sh->sigma = nf->mono;
    sh->gs.push_back(g);
  }

  auto lead = f.support_bound().leading_term(b);
  if (!lead) return Rps::zero(sh->out_vars, sh->group);
  Monomial head = lead->mono;

  if (f.finite_support()) {
    sh->have_fin = true;
    for (const auto& m : *f.finite_support()) {
      sh->fin_by_degree[m.total()].push_back(m);
      sh->fin_max_degree = std::max(sh->fin_max_degree, m.total());
    }
  }
  bool all_const_zero = true;
  for (bool z : sh->const_zero) all_const_zero = all_const_zero && z;

  GroupPtr group = sh->group;
  Rps::CoeffFn fn = [sh, head, all_const_zero,
                     group](const MultiIndex& target) -> HahnSeries {
    unsigned long long ttotal = target.total();
    std::optional<unsigned long long> max_d;
    if (all_const_zero) max_d = ttotal;
    if (sh->have_fin && (!max_d || sh->fin_max_degree < *max_d))
      max_d = sh->fin_max_degree;

    struct Gen {
      std::shared_ptr<ComposeShared> sh;
      MultiIndex target;
      unsigned long long ttotal;
      std::optional<unsigned long long> max_d;
      Monomial key;
      unsigned long long d = 0;
      bool loaded = false;
      std::vector<MultiIndex> slab;
      std::size_t pos = 0;
    };
    auto st = std::make_shared<Gen>(
        Gen{sh, target, ttotal, max_d, head, 0, false, {}, 0});
    return merge_family(
        group, [st](Budget& bb) -> std::optional<FamilyMergeSource::Member> {
          for (;;) {
            if (st->max_d && st->d > *st->max_d) return std::nullopt;
            if (!st->loaded) {
              st->slab = st->sh->slab(st->d, st->ttotal);
              st->pos = 0;
              st->loaded = true;
            }
            if (st->pos >= st->slab.size()) {
              st->d += 1;
              st->loaded = false;
              // past the target degree every member gains a factor that is
              // supported below sigma
              if (st->d > st->ttotal && st->sh->sigma)
                st->key = st->key.mul(*st->sh->sigma);
              continue;
            }
            bb.step("composition slabs");
            const MultiIndex& m = st->slab[st->pos];
            HahnSeries member =
                mul(st->sh->f.coeff(m), st->sh->power(m).coeff(st->target));
            ++st->pos;
            return FamilyMergeSource::Member{st->key, std::move(member)};
          }
        });
  };

  // finite support when f and all arguments are structurally polynomial
  std::optional<std::vector<MultiIndex>> fin;
  if (sh->have_fin) {
    bool args_fin = true;
    for (const auto& g : sh->gs) args_fin = args_fin && g.finite_support();
    if (args_fin) {
      std::vector<MultiIndex> out;
      bool ok = true;
      for (const auto& m : *f.finite_support()) {
        std::vector<MultiIndex> sums{MultiIndex{}};
        for (std::size_t i = 0; i < sh->fvars.size() && ok; ++i)
          for (unsigned long long k = 0; k < m.get(sh->fvars[i]) && ok; ++k) {
            std::vector<MultiIndex> next;
            for (const auto& s : sums)
              for (const auto& e : *sh->gs[i].finite_support())
                next.push_back(s.plus(e));
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            if (next.size() > 4096) ok = false;
            sums = std::move(next);
          }
        if (!ok) break;
        out.insert(out.end(), sums.begin(), sums.end());
        if (out.size() > 65536) {
          ok = false;
          break;
        }
      }
      if (ok) fin = fin_sorted(std::move(out));
    }
  }

  // support bound: every output coefficient lies under (bound of f) times a
  // finite product of sub-unit monomials drawn from the argument bounds
  std::vector<HahnSeries> arg_bounds;
  for (const auto& g : sh->gs) arg_bounds.push_back(g.support_bound());
  HahnSeries pooled = add_many(std::move(arg_bounds), group);
  SegmentSet below_one(
      {Segment::below(Monomial::one(group), /*include_hi=*/false)});
  HahnSeries star = invert_unit(
      sub(HahnSeries::constant(group, 1), fragment(pooled, below_one)));
  return Rps::from_fn(sh->out_vars, group, std::move(fn),
                      mul(f.support_bound(), star), std::move(fin));
}

// ---- Taylor shift ------------------------------------------------------------

Rps taylor_shift(const Rps& f,
                 const std::map<std::string, std::string>& partner) {
  const auto& base = f.vars();
  if (partner.size() != base.size())
    throw DomainError("taylor shift needs exactly one partner per variable");
  std::vector<std::string> doubled(base);
  for (const auto& [x, z] : partner) {
    if (!std::binary_search(base.begin(), base.end(), x))
      throw DomainError("taylor shift partner for unknown variable " + x);
    doubled.push_back(z);
  }
  auto cv = canon_vars(doubled);
  if (cv.size() != 2 * base.size())
    throw DomainError("taylor shift partners must be fresh distinct names");

  Rps a = f;
  auto pmap = partner;
  std::optional<std::vector<MultiIndex>> fin;
  if (f.finite_support()) {
    std::vector<MultiIndex> out;
    for (const auto& m : *f.finite_support()) {
      // all splits m = l + h, with h moved onto the partner names
      std::vector<MultiIndex> splits{MultiIndex{}};
      for (const auto& [v, e] : m.entries()) {
        std::vector<MultiIndex> next;
        for (const auto& s : splits)
          for (unsigned long long h = 0; h <= e; ++h) {
            MultiIndex n = s;
            n.set(v, e - h);
            n.set(pmap.at(v), h);
            next.push_back(n);
          }
        splits = std::move(next);
      }
      out.insert(out.end(), splits.begin(), splits.end());
    }
    fin = fin_sorted(std::move(out));
  }
  return Rps::from_fn(
      cv, f.group(),
      [a, pmap](const MultiIndex& m) {
        MultiIndex full;  // l + h pulled back to the original names
        Rational weight(1);
        for (const auto& [x, z] : pmap) {
          unsigned long long l = m.get(x), h = m.get(z);
          full.set(x, l + h);
          weight *= binomial(Rational(static_cast<long long>(l + h)), h);
        }
        return scalar_mul(weight, a.coeff(full));
      },
      f.support_bound(), std::move(fin));
}

// ---- from_gps ----------------------------------------------------------------

namespace {

struct GpsVarData {
  std::string name;
  Rational shift;
  Monomial mono;
  std::optional<Rational> cap;
  Rational a_root;      // a^(1/root_den)
  long long root_den;
};

}  // namespace

Rps from_gps(const GpsExpr& f, const std::map<std::string, Rational>& a,
             const std::map<std::string, Monomial>& m, GroupPtr group) {
  const GpsLattice& L = f.lattice();
  std::vector<std::string> xvars, yvars;
  for (const auto& name : f.vars()->names())
    (f.vars()->is_classical(name) ? yvars : xvars).push_back(name);
  if (a.size() != xvars.size() || m.size() != xvars.size())
    throw DomainError(
        "substitution data must cover exactly the non-classical variables");

  Monomial unit = Monomial::one(group);
  std::vector<GpsVarData> xs;
  for (const auto& v : xvars) {
    auto ait = a.find(v);
    auto mit = m.find(v);
    if (ait == a.end() || mit == m.end())
      throw DomainError("missing substitution data for variable " + v);
    require_same_group(mit->second.group(), group);
    if (!(mit->second < unit))
      throw DomainError("substitution monomial for " + v + " must be below 1");
    if (ait->second <= 0)
      throw DomainError("substitution scale for " + v + " must be positive");
    long long den = std::lcm(denominator_of(L.shift.get(v)), L.denom);
    auto root =
        exact_nth_root(ait->second, static_cast<unsigned long long>(den));
    if (!root)
      throw DomainError("scale " + to_string(ait->second) + " for " + v +
                        " has no exact " + std::to_string(den) +
                        "-th root over the rationals");
    GpsVarData d{v, L.shift.get(v), mit->second, std::nullopt, *root, den};
    auto cit = L.var_cap.find(v);
    if (cit != L.var_cap.end()) d.cap = cit->second;
    xs.push_back(std::move(d));
  }

  struct YData {
    std::string name;
    Rational shift;
    std::optional<Rational> cap;
  };
  std::vector<YData> ys;
  for (const auto& v : yvars) {
    YData d{v, L.shift.get(v), std::nullopt};
    auto cit = L.var_cap.find(v);
    if (cit != L.var_cap.end()) d.cap = cit->second;
    ys.push_back(std::move(d));
  }

  GpsExpr fc = f;
  auto xsp = std::make_shared<std::vector<GpsVarData>>(xs);
  auto ysp = std::make_shared<std::vector<YData>>(ys);
  std::optional<Rational> grade_bound = L.grade_bound;
  long long denom = L.denom;

  Rps::CoeffFn fn = [fc, xsp, ysp, grade_bound, denom,
                     group](const MultiIndex& M) -> HahnSeries {
    ExponentVector lfix;
    Rational lgrade(0);
    for (const auto& y : *ysp) {
      unsigned long long e = M.get(y.name);
      if (y.cap && Rational(static_cast<long long>(e)) > *y.cap)
        return HahnSeries::zero(group);
      if (Rational(static_cast<long long>(e)) < y.shift)
        return HahnSeries::zero(group);
      if (e != 0) lfix.set(y.name, Rational(static_cast<long long>(e)));
      lgrade += Rational(static_cast<long long>(e));
    }
    std::optional<Rational> gb;
    if (grade_bound) gb = *grade_bound - lgrade;

    std::vector<detail::LatticeVar> lv;
    for (const auto& x : *xsp)
      lv.push_back(detail::LatticeVar{x.name, x.shift, x.mono, x.cap});

    struct St {
      GpsExpr f;
      detail::KeyedLatticeStream stream;
      std::shared_ptr<std::vector<GpsVarData>> xs;
      ExponentVector lfix;
      MultiIndex M;
      std::optional<detail::KeyedLatticeStream::Point> pending;
    };
    auto st = std::make_shared<St>(
        St{fc, detail::KeyedLatticeStream(group, std::move(lv), denom, gb),
           xsp, lfix, M, std::nullopt});
    return merge_family(
        group, [st](Budget& bb) -> std::optional<FamilyMergeSource::Member> {
          for (;;) {
            if (!st->pending) st->pending = st->stream.next(bb);
            if (!st->pending) return std::nullopt;
            ExponentVector full = st->pending->gamma.plus(st->lfix);
            Rational w = st->f.coeff(full, bb);
            if (w != 0) {
              for (const auto& x : *st->xs) {
                Rational gv = st->pending->gamma.get(x.name);
                unsigned long long mv = st->M.get(x.name);
                Rational bc = binomial(gv, mv);
                if (bc == 0) {
                  w = 0;
                  break;
                }
                Rational e = (gv - Rational(static_cast<long long>(mv))) *
                             Rational(x.root_den);
                w *= bc *
                     pow_int(x.a_root, numerator(e).convert_to<long long>());
              }
            }
            if (w == 0) {
              st->pending.reset();
              continue;
            }
            Monomial key = st->pending->key;
            st->pending.reset();
            return FamilyMergeSource::Member{
                key, HahnSeries::monomial_term(key, w)};
          }
        });
  };

  // support bound: every coefficient monomial is a key of the x-lattice
  std::optional<Rational> bound_gb = L.grade_bound;
  if (bound_gb)
    for (const auto& y : ys)
      if (y.shift > 0) *bound_gb -= y.shift;
  struct BSt {
    detail::KeyedLatticeStream stream;
    std::optional<detail::KeyedLatticeStream::Point> pending;
  };
  std::vector<detail::LatticeVar> blv;
  for (const auto& x : xs)
    blv.push_back(detail::LatticeVar{x.name, x.shift, x.mono, x.cap});
  auto bst = std::make_shared<BSt>(
      BSt{detail::KeyedLatticeStream(group, std::move(blv), denom, bound_gb),
          std::nullopt});
  HahnSeries bound = merge_family(
      group, [bst](Budget& bb) -> std::optional<FamilyMergeSource::Member> {
        auto p = bst->stream.next(bb);
        if (!p) return std::nullopt;
        return FamilyMergeSource::Member{
            p->key, HahnSeries::monomial_term(p->key, 1)};
      });

  // finite coefficient support when the whole lattice is natural and capped
  std::optional<std::vector<MultiIndex>> fin;
  bool natural = (L.denom == 1);
  for (const auto& name : f.vars()->names())
    if (denominator_of(L.shift.get(name)) != 1) natural = false;
  if (natural) {
    Rational shift_sum(0);
    for (const auto& name : f.vars()->names()) shift_sum += L.shift.get(name);
    std::vector<std::pair<std::string, unsigned long long>> caps;
    bool ok = true;
    bool empty = false;
    unsigned long long box = 1;
    for (const auto& name : f.vars()->names()) {
      std::optional<Rational> c;
      auto cit = L.var_cap.find(name);
      if (cit != L.var_cap.end()) c = cit->second;
      if (L.grade_bound) {
        Rational alt = *L.grade_bound - (shift_sum - L.shift.get(name));
        if (!c || alt < *c) c = alt;
      }
      if (!c) {
        ok = false;
        break;
      }
      if (*c < L.shift.get(name)) {
        empty = true;
        break;
      }
      auto n = numerator(Rational(*c));  // floor: shifts and caps integral here
      Rational fl(n / denominator(Rational(*c)));
      unsigned long long cap =
          static_cast<unsigned long long>(numerator(fl).convert_to<long long>());
      caps.emplace_back(name, cap);
      box *= cap + 1;
      if (box > 4096) {
        ok = false;
        break;
      }
    }
    if (empty) {
      fin = std::vector<MultiIndex>{};
    } else if (ok) {
      std::vector<MultiIndex> all{MultiIndex{}};
      for (const auto& [name, cap] : caps) {
        std::vector<MultiIndex> next;
        for (const auto& mm : all)
          for (unsigned long long e = 0; e <= cap; ++e) {
            MultiIndex n = mm;
            n.set(name, e);
            next.push_back(n);
          }
        all = std::move(next);
      }
      fin = fin_sorted(std::move(all));
    }
  }

  std::vector<std::string> out_vars = f.vars()->names();
  return Rps::from_fn(std::move(out_vars), group, std::move(fn),
                      std::move(bound), std::move(fin));
}

// ---- probing helpers ---------------------------------------------------------

std::vector<Monomial> probe_all_monomials(const HahnSeries& s, Budget& b) {
  std::size_t n = 8;
  for (;;) {
    auto p = s.probe(n, b);
    if (p.exhausted) {
      std::vector<Monomial> out;
      for (const auto& t : p.terms) out.push_back(t.mono);
      return out;
    }
    n *= 2;
  }
}

// ---- product truncation decomposition ----------------------------------------

TcProductDecomposition tc_product_decompose(const Rps& f, const Rps& g,
                                            const Monomial& m, Budget& b) {
  require_same_vars(f, g);
  require_same_group(m.group(), f.group());
  auto R = probe_all_monomials(f.support_bound(), b);  // strictly decreasing
  auto S = probe_all_monomials(g.support_bound(), b);
  TcProductDecomposition out{{}, Rps::zero(f.vars(), f.group())};
  if (R.empty() || S.empty()) return out;

  auto pieces =
      product_segmentation(R, S, Segment::above(m, /*include_lo=*/false));
  for (const auto& pc : pieces) {
    Monomial flo = pc.s0_final.front();
    for (const auto& x : pc.s0_final)
      if (x < flo) flo = x;
    std::optional<Monomial> f_cut;  // predecessor of the final segment in R
    for (const auto& r : R)
      if (r < flo) {
        f_cut = r;
        break;
      }
    Monomial bmin = pc.s1_block.front(), bmax = pc.s1_block.front();
    for (const auto& x : pc.s1_block) {
      if (x < bmin) bmin = x;
      if (bmax < x) bmax = x;
    }
    std::optional<Monomial> g_lo;  // predecessor of the block in S
    for (const auto& s : S)
      if (s < bmin) {
        g_lo = s;
        break;
      }
    out.cuts.push_back(TcProductCut{f_cut, g_lo, bmax});

    Rps F = f_cut ? coeff_trunc(f, *f_cut) : f;
    Rps block = sub(g_lo ? coeff_trunc(g, *g_lo) : g, coeff_trunc(g, bmax));
    out.assembled = add(out.assembled, mul(F, block));
  }
  return out;
}

// ---- threshold equality ------------------------------------------------------

namespace {

HahnSeries coeff_or_zero(const Rps& f, const MultiIndex& m) {
  for (const auto& [v, e] : m.entries())
    if (!std::binary_search(f.vars().begin(), f.vars().end(), v))
      return HahnSeries::zero(f.group());
  return f.coeff(m);
}

}  // namespace

ThresholdEq rps_eq_to_monomial(const Rps& f, const Rps& g,
                               unsigned long long deg, const Monomial& m,
                               Budget& b) {
  require_same_group(f.group(), g.group());
  std::vector<std::string> vars(f.vars());
  vars.insert(vars.end(), g.vars().begin(), g.vars().end());
  vars = canon_vars(std::move(vars));
  bool proven = true;
  for (const auto& idx : multi_indices_upto(vars, deg)) {
    auto eq = eq_to_monomial(coeff_or_zero(f, idx), coeff_or_zero(g, idx), m, b);
    if (!eq.equal) return {false, eq.proven};
    proven = proven && eq.proven;
  }
  return {true, proven};
}

}  // namespace hahnforge

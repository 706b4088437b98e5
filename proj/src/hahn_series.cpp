#include "hahnforge/hahn_series.hpp"

#include <algorithm>
#include <cstdint>
#include <utility>

namespace hahnforge {

// ---- StreamCore -------------------------------------------------------------

StreamCore::StreamCore(GroupPtr group, std::unique_ptr<TermSource> src)
    : group_(std::move(group)), src_(std::move(src)) {}

const Term* StreamCore::term(std::size_t i, Budget& b) {
  while (!exhausted_ && memo_.size() <= i) {
    std::optional<Term> t = src_->next(b);
    if (!t) {
      exhausted_ = true;
      src_.reset();
      break;
    }
    if (t->coeff == 0) {
      throw Error("internal invariant violated: zero coefficient emitted");
    }
    if (!memo_.empty() && !(t->mono < memo_.back().mono)) {
      throw Error("internal invariant violated: term monomials must strictly decrease");
    }
    memo_.push_back(std::move(*t));
  }
  return i < memo_.size() ? &memo_[i] : nullptr;
}

// ---- heap helpers (max-heap on std::vector) ---------------------------------

namespace {

template <class T, class Less>
void heap_push(std::vector<T>& v, T x, Less less) {
  v.push_back(std::move(x));
  std::push_heap(v.begin(), v.end(), less);
}

template <class T, class Less>
T heap_pop(std::vector<T>& v, Less less) {
  std::pop_heap(v.begin(), v.end(), less);
  T x = std::move(v.back());
  v.pop_back();
  return x;
}

std::optional<Term> copy_term(const Term* t) {
  return t ? std::optional<Term>(*t) : std::nullopt;
}

struct MonoLess {
  template <class A>
  bool operator()(const A& a, const A& b) const {
    return a.mono < b.mono;
  }
};

// ---- elementary sources -----------------------------------------------------

class VectorSource : public TermSource {
 public:
  explicit VectorSource(std::vector<Term> terms) : terms_(std::move(terms)) {}
  std::optional<Term> next(Budget&) override {
    if (i_ >= terms_.size()) return std::nullopt;
    return terms_[i_++];
  }

 private:
  std::vector<Term> terms_;
  std::size_t i_ = 0;
};

class SkipSource : public TermSource {
 public:
  SkipSource(std::shared_ptr<StreamCore> f, std::size_t skip)
      : f_(std::move(f)), i_(skip) {}
  std::optional<Term> next(Budget& b) override {
    b.step("skip");
    return copy_term(f_->term(i_++, b));
  }

 private:
  std::shared_ptr<StreamCore> f_;
  std::size_t i_;
};

class ScaleSource : public TermSource {
 public:
  ScaleSource(Rational c, std::shared_ptr<StreamCore> f)
      : c_(std::move(c)), f_(std::move(f)) {}
  std::optional<Term> next(Budget& b) override {
    b.step("scale");
    const Term* t = f_->term(i_, b);
    if (!t) return std::nullopt;
    ++i_;
    return Term{t->mono, c_ * t->coeff};
  }

 private:
  Rational c_;
  std::shared_ptr<StreamCore> f_;
  std::size_t i_ = 0;
};

class MonoShiftSource : public TermSource {
 public:
  MonoShiftSource(Monomial m, std::shared_ptr<StreamCore> f)
      : m_(std::move(m)), f_(std::move(f)) {}
  std::optional<Term> next(Budget& b) override {
    b.step("shift");
    const Term* t = f_->term(i_, b);
    if (!t) return std::nullopt;
    ++i_;
    return Term{m_.mul(t->mono), t->coeff};
  }

 private:
  Monomial m_;
  std::shared_ptr<StreamCore> f_;
  std::size_t i_ = 0;
};

class AddSource : public TermSource {
 public:
  AddSource(std::shared_ptr<StreamCore> f, std::shared_ptr<StreamCore> g)
      : f_(std::move(f)), g_(std::move(g)) {}
  std::optional<Term> next(Budget& b) override {
    for (;;) {
      b.step("add");
      // Copy by value: pulling from one core can reallocate the other's memo
      // when both handles share a core.
      std::optional<Term> ft = copy_term(f_->term(i_, b));
      std::optional<Term> gt = copy_term(g_->term(j_, b));
      if (!ft && !gt) return std::nullopt;
      if (ft && (!gt || gt->mono < ft->mono)) {
        ++i_;
        return ft;
      }
      if (gt && (!ft || ft->mono < gt->mono)) {
        ++j_;
        return gt;
      }
      ++i_;
      ++j_;
      Rational c = ft->coeff + gt->coeff;
      if (c != 0) return Term{ft->mono, std::move(c)};
    }
  }

 private:
  std::shared_ptr<StreamCore> f_, g_;
  std::size_t i_ = 0, j_ = 0;
};

class TruncateSource : public TermSource {
 public:
  TruncateSource(std::shared_ptr<StreamCore> f, Monomial threshold)
      : f_(std::move(f)), threshold_(std::move(threshold)) {}
  std::optional<Term> next(Budget& b) override {
    if (done_) return std::nullopt;
    b.step("truncate");
    const Term* t = f_->term(i_, b);
    if (!t || !(threshold_ < t->mono)) {
      done_ = true;
      return std::nullopt;
    }
    ++i_;
    return *t;
  }

 private:
  std::shared_ptr<StreamCore> f_;
  Monomial threshold_;
  std::size_t i_ = 0;
  bool done_ = false;
};

class FragmentSource : public TermSource {
 public:
  FragmentSource(std::shared_ptr<StreamCore> f, SegmentSet segs)
      : f_(std::move(f)), segs_(std::move(segs)) {}
  std::optional<Term> next(Budget& b) override {
    while (!done_) {
      b.step("fragment");
      const Term* t = f_->term(i_, b);
      if (!t) {
        done_ = true;
        break;
      }
      Term cur = *t;
      ++i_;
      if (segs_.contains(cur.mono)) return cur;
      if (segs_.entirely_above(cur.mono)) {
        // Every remaining term is below this one, hence below the whole set.
        done_ = true;
        break;
      }
    }
    return std::nullopt;
  }

 private:
  std::shared_ptr<StreamCore> f_;
  SegmentSet segs_;
  std::size_t i_ = 0;
  bool done_ = false;
};

class ClassFilterSource : public TermSource {
 public:
  ClassFilterSource(std::shared_ptr<StreamCore> f, ArchClass v)
      : f_(std::move(f)), v_(v) {}
  std::optional<Term> next(Budget& b) override {
    while (!done_) {
      b.step("class-filter");
      const Term* t = f_->term(i_, b);
      if (!t) {
        done_ = true;
        break;
      }
      Term cur = *t;
      ++i_;
      ArchClass cls = cur.mono.arch_class();
      if (cls.is_identity_class() || v_ < cls) return cur;
      if (v_.is_identity_class()) {
        // Only the constant term qualifies, and it cannot appear below an
        // infinitesimal term.
        done_ = true;
        break;
      }
    }
    return std::nullopt;
  }

 private:
  std::shared_ptr<StreamCore> f_;
  ArchClass v_;
  std::size_t i_ = 0;
  bool done_ = false;
};

// ---- product ----------------------------------------------------------------

// Cauchy product driven by a frontier of index pairs. Each pair (i, j) has
// children (i+1, j), plus (0, j+1) when i == 0, so every pair enters the
// frontier exactly once and each edge strictly decreases the product
// monomial. Draining all equal-monomial entries before emitting makes the
// output strictly decreasing even when distinct pairs collide.
class MulSource : public TermSource {
 public:
  MulSource(std::shared_ptr<StreamCore> f, std::shared_ptr<StreamCore> g)
      : f_(std::move(f)), g_(std::move(g)) {}

  std::optional<Term> next(Budget& b) override {
    if (!primed_) {
      primed_ = true;
      std::optional<Term> ft = copy_term(f_->term(0, b));
      std::optional<Term> gt = copy_term(g_->term(0, b));
      if (ft && gt) {
        heap_push(heap_,
                  E{ft->mono.mul(gt->mono), ft->coeff * gt->coeff, 0, 0},
                  MonoLess{});
      }
    }
    for (;;) {
      if (heap_.empty()) return std::nullopt;
      Monomial cmono = heap_.front().mono;
      Rational sum(0);
      std::vector<E> drained;
      while (!heap_.empty() && heap_.front().mono == cmono) {
        b.step("mul");
        E e = heap_pop(heap_, MonoLess{});
        sum += e.coeff;
        drained.push_back(std::move(e));
      }
      for (const E& e : drained) push_children(e, b);
      if (sum != 0) return Term{std::move(cmono), std::move(sum)};
    }
  }

 private:
  struct E {
    Monomial mono;
    Rational coeff;
    std::uint64_t i, j;
  };

  void push_children(const E& e, Budget& b) {
    std::optional<Term> fn = copy_term(f_->term(e.i + 1, b));
    if (fn) {
      const Term* gj = g_->term(e.j, b);  // memoized: this pair was visited
      heap_push(heap_,
                E{fn->mono.mul(gj->mono), fn->coeff * gj->coeff, e.i + 1, e.j},
                MonoLess{});
    }
    if (e.i == 0) {
      std::optional<Term> gn = copy_term(g_->term(e.j + 1, b));
      if (gn) {
        const Term* f0 = f_->term(0, b);  // memoized
        heap_push(heap_,
                  E{f0->mono.mul(gn->mono), f0->coeff * gn->coeff, 0, e.j + 1},
                  MonoLess{});
      }
    }
  }

  std::shared_ptr<StreamCore> f_, g_;
  std::vector<E> heap_;
  bool primed_ = false;
};

// ---- binomial power ---------------------------------------------------------

// (1 + delta)^lambda as a sum over multisets of delta's term indices. A
// multiset T of size m, with index multiplicities mult_i and term data
// (mono_i, c_i), contributes
//     falling(lambda, m) / prod_i mult_i!  *  prod_{i in T} c_i * mono_i.
// Multisets are kept as weakly increasing tuples and organized in a forest:
// children are append-a-copy-of-the-last-index and increment-the-last-index,
// both of which strictly decrease the contributed monomial. Appends whose
// falling-factorial weight vanishes are pruned, together with their (equally
// zero) descendants, which makes natural-number exponents terminate.
class BinomialPowerSource : public TermSource {
 public:
  BinomialPowerSource(Rational lambda, std::shared_ptr<StreamCore> delta)
      : lambda_(std::move(lambda)),
        delta_(std::move(delta)),
        one_(Monomial::one(delta_->group())) {}

  std::optional<Term> next(Budget& b) override {
    if (!primed_) {
      primed_ = true;
      heap_push(heap_, E{one_, Rational(1), {}}, MonoLess{});
    }
    for (;;) {
      if (heap_.empty()) return std::nullopt;
      Monomial cmono = heap_.front().mono;
      Rational sum(0);
      std::vector<E> drained;
      while (!heap_.empty() && heap_.front().mono == cmono) {
        b.step("binomial-power");
        E e = heap_pop(heap_, MonoLess{});
        sum += e.coeff;
        drained.push_back(std::move(e));
      }
      for (const E& e : drained) push_children(e, b);
      if (sum != 0) return Term{std::move(cmono), std::move(sum)};
    }
  }

 private:
  struct E {
    Monomial mono;
    Rational coeff;
    std::vector<std::uint32_t> tuple;  // weakly increasing term indices
  };

  static std::uint32_t trailing_run(const std::vector<std::uint32_t>& t) {
    if (t.empty()) return 0;
    std::uint32_t n = 0;
    for (auto it = t.rbegin(); it != t.rend() && *it == t.back(); ++it) ++n;
    return n;
  }

  void push_children(const E& e, Budget& b) {
    const std::size_t m = e.tuple.size();
    const std::uint32_t run = trailing_run(e.tuple);

    const std::uint32_t ai = m == 0 ? 0u : e.tuple.back();
    std::optional<Term> at = copy_term(delta_->term(ai, b));
    if (at) {
      if (!(at->mono < one_)) {
        throw DomainError("binomial power requires an infinitesimal argument");
      }
      Rational nc =
          e.coeff * (lambda_ - Rational(m)) * at->coeff / Rational(run + 1);
      if (nc != 0) {
        E child{e.mono.mul(at->mono), std::move(nc), e.tuple};
        child.tuple.push_back(ai);
        heap_push(heap_, std::move(child), MonoLess{});
      }
    }

    if (m > 0) {
      const std::uint32_t li = e.tuple.back();
      std::optional<Term> nt = copy_term(delta_->term(li + 1, b));
      if (nt) {
        const Term* ot = delta_->term(li, b);  // memoized
        Rational nc = e.coeff * Rational(run) * nt->coeff / ot->coeff;
        E child{e.mono.mul(nt->mono).mul(ot->mono.inverse()), std::move(nc),
                e.tuple};
        child.tuple.back() = li + 1;
        heap_push(heap_, std::move(child), MonoLess{});
      }
    }
  }

  Rational lambda_;
  std::shared_ptr<StreamCore> delta_;
  Monomial one_;
  std::vector<E> heap_;
  bool primed_ = false;
};

// ---- inversion --------------------------------------------------------------

class InvertSource : public TermSource {
 public:
  explicit InvertSource(HahnSeries f) : f_(std::move(f)) {}
  std::optional<Term> next(Budget& b) override {
    if (!out_) {
      std::optional<NormalForm> nf = normal_decompose(f_, b);
      if (!nf) throw DomainError("cannot invert the zero series");
      Rational inv_scale = Rational(1) / nf->scale;
      HahnSeries delta = scalar_mul(inv_scale, nf->tail_over_mono);
      out_ = monomial_mul(
          nf->mono.inverse(),
          scalar_mul(inv_scale, binomial_power(Rational(-1), delta)));
    }
    return copy_term(out_->core()->term(i_++, b));
  }

 private:
  HahnSeries f_;
  std::optional<HahnSeries> out_;
  std::size_t i_ = 0;
};

}  // namespace

// ---- FamilyMergeSource ------------------------------------------------------

FamilyMergeSource::FamilyMergeSource(GroupPtr group, MemberGen gen)
    : group_(std::move(group)), gen_(std::move(gen)) {}

void FamilyMergeSource::admit_pending(Budget& b) {
  // Admit members while the next key could still reach the current top
  // monomial. Keys arrive weakly decreasing, so once a key falls strictly
  // below the top, no later member can contain it.
  while (pending_ &&
         (heap_.empty() || !(pending_->key < heap_.front().mono))) {
    b.step("merge-admit");
    HahnSeries s = std::move(pending_->series);
    pending_ = gen_done_ ? std::nullopt : gen_(b);
    if (!pending_) gen_done_ = true;
    const Term* t0 = s.core()->term(0, b);
    if (t0) {
      heap_push(heap_, Entry{t0->mono, t0->coeff, s.core(), 1}, MonoLess{});
    }
  }
}

std::optional<Term> FamilyMergeSource::next(Budget& b) {
  if (!primed_) {
    primed_ = true;
    pending_ = gen_(b);
    if (!pending_) gen_done_ = true;
  }
  for (;;) {
    admit_pending(b);
    if (heap_.empty()) {
      if (gen_done_) return std::nullopt;
      continue;  // only empty members so far; keep admitting
    }
    Monomial cmono = heap_.front().mono;
    Rational sum(0);
    std::vector<Entry> drained;
    while (!heap_.empty() && heap_.front().mono == cmono) {
      b.step("merge");
      Entry e = heap_pop(heap_, MonoLess{});
      sum += e.coeff;
      drained.push_back(std::move(e));
    }
    for (Entry& e : drained) {
      const Term* t = e.core->term(e.next_index, b);
      if (t) {
        heap_push(heap_, Entry{t->mono, t->coeff, e.core, e.next_index + 1},
                  MonoLess{});
      }
    }
    if (sum != 0) return Term{std::move(cmono), std::move(sum)};
  }
}

HahnSeries merge_family(GroupPtr group, FamilyMergeSource::MemberGen gen) {
  return HahnSeries::from_source(
      group, std::make_unique<FamilyMergeSource>(group, std::move(gen)));
}

// ---- HahnSeries -------------------------------------------------------------

HahnSeries HahnSeries::from_source(GroupPtr group,
                                   std::unique_ptr<TermSource> src) {
  return HahnSeries(std::make_shared<StreamCore>(std::move(group), std::move(src)));
}

HahnSeries HahnSeries::zero(GroupPtr group) {
  return from_source(std::move(group),
                     std::make_unique<VectorSource>(std::vector<Term>{}));
}

HahnSeries HahnSeries::constant(GroupPtr group, const Rational& c) {
  if (c == 0) return zero(std::move(group));
  std::vector<Term> terms{Term{Monomial::one(group), c}};
  return from_source(std::move(group),
                     std::make_unique<VectorSource>(std::move(terms)));
}

HahnSeries HahnSeries::monomial_term(const Monomial& m, const Rational& c) {
  GroupPtr g = m.group();
  if (c == 0) return zero(std::move(g));
  std::vector<Term> terms{Term{m, c}};
  return from_source(std::move(g),
                     std::make_unique<VectorSource>(std::move(terms)));
}

HahnSeries HahnSeries::from_terms(GroupPtr group, std::vector<Term> terms) {
  for (const Term& t : terms) require_same_group(group, t.mono.group());
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return b.mono < a.mono; });
  std::vector<Term> merged;
  for (Term& t : terms) {
    if (!merged.empty() && merged.back().mono == t.mono) {
      merged.back().coeff += t.coeff;
      if (merged.back().coeff == 0) merged.pop_back();
    } else if (t.coeff != 0) {
      merged.push_back(std::move(t));
    }
  }
  return from_source(std::move(group),
                     std::make_unique<VectorSource>(std::move(merged)));
}

std::vector<Term> HahnSeries::take_terms(std::size_t n, Budget& b) const {
  std::vector<Term> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Term* t;
    try {
      t = core_->term(i, b);
    } catch (const BudgetExhaustedWithPartial& e) {
      std::vector<Term> partial = out;
      throw BudgetExhaustedWithPartial(e.what(), std::move(partial));
    } catch (const BudgetExhaustedError& e) {
      throw BudgetExhaustedWithPartial(e.what(), std::move(out));
    }
    if (!t) break;
    out.push_back(*t);
  }
  return out;
}

std::vector<Term> HahnSeries::take_terms(std::size_t n) const {
  Budget b = Budget::with_default();
  return take_terms(n, b);
}

HahnSeries::Probe HahnSeries::probe(std::size_t n, Budget& b) const {
  Probe p{take_terms(n, b), false};
  p.exhausted =
      core_->known_exhausted() && p.terms.size() == core_->known_count();
  return p;
}

std::optional<Term> HahnSeries::leading_term(Budget& b) const {
  return core_->term(0, b) ? std::optional<Term>(*core_->term(0, b))
                           : std::nullopt;
}

// ---- operations -------------------------------------------------------------

HahnSeries add(const HahnSeries& f, const HahnSeries& g) {
  require_same_group(f.group(), g.group());
  return HahnSeries::from_source(f.group(),
                                 std::make_unique<AddSource>(f.core(), g.core()));
}

HahnSeries neg(const HahnSeries& f) { return scalar_mul(Rational(-1), f); }

HahnSeries sub(const HahnSeries& f, const HahnSeries& g) {
  return add(f, neg(g));
}

HahnSeries scalar_mul(const Rational& c, const HahnSeries& f) {
  if (c == 0) return HahnSeries::zero(f.group());
  return HahnSeries::from_source(f.group(),
                                 std::make_unique<ScaleSource>(c, f.core()));
}

HahnSeries monomial_mul(const Monomial& m, const HahnSeries& f) {
  require_same_group(m.group(), f.group());
  return HahnSeries::from_source(
      f.group(), std::make_unique<MonoShiftSource>(m, f.core()));
}

HahnSeries mul(const HahnSeries& f, const HahnSeries& g) {
  require_same_group(f.group(), g.group());
  return HahnSeries::from_source(f.group(),
                                 std::make_unique<MulSource>(f.core(), g.core()));
}

HahnSeries mul_many(std::vector<HahnSeries> factors, GroupPtr group) {
  HahnSeries acc = HahnSeries::constant(group, Rational(1));
  for (const HahnSeries& f : factors) acc = mul(acc, f);
  return acc;
}

HahnSeries add_many(std::vector<HahnSeries> summands, GroupPtr group) {
  HahnSeries acc = HahnSeries::zero(group);
  for (const HahnSeries& f : summands) acc = add(acc, f);
  return acc;
}

HahnSeries pow_natural(const HahnSeries& f, unsigned n) {
  HahnSeries acc = HahnSeries::constant(f.group(), Rational(1));
  for (unsigned k = 0; k < n; ++k) acc = mul(acc, f);
  return acc;
}

HahnSeries truncate(const HahnSeries& f, const Monomial& m) {
  require_same_group(f.group(), m.group());
  return HahnSeries::from_source(
      f.group(), std::make_unique<TruncateSource>(f.core(), m));
}

HahnSeries fragment(const HahnSeries& f, const SegmentSet& s) {
  return HahnSeries::from_source(
      f.group(), std::make_unique<FragmentSource>(f.core(), s));
}

HahnSeries v_truncate(const HahnSeries& f, const ArchClass& v) {
  return HahnSeries::from_source(
      f.group(), std::make_unique<ClassFilterSource>(f.core(), v));
}

HahnSeries binomial_power(const Rational& lambda, const HahnSeries& delta) {
  return HahnSeries::from_source(
      delta.group(),
      std::make_unique<BinomialPowerSource>(lambda, delta.core()));
}

HahnSeries invert_unit(const HahnSeries& f) {
  return HahnSeries::from_source(f.group(),
                                 std::make_unique<InvertSource>(f));
}

std::optional<NormalForm> normal_decompose(const HahnSeries& f, Budget& b) {
  const Term* lead = f.core()->term(0, b);
  if (!lead) return std::nullopt;
  Monomial m = lead->mono;
  Rational k = lead->coeff;
  HahnSeries tail = HahnSeries::from_source(
      f.group(), std::make_unique<SkipSource>(f.core(), 1));
  return NormalForm{m, k, monomial_mul(m.inverse(), tail)};
}

ThresholdEq eq_to_monomial(const HahnSeries& f, const HahnSeries& g,
                           const Monomial& m, Budget& b) {
  HahnSeries diff = sub(truncate(f, m), truncate(g, m));
  try {
    const Term* t = diff.core()->term(0, b);
    return t ? ThresholdEq{false, true} : ThresholdEq{true, true};
  } catch (const BudgetExhaustedError&) {
    return ThresholdEq{true, false};
  }
}

}  // namespace hahnforge

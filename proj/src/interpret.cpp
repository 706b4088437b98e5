#include <algorithm>
#include <memory>
#include <vector>

#include "hahnforge/gps.hpp"
#include "lattice_stream.hpp"

namespace hahnforge {

namespace {

/// Prepared data for one variable of the interpreted series: the assigned
/// value in positive normal form mono*(scale + eps), so that
/// x^gamma = scale^gamma * mono^gamma * (1 + eps/scale)^gamma.
struct VarEval {
  std::string name;
  Rational shift;                    // lattice shift of the variable
  std::optional<Monomial> mono;      // leading monomial, < 1
  Rational scale = 1;                // leading coefficient
  std::optional<HahnSeries> delta;   // eps/scale
  Rational scale_root = 1;           // scale^q = scale_root^(q*root_den)
  long long root_den = 1;
  std::optional<Rational> cap;       // per-variable lattice cap
};

}  // namespace

HahnSeries interpret(const GpsExpr& f, const InterpretAssignment& assignment,
                     GroupPtr group) {
  const GpsLattice& L = f.lattice();
  Budget prep = Budget::with_default();

  std::vector<VarEval> active;
  for (const auto& v : f.vars()->names()) {
    auto it = assignment.values.find(v);
    if (it == assignment.values.end())
      throw DomainError("no value assigned to variable " + v);
    require_same_group(it->second.group(), group);
    bool classical = f.vars()->is_classical(v);

    auto nf = normal_decompose(it->second, prep);
    if (!nf) {
      if (!classical)
        throw DomainError("value for " + v +
                          " must be in positive normal form, got zero");
      // zero value: only gamma_v = 0 can contribute
      if (L.shift.get(v) > 0) return HahnSeries::zero(group);
      continue;
    }

    VarEval ev;
    ev.name = v;
    ev.shift = L.shift.get(v);
    ev.mono = nf->mono;
    ev.scale = nf->scale;
    ev.delta = scalar_mul(Rational(1) / nf->scale, nf->tail_over_mono);
    auto cap_it = L.var_cap.find(v);
    if (cap_it != L.var_cap.end()) ev.cap = cap_it->second;

    if (!(*ev.mono < Monomial::one(group)))
      throw DomainError("value for " + v +
                        " must have an infinitesimal leading monomial");
    if (classical) {
      ev.scale_root = ev.scale;  // natural exponents: plain integer powers
      ev.root_den = 1;
    } else {
      if (ev.scale <= 0)
        throw DomainError("value for " + v +
                          " must have a positive leading coefficient");
      long long d =
          lcm(denominator(ev.shift), BigInt(L.denom)).convert_to<long long>();
      auto root = exact_nth_root(ev.scale, static_cast<unsigned long long>(d));
      if (!root)
        throw DomainError("leading coefficient " + to_string(ev.scale) +
                          " for " + v + " has no exact " + std::to_string(d) +
                          "-th root over the rationals");
      ev.scale_root = *root;
      ev.root_den = d;
    }
    active.push_back(std::move(ev));
  }

  // total grade bound from the lattice and from the per-variable caps of the
  // active variables (masked variables contribute exponent zero)
  std::optional<Rational> bound = L.grade_bound;
  {
    std::optional<Rational> from_caps = Rational(0);
    for (const auto& ev : active) {
      if (!ev.cap) {
        from_caps.reset();
        break;
      }
      *from_caps += *ev.cap;
    }
    if (from_caps && (!bound || *from_caps < *bound)) bound = from_caps;
  }

  std::vector<detail::LatticeVar> stream_vars;
  for (const auto& ev : active)
    stream_vars.push_back(detail::LatticeVar{ev.name, ev.shift, *ev.mono, ev.cap});

  struct State {
    GpsExpr f;
    detail::KeyedLatticeStream stream;
    std::vector<VarEval> vars;
    GroupPtr group;
    // point already popped but not yet delivered; survives budget errors so a
    // retry with a fresh budget resumes without losing it
    std::optional<detail::KeyedLatticeStream::Point> pending;
  };
  auto state = std::make_shared<State>(State{
      f, detail::KeyedLatticeStream(group, std::move(stream_vars), L.denom, bound),
      active, group, std::nullopt});

  auto gen = [state](Budget& b) -> std::optional<FamilyMergeSource::Member> {
    for (;;) {
      if (!state->pending) state->pending = state->stream.next(b);
      if (!state->pending) return std::nullopt;
      auto& point = state->pending;
      Rational c = state->f.coeff(point->gamma, b);
      if (c == 0) {
        state->pending.reset();
        continue;
      }
      std::vector<HahnSeries> factors;
      for (const auto& ev : state->vars) {
        Rational g = point->gamma.get(ev.name);
        if (g == 0) continue;
        Rational e = g * ev.root_den;
        c *= pow_int(ev.scale_root, numerator(e).convert_to<long long>());
        factors.push_back(binomial_power(g, *ev.delta));
      }
      HahnSeries tail = mul_many(std::move(factors), state->group);
      Monomial key = point->key;
      state->pending.reset();
      return FamilyMergeSource::Member{
          key, monomial_mul(key, scalar_mul(c, tail))};
    }
  };
  return merge_family(group, gen);
}

}  // namespace hahnforge

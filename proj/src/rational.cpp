#include "hahnforge/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace hahnforge {

std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

std::optional<Rational> parse_rational(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (b == e) return std::nullopt;
  std::string_view body = s.substr(b, e - b);

  auto is_int = [](std::string_view t) {
    if (t.empty()) return false;
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };

  std::size_t slash = body.find('/');
  try {
    if (slash == std::string_view::npos) {
      if (!is_int(body)) return std::nullopt;
      return Rational(BigInt(std::string(body)));
    }
    std::string_view num = body.substr(0, slash);
    std::string_view den = body.substr(slash + 1);
    if (!is_int(num) || !is_int(den)) return std::nullopt;
    BigInt d{std::string(den)};
    if (d == 0) return std::nullopt;
    return Rational(BigInt(std::string(num)), d);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Rational binomial(const Rational& lambda, unsigned long long k) {
  Rational acc = 1;
  for (unsigned long long i = 0; i < k; ++i) {
    acc *= (lambda - Rational(i));
    acc /= Rational(i + 1);
  }
  return acc;
}

BigInt factorial(unsigned long long k) {
  BigInt acc = 1;
  for (unsigned long long i = 2; i <= k; ++i) acc *= i;
  return acc;
}

Rational multi_factorial(const std::vector<unsigned long long>& h) {
  BigInt acc = 1;
  for (auto k : h) acc *= factorial(k);
  return Rational(acc);
}

BigInt multinomial(const std::vector<unsigned long long>& multiplicities) {
  unsigned long long total = 0;
  for (auto m : multiplicities) total += m;
  BigInt acc = factorial(total);
  BigInt den = 1;
  for (auto m : multiplicities) den *= factorial(m);
  return acc / den;
}

bool is_nonneg_integer(const Rational& q) {
  return q >= 0 && denominator(q) == 1;
}

BigInt common_denominator(const std::vector<Rational>& qs) {
  BigInt acc = 1;
  for (const auto& q : qs) acc = lcm(acc, denominator(q));
  return acc;
}

Rational pow_int(const Rational& base, long long e) {
  if (e < 0) {
    if (base == 0) throw std::domain_error("pow_int: zero base with negative exponent");
    return pow_int(Rational(1) / base, -e);
  }
  Rational acc = 1, sq = base;
  for (unsigned long long n = static_cast<unsigned long long>(e); n; n >>= 1) {
    if (n & 1) acc *= sq;
    if (n > 1) sq *= sq;
  }
  return acc;
}

namespace {

// Floor n-th root by binary search; exact == true when root^n == x.
std::pair<BigInt, bool> integer_nth_root(const BigInt& x, unsigned long long n) {
  if (x < 0) throw std::domain_error("integer_nth_root: negative radicand");
  if (x <= 1 || n == 1) return {x, true};
  BigInt lo = 0, hi = x;
  while (lo < hi) {
    BigInt mid = (lo + hi + 1) / 2;
    if (pow(mid, static_cast<unsigned>(n)) <= x)
      lo = mid;
    else
      hi = mid - 1;
  }
  return {lo, pow(lo, static_cast<unsigned>(n)) == x};
}

}  // namespace

std::optional<Rational> exact_nth_root(const Rational& q, unsigned long long n) {
  if (q <= 0 || n == 0) return std::nullopt;
  auto [rn, okn] = integer_nth_root(numerator(q), n);
  if (!okn) return std::nullopt;
  auto [rd, okd] = integer_nth_root(denominator(q), n);
  if (!okd) return std::nullopt;
  return Rational(rn, rd);
}

long long denominator_of(const Rational& q) {
  return denominator(q).convert_to<long long>();
}

}  // namespace hahnforge

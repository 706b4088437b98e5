#ifndef HAHNFORGE_RATIONAL_HPP
#define HAHNFORGE_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hahnforge {

/// Exact rational scalar. cpp_rational keeps the canonical reduced form
/// (gcd(num, den) = 1, den > 0) on every operation.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Prints "p" when integral, "p/q" otherwise; the sign sits on the numerator.
std::string to_string(const Rational& q);

/// Accepts "p", "-p", "p/q" with optional surrounding whitespace.
std::optional<Rational> parse_rational(std::string_view s);

/// Generalized binomial coefficient: lambda*(lambda-1)*...*(lambda-k+1) / k!.
Rational binomial(const Rational& lambda, unsigned long long k);

BigInt factorial(unsigned long long k);

/// k! * l! * ... for a multi-exponent, as a rational (used for 1/h! weights).
Rational multi_factorial(const std::vector<unsigned long long>& h);

/// p!/(m_1!...m_r!) with p = sum of multiplicities.
BigInt multinomial(const std::vector<unsigned long long>& multiplicities);

bool is_nonneg_integer(const Rational& q);

/// Smallest positive N with q*N integral for every q in the list (N = lcm of
/// denominators); 1 for an empty list.
BigInt common_denominator(const std::vector<Rational>& qs);

/// base^e for any integer e (negative e needs base != 0).
Rational pow_int(const Rational& base, long long e);

/// The exact rational n-th root of q > 0, when one exists.
std::optional<Rational> exact_nth_root(const Rational& q, unsigned long long n);

/// Denominator of the reduced form, as a machine integer (throws on overflow).
long long denominator_of(const Rational& q);

}  // namespace hahnforge

#endif

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace normlab {

using Integer = mpz_class;
using Rational = mpq_class;

/// num/den in lowest terms; throws PreconditionError on den == 0.
Rational make_rational(const Integer& num, const Integer& den);

/// Accepts "p", "p/q", "-p/q" and finite decimals such as "0.05".
Rational parse_rational(std::string_view text);

/// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& r);

Integer ipow(unsigned long base, unsigned long exp);

/// b^-n exactly.
Rational inverse_power(unsigned long base, unsigned long n);

Integer floor(const Rational& r);

/// Number of bits in |x| (0 for x == 0).
std::size_t bit_length(const Integer& x);

double log2_of(const Rational& r);

}  // namespace normlab

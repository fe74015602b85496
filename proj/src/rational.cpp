#include "normlab/rational.hpp"

#include <cmath>
#include <limits>

#include "normlab/errors.hpp"

namespace normlab {

Rational make_rational(const Integer& num, const Integer& den) {
  if (den == 0) throw PreconditionError("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

namespace {

Integer parse_integer(std::string_view text, std::string_view whole) {
  if (text.empty()) throw ParseError("malformed number '" + std::string(whole) + "'");
  std::size_t i = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (i == text.size()) throw ParseError("malformed number '" + std::string(whole) + "'");
  for (std::size_t j = i; j < text.size(); ++j)
    if (text[j] < '0' || text[j] > '9') throw ParseError("malformed number '" + std::string(whole) + "'");
  Integer v(std::string(text.substr(i)), 10);
  return text[0] == '-' ? Integer(-v) : v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    Integer num = parse_integer(text.substr(0, slash), text);
    Integer den = parse_integer(text.substr(slash + 1), text);
    if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    return make_rational(num, den);
  }
  auto dot = text.find('.');
  if (dot != std::string_view::npos) {
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = text.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (ip.empty() || ip == "-" || ip == "+") ip = "0";
    if (fp.empty()) throw ParseError("malformed number '" + std::string(text) + "'");
    Integer whole = parse_integer(ip, text);
    Integer frac = parse_integer(fp, text);
    if (fp[0] == '-' || fp[0] == '+') throw ParseError("malformed number '" + std::string(text) + "'");
    Integer scale = ipow(10, fp.size());
    Integer num = abs(whole) * scale + frac;
    return make_rational(neg ? Integer(-num) : num, scale);
  }
  return Rational(parse_integer(text, text));
}

std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Integer ipow(unsigned long base, unsigned long exp) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, exp);
  return r;
}

Rational inverse_power(unsigned long base, unsigned long n) { return Rational(Integer(1), ipow(base, n)); }

Integer floor(const Rational& r) {
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

std::size_t bit_length(const Integer& x) {
  if (x == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

double log2_of(const Rational& r) {
  if (r <= 0) return -std::numeric_limits<double>::infinity();
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, r.get_num_mpz_t());
  double md = mpz_get_d_2exp(&ed, r.get_den_mpz_t());
  return std::log2(mn) - std::log2(md) + static_cast<double>(en - ed);
}

}  // namespace normlab

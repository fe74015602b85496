#include "normlab/numstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "normlab/errors.hpp"

namespace normlab {

struct RealSpec::Node {
  struct RationalValue {
    Rational value;
  };
  struct Champernowne {
    unsigned base;
  };
  struct SquareRoot {
    Integer n;
    Integer root;  // floor(sqrt(n))
  };
  struct DigitFile {
    std::string path;
    unsigned base;
    std::shared_ptr<const DigitString> digits;
  };
  struct Pseudorandom {
    std::uint64_t seed;
    unsigned base;
  };
  struct Interleave {
    RealSpec parent;
    Parity parity;
  };
  struct Complement {
    RealSpec inner;
  };
  struct Scale {
    Rational q;
    RealSpec inner;
  };

  std::variant<RationalValue, Champernowne, SquareRoot, DigitFile, Pseudorandom, Interleave, Complement, Scale> v;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_base(unsigned base) {
  if (base < 2) throw PreconditionError("base must be >= 2, got " + std::to_string(base));
}

// Guard bits added on top of the requested precision.
constexpr std::size_t kGuardBits = 64;

std::size_t bits_for_digits(unsigned base, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * std::log2(static_cast<double>(base))));
}

// Smallest D with base^D >= 2^bits, with a digit of slack against rounding.
std::size_t digits_for_bits(unsigned base, std::size_t bits) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(bits) / std::log2(static_cast<double>(base)))) + 1;
}

Integer digits_to_integer(std::span<const Digit> d, unsigned base) {
  if (d.empty()) return 0;
  if (base <= 36) {
    static constexpr char kAlphabet[] = "0123456789abcdefghijklmnopqrstuvwxyz";
    std::string s(d.size(), '0');
    for (std::size_t i = 0; i < d.size(); ++i) s[i] = kAlphabet[d[i]];
    return Integer(s, static_cast<int>(base));
  }
  Integer r = 0;
  for (Digit x : d) r = r * base + x;
  return r;
}

DigitString integer_to_digits(const Integer& value, unsigned base, std::size_t n) {
  DigitString out(n, 0);
  if (n == 0) {
    if (value != 0) throw InvariantError("digit conversion overflow");
    return out;
  }
  if (base <= 36) {
    std::string s = value.get_str(static_cast<int>(base));
    if (s.size() > n) throw InvariantError("digit conversion overflow");
    std::size_t off = n - s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      out[off + i] = (c >= '0' && c <= '9') ? static_cast<Digit>(c - '0') : static_cast<Digit>(c - 'a' + 10);
    }
    return out;
  }
  Integer v = value;
  for (std::size_t i = n; i-- > 0;) {
    Integer r;
    mpz_fdiv_qr_ui(v.get_mpz_t(), r.get_mpz_t(), v.get_mpz_t(), base);
    out[i] = static_cast<Digit>(r.get_ui());
  }
  if (v != 0) throw InvariantError("digit conversion overflow");
  return out;
}

DigitString long_division(const Rational& value, unsigned base, std::size_t n) {
  DigitString out(n);
  Integer num = value.get_num();
  const Integer& den = value.get_den();
  Integer q;
  for (std::size_t i = 0; i < n; ++i) {
    num *= base;
    mpz_fdiv_qr(q.get_mpz_t(), num.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    out[i] = static_cast<Digit>(q.get_ui());
  }
  return out;
}

// Fractional digits of sqrt(n) by the schoolbook digit-by-digit recurrence:
// with root p and remainder r = n*b^(2i) - p^2, the next digit is the largest
// d with (2*p*b + d)*d <= r*b^2.
DigitString sqrt_digits(const Integer& n, const Integer& root, unsigned base, std::size_t count) {
  DigitString out(count);
  Integer p = root;
  Integer r = n - root * root;
  const unsigned long b2 = static_cast<unsigned long>(base) * base;
  Integer twice_pb, trial, d_est;
  for (std::size_t i = 0; i < count; ++i) {
    r *= b2;
    twice_pb = p * (2UL * base);
    unsigned long d = 0;
    if (twice_pb != 0) {
      d_est = r / twice_pb;
      d = d_est >= base ? base - 1 : d_est.get_ui();
    }
    for (;;) {
      trial = (twice_pb + d) * d;
      if (trial <= r) break;
      --d;
    }
    r -= trial;
    p = p * base + d;
    out[i] = static_cast<Digit>(d);
  }
  return out;
}

DigitString champernowne_prefix(unsigned base, std::size_t n) {
  DigitString out;
  out.reserve(n);
  DigitString numeral;
  for (std::uint64_t k = 1; out.size() < n; ++k) {
    numeral.clear();
    for (std::uint64_t v = k; v != 0; v /= base) numeral.push_back(static_cast<Digit>(v % base));
    for (auto it = numeral.rbegin(); it != numeral.rend() && out.size() < n; ++it) out.push_back(*it);
  }
  return out;
}

Digit mulhi_digit(std::uint64_t word, unsigned base) {
  return static_cast<Digit>((static_cast<unsigned __int128>(word) * base) >> 64);
}

std::optional<unsigned> native_base(const RealSpec::Node& node) {
  return std::visit(overloaded{
                        [](const RealSpec::Node::Champernowne& c) -> std::optional<unsigned> { return c.base; },
                        [](const RealSpec::Node::DigitFile& f) -> std::optional<unsigned> { return f.base; },
                        [](const RealSpec::Node::Pseudorandom& p) -> std::optional<unsigned> { return p.base; },
                        [](const RealSpec::Node::Interleave&) -> std::optional<unsigned> { return 2u; },
                        [](const auto&) -> std::optional<unsigned> { return std::nullopt; },
                    },
                    node.v);
}

DigitString native_digits(const RealSpec::Node& node, std::size_t n) {
  return std::visit(
      overloaded{
          [&](const RealSpec::Node::Champernowne& c) { return champernowne_prefix(c.base, n); },
          [&](const RealSpec::Node::DigitFile& f) {
            if (f.digits->size() < n)
              throw InsufficientPrecision("digit file '" + f.path + "' holds " + std::to_string(f.digits->size()) +
                                          " digits, " + std::to_string(n) + " requested");
            return DigitString(f.digits->begin(), f.digits->begin() + static_cast<std::ptrdiff_t>(n));
          },
          [&](const RealSpec::Node::Pseudorandom& p) {
            DigitString out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = mulhi_digit(splitmix64(p.seed, i), p.base);
            return out;
          },
          [&](const RealSpec::Node::Interleave& s) {
            DigitPrefix bits = digits(s.parent, 2, n);
            DigitString out(bits.digits().begin(), bits.digits().end());
            std::size_t drop = s.parity == Parity::even ? 1 : 0;
            for (std::size_t i = drop; i < n; i += 2) out[i] = 0;
            return out;
          },
          [](const auto&) -> DigitString { throw InvariantError("spec has no native digit stream"); },
      },
      node.v);
}

Enclosure enclose_native(const RealSpec::Node& node, unsigned base, std::size_t bits) {
  std::size_t d = digits_for_bits(base, bits);
  if (const auto* f = std::get_if<RealSpec::Node::DigitFile>(&node.v); f && f->digits->size() < d) {
    d = f->digits->size();
    if (bits_for_digits(base, d) < bits)
      throw InsufficientPrecision("digit file '" + f->path + "' too short for " + std::to_string(bits) +
                                  "-bit enclosure");
  }
  DigitString ds = native_digits(node, d);
  Integer num = digits_to_integer(ds, base);
  Integer den = ipow(base, d);
  return {make_rational(num, den), make_rational(num + 1, den)};
}

}  // namespace

// ---------------------------------------------------------------------------
// DigitPrefix

DigitPrefix::DigitPrefix(unsigned base, DigitString digits) : base_(base), digits_(std::move(digits)) {
  check_base(base);
  for (Digit d : digits_)
    if (d >= base) throw PreconditionError("digit " + std::to_string(d) + " out of range for base " + std::to_string(base));
}

DigitPrefix DigitPrefix::prefix(std::size_t n) const {
  if (n > digits_.size()) throw PreconditionError("prefix longer than available digits");
  return DigitPrefix(base_, DigitString(digits_.begin(), digits_.begin() + static_cast<std::ptrdiff_t>(n)));
}

Rational DigitPrefix::value() const { return lattice_value(digits_, base_); }

Rational lattice_value(std::span<const Digit> sigma, unsigned base) {
  if (sigma.empty()) return Rational(0);
  // Fast path for short strings: accumulate in 64 bits.
  if (sigma.size() * std::log2(static_cast<double>(base)) < 62.0) {
    std::uint64_t num = 0, den = 1;
    for (Digit d : sigma) {
      num = num * base + d;
      den *= base;
    }
    Rational r{Integer(static_cast<unsigned long>(num)), Integer(static_cast<unsigned long>(den))};
    r.canonicalize();
    return r;
  }
  Rational r(digits_to_integer(sigma, base), ipow(base, sigma.size()));
  r.canonicalize();
  return r;
}

// ---------------------------------------------------------------------------
// RealSpec construction

RealSpec RealSpec::rational(const Integer& num, const Integer& den) { return rational(make_rational(num, den)); }

RealSpec RealSpec::rational(const Rational& value) {
  if (value < 0 || value >= 1) throw PreconditionError("rational spec must lie in [0,1), got " + to_string(value));
  return RealSpec(std::make_shared<Node>(Node{Node::RationalValue{value}}));
}

RealSpec RealSpec::champernowne(unsigned base) {
  check_base(base);
  return RealSpec(std::make_shared<Node>(Node{Node::Champernowne{base}}));
}

RealSpec RealSpec::square_root(const Integer& n) {
  if (n <= 0) throw PreconditionError("square_root needs a positive integer");
  if (mpz_perfect_square_p(n.get_mpz_t())) throw PreconditionError("square_root needs a non-square, got " + n.get_str());
  Integer root;
  mpz_sqrt(root.get_mpz_t(), n.get_mpz_t());
  return RealSpec(std::make_shared<Node>(Node{Node::SquareRoot{n, root}}));
}

RealSpec RealSpec::digit_file(const std::filesystem::path& path, unsigned base) {
  check_base(base);
  DigitFileContents contents = read_digit_file(path, base);
  if (contents.base && *contents.base != base)
    throw PreconditionError("digit file '" + path.string() + "' has base " + std::to_string(*contents.base) +
                            ", requested " + std::to_string(base));
  auto shared = std::make_shared<const DigitString>(std::move(contents.digits));
  return RealSpec(std::make_shared<Node>(Node{Node::DigitFile{path.string(), base, std::move(shared)}}));
}

RealSpec RealSpec::pseudorandom(std::uint64_t seed, unsigned base) {
  check_base(base);
  return RealSpec(std::make_shared<Node>(Node{Node::Pseudorandom{seed, base}}));
}

RealSpec RealSpec::interleave(const RealSpec& parent, Parity parity) {
  return RealSpec(std::make_shared<Node>(Node{Node::Interleave{parent, parity}}));
}

RealSpec RealSpec::complement(const RealSpec& inner) {
  if (auto v = inner.exact_value(); v && *v == 0) throw PreconditionError("complement needs x in (0,1)");
  return RealSpec(std::make_shared<Node>(Node{Node::Complement{inner}}));
}

RealSpec RealSpec::scale(const Rational& q, const RealSpec& inner) {
  if (q <= 0) throw PreconditionError("scale factor must be positive, got " + to_string(q));
  return RealSpec(std::make_shared<Node>(Node{Node::Scale{q, inner}}));
}

RealSpec::Kind RealSpec::kind() const { return static_cast<Kind>(node_->v.index()); }

std::optional<Rational> RealSpec::exact_value() const {
  return std::visit(overloaded{
                        [](const Node::RationalValue& r) -> std::optional<Rational> { return r.value; },
                        [](const Node::Complement& c) -> std::optional<Rational> {
                          auto v = c.inner.exact_value();
                          if (!v) return std::nullopt;
                          return Rational(1 - *v);
                        },
                        [](const Node::Scale& s) -> std::optional<Rational> {
                          auto v = s.inner.exact_value();
                          if (!v) return std::nullopt;
                          Rational p = s.q * *v;
                          return Rational(p - Rational(floor(p)));
                        },
                        [](const auto&) -> std::optional<Rational> { return std::nullopt; },
                    },
                    node_->v);
}

std::string RealSpec::canonical() const {
  return std::visit(overloaded{
                        [](const Node::RationalValue& r) {
                          return "rat:" + r.value.get_num().get_str() + "/" + r.value.get_den().get_str();
                        },
                        [](const Node::Champernowne& c) { return "champernowne:" + std::to_string(c.base); },
                        [](const Node::SquareRoot& s) { return "sqrt:" + s.n.get_str(); },
                        [](const Node::DigitFile& f) { return "file:" + std::to_string(f.base) + ":" + f.path; },
                        [](const Node::Pseudorandom& p) {
                          return "prng:" + std::to_string(p.seed) + ":" + std::to_string(p.base);
                        },
                        [](const Node::Interleave& i) {
                          return std::string("interleave:") + (i.parity == Parity::even ? "even:" : "odd:") +
                                 i.parent.canonical();
                        },
                        [](const Node::Complement& c) { return "complement:" + c.inner.canonical(); },
                        [](const Node::Scale& s) { return "scale:" + to_string(s.q) + ":" + s.inner.canonical(); },
                    },
                    node_->v);
}

namespace {

std::pair<std::string_view, std::string_view> split_head(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return {text, {}};
  return {text.substr(0, colon), text.substr(colon + 1)};
}

unsigned parse_unsigned(std::string_view s, std::string_view whole) {
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ParseError("bad number '" + std::string(s) + "' in spec '" + std::string(whole) + "'");
  return static_cast<unsigned>(std::stoul(std::string(s)));
}

}  // namespace

RealSpec RealSpec::parse(std::string_view text) {
  auto [head, rest] = split_head(text);
  try {
    if (head == "rat" || head == "rational") {
      Rational v = parse_rational(rest);
      return rational(v);
    }
    if (head == "champernowne" || head == "champ") return champernowne(parse_unsigned(rest, text));
    if (head == "sqrt") {
      parse_unsigned(rest.substr(0, std::min<std::size_t>(rest.size(), 9)), text);
      return square_root(Integer(std::string(rest)));
    }
    if (head == "prng") {
      auto [seed, base] = split_head(rest);
      if (seed.empty() || !std::all_of(seed.begin(), seed.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ParseError("bad seed in spec '" + std::string(text) + "'");
      return pseudorandom(std::stoull(std::string(seed)), parse_unsigned(base, text));
    }
    if (head == "file") {
      auto [base, path] = split_head(rest);
      if (path.empty()) throw ParseError("file spec needs file:<base>:<path>");
      return digit_file(std::filesystem::path(std::string(path)), parse_unsigned(base, text));
    }
    if (head == "interleave") {
      auto [parity, parent] = split_head(rest);
      if (parity != "even" && parity != "odd") throw ParseError("interleave parity must be even|odd");
      return interleave(parse(parent), parity == "even" ? Parity::even : Parity::odd);
    }
    if (head == "complement") return complement(parse(rest));
    if (head == "scale") {
      auto [q, inner] = split_head(rest);
      return scale(parse_rational(q), parse(inner));
    }
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("invalid spec '") + std::string(text) + "': " + e.what());
  }
  throw ParseError("unknown spec '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Enclosures and digits

Enclosure enclose(const RealSpec& spec, std::size_t bits) {
  const auto& node = spec.node();
  if (auto v = spec.exact_value()) return {*v, *v};
  if (auto nb = native_base(node)) return enclose_native(node, *nb, bits);
  return std::visit(
      overloaded{
          [&](const RealSpec::Node::SquareRoot& s) -> Enclosure {
            Integer scaled = s.n << static_cast<mp_bitcnt_t>(2 * bits);
            Integer k;
            mpz_sqrt(k.get_mpz_t(), scaled.get_mpz_t());
            k -= s.root << static_cast<mp_bitcnt_t>(bits);
            Integer den = Integer(1) << static_cast<mp_bitcnt_t>(bits);
            Rational lo(k, den), hi(k + 1, den);
            lo.canonicalize();
            hi.canonicalize();
            return {lo, hi};
          },
          [&](const RealSpec::Node::Complement& c) -> Enclosure {
            Enclosure e = enclose(c.inner, bits);
            return {Rational(1 - e.hi), Rational(1 - e.lo)};
          },
          [&](const RealSpec::Node::Scale& s) -> Enclosure {
            std::size_t extra = bit_length(floor(s.q) + 1) + 1;
            Enclosure e = enclose(s.inner, bits + extra);
            Rational lo = s.q * e.lo, hi = s.q * e.hi;
            Integer fl = floor(lo);
            if (fl != floor(hi)) return {Rational(0), Rational(1)};
            return {Rational(lo - fl), Rational(hi - fl)};
          },
          [](const auto&) -> Enclosure { throw InvariantError("unhandled spec kind in enclose"); },
      },
      node.v);
}

DigitPrefix digits(const RealSpec& spec, unsigned base, std::size_t n) {
  check_base(base);
  if (auto v = spec.exact_value()) return DigitPrefix(base, long_division(*v, base, n));
  const auto& node = spec.node();
  if (const auto* s = std::get_if<RealSpec::Node::SquareRoot>(&node.v))
    return DigitPrefix(base, sqrt_digits(s->n, s->root, base, n));
  if (auto nb = native_base(node); nb && *nb == base) return DigitPrefix(base, native_digits(node, n));

  // Refine an enclosure until floor(x * b^n) is certain.
  const std::size_t requested = bits_for_digits(base, n);
  const std::size_t cap = 4 * requested + kGuardBits;
  const Integer scale = ipow(base, n);
  for (std::size_t prec = requested + kGuardBits;; prec = std::min(cap, 2 * prec)) {
    Enclosure e = enclose(spec, prec);
    Integer lo = floor(Rational(e.lo * scale));
    Integer hi = floor(Rational(e.hi * scale));
    if (lo == hi) return DigitPrefix(base, integer_to_digits(lo, base, n));
    if (prec >= cap)
      throw TieUnresolvable("cannot decide digit " + std::to_string(n) + " of " + spec.canonical() + " in base " +
                            std::to_string(base) + " within " + std::to_string(cap) + " bits");
  }
}

// ---------------------------------------------------------------------------
// Strict distance tests

namespace {

std::size_t bits_for_delta(const Rational& delta) {
  std::size_t nb = bit_length(delta.get_num()), db = bit_length(delta.get_den());
  return db > nb ? db - nb + 1 : 1;
}

}  // namespace

Neighborhood::Neighborhood(RealSpec spec, Rational delta)
    : spec_(std::move(spec)), delta_(std::move(delta)), requested_bits_(bits_for_delta(delta_)) {
  if (delta_ <= 0) throw PreconditionError("delta must be positive");
  if (auto v = spec_.exact_value()) {
    enclosure_ = {*v, *v};
    exact_ = true;
  } else {
    enclosure_ = enclose(spec_, requested_bits_ + kGuardBits);
    exact_ = false;
  }
}

std::optional<bool> Neighborhood::decide(const Enclosure& e, const Rational& r) const {
  if (e.lo > r - delta_ && e.hi < r + delta_) return true;
  if (e.hi <= r - delta_ || e.lo >= r + delta_) return false;
  return std::nullopt;
}

bool Neighborhood::contains(const Rational& r) const {
  if (exact_) return abs(r - enclosure_.lo) < delta_;
  if (auto d = decide(enclosure_, r)) return *d;
  const std::size_t cap = 4 * requested_bits_ + kGuardBits;
  for (std::size_t prec = 2 * (requested_bits_ + kGuardBits);; prec = std::min(cap, 2 * prec)) {
    Enclosure e = enclose(spec_, std::min(prec, cap));
    if (auto d = decide(e, r)) return *d;
    if (prec >= cap)
      throw TieUnresolvable("|" + to_string(r) + " - " + spec_.canonical() + "| vs " + to_string(delta_) +
                            " undecided within " + std::to_string(cap) + " bits");
  }
}

bool within(const RealSpec& spec, const Rational& r, const Rational& delta) {
  return Neighborhood(spec, delta).contains(r);
}

std::pair<RealSpec, RealSpec> interleave_split(const RealSpec& parent) {
  return {RealSpec::interleave(parent, Parity::even), RealSpec::interleave(parent, Parity::odd)};
}

Digit champernowne_digit_at(unsigned base, std::uint64_t position) {
  check_base(base);
  if (position == 0) throw PreconditionError("positions are 1-based");
  std::uint64_t idx = position - 1;
  // Numerals with `len` digits: (base-1)*base^(len-1) of them.
  unsigned __int128 count = base - 1, first = 1;
  std::uint64_t len = 1;
  while (idx >= count * len) {
    idx -= static_cast<std::uint64_t>(count * len);
    count *= base;
    first *= base;
    ++len;
  }
  unsigned __int128 number = first + idx / len;
  std::uint64_t from_right = len - 1 - idx % len;
  for (std::uint64_t i = 0; i < from_right; ++i) number /= base;
  return static_cast<Digit>(number % base);
}

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Digit files and the cache

namespace {

std::string digits_text(std::span<const Digit> d, unsigned base) {
  std::string s;
  if (base <= 10) {
    s.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s[i] = static_cast<char>('0' + d[i]);
    return s;
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(d[i]);
  }
  return s;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw PreconditionError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string format_digit_file(const DigitPrefix& prefix, const std::string& canonical_spec) {
  return "base=" + std::to_string(prefix.base()) + " spec=" + canonical_spec + "\n" +
         digits_text(prefix.digits(), prefix.base());
}

DigitFileContents read_digit_file(const std::filesystem::path& path, unsigned base_hint) {
  std::string text = slurp(path);
  DigitFileContents out;
  std::string_view body = text;
  std::size_t line_no = 1;
  if (body.starts_with("base=")) {
    auto nl = body.find('\n');
    std::string_view header = body.substr(0, nl);
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
    auto sp = header.find(" spec=");
    std::string_view b = header.substr(5, sp == std::string_view::npos ? std::string_view::npos : sp - 5);
    try {
      out.base = static_cast<unsigned>(std::stoul(std::string(b)));
    } catch (const std::exception&) {
      throw ParseError(1, "bad base in digit file header");
    }
    if (sp != std::string_view::npos) out.spec = std::string(header.substr(sp + 6));
    line_no = 2;
  }
  const unsigned base = out.base.value_or(base_hint);
  check_base(base);
  const bool comma = body.find(',') != std::string_view::npos || base > 10;
  if (comma) {
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      unsigned long v = 0;
      try {
        v = std::stoul(token);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad digit '" + token + "'");
      }
      if (v >= base) throw ParseError(line_no, "digit " + token + " out of range for base " + std::to_string(base));
      out.digits.push_back(static_cast<Digit>(v));
      token.clear();
    };
    for (char c : body) {
      if (c == ',' || c == ' ' || c == '\n' || c == '\r' || c == '\t') {
        flush();
        if (c == '\n') ++line_no;
      } else {
        token += c;
      }
    }
    flush();
  } else {
    for (char c : body) {
      if (c == '\n') {
        ++line_no;
        continue;
      }
      if (c == ' ' || c == '\r' || c == '\t') continue;
      if (c < '0' || c > '9' || static_cast<unsigned>(c - '0') >= base)
        throw ParseError(line_no, std::string("bad digit '") + c + "' for base " + std::to_string(base));
      out.digits.push_back(static_cast<Digit>(c - '0'));
    }
  }
  return out;
}

DigitCache::DigitCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::filesystem::path DigitCache::path_for(const RealSpec& spec, unsigned base) const {
  std::string key = spec.canonical() + "|" + std::to_string(base);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  return dir_ / ("digits_" + std::string(buf) + "_b" + std::to_string(base) + ".txt");
}

DigitPrefix DigitCache::get(const RealSpec& spec, unsigned base, std::size_t n) {
  std::lock_guard lock(mutex_);
  const auto path = path_for(spec, base);
  const std::string canonical = spec.canonical();
  if (!std::filesystem::exists(path)) {
    DigitPrefix fresh = digits(spec, base, n);
    write_atomically(path, format_digit_file(fresh, canonical));
    return fresh;
  }
  DigitFileContents have = read_digit_file(path, base);
  if (have.base != base || have.spec != canonical)
    throw InvariantError("cache file '" + path.string() + "' does not belong to " + canonical);
  if (have.digits.size() >= n)
    return DigitPrefix(base, DigitString(have.digits.begin(), have.digits.begin() + static_cast<std::ptrdiff_t>(n)));

  DigitPrefix fresh = digits(spec, base, n);
  if (!std::equal(have.digits.begin(), have.digits.end(), fresh.digits().begin()))
    throw InvariantError("cached prefix in '" + path.string() + "' disagrees with recomputed digits");
  std::string text = slurp(path);
  auto tail = fresh.digits().subspan(have.digits.size());
  if (base > 10 && !have.digits.empty()) text += ',';
  text += digits_text(tail, base);
  write_atomically(path, text);
  return fresh;
}

}  // namespace normlab

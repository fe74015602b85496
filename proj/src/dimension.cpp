#include "normlab/dimension.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "normlab/errors.hpp"

namespace normlab {

// ---------------------------------------------------------------------------
// Bit helpers

void append_gamma(BitString& out, std::uint64_t value) {
  if (value == 0) throw PreconditionError("gamma code needs a positive value");
  int len = 64 - __builtin_clzll(value);
  out.insert(out.end(), static_cast<std::size_t>(len - 1), 0);
  for (int i = len - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

std::optional<std::uint64_t> read_gamma(const BitString& in, std::size_t& pos) {
  std::size_t zeros = 0;
  while (pos < in.size() && in[pos] == 0) {
    ++zeros;
    ++pos;
  }
  if (pos >= in.size() || zeros > 63 || pos + zeros + 1 > in.size()) return std::nullopt;
  std::uint64_t v = 0;
  for (std::size_t i = 0; i <= zeros; ++i) v = (v << 1) | in[pos++];
  return v;
}

namespace {

std::size_t gamma_length(std::uint64_t value) { return 2 * static_cast<std::size_t>(64 - __builtin_clzll(value)) - 1; }

struct Packing {
  std::size_t chunk;  // digits per full chunk
  std::size_t width;  // bits per full chunk
};

unsigned bits_for(unsigned __int128 top) {  // bit length of top
  unsigned n = 0;
  while (top) {
    ++n;
    top >>= 1;
  }
  return n;
}

unsigned __int128 pow128(unsigned base, std::size_t e) {
  unsigned __int128 p = 1;
  while (e--) p *= base;
  return p;
}

Packing packing_for(unsigned base) {
  if (base < 2) throw PreconditionError("base must be >= 2");
  const unsigned __int128 limit = static_cast<unsigned __int128>(1) << 63;
  std::size_t c = 0;
  unsigned __int128 p = 1;
  while (p * base <= limit) {
    p *= base;
    ++c;
  }
  if (c == 0) throw PreconditionError("base too large to pack");
  return {c, bits_for(p - 1)};
}

std::size_t partial_width(unsigned base, std::size_t r) { return bits_for(pow128(base, r) - 1); }

void write_bits(BitString& out, std::uint64_t v, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>((v >> i) & 1));
}

std::uint64_t read_bits(const BitString& in, std::size_t pos, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v = (v << 1) | in[pos + i];
  return v;
}

}  // namespace

std::size_t packed_length(unsigned base, std::size_t n) {
  auto [c, w] = packing_for(base);
  return (n / c) * w + partial_width(base, n % c);
}

std::optional<std::size_t> packed_digit_count(unsigned base, std::size_t bits) {
  auto [c, w] = packing_for(base);
  const std::size_t rem = bits % w;
  for (std::size_t r = 0; r < c; ++r)
    if (partial_width(base, r) == rem) return (bits / w) * c + r;
  return std::nullopt;
}

BitString pack_digits(std::span<const Digit> digits, unsigned base) {
  auto [c, w] = packing_for(base);
  BitString out;
  out.reserve(packed_length(base, digits.size()));
  for (std::size_t i = 0; i < digits.size(); i += c) {
    const std::size_t r = std::min(c, digits.size() - i);
    std::uint64_t v = 0;
    for (std::size_t j = 0; j < r; ++j) {
      if (digits[i + j] >= base) throw PreconditionError("digit out of range");
      v = v * base + digits[i + j];
    }
    write_bits(out, v, r == c ? w : partial_width(base, r));
  }
  return out;
}

BitString pack_digits(const DigitPrefix& digits) { return pack_digits(digits.digits(), digits.base()); }

DigitString unpack_digits(const BitString& bits, unsigned base, std::size_t n) {
  auto [c, w] = packing_for(base);
  if (bits.size() != packed_length(base, n)) throw CodecError("packed length does not match digit count");
  DigitString out(n);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; i += c) {
    const std::size_t r = std::min(c, n - i);
    const std::size_t width = r == c ? w : partial_width(base, r);
    std::uint64_t v = read_bits(bits, pos, width);
    pos += width;
    if (static_cast<unsigned __int128>(v) >= pow128(base, r)) throw CodecError("packed chunk out of range");
    for (std::size_t j = r; j-- > 0;) {
      out[i + j] = static_cast<Digit>(v % base);
      v /= base;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Codecs

namespace {

class Passthrough final : public Codec {
 public:
  const std::string& name() const override { return name_; }
  BitString encode(const BitString& w) const override { return w; }
  BitString decode(const BitString& p) const override { return p; }

 private:
  std::string name_ = "passthrough";
};

class RunLength final : public Codec {
 public:
  const std::string& name() const override { return name_; }

  BitString encode(const BitString& w) const override {
    BitString out;
    if (w.empty()) return out;
    out.push_back(w[0] & 1);
    std::size_t i = 0;
    while (i < w.size()) {
      std::size_t j = i;
      while (j < w.size() && w[j] == w[i]) ++j;
      append_gamma(out, j - i);
      i = j;
    }
    return out;
  }

  BitString decode(const BitString& p) const override {
    BitString out;
    if (p.empty()) return out;
    std::uint8_t bit = p[0];
    std::size_t pos = 1;
    while (pos < p.size()) {
      auto run = read_gamma(p, pos);
      if (!run) throw CodecError("run-length program truncated");
      if (*run > (std::size_t{1} << 40)) throw CodecError("run-length run too long");
      out.insert(out.end(), static_cast<std::size_t>(*run), bit);
      bit ^= 1;
    }
    return out;
  }

 private:
  std::string name_ = "runlength";
};

class Lz77 final : public Codec {
  static constexpr std::size_t kKey = 12;  // also the minimum match length
  static constexpr std::size_t kChain = 64;

 public:
  const std::string& name() const override { return name_; }

  BitString encode(const BitString& w) const override {
    const std::size_t n = w.size();
    BitString out;
    std::vector<std::ptrdiff_t> head(std::size_t{1} << kKey, -1), prev(n, -1);
    auto key = [&](std::size_t i) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < kKey; ++j) k = (k << 1) | w[i + j];
      return k;
    };
    auto insert = [&](std::size_t i) {
      if (i + kKey > n) return;
      auto k = key(i);
      prev[i] = head[k];
      head[k] = static_cast<std::ptrdiff_t>(i);
    };
    std::size_t i = 0;
    while (i < n) {
      std::size_t best_len = 0, best_dist = 0;
      if (i + kKey <= n) {
        std::ptrdiff_t cand = head[key(i)];
        for (std::size_t chain = 0; cand >= 0 && chain < kChain; ++chain, cand = prev[static_cast<std::size_t>(cand)]) {
          const auto c = static_cast<std::size_t>(cand);
          std::size_t len = 0;
          while (i + len < n && w[c + len] == w[i + len]) ++len;
          if (len > best_len) {
            best_len = len;
            best_dist = i - c;
          }
          if (i + len == n) break;
        }
      }
      if (best_len >= kKey) {
        const std::size_t cost = 1 + gamma_length(best_dist) + gamma_length(best_len - kKey + 1);
        if (cost < 2 * best_len) {
          out.push_back(1);
          append_gamma(out, best_dist);
          append_gamma(out, best_len - kKey + 1);
          for (std::size_t j = i; j < i + best_len; ++j) insert(j);
          i += best_len;
          continue;
        }
      }
      out.push_back(0);
      out.push_back(w[i]);
      insert(i);
      ++i;
    }
    return out;
  }

  BitString decode(const BitString& p) const override {
    BitString out;
    std::size_t pos = 0;
    while (pos < p.size()) {
      if (p[pos++] == 0) {
        if (pos >= p.size()) throw CodecError("lz77 literal truncated");
        out.push_back(p[pos++]);
        continue;
      }
      auto dist = read_gamma(p, pos);
      auto len = read_gamma(p, pos);
      if (!dist || !len) throw CodecError("lz77 match truncated");
      if (*dist > out.size()) throw CodecError("lz77 distance before start of output");
      if (*len > (std::uint64_t{1} << 40)) throw CodecError("lz77 match too long");
      const std::size_t from = out.size() - *dist;
      const std::size_t total = *len + kKey - 1;
      for (std::size_t j = 0; j < total; ++j) out.push_back(out[from + j]);
    }
    return out;
  }

 private:
  std::string name_ = "lz77";
};

Integer integer_from_digits(std::span<const Digit> digits, unsigned base) {
  if (digits.empty()) return 0;
  if (base <= 62) {
    static const char* alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    std::string s(digits.size(), '0');
    for (std::size_t i = 0; i < digits.size(); ++i) s[i] = alphabet[digits[i]];
    return Integer(s, static_cast<int>(base));
  }
  Integer v = 0;
  for (Digit d : digits) v = v * base + d;
  return v;
}

DigitString digits_from_integer(Integer v, unsigned base, std::size_t n) {
  DigitString out(n, 0);
  for (std::size_t i = n; i-- > 0 && v != 0;) {
    Integer q;
    mpz_fdiv_q_ui(q.get_mpz_t(), v.get_mpz_t(), base);
    out[i] = static_cast<Digit>(mpz_fdiv_ui(v.get_mpz_t(), base));
    v = q;
  }
  return out;
}

// Successor in the n-digit lattice; false on wraparound.
bool increment(DigitString& s, unsigned base) {
  for (std::size_t i = s.size(); i-- > 0;) {
    if (++s[i] < base) return true;
    s[i] = 0;
  }
  return false;
}

void strip_trailing_zeros(DigitString& s) {
  while (!s.empty() && s.back() == 0) s.pop_back();
}

}  // namespace

CodecPtr passthrough_codec() { return std::make_shared<Passthrough>(); }
CodecPtr run_length_codec() { return std::make_shared<RunLength>(); }
CodecPtr lz77_codec() { return std::make_shared<Lz77>(); }

RepsysCodec::RepsysCodec(RepSystem f, SearchBudget budget)
    : f_(std::move(f)), budget_(budget), name_("repsys(" + f_.name() + ")") {
  packing_for(f_.base());
}

CodecPtr repsys_codec(const RepSystem& f, SearchBudget budget) { return std::make_shared<RepsysCodec>(f, budget); }


std::optional<DigitString> RepsysCodec::search(const Integer& w_value, std::size_t n) const {
  const unsigned base = f_.base();
  const Integer scale = ipow(base, n);
  std::uint64_t tried = 0;
  for (std::size_t len = 0; len < n; ++len) {
    DigitString sigma(len, 0);
    do {
      if (++tried > budget_.max_candidates) return std::nullopt;
      Rational v = f_.eval(sigma) * scale;
      if (v > w_value - 1 && v < w_value + 2) return sigma;
    } while (increment(sigma, base));
  }
  return std::nullopt;
}

RepsysCodec::Encoding RepsysCodec::encode_detail(const BitString& word) const {
  const unsigned base = f_.base();
  Encoding escape{BitString(word.size() + 1, 0), std::nullopt};
  std::copy(word.begin(), word.end(), escape.program.begin() + 1);

  auto n_opt = packed_digit_count(base, word.size());
  if (!n_opt || *n_opt == 0) return escape;
  const std::size_t n = *n_opt;
  DigitString w;
  try {
    w = unpack_digits(word, base, n);
  } catch (const CodecError&) {
    return escape;
  }

  std::optional<DigitString> sigma;
  int offset = 0;  // w = trunc_n(f(sigma)) + offset
  if (f_.is_identity()) {
    // f(sigma) * b^n is an integer T in {W, W+1}; sigma is T's numeral
    // without trailing zeros.
    DigitString a = w, b = w;
    strip_trailing_zeros(a);
    bool has_succ = increment(b, base);
    strip_trailing_zeros(b);
    if (has_succ && b.size() < a.size()) {
      sigma = std::move(b);
      offset = -1;
    } else {
      sigma = std::move(a);
    }
    if (sigma->size() >= n) return escape;
  } else {
    const Integer w_value = integer_from_digits(w, base);
    sigma = search(w_value, n);
    if (!sigma) return escape;
    const Integer scale = ipow(base, n);
    Integer t = floor(f_.eval(*sigma) * scale);
    if (t < 0 || t >= scale) return escape;
    Integer off = w_value - t;
    offset = static_cast<int>(off.get_si());
  }

  Encoding e;
  e.program.push_back(1);
  append_gamma(e.program, n);
  e.program.push_back(offset == -1 ? 1 : 0);
  e.program.push_back(offset == 1 ? 1 : 0);
  BitString packed = pack_digits(*sigma, base);
  e.program.insert(e.program.end(), packed.begin(), packed.end());
  e.sigma = std::move(sigma);
  return e;
}

BitString RepsysCodec::decode(const BitString& program) const {
  if (program.empty()) throw CodecError("empty repsys program");
  if (program[0] == 0) return BitString(program.begin() + 1, program.end());
  const unsigned base = f_.base();
  std::size_t pos = 1;
  auto n = read_gamma(program, pos);
  if (!n || pos + 2 > program.size()) throw CodecError("repsys program header truncated");
  if (*n > (std::uint64_t{1} << 32)) throw CodecError("repsys word length too large");
  const std::uint8_t s0 = program[pos], s1 = program[pos + 1];
  pos += 2;
  if (s0 && s1) throw CodecError("bad repsys selector");
  const int offset = s0 ? -1 : (s1 ? 1 : 0);
  BitString rest(program.begin() + static_cast<std::ptrdiff_t>(pos), program.end());
  auto len = packed_digit_count(base, rest.size());
  if (!len || *len >= *n) throw CodecError("bad repsys sigma length");
  DigitString sigma = unpack_digits(rest, base, *len);
  const Integer scale = ipow(base, *n);
  Integer t = floor(f_.eval(sigma) * scale) + offset;
  if (t < 0 || t >= scale) throw CodecError("repsys selector leaves the lattice");
  return pack_digits(digits_from_integer(t, base, *n), base);
}

std::size_t k_m(const Codec& codec, const BitString& word) {
  BitString program = codec.encode(word);
  BitString back;
  try {
    back = codec.decode(program);
  } catch (const CodecError& e) {
    throw CodecError("codec " + codec.name() + " rejected its own program: " + e.what());
  }
  if (back != word)
    throw CodecError("codec " + codec.name() + " failed the round trip on a word of length " +
                     std::to_string(word.size()));
  return std::min(program.size(), word.size());
}

// ---------------------------------------------------------------------------
// Profiles

const Rational& DimProfile::estimate() const {
  if (points.empty()) throw PreconditionError("empty dimension profile");
  return points.back().running_estimate;
}

std::string DimProfile::csv() const {
  std::ostringstream out;
  out << "spec,n,codec,k_m,ratio\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& p : points)
    for (std::size_t c = 0; c < codecs.size(); ++c)
      out << spec << ',' << p.n << ',' << codecs[c] << ',' << p.k_m[c] << ','
          << static_cast<double>(p.k_m[c]) / static_cast<double>(p.bits) << '\n';
  return out.str();
}

DimProfile dim_profile(const DigitPrefix& digits, const std::string& spec_name, const std::vector<CodecPtr>& codecs,
                       std::vector<std::size_t> n_grid) {
  if (codecs.empty()) throw PreconditionError("dim_profile needs at least one codec");
  if (n_grid.empty()) throw PreconditionError("dim_profile needs a nonempty grid");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.front() == 0) throw PreconditionError("grid points must be >= 1");
  if (n_grid.back() > digits.size()) throw PreconditionError("grid exceeds available digits");

  DimProfile profile;
  profile.spec = spec_name;
  for (const auto& c : codecs) profile.codecs.push_back(c->name());
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    DimPoint p;
    p.n = n_grid[i];
    BitString word = pack_digits(digits.digits().subspan(0, p.n), digits.base());
    p.bits = word.size();
    for (std::size_t c = 0; c < codecs.size(); ++c) {
      p.k_m.push_back(k_m(*codecs[c], word));
      Rational r = make_rational(p.k_m.back(), p.bits);
      if (c == 0 || r < p.best_ratio) {
        p.best_ratio = r;
        p.best_codec = c;
      }
    }
    const std::size_t window = std::max<std::size_t>(1, (i + 1 + 3) / 4);
    p.running_estimate = p.best_ratio;
    for (std::size_t j = i + 1 - window; j < i; ++j)
      p.running_estimate = std::min(p.running_estimate, profile.points[j].best_ratio);
    profile.points.push_back(std::move(p));
  }
  return profile;
}

DimProfile dim_profile(const RealSpec& spec, unsigned base, const std::vector<CodecPtr>& codecs,
                       std::vector<std::size_t> n_grid) {
  if (n_grid.empty()) throw PreconditionError("dim_profile needs a nonempty grid");
  const std::size_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
  return dim_profile(digits(spec, base, n_max), spec.canonical(), codecs, std::move(n_grid));
}

// ---------------------------------------------------------------------------
// Registry

CodecRegistry::CodecRegistry() {
  add(passthrough_codec());
  add(run_length_codec());
  add(lz77_codec());
  add(repsys_codec(RepSystem::identity(2)));
}

void CodecRegistry::add(CodecPtr codec) {
  if (!codec) throw PreconditionError("null codec");
  std::string name = codec->name();
  if (!codecs_.emplace(name, std::move(codec)).second) throw PreconditionError("codec '" + name + "' already registered");
}

CodecPtr CodecRegistry::get(std::string_view name) const {
  auto it = codecs_.find(name);
  if (it == codecs_.end()) {
    std::string known;
    for (const auto& [k, v] : codecs_) known += (known.empty() ? "" : ", ") + k;
    throw PreconditionError("unknown codec '" + std::string(name) + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> CodecRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : codecs_) out.push_back(k);
  return out;
}

}  // namespace normlab

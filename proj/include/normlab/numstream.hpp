#pragma once

// Exact base-b digit expansions of symbolically described reals in [0,1).
//
// Every RealSpec denotes a single real. Digits are produced exactly: rationals
// by long division, square roots by the digit-by-digit recurrence, native
// digit streams directly, and everything else by refining a rational
// enclosure of the value until floor(x * b^n) is certain. Terminating
// expansions always use the trailing-zeros representation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/rational.hpp"

namespace normlab {

using Digit = std::uint32_t;
using DigitString = std::vector<Digit>;

/// A finite run of fractional digits 0.d1 d2 ... dn in a fixed base.
class DigitPrefix {
 public:
  DigitPrefix(unsigned base, DigitString digits);

  unsigned base() const noexcept { return base_; }
  std::size_t size() const noexcept { return digits_.size(); }
  bool empty() const noexcept { return digits_.empty(); }
  std::span<const Digit> digits() const noexcept { return digits_; }
  Digit operator[](std::size_t i) const { return digits_[i]; }

  DigitPrefix prefix(std::size_t n) const;
  /// The rational 0.d1...dn.
  Rational value() const;

  friend bool operator==(const DigitPrefix&, const DigitPrefix&) = default;

 private:
  unsigned base_;
  DigitString digits_;
};

/// Exact rational 0.sigma in the given base.
Rational lattice_value(std::span<const Digit> sigma, unsigned base);

/// Closed interval [lo, hi] known to contain a real.
struct Enclosure {
  Rational lo;
  Rational hi;
};

enum class Parity { even, odd };

/// Immutable description of a real in [0,1). Cheap to copy; safe to share.
class RealSpec {
 public:
  enum class Kind { rational, champernowne, square_root, digit_file, pseudorandom, interleave, complement, scale };

  /// num/den, which must lie in [0,1).
  static RealSpec rational(const Integer& num, const Integer& den);
  static RealSpec rational(const Rational& value);
  /// 0.1 2 3 ... (numerals 1, 2, 3, ... written in `base`, concatenated).
  static RealSpec champernowne(unsigned base);
  /// Fractional part of sqrt(n); n must be a positive non-square.
  static RealSpec square_root(const Integer& n);
  /// Digits loaded from a cache-format file (or a bare digit file) in `base`.
  static RealSpec digit_file(const std::filesystem::path& path, unsigned base);
  /// Reproducible SplitMix64 digit stream; digit i is a pure function of (seed, i).
  static RealSpec pseudorandom(std::uint64_t seed, unsigned base);
  /// Bits of `parent` at 0-based even (resp. odd) indices, zeros elsewhere.
  static RealSpec interleave(const RealSpec& parent, Parity parity);
  /// 1 - x.
  static RealSpec complement(const RealSpec& inner);
  /// frac(q * x), q > 0.
  static RealSpec scale(const Rational& q, const RealSpec& inner);

  /// Parses the canonical form, e.g. "rat:1/3", "champernowne:10",
  /// "sqrt:2", "prng:42:2", "file:10:/tmp/d.txt", "interleave:even:champernowne:2",
  /// "complement:rat:1/3", "scale:1/2:champernowne:2".
  static RealSpec parse(std::string_view text);
  std::string canonical() const;

  Kind kind() const;
  /// The value when it is a known rational (Rational and closures of it).
  std::optional<Rational> exact_value() const;

  struct Node;
  const Node& node() const { return *node_; }

 private:
  explicit RealSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// First n fractional digits of `spec` in `base`, exactly.
DigitPrefix digits(const RealSpec& spec, unsigned base, std::size_t n);

/// An enclosure of width <= 2^-bits (or wider where a fractional part
/// straddles an integer; callers refine).
Enclosure enclose(const RealSpec& spec, std::size_t bits);

/// |r - x| < delta, decided exactly. Throws TieUnresolvable at the cap.
bool within(const RealSpec& spec, const Rational& r, const Rational& delta);

/// Repeated strict-distance tests |r - x| < delta against a fixed spec and
/// delta. Holds one enclosure and refines per query only when it is
/// undecided.
class Neighborhood {
 public:
  Neighborhood(RealSpec spec, Rational delta);
  bool contains(const Rational& r) const;
  const Rational& delta() const noexcept { return delta_; }
  const RealSpec& spec() const noexcept { return spec_; }

 private:
  std::optional<bool> decide(const Enclosure& e, const Rational& r) const;

  RealSpec spec_;
  Rational delta_;
  std::size_t requested_bits_;
  Enclosure enclosure_;
  bool exact_;
};

/// Splits z into (x, y): x keeps bits at 1-based positions 1,3,5,..., y keeps 2,4,6,...
std::pair<RealSpec, RealSpec> interleave_split(const RealSpec& parent);

/// Digit at 1-based position i of Champernowne(base), by direct indexing.
Digit champernowne_digit_at(unsigned base, std::uint64_t position);

/// The fixed 64-bit mixer behind Pseudorandom specs.
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index);

/// Write-once, read-many on-disk digit cache. Files hold a header line
/// `base=<b> spec=<canonical>` followed by the digits (ASCII for b <= 10,
/// comma-separated decimals otherwise). Requests for longer prefixes extend a
/// file without changing its existing bytes.
class DigitCache {
 public:
  explicit DigitCache(std::filesystem::path dir);

  std::filesystem::path path_for(const RealSpec& spec, unsigned base) const;
  DigitPrefix get(const RealSpec& spec, unsigned base, std::size_t n);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
};

/// Serialized cache-format text for a prefix.
std::string format_digit_file(const DigitPrefix& prefix, const std::string& canonical_spec);

struct DigitFileContents {
  std::optional<unsigned> base;
  std::string spec;
  DigitString digits;
};

/// Reads either the cache format or a bare digit file.
DigitFileContents read_digit_file(const std::filesystem::path& path, unsigned base_hint);

}  // namespace normlab

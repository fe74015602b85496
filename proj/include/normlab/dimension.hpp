#pragma once

// Upper-bound estimates of computable dimension from a finite family of
// always-total, lossless codecs. For a codec M,
//
//   K_M(w) = min(|encode(w)|, |w|)
//
// (a word is always its own program), and a profile reports
// min_M K_M(x[1..n]) / n over a grid of n together with a trailing-window
// minimum as the liminf estimate. Everything here is an upper bound: the
// infimum over all total machines is not computable.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/numstream.hpp"
#include "normlab/rational.hpp"
#include "normlab/repsys.hpp"

namespace normlab {

using BitString = std::vector<std::uint8_t>;

class Codec {
 public:
  virtual ~Codec() = default;
  virtual const std::string& name() const = 0;
  virtual BitString encode(const BitString& word) const = 0;
  /// Throws CodecError on programs encode() never produces.
  virtual BitString decode(const BitString& program) const = 0;
};

using CodecPtr = std::shared_ptr<const Codec>;

/// encode(w) = w.
CodecPtr passthrough_codec();
/// First bit, then Elias-gamma run lengths.
CodecPtr run_length_codec();
/// Greedy LZ77 over bits with unbounded window: `0 b` literals and
/// `1 gamma(distance) gamma(length - 11)` matches.
CodecPtr lz77_codec();

/// Fixed overhead of a repsys program beyond 2*ceil(log2 n) and |sigma|:
/// one flag bit, the spare bit of Elias-gamma(n), two selector bits.
inline constexpr std::size_t kRepsysHeaderBits = 4;

/// The decompressor from the dimension-1 characterization: a word w of
/// length n is named by a sigma with f(sigma) close to 0.w plus two bits
/// choosing among trunc_n(f(sigma)), its successor and its predecessor.
///
/// Words are packed base-b digit strings (see pack_digits); the digit count
/// is recovered from the bit length. Programs are
///   1 gamma(n) selector pack(sigma)   search path, |sigma| < n
///   0 word                            escape
/// so in base 2 the search path costs |sigma| + 2*floor(log2 n) + 4 bits.
class RepsysCodec final : public Codec {
 public:
  /// `budget` bounds the candidates tried per encode; exhausting it falls
  /// back to the escape program. The identity system needs no search.
  explicit RepsysCodec(RepSystem f, SearchBudget budget = {1u << 16});

  struct Encoding {
    BitString program;
    std::optional<DigitString> sigma;  // nullopt when the escape path was taken
  };

  const std::string& name() const override { return name_; }
  Encoding encode_detail(const BitString& word) const;
  BitString encode(const BitString& word) const override { return encode_detail(word).program; }
  BitString decode(const BitString& program) const override;

 private:
  std::optional<DigitString> search(const Integer& w_value, std::size_t n) const;

  RepSystem f_;
  SearchBudget budget_;
  std::string name_;
};

CodecPtr repsys_codec(const RepSystem& f, SearchBudget budget = {1u << 16});

/// min(|encode(w)|, |w|); throws CodecError when decode(encode(w)) != w.
std::size_t k_m(const Codec& codec, const BitString& word);

/// Digit words as bits: chunks of c digits (the largest c with b^c <= 2^63)
/// become fixed-width binary numerals of bit_length(b^c - 1) bits, the last
/// partial chunk of r digits uses bit_length(b^r - 1) bits. Base 2 is the identity.
BitString pack_digits(std::span<const Digit> digits, unsigned base);
BitString pack_digits(const DigitPrefix& digits);
DigitString unpack_digits(const BitString& bits, unsigned base, std::size_t n);
std::size_t packed_length(unsigned base, std::size_t n);
/// Inverse of packed_length; nullopt when no digit count packs to `bits`.
std::optional<std::size_t> packed_digit_count(unsigned base, std::size_t bits);

void append_gamma(BitString& out, std::uint64_t value);
/// Reads an Elias-gamma number at `pos`, advancing it; nullopt on truncation.
std::optional<std::uint64_t> read_gamma(const BitString& in, std::size_t& pos);

// Ratios are K_M / |packed word|, which is K_M / n in base 2.
struct DimPoint {
  std::size_t n = 0;     // digits
  std::size_t bits = 0;  // packed word length
  std::vector<std::size_t> k_m;  // one per codec
  Rational best_ratio;
  std::size_t best_codec = 0;
  Rational running_estimate;  // min best_ratio over the trailing 25% of points so far
};

struct DimProfile {
  std::string spec;
  std::vector<std::string> codecs;
  std::vector<DimPoint> points;

  /// The liminf estimate at the last grid point (an upper bound).
  const Rational& estimate() const;
  /// Header `spec,n,codec,k_m,ratio`.
  std::string csv() const;
};

DimProfile dim_profile(const RealSpec& spec, unsigned base, const std::vector<CodecPtr>& codecs,
                       std::vector<std::size_t> n_grid);
DimProfile dim_profile(const DigitPrefix& digits, const std::string& spec_name, const std::vector<CodecPtr>& codecs,
                       std::vector<std::size_t> n_grid);

/// Name -> codec lookup; the built-in codecs are registered up front.
class CodecRegistry {
 public:
  CodecRegistry();
  void add(CodecPtr codec);
  CodecPtr get(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, CodecPtr, std::less<>> codecs_;
};

}  // namespace normlab

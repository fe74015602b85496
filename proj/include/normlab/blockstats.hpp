#pragma once

// Block-frequency statistics over digit prefixes: overlapping occurrence
// counts of every length-k block and their exact discrepancy from b^-k.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "normlab/numstream.hpp"
#include "normlab/rational.hpp"

namespace normlab {

/// Upper bound on b^k for a counts table.
inline constexpr std::uint64_t kMaxBlockTable = 10'000'000;

struct BlockCounts {
  unsigned base = 2;
  unsigned k = 1;
  std::size_t n = 0;
  /// Indexed by the block read as a big-endian base-b numeral.
  std::vector<std::uint64_t> counts;

  std::uint64_t windows() const noexcept { return n - k + 1; }
  std::uint64_t count(std::span<const Digit> block) const;
};

/// Overlapping counts of all length-k blocks, positions 1..n-k+1.
BlockCounts count_blocks(const DigitPrefix& prefix, unsigned k);

/// max_w |count(w)/(n-k+1) - b^-k|, exactly.
Rational discrepancy(const BlockCounts& counts);

enum class Trend { strictly_decreasing, constant, other };

struct NormalityPoint {
  unsigned k;
  std::size_t n;
  Rational discrepancy;
};

struct NormalityReport {
  std::string spec;
  unsigned base = 2;
  unsigned k_max = 1;
  std::vector<std::size_t> n_grid;
  std::vector<NormalityPoint> points;  // ordered by k, then n
  std::vector<Trend> trends;           // one per k = 1..k_max, across the grid

  const Rational& at(unsigned k, std::size_t n) const;
  /// Header `spec,base,k,n,discrepancy_num,discrepancy_den` plus one row per point.
  std::string csv() const;
};

/// Discrepancy for every k <= k_max at every grid size (each grid n >= k_max).
NormalityReport normality_profile(const RealSpec& spec, unsigned base, unsigned k_max,
                                  std::vector<std::size_t> n_grid);
/// Same, over digits already in hand (the longest grid point must fit).
NormalityReport normality_profile(const DigitPrefix& digits, const std::string& spec_name, unsigned k_max,
                                  std::vector<std::size_t> n_grid);

std::string to_string(Trend t);

}  // namespace normlab

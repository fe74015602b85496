#include "normlab/blockstats.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "normlab/errors.hpp"

namespace normlab {

namespace {

std::uint64_t table_size(unsigned base, unsigned k) {
  std::uint64_t size = 1;
  for (unsigned i = 0; i < k; ++i) {
    if (size > kMaxBlockTable / base) throw ResourceError("b^k exceeds the block table bound 10^7");
    size *= base;
  }
  return size;
}

// One rolling pass; snapshots the counts whenever the prefix length reaches
// the next grid point.
std::vector<BlockCounts> count_at(std::span<const Digit> digits, unsigned base, unsigned k,
                                  const std::vector<std::size_t>& grid) {
  const std::uint64_t size = table_size(base, k);
  std::vector<BlockCounts> out;
  BlockCounts running{base, k, 0, std::vector<std::uint64_t>(size, 0)};
  std::uint64_t index = 0;
  std::size_t g = 0;
  for (std::size_t i = 0; i < digits.size() && g < grid.size(); ++i) {
    index = (index * base + digits[i]) % size;
    if (i + 1 >= k) ++running.counts[index];
    while (g < grid.size() && grid[g] == i + 1) {
      running.n = i + 1;
      out.push_back(running);
      ++g;
    }
  }
  return out;
}

}  // namespace

std::uint64_t BlockCounts::count(std::span<const Digit> block) const {
  if (block.size() != k) throw PreconditionError("block length differs from k");
  std::uint64_t index = 0;
  for (Digit d : block) {
    if (d >= base) throw PreconditionError("digit out of range");
    index = index * base + d;
  }
  return counts[index];
}

BlockCounts count_blocks(const DigitPrefix& prefix, unsigned k) {
  if (k == 0 || k > prefix.size())
    throw PreconditionError("block length " + std::to_string(k) + " must be in 1.." + std::to_string(prefix.size()));
  return count_at(prefix.digits(), prefix.base(), k, {prefix.size()}).front();
}

Rational discrepancy(const BlockCounts& c) {
  if (c.counts.empty() || c.n < c.k) throw PreconditionError("empty block counts");
  // |count/N - 1/B| = |count*B - N| / (N*B) with B = b^k, N = n-k+1.
  auto [lo, hi] = std::minmax_element(c.counts.begin(), c.counts.end());
  const Integer table = Integer(static_cast<unsigned long>(c.counts.size()));
  const Integer windows = Integer(static_cast<unsigned long>(c.windows()));
  Integer over = Integer(static_cast<unsigned long>(*hi)) * table - windows;
  Integer under = windows - Integer(static_cast<unsigned long>(*lo)) * table;
  return make_rational(over > under ? over : under, windows * table);
}

const Rational& NormalityReport::at(unsigned k, std::size_t n) const {
  for (const auto& p : points)
    if (p.k == k && p.n == n) return p.discrepancy;
  throw PreconditionError("no grid point k=" + std::to_string(k) + " n=" + std::to_string(n));
}

std::string NormalityReport::csv() const {
  std::ostringstream out;
  out << "spec,base,k,n,discrepancy_num,discrepancy_den\n";
  for (const auto& p : points)
    out << spec << ',' << base << ',' << p.k << ',' << p.n << ',' << p.discrepancy.get_num().get_str() << ','
        << p.discrepancy.get_den().get_str() << '\n';
  return out.str();
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::strictly_decreasing: return "strictly-decreasing";
    case Trend::constant: return "constant";
    case Trend::other: return "other";
  }
  return "other";
}

NormalityReport normality_profile(const DigitPrefix& digits, const std::string& spec_name, unsigned k_max,
                                  std::vector<std::size_t> n_grid) {
  if (k_max == 0) throw PreconditionError("k_max must be >= 1");
  if (n_grid.empty()) throw PreconditionError("empty n grid");
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  if (n_grid.front() < k_max) throw PreconditionError("grid sizes must be >= k_max");
  if (n_grid.back() > digits.size()) throw PreconditionError("grid exceeds available digits");
  table_size(digits.base(), k_max);

  NormalityReport report{spec_name, digits.base(), k_max, n_grid, {}, {}};
  for (unsigned k = 1; k <= k_max; ++k) {
    auto snapshots = count_at(digits.digits(), digits.base(), k, n_grid);
    Trend trend = snapshots.size() > 1 ? Trend::strictly_decreasing : Trend::constant;
    bool all_equal = true;
    std::optional<Rational> previous;
    for (const auto& s : snapshots) {
      Rational d = discrepancy(s);
      if (previous) {
        if (!(d < *previous)) trend = Trend::other;
        if (d != *previous) all_equal = false;
      }
      previous = d;
      report.points.push_back({k, s.n, std::move(d)});
    }
    if (snapshots.size() > 1 && all_equal) trend = Trend::constant;
    report.trends.push_back(trend);
  }
  return report;
}

NormalityReport normality_profile(const RealSpec& spec, unsigned base, unsigned k_max, std::vector<std::size_t> n_grid) {
  if (n_grid.empty()) throw PreconditionError("empty n grid");
  std::size_t n_max = *std::max_element(n_grid.begin(), n_grid.end());
  return normality_profile(digits(spec, base, n_max), spec.canonical(), k_max, std::move(n_grid));
}

}  // namespace normlab

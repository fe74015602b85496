#pragma once

// Finite-state betting strategies. In state q the strategy splits its
// capital over the next digit by the stake vector stakes(q); after digit a
// arrives the capital is multiplied by b * stakes(q)[a].

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/numstream.hpp"
#include "normlab/rational.hpp"
#include "normlab/transducer.hpp"

namespace normlab {

/// Exact capital traces are produced up to this many digits.
inline constexpr std::size_t kExactCapitalLimit = 1000;

class FSMartingale {
 public:
  /// `next` is indexed by q * base + a; `stakes[q]` has one entry per digit.
  /// Stakes must be nonnegative; whether they sum to 1 is checked by
  /// fairness_check, not here.
  FSMartingale(unsigned base, std::size_t states, StateId start, std::vector<StateId> next,
               std::vector<std::vector<Rational>> stakes, Rational initial_capital = Rational(1));

  /// One state, stake 1/b on every digit.
  static FSMartingale uniform(unsigned base);
  /// Bets everything on the digits of 0.preperiod(period)*.
  static FSMartingale full_stake(unsigned base, const DigitString& preperiod, const DigitString& period);
  /// States 0 -> 1 -> ... -> k-1 -> 0 regardless of the digit read.
  static FSMartingale cycle(unsigned base, std::vector<std::vector<Rational>> stakes);

  unsigned base() const noexcept { return base_; }
  std::size_t state_count() const noexcept { return states_; }
  StateId start() const noexcept { return start_; }
  StateId next(StateId q, Digit a) const { return next_[q * base_ + a]; }
  const std::vector<Rational>& stakes(StateId q) const { return stakes_[q]; }
  const Rational& initial_capital() const noexcept { return capital_; }

  friend bool operator==(const FSMartingale&, const FSMartingale&) = default;

 private:
  unsigned base_;
  std::size_t states_;
  StateId start_;
  std::vector<StateId> next_;
  std::vector<std::vector<Rational>> stakes_;
  Rational capital_;
};

struct FairnessReport {
  struct Violation {
    StateId state;
    Rational stake_sum;
  };
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::string describe() const;
};

/// Every stake vector must sum to exactly 1.
FairnessReport fairness_check(const FSMartingale& m);

/// d(w) for a single word, exactly.
Rational capital_of(const FSMartingale& m, std::span<const Digit> word);

/// d(w[1..i]) for i = 0..n. Exact for n <= kExactCapitalLimit.
std::vector<Rational> capital(const FSMartingale& m, const DigitPrefix& prefix);
/// log2 d(w[1..i]) for i = 0..n in double precision (-inf after a zero-stake hit).
std::vector<double> log2_capital(const FSMartingale& m, const DigitPrefix& prefix);

enum class GrowthBound { sqrt_n, log2_n };

struct SuccessThresholds {
  std::vector<Rational> epsilons{Rational(1, 20)};
  GrowthBound h = GrowthBound::sqrt_n;
  std::size_t settle_in = 0;
  std::size_t grid_step = 0;  // 0: about 100 evenly spaced report points
};

struct SuccessPoint {
  std::size_t n;
  double log2_capital;
  std::vector<bool> crosses_eps;  // log2 d >= eps * n
  bool crosses_h;                 // log2 d >= h(n)
};

struct SuccessProfile {
  std::string spec;
  SuccessThresholds thresholds;
  std::vector<SuccessPoint> points;
  /// Last n (over every n, not only grid points) at which each bound was crossed.
  std::vector<std::optional<std::size_t>> last_eps_crossing;
  std::optional<std::size_t> last_h_crossing;
  /// Descriptive only: the final log2 d(w[1..n]) / n.
  double final_slope = 0.0;

  /// No crossing of any bound after the settle-in index.
  bool consistent_with_normality() const;
  std::string csv() const;
};

SuccessProfile success_profile(const FSMartingale& m, const RealSpec& spec, std::size_t n_max,
                               const SuccessThresholds& thresholds = {});

/// Text format: `base=<b> states=<m> start=<q0> capital=<c0>`, transition
/// lines `<q> <a> -> <q'>`, and stake lines `<q> : <s_0>,...,<s_{b-1}>`.
FSMartingale parse_martingale(std::string_view text);
std::string serialize_martingale(const FSMartingale& m);

}  // namespace normlab

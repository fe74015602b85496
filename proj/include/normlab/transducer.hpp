#pragma once

// Deterministic finite-state transducers over Sigma_b = {0..b-1} and the
// complexities C_D(sigma) and C_{n,D}(x).
//
// Run semantics: from the start state, each input digit a emits out(q, a)
// and then moves to next(q, a).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/numstream.hpp"

namespace normlab {

using StateId = std::uint32_t;

class Transducer {
 public:
  /// Tables are indexed by q * base + a and must cover every (q, a).
  Transducer(unsigned base, std::size_t states, StateId start, std::vector<StateId> next,
             std::vector<DigitString> output);

  static Transducer identity(unsigned base);
  /// One state; `digit` emits itself twice, every other digit emits itself.
  static Transducer doubling(unsigned base, Digit digit);
  /// One state emitting nothing.
  static Transducer silent(unsigned base);

  unsigned base() const noexcept { return base_; }
  std::size_t state_count() const noexcept { return states_; }
  StateId start() const noexcept { return start_; }
  StateId next(StateId q, Digit a) const { return next_[q * base_ + a]; }
  const DigitString& output(StateId q, Digit a) const { return output_[q * base_ + a]; }
  std::size_t max_output_length() const noexcept { return max_output_; }

  friend bool operator==(const Transducer&, const Transducer&) = default;

 private:
  unsigned base_;
  std::size_t states_;
  StateId start_;
  std::vector<StateId> next_;
  std::vector<DigitString> output_;
  std::size_t max_output_ = 0;
};

DigitString run(const Transducer& d, std::span<const Digit> input);

/// Least |p| with run(D, p) == sigma; nullopt when sigma is not a D-output.
std::optional<std::size_t> c_d(const Transducer& d, std::span<const Digit> sigma);

/// One point of a complexity profile.
struct ComplexityEntry {
  std::size_t n = 0;
  std::size_t value = 0;
  bool cap_hit = false;  // value == n + 1 by the cap clause
  double ratio() const noexcept { return n == 0 ? 0.0 : static_cast<double>(value) / static_cast<double>(n); }
  friend bool operator==(const ComplexityEntry&, const ComplexityEntry&) = default;
};

/// Limit on the number of candidate strings an exhaustive search may visit.
struct SearchBudget {
  std::uint64_t max_candidates = 50'000'000;
};

/// sum_{L=0..n} b^L, saturating at UINT64_MAX.
std::uint64_t candidates_up_to(unsigned base, std::size_t n);
/// Throws ResourceError when candidates_up_to(base, n) exceeds the budget.
void check_budget(unsigned base, std::size_t n, const SearchBudget& budget);

/// Least |p| <= max_length for which accept(run(D, p)) holds, or nullopt.
/// Depth-first over inputs with the running state and output shared along
/// each path; nodes at depth >= the best hit so far are pruned.
std::optional<std::size_t> shortest_accepted_input(const Transducer& d, std::size_t max_length,
                                                   const std::function<bool(std::span<const Digit>)>& accept);

/// min(n+1, least |p| with |0.run(D,p) - x| < b^-n).
ComplexityEntry c_nd(const Transducer& d, const RealSpec& x, std::size_t n, const SearchBudget& budget = {});

/// Text format: `base=<b> states=<m> start=<q0>` then one line per (state,
/// digit): `<q> <a> -> <q'> / <output>` where output is `-` for the empty
/// string, a digit run for b <= 10, or comma-separated digits otherwise.
/// Blank lines and lines starting with '#' are ignored.
Transducer parse_transducer(std::string_view text);
std::string serialize_transducer(const Transducer& d);

/// Shared by the machine text formats.
std::string format_digit_run(std::span<const Digit> digits, unsigned base);
DigitString parse_digit_run(std::string_view text, unsigned base, std::size_t line);

}  // namespace normlab

#pragma once

// Canned experiments. Each returns every check with its expected and
// observed values as exact strings; an experiment passes iff all checks do.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "normlab/numstream.hpp"
#include "normlab/rational.hpp"
#include "normlab/repsys.hpp"
#include "normlab/transducer.hpp"

namespace normlab {

struct Check {
  std::string name;
  std::string expected;
  std::string observed;
  bool passed = false;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<Check> checks;

  bool passed() const;
  std::size_t failures() const;
  std::string text() const;
  /// Header `experiment,check,expected,observed,pass`.
  std::string csv() const;
};

/// x = (b-2)/(b-1), identity f, D doubling the digit b-2. Checks
/// C^f_n(x) = n and C^f_{n,D}(x) in {ceil(n/2), ceil(n/2)+1} for 4 <= n <= n_max.
ExperimentResult run_separation_example(unsigned base, std::size_t n_max, const SearchBudget& budget = {});

struct InterleaveThresholds {
  Rational xy_min{1, 5};
  /// Default 1/20 below 10^5 digits and 1/50 from 10^5 on.
  std::optional<Rational> z_max;
};

/// z = Champernowne(2) split into its odd- and even-position halves.
ExperimentResult run_interleave_experiment(std::size_t n, const InterleaveThresholds& thresholds = {});

/// Complement transport for f and 1 - f around x and 1 - x, and, when q = b^-j,
/// the digit-shift relation between C^f_m(x) and C^{qf}_{m+j}(qx) for m + j <= n.
ExperimentResult run_closure_experiments(const RealSpec& x, const RepSystem& f, const Rational& q, std::size_t n,
                                         const SearchBudget& budget = {});

struct ComposeInstance {
  RepSystem f;
  Transducer d;
  RealSpec x;
  std::size_t n;
  std::string describe() const;
};

/// Base 2 or 3, at most 4 states, outputs of length <= 2, n <= 8, f identity or affine.
ComposeInstance random_compose_instance(std::mt19937_64& rng);
Transducer random_transducer(std::mt19937_64& rng, unsigned base, std::size_t max_states, std::size_t max_output);

/// For each instance: c_f_n over compose(f, D) against c_f_nd, and c_f_nd with
/// the identity transducer against c_f_n.
ExperimentResult run_compose_identity_suite(std::size_t trials, std::uint64_t seed);

}  // namespace normlab

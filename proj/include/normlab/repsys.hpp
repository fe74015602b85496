#pragma once

// Representation systems f: Sigma_b^{<omega} -> Q and the complexities
//
//   C^f_n(x)     = min{|sigma| : |f(sigma) - x| < b^-n} u {n+1}
//   C^f_{n,D}(x) = min{C_D(sigma) : |f(sigma) - x| < b^-n} u {n+1}
//
// f is opaque, so both are computed by exhaustive enumeration under an
// explicit budget. Only the identity system is pruned (0.sigma is monotone in
// the numeral, so at each length only the two lattice points around x can
// qualify).

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/numstream.hpp"
#include "normlab/rational.hpp"
#include "normlab/transducer.hpp"

namespace normlab {

class RepSystem {
 public:
  enum class Kind { identity, affine, composed, tabular, staged };
  /// g(stage, sigma); must be nonincreasing in stage.
  using StageFunction = std::function<Rational(std::size_t, std::span<const Digit>)>;

  /// sigma -> 0.sigma.
  static RepSystem identity(unsigned base);
  /// sigma -> q * inner(sigma) + r, q != 0.
  static RepSystem affine(const Rational& q, const Rational& r, const RepSystem& inner);
  /// Overrides first, fallback elsewhere.
  static RepSystem tabular(std::map<DigitString, Rational> overrides, const RepSystem& fallback);
  /// p -> f(run(D, p)); same as compose().
  static RepSystem composed(const RepSystem& f, const Transducer& d, std::string d_name);
  /// Evaluates g at a fixed stage, auditing stages 0..stage for monotonicity.
  static RepSystem staged(unsigned base, StageFunction g, std::size_t stage, std::string name);
  /// g(s, sigma) = inner(sigma) + 2^-s: approaches inner from above.
  static RepSystem staged_from_above(const RepSystem& inner, std::size_t stage);

  unsigned base() const;
  Kind kind() const;
  const std::string& name() const;
  bool is_identity() const { return kind() == Kind::identity; }

  Rational eval(std::span<const Digit> sigma) const;

  struct Node;
  const Node& node() const { return *node_; }

 private:
  explicit RepSystem(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// p -> f(run(D, p)).
RepSystem compose(const RepSystem& f, const Transducer& d, std::string d_name = "D");

/// sigma -> 1 - f(sigma).
RepSystem complement_system(const RepSystem& f);

/// Stages s < configured stage with g(s, sigma) < g(s+1, sigma). Empty for non-staged systems.
std::vector<std::size_t> audit_stages(const RepSystem& f, std::span<const Digit> sigma);

ComplexityEntry c_f_n(const RealSpec& x, const RepSystem& f, std::size_t n, const SearchBudget& budget = {});
ComplexityEntry c_f_nd(const RealSpec& x, const RepSystem& f, const Transducer& d, std::size_t n,
                       const SearchBudget& budget = {});

struct ThresholdFinding {
  Rational eps;
  std::optional<std::size_t> last_violation;  // largest n with C < n(1 - eps)
};

struct RatioProfile {
  std::string system;
  std::string transducer;  // empty for weak profiles
  std::vector<ComplexityEntry> points;
  std::vector<ThresholdFinding> findings;
  std::size_t settle_in = 0;

  bool consistent() const;
  std::string csv(const std::string& spec_name) const;
};

struct StrongProfile {
  std::vector<RatioProfile> per_transducer;
  std::vector<ThresholdFinding> findings;  // worst over all transducers
  std::size_t settle_in = 0;
  bool consistent() const;
};

RatioProfile weak_profile(const RealSpec& x, const RepSystem& f, const std::vector<std::size_t>& n_range,
                          const std::vector<Rational>& epsilons, std::size_t settle_in = 0,
                          const SearchBudget& budget = {});

StrongProfile strong_profile(const RealSpec& x, const RepSystem& f,
                             const std::vector<std::pair<std::string, Transducer>>& transducers,
                             const std::vector<std::size_t>& n_range, const std::vector<Rational>& epsilons,
                             std::size_t settle_in = 0, const SearchBudget& budget = {});

/// Two-column text `sigma  p/q` per line; `-` names the empty string.
std::map<DigitString, Rational> parse_overrides(std::string_view text, unsigned base);

}  // namespace normlab

#include "normlab/repsys.hpp"

#include <algorithm>
#include <sstream>
#include <variant>

#include "normlab/errors.hpp"

namespace normlab {

struct RepSystem::Node {
  struct Identity {};
  struct Affine {
    Rational q, r;
    RepSystem inner;
  };
  struct Composed {
    RepSystem inner;
    Transducer d;
  };
  struct Tabular {
    std::map<DigitString, Rational> overrides;
    RepSystem fallback;
  };
  struct Staged {
    StageFunction g;
    std::size_t stage;
  };

  unsigned base;
  std::string name;
  std::variant<Identity, Affine, Composed, Tabular, Staged> v;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

RepSystem RepSystem::identity(unsigned base) {
  if (base < 2) throw PreconditionError("base must be >= 2");
  return RepSystem(std::make_shared<Node>(Node{base, "identity", Node::Identity{}}));
}

RepSystem RepSystem::affine(const Rational& q, const Rational& r, const RepSystem& inner) {
  if (q == 0) throw PreconditionError("affine factor must be nonzero");
  std::string name = "affine(" + to_string(q) + "," + to_string(r) + "," + inner.name() + ")";
  return RepSystem(std::make_shared<Node>(Node{inner.base(), std::move(name), Node::Affine{q, r, inner}}));
}

RepSystem RepSystem::composed(const RepSystem& f, const Transducer& d, std::string d_name) {
  if (f.base() != d.base())
    throw PreconditionError("base mismatch: system base " + std::to_string(f.base()) + ", transducer base " +
                            std::to_string(d.base()));
  std::string name = "compose(" + f.name() + "," + d_name + ")";
  return RepSystem(std::make_shared<Node>(Node{f.base(), std::move(name), Node::Composed{f, d}}));
}

RepSystem RepSystem::tabular(std::map<DigitString, Rational> overrides, const RepSystem& fallback) {
  for (const auto& [sigma, value] : overrides)
    for (Digit d : sigma)
      if (d >= fallback.base()) throw PreconditionError("override key digit out of range");
  std::string name = "tabular(" + std::to_string(overrides.size()) + "," + fallback.name() + ")";
  return RepSystem(
      std::make_shared<Node>(Node{fallback.base(), std::move(name), Node::Tabular{std::move(overrides), fallback}}));
}

RepSystem RepSystem::staged(unsigned base, StageFunction g, std::size_t stage, std::string name) {
  if (base < 2) throw PreconditionError("base must be >= 2");
  if (!g) throw PreconditionError("staged system needs an evaluator");
  return RepSystem(std::make_shared<Node>(Node{base, std::move(name), Node::Staged{std::move(g), stage}}));
}

RepSystem RepSystem::staged_from_above(const RepSystem& inner, std::size_t stage) {
  auto g = [inner](std::size_t s, std::span<const Digit> sigma) {
    return Rational(inner.eval(sigma) + inverse_power(2, s));
  };
  return staged(inner.base(), g, stage, "staged(" + std::to_string(stage) + "," + inner.name() + ")");
}

RepSystem compose(const RepSystem& f, const Transducer& d, std::string d_name) {
  return RepSystem::composed(f, d, std::move(d_name));
}

RepSystem complement_system(const RepSystem& f) { return RepSystem::affine(Rational(-1), Rational(1), f); }

unsigned RepSystem::base() const { return node_->base; }
RepSystem::Kind RepSystem::kind() const { return static_cast<Kind>(node_->v.index()); }
const std::string& RepSystem::name() const { return node_->name; }

std::vector<std::size_t> audit_stages(const RepSystem& f, std::span<const Digit> sigma) {
  std::vector<std::size_t> bad;
  const auto* s = std::get_if<RepSystem::Node::Staged>(&f.node().v);
  if (!s) return bad;
  Rational prev = s->g(0, sigma);
  for (std::size_t k = 0; k < s->stage; ++k) {
    Rational cur = s->g(k + 1, sigma);
    if (cur > prev) bad.push_back(k);
    prev = std::move(cur);
  }
  return bad;
}

Rational RepSystem::eval(std::span<const Digit> sigma) const {
  return std::visit(overloaded{
                        [&](const Node::Identity&) {
                          for (Digit d : sigma)
                            if (d >= base()) throw PreconditionError("digit out of range");
                          return lattice_value(sigma, base());
                        },
                        [&](const Node::Affine& a) { return Rational(a.q * a.inner.eval(sigma) + a.r); },
                        [&](const Node::Composed& c) { return c.inner.eval(run(c.d, sigma)); },
                        [&](const Node::Tabular& t) {
                          auto it = t.overrides.find(DigitString(sigma.begin(), sigma.end()));
                          return it != t.overrides.end() ? it->second : t.fallback.eval(sigma);
                        },
                        [&](const Node::Staged& s) {
                          auto bad = audit_stages(*this, sigma);
                          if (!bad.empty())
                            throw InvariantError("staged system " + name() + " increases between stages " +
                                                 std::to_string(bad.front()) + " and " +
                                                 std::to_string(bad.front() + 1));
                          return s.g(s.stage, sigma);
                        },
                    },
                    node_->v);
}

// ---------------------------------------------------------------------------
// Complexities

namespace {

// Odometer over all strings of one length, in lexicographic order.
bool advance(DigitString& s, unsigned base) {
  for (std::size_t i = s.size(); i-- > 0;) {
    if (++s[i] < base) return true;
    s[i] = 0;
  }
  return false;
}

ComplexityEntry identity_c_f_n(const RealSpec& x, unsigned base, std::size_t n, const Neighborhood& near) {
  // floor(x * b^L) is the numeral of x's first L digits; only it and its
  // successor can land within b^-n of x at length L.
  DigitPrefix prefix = digits(x, base, n);
  Integer k = 0;
  for (std::size_t len = 0; len <= n; ++len) {
    if (len > 0) k = k * base + prefix[len - 1];
    const Integer scale = ipow(base, len);
    if (near.contains(make_rational(k, scale))) return {n, len, false};
    if (k + 1 < scale && near.contains(make_rational(k + 1, scale))) return {n, len, false};
  }
  return {n, n + 1, true};
}

}  // namespace

ComplexityEntry c_f_n(const RealSpec& x, const RepSystem& f, std::size_t n, const SearchBudget& budget) {
  if (n == 0) throw PreconditionError("c_f_n needs n >= 1");
  const unsigned base = f.base();
  Neighborhood near(x, inverse_power(base, n));
  if (f.is_identity()) return identity_c_f_n(x, base, n, near);
  check_budget(base, n, budget);
  for (std::size_t len = 0; len <= n; ++len) {
    DigitString sigma(len, 0);
    do {
      if (near.contains(f.eval(sigma))) return {n, len, false};
    } while (advance(sigma, base));
  }
  return {n, n + 1, true};
}

ComplexityEntry c_f_nd(const RealSpec& x, const RepSystem& f, const Transducer& d, std::size_t n,
                       const SearchBudget& budget) {
  if (n == 0) throw PreconditionError("c_f_nd needs n >= 1");
  if (f.base() != d.base()) throw PreconditionError("base mismatch between system and transducer");
  check_budget(d.base(), n, budget);
  Neighborhood near(x, inverse_power(f.base(), n));
  auto hit = shortest_accepted_input(d, n, [&](std::span<const Digit> out) { return near.contains(f.eval(out)); });
  std::size_t value = hit.value_or(n + 1);
  return {n, value, value == n + 1};
}

// ---------------------------------------------------------------------------
// Profiles

namespace {

std::vector<ThresholdFinding> findings_for(const std::vector<ComplexityEntry>& points,
                                           const std::vector<Rational>& epsilons) {
  std::vector<ThresholdFinding> out;
  for (const auto& eps : epsilons) {
    ThresholdFinding f{eps, std::nullopt};
    for (const auto& p : points) {
      Rational bound = Rational(static_cast<unsigned long>(p.n)) * (1 - eps);
      if (Rational(static_cast<unsigned long>(p.value)) < bound)
        f.last_violation = std::max(f.last_violation.value_or(0), p.n);
    }
    out.push_back(std::move(f));
  }
  return out;
}

bool no_late_violation(const std::vector<ThresholdFinding>& findings, std::size_t settle_in) {
  return std::none_of(findings.begin(), findings.end(),
                      [&](const ThresholdFinding& f) { return f.last_violation && *f.last_violation > settle_in; });
}

}  // namespace

bool RatioProfile::consistent() const { return no_late_violation(findings, settle_in); }
bool StrongProfile::consistent() const { return no_late_violation(findings, settle_in); }

std::string RatioProfile::csv(const std::string& spec_name) const {
  std::ostringstream out;
  out << "spec,system,transducer,n,value,cap_hit,ratio\n";
  for (const auto& p : points)
    out << spec_name << ',' << system << ',' << (transducer.empty() ? "-" : transducer) << ',' << p.n << ','
        << p.value << ',' << (p.cap_hit ? 1 : 0) << ',' << p.ratio() << '\n';
  return out.str();
}

RatioProfile weak_profile(const RealSpec& x, const RepSystem& f, const std::vector<std::size_t>& n_range,
                          const std::vector<Rational>& epsilons, std::size_t settle_in, const SearchBudget& budget) {
  RatioProfile profile{f.name(), "", {}, {}, settle_in};
  for (std::size_t n : n_range) profile.points.push_back(c_f_n(x, f, n, budget));
  profile.findings = findings_for(profile.points, epsilons);
  return profile;
}

StrongProfile strong_profile(const RealSpec& x, const RepSystem& f,
                             const std::vector<std::pair<std::string, Transducer>>& transducers,
                             const std::vector<std::size_t>& n_range, const std::vector<Rational>& epsilons,
                             std::size_t settle_in, const SearchBudget& budget) {
  StrongProfile out;
  out.settle_in = settle_in;
  for (const auto& eps : epsilons) out.findings.push_back({eps, std::nullopt});
  for (const auto& [name, d] : transducers) {
    RatioProfile p{f.name(), name, {}, {}, settle_in};
    for (std::size_t n : n_range) p.points.push_back(c_f_nd(x, f, d, n, budget));
    p.findings = findings_for(p.points, epsilons);
    for (std::size_t i = 0; i < epsilons.size(); ++i)
      if (p.findings[i].last_violation)
        out.findings[i].last_violation =
            std::max(out.findings[i].last_violation.value_or(0), *p.findings[i].last_violation);
    out.per_transducer.push_back(std::move(p));
  }
  return out;
}

std::map<DigitString, Rational> parse_overrides(std::string_view text, unsigned base) {
  std::map<DigitString, Rational> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ls(raw);
    std::string key, value, extra;
    if (!(ls >> key) || key[0] == '#') continue;
    if (!(ls >> value) || (ls >> extra)) throw ParseError(line_no, "expected '<sigma> <p/q>'");
    DigitString sigma = parse_digit_run(key, base, line_no);
    Rational v;
    try {
      v = parse_rational(value);
    } catch (const ParseError&) {
      throw ParseError(line_no, "malformed fraction '" + value + "'");
    }
    if (!out.emplace(std::move(sigma), v).second) throw ParseError(line_no, "duplicate override '" + key + "'");
  }
  return out;
}

}  // namespace normlab

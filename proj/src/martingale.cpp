#include "normlab/martingale.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "normlab/errors.hpp"

namespace normlab {

FSMartingale::FSMartingale(unsigned base, std::size_t states, StateId start, std::vector<StateId> next,
                           std::vector<std::vector<Rational>> stakes, Rational initial_capital)
    : base_(base),
      states_(states),
      start_(start),
      next_(std::move(next)),
      stakes_(std::move(stakes)),
      capital_(std::move(initial_capital)) {
  if (base < 2) throw PreconditionError("martingale base must be >= 2");
  if (states == 0) throw PreconditionError("martingale needs at least one state");
  if (start >= states) throw PreconditionError("start state out of range");
  if (next_.size() != states * base) throw PreconditionError("transition table must cover every (state, digit)");
  for (StateId q : next_)
    if (q >= states) throw PreconditionError("transition target out of range");
  if (stakes_.size() != states) throw PreconditionError("need one stake vector per state");
  for (const auto& v : stakes_) {
    if (v.size() != base) throw PreconditionError("stake vector length must equal the base");
    for (const auto& s : v)
      if (s < 0) throw PreconditionError("stakes must be nonnegative");
  }
  if (capital_ <= 0) throw PreconditionError("initial capital must be positive");
}

FSMartingale FSMartingale::uniform(unsigned base) {
  return FSMartingale(base, 1, 0, std::vector<StateId>(base, 0),
                      {std::vector<Rational>(base, Rational(1, static_cast<unsigned long>(base)))});
}

FSMartingale FSMartingale::full_stake(unsigned base, const DigitString& preperiod, const DigitString& period) {
  if (period.empty()) throw PreconditionError("period must be nonempty");
  const std::size_t states = preperiod.size() + period.size();
  std::vector<StateId> next(states * base);
  std::vector<std::vector<Rational>> stakes(states, std::vector<Rational>(base, Rational(0)));
  for (std::size_t q = 0; q < states; ++q) {
    Digit expected = q < preperiod.size() ? preperiod[q] : period[q - preperiod.size()];
    if (expected >= base) throw PreconditionError("digit out of range");
    stakes[q][expected] = 1;
    StateId after = q + 1 < states ? static_cast<StateId>(q + 1) : static_cast<StateId>(preperiod.size());
    for (unsigned a = 0; a < base; ++a) next[q * base + a] = after;
  }
  return FSMartingale(base, states, 0, std::move(next), std::move(stakes));
}

FSMartingale FSMartingale::cycle(unsigned base, std::vector<std::vector<Rational>> stakes) {
  const std::size_t k = stakes.size();
  if (k == 0) throw PreconditionError("cycle needs at least one state");
  std::vector<StateId> next(k * base);
  for (std::size_t q = 0; q < k; ++q)
    for (unsigned a = 0; a < base; ++a) next[q * base + a] = static_cast<StateId>((q + 1) % k);
  return FSMartingale(base, k, 0, std::move(next), std::move(stakes));
}

std::string FairnessReport::describe() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << "state " << violations[i].state << " stakes sum to " << to_string(violations[i].stake_sum);
  }
  return out.str();
}

FairnessReport fairness_check(const FSMartingale& m) {
  FairnessReport report;
  for (StateId q = 0; q < m.state_count(); ++q) {
    Rational sum = 0;
    for (const auto& s : m.stakes(q)) sum += s;
    if (sum != 1) report.violations.push_back({q, sum});
  }
  return report;
}

Rational capital_of(const FSMartingale& m, std::span<const Digit> word) {
  Rational d = m.initial_capital();
  StateId q = m.start();
  for (Digit a : word) {
    if (a >= m.base()) throw PreconditionError("digit out of range");
    d *= m.stakes(q)[a] * m.base();
    q = m.next(q, a);
  }
  return d;
}

std::vector<Rational> capital(const FSMartingale& m, const DigitPrefix& prefix) {
  if (prefix.base() != m.base()) throw PreconditionError("prefix base differs from martingale base");
  if (prefix.size() > kExactCapitalLimit)
    throw PreconditionError("exact capital traces are limited to " + std::to_string(kExactCapitalLimit) +
                            " digits; use log2_capital");
  std::vector<Rational> out;
  out.reserve(prefix.size() + 1);
  Rational d = m.initial_capital();
  out.push_back(d);
  StateId q = m.start();
  for (Digit a : prefix.digits()) {
    d *= m.stakes(q)[a] * m.base();
    q = m.next(q, a);
    out.push_back(d);
  }
  return out;
}

namespace {

std::vector<double> log_factors(const FSMartingale& m) {
  std::vector<double> f(m.state_count() * m.base());
  for (StateId q = 0; q < m.state_count(); ++q)
    for (Digit a = 0; a < m.base(); ++a) f[q * m.base() + a] = log2_of(m.stakes(q)[a] * m.base());
  return f;
}

}  // namespace

std::vector<double> log2_capital(const FSMartingale& m, const DigitPrefix& prefix) {
  if (prefix.base() != m.base()) throw PreconditionError("prefix base differs from martingale base");
  const auto factors = log_factors(m);
  std::vector<double> out;
  out.reserve(prefix.size() + 1);
  double d = log2_of(m.initial_capital());
  out.push_back(d);
  StateId q = m.start();
  for (Digit a : prefix.digits()) {
    d += factors[q * m.base() + a];
    q = m.next(q, a);
    out.push_back(d);
  }
  return out;
}

bool SuccessProfile::consistent_with_normality() const {
  for (const auto& c : last_eps_crossing)
    if (c && *c > thresholds.settle_in) return false;
  return !(last_h_crossing && *last_h_crossing > thresholds.settle_in);
}

std::string SuccessProfile::csv() const {
  std::ostringstream out;
  out << "spec,n,log2_capital";
  for (const auto& e : thresholds.epsilons) out << ",cross_eps_" << to_string(e);
  out << ",cross_h\n";
  for (const auto& p : points) {
    out << spec << ',' << p.n << ',' << p.log2_capital;
    for (bool c : p.crosses_eps) out << ',' << (c ? 1 : 0);
    out << ',' << (p.crosses_h ? 1 : 0) << '\n';
  }
  return out.str();
}

SuccessProfile success_profile(const FSMartingale& m, const RealSpec& spec, std::size_t n_max,
                               const SuccessThresholds& thresholds) {
  if (n_max == 0) throw PreconditionError("n_max must be >= 1");
  DigitPrefix w = digits(spec, m.base(), n_max);
  const auto trace = log2_capital(m, w);
  std::vector<double> eps;
  for (const auto& e : thresholds.epsilons) eps.push_back(e.get_d());
  const std::size_t step = thresholds.grid_step ? thresholds.grid_step : std::max<std::size_t>(1, n_max / 100);

  SuccessProfile profile{spec.canonical(), thresholds, {}, std::vector<std::optional<std::size_t>>(eps.size()),
                         std::nullopt, trace.back() / static_cast<double>(n_max)};
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double lc = trace[n];
    const double h = thresholds.h == GrowthBound::sqrt_n ? std::sqrt(static_cast<double>(n))
                                                         : std::log2(static_cast<double>(n));
    std::vector<bool> crosses(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
      crosses[i] = lc >= eps[i] * static_cast<double>(n);
      if (crosses[i]) profile.last_eps_crossing[i] = n;
    }
    const bool ch = lc >= h;
    if (ch) profile.last_h_crossing = n;
    if (n % step == 0 || n == n_max) profile.points.push_back({n, lc, std::move(crosses), ch});
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

unsigned long parse_count(const std::string& s, std::size_t line, const char* what) {
  if (s.empty() || s.size() > 9 || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  return std::stoul(s);
}

}  // namespace

FSMartingale parse_martingale(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0, header_line = 0;
  std::optional<unsigned> base;
  std::size_t states = 0;
  StateId start = 0;
  Rational c0 = 1;
  std::vector<StateId> next;
  std::vector<bool> next_defined, stake_defined;
  std::vector<std::vector<Rational>> stakes;
  while (std::getline(in, raw)) {
    ++line_no;
    auto toks = tokenize(raw);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (!base) {
      header_line = line_no;
      std::optional<unsigned long> b, m, s;
      for (const auto& t : toks) {
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value in header, got '" + t + "'");
        std::string key = t.substr(0, eq), val = t.substr(eq + 1);
        if (key == "base") b = parse_count(val, line_no, "base");
        else if (key == "states") m = parse_count(val, line_no, "state count");
        else if (key == "start") s = parse_count(val, line_no, "start state");
        else if (key == "capital") {
          try {
            c0 = parse_rational(val);
          } catch (const ParseError& e) {
            throw ParseError(line_no, e.what());
          }
        } else throw ParseError(line_no, "unknown header key '" + key + "'");
      }
      if (!b || !m || !s) throw ParseError(line_no, "header needs base=, states= and start=");
      if (*b < 2 || *m == 0 || *s >= *m) throw ParseError(line_no, "inconsistent header");
      base = static_cast<unsigned>(*b);
      states = *m;
      start = static_cast<StateId>(*s);
      next.assign(states * *base, 0);
      next_defined.assign(states * *base, false);
      stake_defined.assign(states, false);
      stakes.assign(states, {});
      continue;
    }
    if (toks.size() == 3 && toks[1] == ":") {
      auto q = parse_count(toks[0], line_no, "state");
      if (q >= states) throw ParseError(line_no, "state out of range");
      if (stake_defined[q]) throw ParseError(line_no, "duplicate stake line for state " + toks[0]);
      std::vector<Rational> v;
      std::size_t pos = 0;
      const std::string& list = toks[2];
      while (true) {
        auto comma = list.find(',', pos);
        std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
          v.push_back(parse_rational(item));
        } catch (const ParseError&) {
          throw ParseError(line_no, "malformed fraction '" + item + "'");
        }
        if (v.back() < 0) throw ParseError(line_no, "negative stake");
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (v.size() != *base) throw ParseError(line_no, "stake line needs " + std::to_string(*base) + " entries");
      stakes[q] = std::move(v);
      stake_defined[q] = true;
      continue;
    }
    if (toks.size() != 4 || toks[2] != "->") throw ParseError(line_no, "expected '<q> <a> -> <q'>' or '<q> : stakes'");
    auto q = parse_count(toks[0], line_no, "state");
    auto a = parse_count(toks[1], line_no, "digit");
    auto q2 = parse_count(toks[3], line_no, "state");
    if (q >= states || q2 >= states) throw ParseError(line_no, "state out of range");
    if (a >= *base) throw ParseError(line_no, "digit out of range");
    std::size_t idx = q * *base + a;
    if (next_defined[idx]) throw ParseError(line_no, "duplicate transition");
    next_defined[idx] = true;
    next[idx] = static_cast<StateId>(q2);
  }
  if (!base) throw ParseError(line_no, "missing header line");
  for (std::size_t idx = 0; idx < next_defined.size(); ++idx)
    if (!next_defined[idx])
      throw ParseError(header_line, "transition undefined for (" + std::to_string(idx / *base) + "," +
                                        std::to_string(idx % *base) + ")");
  for (std::size_t q = 0; q < states; ++q)
    if (!stake_defined[q]) throw ParseError(header_line, "no stake line for state " + std::to_string(q));
  return FSMartingale(*base, states, start, std::move(next), std::move(stakes), c0);
}

std::string serialize_martingale(const FSMartingale& m) {
  std::ostringstream out;
  out << "base=" << m.base() << " states=" << m.state_count() << " start=" << m.start()
      << " capital=" << to_string(m.initial_capital()) << '\n';
  for (StateId q = 0; q < m.state_count(); ++q)
    for (Digit a = 0; a < m.base(); ++a) out << q << ' ' << a << " -> " << m.next(q, a) << '\n';
  for (StateId q = 0; q < m.state_count(); ++q) {
    out << q << " : ";
    for (Digit a = 0; a < m.base(); ++a) out << (a ? "," : "") << to_string(m.stakes(q)[a]);
    out << '\n';
  }
  return out.str();
}

}  // namespace normlab

#include "normlab/transducer.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <sstream>

#include "normlab/errors.hpp"

namespace normlab {

Transducer::Transducer(unsigned base, std::size_t states, StateId start, std::vector<StateId> next,
                       std::vector<DigitString> output)
    : base_(base), states_(states), start_(start), next_(std::move(next)), output_(std::move(output)) {
  if (base < 2) throw PreconditionError("transducer base must be >= 2");
  if (states == 0) throw PreconditionError("transducer needs at least one state");
  if (start >= states) throw PreconditionError("start state out of range");
  if (next_.size() != states * base || output_.size() != states * base)
    throw PreconditionError("transition tables must cover every (state, digit)");
  for (StateId q : next_)
    if (q >= states) throw PreconditionError("transition target out of range");
  for (const auto& o : output_) {
    for (Digit d : o)
      if (d >= base) throw PreconditionError("output digit out of range");
    max_output_ = std::max(max_output_, o.size());
  }
}

Transducer Transducer::identity(unsigned base) {
  std::vector<DigitString> out(base);
  for (unsigned a = 0; a < base; ++a) out[a] = {a};
  return Transducer(base, 1, 0, std::vector<StateId>(base, 0), std::move(out));
}

Transducer Transducer::doubling(unsigned base, Digit digit) {
  if (digit >= base) throw PreconditionError("doubled digit out of range");
  std::vector<DigitString> out(base);
  for (unsigned a = 0; a < base; ++a) out[a] = a == digit ? DigitString{a, a} : DigitString{a};
  return Transducer(base, 1, 0, std::vector<StateId>(base, 0), std::move(out));
}

Transducer Transducer::silent(unsigned base) {
  return Transducer(base, 1, 0, std::vector<StateId>(base, 0), std::vector<DigitString>(base));
}

DigitString run(const Transducer& d, std::span<const Digit> input) {
  DigitString out;
  StateId q = d.start();
  for (Digit a : input) {
    if (a >= d.base()) throw PreconditionError("input digit out of range");
    const auto& o = d.output(q, a);
    out.insert(out.end(), o.begin(), o.end());
    q = d.next(q, a);
  }
  return out;
}

std::optional<std::size_t> c_d(const Transducer& d, std::span<const Digit> sigma) {
  const std::size_t len = sigma.size();
  if (len == 0) return 0;
  // Node (q, m): in state q having produced exactly sigma[0..m).
  const std::size_t width = len + 1;
  std::vector<std::size_t> dist(d.state_count() * width, std::numeric_limits<std::size_t>::max());
  std::deque<std::pair<StateId, std::size_t>> queue;
  dist[d.start() * width] = 0;
  queue.emplace_back(d.start(), 0);
  while (!queue.empty()) {
    auto [q, m] = queue.front();
    queue.pop_front();
    const std::size_t here = dist[q * width + m];
    for (Digit a = 0; a < d.base(); ++a) {
      const auto& o = d.output(q, a);
      if (m + o.size() > len || !std::equal(o.begin(), o.end(), sigma.begin() + static_cast<std::ptrdiff_t>(m)))
        continue;
      const StateId q2 = d.next(q, a);
      const std::size_t m2 = m + o.size();
      auto& slot = dist[q2 * width + m2];
      if (slot != std::numeric_limits<std::size_t>::max()) continue;
      slot = here + 1;
      if (m2 == len) return slot;
      queue.emplace_back(q2, m2);
    }
  }
  return std::nullopt;
}

std::uint64_t candidates_up_to(unsigned base, std::size_t n) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0, level = 1;
  for (std::size_t len = 0; len <= n; ++len) {
    if (total > kMax - level) return kMax;
    total += level;
    if (len < n) {
      if (level > kMax / base) return kMax;
      level *= base;
    }
  }
  return total;
}

void check_budget(unsigned base, std::size_t n, const SearchBudget& budget) {
  std::uint64_t need = candidates_up_to(base, n);
  if (need > budget.max_candidates)
    throw ResourceError("exhaustive search over lengths 0.." + std::to_string(n) + " in base " + std::to_string(base) +
                        " needs " + std::to_string(need) + " candidates, budget is " +
                        std::to_string(budget.max_candidates));
}

std::optional<std::size_t> shortest_accepted_input(const Transducer& d, std::size_t max_length,
                                                   const std::function<bool(std::span<const Digit>)>& accept) {
  DigitString buffer;
  if (accept(buffer)) return 0;
  std::size_t limit = max_length + 1;  // depths >= limit are never evaluated
  struct Frame {
    StateId state;
    std::size_t out_len;
    Digit next_digit;
  };
  std::vector<Frame> stack{{d.start(), 0, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const std::size_t child_depth = stack.size();
    if (f.next_digit == d.base() || child_depth >= limit) {
      stack.pop_back();
      continue;
    }
    const Digit a = f.next_digit++;
    buffer.resize(f.out_len);
    const auto& o = d.output(f.state, a);
    buffer.insert(buffer.end(), o.begin(), o.end());
    if (accept(buffer)) {
      limit = child_depth;
      continue;
    }
    if (child_depth + 1 < limit) stack.push_back({d.next(f.state, a), buffer.size(), 0});
  }
  if (limit > max_length) return std::nullopt;
  return limit;
}

ComplexityEntry c_nd(const Transducer& d, const RealSpec& x, std::size_t n, const SearchBudget& budget) {
  if (n == 0) throw PreconditionError("c_nd needs n >= 1");
  check_budget(d.base(), n, budget);
  Neighborhood near(x, inverse_power(d.base(), n));
  const unsigned base = d.base();
  auto hit = shortest_accepted_input(d, n, [&](std::span<const Digit> out) {
    return near.contains(lattice_value(out, base));
  });
  std::size_t value = hit.value_or(n + 1);
  return {n, value, value == n + 1};
}

// ---------------------------------------------------------------------------
// Text format

std::string format_digit_run(std::span<const Digit> digits, unsigned base) {
  if (digits.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (base > 10) {
      if (i) s += ',';
      s += std::to_string(digits[i]);
    } else {
      s += static_cast<char>('0' + digits[i]);
    }
  }
  return s;
}

DigitString parse_digit_run(std::string_view text, unsigned base, std::size_t line) {
  DigitString out;
  if (text == "-") return out;
  if (text.empty()) throw ParseError(line, "empty digit string (use '-')");
  if (base > 10 || text.find(',') != std::string_view::npos) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      std::string_view tok = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
          tok.size() > 9)
        throw ParseError(line, "bad digit '" + std::string(tok) + "'");
      unsigned long v = std::stoul(std::string(tok));
      if (v >= base) throw ParseError(line, "digit " + std::string(tok) + " out of range for base " + std::to_string(base));
      out.push_back(static_cast<Digit>(v));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }
  for (char c : text) {
    if (c < '0' || c > '9' || static_cast<unsigned>(c - '0') >= base)
      throw ParseError(line, std::string("bad digit '") + c + "' for base " + std::to_string(base));
    out.push_back(static_cast<Digit>(c - '0'));
  }
  return out;
}

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(line)};
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

unsigned long parse_count(std::string_view s, std::size_t line, std::string_view what) {
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ParseError(line, "bad " + std::string(what) + " '" + std::string(s) + "'");
  return std::stoul(std::string(s));
}

}  // namespace

Transducer parse_transducer(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  std::optional<unsigned> base;
  std::size_t states = 0;
  StateId start = 0;
  std::vector<StateId> next;
  std::vector<DigitString> output;
  std::vector<bool> defined;
  std::size_t header_line = 0;
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
        else throw ParseError(line_no, "unknown header key '" + key + "'");
      }
      if (!b || !m || !s) throw ParseError(line_no, "header needs base=, states= and start=");
      if (*b < 2) throw ParseError(line_no, "base must be >= 2");
      if (*m == 0) throw ParseError(line_no, "need at least one state");
      if (*s >= *m) throw ParseError(line_no, "start state out of range");
      base = static_cast<unsigned>(*b);
      states = *m;
      start = static_cast<StateId>(*s);
      next.assign(states * *base, 0);
      output.assign(states * *base, {});
      defined.assign(states * *base, false);
      continue;
    }
    if (toks.size() != 6 || toks[2] != "->" || toks[4] != "/")
      throw ParseError(line_no, "expected '<q> <a> -> <q'> / <output>'");
    auto q = parse_count(toks[0], line_no, "state");
    auto a = parse_count(toks[1], line_no, "digit");
    auto q2 = parse_count(toks[3], line_no, "state");
    if (q >= states || q2 >= states) throw ParseError(line_no, "state out of range");
    if (a >= *base) throw ParseError(line_no, "digit " + toks[1] + " out of range for base " + std::to_string(*base));
    std::size_t idx = q * *base + a;
    if (defined[idx]) throw ParseError(line_no, "duplicate transition for (" + toks[0] + "," + toks[1] + ")");
    defined[idx] = true;
    next[idx] = static_cast<StateId>(q2);
    output[idx] = parse_digit_run(toks[5], *base, line_no);
  }
  if (!base) throw ParseError(line_no, "missing header line");
  for (std::size_t idx = 0; idx < defined.size(); ++idx)
    if (!defined[idx])
      throw ParseError(header_line, "transition undefined for (" + std::to_string(idx / *base) + "," +
                                        std::to_string(idx % *base) + ")");
  return Transducer(*base, states, start, std::move(next), std::move(output));
}

std::string serialize_transducer(const Transducer& d) {
  std::ostringstream out;
  out << "base=" << d.base() << " states=" << d.state_count() << " start=" << d.start() << '\n';
  for (StateId q = 0; q < d.state_count(); ++q)
    for (Digit a = 0; a < d.base(); ++a)
      out << q << ' ' << a << " -> " << d.next(q, a) << " / " << format_digit_run(d.output(q, a), d.base()) << '\n';
  return out.str();
}

}  // namespace normlab

#include "normlab/experiments.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "normlab/blockstats.hpp"
#include "normlab/errors.hpp"

namespace normlab {

bool ExperimentResult::passed() const { return failures() == 0; }

std::size_t ExperimentResult::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

std::string ExperimentResult::text() const {
  std::ostringstream out;
  out << "experiment " << experiment << '\n';
  for (const auto& [k, v] : parameters) out << "  " << k << " = " << v << '\n';
  for (const auto& c : checks)
    out << (c.passed ? "  ok   " : "  FAIL ") << c.name << ": expected " << c.expected << ", observed " << c.observed
        << '\n';
  out << (passed() ? "PASS" : "FAIL") << " (" << checks.size() - failures() << "/" << checks.size() << " checks)\n";
  return out.str();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string str(std::size_t v) { return std::to_string(v); }

}  // namespace

std::string ExperimentResult::csv() const {
  std::ostringstream out;
  out << "experiment,check,expected,observed,pass\n";
  for (const auto& c : checks)
    out << csv_field(experiment) << ',' << csv_field(c.name) << ',' << csv_field(c.expected) << ','
        << csv_field(c.observed) << ',' << (c.passed ? 1 : 0) << '\n';
  return out.str();
}

ExperimentResult run_separation_example(unsigned base, std::size_t n_max, const SearchBudget& budget) {
  if (base < 3) throw PreconditionError("the separation example needs base >= 3");
  if (n_max < 4) throw PreconditionError("the separation example needs n_max >= 4");
  ExperimentResult r;
  r.experiment = "separation";
  const RealSpec x = RealSpec::rational(base - 2, base - 1);
  const RepSystem f = RepSystem::identity(base);
  const Transducer d = Transducer::doubling(base, static_cast<Digit>(base - 2));
  r.parameters = {{"base", std::to_string(base)}, {"n_max", str(n_max)}, {"x", x.canonical()},
                  {"f", f.name()}, {"D", "doubling(" + std::to_string(base - 2) + ")"}};
  for (std::size_t n = 4; n <= n_max; ++n) {
    auto weak = c_f_n(x, f, n, budget);
    r.checks.push_back({"C^f_" + str(n), str(n), str(weak.value), weak.value == n});
    auto strong = c_f_nd(x, f, d, n, budget);
    const std::size_t half = (n + 1) / 2;
    r.checks.push_back({"C^f_" + str(n) + ",D", "{" + str(half) + "," + str(half + 1) + "}", str(strong.value),
                        strong.value == half || strong.value == half + 1});
  }
  return r;
}

ExperimentResult run_interleave_experiment(std::size_t n, const InterleaveThresholds& thresholds) {
  if (n < 10'000) throw PreconditionError("the interleave experiment needs n >= 10^4");
  const Rational z_max = thresholds.z_max.value_or(n < 100'000 ? Rational(1, 20) : Rational(1, 50));
  ExperimentResult r;
  r.experiment = "interleave";
  const RealSpec z = RealSpec::champernowne(2);
  auto [x, y] = interleave_split(z);
  r.parameters = {{"n", str(n)}, {"z", z.canonical()}, {"xy_min", to_string(thresholds.xy_min)},
                  {"z_max", to_string(z_max)}};

  const DigitPrefix dz = digits(z, 2, n), dx = digits(x, 2, n), dy = digits(y, 2, n);
  for (const auto& [name, d] : {std::pair{"x", &dx}, std::pair{"y", &dy}}) {
    Rational disc = discrepancy(count_blocks(*d, 1));
    r.checks.push_back({std::string(name) + " k=1 discrepancy", ">= " + to_string(thresholds.xy_min),
                        to_string(disc), disc >= thresholds.xy_min});
  }
  for (unsigned k = 1; k <= 2; ++k) {
    Rational disc = discrepancy(count_blocks(dz, k));
    r.checks.push_back({"z k=" + std::to_string(k) + " discrepancy", "< " + to_string(z_max), to_string(disc),
                        disc < z_max});
  }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (dx[i] + dy[i] != dz[i]) ++mismatches;
  r.checks.push_back({"positionwise x+y=z", "0 mismatches", str(mismatches) + " mismatches", mismatches == 0});
  return r;
}

namespace {

bool advance(DigitString& s, unsigned base) {
  for (std::size_t i = s.size(); i-- > 0;) {
    if (++s[i] < base) return true;
    s[i] = 0;
  }
  return false;
}

std::optional<std::size_t> shift_exponent(const Rational& q, unsigned base) {
  for (std::size_t j = 1; j <= 64; ++j)
    if (q == inverse_power(base, j)) return j;
  return std::nullopt;
}

}  // namespace

ExperimentResult run_closure_experiments(const RealSpec& x, const RepSystem& f, const Rational& q, std::size_t n,
                                         const SearchBudget& budget) {
  if (n == 0) throw PreconditionError("closure experiments need n >= 1");
  if (q <= 0) throw PreconditionError("scaling factor must be positive");
  const unsigned base = f.base();
  ExperimentResult r;
  r.experiment = "closure";
  const RepSystem g = complement_system(f);
  const RealSpec cx = RealSpec::complement(x);
  r.parameters = {{"x", x.canonical()}, {"f", f.name()}, {"q", to_string(q)}, {"n", str(n)}};

  // Distance transport on every sigma of length <= 3, against x itself when
  // it is rational and against its n-digit truncation otherwise.
  const auto exact = x.exact_value();
  const Rational xv = exact ? *exact : digits(x, base, n).value();
  std::size_t sampled = 0, bad_complement = 0, bad_scale = 0;
  for (std::size_t len = 0; len <= 3; ++len) {
    DigitString sigma(len, 0);
    do {
      ++sampled;
      const Rational fs = f.eval(sigma);
      if (abs(fs - xv) != abs(g.eval(sigma) - (1 - xv))) ++bad_complement;
      if (abs(q * fs - q * xv) != q * abs(fs - xv)) ++bad_scale;
    } while (advance(sigma, base));
  }
  const std::string against = exact ? "x" : "trunc_" + str(n) + "(x)";
  r.checks.push_back({"|f(s)-" + against + "| = |g(s)-(1-" + against + ")| on " + str(sampled) + " sigma", "0 violations",
                      str(bad_complement) + " violations", bad_complement == 0});
  r.checks.push_back({"|qf(s)-q" + against + "| = q|f(s)-" + against + "| on " + str(sampled) + " sigma",
                      "0 violations", str(bad_scale) + " violations", bad_scale == 0});

  for (std::size_t m = 1; m <= n; ++m) {
    auto lhs = c_f_n(x, f, m, budget);
    auto rhs = c_f_n(cx, g, m, budget);
    r.checks.push_back({"C^f_" + str(m) + "(x) = C^(1-f)_" + str(m) + "(1-x)", str(lhs.value), str(rhs.value),
                        lhs.value == rhs.value});
  }

  if (auto j = shift_exponent(q, base)) {
    r.parameters.emplace_back("shift", str(*j));
    const RealSpec qx = RealSpec::scale(q, x);
    const RepSystem qf = RepSystem::affine(q, Rational(0), f);
    for (std::size_t m = 1; m + *j <= n; ++m) {
      auto base_value = c_f_n(x, f, m, budget);
      auto shifted = c_f_n(qx, qf, m + *j, budget);
      Check c;
      c.name = "C^(qf)_" + str(m + *j) + "(qx) vs C^f_" + str(m) + "(x)";
      c.observed = str(shifted.value);
      if (base_value.value <= m) {
        c.expected = str(base_value.value);
        c.passed = shifted.value == base_value.value;
      } else {
        c.expected = ">= " + str(m + 1);
        c.passed = shifted.value >= m + 1;
      }
      r.checks.push_back(std::move(c));
    }
  } else {
    r.parameters.emplace_back("shift", "none (q is not a negative power of the base)");
  }
  return r;
}

std::string ComposeInstance::describe() const {
  std::ostringstream out;
  out << "b=" << f.base() << " f=" << f.name() << " x=" << x.canonical() << " n=" << n << " D=[";
  for (StateId q = 0; q < d.state_count(); ++q)
    for (Digit a = 0; a < d.base(); ++a)
      out << (q || a ? " " : "") << q << a << ">" << d.next(q, a) << "/" << format_digit_run(d.output(q, a), d.base());
  out << "]";
  return out.str();
}

Transducer random_transducer(std::mt19937_64& rng, unsigned base, std::size_t max_states, std::size_t max_output) {
  const std::size_t states = std::uniform_int_distribution<std::size_t>(1, max_states)(rng);
  std::uniform_int_distribution<std::size_t> state(0, states - 1), length(0, max_output);
  std::uniform_int_distribution<Digit> digit(0, base - 1);
  std::vector<StateId> next(states * base);
  std::vector<DigitString> output(states * base);
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = static_cast<StateId>(state(rng));
    output[i].resize(length(rng));
    for (auto& d : output[i]) d = digit(rng);
  }
  return Transducer(base, states, 0, std::move(next), std::move(output));
}

ComposeInstance random_compose_instance(std::mt19937_64& rng) {
  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  const unsigned base = pick(2) ? 3 : 2;

  static const Rational factors[] = {Rational(1), Rational(-1), Rational(1, 2), Rational(2), Rational(1, 3)};
  static const Rational shifts[] = {Rational(0), Rational(1), Rational(1, 2), Rational(1, 3), Rational(-1, 4)};
  RepSystem f = RepSystem::identity(base);
  if (pick(2)) f = RepSystem::affine(factors[pick(5)], shifts[pick(5)], f);

  Transducer d = pick(8) == 0 ? Transducer::doubling(base, static_cast<Digit>(pick(base)))
                              : random_transducer(rng, base, 4, 2);

  RealSpec x = RealSpec::champernowne(base);
  switch (pick(4)) {
    case 0: {
      const std::size_t den = 2 + pick(29);
      x = RealSpec::rational(Integer(static_cast<unsigned long>(pick(den))), Integer(static_cast<unsigned long>(den)));
      break;
    }
    case 1:
      x = RealSpec::square_root(Integer(static_cast<unsigned long>(std::array{2, 3, 5, 7}[pick(4)])));
      break;
    case 2:
      x = RealSpec::pseudorandom(rng(), base);
      break;
    default:
      break;
  }
  const std::size_t n = 1 + pick(8);
  return {f, d, x, n};
}

ExperimentResult run_compose_identity_suite(std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw PreconditionError("need at least one trial");
  ExperimentResult r;
  r.experiment = "compose";
  r.parameters = {{"trials", str(trials)}, {"seed", std::to_string(seed)}};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    ComposeInstance inst = random_compose_instance(rng);
    if (t == 0) {
      // one doubling instance regardless of the draw
      inst.d = Transducer::doubling(inst.f.base(), static_cast<Digit>(inst.f.base() - 1));
    }
    const std::string tag = "trial " + str(t) + " (" + inst.describe() + ")";
    auto via_compose = c_f_n(inst.x, compose(inst.f, inst.d), inst.n);
    auto direct = c_f_nd(inst.x, inst.f, inst.d, inst.n);
    r.checks.push_back({tag + " compose", str(direct.value), str(via_compose.value), direct.value == via_compose.value});
    auto collapsed = c_f_nd(inst.x, inst.f, Transducer::identity(inst.f.base()), inst.n);
    auto plain = c_f_n(inst.x, inst.f, inst.n);
    r.checks.push_back({tag + " identity", str(plain.value), str(collapsed.value), plain.value == collapsed.value});
  }
  return r;
}

}  // namespace normlab

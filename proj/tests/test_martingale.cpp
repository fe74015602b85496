#include <doctest.h>

#include <cmath>
#include <random>

#include "normlab/errors.hpp"
#include "normlab/martingale.hpp"
#include "oracles.hpp"

using namespace normlab;

TEST_SUITE("martingale") {
  TEST_CASE("uniform capital is constant") {
    auto m = FSMartingale::uniform(7);
    auto trace = capital(m, digits(RealSpec::champernowne(7), 7, 300));
    for (const auto& c : trace) CHECK(c == 1);
    auto lg = log2_capital(m, digits(RealSpec::champernowne(7), 7, 5000));
    for (double v : lg) CHECK(std::abs(v) < 1e-9);
  }

  TEST_CASE("full stake on a digit") {
    std::vector<Rational> stake(10, Rational(0));
    stake[3] = 1;
    FSMartingale m(10, 1, 0, std::vector<StateId>(10, 0), {stake});
    auto trace = capital(m, DigitPrefix(10, {3, 3, 3}));
    CHECK(trace == std::vector<Rational>{1, 10, 100, 1000});
    // losing digit: zero forever
    auto lost = capital(m, DigitPrefix(10, {3, 4, 3, 3}));
    CHECK(lost == std::vector<Rational>{1, 10, 0, 0, 0});

    auto cyc = FSMartingale::full_stake(10, {}, {3, 3});
    CHECK(cyc.state_count() == 2);
    auto t = capital(cyc, digits(RealSpec::rational(1, 3), 10, 40));
    for (std::size_t n = 0; n <= 40; ++n) CHECK(t[n] == Rational(ipow(10, n)));

    for (unsigned b : {2u, 3u, 5u}) {
      auto x = RealSpec::rational(1, 7);
      auto d = digits(x, b, 60);
      // 1/7 is purely periodic in these bases with period <= 6
      std::size_t period = 1;
      while (!std::equal(d.digits().begin() + period, d.digits().end(), d.digits().begin())) ++period;
      auto m2 = FSMartingale::full_stake(b, {}, DigitString(d.digits().begin(), d.digits().begin() + period));
      auto tr = capital(m2, d.prefix(50));
      for (std::size_t n = 0; n <= 50; ++n) CHECK(tr[n] == Rational(ipow(b, n)));
    }
  }

  TEST_CASE("fairness") {
    CHECK(fairness_check(FSMartingale::uniform(3)).ok());
    FSMartingale bad(2, 1, 0, {0, 0}, {{Rational(1, 2), Rational(1, 3)}});
    auto report = fairness_check(bad);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].state == 0);
    CHECK(report.violations[0].stake_sum == Rational(5, 6));
    CHECK(report.describe().find("state 0") != std::string::npos);
    CHECK_THROWS_AS(FSMartingale(2, 1, 0, {0, 0}, {{Rational(-1, 2), Rational(3, 2)}}), PreconditionError);
  }

  TEST_CASE("averaging identity on random machines") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
      unsigned b = 2 + rng() % 3;
      auto m = oracle::random_martingale(rng, b, 4);
      REQUIRE(fairness_check(m).ok());
      oracle::for_each_word(b, b == 2 ? 6 : 4, [&](const DigitString& w) {
        Rational sum = 0;
        for (Digit a = 0; a < b; ++a) {
          DigitString wa = w;
          wa.push_back(a);
          sum += capital_of(m, wa);
        }
        CHECK(capital_of(m, w) * b == sum);
        CHECK(capital_of(m, w) == oracle::capital(m, w));
      });
    }
  }

  TEST_CASE("exact and log traces agree") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
      unsigned b = 2 + rng() % 4;
      auto m = oracle::random_martingale(rng, b, 3);
      auto w = digits(RealSpec::pseudorandom(rng(), b), b, 1000);
      auto exact = capital(m, w);
      auto lg = log2_capital(m, w);
      for (std::size_t i = 0; i <= 1000; ++i) {
        if (exact[i] == 0) {
          CHECK(std::isinf(lg[i]));
          continue;
        }
        double e = log2_of(exact[i]);
        CHECK(std::abs(e - lg[i]) <= 1e-6 * std::max(1.0, std::abs(e)));
      }
    }
    CHECK_THROWS_AS(capital(FSMartingale::uniform(2), digits(RealSpec::champernowne(2), 2, 1001)), PreconditionError);
  }

  TEST_CASE("success profiles") {
    auto flat = success_profile(FSMartingale::uniform(2), RealSpec::champernowne(2), 10000);
    CHECK(flat.consistent_with_normality());
    for (const auto& p : flat.points) CHECK(p.log2_capital == doctest::Approx(0.0));

    SuccessThresholds t;
    t.epsilons = {Rational(1, 2), Rational(9, 10)};
    auto win = success_profile(FSMartingale::full_stake(2, {}, {0, 1}), RealSpec::rational(1, 3), 2000, t);
    CHECK_FALSE(win.consistent_with_normality());
    CHECK(win.last_eps_crossing[0] == 2000);
    CHECK(win.last_eps_crossing[1] == 2000);
    CHECK(win.final_slope == doctest::Approx(1.0));

    // cycle machines with up to 4 states do not succeed on Champernowne(2)
    const std::vector<std::vector<Rational>> rows = {{Rational(1, 2), Rational(1, 2)},
                                                     {Rational(2, 5), Rational(3, 5)},
                                                     {Rational(3, 5), Rational(2, 5)},
                                                     {Rational(1, 4), Rational(3, 4)},
                                                     {Rational(3, 4), Rational(1, 4)}};
    SuccessThresholds s;
    s.settle_in = 1000;
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<std::vector<Rational>> stakes(1 + trial % 4);
      for (auto& r : stakes) r = rows[rng() % rows.size()];
      auto p = success_profile(FSMartingale::cycle(2, stakes), RealSpec::champernowne(2), 100000, s);
      CHECK(p.consistent_with_normality());
    }
  }

  TEST_CASE("text format") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 20; ++i) {
      auto m = oracle::random_martingale(rng, 2 + rng() % 3, 3);
      CHECK(parse_martingale(serialize_martingale(m)) == m);
    }
    auto m = parse_martingale("base=2 states=1 start=0 capital=3/2\n0 0 -> 0\n0 1 -> 0\n0 : 1/4,3/4\n");
    CHECK(m.initial_capital() == Rational(3, 2));
    CHECK(m.stakes(0)[1] == Rational(3, 4));
    CHECK_THROWS_AS(parse_martingale("base=2 states=1 start=0\n0 0 -> 0\n0 1 -> 0\n0 : 1/4,x\n"), ParseError);
    CHECK_THROWS_AS(parse_martingale("base=2 states=1 start=0\n0 0 -> 0\n0 : 1/2,1/2\n"), ParseError);
  }
}

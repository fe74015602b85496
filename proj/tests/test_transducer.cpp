#include <doctest.h>

#include <random>

#include "normlab/errors.hpp"
#include "normlab/experiments.hpp"
#include "normlab/transducer.hpp"
#include "oracles.hpp"

using namespace normlab;

TEST_SUITE("transducer") {
  TEST_CASE("runs") {
    CHECK(run(Transducer::identity(3), DigitString{2, 0, 1}) == DigitString{2, 0, 1});
    CHECK(run(Transducer::doubling(3, 1), DigitString{1, 1}) == DigitString{1, 1, 1, 1});
    CHECK(run(Transducer::doubling(3, 1), DigitString{0, 1, 2}) == DigitString{0, 1, 1, 2});
    CHECK(run(Transducer::silent(4), DigitString{3, 2, 1}).empty());
    CHECK(run(Transducer::identity(2), DigitString{}).empty());
  }

  TEST_CASE("c_d") {
    CHECK(c_d(Transducer::identity(3), DigitString{0, 1, 2}) == 3);
    CHECK(c_d(Transducer::doubling(3, 1), DigitString{1, 1, 1, 1}) == 2);
    CHECK_FALSE(c_d(Transducer::doubling(3, 1), DigitString{1}).has_value());
    CHECK(c_d(Transducer::silent(2), DigitString{}) == 0);
    CHECK_FALSE(c_d(Transducer::silent(2), DigitString{0}).has_value());
  }

  TEST_CASE("bfs against brute force up to length 8") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      unsigned b = 2 + rng() % 2;
      Transducer d = random_transducer(rng, b, 4, 2);
      // every output of a short input, plus a few arbitrary strings
      for (int j = 0; j < 8; ++j) {
        DigitString p(rng() % 6);
        for (auto& x : p) x = static_cast<Digit>(rng() % b);
        DigitString sigma = run(d, p);
        auto bfs = c_d(d, sigma);
        REQUIRE(bfs.has_value());
        CHECK(*bfs <= p.size());
        CHECK(bfs == oracle::c_d(d, sigma, 8));
        DigitString any(rng() % 5);
        for (auto& x : any) x = static_cast<Digit>(rng() % b);
        auto brute = oracle::c_d(d, any, 8);
        auto got = c_d(d, any);
        if (brute) CHECK(got == brute);
        else if (got) CHECK(*got > 8);
      }
    }
  }

  TEST_CASE("c_nd") {
    auto half = RealSpec::rational(1, 2);
    CHECK(c_nd(Transducer::doubling(3, 1), half, 10).value == 5);
    auto cap = c_nd(Transducer::silent(3), half, 6);
    CHECK(cap.value == 7);
    CHECK(cap.cap_hit);
    for (std::size_t n = 1; n <= 8; ++n) {
      CHECK(c_nd(Transducer::identity(2), RealSpec::champernowne(2), n).value <= n);
      CHECK(c_nd(Transducer::identity(3), RealSpec::square_root(2), n).value <= n);
    }
    CHECK_THROWS_AS(c_nd(Transducer::identity(10), half, 9, {1000}), ResourceError);
  }

  TEST_CASE("monotone in n on random machines") {
    // not a theorem; this records the behaviour on a fixed sample
    std::mt19937_64 rng(3);
    std::size_t violations = 0;
    for (int trial = 0; trial < 30; ++trial) {
      Transducer d = random_transducer(rng, 2, 3, 2);
      auto x = RealSpec::rational(1 + rng() % 6, 7);
      std::size_t prev = 0;
      for (std::size_t n = 1; n <= 9; ++n) {
        std::size_t v = c_nd(d, x, n).value;
        if (v < prev) ++violations;
        prev = v;
      }
    }
    MESSAGE("monotonicity counterexamples: " << violations);
    CHECK(violations == 0);
  }

  TEST_CASE("text format") {
    auto id = parse_transducer("base=3 states=1 start=0\n0 0 -> 0 / 0\n0 1 -> 0 / 1\n0 2 -> 0 / 2\n");
    CHECK(id == Transducer::identity(3));
    auto dbl = parse_transducer("# doubling\nbase=3 states=1 start=0\n0 0 -> 0 / 0\n0 1 -> 0 / 11\n0 2 -> 0 / 2\n");
    CHECK(dbl == Transducer::doubling(3, 1));
    CHECK(parse_transducer(serialize_transducer(Transducer::silent(2))) == Transducer::silent(2));

    std::mt19937_64 rng(21);
    for (int i = 0; i < 50; ++i) {
      Transducer d = random_transducer(rng, 2 + rng() % 11, 4, 3);
      CHECK(parse_transducer(serialize_transducer(d)) == d);
    }
    try {
      parse_transducer("base=3 states=1 start=0\n0 0 -> 0 / 0\n0 1 -> 0 / 1\n");
      FAIL("missing transition accepted");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).find("(0,2)") != std::string::npos);
    }
    try {
      parse_transducer("base=2 states=1 start=0\n0 0 -> 0 / 0\n0 1 -> 0 / 12\n");
      FAIL("bad digit accepted");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

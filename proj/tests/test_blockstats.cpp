#include <doctest.h>

#include <random>

#include "normlab/blockstats.hpp"
#include "normlab/errors.hpp"
#include "oracles.hpp"

using namespace normlab;

TEST_SUITE("blockstats") {
  TEST_CASE("small counts") {
    auto c = count_blocks(DigitPrefix(10, {3, 3, 3, 3}), 1);
    CHECK(c.count(DigitString{3}) == 4);
    for (Digit d = 0; d < 10; ++d)
      if (d != 3) CHECK(c.count(DigitString{d}) == 0);
    CHECK(discrepancy(c) == Rational(9, 10));

    auto c2 = count_blocks(DigitPrefix(2, {1, 0, 1, 0}), 2);
    CHECK(c2.count(DigitString{1, 0}) == 2);
    CHECK(c2.count(DigitString{0, 1}) == 1);
    CHECK(c2.count(DigitString{0, 0}) == 0);
    CHECK(c2.count(DigitString{1, 1}) == 0);
    CHECK(c2.windows() == 3);

    CHECK(discrepancy(count_blocks(DigitPrefix(2, {0, 1, 1, 0}), 1)) == 0);
    CHECK_THROWS_AS(count_blocks(DigitPrefix(2, {0, 1}), 3), PreconditionError);
  }

  TEST_CASE("rolling index matches naive windows") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      unsigned b = 2 + rng() % 4;
      unsigned k = 1 + rng() % 4;
      DigitString d(k + rng() % 200);
      for (auto& x : d) x = static_cast<Digit>(rng() % b);
      auto counts = count_blocks(DigitPrefix(b, d), k);
      auto naive = oracle::naive_blocks(d, k);
      std::uint64_t total = 0;
      for (std::uint64_t c : counts.counts) total += c;
      CHECK(total == d.size() - k + 1);
      for (const auto& [block, c] : naive) CHECK(counts.count(block) == c);

      // marginalizing k+1 onto k loses at most the last window
      if (d.size() > k) {
        auto longer = count_blocks(DigitPrefix(b, d), k + 1);
        std::map<DigitString, std::uint64_t> marg;
        for (const auto& [block, c] : oracle::naive_blocks(d, k + 1))
          marg[DigitString(block.begin(), block.end() - 1)] += c;
        for (const auto& [block, c] : naive) {
          CHECK(marg[block] <= c);
          CHECK(c - marg[block] <= 1);
        }
        (void)longer;
      }
    }
  }

  TEST_CASE("discrepancy formula") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
      unsigned b = 2 + rng() % 3, k = 1 + rng() % 3;
      DigitString d(50 + rng() % 100);
      for (auto& x : d) x = static_cast<Digit>(rng() % b);
      auto naive = oracle::naive_blocks(d, k);
      std::uint64_t blocks = 1;
      for (unsigned i = 0; i < k; ++i) blocks *= b;
      const Rational windows(static_cast<unsigned long>(d.size() - k + 1));
      Rational worst = 0;
      // every block, including ones that never occur
      oracle::for_each_word(b, k, [&](const DigitString& w) {
        if (w.size() != k) return;
        auto it = naive.find(w);
        Rational freq = Rational(static_cast<unsigned long>(it == naive.end() ? 0 : it->second)) / windows;
        worst = std::max(worst, Rational(abs(freq - Rational(1, static_cast<unsigned long>(blocks)))));
      });
      CHECK(discrepancy(count_blocks(DigitPrefix(b, d), k)) == worst);
    }
  }

  TEST_CASE("champernowne 10 at 10^6") {
    auto report = normality_profile(RealSpec::champernowne(10), 10, 1, {10'000, 100'000, 1'000'000});
    auto counts = count_blocks(digits(RealSpec::champernowne(10), 10, 1'000'000), 1);
    for (Digit d = 0; d < 10; ++d) CHECK(counts.count(DigitString{d}) == oracle::frozen::champernowne10_counts[d]);
    CHECK(to_string(report.at(1, 10'000)) == oracle::frozen::champernowne10_k1[0]);
    CHECK(to_string(report.at(1, 100'000)) == oracle::frozen::champernowne10_k1[1]);
    CHECK(to_string(report.at(1, 1'000'000)) == oracle::frozen::champernowne10_k1[2]);
    CHECK(report.trends[0] == Trend::other);
    CHECK(report.csv().rfind("spec,base,k,n,discrepancy_num,discrepancy_den\n", 0) == 0);
    CHECK(report.csv().find("champernowne:10,10,1,1000000,7981,100000") != std::string::npos);
  }

  TEST_CASE("rational 1/3 is pinned") {
    auto report = normality_profile(RealSpec::rational(1, 3), 10, 2, {10, 1000, 100000});
    for (std::size_t n : {10u, 1000u, 100000u}) CHECK(report.at(1, n) == Rational(9, 10));
    CHECK(report.trends[0] == Trend::constant);
    // a period-2 binary stream is caught at k = 2
    auto half = normality_profile(RealSpec::rational(1, 3), 2, 2, {1000, 2000});
    CHECK(half.at(1, 1000) == 0);
    CHECK(half.at(2, 1000) > Rational(1, 5));
  }

  TEST_CASE("champernowne 2 and pseudorandom") {
    auto z = normality_profile(RealSpec::champernowne(2), 2, 2, {10'000, 100'000});
    CHECK(to_string(z.at(1, 10'000)) == oracle::frozen::champernowne2_k1_1e4);
    CHECK(to_string(z.at(2, 10'000)) == oracle::frozen::champernowne2_k2_1e4);
    CHECK(to_string(z.at(1, 100'000)) == oracle::frozen::champernowne2_k1_1e5);
    CHECK(to_string(z.at(2, 100'000)) == oracle::frozen::champernowne2_k2_1e5);

    auto p = normality_profile(RealSpec::pseudorandom(42, 2), 2, 3, {100'000});
    for (unsigned k = 1; k <= 3; ++k) {
      CHECK(to_string(p.at(k, 100'000)) == oracle::frozen::prng42_disc[k - 1]);
      CHECK(p.at(k, 100'000) < Rational(1, 100));
    }
  }

  TEST_CASE("table bound") {
    CHECK_THROWS_AS(normality_profile(RealSpec::champernowne(10), 10, 8, {1000}), ResourceError);
  }
}

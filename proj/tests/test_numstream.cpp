#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "normlab/errors.hpp"
#include "normlab/numstream.hpp"
#include "oracles.hpp"

using namespace normlab;

namespace {

DigitString ds(std::initializer_list<Digit> d) { return DigitString(d); }

DigitString got(const RealSpec& s, unsigned b, std::size_t n) {
  auto p = digits(s, b, n);
  return DigitString(p.digits().begin(), p.digits().end());
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("normlab-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("numstream") {
  TEST_CASE("rational digits by long division") {
    CHECK(got(RealSpec::rational(1, 3), 10, 4) == ds({3, 3, 3, 3}));
    CHECK(got(RealSpec::rational(1, 2), 3, 5) == ds({1, 1, 1, 1, 1}));
    CHECK(got(RealSpec::rational(0, 1), 7, 3) == ds({0, 0, 0}));
    // terminating expansions keep trailing zeros
    CHECK(got(RealSpec::rational(1, 2), 2, 4) == ds({1, 0, 0, 0}));
    CHECK(got(RealSpec::rational(1, 4), 10, 4) == ds({2, 5, 0, 0}));
    for (std::uint64_t q = 2; q < 40; ++q)
      for (std::uint64_t p = 0; p < q; p += 3)
        for (unsigned b : {2u, 3u, 10u, 16u})
          CHECK(got(RealSpec::rational(p, q), b, 30) == oracle::long_division(p, q, b, 30));
  }

  TEST_CASE("champernowne by direct indexing") {
    CHECK(got(RealSpec::champernowne(10), 10, 16) == ds({1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1, 1, 1, 2, 1}));
    for (unsigned b : {2u, 3u, 10u, 12u}) CHECK(got(RealSpec::champernowne(b), b, 5000) == oracle::champernowne(b, 5000));
    auto ref = oracle::champernowne(10, 200000);
    for (std::uint64_t pos : {1ull, 9ull, 10ull, 189ull, 190ull, 2889ull, 2890ull, 38889ull, 38890ull, 199999ull})
      CHECK(champernowne_digit_at(10, pos) == ref[pos - 1]);
  }

  TEST_CASE("square roots") {
    for (unsigned long n : {2ul, 3ul, 5ul, 10ul, 99ul})
      for (unsigned b : {2u, 10u, 7u}) CHECK(got(RealSpec::square_root(n), b, 200) == oracle::sqrt_digits(n, b, 200));
    CHECK(got(RealSpec::square_root(2), 10, 10) == ds({4, 1, 4, 2, 1, 3, 5, 6, 2, 3}));
    CHECK_THROWS_AS(RealSpec::square_root(16), PreconditionError);
  }

  TEST_CASE("base conversion through enclosures") {
    // Champernowne(2) read in base 10 agrees with the exact value of its bit prefix
    auto bits = got(RealSpec::champernowne(2), 2, 400);
    Rational lo = oracle::value(bits, 2);
    auto dec = got(RealSpec::champernowne(2), 10, 60);
    CHECK(dec == got(RealSpec::rational(lo), 10, 60));
    CHECK(got(RealSpec::champernowne(10), 2, 64) == got(RealSpec::rational(oracle::value(oracle::champernowne(10, 80), 10)), 2, 64));
  }

  TEST_CASE("pseudorandom streams are pure functions of seed and index") {
    auto a = got(RealSpec::pseudorandom(42, 10), 10, 12);
    CHECK(a == DigitString(std::begin(oracle::frozen::prng42_base10), std::end(oracle::frozen::prng42_base10)));
    CHECK(got(RealSpec::pseudorandom(42, 10), 10, 5000) == got(RealSpec::pseudorandom(42, 10), 10, 5000));
    CHECK(got(RealSpec::pseudorandom(7, 2), 2, 16) == ds({0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  }

  TEST_CASE("prefix property") {
    std::vector<RealSpec> specs = {RealSpec::rational(5, 7),   RealSpec::champernowne(3), RealSpec::square_root(7),
                                   RealSpec::pseudorandom(3, 5), RealSpec::complement(RealSpec::square_root(3)),
                                   RealSpec::scale(Rational(3, 2), RealSpec::champernowne(5))};
    for (const auto& s : specs)
      for (unsigned b : {2u, 5u, 10u}) {
        auto longer = got(s, b, 120);
        for (std::size_t n : {0u, 1u, 17u, 119u}) CHECK(got(s, b, n) == DigitString(longer.begin(), longer.begin() + n));
      }
  }

  TEST_CASE("truncations are within one unit") {
    std::vector<RealSpec> specs = {RealSpec::rational(1, 3), RealSpec::champernowne(10), RealSpec::square_root(2),
                                   RealSpec::scale(Rational(1, 2), RealSpec::champernowne(2))};
    for (const auto& s : specs)
      for (std::size_t n : {1u, 5u, 30u}) {
        auto p = digits(s, 10, n);
        CHECK(within(s, p.value(), inverse_power(10, n)));
      }
  }

  TEST_CASE("within decides the strict test exactly") {
    CHECK(within(RealSpec::rational(1, 2), Rational(4, 9), Rational(1, 9)));
    CHECK_FALSE(within(RealSpec::rational(1, 2), Rational(1, 4), Rational(1, 4)));
    CHECK(within(RealSpec::champernowne(10), Rational(1234, 10000), inverse_power(10, 4)));
    CHECK_FALSE(within(RealSpec::champernowne(10), Rational(1236, 10000), inverse_power(10, 4)));
    CHECK(within(RealSpec::square_root(2), Rational(41421, 100000), inverse_power(10, 5)));
  }

  TEST_CASE("interleave split") {
    // 1,0,1,1 from the binary expansion of 11/16
    auto z = RealSpec::rational(11, 16);
    auto [x, y] = interleave_split(z);
    CHECK(got(x, 2, 4) == ds({1, 0, 1, 0}));
    CHECK(got(y, 2, 4) == ds({0, 0, 0, 1}));
    auto [x3, y3] = interleave_split(RealSpec::rational(1, 3));
    CHECK(got(x3, 2, 10) == DigitString(10, 0));
    CHECK(got(y3, 2, 6) == ds({0, 1, 0, 1, 0, 1}));
    auto [xc, yc] = interleave_split(RealSpec::champernowne(2));
    auto dz = got(RealSpec::champernowne(2), 2, 100000), dx = got(xc, 2, 100000), dy = got(yc, 2, 100000);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < dz.size(); ++i) {
      CHECK(dx[i] + dy[i] == dz[i]);
      zeros += dx[i] == 0;
    }
    // half the positions are forced to 0 and the rest are mostly 0 or 1 evenly
    CHECK(zeros > 72000);
    CHECK(zeros < 78000);
  }

  TEST_CASE("complement and scale") {
    CHECK(got(RealSpec::complement(RealSpec::rational(1, 3)), 10, 4) == ds({6, 6, 6, 6}));
    CHECK(*RealSpec::scale(Rational(2), RealSpec::rational(1, 3)).exact_value() == Rational(2, 3));
    auto shifted = got(RealSpec::scale(Rational(1, 2), RealSpec::champernowne(2)), 2, 300);
    auto base = got(RealSpec::champernowne(2), 2, 299);
    CHECK(shifted[0] == 0);
    CHECK(DigitString(shifted.begin() + 1, shifted.end()) == base);
    CHECK(got(RealSpec::scale(Rational(3), RealSpec::rational(1, 2)), 10, 3) == ds({5, 0, 0}));
    CHECK_THROWS_AS(RealSpec::complement(RealSpec::rational(0, 1)), PreconditionError);
    CHECK_THROWS_AS(RealSpec::scale(Rational(-1), RealSpec::rational(1, 2)), PreconditionError);
  }

  TEST_CASE("canonical strings round trip") {
    for (std::string s : {"rat:1/3", "champernowne:10", "sqrt:2", "prng:42:2", "interleave:even:champernowne:2",
                          "interleave:odd:rat:1/3", "complement:rat:1/3", "scale:1/2:champernowne:2"}) {
      CAPTURE(s);
      CHECK(RealSpec::parse(s).canonical() == s);
    }
    CHECK(RealSpec::parse("champ:3").canonical() == "champernowne:3");
    CHECK_THROWS_AS(RealSpec::parse("pi"), ParseError);
    CHECK_THROWS(RealSpec::parse("rat:3/2"));
  }

  TEST_CASE("digit files and the cache") {
    auto dir = temp_dir("numstream");
    auto spec = RealSpec::champernowne(10);
    DigitCache cache(dir);
    auto a = cache.get(spec, 10, 1000);
    auto path = cache.path_for(spec, 10);
    std::string first;
    {
      std::ifstream in(path);
      first.assign(std::istreambuf_iterator<char>(in), {});
    }
    CHECK(first.rfind("base=10 spec=champernowne:10\n", 0) == 0);
    auto b = cache.get(spec, 10, 100);
    CHECK(b == a.prefix(100));
    auto c = cache.get(spec, 10, 3000);
    CHECK(c.prefix(1000) == a);
    std::string after;
    {
      std::ifstream in(path);
      after.assign(std::istreambuf_iterator<char>(in), {});
    }
    CHECK(after.substr(0, first.size()) == first);

    auto file = RealSpec::digit_file(path, 10);
    CHECK(got(file, 10, 3000) == got(spec, 10, 3000));
    CHECK_THROWS_AS(digits(file, 10, 3001), InsufficientPrecision);
    CHECK_THROWS(RealSpec::digit_file(path, 2));

    // comma-separated digits above base 10
    auto big = digits(RealSpec::champernowne(16), 16, 50);
    auto text = format_digit_file(big, "champernowne:16");
    auto second_line = text.substr(text.find('\n') + 1, 12);
    CHECK(second_line.find(',') != std::string::npos);
    std::filesystem::remove_all(dir);
  }
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "normlab/cli.hpp"
#include "normlab/errors.hpp"

using namespace normlab;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("normlab-cli-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::filesystem::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("documented invocations") {
    auto b = cli({"blocks", "--spec", "champernowne:10", "--base", "10", "--k", "1", "--n", "1000000"});
    CHECK(b.code == kExitOk);
    CHECK(b.out == "spec,base,k,n,discrepancy_num,discrepancy_den\nchampernowne:10,10,1,1000000,7981,100000\n");

    auto c = cli({"repsys", "cfn", "--spec", "rat:1/2", "--base", "3", "--f", "identity:3", "--n", "7"});
    CHECK(c.code == kExitOk);
    CHECK(c.out == "7\n");

    CHECK(cli({"experiment", "separation", "--base", "3", "--nmax", "12"}).code == kExitOk);
  }

  TEST_CASE("subcommands") {
    CHECK(cli({"digits", "--spec", "rat:1/3", "--base", "10", "--n", "4"}).out == "base=10 spec=rat:1/3\n3333\n");
    CHECK(cli({"transducer", "run", "--d", "doubling:3:1", "--input", "11"}).out == "1111\n");
    CHECK(cli({"transducer", "cd", "--d", "doubling:3:1", "--sigma", "1"}).out == "undefined\n");
    CHECK(cli({"transducer", "cd", "--d", "doubling:3:1", "--sigma", "1111"}).out == "2\n");
    auto cnd = cli({"transducer", "cnd", "--d", "doubling:3:1", "--spec", "rat:1/2", "--n", "10"});
    CHECK(cnd.out.find("rat:1/2,doubling:3:1,10,5,0,0.5") != std::string::npos);
    CHECK(cli({"repsys", "cfnd", "--spec", "rat:1/2", "--f", "identity:3", "--d", "doubling:3:1", "--n", "10"}).out ==
          "5\n");
    CHECK(cli({"repsys", "cfn", "--spec", "rat:1/2", "--f", "identity:3@doubling:3:1", "--n", "10"}).out == "5\n");
    auto weak = cli({"repsys", "weak", "--spec", "champernowne:2", "--f", "identity:2", "--n", "1..12", "--eps", "1/5"});
    CHECK(weak.code == kExitOk);
    CHECK(weak.out.find("champernowne:2,identity,-,12,10,0,") != std::string::npos);
    auto strong = cli({"repsys", "strong", "--spec", "rat:1/2", "--f", "identity:3", "--d",
                       "identity:3,doubling:3:1", "--n", "4,6"});
    CHECK(strong.out.find("rat:1/2,identity,doubling:3:1,6,3,0,0.5") != std::string::npos);
    CHECK(cli({"martingale", "capital", "--m", "fullstake:10:-:3", "--spec", "rat:1/3", "--n", "3"}).out == "1000\n");
    CHECK(cli({"martingale", "fairness", "--m", "uniform:4"}).code == kExitOk);
    auto prof = cli({"martingale", "profile", "--m", "uniform:2", "--spec", "champernowne:2", "--n", "1000"});
    CHECK(prof.out.rfind("spec,n,log2_capital", 0) == 0);
    auto dim = cli({"dim", "--spec", "rat:1/3", "--base", "2", "--n", "1000,2000", "--codecs", "lz77,runlength"});
    CHECK(dim.out.find("rat:1/3,2000,lz77,29,") != std::string::npos);
    auto closure = cli({"experiment", "closure", "--spec", "rat:1/3", "--f", "identity:10", "--q", "1/10", "--n", "4"});
    CHECK(closure.code == kExitOk);
    CHECK(closure.out.find("PASS") != std::string::npos);
    CHECK(cli({"experiment", "compose", "--trials", "20", "--seed", "5"}).code == kExitOk);
  }

  TEST_CASE("exit codes") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    auto bad_flag = cli({"blocks", "--spec", "rat:1/3", "--base", "10", "--n", "10", "--bogus"});
    CHECK(bad_flag.code == kExitUsage);
    CHECK(bad_flag.err.find("Usage") != std::string::npos);
    CHECK(cli({"blocks", "--spec", "nonsense", "--base", "10", "--n", "10"}).code == kExitUsage);
    CHECK(cli({"repsys", "cfn", "--spec", "rat:1/2", "--f", "affine:1:0:identity:10", "--n", "9", "--budget", "1000"})
              .code == kExitResource);
    CHECK(cli({"experiment", "interleave", "--n", "10000", "--z-max", "1/100"}).code == kExitCheckFailed);
    CHECK(cli({"experiment", "interleave", "--n", "100"}).code == kExitUsage);
    CHECK(cli({"repsys", "cfn", "--spec", "rat:1/2", "--base", "2", "--f", "identity:3", "--n", "3"}).code ==
          kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);

    auto dir = temp_dir("fair");
    spit(dir / "bad.mg", "base=2 states=1 start=0\n0 0 -> 0\n0 1 -> 0\n0 : 1/2,1/3\n");
    auto fair = cli({"martingale", "fairness", "--m", "file:" + (dir / "bad.mg").string()});
    CHECK(fair.code == kExitCheckFailed);
    CHECK(fair.out.find("state 0") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("--out writes both files") {
    auto dir = temp_dir("out");
    auto r = cli({"--out", dir.string(), "experiment", "separation", "--base", "3", "--nmax", "6"});
    CHECK(r.code == kExitOk);
    CHECK(slurp(dir / "separation.csv").rfind("experiment,check,expected,observed,pass\n", 0) == 0);
    CHECK(slurp(dir / "separation.txt").find("seed: 1") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("digit cache") {
    auto dir = temp_dir("cache");
    ::setenv("NORMLAB_CACHE_DIR", dir.c_str(), 1);
    auto big = cli({"cache", "--spec", "champernowne:10", "--base", "10", "--n", "1000000"});
    CHECK(big.code == kExitOk);
    CHECK(big.out.find("1000000 digits") != std::string::npos);
    auto file = std::filesystem::path(big.out.substr(0, big.out.find(' ')));
    const std::string before = slurp(file);
    auto small = cli({"digits", "--spec", "champernowne:10", "--base", "10", "--n", "100000"});
    ::unsetenv("NORMLAB_CACHE_DIR");
    auto direct = cli({"digits", "--spec", "champernowne:10", "--base", "10", "--n", "100000"});
    CHECK(small.out == direct.out);
    CHECK(before.substr(0, small.out.size() - 1) + "\n" == small.out);
    CHECK(slurp(file) == before);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("config files") {
    auto dir = temp_dir("config");
    spit(dir / "minimal.conf", "[specs]\nc10 = champernowne:10\n[jobs]\nblocks spec=c10 base=10 k=1 n=1000\n");
    auto cfg = load_config(dir / "minimal.conf");
    REQUIRE(cfg.jobs.size() == 1);
    CHECK(cfg.jobs[0].args ==
          std::vector<std::string>{"blocks", "--spec", "champernowne:10", "--base", "10", "--k", "1", "--n", "1000"});

    spit(dir / "undeclared.conf", "[specs]\nh = rat:1/2\n[jobs]\n\nrepsys cfnd spec=h f=id d=dbl n=4\n");
    try {
      load_config(dir / "undeclared.conf");
      FAIL("undeclared name accepted");
    } catch (const ParseError& e) {
      CHECK(e.line() == 5);
      CHECK(std::string(e.what()).find("'id'") != std::string::npos);
    }
    spit(dir / "fraction.conf", "[jobs]\nexperiment interleave n=10000 z-max=1/x\n");
    CHECK_THROWS_AS(load_config(dir / "fraction.conf"), ParseError);
    spit(dir / "kind.conf", "[machines]\nid = repsys identity:3\n[jobs]\ntransducer run d=id input=1\n");
    CHECK_THROWS_AS(load_config(dir / "kind.conf"), ParseError);
    CHECK(cli({"--config", (dir / "undeclared.conf").string()}).code == kExitUsage);

    spit(dir / "dbl.tr", "base=3 states=1 start=0\n0 0 -> 0 / 0\n0 1 -> 0 / 11\n0 2 -> 0 / 2\n");
    spit(dir / "jobs.conf",
         "output = results\nseed = 9\n[specs]\nhalf = rat:1/2\n[machines]\nid = repsys identity:3\n"
         "dbl = transducer file:dbl.tr\n[jobs]\nrepsys cfnd spec=half f=id d=dbl n=4..8\n"
         "experiment compose trials=5\n");
    auto run = cli({"--config", (dir / "jobs.conf").string()});
    CHECK(run.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "results" / "job1-repsys-cfnd" / "cfnd.csv"));
    CHECK(slurp(dir / "results" / "job2-experiment-compose" / "compose.txt").find("seed: 9") != std::string::npos);
    CHECK(slurp(dir / "results" / "job1-repsys-cfnd" / "cfnd.csv").find("rat:1/2,identity,") != std::string::npos);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("size lists") {
    CHECK(parse_size_list("10,100") == std::vector<std::size_t>{10, 100});
    CHECK(parse_size_list("4..6") == std::vector<std::size_t>{4, 5, 6});
    CHECK(parse_size_list("1000..3000:1000,7") == std::vector<std::size_t>{1000, 2000, 3000, 7});
    CHECK_THROWS(parse_size_list("5..2"));
    CHECK_THROWS(parse_size_list("x"));
  }
}

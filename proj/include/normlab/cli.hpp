#pragma once

// Command-line driver, config files and the textual machine descriptors
// shared by both.
//
// Machine descriptors:
//   transducer  identity:B | doubling:B:DIGIT | silent:B | file:PATH
//   martingale  uniform:B | fullstake:B:PRE:PERIOD | file:PATH   (PRE may be -)
//   repsys      identity:B | complement:R | affine:Q:S:R | tabular:PATH:R | R@T
//               (R@T is compose(R, T) for a transducer descriptor T)
//   codec       a registered name (passthrough, runlength, lz77, repsys(identity))
//               or repsys:R
//
// Config files are line oriented:
//
//   output = results        # optional, relative to the config file
//   seed = 7                # optional
//   [specs]
//   champ10 = champernowne:10
//   [machines]
//   dbl = transducer doubling:3:1
//   [jobs]
//   blocks spec=champ10 base=10 k=1 n=1000000
//
// A job is a subcommand followed by key=value pairs, passed on as --key value.
// Values of spec, d, f, m and codecs must name declarations.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "normlab/dimension.hpp"
#include "normlab/martingale.hpp"
#include "normlab/numstream.hpp"
#include "normlab/repsys.hpp"
#include "normlab/transducer.hpp"

namespace normlab {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitResource = 3 };

Transducer transducer_from_descriptor(std::string_view text);
FSMartingale martingale_from_descriptor(std::string_view text);
RepSystem repsys_from_descriptor(std::string_view text);
CodecPtr codec_from_descriptor(std::string_view text, const CodecRegistry& registry);

struct ExperimentConfig {
  struct Spec {
    std::string text;
    std::size_t line;
  };
  struct Machine {
    std::string kind;  // transducer, martingale, repsys or codec
    std::string descriptor;
    std::size_t line;
  };
  struct Job {
    std::size_t line;
    std::vector<std::string> args;  // CLI arguments with names resolved
  };

  std::map<std::string, Spec> specs;
  std::map<std::string, Machine> machines;
  std::vector<Job> jobs;
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
};

/// Parses and validates a config; relative paths resolve against `base_dir`.
/// Throws ParseError naming the offending line.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Digits through the on-disk cache in `dir`.
DigitPrefix cache_digits(const RealSpec& spec, unsigned base, std::size_t n, const std::filesystem::path& dir);

/// Comma-separated sizes with optional ranges: "10,100", "4..12", "1000..5000:1000".
std::vector<std::size_t> parse_size_list(std::string_view text);

/// args excludes the program name. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace normlab

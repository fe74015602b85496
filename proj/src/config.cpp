#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "normlab/cli.hpp"
#include "normlab/errors.hpp"

namespace normlab {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string_view, std::string_view> split_first(std::string_view s, char sep) {
  auto pos = s.find(sep);
  if (pos == std::string_view::npos) return {s, {}};
  return {s.substr(0, pos), s.substr(pos + 1)};
}

unsigned parse_base(std::string_view s) {
  auto v = parse_size_list(s);
  if (v.size() != 1 || v[0] < 2 || v[0] > 1'000'000) throw PreconditionError("bad base '" + std::string(s) + "'");
  return static_cast<unsigned>(v[0]);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_number(std::string_view s) {
  if (s.empty() || s.size() > 18 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw PreconditionError("bad number '" + std::string(s) + "'");
  return std::stoull(std::string(s));
}

}  // namespace

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::string_view rest = text;
  if (rest.empty()) throw PreconditionError("empty size list");
  while (true) {
    auto [item, tail] = split_first(rest, ',');
    auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_number(item));
    } else {
      auto [hi_text, step_text] = split_first(item.substr(dots + 2), ':');
      std::size_t lo = parse_number(item.substr(0, dots)), hi = parse_number(hi_text);
      std::size_t step = step_text.empty() ? 1 : parse_number(step_text);
      if (step == 0 || hi < lo || (hi - lo) / step > 10'000'000)
        throw PreconditionError("bad range '" + std::string(item) + "'");
      for (std::size_t v = lo; v <= hi; v += step) out.push_back(v);
    }
    if (tail.data() == nullptr) break;
    rest = tail;
  }
  return out;
}

Transducer transducer_from_descriptor(std::string_view text) {
  auto [kind, rest] = split_first(text, ':');
  if (kind == "identity") return Transducer::identity(parse_base(rest));
  if (kind == "silent") return Transducer::silent(parse_base(rest));
  if (kind == "doubling") {
    auto [b, d] = split_first(rest, ':');
    return Transducer::doubling(parse_base(b), static_cast<Digit>(parse_number(d)));
  }
  if (kind == "file") {
    try {
      return parse_transducer(read_text(std::string(rest)));
    } catch (const ParseError& e) {
      throw PreconditionError(std::string(rest) + ": " + e.what());
    }
  }
  throw PreconditionError("unknown transducer '" + std::string(text) + "'");
}

FSMartingale martingale_from_descriptor(std::string_view text) {
  auto [kind, rest] = split_first(text, ':');
  if (kind == "uniform") return FSMartingale::uniform(parse_base(rest));
  if (kind == "fullstake") {
    auto [b, tail] = split_first(rest, ':');
    auto [pre, period] = split_first(tail, ':');
    const unsigned base = parse_base(b);
    return FSMartingale::full_stake(base, parse_digit_run(pre, base, 0), parse_digit_run(period, base, 0));
  }
  if (kind == "file") {
    try {
      return parse_martingale(read_text(std::string(rest)));
    } catch (const ParseError& e) {
      throw PreconditionError(std::string(rest) + ": " + e.what());
    }
  }
  throw PreconditionError("unknown martingale '" + std::string(text) + "'");
}

RepSystem repsys_from_descriptor(std::string_view text) {
  if (auto at = text.rfind('@'); at != std::string_view::npos) {
    std::string_view t = text.substr(at + 1);
    return compose(repsys_from_descriptor(text.substr(0, at)), transducer_from_descriptor(t), std::string(t));
  }
  auto [kind, rest] = split_first(text, ':');
  if (kind == "identity") return RepSystem::identity(parse_base(rest));
  if (kind == "complement") return complement_system(repsys_from_descriptor(rest));
  if (kind == "affine") {
    auto [q, tail] = split_first(rest, ':');
    auto [s, inner] = split_first(tail, ':');
    return RepSystem::affine(parse_rational(q), parse_rational(s), repsys_from_descriptor(inner));
  }
  if (kind == "tabular") {
    auto [path, inner] = split_first(rest, ':');
    RepSystem fallback = repsys_from_descriptor(inner);
    try {
      return RepSystem::tabular(parse_overrides(read_text(std::string(path)), fallback.base()), fallback);
    } catch (const ParseError& e) {
      throw PreconditionError(std::string(path) + ": " + e.what());
    }
  }
  throw PreconditionError("unknown representation system '" + std::string(text) + "'");
}

CodecPtr codec_from_descriptor(std::string_view text, const CodecRegistry& registry) {
  if (text.starts_with("repsys:")) return repsys_codec(repsys_from_descriptor(text.substr(7)));
  return registry.get(text);
}

DigitPrefix cache_digits(const RealSpec& spec, unsigned base, std::size_t n, const std::filesystem::path& dir) {
  DigitCache cache(dir);
  return cache.get(spec, base, n);
}

// ---------------------------------------------------------------------------
// Config

namespace {

const std::set<std::string, std::less<>> kSubcommands = {"digits", "blocks",     "transducer", "martingale",
                                                         "repsys", "dim",        "experiment", "cache"};
const std::set<std::string, std::less<>> kFractionKeys = {"q", "eps", "z-max", "xy-min"};
const std::set<std::string, std::less<>> kCountKeys = {"budget", "base", "k", "trials", "nmax", "settle"};

const std::map<std::string, std::string, std::less<>> kMachineKeys = {
    {"d", "transducer"}, {"f", "repsys"}, {"m", "martingale"}, {"codecs", "codec"}};

// Rewrites relative file paths inside a spec or machine descriptor.
std::string absolutize(std::string_view text, const std::filesystem::path& base_dir) {
  if (base_dir.empty()) return std::string(text);
  auto fix = [&](std::string_view p) {
    std::filesystem::path path{std::string(p)};
    return path.is_absolute() ? path.string() : (base_dir / path).string();
  };
  if (text.starts_with("file:")) {
    auto rest = text.substr(5);
    // spec form file:B:PATH or machine form file:PATH
    auto [b, path] = split_first(rest, ':');
    if (!path.empty() && std::all_of(b.begin(), b.end(), [](char c) { return c >= '0' && c <= '9'; }) && !b.empty())
      return "file:" + std::string(b) + ":" + fix(path);
    return "file:" + fix(rest);
  }
  if (text.starts_with("tabular:")) {
    auto [path, inner] = split_first(text.substr(8), ':');
    return "tabular:" + fix(path) + ":" + absolutize(inner, base_dir);
  }
  for (std::string_view wrapper : {"complement:", "interleave:even:", "interleave:odd:"})
    if (text.starts_with(wrapper)) return std::string(wrapper) + absolutize(text.substr(wrapper.size()), base_dir);
  if (auto at = text.rfind('@'); at != std::string_view::npos)
    return absolutize(text.substr(0, at), base_dir) + "@" + absolutize(text.substr(at + 1), base_dir);
  return std::string(text);
}

void validate_machine(const std::string& kind, const std::string& descriptor) {
  if (kind == "transducer") transducer_from_descriptor(descriptor);
  else if (kind == "martingale") martingale_from_descriptor(descriptor);
  else if (kind == "repsys") repsys_from_descriptor(descriptor);
  else if (kind == "codec") codec_from_descriptor(descriptor, CodecRegistry{});
  else throw PreconditionError("unknown machine kind '" + kind + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  enum class Section { top, specs, machines, jobs } section = Section::top;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  const CodecRegistry registry;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[specs]") section = Section::specs;
      else if (line == "[machines]") section = Section::machines;
      else if (line == "[jobs]") section = Section::jobs;
      else throw ParseError(line_no, "unknown section " + line);
      continue;
    }
    try {
      if (section == Section::jobs) {
        std::istringstream ls(line);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (!kSubcommands.contains(toks[0])) throw ParseError(line_no, "unknown subcommand '" + toks[0] + "'");
        ExperimentConfig::Job job{line_no, {}};
        std::size_t i = 0;
        for (; i < toks.size() && toks[i].find('=') == std::string::npos; ++i) job.args.push_back(toks[i]);
        for (; i < toks.size(); ++i) {
          auto eq = toks[i].find('=');
          if (eq == std::string::npos || eq == 0 || eq + 1 == toks[i].size())
            throw ParseError(line_no, "expected key=value, got '" + toks[i] + "'");
          std::string key = toks[i].substr(0, eq), value = toks[i].substr(eq + 1);
          if (key == "spec") {
            auto it = cfg.specs.find(value);
            if (it == cfg.specs.end()) throw ParseError(line_no, "undeclared spec '" + value + "'");
            value = it->second.text;
          } else if (auto mk = kMachineKeys.find(key); mk != kMachineKeys.end()) {
            std::string resolved;
            std::string_view rest = value;
            while (true) {
              auto [name, tail] = split_first(rest, ',');
              auto it = cfg.machines.find(std::string(name));
              if (it != cfg.machines.end()) {
                if (it->second.kind != mk->second)
                  throw ParseError(line_no, "'" + std::string(name) + "' is a " + it->second.kind + ", expected a " +
                                                mk->second);
                resolved += (resolved.empty() ? "" : ",") + it->second.descriptor;
              } else if (key == "codecs" && [&] {
                           auto names = registry.names();
                           return std::find(names.begin(), names.end(), name) != names.end();
                         }()) {
                resolved += (resolved.empty() ? "" : ",") + std::string(name);
              } else {
                throw ParseError(line_no, "undeclared machine '" + std::string(name) + "'");
              }
              if (tail.data() == nullptr) break;
              rest = tail;
            }
            value = resolved;
          } else if (kFractionKeys.contains(key)) {
            std::string_view rest = value;
            while (true) {
              auto [item, tail] = split_first(rest, ',');
              try {
                parse_rational(item);
              } catch (const Error&) {
                throw ParseError(line_no, "malformed fraction '" + std::string(item) + "'");
              }
              if (tail.data() == nullptr) break;
              rest = tail;
            }
          } else if (kCountKeys.contains(key)) {
            if (parse_number(value) == 0) throw ParseError(line_no, key + " must be positive");
          }
          job.args.push_back("--" + key);
          job.args.push_back(value);
        }
        cfg.jobs.push_back(std::move(job));
        continue;
      }

      auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "expected 'name = value'");
      std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty() || value.empty()) throw ParseError(line_no, "expected 'name = value'");
      switch (section) {
        case Section::top:
          if (key == "output") cfg.output_dir = base_dir / value;
          else if (key == "seed") cfg.seed = parse_number(value);
          else throw ParseError(line_no, "unknown setting '" + key + "'");
          break;
        case Section::specs: {
          std::string resolved = absolutize(value, base_dir);
          RealSpec::parse(resolved);
          if (!cfg.specs.emplace(key, ExperimentConfig::Spec{resolved, line_no}).second)
            throw ParseError(line_no, "duplicate spec '" + key + "'");
          break;
        }
        case Section::machines: {
          std::istringstream ls(value);
          std::string kind, descriptor, extra;
          if (!(ls >> kind >> descriptor) || (ls >> extra))
            throw ParseError(line_no, "expected 'name = <kind> <descriptor>'");
          descriptor = absolutize(descriptor, base_dir);
          validate_machine(kind, descriptor);
          if (!cfg.machines.emplace(key, ExperimentConfig::Machine{kind, descriptor, line_no}).second)
            throw ParseError(line_no, "duplicate machine '" + key + "'");
          break;
        }
        case Section::jobs:
          break;
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
  return parse_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace normlab

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "normlab/blockstats.hpp"
#include "normlab/cli.hpp"
#include "normlab/errors.hpp"
#include "normlab/experiments.hpp"

namespace normlab {

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw PreconditionError("cannot write " + tmp.string());
    f << contents;
    if (!f.flush()) throw PreconditionError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct Sink {
  std::string dir;
  std::ostream& out;

  // Without --out the table goes to stdout for table-like commands and the
  // text report otherwise; with --out both are written and the report is echoed.
  void emit(const std::string& stem, const std::string& csv, const std::string& text, bool table) const {
    if (!dir.empty()) {
      if (!csv.empty()) write_atomically(std::filesystem::path(dir) / (stem + ".csv"), csv);
      write_atomically(std::filesystem::path(dir) / (stem + ".txt"), text);
      out << text;
    } else {
      out << (table && !csv.empty() ? csv : text);
    }
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw PreconditionError("empty list '" + s + "'");
  return out;
}

std::vector<Rational> rational_list(const std::string& s) {
  std::vector<Rational> out;
  for (const auto& item : split_list(s)) out.push_back(parse_rational(item));
  return out;
}

std::filesystem::path cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NORMLAB_CACHE_DIR"); env && *env) return env;
  return ".normlab-cache";
}

std::size_t single(const std::vector<std::size_t>& v, const char* what) {
  if (v.size() != 1) throw PreconditionError(std::string(what) + " takes a single value here");
  return v[0];
}

void check_base(unsigned flag, unsigned actual, const std::string& what) {
  if (flag != 0 && flag != actual)
    throw PreconditionError("--base " + std::to_string(flag) + " does not match the base " + std::to_string(actual) +
                            " of " + what);
}

std::string header(std::uint64_t seed) { return "seed: " + std::to_string(seed) + "\n"; }

struct Options {
  std::string spec, d, f, m, codecs, input, sigma, n, eps = "1/20", q = "1/2", z_max, xy_min = "1/5", dir, h = "sqrt";
  unsigned base = 0, k = 1;
  std::uint64_t budget = SearchBudget{}.max_candidates;
  std::size_t nmax = 12, trials = 200, settle = 0;
};

int run_config(const std::string& path, const std::string& out_flag, std::uint64_t seed, bool seed_set,
               std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_config(path);
  if (!seed_set) seed = cfg.seed;
  std::filesystem::path out_dir = out_flag.empty() ? cfg.output_dir : std::filesystem::path(out_flag);
  int worst = kExitOk;
  for (std::size_t i = 0; i < cfg.jobs.size(); ++i) {
    const auto& job = cfg.jobs[i];
    std::vector<std::string> args{"--seed", std::to_string(seed)};
    std::string stem = "job" + std::to_string(i + 1);
    for (const auto& a : job.args) {
      if (a.starts_with("--")) break;
      stem += "-" + a;
    }
    if (!out_dir.empty()) {
      args.push_back("--out");
      args.push_back((out_dir / stem).string());
    }
    args.insert(args.end(), job.args.begin(), job.args.end());
    out << "== " << stem << " (line " << job.line << ")\n";
    int rc = run_cli(args, out, err);
    if (rc != kExitOk) err << stem << " (line " << job.line << ") exited with " << rc << '\n';
    worst = std::max(worst, rc);
  }
  return worst;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"normlab: digit streams, finite-state machines, representation systems and dimension estimates"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::uint64_t seed = 1;
  Options o;
  app.add_option("--config", config_path, "Run every job of a config file");
  app.add_option("--out", out_dir, "Write <name>.csv and <name>.txt into this directory");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every randomized step (recorded in reports)");

  auto spec_opt = [&](CLI::App* c, bool required = true) {
    auto* opt = c->add_option("--spec", o.spec, "Real, e.g. champernowne:10, rat:1/3, sqrt:2, prng:42:2");
    if (required) opt->required();
  };

  auto* digits_cmd = app.add_subcommand("digits", "Print the first n digits in cache format");
  spec_opt(digits_cmd);
  digits_cmd->add_option("--base", o.base)->required();
  digits_cmd->add_option("--n", o.n)->required();
  digits_cmd->add_option("--cache-dir", o.dir, "Serve through the digit cache (also NORMLAB_CACHE_DIR)");

  auto* blocks_cmd = app.add_subcommand("blocks", "Block discrepancies. CSV: spec,base,k,n,discrepancy_num,discrepancy_den");
  spec_opt(blocks_cmd);
  blocks_cmd->add_option("--base", o.base)->required();
  blocks_cmd->add_option("--k", o.k, "Largest block length");
  blocks_cmd->add_option("--n", o.n, "Grid, e.g. 10000,100000")->required();

  auto* tr_cmd = app.add_subcommand("transducer", "Finite-state transducers");
  tr_cmd->require_subcommand(1);
  auto* tr_run = tr_cmd->add_subcommand("run", "Output of D on an input");
  tr_run->add_option("--d", o.d)->required();
  tr_run->add_option("--input", o.input)->required();
  auto* tr_cd = tr_cmd->add_subcommand("cd", "C_D(sigma): shortest input producing sigma");
  tr_cd->add_option("--d", o.d)->required();
  tr_cd->add_option("--sigma", o.sigma)->required();
  auto* tr_cnd = tr_cmd->add_subcommand("cnd", "C_{n,D}(x). CSV: spec,transducer,n,value,cap_hit,ratio");
  tr_cnd->add_option("--d", o.d)->required();
  spec_opt(tr_cnd);
  tr_cnd->add_option("--n", o.n)->required();
  tr_cnd->add_option("--budget", o.budget);

  auto* mg_cmd = app.add_subcommand("martingale", "Finite-state martingales");
  mg_cmd->require_subcommand(1);
  auto* mg_capital = mg_cmd->add_subcommand("capital", "Capital after n digits (exact up to 1000 digits)");
  mg_capital->add_option("--m", o.m)->required();
  spec_opt(mg_capital);
  mg_capital->add_option("--n", o.n)->required();
  auto* mg_fair = mg_cmd->add_subcommand("fairness", "Check that every state's stakes sum to 1");
  mg_fair->add_option("--m", o.m)->required();
  auto* mg_profile = mg_cmd->add_subcommand("profile", "Success profile. CSV: spec,n,log2_capital,crosses_h,crosses_eps...");
  mg_profile->add_option("--m", o.m)->required();
  spec_opt(mg_profile);
  mg_profile->add_option("--n", o.n)->required();
  mg_profile->add_option("--eps", o.eps);
  mg_profile->add_option("--growth", o.h, "h(n): sqrt or log");
  mg_profile->add_option("--settle", o.settle);

  auto* rs_cmd = app.add_subcommand("repsys", "Representation-system complexities");
  rs_cmd->require_subcommand(1);
  auto* rs_cfn = rs_cmd->add_subcommand("cfn", "C^f_n(x); a single n prints the value, a list prints CSV");
  auto* rs_cfnd = rs_cmd->add_subcommand("cfnd", "C^f_{n,D}(x); a single n prints the value, a list prints CSV");
  auto* rs_weak = rs_cmd->add_subcommand("weak", "Weak ratio profile. CSV: spec,system,transducer,n,value,cap_hit,ratio");
  auto* rs_strong = rs_cmd->add_subcommand("strong", "Strong ratio profile over a list of transducers, same CSV");
  for (auto* c : {rs_cfn, rs_cfnd, rs_weak, rs_strong}) {
    spec_opt(c);
    c->add_option("--base", o.base, "Must match the system's base when given");
    c->add_option("--f", o.f, "System, e.g. identity:3, complement:identity:10")->required();
    c->add_option("--n", o.n)->required();
    c->add_option("--budget", o.budget);
  }
  rs_cfnd->add_option("--d", o.d)->required();
  rs_strong->add_option("--d", o.d, "Comma-separated transducers")->required();
  for (auto* c : {rs_weak, rs_strong}) {
    c->add_option("--eps", o.eps);
    c->add_option("--settle", o.settle);
  }

  auto* dim_cmd = app.add_subcommand("dim", "Dimension upper bounds. CSV: spec,n,codec,k_m,ratio");
  spec_opt(dim_cmd);
  dim_cmd->add_option("--base", o.base)->required();
  dim_cmd->add_option("--n", o.n)->required();
  dim_cmd->add_option("--codecs", o.codecs, "Comma-separated; default: every registered codec");

  auto* ex_cmd = app.add_subcommand("experiment", "Canned experiments. CSV: experiment,check,expected,observed,pass");
  ex_cmd->require_subcommand(1);
  auto* ex_sep = ex_cmd->add_subcommand("separation", "Weakly but not strongly f-normal example");
  ex_sep->add_option("--base", o.base)->required();
  ex_sep->add_option("--nmax", o.nmax);
  auto* ex_int = ex_cmd->add_subcommand("interleave", "Splitting Champernowne(2) into two non-normal halves");
  ex_int->add_option("--n", o.n)->required();
  ex_int->add_option("--z-max", o.z_max);
  ex_int->add_option("--xy-min", o.xy_min);
  auto* ex_clo = ex_cmd->add_subcommand("closure", "Complement transport and digit shifts");
  spec_opt(ex_clo);
  ex_clo->add_option("--f", o.f)->required();
  ex_clo->add_option("--q", o.q);
  ex_clo->add_option("--n", o.n)->required();
  ex_clo->add_option("--budget", o.budget);
  auto* ex_comp = ex_cmd->add_subcommand("compose", "c_f_n over compose(f,D) against c_f_nd on random instances");
  ex_comp->add_option("--trials", o.trials);

  auto* cache_cmd = app.add_subcommand("cache", "Extend the on-disk digit cache");
  spec_opt(cache_cmd);
  cache_cmd->add_option("--base", o.base)->required();
  cache_cmd->add_option("--n", o.n)->required();
  cache_cmd->add_option("--dir", o.dir, "Cache directory (default NORMLAB_CACHE_DIR or .normlab-cache)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const Sink sink{out_dir, out};
  try {
    if (!config_path.empty()) {
      if (!app.get_subcommands().empty()) throw PreconditionError("--config runs its own jobs; drop the subcommand");
      return run_config(config_path, out_dir, seed, seed_opt->count() > 0, out, err);
    }
    if (app.get_subcommands().empty()) {
      err << "error: a subcommand is required\n\n" << app.help();
      return kExitUsage;
    }
    const std::string seed_line = header(seed);

    if (digits_cmd->parsed()) {
      RealSpec x = RealSpec::parse(o.spec);
      std::size_t n = single(parse_size_list(o.n), "--n");
      bool cached = !o.dir.empty() || std::getenv("NORMLAB_CACHE_DIR");
      DigitPrefix p = cached ? cache_digits(x, o.base, n, cache_dir(o.dir)) : digits(x, o.base, n);
      std::string body = format_digit_file(p, x.canonical());
      if (!out_dir.empty()) write_atomically(std::filesystem::path(out_dir) / "digits.txt", body);
      out << body << '\n';
      return kExitOk;
    }

    if (blocks_cmd->parsed()) {
      RealSpec x = RealSpec::parse(o.spec);
      auto report = normality_profile(x, o.base, o.k, parse_size_list(o.n));
      std::ostringstream text;
      text << seed_line << "spec: " << report.spec << "\nbase: " << report.base << '\n';
      for (const auto& p : report.points)
        text << "k=" << p.k << " n=" << p.n << " discrepancy=" << to_string(p.discrepancy) << " ("
             << std::setprecision(6) << p.discrepancy.get_d() << ")\n";
      for (unsigned k = 1; k <= report.k_max; ++k)
        text << "k=" << k << " trend: " << to_string(report.trends[k - 1]) << '\n';
      sink.emit("blocks", report.csv(), text.str(), true);
      return kExitOk;
    }

    if (tr_run->parsed()) {
      Transducer d = transducer_from_descriptor(o.d);
      out << format_digit_run(run(d, parse_digit_run(o.input, d.base(), 0)), d.base()) << '\n';
      return kExitOk;
    }
    if (tr_cd->parsed()) {
      Transducer d = transducer_from_descriptor(o.d);
      auto v = c_d(d, parse_digit_run(o.sigma, d.base(), 0));
      out << (v ? std::to_string(*v) : std::string("undefined")) << '\n';
      return kExitOk;
    }
    if (tr_cnd->parsed()) {
      Transducer d = transducer_from_descriptor(o.d);
      RealSpec x = RealSpec::parse(o.spec);
      std::ostringstream csv, text;
      csv << "spec,transducer,n,value,cap_hit,ratio\n";
      text << seed_line;
      for (std::size_t n : parse_size_list(o.n)) {
        auto e = c_nd(d, x, n, {o.budget});
        csv << x.canonical() << ',' << o.d << ',' << n << ',' << e.value << ',' << (e.cap_hit ? 1 : 0) << ','
            << e.ratio() << '\n';
        text << "C_" << n << ",D = " << e.value << (e.cap_hit ? " (cap)" : "") << '\n';
      }
      sink.emit("cnd", csv.str(), text.str(), true);
      return kExitOk;
    }

    if (mg_capital->parsed()) {
      FSMartingale m = martingale_from_descriptor(o.m);
      RealSpec x = RealSpec::parse(o.spec);
      std::size_t n = single(parse_size_list(o.n), "--n");
      DigitPrefix p = digits(x, m.base(), n);
      if (n <= kExactCapitalLimit)
        out << to_string(capital(m, p).back()) << '\n';
      else
        out << "log2 " << std::setprecision(12) << log2_capital(m, p).back() << '\n';
      return kExitOk;
    }
    if (mg_fair->parsed()) {
      auto report = fairness_check(martingale_from_descriptor(o.m));
      out << report.describe() << '\n';
      return report.ok() ? kExitOk : kExitCheckFailed;
    }
    if (mg_profile->parsed()) {
      FSMartingale m = martingale_from_descriptor(o.m);
      RealSpec x = RealSpec::parse(o.spec);
      SuccessThresholds t;
      t.epsilons = rational_list(o.eps);
      if (o.h == "sqrt") t.h = GrowthBound::sqrt_n;
      else if (o.h == "log") t.h = GrowthBound::log2_n;
      else throw PreconditionError("--growth must be sqrt or log");
      t.settle_in = o.settle;
      auto profile = success_profile(m, x, single(parse_size_list(o.n), "--n"), t);
      std::ostringstream text;
      text << seed_line << "spec: " << profile.spec << "\nfinal slope (log2 capital per digit): "
           << profile.final_slope << "\nconsistent with normality: "
           << (profile.consistent_with_normality() ? "yes" : "no") << '\n';
      sink.emit("martingale-profile", profile.csv(), text.str(), true);
      return kExitOk;
    }

    for (auto* c : {rs_cfn, rs_cfnd}) {
      if (!c->parsed()) continue;
      RepSystem f = repsys_from_descriptor(o.f);
      check_base(o.base, f.base(), f.name());
      RealSpec x = RealSpec::parse(o.spec);
      auto grid = parse_size_list(o.n);
      std::optional<Transducer> d;
      if (c == rs_cfnd) d = transducer_from_descriptor(o.d);
      std::vector<ComplexityEntry> entries;
      for (std::size_t n : grid) entries.push_back(d ? c_f_nd(x, f, *d, n, {o.budget}) : c_f_n(x, f, n, {o.budget}));
      if (grid.size() == 1) {
        out << entries[0].value << '\n';
        return kExitOk;
      }
      RatioProfile p{f.name(), d ? o.d : "", entries, {}, 0};
      sink.emit(c == rs_cfn ? "cfn" : "cfnd", p.csv(x.canonical()), seed_line, true);
      return kExitOk;
    }
    if (rs_weak->parsed() || rs_strong->parsed()) {
      RepSystem f = repsys_from_descriptor(o.f);
      check_base(o.base, f.base(), f.name());
      RealSpec x = RealSpec::parse(o.spec);
      auto grid = parse_size_list(o.n);
      auto eps = rational_list(o.eps);
      std::ostringstream text;
      text << seed_line << "spec: " << x.canonical() << "\nsystem: " << f.name() << '\n';
      std::string csv;
      std::vector<ThresholdFinding> findings;
      bool consistent;
      if (rs_weak->parsed()) {
        auto p = weak_profile(x, f, grid, eps, o.settle, {o.budget});
        csv = p.csv(x.canonical());
        findings = p.findings;
        consistent = p.consistent();
      } else {
        std::vector<std::pair<std::string, Transducer>> ds;
        for (const auto& name : split_list(o.d)) ds.emplace_back(name, transducer_from_descriptor(name));
        auto p = strong_profile(x, f, ds, grid, eps, o.settle, {o.budget});
        for (std::size_t i = 0; i < p.per_transducer.size(); ++i) {
          std::string part = p.per_transducer[i].csv(x.canonical());
          csv += i == 0 ? part : part.substr(part.find('\n') + 1);
        }
        findings = p.findings;
        consistent = p.consistent();
      }
      for (const auto& fnd : findings)
        text << "eps=" << to_string(fnd.eps) << " last n with C < (1-eps)n: "
             << (fnd.last_violation ? std::to_string(*fnd.last_violation) : std::string("none")) << '\n';
      text << "no violation after n=" << o.settle << ": " << (consistent ? "yes" : "no")
           << " (finite evidence, not a proof)\n";
      sink.emit(rs_weak->parsed() ? "weak" : "strong", csv, text.str(), true);
      return kExitOk;
    }

    if (dim_cmd->parsed()) {
      RealSpec x = RealSpec::parse(o.spec);
      CodecRegistry registry;
      std::vector<CodecPtr> codecs;
      for (const auto& name : o.codecs.empty() ? registry.names() : split_list(o.codecs))
        codecs.push_back(codec_from_descriptor(name, registry));
      auto profile = dim_profile(x, o.base, codecs, parse_size_list(o.n));
      std::ostringstream text;
      text << seed_line << "spec: " << profile.spec << '\n';
      for (const auto& p : profile.points)
        text << "n=" << p.n << " best=" << profile.codecs[p.best_codec] << " ratio=" << to_string(p.best_ratio)
             << " (" << std::setprecision(6) << p.best_ratio.get_d() << ")\n";
      text << "dimension upper bound (min over trailing 25% of grid): " << to_string(profile.estimate()) << " ("
           << profile.estimate().get_d() << ")\n";
      sink.emit("dim", profile.csv(), text.str(), true);
      return kExitOk;
    }

    std::optional<ExperimentResult> result;
    if (ex_sep->parsed()) result = run_separation_example(o.base, o.nmax);
    if (ex_int->parsed()) {
      InterleaveThresholds t;
      t.xy_min = parse_rational(o.xy_min);
      if (!o.z_max.empty()) t.z_max = parse_rational(o.z_max);
      result = run_interleave_experiment(single(parse_size_list(o.n), "--n"), t);
    }
    if (ex_clo->parsed())
      result = run_closure_experiments(RealSpec::parse(o.spec), repsys_from_descriptor(o.f), parse_rational(o.q),
                                       single(parse_size_list(o.n), "--n"), {o.budget});
    if (ex_comp->parsed()) result = run_compose_identity_suite(o.trials, seed);
    if (result) {
      sink.emit(result->experiment, result->csv(), seed_line + result->text(), false);
      return result->passed() ? kExitOk : kExitCheckFailed;
    }

    if (cache_cmd->parsed()) {
      RealSpec x = RealSpec::parse(o.spec);
      auto dir = cache_dir(o.dir);
      DigitCache cache(dir);
      auto p = cache.get(x, o.base, single(parse_size_list(o.n), "--n"));
      out << cache.path_for(x, o.base).string() << " " << p.size() << " digits\n";
      return kExitOk;
    }
    err << "error: incomplete command\n\n" << app.help();
    return kExitUsage;
  } catch (const ResourceError& e) {
    err << "resource budget exceeded: " << e.what() << '\n';
    return kExitResource;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "failed: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace normlab

// scftpl: run, verify and benchmark bandit learners from a JSON experiment config.
//
// Exit codes: 0 success, 1 invalid input, 2 a check failed, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scftpl/bench.hpp"
#include "scftpl/config.hpp"
#include "scftpl/errors.hpp"
#include "scftpl/experiment.hpp"
#include "scftpl/perturbation.hpp"
#include "scftpl/verify.hpp"

namespace {

enum Exit { kOk = 0, kInvalid = 1, kCheckFailed = 2, kNumeric = 3 };

struct Common {
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  cmd->add_option("--out", o.out_dir, "output directory (overrides output.dir)");
  cmd->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,10-20 (overrides seeds)");
  cmd->add_flag("--quiet", o.quiet, "only print errors");
}

scftpl::ExperimentConfig resolve(const Common& o) {
  scftpl::ExperimentConfig c =
      o.config_path.empty() ? scftpl::ExperimentConfig{} : scftpl::load_config(o.config_path);
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (!o.seeds.empty()) c.seeds = scftpl::parse_seed_list(o.seeds);
  return c;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + p.string());
}

int cmd_run(const Common& o) {
  const auto c = resolve(o);
  const auto trace = scftpl::run_experiment(c);
  scftpl::write_run_outputs(c, trace, c.output_dir);
  if (!o.quiet) {
    for (const auto& w : trace.warnings) fmt::print(stderr, "warning: {}\n", w);
    fmt::print("{} {} d={} n={} seeds={} eta={:.6g}\n", scftpl::to_string(c.algorithm),
               scftpl::to_string(c.set), c.dimension, c.horizon, c.seeds.size(), trace.eta);
    fmt::print("final mean regret {:.4f} (se {:.4f}), bound {:.4f}; step violations {}\n",
               trace.final_mean(), trace.final_se(), trace.final_bound(),
               trace.total_violations);
    fmt::print("wrote {}\n", (c.output_dir / "regret.csv").string());
  }
  return kOk;
}

int cmd_verify(const Common& o) {
  const auto c = resolve(o);
  const auto report = scftpl::run_verification(c);
  write_text(c.output_dir / "verify.json", report.to_json());
  if (!o.quiet) {
    for (const auto& ch : report.checks)
      fmt::print("{:<4} {:<40} {:>14.6g} {} {:<14.6g} {}\n", ch.passed ? "PASS" : "FAIL", ch.name,
                 ch.value, ch.relation, ch.threshold, ch.detail);
    fmt::print("wrote {}\n", (c.output_dir / "verify.json").string());
  }
  return report.all_passed() ? kOk : kCheckFailed;
}

int cmd_bench(const Common& o) {
  const auto c = resolve(o);
  const auto report = scftpl::run_bench(c);
  write_text(c.output_dir / "bench.json", report.to_json());
  if (!o.quiet) fmt::print("{}", report.to_table());
  return report.passed() ? kOk : kCheckFailed;
}

int cmd_sample(const Common& o, std::size_t count) {
  auto c = resolve(o);
  c.algorithm = scftpl::Variant::SCFTPL;
  const auto sampler = scftpl::make_sampler(c);
  scftpl::CounterRng rng(c.seeds.front());
  std::string csv;
  for (std::size_t i = 1; i <= c.dimension; ++i) csv += fmt::format("{}xi_{}", i > 1 ? "," : "", i);
  csv += '\n';
  scftpl::Vector xi(c.dimension);
  for (std::size_t k = 0; k < count; ++k) {
    sampler->sample_into(rng, xi);
    for (std::size_t i = 0; i < xi.size(); ++i) csv += fmt::format("{}{}", i ? "," : "", xi[i]);
    csv += '\n';
  }
  write_text(c.output_dir / "samples.csv", csv);
  if (!o.quiet) fmt::print("wrote {} draws to {}\n", count, (c.output_dir / "samples.csv").string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-concordant FTPL and SCRiBLe bandit simulator"};
  app.require_subcommand(1);
  Common run_o, verify_o, bench_o, sample_o;
  std::size_t count = 1000;
  auto* run = app.add_subcommand("run", "multi-seed regret experiment");
  auto* verify = app.add_subcommand("verify", "property checks; nonzero exit on failure");
  auto* bench = app.add_subcommand("bench", "per-round time against dimension");
  auto* sample = app.add_subcommand("sample", "dump perturbation draws as CSV");
  add_common(run, run_o);
  add_common(verify, verify_o);
  add_common(bench, bench_o);
  add_common(sample, sample_o);
  sample->add_option("--count", count, "number of draws")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*verify) return cmd_verify(verify_o);
    if (*bench) return cmd_bench(bench_o);
    if (*sample) return cmd_sample(sample_o, count);
  } catch (const scftpl::ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvalid;
  } catch (const scftpl::NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kNumeric;
  } catch (const std::domain_error& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInvalid;
  }
  return kOk;
}

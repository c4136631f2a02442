#include "scftpl/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

namespace scftpl {

double regret_bound(SetKind set, Variant variant, std::size_t d, std::size_t t, std::size_t n) {
  const double dd = static_cast<double>(d);
  const double tt = static_cast<double>(t);
  const double ln = std::log(static_cast<double>(n));
  if (variant == Variant::SCRiBLe) {
    const double theta = set == SetKind::Hypercube ? dd : 1.0;
    return 2.0 * dd * std::sqrt(theta * tt * ln) + 2.0;
  }
  if (set == SetKind::Hypercube) return dd * std::sqrt(2.0 * tt * ln) + 2.0;
  return dd * std::sqrt(6.0 * tt * ln) + 2.0 + 64.0 * std::numbers::e / (dd * dd) * ln * ln * ln;
}

double violation_rate_bound(std::size_t d, std::size_t n) {
  const double dd = static_cast<double>(d);
  const double ln = std::log(static_cast<double>(n));
  return 32.0 * std::numbers::e / (dd * dd) * ln * ln * ln / static_cast<double>(n);
}

std::shared_ptr<const PerturbationSampler> make_sampler(const ExperimentConfig& c) {
  if (c.algorithm != Variant::SCFTPL) return nullptr;
  const ActionSet set = c.action_set();
  std::shared_ptr<const PerturbationSampler> s;
  if (set.kind() == SetKind::EuclideanBall) {
    auto table = c.radial_cache_dir
                     ? RadialTable::load_or_build(*c.radial_cache_dir, c.dimension, c.radial)
                     : RadialTable::build(c.dimension, c.radial);
    s = std::make_shared<const PerturbationSampler>(
        set, std::make_shared<const RadialTable>(std::move(table)));
  } else {
    s = std::make_shared<const PerturbationSampler>(set);
  }
  if (c.density_scale != 1.0)
    s = std::make_shared<const PerturbationSampler>(s->with_scale(c.density_scale));
  return s;
}

SeedResult run_seed(const ExperimentConfig& c, std::uint64_t seed,
                    const std::vector<Vector>& losses,
                    std::shared_ptr<const PerturbationSampler> sampler) {
  const auto start = std::chrono::steady_clock::now();
  const ActionSet set = c.action_set();
  BanditLearner learner(AlgorithmSpec{c.algorithm, set, c.eta()}, std::move(sampler));
  SeedResult r;
  r.seed = seed;
  r.regret.resize(losses.size());
  r.losses.resize(losses.size());
  Vector prefix(set.dimension(), 0.0);
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= losses.size(); ++t) {
    CounterRng rng = round_stream(seed, t);
    RoundOutcome o;
    try {
      o = learner.step(losses[t - 1], rng);
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("seed {}: run aborted at round {}: {}", seed, t, e.what()));
    }
    cumulative += o.scalar_loss;
    for (std::size_t i = 0; i < prefix.size(); ++i) prefix[i] += losses[t - 1][i];
    // min over K of <Y_t, u> is -phi_K(-Y_t) = -phi_K(Y_t) for these symmetric bodies.
    r.regret[t - 1] = cumulative + set.support(prefix);
    r.losses[t - 1] = o.scalar_loss;
    r.violations += o.step_violation;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

RegretTrace run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const ActionSet set = c.action_set();
  const auto losses = generate(c.adversary, set, c.horizon);
  const auto sampler = make_sampler(c);

  RegretTrace trace;
  trace.eta = c.eta();
  trace.warnings = c.warnings();
  trace.per_seed.resize(c.seeds.size());

  unsigned workers = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, c.seeds.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < c.seeds.size();) {
      try {
        trace.per_seed[k] = run_seed(c, c.seeds[k], losses, sampler);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = c.seeds.size();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t n = c.horizon;
  const double s = static_cast<double>(c.seeds.size());
  trace.mean_regret.assign(n, 0.0);
  trace.se.assign(n, 0.0);
  trace.bound.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (const auto& r : trace.per_seed) sum += r.regret[t];
    const double mean = sum / s;
    double ss = 0.0;
    for (const auto& r : trace.per_seed) ss += (r.regret[t] - mean) * (r.regret[t] - mean);
    trace.mean_regret[t] = mean;
    trace.se[t] = c.seeds.size() > 1 ? std::sqrt(ss / (s - 1.0) / s) : 0.0;
    trace.bound[t] = regret_bound(c.set, c.algorithm, c.dimension, t + 1, n);
  }
  for (const auto& r : trace.per_seed) trace.total_violations += r.violations;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  trace.ns_per_round = 1e9 * trace.wall_seconds / (s * static_cast<double>(n));
  return trace;
}

std::string format_regret_csv(const RegretTrace& trace) {
  std::string out = "t,mean_regret,se,bound\n";
  for (std::size_t t = 0; t < trace.mean_regret.size(); ++t)
    out += fmt::format("{},{},{},{}\n", t + 1, trace.mean_regret[t], trace.se[t], trace.bound[t]);
  return out;
}

std::string format_seed_csv(const SeedResult& r) {
  std::string out = "t,regret,loss\n";
  for (std::size_t t = 0; t < r.regret.size(); ++t)
    out += fmt::format("{},{},{}\n", t + 1, r.regret[t], r.losses[t]);
  return out;
}

std::string format_summary_json(const ExperimentConfig& c, const RegretTrace& trace) {
  using nlohmann::json;
  json j;
  j["config"] = json::parse(to_json(c));
  j["eta"] = trace.eta;
  j["seeds"] = c.seeds.size();
  j["final_mean_regret"] = trace.final_mean();
  j["final_se"] = trace.final_se();
  j["final_bound"] = trace.final_bound();
  j["within_bound"] = trace.final_mean() <= trace.final_bound();
  const double rounds = static_cast<double>(c.seeds.size() * c.horizon);
  json v;
  v["total"] = trace.total_violations;
  v["rate"] = static_cast<double>(trace.total_violations) / rounds;
  if (c.set == SetKind::EuclideanBall && c.algorithm == Variant::SCFTPL && c.horizon >= 2)
    v["rate_bound"] = violation_rate_bound(c.dimension, c.horizon);
  j["step_violations"] = v;
  j["wall_seconds"] = trace.wall_seconds;
  j["ns_per_round"] = trace.ns_per_round;
  j["warnings"] = trace.warnings;
  j["regret_definition"] =
      "realized regret against the best fixed action in hindsight for each prefix, "
      "averaged over seeds; se is the standard error of that mean";
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

void write_run_outputs(const ExperimentConfig& c, const RegretTrace& trace,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "regret.csv", format_regret_csv(trace));
  write_file(dir / "summary.json", format_summary_json(c, trace));
  if (c.per_seed_files)
    for (const auto& r : trace.per_seed)
      write_file(dir / fmt::format("seed_{}.csv", r.seed), format_seed_csv(r));
}

}  // namespace scftpl

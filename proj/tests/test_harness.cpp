#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scftpl/bench.hpp"
#include "scftpl/errors.hpp"
#include "scftpl/experiment.hpp"
#include "scftpl/verify.hpp"

using namespace scftpl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(SCFTPL_TEST_TMP) / "harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const CheckResult* find_check(const VerifyReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(R"({
    "set": "ball", "dimension": 3, "horizon": 500, "algorithm": "scribble",
    "learning_rate": 0.05,
    "adversary": {"kind": "rotating", "angle": 0.2},
    "seeds": [4, 5],
    "output": {"dir": "results", "per_seed": true}
  })");
  CHECK(c.set == SetKind::EuclideanBall);
  CHECK(c.dimension == 3);
  CHECK(c.horizon == 500);
  CHECK(c.algorithm == Variant::SCRiBLe);
  CHECK(c.eta() == 0.05);
  CHECK(c.adversary.kind == AdversaryKind::RotatingDirection);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.per_seed_files);

  const auto d = parse_config("{}");
  CHECK(d.seeds == std::vector<std::uint64_t>{1});
  CHECK(d.eta() == doctest::Approx(std::sqrt(2.0 * std::log(1000.0) / 1000.0)));
  CHECK(parse_config(to_json(c)).horizon == 500);
}

TEST_CASE("config validation reports the offending line") {
  try {
    parse_config("{\n  \"set\": \"hypercube\",\n  \"horizon\": 0\n}");
    FAIL("n = 0 accepted");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
  CHECK_THROWS_AS(parse_config(R"({"sett": "ball"})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"set": "simplex"})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"learning_rate": -1})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"dimension": 2, "adversary": {"base": [0, 0]}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"seeds": []})"), ValidationError);
  CHECK_THROWS_AS(parse_config("{\"set\": "), ValidationError);
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("1,2,7-9") == std::vector<std::uint64_t>{1, 2, 7, 8, 9});
  CHECK(parse_seed_list("42") == std::vector<std::uint64_t>{42});
  CHECK_THROWS_AS(parse_seed_list("3-1"), ValidationError);
  CHECK_THROWS_AS(parse_seed_list("x"), ValidationError);
}

TEST_CASE("precondition warnings") {
  auto c = parse_config(R"({"dimension": 8, "horizon": 200})");
  CHECK(!c.warnings().empty());
  c = parse_config(R"({"dimension": 2, "horizon": 10000})");
  CHECK(c.warnings().empty());
  c = parse_config(R"({"set": "ball", "dimension": 5, "horizon": 300})");
  CHECK(!c.warnings().empty());
}

TEST_CASE("bound expressions") {
  for (std::size_t d : {2u, 5u}) {
    const double dd = double(d);
    for (std::size_t t : {1u, 17u, 10000u}) {
      const double ln = std::log(10000.0);
      CHECK(std::abs(regret_bound(SetKind::Hypercube, Variant::SCFTPL, d, t, 10000) -
                     (dd * std::sqrt(2.0 * t * ln) + 2.0)) <= 1e-9);
      CHECK(std::abs(regret_bound(SetKind::EuclideanBall, Variant::SCFTPL, d, t, 10000) -
                     (dd * std::sqrt(6.0 * t * ln) + 2.0 + 64.0 * std::exp(1.0) / (dd * dd) * ln * ln * ln)) <=
            1e-9);
    }
  }
  CHECK(regret_bound(SetKind::Hypercube, Variant::SCFTPL, 2, 10000, 10000) ==
        doctest::Approx(860.4).epsilon(1e-4));
}

TEST_CASE("run outputs: bound column, aggregation and determinism") {
  auto c = parse_config(R"({"set": "hypercube", "dimension": 3, "horizon": 400,
                            "adversary": {"kind": "random", "base": [0.2, -0.1, 0.05], "seed": 3},
                            "seeds": [1, 2, 3, 4, 5], "output": {"per_seed": true}})");
  const auto dir = scratch("run");
  const auto trace = run_experiment(c);
  write_run_outputs(c, trace, dir / "a");
  REQUIRE(fs::exists(dir / "a" / "regret.csv"));
  REQUIRE(fs::exists(dir / "a" / "summary.json"));

  // Bound column.
  std::ifstream csv(dir / "a" / "regret.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,mean_regret,se,bound");
  std::vector<std::vector<double>> rows;
  while (std::getline(csv, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  REQUIRE(rows.size() == 400);
  for (const auto& row : rows) {
    const double expected = 3.0 * std::sqrt(2.0 * row[0] * std::log(400.0)) + 2.0;
    CHECK(std::abs(row[3] - expected) <= 1e-9);
  }

  // Mean and SE recomputed from the per-seed files.
  std::vector<std::vector<double>> per_seed;
  for (auto s : c.seeds) {
    std::ifstream in(dir / "a" / ("seed_" + std::to_string(s) + ".csv"));
    std::getline(in, line);
    CHECK(line == "t,regret,loss");
    std::vector<double> col;
    while (std::getline(in, line)) col.push_back(std::stod(line.substr(line.find(',') + 1)));
    REQUIRE(col.size() == 400);
    per_seed.push_back(col);
  }
  for (std::size_t t = 0; t < 400; ++t) {
    double mean = 0.0;
    for (const auto& col : per_seed) mean += col[t] / 5.0;
    double ss = 0.0;
    for (const auto& col : per_seed) ss += (col[t] - mean) * (col[t] - mean);
    CHECK(rows[t][1] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(rows[t][2] == doctest::Approx(std::sqrt(ss / 4.0 / 5.0)).epsilon(1e-9));
  }

  // Final regret equals the regret against the overall best action.
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary.contains("final_mean_regret"));

  // Byte-identical on re-run, with any worker count.
  c.threads = 1;
  write_run_outputs(c, run_experiment(c), dir / "b");
  c.threads = 3;
  write_run_outputs(c, run_experiment(c), dir / "c");
  CHECK(slurp(dir / "a" / "regret.csv") == slurp(dir / "b" / "regret.csv"));
  CHECK(slurp(dir / "a" / "regret.csv") == slurp(dir / "c" / "regret.csv"));
  CHECK(slurp(dir / "a" / "seed_4.csv") == slurp(dir / "c" / "seed_4.csv"));
}

TEST_CASE("ball run stays under its bound") {
  auto c = parse_config(R"({"set": "ball", "dimension": 2, "horizon": 2000, "seeds": [1, 2, 3, 4]})");
  const auto trace = run_experiment(c);
  CHECK(trace.final_mean() <= trace.final_bound());
  CHECK(trace.mean_regret.size() == 2000);
  for (double s : trace.se) CHECK(s >= 0.0);
}

TEST_CASE("verification suite passes on clean configurations") {
  for (const char* text :
       {R"({"set": "hypercube", "dimension": 3, "verify": {"samples": 100000, "thetas": 10}})",
        R"({"set": "ball", "dimension": 2, "verify": {"samples": 100000, "thetas": 10}})"}) {
    const auto report = run_verification(parse_config(text));
    for (const auto& c : report.checks) {
      INFO(c.name, " = ", c.value, " vs ", c.threshold, " (", c.detail, ")");
      CHECK(c.passed);
    }
    CHECK(report.all_passed());
    CHECK(nlohmann::json::parse(report.to_json()).is_object());
  }
}

TEST_CASE("ball d=2 checks the K bounds at five points") {
  auto c = parse_config(R"({"set": "ball", "dimension": 2,
      "verify": {"replication": false, "densities": false, "estimators": false, "bregman": false,
                 "samples": 20000}})");
  const auto report = run_verification(c);
  const auto* bounds = find_check(report, "k_function.bounds");
  REQUIRE(bounds != nullptr);
  CHECK(bounds->passed);
  CHECK(bounds->detail.find("{0,.5,1,5,50}") != std::string::npos);
}

TEST_CASE("a 1% density fault fails the replication check") {
  const char* text = R"({"set": "hypercube", "dimension": 3,
      "verify": {"densities": false, "covariance": false, "estimators": false, "bregman": false,
                 "samples": 200000, "thetas": 20},
      "fault_injection": {"density_scale": 1.01}})";
  const auto faulty = run_verification(parse_config(text));
  CHECK_FALSE(faulty.all_passed());
  CHECK_FALSE(find_check(faulty, "replication.chi_square")->passed);

  auto clean = parse_config(text);
  clean.density_scale = 1.0;
  CHECK(run_verification(clean).all_passed());
}

TEST_CASE("chi-square critical values") {
  CHECK(chi_square_critical(1.0, 0.05) == doctest::Approx(3.841459).epsilon(1e-6));
  CHECK(chi_square_critical(60.0, 1e-4) == doctest::Approx(109.50293).epsilon(1e-6));
}

TEST_CASE("bench report") {
  auto c = parse_config(R"({"set": "hypercube", "bench": {"dimensions": [16, 64], "rounds": 50}})");
  const auto report = run_bench(c);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].rounds_per_second > 0.0);
  CHECK(report.rows[1].ratio > 0.0);
  CHECK(report.to_table().find("rounds/s") != std::string::npos);
  CHECK(nlohmann::json::parse(report.to_json())["rows"].size() == 2);
}

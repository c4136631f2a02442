#include "scftpl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "scftpl/errors.hpp"

namespace scftpl {

using nlohmann::json;

double ExperimentConfig::eta() const {
  return learning_rate ? *learning_rate
                       : AlgorithmSpec::auto_learning_rate(algorithm, action_set(), horizon);
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  if (learning_rate || algorithm != Variant::SCFTPL || horizon < 2) return out;
  const double n = static_cast<double>(horizon);
  const double ratio = n / std::log(n);
  const double d = static_cast<double>(dimension);
  if (set == SetKind::Hypercube && ratio < 24.0 * d)
    out.push_back(fmt::format("n/ln n = {:.1f} is below 24d = {:.0f}; the regret bound's "
                              "step-size condition is not guaranteed",
                              ratio, 24.0 * d));
  if (set == SetKind::EuclideanBall && ratio < std::max(2.0 * d * d, 96.0))
    out.push_back(fmt::format("n/ln n = {:.1f} is below max(2d^2, 96) = {:.0f}; the regret "
                              "bound's precondition does not hold",
                              ratio, std::max(2.0 * d * d, 96.0)));
  return out;
}

namespace {

// Locates the line of the first `"key"` occurrence after `from`, for error messages.
class Locator {
 public:
  explicit Locator(std::string_view text) : text_(text) {}
  std::size_t line_of(std::string_view key, std::size_t from = 0) const {
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto pos = text_.find(quoted, from);
    if (pos == std::string_view::npos) return 0;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + pos, '\n'));
  }
  std::size_t offset_of(std::string_view key) const {
    const auto pos = text_.find("\"" + std::string(key) + "\"");
    return pos == std::string_view::npos ? 0 : pos;
  }

 private:
  std::string_view text_;
};

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  if (line) throw ValidationError(fmt::format("line {}: {}", line, msg));
  throw ValidationError(msg);
}

struct Reader {
  const json& obj;
  const Locator& loc;
  std::string scope;   // "" for top level, "adversary" etc. for nested objects
  std::size_t base = 0;

  std::size_t line(std::string_view key) const { return loc.line_of(key, base); }

  void only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        fail(line(k), fmt::format("unknown key '{}{}'", scope.empty() ? "" : scope + ".", k));
    }
  }

  bool has(std::string_view key) const { return obj.contains(std::string(key)); }
  const json& at(std::string_view key) const { return obj.at(std::string(key)); }

  std::string str(std::string_view key) const {
    if (!at(key).is_string()) fail(line(key), fmt::format("'{}' must be a string", key));
    return at(key).get<std::string>();
  }
  bool boolean(std::string_view key) const {
    if (!at(key).is_boolean()) fail(line(key), fmt::format("'{}' must be true or false", key));
    return at(key).get<bool>();
  }
  double number(std::string_view key) const {
    if (!at(key).is_number()) fail(line(key), fmt::format("'{}' must be a number", key));
    const double v = at(key).get<double>();
    if (!std::isfinite(v)) fail(line(key), fmt::format("'{}' must be finite", key));
    return v;
  }
  std::uint64_t count(std::string_view key, std::uint64_t min) const {
    const json& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0))
      fail(line(key), fmt::format("'{}' must be a non-negative integer", key));
    const auto u = v.get<std::uint64_t>();
    if (u < min) fail(line(key), fmt::format("'{}' must be at least {}", key, min));
    return u;
  }
  Reader sub(std::string_view key) const {
    if (!at(key).is_object()) fail(line(key), fmt::format("'{}' must be an object", key));
    return Reader{at(key), loc, std::string(key), loc.offset_of(key)};
  }
};

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  auto parse_u64 = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      throw ValidationError("bad seed '" + std::string(s) + "' in seed list");
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(parse_u64(item));
    } else {
      const auto lo = parse_u64(item.substr(0, dash)), hi = parse_u64(item.substr(dash + 1));
      if (hi < lo || hi - lo > 1000000) throw ValidationError("bad seed range in seed list");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
    start = end + 1;
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ValidationError(fmt::format("line {}: malformed JSON ({})", line, e.what()));
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  const Locator loc(text);
  const Reader top{doc, loc, "", 0};
  top.only({"set", "dimension", "horizon", "algorithm", "learning_rate", "adversary", "seeds",
            "output", "verify", "bench", "radial_table", "fault_injection", "threads"});

  ExperimentConfig c;
  if (top.has("set")) {
    const auto s = top.str("set");
    if (s == "hypercube") c.set = SetKind::Hypercube;
    else if (s == "ball") c.set = SetKind::EuclideanBall;
    else fail(top.line("set"), "'set' must be \"hypercube\" or \"ball\"");
  }
  if (top.has("dimension")) c.dimension = top.count("dimension", 1);
  if (top.has("horizon")) c.horizon = top.count("horizon", 1);
  if (top.has("algorithm")) {
    const auto s = top.str("algorithm");
    if (s == "scftpl") c.algorithm = Variant::SCFTPL;
    else if (s == "scribble") c.algorithm = Variant::SCRiBLe;
    else fail(top.line("algorithm"), "'algorithm' must be \"scftpl\" or \"scribble\"");
  }
  if (top.has("learning_rate")) {
    const json& lr = top.at("learning_rate");
    if (lr.is_string()) {
      if (lr.get<std::string>() != "auto")
        fail(top.line("learning_rate"), "'learning_rate' must be \"auto\" or a positive number");
    } else {
      const double v = top.number("learning_rate");
      if (!(v > 0.0)) fail(top.line("learning_rate"), "'learning_rate' must be positive");
      c.learning_rate = v;
    }
  }
  if (!c.learning_rate && c.horizon < 2)
    fail(top.line("horizon"), "auto learning rate needs a horizon of at least 2");

  if (top.has("adversary")) {
    const Reader a = top.sub("adversary");
    a.only({"kind", "base", "period", "angle", "noise", "seed", "scale"});
    if (a.has("kind")) {
      try {
        c.adversary.kind = adversary_from_string(a.str("kind"));
      } catch (const std::invalid_argument& e) {
        fail(a.line("kind"), e.what());
      }
    }
    if (a.has("base")) {
      const json& b = a.at("base");
      if (!b.is_array()) fail(a.line("base"), "'adversary.base' must be an array of numbers");
      for (const auto& v : b) {
        if (!v.is_number()) fail(a.line("base"), "'adversary.base' must be an array of numbers");
        c.adversary.base.push_back(v.get<double>());
      }
      if (c.adversary.base.size() != c.dimension)
        fail(a.line("base"), fmt::format("'adversary.base' has {} entries, dimension is {}",
                                         c.adversary.base.size(), c.dimension));
    }
    if (a.has("period")) c.adversary.period = a.count("period", 1);
    if (a.has("angle")) c.adversary.angle = a.number("angle");
    if (a.has("noise")) {
      c.adversary.noise = a.number("noise");
      if (c.adversary.noise < 0.0) fail(a.line("noise"), "'adversary.noise' must be >= 0");
    }
    if (a.has("seed")) c.adversary.seed = a.count("seed", 0);
    if (a.has("scale")) {
      c.adversary.scale = a.number("scale");
      if (!(c.adversary.scale > 0.0 && c.adversary.scale <= 1.0))
        fail(a.line("scale"), "'adversary.scale' must lie in (0, 1]");
    }
    if (c.adversary.kind != AdversaryKind::SeededRandom && !c.adversary.base.empty() &&
        std::all_of(c.adversary.base.begin(), c.adversary.base.end(),
                    [](double v) { return v == 0.0; }))
      fail(a.line("base"), "'adversary.base' is zero and cannot be normalized");
  }

  if (top.has("seeds")) {
    const json& s = top.at("seeds");
    if (!s.is_array() || s.empty())
      fail(top.line("seeds"), "'seeds' must be a non-empty array of non-negative integers");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned())
        fail(top.line("seeds"), "'seeds' must be a non-empty array of non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (top.has("output")) {
    const Reader o = top.sub("output");
    o.only({"dir", "per_seed"});
    if (o.has("dir")) c.output_dir = o.str("dir");
    if (o.has("per_seed")) c.per_seed_files = o.boolean("per_seed");
  }
  if (top.has("verify")) {
    const Reader v = top.sub("verify");
    v.only({"replication", "densities", "covariance", "estimators", "bregman", "samples",
            "thetas"});
    if (v.has("replication")) c.verify.replication = v.boolean("replication");
    if (v.has("densities")) c.verify.densities = v.boolean("densities");
    if (v.has("covariance")) c.verify.covariance = v.boolean("covariance");
    if (v.has("estimators")) c.verify.estimators = v.boolean("estimators");
    if (v.has("bregman")) c.verify.bregman = v.boolean("bregman");
    if (v.has("samples")) c.verify.samples = v.count("samples", 1000);
    if (v.has("thetas")) c.verify.thetas = v.count("thetas", 1);
  }
  if (top.has("bench")) {
    const Reader b = top.sub("bench");
    b.only({"dimensions", "rounds", "max_ratio"});
    if (b.has("dimensions")) {
      const json& ds = b.at("dimensions");
      if (!ds.is_array() || ds.size() < 2)
        fail(b.line("dimensions"), "'bench.dimensions' must list at least two dimensions");
      c.bench.dimensions.clear();
      for (const auto& v : ds) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
          fail(b.line("dimensions"), "'bench.dimensions' entries must be positive integers");
        c.bench.dimensions.push_back(v.get<std::size_t>());
      }
    }
    if (b.has("rounds")) c.bench.rounds = b.count("rounds", 10);
    if (b.has("max_ratio")) {
      c.bench.max_ratio = b.number("max_ratio");
      if (!(c.bench.max_ratio > 0.0)) fail(b.line("max_ratio"), "'bench.max_ratio' must be > 0");
    }
  }
  if (top.has("radial_table")) {
    const Reader r = top.sub("radial_table");
    r.only({"nodes", "tail_mass", "cache_dir"});
    if (r.has("nodes")) c.radial.nodes = r.count("nodes", 16);
    if (r.has("tail_mass")) {
      c.radial.tail_mass = r.number("tail_mass");
      if (!(c.radial.tail_mass > c.radial.head_mass && c.radial.tail_mass <= 1e-6))
        fail(r.line("tail_mass"), "'radial_table.tail_mass' must lie in (1e-12, 1e-6]");
    }
    if (r.has("cache_dir")) c.radial_cache_dir = r.str("cache_dir");
  }
  if (top.has("fault_injection")) {
    const Reader f = top.sub("fault_injection");
    f.only({"density_scale"});
    if (f.has("density_scale")) {
      c.density_scale = f.number("density_scale");
      if (!(c.density_scale > 0.0))
        fail(f.line("density_scale"), "'fault_injection.density_scale' must be positive");
    }
  }
  if (top.has("threads")) c.threads = static_cast<unsigned>(top.count("threads", 0));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["set"] = std::string(to_string(c.set));
  j["dimension"] = c.dimension;
  j["horizon"] = c.horizon;
  j["algorithm"] = std::string(to_string(c.algorithm));
  if (c.learning_rate) j["learning_rate"] = *c.learning_rate;
  else j["learning_rate"] = "auto";
  json adv;
  adv["kind"] = std::string(to_string(c.adversary.kind));
  if (!c.adversary.base.empty()) adv["base"] = c.adversary.base;
  if (c.adversary.period) adv["period"] = c.adversary.period;
  adv["angle"] = c.adversary.angle;
  adv["noise"] = c.adversary.noise;
  adv["seed"] = c.adversary.seed;
  adv["scale"] = c.adversary.scale;
  j["adversary"] = adv;
  j["seeds"] = c.seeds;
  j["output"] = {{"dir", c.output_dir.string()}, {"per_seed", c.per_seed_files}};
  j["radial_table"] = {{"nodes", c.radial.nodes}, {"tail_mass", c.radial.tail_mass}};
  if (c.radial_cache_dir) j["radial_table"]["cache_dir"] = c.radial_cache_dir->string();
  j["fault_injection"] = {{"density_scale", c.density_scale}};
  return j.dump(2);
}

}  // namespace scftpl

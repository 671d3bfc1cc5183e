#include "dqaem/config.hpp"

#include "dqaem/io.hpp"
#include "dqaem/seeds.hpp"

#include <cmath>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <string>

namespace dqaem {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw FormatError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw FormatError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

// tau accepts a number or the string "inf" (constant schedule).
void read_tau(const json& obj, double& tau) {
  if (!obj.contains("tau")) return;
  const auto& v = obj.at("tau");
  if (v.is_string() && v.get<std::string>() == "inf") {
    tau = std::numeric_limits<double>::infinity();
  } else {
    tau = v.get<double>();
  }
}

json tau_json(double tau) { return std::isfinite(tau) ? json(tau) : json("inf"); }

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  try {
    check_keys(j, "config",
               {"schema_version", "seed", "jobs", "timestamp", "generator", "estimator",
                "benchmark", "landscape", "trotter"});
    if (!j.contains("schema_version")) throw FormatError("config lacks schema_version");
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != kSchemaVersion) {
      throw FormatError("unsupported schema_version " + std::to_string(c.schema_version));
    }
    read(j, "seed", c.seed);
    read(j, "jobs", c.jobs);
    read(j, "timestamp", c.timestamp);

    if (j.contains("generator")) {
      const auto& g = j.at("generator");
      check_keys(g, "generator", {"preset", "k", "d", "n", "radius", "stddev"});
      read(g, "preset", c.generator.preset);
      read(g, "k", c.generator.k);
      read(g, "d", c.generator.d);
      read(g, "n", c.generator.n);
      read(g, "radius", c.generator.radius);
      read(g, "stddev", c.generator.stddev);
    }
    if (j.contains("estimator")) {
      const auto& e = j.at("estimator");
      check_keys(e, "estimator",
                 {"mode", "beta0", "gamma0", "tau", "beta_fixed", "max_iterations", "tolerance",
                  "empty_component_policy", "covariance_floor", "k"});
      auto& s = c.estimator;
      if (e.contains("mode")) s.mode = parse_mode(e.at("mode").get<std::string>());
      read(e, "beta0", s.schedule.beta0);
      read(e, "gamma0", s.schedule.gamma0);
      read_tau(e, s.schedule.tau);
      read(e, "beta_fixed", s.schedule.beta_fixed);
      read(e, "max_iterations", s.max_iterations);
      read(e, "tolerance", s.tolerance);
      if (e.contains("empty_component_policy")) {
        s.empty_component_policy =
            parse_policy(e.at("empty_component_policy").get<std::string>());
      }
      read(e, "covariance_floor", s.covariance_floor);
      read(e, "k", s.k);
    }
    if (j.contains("benchmark")) {
      const auto& b = j.at("benchmark");
      check_keys(b, "benchmark",
                 {"trials", "modes", "success_threshold", "dsaem_beta0", "dqaem_gamma0", "tau"});
      read(b, "trials", c.benchmark.trials);
      if (b.contains("modes")) {
        c.benchmark.modes.clear();
        for (const auto& m : b.at("modes")) c.benchmark.modes.push_back(parse_mode(m.get<std::string>()));
      }
      read(b, "success_threshold", c.benchmark.success_threshold);
      read(b, "dsaem_beta0", c.benchmark.dsaem_beta0);
      read(b, "dqaem_gamma0", c.benchmark.dqaem_gamma0);
      read_tau(b, c.benchmark.tau);
    }
    if (j.contains("landscape")) {
      const auto& l = j.at("landscape");
      check_keys(l, "landscape", {"beta", "gamma", "min", "max", "points"});
      read(l, "beta", c.landscape.beta);
      read(l, "gamma", c.landscape.gamma);
      read(l, "min", c.landscape.min);
      read(l, "max", c.landscape.max);
      read(l, "points", c.landscape.points);
    }
    if (j.contains("trotter")) {
      const auto& t = j.at("trotter");
      check_keys(t, "trotter", {"energies", "beta", "gamma", "slices"});
      read(t, "energies", c.trotter.energies);
      read(t, "beta", c.trotter.beta);
      read(t, "gamma", c.trotter.gamma);
      read(t, "slices", c.trotter.slices);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  } catch (const InvalidArgumentError& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

json run_config_to_json(const RunConfig& c) {
  json modes = json::array();
  for (Mode m : c.benchmark.modes) modes.push_back(to_string(m));
  const auto& e = c.estimator;
  return {
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"timestamp", c.timestamp},
      {"generator",
       {{"preset", c.generator.preset},
        {"k", c.generator.k},
        {"d", c.generator.d},
        {"n", c.generator.n},
        {"radius", c.generator.radius},
        {"stddev", c.generator.stddev}}},
      {"estimator",
       {{"mode", to_string(e.mode)},
        {"beta0", e.schedule.beta0},
        {"gamma0", e.schedule.gamma0},
        {"tau", tau_json(e.schedule.tau)},
        {"beta_fixed", e.schedule.beta_fixed},
        {"max_iterations", e.max_iterations},
        {"tolerance", e.tolerance},
        {"empty_component_policy", to_string(e.empty_component_policy)},
        {"covariance_floor", e.covariance_floor},
        {"k", e.k}}},
      {"benchmark",
       {{"trials", c.benchmark.trials},
        {"modes", modes},
        {"success_threshold", c.benchmark.success_threshold},
        {"dsaem_beta0", c.benchmark.dsaem_beta0},
        {"dqaem_gamma0", c.benchmark.dqaem_gamma0},
        {"tau", tau_json(c.benchmark.tau)}}},
      {"landscape",
       {{"beta", c.landscape.beta},
        {"gamma", c.landscape.gamma},
        {"min", c.landscape.min},
        {"max", c.landscape.max},
        {"points", c.landscape.points}}},
      {"trotter",
       {{"energies", c.trotter.energies},
        {"beta", c.trotter.beta},
        {"gamma", c.trotter.gamma},
        {"slices", c.trotter.slices}}},
  };
}

EstimatorConfig make_estimator_config(const RunConfig& c) {
  EstimatorConfig out;
  out.mode = c.estimator.mode;
  out.schedule = c.estimator.schedule;
  out.max_iterations = c.estimator.max_iterations;
  out.tolerance = c.estimator.tolerance;
  out.empty_component_policy = c.estimator.empty_component_policy;
  out.covariance_floor = c.estimator.covariance_floor;
  out.seed = derive_seed(c.seed, SeedStream::kFit, 0);
  return out;
}

std::vector<NamedConfig> make_benchmark_configs(const RunConfig& c) {
  std::vector<NamedConfig> out;
  for (Mode m : c.benchmark.modes) {
    EstimatorConfig e;
    e.mode = m;
    e.max_iterations = c.estimator.max_iterations;
    e.tolerance = c.estimator.tolerance;
    e.empty_component_policy = c.estimator.empty_component_policy;
    e.covariance_floor = c.estimator.covariance_floor;
    e.schedule.tau = c.benchmark.tau;
    if (m == Mode::kDSAEM) e.schedule.beta0 = c.benchmark.dsaem_beta0;
    if (m == Mode::kDQAEM) {
      e.schedule.gamma0 = c.benchmark.dqaem_gamma0;
      e.schedule.beta_fixed = true;
    }
    out.push_back({std::string(to_string(m)), e});
  }
  return out;
}

GeneratorSpec make_generator_spec(const RunConfig& c) {
  if (c.generator.preset == "barrier") return barrier_instance_spec(c.seed);
  if (c.generator.preset != "ring") {
    throw FormatError("unknown generator preset '" + c.generator.preset + "'");
  }
  return ring_spec(c.generator.k, c.generator.d, c.generator.n, c.seed, c.generator.radius,
                   c.generator.stddev);
}

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("DQAEM_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace dqaem

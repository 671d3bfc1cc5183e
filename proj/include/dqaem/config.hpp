#pragma once

#include "dqaem/estimator.hpp"
#include "dqaem/experiments.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dqaem {

struct GeneratorSettings {
  std::string preset = "ring";  // "ring" or "barrier"
  int k = 7;
  int d = 2;
  int n = 700;
  double radius = kDefaultRingRadius;
  double stddev = kDefaultRingStddev;
};

struct EstimatorSettings {
  Mode mode = Mode::kEM;
  AnnealingSchedule schedule;
  int max_iterations = 1000;
  double tolerance = 1e-8;
  EmptyComponentPolicy empty_component_policy = EmptyComponentPolicy::kAbort;
  double covariance_floor = kDefaultCovarianceFloor;
  /// Components for the random initialiser; 0 = number of distinct labels.
  int k = 0;
};

struct BenchmarkSettings {
  int trials = 300;
  std::vector<Mode> modes = {Mode::kEM, Mode::kDSAEM, Mode::kDQAEM};
  double success_threshold = 1.0;
  double dsaem_beta0 = 0.7;
  double dqaem_gamma0 = 1.2;
  double tau = 0.95;
};

struct LandscapeSettings {
  double beta = 1.0;
  double gamma = 0.0;
  double min = -6.0;
  double max = 8.0;
  int points = 101;
};

struct TrotterSettings {
  std::vector<double> energies = {0.5, 1.0, 2.0};
  double beta = 1.0;
  double gamma = 0.8;
  std::vector<int> slices = {16, 64, 256, 1024};
};

/// Declarative run configuration. Every field has a default; files must
/// carry `schema_version` and may not contain unknown keys.
struct RunConfig {
  int schema_version = 1;
  std::uint64_t seed = 1;
  /// 0 selects the DQAEM_JOBS environment variable, else 1.
  int jobs = 0;
  bool timestamp = true;
  GeneratorSettings generator;
  EstimatorSettings estimator;
  BenchmarkSettings benchmark;
  LandscapeSettings landscape;
  TrotterSettings trotter;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

/// Estimator config for `fit`, seeded from the top-level seed.
EstimatorConfig make_estimator_config(const RunConfig& config);

/// Named configs for `benchmark` built from the benchmark settings.
std::vector<NamedConfig> make_benchmark_configs(const RunConfig& config);

GeneratorSpec make_generator_spec(const RunConfig& config);

/// Job count from `jobs`, the DQAEM_JOBS environment variable, or 1.
int resolve_jobs(int jobs);

}  // namespace dqaem

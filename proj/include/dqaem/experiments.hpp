#pragma once

#include "dqaem/estimator.hpp"
#include "dqaem/gmm.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dqaem {

// ---------------------------------------------------------------------------
// Synthetic data

struct GeneratorSpec {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  int n = 0;
  std::uint64_t seed = 0;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

void validate_generator_spec(const GeneratorSpec& spec);

/// Draws N i.i.d. points: a component by weight, then a point from it.
/// Records labels (0-based) and the generating mixture. Deterministic in seed.
Dataset generate_dataset(const GeneratorSpec& spec);

/// K equal-weight isotropic components with means evenly spaced on a circle
/// of `radius` in the first two coordinates (d >= 2), or on a line of spacing
/// `radius` when d == 1.
GeneratorSpec ring_spec(int components, int dim, int n, std::uint64_t seed,
                        double radius, double stddev);

/// Version tag of the bundled benchmark spec; bump on any parameter change.
inline constexpr int kDefaultRingSpecVersion = 1;
inline constexpr double kDefaultRingRadius = 4.0;
inline constexpr double kDefaultRingStddev = 1.0;

/// Bundled 7-component 2-d benchmark data set (N = 700).
GeneratorSpec default_ring_spec(std::uint64_t seed = 0);

/// Bundled two-component 1-d landscape instance: means {-2, 4}, weights
/// (0.7, 0.3), variances (1, 2.25), N = 200.
GeneratorSpec barrier_instance_spec(std::uint64_t seed = 0);

/// Ground-truth weights and covariances of the barrier instance with means
/// set to {mu1, mu2}.
MixtureParams barrier_instance_params(double mu1, double mu2);

/// Starting point {2.0, -4.0}, inside the local-optimum basin.
MixtureParams barrier_instance_init();

/// Annealing schedule that carries DQAEM across the barrier on that instance.
EstimatorConfig barrier_dqaem_config();

// ---------------------------------------------------------------------------
// Success-ratio benchmark

struct NamedConfig {
  std::string name;
  EstimatorConfig config;
};

/// The three estimators with their reference schedules: EM; DSAEM with
/// beta0 = 0.7; DQAEM with gamma0 = 1.2 and beta fixed at 1; tau = 0.95.
std::vector<NamedConfig> reference_configs();

/// Produces the trial's initial parameters from its init-stream seed.
using InitSampler = std::function<MixtureParams(const Dataset&, std::uint64_t)>;

/// `random_init` with K components.
InitSampler default_init_sampler(int components);

struct BenchmarkOptions {
  int trials = 300;
  double success_threshold = 1.0;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct TrialOutcome {
  double final_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<FailureReason> failure;
};

struct EstimatorSummary {
  std::string name;
  Mode mode = Mode::kEM;
  int trials = 0;
  int successes = 0;
  int failures = 0;
  double success_ratio = 0.0;
  double mean_final_objective = 0.0;
  double mean_iterations = 0.0;
  std::vector<TrialOutcome> outcomes;
};

struct BenchmarkReport {
  std::vector<EstimatorSummary> estimators;
  double success_threshold = 0.0;
  double best_objective = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// Runs every config from the same per-trial initialisations. A trial
/// succeeds when it did not fail and its final log-likelihood is within
/// `success_threshold` of the best final value over all trials and
/// estimators. Throws EmptyReportError when every trial failed.
BenchmarkReport run_benchmark(const Dataset& data, std::span<const NamedConfig> configs,
                              const BenchmarkOptions& options, const InitSampler& sampler);

/// Recomputes successes and ratios for another threshold.
BenchmarkReport rescore(const BenchmarkReport& report, double success_threshold);

// ---------------------------------------------------------------------------
// Free-energy landscapes

/// Addresses mean coordinate `coordinate` of component `component`.
struct MeanSelector {
  int component = 0;
  int coordinate = 0;
};

struct GridAxis {
  double start = 0.0;
  double step = 1.0;
  int count = 0;

  double at(int i) const { return start + step * i; }
};

/// Axis of `count` nodes spanning [lo, hi].
GridAxis make_axis(double lo, double hi, int count);

struct LandscapeGrid {
  GridAxis axis1;
  GridAxis axis2;
  /// values(i, j) at (axis1.at(i), axis2.at(j)).
  Matrix values;
  double beta = 1.0;
  double gamma = 0.0;
};

LandscapeGrid landscape(const Dataset& data, const MixtureParams& base,
                        MeanSelector first, MeanSelector second, const GridAxis& axis1,
                        const GridAxis& axis2, double beta, double gamma);

struct GridPeak {
  int i = 0;
  int j = 0;
  double value = 0.0;
};

/// Nodes strictly greater than every existing 8-neighbour; ties disqualify.
std::vector<GridPeak> strict_local_maxima(const LandscapeGrid& grid);

// ---------------------------------------------------------------------------
// Trajectories

std::vector<FitResult> trajectory_experiment(const Dataset& data, const MixtureParams& init,
                                             std::span<const EstimatorConfig> configs,
                                             FrozenParts frozen = {});

}  // namespace dqaem

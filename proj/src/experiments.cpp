#include "dqaem/experiments.hpp"

#include "dqaem/errors.hpp"
#include "dqaem/quantum.hpp"
#include "dqaem/seeds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace dqaem {

void validate_generator_spec(const GeneratorSpec& spec) {
  const int k = spec.components();
  if (k < 1) throw InvalidArgumentError("generator needs at least one component");
  if (static_cast<int>(spec.means.size()) != k ||
      static_cast<int>(spec.covariances.size()) != k) {
    throw InvalidArgumentError("generator weights, means and covariances differ in length");
  }
  if (spec.n < k) throw InvalidArgumentError("generator needs N >= K");
  // Reuses the mixture invariants (weights, shapes, SPD covariances).
  std::vector<GaussianComponent> comps;
  for (int c = 0; c < k; ++c) comps.push_back({spec.weights[c], spec.means[c], spec.covariances[c]});
  static_cast<void>(MixtureParams(std::move(comps)));
}

Dataset generate_dataset(const GeneratorSpec& spec) {
  validate_generator_spec(spec);
  const int k = spec.components();
  const int d = spec.dim();
  std::vector<GaussianComponent> comps;
  std::vector<Matrix> factors;
  for (int c = 0; c < k; ++c) {
    comps.push_back({spec.weights[c], spec.means[c], spec.covariances[c]});
    factors.push_back(Eigen::LLT<Matrix>(spec.covariances[c]).matrixL());
  }

  Rng rng(derive_seed(spec.seed, SeedStream::kData, 0));
  std::discrete_distribution<int> pick(spec.weights.begin(), spec.weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.points.resize(spec.n, d);
  data.labels.resize(spec.n);
  Vector z(d);
  for (int i = 0; i < spec.n; ++i) {
    const int c = pick(rng);
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    data.points.row(i) = (spec.means[c] + factors[c] * z).transpose();
    data.labels[i] = c;
  }
  data.ground_truth.emplace(std::move(comps));
  return data;
}

GeneratorSpec ring_spec(int components, int dim, int n, std::uint64_t seed, double radius,
                        double stddev) {
  if (components < 1 || dim < 1) throw InvalidArgumentError("ring spec needs K, d >= 1");
  GeneratorSpec spec;
  spec.n = n;
  spec.seed = seed;
  for (int k = 0; k < components; ++k) {
    Vector mean = Vector::Zero(dim);
    if (dim >= 2) {
      const double angle = 2.0 * std::numbers::pi * k / components;
      mean(0) = radius * std::cos(angle);
      mean(1) = radius * std::sin(angle);
    } else {
      mean(0) = radius * (k - 0.5 * (components - 1));
    }
    spec.weights.push_back(1.0 / components);
    spec.means.push_back(mean);
    spec.covariances.push_back(stddev * stddev * Matrix::Identity(dim, dim));
  }
  return spec;
}

GeneratorSpec default_ring_spec(std::uint64_t seed) {
  return ring_spec(7, 2, 700, seed, kDefaultRingRadius, kDefaultRingStddev);
}

GeneratorSpec barrier_instance_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.weights = {0.7, 0.3};
  spec.means = {Vector::Constant(1, -2.0), Vector::Constant(1, 4.0)};
  spec.covariances = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.25)};
  spec.n = 200;
  spec.seed = seed;
  return spec;
}

MixtureParams barrier_instance_params(double mu1, double mu2) {
  const GeneratorSpec spec = barrier_instance_spec();
  return MixtureParams({{spec.weights[0], Vector::Constant(1, mu1), spec.covariances[0]},
                        {spec.weights[1], Vector::Constant(1, mu2), spec.covariances[1]}});
}

MixtureParams barrier_instance_init() { return barrier_instance_params(2.0, -4.0); }

EstimatorConfig barrier_dqaem_config() {
  EstimatorConfig config;
  config.mode = Mode::kDQAEM;
  config.schedule = {.beta0 = 1.0, .gamma0 = 10.0, .tau = 5.0, .beta_fixed = true};
  return config;
}

std::vector<NamedConfig> reference_configs() {
  EstimatorConfig em;
  em.mode = Mode::kEM;
  EstimatorConfig dsaem;
  dsaem.mode = Mode::kDSAEM;
  dsaem.schedule = {.beta0 = 0.7, .gamma0 = 0.0, .tau = 0.95, .beta_fixed = false};
  EstimatorConfig dqaem;
  dqaem.mode = Mode::kDQAEM;
  dqaem.schedule = {.beta0 = 1.0, .gamma0 = 1.2, .tau = 0.95, .beta_fixed = true};
  return {{"em", em}, {"dsaem", dsaem}, {"dqaem", dqaem}};
}

InitSampler default_init_sampler(int components) {
  return [components](const Dataset& data, std::uint64_t seed) {
    return random_init(data, components, seed);
  };
}

namespace {

void score(BenchmarkReport& report) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& est : report.estimators) {
    for (const auto& o : est.outcomes) {
      if (!o.failure) {
        best = std::max(best, o.final_log_likelihood);
        any = true;
      }
    }
  }
  if (!any) throw EmptyReportError("every benchmark trial failed");
  report.best_objective = best;
  const double cutoff = best - report.success_threshold;
  for (auto& est : report.estimators) {
    est.trials = static_cast<int>(est.outcomes.size());
    est.successes = 0;
    est.failures = 0;
    double sum_obj = 0.0;
    double sum_iter = 0.0;
    int ok = 0;
    for (const auto& o : est.outcomes) {
      sum_iter += o.iterations;
      if (o.failure) {
        ++est.failures;
        continue;
      }
      ++ok;
      sum_obj += o.final_log_likelihood;
      if (o.final_log_likelihood >= cutoff) ++est.successes;
    }
    est.success_ratio = est.trials > 0 ? static_cast<double>(est.successes) / est.trials : 0.0;
    est.mean_final_objective =
        ok > 0 ? sum_obj / ok : std::numeric_limits<double>::quiet_NaN();
    est.mean_iterations = est.trials > 0 ? sum_iter / est.trials : 0.0;
  }
}

}  // namespace

BenchmarkReport run_benchmark(const Dataset& data, std::span<const NamedConfig> configs,
                              const BenchmarkOptions& options, const InitSampler& sampler) {
  validate_dataset(data);
  if (options.trials < 1) throw InvalidArgumentError("benchmark needs at least one trial");
  if (configs.empty()) throw InvalidArgumentError("benchmark needs at least one estimator");
  if (!(options.success_threshold >= 0.0)) {
    throw InvalidArgumentError("success threshold must be non-negative");
  }
  for (const auto& c : configs) validate_config(c.config);

  const int n_est = static_cast<int>(configs.size());
  BenchmarkReport report;
  report.trials = options.trials;
  report.seed = options.seed;
  report.success_threshold = options.success_threshold;
  report.estimators.resize(n_est);
  for (int e = 0; e < n_est; ++e) {
    report.estimators[e].name = configs[e].name;
    report.estimators[e].mode = configs[e].config.mode;
    report.estimators[e].outcomes.resize(options.trials);
  }

  auto run_trial = [&](int trial) {
    const MixtureParams init =
        sampler(data, derive_seed(options.seed, SeedStream::kInit, trial));
    for (int e = 0; e < n_est; ++e) {
      EstimatorConfig config = configs[e].config;
      config.seed = derive_seed(options.seed, SeedStream::kFit,
                                static_cast<std::uint64_t>(trial) * n_est + e);
      const FitResult fit = run_fit(data, init, config);
      TrialOutcome out;
      out.final_log_likelihood = fit.final_log_likelihood;
      out.iterations = fit.iterations;
      out.converged = fit.converged;
      out.failure = fit.failure_reason;
      report.estimators[e].outcomes[trial] = out;
    }
  };

  const int jobs = std::clamp(options.jobs, 1, options.trials);
  if (jobs == 1) {
    for (int t = 0; t < options.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (int t = next++; t < options.trials; t = next++) run_trial(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : workers) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  score(report);
  return report;
}

BenchmarkReport rescore(const BenchmarkReport& report, double success_threshold) {
  if (!(success_threshold >= 0.0)) {
    throw InvalidArgumentError("success threshold must be non-negative");
  }
  BenchmarkReport out = report;
  out.success_threshold = success_threshold;
  score(out);
  return out;
}

GridAxis make_axis(double lo, double hi, int count) {
  if (count < 1) throw InvalidArgumentError("grid axis needs at least one node");
  if (count == 1) return {lo, 0.0, 1};
  return {lo, (hi - lo) / (count - 1), count};
}

LandscapeGrid landscape(const Dataset& data, const MixtureParams& base, MeanSelector first,
                        MeanSelector second, const GridAxis& axis1, const GridAxis& axis2,
                        double beta, double gamma) {
  if (axis1.count < 1 || axis2.count < 1) throw EmptyInputError("landscape grid is empty");
  for (const auto& sel : {first, second}) {
    if (sel.component < 0 || sel.component >= base.size() || sel.coordinate < 0 ||
        sel.coordinate >= base.dim()) {
      throw InvalidArgumentError("landscape selector is out of range");
    }
  }
  if (first.component == second.component && first.coordinate == second.coordinate) {
    throw InvalidArgumentError("landscape selectors must address different entries");
  }

  LandscapeGrid grid{axis1, axis2, Matrix(axis1.count, axis2.count), beta, gamma};
  std::vector<GaussianComponent> comps(base.components().begin(), base.components().end());
  for (int i = 0; i < axis1.count; ++i) {
    comps[first.component].mean(first.coordinate) = axis1.at(i);
    for (int j = 0; j < axis2.count; ++j) {
      comps[second.component].mean(second.coordinate) = axis2.at(j);
      grid.values(i, j) = negative_free_energy(data, MixtureParams(comps), beta, gamma);
    }
  }
  return grid;
}

std::vector<GridPeak> strict_local_maxima(const LandscapeGrid& grid) {
  const Matrix& v = grid.values;
  std::vector<GridPeak> peaks;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1 && peak; ++dj) {
          if (di == 0 && dj == 0) continue;
          const Eigen::Index a = i + di;
          const Eigen::Index b = j + dj;
          if (a < 0 || b < 0 || a >= v.rows() || b >= v.cols()) continue;
          if (!(v(i, j) > v(a, b))) peak = false;
        }
      }
      if (peak) peaks.push_back({static_cast<int>(i), static_cast<int>(j), v(i, j)});
    }
  }
  return peaks;
}

std::vector<FitResult> trajectory_experiment(const Dataset& data, const MixtureParams& init,
                                             std::span<const EstimatorConfig> configs,
                                             FrozenParts frozen) {
  std::vector<FitResult> out;
  out.reserve(configs.size());
  for (const auto& config : configs) {
    out.push_back(fit_with_frozen(data, init, config, frozen));
  }
  return out;
}

}  // namespace dqaem

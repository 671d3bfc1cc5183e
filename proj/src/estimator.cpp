#include "dqaem/estimator.hpp"

#include "dqaem/errors.hpp"
#include "dqaem/quantum.hpp"
#include "dqaem/seeds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dqaem {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kEM: return "em";
    case Mode::kDSAEM: return "dsaem";
    case Mode::kDQAEM: return "dqaem";
  }
  return "unknown";
}

std::string_view to_string(EmptyComponentPolicy policy) {
  switch (policy) {
    case EmptyComponentPolicy::kAbort: return "abort";
    case EmptyComponentPolicy::kReseed: return "reseed";
  }
  return "unknown";
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::kEmptyComponent: return "empty_component";
    case FailureReason::kNumericalRange: return "numerical_range";
    case FailureReason::kSingularCovariance: return "singular_covariance";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "em") return Mode::kEM;
  if (text == "dsaem") return Mode::kDSAEM;
  if (text == "dqaem") return Mode::kDQAEM;
  throw InvalidArgumentError("unknown mode '" + std::string(text) + "'");
}

EmptyComponentPolicy parse_policy(std::string_view text) {
  if (text == "abort") return EmptyComponentPolicy::kAbort;
  if (text == "reseed") return EmptyComponentPolicy::kReseed;
  throw InvalidArgumentError("unknown empty-component policy '" + std::string(text) + "'");
}

void validate_config(const EstimatorConfig& config) {
  validate_schedule(config.schedule);
  if (config.max_iterations < 0) throw InvalidArgumentError("max_iterations must be >= 0");
  if (!(config.tolerance >= 0.0)) throw InvalidArgumentError("tolerance must be >= 0");
  if (!(config.covariance_floor >= 0.0)) {
    throw InvalidArgumentError("covariance floor must be >= 0");
  }
}

AnnealingSchedule effective_schedule(const EstimatorConfig& config) {
  AnnealingSchedule s = config.schedule;
  switch (config.mode) {
    case Mode::kEM:
      s.beta0 = 1.0;
      s.gamma0 = 0.0;
      s.beta_fixed = true;
      break;
    case Mode::kDSAEM:
      s.gamma0 = 0.0;
      break;
    case Mode::kDQAEM:
      break;
  }
  return s;
}

namespace {

class Updater {
 public:
  Updater(const Dataset& data, const EstimatorConfig& config, FrozenParts frozen)
      : data_(data), config_(config), frozen_(frozen),
        rng_(derive_seed(config.seed, SeedStream::kFit, 0)) {}

  MixtureParams operator()(const MixtureParams& current, Responsibilities resp,
                           int& reseeds) {
    const int n = data_.size();
    for (int attempt = 0;; ++attempt) {
      try {
        return update(current, resp);
      } catch (const EmptyComponentError& e) {
        if (config_.empty_component_policy == EmptyComponentPolicy::kAbort ||
            attempt >= 4 * current.size()) {
          throw;
        }
        std::uniform_int_distribution<int> pick(0, n - 1);
        const int i = pick(rng_);
        resp.values.row(i).setZero();
        resp.values(i, e.component()) = 1.0;
        ++reseeds;
      }
    }
  }

 private:
  MixtureParams update(const MixtureParams& current, const Responsibilities& resp) const {
    if (frozen_.weights && frozen_.covariances) return m_step_means(data_, resp, current);
    MixtureParams next = m_step(data_, resp, config_.covariance_floor);
    if (!frozen_.weights && !frozen_.covariances) return next;
    std::vector<GaussianComponent> comps(next.components().begin(), next.components().end());
    for (int k = 0; k < current.size(); ++k) {
      if (frozen_.weights) comps[k].weight = current[k].weight;
      if (frozen_.covariances) comps[k].covariance = current[k].covariance;
    }
    return MixtureParams(std::move(comps));
  }

  const Dataset& data_;
  const EstimatorConfig& config_;
  FrozenParts frozen_;
  Rng rng_;
};

bool relative_change_below(double previous, double current, double tol) {
  const double scale = std::abs(previous);
  const double diff = std::abs(current - previous);
  return scale > 0.0 ? diff <= tol * scale : diff <= tol;
}

}  // namespace

FitResult fit_with_frozen(const Dataset& data, const MixtureParams& init,
                          const EstimatorConfig& config, FrozenParts frozen) {
  validate_dataset(data);
  validate_config(config);
  if (init.size() < 2) throw InvalidOrderError("estimators need at least two components");
  if (init.dim() != data.dim()) {
    throw InvalidArgumentError("initial parameters and data have different dimensions");
  }

  const AnnealingSchedule schedule = effective_schedule(config);
  Updater update(data, config, frozen);

  FitResult result(init);
  auto fail = [&](FailureReason reason, const std::string& detail) {
    result.failure_reason = reason;
    result.failure_detail = detail;
  };

  ScheduleValue s = schedule_at(schedule, 0);
  EStepResult e;
  try {
    e = annealed_e_step(classical_energies(data, init), s.beta, s.gamma);
  } catch (const NumericalRangeError& err) {
    fail(FailureReason::kNumericalRange, err.what());
    result.objective_history.push_back(std::numeric_limits<double>::quiet_NaN());
    result.param_trajectory.push_back(init);
    result.schedule_history.push_back(s);
    result.final_log_likelihood = log_likelihood(data, init);
    return result;
  }
  result.objective_history.push_back(e.objective);
  result.param_trajectory.push_back(init);
  result.schedule_history.push_back(s);

  for (int t = 0; t < config.max_iterations; ++t) {
    const MixtureParams& current = result.param_trajectory.back();
    std::optional<MixtureParams> next;
    try {
      next.emplace(update(current, e.responsibilities, result.reseeds));
    } catch (const EmptyComponentError& err) {
      fail(FailureReason::kEmptyComponent, err.what());
      break;
    } catch (const SingularCovarianceError& err) {
      fail(FailureReason::kSingularCovariance, err.what());
      break;
    }
    const ScheduleValue s_next = schedule_at(schedule, t + 1);
    EStepResult e_next;
    try {
      e_next = annealed_e_step(classical_energies(data, *next), s_next.beta, s_next.gamma);
    } catch (const NumericalRangeError& err) {
      fail(FailureReason::kNumericalRange, err.what());
      break;
    }
    const double previous = result.objective_history.back();
    result.objective_history.push_back(e_next.objective);
    result.param_trajectory.push_back(std::move(*next));
    result.schedule_history.push_back(s_next);
    result.iterations = t + 1;
    const bool settled = schedule_settled(s) && schedule_settled(s_next);
    s = s_next;
    e = std::move(e_next);
    if (settled && relative_change_below(previous, e.objective, config.tolerance)) {
      result.converged = true;
      break;
    }
  }

  result.final_params = result.param_trajectory.back();
  result.final_log_likelihood = log_likelihood(data, result.final_params);
  return result;
}

FitResult run_fit(const Dataset& data, const MixtureParams& init,
                  const EstimatorConfig& config) {
  return fit_with_frozen(data, init, config, FrozenParts{});
}

FitResult means_only_fit(const Dataset& data, const MixtureParams& init,
                         const EstimatorConfig& config) {
  return fit_with_frozen(data, init, config, FrozenParts{.weights = true, .covariances = true});
}

std::vector<int> monotonicity_violations(const FitResult& result, double tol) {
  std::vector<int> bad;
  const auto& obj = result.objective_history;
  const auto& sch = result.schedule_history;
  for (std::size_t t = 0; t + 1 < obj.size(); ++t) {
    const bool comparable =
        sch[t] == sch[t + 1] || (schedule_settled(sch[t]) && schedule_settled(sch[t + 1]));
    if (comparable && obj[t + 1] < obj[t] - tol) bad.push_back(static_cast<int>(t));
  }
  return bad;
}

MixtureParams random_init(const Dataset& data, int components, std::uint64_t seed,
                          double covariance_floor) {
  validate_dataset(data);
  if (components < 1) throw InvalidArgumentError("component count must be positive");
  const Eigen::RowVectorXd lo = data.points.colwise().minCoeff();
  const Eigen::RowVectorXd hi = data.points.colwise().maxCoeff();
  Matrix cov = sample_covariance(data);
  cov = floor_eigenvalues(cov, covariance_floor);

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GaussianComponent> comps;
  comps.reserve(components);
  for (int k = 0; k < components; ++k) {
    Vector mean(data.dim());
    for (int j = 0; j < data.dim(); ++j) mean(j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
    comps.push_back({1.0 / components, mean, cov});
  }
  return MixtureParams(std::move(comps));
}

}  // namespace dqaem

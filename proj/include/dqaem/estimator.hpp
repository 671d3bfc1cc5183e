#pragma once

#include "dqaem/gmm.hpp"
#include "dqaem/schedule.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dqaem {

enum class Mode { kEM, kDSAEM, kDQAEM };

enum class EmptyComponentPolicy {
  kAbort,   // stop the fit and report failure
  kReseed,  // hand the component a random data point and redo the M-step
};

enum class FailureReason { kEmptyComponent, kNumericalRange, kSingularCovariance };

std::string_view to_string(Mode mode);
std::string_view to_string(EmptyComponentPolicy policy);
std::string_view to_string(FailureReason reason);
Mode parse_mode(std::string_view text);
EmptyComponentPolicy parse_policy(std::string_view text);

struct EstimatorConfig {
  Mode mode = Mode::kEM;
  AnnealingSchedule schedule;
  int max_iterations = 1000;
  /// Relative objective change that counts as converged.
  double tolerance = 1e-8;
  EmptyComponentPolicy empty_component_policy = EmptyComponentPolicy::kAbort;
  std::uint64_t seed = 0;
  double covariance_floor = kDefaultCovarianceFloor;
};

void validate_config(const EstimatorConfig& config);

/// Schedule with the mode constraints applied: EM pins (1, 0), DSAEM pins
/// gamma to 0, DQAEM uses the schedule as given.
AnnealingSchedule effective_schedule(const EstimatorConfig& config);

/// Parameter groups held at their initial values during a fit.
struct FrozenParts {
  bool weights = false;
  bool covariances = false;
};

struct FitResult {
  explicit FitResult(MixtureParams init) : final_params(std::move(init)) {}

  MixtureParams final_params;
  /// Objective at theta_0..theta_T: the log-likelihood for EM, the negative
  /// free energy at (beta_t, gamma_t) otherwise.
  std::vector<double> objective_history;
  std::vector<MixtureParams> param_trajectory;
  std::vector<ScheduleValue> schedule_history;
  int iterations = 0;
  bool converged = false;
  std::optional<FailureReason> failure_reason;
  std::string failure_detail;
  double final_log_likelihood = 0.0;
  int reseeds = 0;

  bool failed() const { return failure_reason.has_value(); }
};

/// Annealed EM loop shared by EM, DSAEM and DQAEM.
FitResult run_fit(const Dataset& data, const MixtureParams& init,
                  const EstimatorConfig& config);

/// Same loop with the M-step restricted to the unfrozen parameter groups.
FitResult fit_with_frozen(const Dataset& data, const MixtureParams& init,
                          const EstimatorConfig& config, FrozenParts frozen);

/// Means-only estimation: weights and covariances stay at `init`.
FitResult means_only_fit(const Dataset& data, const MixtureParams& init,
                         const EstimatorConfig& config);

/// Iteration indices t with objective[t + 1] < objective[t] - tol, counted
/// only where (beta, gamma) is identical at t and t + 1 or has settled.
std::vector<int> monotonicity_violations(const FitResult& result, double tol = 1e-9);

/// Means uniform in the data bounding box, every covariance equal to the
/// global sample covariance (eigenvalues floored), uniform weights.
MixtureParams random_init(const Dataset& data, int components, std::uint64_t seed,
                          double covariance_floor = kDefaultCovarianceFloor);

}  // namespace dqaem

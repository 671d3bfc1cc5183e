#pragma once

namespace dqaem {

/// Exponential annealing law
///   beta_t  = (beta0 - 1) exp(-t / tau) + 1
///   gamma_t = gamma0 exp(-t / tau)
/// An infinite tau holds both values constant.
struct AnnealingSchedule {
  double beta0 = 1.0;
  double gamma0 = 0.0;
  double tau = 0.95;
  bool beta_fixed = false;
};

struct ScheduleValue {
  double beta = 1.0;
  double gamma = 0.0;

  bool operator==(const ScheduleValue&) const = default;
};

void validate_schedule(const AnnealingSchedule& schedule);

ScheduleValue schedule_at(const AnnealingSchedule& schedule, int t);

/// True once gamma_t < 1e-10 and |1 - beta_t| < 1e-10.
bool schedule_settled(const ScheduleValue& value);

}  // namespace dqaem

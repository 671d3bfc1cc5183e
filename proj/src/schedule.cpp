#include "dqaem/schedule.hpp"

#include "dqaem/errors.hpp"

#include <cmath>

namespace dqaem {

void validate_schedule(const AnnealingSchedule& schedule) {
  if (!(schedule.beta0 > 0.0 && schedule.beta0 <= 1.0)) {
    throw InvalidArgumentError("beta0 must lie in (0, 1]");
  }
  if (!(schedule.gamma0 >= 0.0) || !std::isfinite(schedule.gamma0)) {
    throw InvalidArgumentError("gamma0 must be finite and non-negative");
  }
  if (!(schedule.tau > 0.0)) throw InvalidArgumentError("tau must be positive");
}

ScheduleValue schedule_at(const AnnealingSchedule& schedule, int t) {
  if (t < 0) throw InvalidArgumentError("iteration index must be non-negative");
  const double decay = std::exp(-static_cast<double>(t) / schedule.tau);
  ScheduleValue v;
  v.beta = schedule.beta_fixed ? 1.0 : (schedule.beta0 - 1.0) * decay + 1.0;
  v.gamma = schedule.gamma0 * decay;
  return v;
}

bool schedule_settled(const ScheduleValue& value) {
  constexpr double kSettled = 1e-10;
  return value.gamma < kSettled && std::abs(1.0 - value.beta) < kSettled;
}

}  // namespace dqaem

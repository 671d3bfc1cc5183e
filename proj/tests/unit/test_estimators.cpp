#include "dqaem/errors.hpp"
#include "dqaem/estimator.hpp"
#include "dqaem/experiments.hpp"
#include "dqaem/quantum.hpp"
#include "dqaem/schedule.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace dqaem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_param_gap(const MixtureParams& a, const MixtureParams& b) {
  double gap = 0.0;
  for (int k = 0; k < a.size(); ++k) {
    gap = std::max(gap, std::abs(a[k].weight - b[k].weight));
    gap = std::max(gap, (a[k].mean - b[k].mean).cwiseAbs().maxCoeff());
    gap = std::max(gap, (a[k].covariance - b[k].covariance).cwiseAbs().maxCoeff());
  }
  return gap;
}

double max_trajectory_gap(const FitResult& a, const FitResult& b) {
  REQUIRE(a.param_trajectory.size() == b.param_trajectory.size());
  double gap = 0.0;
  for (std::size_t t = 0; t < a.param_trajectory.size(); ++t) {
    gap = std::max(gap, max_param_gap(a.param_trajectory[t], b.param_trajectory[t]));
  }
  return gap;
}

Dataset sample(int k, int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GeneratorSpec spec;
  const auto truth = oracle::random_mixture(rng, k, d, 4.0);
  for (const auto& c : truth.components()) {
    spec.weights.push_back(c.weight);
    spec.means.push_back(c.mean);
    spec.covariances.push_back(c.covariance);
  }
  spec.n = n;
  spec.seed = seed;
  return generate_dataset(spec);
}

EstimatorConfig with_mode(Mode m, double beta0, double gamma0, double tau, bool beta_fixed) {
  EstimatorConfig c;
  c.mode = m;
  c.schedule = {beta0, gamma0, tau, beta_fixed};
  return c;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("schedule_at") {
  SUBCASE("reference starting points") {
    CHECK(schedule_at({0.7, 0.0, 0.95, false}, 0).beta == 0.7);
    CHECK(schedule_at({1.0, 1.2, 0.95, true}, 0).gamma == 1.2);
  }
  SUBCASE("decays to the classical limit") {
    const auto v = schedule_at({0.7, 1.2, 0.95, false}, 100);
    CHECK(std::abs(v.beta - 1.0) < 1e-12);
    CHECK(std::abs(v.gamma) < 1e-12);
    CHECK(schedule_settled(v));
    CHECK_FALSE(schedule_settled(schedule_at({0.7, 1.2, 0.95, false}, 5)));
  }
  SUBCASE("monotone laws") {
    const AnnealingSchedule s{0.4, 3.0, 2.5, false};
    for (int t = 0; t < 60; ++t) {
      CHECK(schedule_at(s, t + 1).beta >= schedule_at(s, t).beta);
      CHECK(schedule_at(s, t + 1).gamma <= schedule_at(s, t).gamma);
    }
  }
  SUBCASE("beta_fixed pins beta and infinite tau holds both") {
    CHECK(schedule_at({0.5, 1.0, 0.95, true}, 0).beta == 1.0);
    const auto v = schedule_at({0.5, 1.0, kInf, false}, 1000);
    CHECK(v.beta == 0.5);
    CHECK(v.gamma == 1.0);
  }
  SUBCASE("invalid schedules") {
    CHECK_THROWS_AS(validate_schedule({0.0, 0.0, 1.0, false}), InvalidArgumentError);
    CHECK_THROWS_AS(validate_schedule({1.1, 0.0, 1.0, false}), InvalidArgumentError);
    CHECK_THROWS_AS(validate_schedule({1.0, -1.0, 1.0, false}), InvalidArgumentError);
    CHECK_THROWS_AS(validate_schedule({1.0, 0.0, 0.0, false}), InvalidArgumentError);
    CHECK_THROWS_AS(schedule_at({}, -1), InvalidArgumentError);
  }
}

TEST_CASE("mode constraints") {
  auto s = effective_schedule(with_mode(Mode::kEM, 0.5, 2.0, 1.0, false));
  CHECK(s.beta0 == 1.0);
  CHECK(s.gamma0 == 0.0);
  s = effective_schedule(with_mode(Mode::kDSAEM, 0.5, 2.0, 1.0, false));
  CHECK(s.beta0 == 0.5);
  CHECK(s.gamma0 == 0.0);
  CHECK(parse_mode("dqaem") == Mode::kDQAEM);
  CHECK_THROWS_AS(parse_mode("qem"), InvalidArgumentError);
}

TEST_CASE("reduction chain on per-iteration parameters") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int k = 2 + seed % 3, d = 1 + seed % 3;
    const Dataset data = sample(k, d, 60, seed);
    const auto init = random_init(data, k, seed + 100);
    const auto em = run_fit(data, init, with_mode(Mode::kEM, 1.0, 0.0, 0.95, false));
    const auto dq = run_fit(data, init, with_mode(Mode::kDQAEM, 1.0, 0.0, 0.95, false));
    const auto ds = run_fit(data, init, with_mode(Mode::kDSAEM, 1.0, 0.0, 0.95, false));
    CHECK(max_trajectory_gap(em, dq) <= 1e-10);
    CHECK(max_trajectory_gap(em, ds) <= 1e-10);

    // DQAEM with gamma pinned to zero follows DSAEM's tempered schedule.
    const auto ds7 = run_fit(data, init, with_mode(Mode::kDSAEM, 0.7, 0.0, 0.95, false));
    const auto dq7 = run_fit(data, init, with_mode(Mode::kDQAEM, 0.7, 0.0, 0.95, false));
    CHECK(max_trajectory_gap(ds7, dq7) <= 1e-10);
  }
}

TEST_CASE("fit history bookkeeping") {
  const Dataset data = sample(3, 2, 80, 1);
  const auto init = random_init(data, 3, 2);
  const auto r = run_fit(data, init, with_mode(Mode::kDQAEM, 0.8, 1.0, 0.95, false));
  CHECK_FALSE(r.failed());
  CHECK(r.objective_history.size() == static_cast<std::size_t>(r.iterations + 1));
  CHECK(r.param_trajectory.size() == r.objective_history.size());
  CHECK(r.schedule_history.size() == r.objective_history.size());
  CHECK(r.schedule_history.front() == ScheduleValue{0.8, 1.0});
  CHECK(r.converged);
  CHECK(schedule_settled(r.schedule_history.back()));
  CHECK(r.final_log_likelihood == doctest::Approx(log_likelihood(data, r.final_params)).epsilon(1e-14));
  CHECK(max_param_gap(r.param_trajectory.front(), init) == 0.0);
}

TEST_CASE("convergence waits for the schedule to settle") {
  const Dataset data = sample(2, 1, 50, 3);
  const auto init = random_init(data, 2, 4);
  auto c = with_mode(Mode::kDQAEM, 1.0, 0.5, 5.0, true);
  c.tolerance = 1e-2;
  const auto r = run_fit(data, init, c);
  CHECK(r.converged);
  CHECK(schedule_settled(r.schedule_history[r.iterations - 1]));

  c.max_iterations = 3;
  const auto capped = run_fit(data, init, c);
  CHECK(capped.iterations == 3);
  CHECK_FALSE(capped.converged);
}

TEST_CASE("constant-schedule monotonicity of the objective") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int k = 2 + seed % 4;
    const Dataset data = sample(k, 2, 70, seed + 50);
    const auto init = random_init(data, k, seed);
    auto c = with_mode(Mode::kDQAEM, 1.0, 0.5, kInf, true);
    c.max_iterations = 150;
    const auto r = run_fit(data, init, c);
    REQUIRE_FALSE(r.failed());
    for (std::size_t t = 0; t + 1 < r.objective_history.size(); ++t) {
      CHECK(r.objective_history[t + 1] >= r.objective_history[t] - 1e-9);
    }
    CHECK(monotonicity_violations(r).empty());
  }
}

TEST_CASE("monotonicity_violations ignores moving schedules") {
  FitResult r(random_init(sample(2, 1, 20, 0), 2, 0));
  r.objective_history = {-10.0, -12.0, -11.0, -11.5};
  r.schedule_history = {{0.7, 0.0}, {0.8, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
  r.iterations = 3;
  CHECK(monotonicity_violations(r) == std::vector<int>{2});
}

TEST_CASE("determinism and permutation equivariance") {
  const Dataset data = sample(4, 2, 90, 9);
  const auto init = random_init(data, 4, 10);
  const auto c = with_mode(Mode::kDQAEM, 1.0, 1.2, 0.95, true);
  const auto a = run_fit(data, init, c);
  const auto b = run_fit(data, init, c);
  REQUIRE(a.objective_history.size() == b.objective_history.size());
  for (std::size_t t = 0; t < a.objective_history.size(); ++t) {
    CHECK(a.objective_history[t] == b.objective_history[t]);
  }
  CHECK(max_trajectory_gap(a, b) == 0.0);

  // The ring couples neighbouring labels, so only ring symmetries commute
  // with the quantum term: rotations and reflections.
  const std::vector<std::vector<int>> orders = {{1, 2, 3, 0}, {3, 2, 1, 0}, {2, 3, 0, 1}};
  for (const auto& order : orders) {
    const auto p = run_fit(data, init.permuted(order), c);
    REQUIRE(p.param_trajectory.size() == a.param_trajectory.size());
    for (std::size_t t = 0; t < a.param_trajectory.size(); ++t) {
      CHECK(max_param_gap(p.param_trajectory[t], a.param_trajectory[t].permuted(order)) < 1e-9);
    }
  }
  // EM has no label coupling: any permutation works.
  const auto em = with_mode(Mode::kEM, 1.0, 0.0, 0.95, false);
  const auto e0 = run_fit(data, init, em);
  const std::vector<int> order = {2, 0, 3, 1};
  const auto e1 = run_fit(data, init.permuted(order), em);
  CHECK(max_param_gap(e1.final_params, e0.final_params.permuted(order)) < 1e-9);
}

TEST_CASE("empty-component policies") {
  // A component far from all data receives no responsibility.
  Dataset data;
  data.points = Matrix(6, 1);
  data.points << -1.0, -0.5, 0.0, 0.2, 0.6, 1.0;
  const MixtureParams init({{0.5, Vector::Constant(1, 0.0), Matrix::Identity(1, 1)},
                            {0.5, Vector::Constant(1, 1e3), Matrix::Identity(1, 1)}});
  EstimatorConfig c;
  const auto aborted = run_fit(data, init, c);
  REQUIRE(aborted.failed());
  CHECK(*aborted.failure_reason == FailureReason::kEmptyComponent);
  CHECK(aborted.iterations == 0);

  c.empty_component_policy = EmptyComponentPolicy::kReseed;
  c.seed = 5;
  const auto reseeded = run_fit(data, init, c);
  CHECK_FALSE(reseeded.failed());
  CHECK(reseeded.reseeds >= 1);
  CHECK(reseeded.final_params[1].mean(0) < 2.0);
}

TEST_CASE("numerical range failure is recorded") {
  const Dataset data = sample(3, 1, 30, 2);
  const auto init = random_init(data, 3, 3);
  const auto r = run_fit(data, init, with_mode(Mode::kDQAEM, 1.0, 1e4, 0.95, true));
  REQUIRE(r.failed());
  CHECK(*r.failure_reason == FailureReason::kNumericalRange);
  CHECK_FALSE(r.converged);
}

TEST_CASE("means-only fitting") {
  SUBCASE("weights and covariances stay fixed") {
    const Dataset data = generate_dataset(barrier_instance_spec(0));
    const auto init = barrier_instance_init();
    const auto r = means_only_fit(data, init, EstimatorConfig{});
    for (int k = 0; k < 2; ++k) {
      CHECK(r.final_params[k].weight == init[k].weight);
      CHECK(r.final_params[k].covariance == init[k].covariance);
    }
  }
  SUBCASE("responsibilities all on the first component move only its mean") {
    Dataset data;
    data.points = Matrix(4, 1);
    data.points << 0.0, 1.0, 2.0, 5.0;
    const MixtureParams init({{0.5, Vector::Constant(1, 2.0), Matrix::Identity(1, 1)},
                              {0.5, Vector::Constant(1, 300.0), Matrix::Identity(1, 1)}});
    EstimatorConfig c;
    c.max_iterations = 1;
    const auto r = means_only_fit(data, init, c);
    CHECK(r.final_params[0].mean(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.final_params[1].mean(0) == 300.0);
  }
  SUBCASE("symmetric data and init stay mirror images") {
    Dataset data;
    data.points = Matrix(8, 1);
    data.points << -3.1, -2.4, -1.9, -0.7, 0.7, 1.9, 2.4, 3.1;
    const MixtureParams init({{0.5, Vector::Constant(1, -0.5), Matrix::Identity(1, 1)},
                              {0.5, Vector::Constant(1, 0.5), Matrix::Identity(1, 1)}});
    for (Mode m : {Mode::kEM, Mode::kDQAEM}) {
      const auto r = means_only_fit(data, init, with_mode(m, 1.0, 1.0, 0.95, true));
      for (const auto& p : r.param_trajectory) {
        CHECK(std::abs(p[0].mean(0) + p[1].mean(0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("two-component instance: EM stays local, DQAEM crosses") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset data = generate_dataset(barrier_instance_spec(seed));
    const auto init = barrier_instance_init();
    const auto em = means_only_fit(data, init, EstimatorConfig{});
    CHECK(std::abs(em.final_params[0].mean(0) - 4.0) < 1.0);
    CHECK(std::abs(em.final_params[1].mean(0) + 2.0) < 1.0);
    const auto dq = means_only_fit(data, init, barrier_dqaem_config());
    CHECK(dq.final_log_likelihood > em.final_log_likelihood);
    CHECK(std::abs(dq.final_params[0].mean(0) + 2.0) < 1.0);
    CHECK(std::abs(dq.final_params[1].mean(0) - 4.0) < 1.0);
  }
}

TEST_CASE("random_init") {
  const Dataset data = sample(3, 2, 50, 4);
  const auto a = random_init(data, 5, 77);
  const auto b = random_init(data, 5, 77);
  CHECK(max_param_gap(a, b) == 0.0);
  const Vector lo = data.points.colwise().minCoeff().transpose();
  const Vector hi = data.points.colwise().maxCoeff().transpose();
  for (int k = 0; k < 5; ++k) {
    CHECK(a[k].weight == doctest::Approx(0.2));
    CHECK((a[k].mean.array() >= lo.array()).all());
    CHECK((a[k].mean.array() <= hi.array()).all());
    CHECK((a[k].covariance - sample_covariance(data)).cwiseAbs().maxCoeff() <= 1e-6 + 1e-15);
  }
  CHECK(max_param_gap(a, random_init(data, 5, 78)) > 0.0);
}

}  // TEST_SUITE

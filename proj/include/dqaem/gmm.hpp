#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace dqaem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default lower bound on covariance eigenvalues after an M-step.
inline constexpr double kDefaultCovarianceFloor = 1e-6;

struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix covariance;
};

/// Parameters of a K-component Gaussian mixture. Construction validates:
/// positive weights summing to one (1e-10), matching dimensions, and
/// symmetric positive-definite covariances.
class MixtureParams {
 public:
  explicit MixtureParams(std::vector<GaussianComponent> components);

  int size() const { return static_cast<int>(components_.size()); }
  int dim() const { return static_cast<int>(components_.front().mean.size()); }

  const GaussianComponent& operator[](int k) const { return components_[k]; }
  std::span<const GaussianComponent> components() const { return components_; }

  /// Copy with component order `order[j]` placed at position j.
  MixtureParams permuted(std::span<const int> order) const;

 private:
  std::vector<GaussianComponent> components_;
};

/// N observations stored row-wise in an N x d matrix.
struct Dataset {
  Matrix points;
  std::optional<MixtureParams> ground_truth;
  std::vector<int> labels;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Throws EmptyInputError or InvalidArgumentError when the dataset is unusable.
void validate_dataset(const Dataset& data);

/// N x K matrix of per-point component probabilities.
struct Responsibilities {
  Matrix values;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

void validate_responsibilities(const Responsibilities& resp, double tol = 1e-10);

/// Precomputed Cholesky factor and log-normaliser of one Gaussian.
class GaussianEvaluator {
 public:
  GaussianEvaluator(const Vector& mean, const Matrix& covariance);

  double log_pdf(const Eigen::Ref<const Vector>& y) const;
  /// Log-density of every row of `points`.
  Vector log_pdf_rows(const Matrix& points) const;

 private:
  Vector mean_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_;
};

double log_gaussian_pdf(const Vector& y, const Vector& mean, const Matrix& covariance);

/// h^k = -ln(pi^k g(y; mu^k, Sigma^k)) for each component.
Vector classical_energies(const Vector& y, const MixtureParams& params);

/// Energies for every point at once, N x K.
Matrix classical_energies(const Dataset& data, const MixtureParams& params);

/// softmax(-h) posterior over components.
Vector em_posterior(const Vector& y, const MixtureParams& params);

double log_sum_exp(const Eigen::Ref<const Vector>& v);

/// Numerically stable softmax(-beta * energies).
Vector tempered_softmax(const Eigen::Ref<const Vector>& energies, double beta);

double log_likelihood(const Dataset& data, const MixtureParams& params);

/// Symmetric `cov` with every eigenvalue below `floor` raised to `floor`;
/// returned unchanged when none is. This maximises the Gaussian
/// likelihood over covariances >= floor * I.
Matrix floor_eigenvalues(const Matrix& cov, double floor);

/// Closed-form maximiser of the weighted complete-data log-likelihood.
/// Covariances use the updated means, are symmetrised, and have their
/// eigenvalues floored at `covariance_floor`. Throws EmptyComponentError
/// when a component mass falls below N * 1e-12.
MixtureParams m_step(const Dataset& data, const Responsibilities& resp,
                     double covariance_floor = kDefaultCovarianceFloor);

/// Mean-only M-step: weights and covariances are copied from `base`.
MixtureParams m_step_means(const Dataset& data, const Responsibilities& resp,
                           const MixtureParams& base);

/// Biased (1/N) sample covariance of the whole dataset.
Matrix sample_covariance(const Dataset& data);

}  // namespace dqaem

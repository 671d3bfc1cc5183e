#include "dqaem/gmm.hpp"

#include "dqaem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dqaem {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
constexpr double kWeightSumTol = 1e-10;
constexpr double kSymmetryTol = 1e-12;
constexpr double kEmptyMassFraction = 1e-12;

void check_symmetric(const Matrix& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw SingularCovarianceError(std::string(what) + " is not symmetric");
  }
}

}  // namespace

MixtureParams::MixtureParams(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw InvalidArgumentError("mixture needs at least one component");
  }
  const auto d = components_.front().mean.size();
  if (d == 0) throw InvalidArgumentError("mixture dimension must be positive");
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InvalidWeightError("component " + std::to_string(k) + " has weight " +
                               std::to_string(c.weight));
    }
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw InvalidArgumentError("component " + std::to_string(k) +
                                 " has inconsistent dimensions");
    }
    if (!c.mean.allFinite() || !c.covariance.allFinite()) {
      throw InvalidArgumentError("component " + std::to_string(k) +
                                 " has non-finite entries");
    }
    check_symmetric(c.covariance, "covariance");
    if (Eigen::LLT<Matrix>(c.covariance).info() != Eigen::Success) {
      throw SingularCovarianceError("covariance of component " + std::to_string(k) +
                                    " is not positive definite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw InvalidWeightError("mixture weights sum to " + std::to_string(total));
  }
}

MixtureParams MixtureParams::permuted(std::span<const int> order) const {
  if (static_cast<int>(order.size()) != size()) {
    throw InvalidArgumentError("permutation length does not match component count");
  }
  std::vector<GaussianComponent> out;
  out.reserve(order.size());
  for (int k : order) out.push_back(components_.at(k));
  return MixtureParams(std::move(out));
}

void validate_dataset(const Dataset& data) {
  if (data.points.rows() == 0) throw EmptyInputError("dataset has no points");
  if (data.points.cols() == 0) throw InvalidArgumentError("dataset has zero dimension");
  if (!data.points.allFinite()) throw InvalidArgumentError("dataset has non-finite values");
  if (!data.labels.empty() && static_cast<int>(data.labels.size()) != data.size()) {
    throw InvalidArgumentError("label count does not match point count");
  }
}

void validate_responsibilities(const Responsibilities& resp, double tol) {
  const auto& r = resp.values;
  if (r.rows() == 0 || r.cols() == 0) throw EmptyInputError("empty responsibilities");
  if ((r.array() < 0.0).any() || (r.array() > 1.0 + tol).any() || !r.allFinite()) {
    throw InvalidArgumentError("responsibilities outside [0, 1]");
  }
  const double worst = (r.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (worst > tol) {
    throw InvalidArgumentError("responsibility rows deviate from 1 by " +
                               std::to_string(worst));
  }
}

GaussianEvaluator::GaussianEvaluator(const Vector& mean, const Matrix& covariance)
    : mean_(mean), llt_(covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw InvalidArgumentError("covariance shape does not match mean");
  }
  check_symmetric(covariance, "covariance");
  if (llt_.info() != Eigen::Success) {
    throw SingularCovarianceError("covariance is not positive definite");
  }
  const Vector diag = llt_.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw SingularCovarianceError("covariance is singular");
  }
  const double log_det = 2.0 * diag.array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det);
}

double GaussianEvaluator::log_pdf(const Eigen::Ref<const Vector>& y) const {
  if (y.size() != mean_.size()) throw InvalidArgumentError("point dimension mismatch");
  const Vector z = llt_.matrixL().solve(y - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Vector GaussianEvaluator::log_pdf_rows(const Matrix& points) const {
  if (points.cols() != mean_.size()) throw InvalidArgumentError("point dimension mismatch");
  const Matrix centered = (points.rowwise() - mean_.transpose()).transpose();
  const Matrix z = llt_.matrixL().solve(centered);
  return (log_norm_ - 0.5 * z.colwise().squaredNorm().array()).transpose();
}

double log_gaussian_pdf(const Vector& y, const Vector& mean, const Matrix& covariance) {
  return GaussianEvaluator(mean, covariance).log_pdf(y);
}

Vector classical_energies(const Vector& y, const MixtureParams& params) {
  Vector h(params.size());
  for (int k = 0; k < params.size(); ++k) {
    const auto& c = params[k];
    h(k) = -std::log(c.weight) - log_gaussian_pdf(y, c.mean, c.covariance);
  }
  return h;
}

Matrix classical_energies(const Dataset& data, const MixtureParams& params) {
  validate_dataset(data);
  if (data.dim() != params.dim()) {
    throw InvalidArgumentError("dataset and mixture dimensions differ");
  }
  Matrix h(data.size(), params.size());
  for (int k = 0; k < params.size(); ++k) {
    const auto& c = params[k];
    const GaussianEvaluator g(c.mean, c.covariance);
    h.col(k) = -std::log(c.weight) - g.log_pdf_rows(data.points).array();
  }
  return h;
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Vector tempered_softmax(const Eigen::Ref<const Vector>& energies, double beta) {
  const double c = energies.minCoeff();
  Vector w = (-beta * (energies.array() - c)).exp();
  return w / w.sum();
}

Vector em_posterior(const Vector& y, const MixtureParams& params) {
  return tempered_softmax(classical_energies(y, params), 1.0);
}

double log_likelihood(const Dataset& data, const MixtureParams& params) {
  const Matrix h = classical_energies(data, params);
  double total = 0.0;
  for (int i = 0; i < h.rows(); ++i) {
    total += log_sum_exp(-h.row(i).transpose());
  }
  return total;
}

namespace {

double empty_mass_floor(const Dataset& data) {
  return static_cast<double>(data.size()) * kEmptyMassFraction;
}

Vector component_masses(const Dataset& data, const Responsibilities& resp) {
  validate_dataset(data);
  if (resp.rows() != data.size()) {
    throw InvalidArgumentError("responsibility rows do not match point count");
  }
  validate_responsibilities(resp);
  return resp.values.colwise().sum().transpose();
}

void require_nonempty(const Dataset& data, const Vector& mass) {
  for (int k = 0; k < mass.size(); ++k) {
    if (!(mass(k) >= empty_mass_floor(data))) throw EmptyComponentError(k, mass(k));
  }
}

Matrix weighted_means(const Dataset& data, const Responsibilities& resp,
                      const Vector& mass) {
  // K x d, row k is mu^k
  Matrix means = resp.values.transpose() * data.points;
  for (int k = 0; k < mass.size(); ++k) means.row(k) /= mass(k);
  return means;
}

}  // namespace

Matrix floor_eigenvalues(const Matrix& cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw SingularCovarianceError("covariance eigensolver failed");
  if (es.eigenvalues().minCoeff() >= floor) return cov;
  const Vector clipped = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

MixtureParams m_step(const Dataset& data, const Responsibilities& resp,
                     double covariance_floor) {
  const Vector mass = component_masses(data, resp);
  require_nonempty(data, mass);
  const Matrix means = weighted_means(data, resp, mass);
  const double total_mass = mass.sum();

  std::vector<GaussianComponent> comps;
  comps.reserve(mass.size());
  for (int k = 0; k < mass.size(); ++k) {
    const Matrix centered = data.points.rowwise() - means.row(k);
    Matrix cov = centered.transpose() * resp.values.col(k).asDiagonal() * centered;
    cov /= mass(k);
    cov = 0.5 * (cov + cov.transpose()).eval();
    cov = floor_eigenvalues(cov, covariance_floor);
    // N_k / N, renormalised by the summed mass so the weights sum to one
    // even when the rows carry rounding error.
    comps.push_back({mass(k) / total_mass, means.row(k).transpose(), cov});
  }
  return MixtureParams(std::move(comps));
}

MixtureParams m_step_means(const Dataset& data, const Responsibilities& resp,
                           const MixtureParams& base) {
  if (resp.cols() != base.size()) {
    throw InvalidArgumentError("responsibility columns do not match component count");
  }
  const Vector mass = component_masses(data, resp);
  const Matrix means = weighted_means(data, resp, mass);
  std::vector<GaussianComponent> comps(base.components().begin(), base.components().end());
  // A massless component keeps its previous mean; its weight is frozen anyway.
  for (int k = 0; k < base.size(); ++k) {
    if (mass(k) >= empty_mass_floor(data)) comps[k].mean = means.row(k).transpose();
  }
  return MixtureParams(std::move(comps));
}

Matrix sample_covariance(const Dataset& data) {
  validate_dataset(data);
  const Eigen::RowVectorXd mean = data.points.colwise().mean();
  const Matrix centered = data.points.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(data.size());
}

}  // namespace dqaem

#include "dqaem/quantum.hpp"

#include "dqaem/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace dqaem {

namespace {

constexpr double kSymmetryTol = 1e-10;
// Largest argument for which exp() stays finite with some headroom.
constexpr double kMaxExponent = 700.0;

void check_inputs(const Vector& energies, double beta, double gamma) {
  if (energies.size() < 2) {
    throw InvalidOrderError("quantum weight needs at least two components");
  }
  if (!energies.allFinite()) throw InvalidArgumentError("energies must be finite");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgumentError("beta must be positive");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgumentError("gamma must be non-negative");
  }
}

[[noreturn]] void range_error(double beta, double gamma, const Vector& energies) {
  std::ostringstream os;
  os << "exponential weight overflows: beta=" << beta << " gamma=" << gamma
     << " energy spread=" << (energies.maxCoeff() - energies.minCoeff());
  throw NumericalRangeError(os.str());
}

// Eigen-decomposition of -beta ((H - cI) + gamma S); returns the diagonal of
// its exponential.
class ShiftedExponential {
 public:
  explicit ShiftedExponential(int order)
      : sigma_(build_sigma_nc(order).cast<double>()), solver_(order) {}

  // Writes diag(exp(-beta ((H - cI) + gamma S))) into `diag`.
  void diagonal(const Vector& shifted, double beta, double gamma, Vector& diag) {
    Matrix a = -beta * gamma * sigma_;
    a.diagonal() -= beta * shifted;
    solver_.compute(a);
    const Vector& w = solver_.eigenvalues();
    if (w.maxCoeff() > kMaxExponent) {
      range_error(beta, gamma, shifted);
    }
    const Matrix& q = solver_.eigenvectors();
    diag.noalias() = q.cwiseAbs2() * w.array().exp().matrix();
  }

 private:
  Matrix sigma_;
  Eigen::SelfAdjointEigenSolver<Matrix> solver_;
};

}  // namespace

Eigen::MatrixXi build_sigma_nc(int order) {
  if (order < 2) throw InvalidOrderError("ring operator needs order >= 2");
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(order, order);
  for (int k = 0; k < order; ++k) {
    s((k + order - 1) % order, k) += 1;
    s((k + 1) % order, k) += 1;
  }
  return s;
}

Matrix matrix_exp_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) throw AsymmetryError("matrix is not square");
  if (a.size() == 0) return a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw AsymmetryError("matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalRangeError("eigendecomposition did not converge");
  }
  const Matrix& q = solver.eigenvectors();
  Matrix e = q * solver.eigenvalues().array().exp().matrix().asDiagonal() * q.transpose();
  return 0.5 * (e + e.transpose());
}

QuantumWeight quantum_weight(const Vector& energies, double beta, double gamma) {
  check_inputs(energies, beta, gamma);
  const int order = static_cast<int>(energies.size());
  QuantumWeight out;
  out.shift = energies.minCoeff();
  const Vector shifted = energies.array() - out.shift;
  if (gamma == 0.0) {
    out.matrix = (-beta * shifted.array()).exp().matrix().asDiagonal();
    out.responsibilities = tempered_softmax(energies, beta);
  } else {
    Matrix a = -beta * gamma * build_sigma_nc(order).cast<double>();
    a.diagonal() -= beta * shifted;
    if (Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff() > kMaxExponent) {
      range_error(beta, gamma, energies);
    }
    out.matrix = matrix_exp_symmetric(a);
    out.responsibilities = out.matrix.diagonal() / out.matrix.trace();
  }
  if (!out.matrix.allFinite()) range_error(beta, gamma, energies);
  out.trace = out.matrix.trace();
  out.log_partition = -beta * out.shift + std::log(out.trace);
  return out;
}

Vector trotter_diagonal(const Vector& energies, double beta, double gamma, int slices) {
  check_inputs(energies, beta, gamma);
  if (slices < 1) throw InvalidArgumentError("slice count must be >= 1");
  const int order = static_cast<int>(energies.size());
  const double dt = beta / slices;
  const double shift = energies.minCoeff();
  const Vector potential = (-dt * (energies.array() - shift)).exp();
  const Matrix kinetic =
      matrix_exp_symmetric(-dt * gamma * build_sigma_nc(order).cast<double>());
  const Matrix step = potential.asDiagonal() * kinetic;

  // step^slices by repeated squaring
  Matrix result = Matrix::Identity(order, order);
  Matrix base = step;
  for (int m = slices; m > 0; m >>= 1) {
    if (m & 1) result = result * base;
    if (m > 1) base = base * base;
  }
  const Vector diag = result.diagonal() * std::exp(-beta * shift);
  if (!diag.allFinite()) range_error(beta, gamma, energies);
  return diag;
}

EStepResult annealed_e_step(const Matrix& energies, double beta, double gamma) {
  const auto n = energies.rows();
  const auto order = energies.cols();
  if (n == 0) throw EmptyInputError("no energies");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgumentError("beta must be positive");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgumentError("gamma must be non-negative");
  }
  EStepResult out;
  out.responsibilities.values.resize(n, order);
  double total = 0.0;
  if (gamma == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector h = energies.row(i).transpose();
      const double c = h.minCoeff();
      const Vector w = (-beta * (h.array() - c)).exp();
      const double z = w.sum();
      out.responsibilities.values.row(i) = (w / z).transpose();
      total += -c + std::log(z) / beta;
    }
  } else {
    if (order < 2) throw InvalidOrderError("quantum E-step needs at least two components");
    ShiftedExponential expo(static_cast<int>(order));
    Vector diag(order);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector h = energies.row(i).transpose();
      const double c = h.minCoeff();
      expo.diagonal(h.array() - c, beta, gamma, diag);
      const double tr = diag.sum();
      if (!std::isfinite(tr) || !(tr > 0.0)) range_error(beta, gamma, h);
      out.responsibilities.values.row(i) = (diag / tr).transpose();
      total += -c + std::log(tr) / beta;
    }
  }
  out.objective = total;
  return out;
}

double negative_free_energy(const Dataset& data, const MixtureParams& params,
                            double beta, double gamma) {
  if (params.size() < 2) {
    throw InvalidOrderError("negative free energy needs at least two components");
  }
  return annealed_e_step(classical_energies(data, params), beta, gamma).objective;
}

}  // namespace dqaem

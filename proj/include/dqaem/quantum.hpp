#pragma once

#include "dqaem/gmm.hpp"

namespace dqaem {

/// Ring operator sum_{k, l = k +- 1} |l><k| with wraparound. Entry (l, k)
/// counts how many of k's two ring neighbours equal l, so K = 2 yields an
/// off-diagonal value of 2.
Eigen::MatrixXi build_sigma_nc(int order);

/// exp(A) for symmetric A through A = Q diag(lambda) Q^T. Throws
/// AsymmetryError if A deviates from symmetry by more than 1e-10.
Matrix matrix_exp_symmetric(const Matrix& a);

/// Exponential weight of one data point,
///   f = exp(-beta (H + gamma sigma_nc)),  H = diag(h^1..h^K),
/// stored as exp(-beta ((H - shift I) + gamma sigma_nc)) with
/// shift = min_k h^k. The shift cancels in the responsibilities and is
/// re-added analytically in `log_partition`.
struct QuantumWeight {
  Matrix matrix;
  double shift = 0.0;
  /// Trace of `matrix` (the shifted weight).
  double trace = 0.0;
  /// ln Tr f = -beta * shift + ln trace.
  double log_partition = 0.0;
  /// diag(matrix) / trace.
  Vector responsibilities;
};

QuantumWeight quantum_weight(const Vector& energies, double beta, double gamma);

/// Diagonal of [exp(-(beta/M) H) exp(-(beta/M) gamma sigma_nc)]^M, the
/// first-order product approximation with M slices and periodic boundary.
Vector trotter_diagonal(const Vector& energies, double beta, double gamma, int slices);

/// (1/beta) sum_i ln Tr_i exp(-beta (H_i + gamma sigma_nc)). Reduces to the
/// log-likelihood at beta = 1, gamma = 0.
double negative_free_energy(const Dataset& data, const MixtureParams& params,
                            double beta, double gamma);

struct EStepResult {
  Responsibilities responsibilities;
  /// Negative free energy at the (beta, gamma) used for the step.
  double objective = 0.0;
};

/// Batched E-step over an N x K energy matrix. gamma == 0 takes the
/// tempered-softmax route; otherwise the normalised diagonal of the
/// quantum weight is used.
EStepResult annealed_e_step(const Matrix& energies, double beta, double gamma);

}  // namespace dqaem

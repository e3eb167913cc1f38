#pragma once

#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/solver.hpp"

namespace cnlasso {

struct ClConfig {
  double phi = 1.0;
  double psi = 1.0;
  int max_iters = 2000;
  double tol_primal = 1e-5;
  double tol_dual = 1e-5;

  void validate() const;
};

// Single shared zero-sum-constrained l1 log-contrast fit.
struct ClFit {
  Vector beta;         // smooth iterate, zero-sum at tolerance
  Vector beta_sparse;  // soft-thresholded copy with exact zeros
  int iterations = 0;
  bool converged = false;
  std::vector<IterationStats> trace;
};

// Minimizes sum_i (y_i - z_i^T beta)^2 + lambda ||beta||_1  s.t.  1^T beta = 0,
// with the same splitting and dual ascent as the multi-task solver.
ClFit fit_cl(const RowMatrix& z, const Vector& y, double lambda, const ClConfig& cfg = {});

double predict_cl(const ClFit& fit, const Vector& z_new);

}  // namespace cnlasso

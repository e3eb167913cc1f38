#pragma once

// Test-only oracles, independent of the library's solver paths:
//  - equality-constrained least squares via a direct KKT solve,
//  - projected subgradient descent on the network-lasso and Weber objectives,
//  - a keep-all dense reference of the fitting ADMM (every ordered pair
//    materialized, per-sample systems solved by direct factorization).

#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/solver.hpp"

namespace cnlasso::oracles {

// argmin_beta ||y - Z beta||^2  s.t.  1^T beta = 0, via the (p+1) KKT system.
Vector constrained_ls_kkt(const RowMatrix& z, const Vector& y);

// Eq-style objective evaluated the oracle's own way (pairs counted once).
double network_objective(const RowMatrix& w, const RowMatrix& z, const Vector& y,
                         const Matrix& r, double lambda1, double lambda2);

// Best objective found by projected subgradient descent with diminishing
// steps; restarts over several step scales and keeps the best value.
double subgradient_network_lasso(const RowMatrix& z, const Vector& y, const Matrix& r,
                                 double lambda1, double lambda2, bool zero_sum,
                                 long steps_per_restart);

double weber_objective(const Vector& w, const RowMatrix& anchors, const Vector& weights);

double subgradient_weber(const RowMatrix& anchors, const Vector& weights, bool zero_sum,
                         long steps_per_restart);

// Keep-all dense ADMM: runs `iters` sweeps and records the w matrix after
// each sweep (and the final b) for trace comparison against the solver.
struct ReferenceRun {
  std::vector<RowMatrix> w_per_iter;
  RowMatrix b;
};

ReferenceRun reference_admm(const RowMatrix& z, const Vector& y, const Matrix& r,
                            const SolverConfig& cfg, int iters);

}  // namespace cnlasso::oracles

#include "cnlasso/constrained_lasso.hpp"

#include <algorithm>
#include <cmath>

#include "cnlasso/error.hpp"

namespace cnlasso {

void ClConfig::validate() const {
  if (!(phi > 0.0) || !(psi > 0.0)) {
    throw ValidationError("cl config: phi and psi must be positive");
  }
  if (max_iters < 1) throw ValidationError("cl config: max_iters must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) {
    throw ValidationError("cl config: tolerances must be positive");
  }
}

ClFit fit_cl(const RowMatrix& z, const Vector& y, double lambda, const ClConfig& cfg) {
  cfg.validate();
  if (!(lambda >= 0.0)) throw ValidationError("fit_cl: lambda must be nonnegative");
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  if (n < 1 || p < 2) throw ValidationError("fit_cl: need n >= 1 and p >= 2");
  if (y.size() != n) throw ValidationError("fit_cl: responses do not match samples");

  Matrix m = 2.0 * z.transpose() * z;
  m.diagonal().array() += cfg.phi;
  m.array() += cfg.psi;
  const Eigen::LLT<Matrix> factor(m);

  Vector beta = Vector::Zero(p);
  Vector b = Vector::Zero(p);
  Vector t = Vector::Zero(p);
  double u = 0.0;
  const Vector zty2 = 2.0 * z.transpose() * y;
  const double thr = lambda / cfg.phi;

  ClFit fit;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Vector rhs = zty2 - t + cfg.phi * b;
    rhs.array() -= u;
    const Vector beta_new = factor.solve(rhs);
    const double change = (beta_new - beta).norm();
    beta = beta_new;
    for (int j = 0; j < p; ++j) {
      b[j] = soft_threshold(beta[j] + t[j] / cfg.phi, thr);
    }
    const Vector diff = beta - b;
    t += cfg.phi * diff;
    const double beta_sum = beta.sum();
    u += cfg.psi * beta_sum;

    const double primal = std::max(diff.norm(), std::abs(beta_sum));
    const double objective =
        (y - z * beta).squaredNorm() + lambda * beta.cwiseAbs().sum();
    fit.trace.push_back({primal, change, objective});
    fit.iterations = iter;
    if (!beta.allFinite()) {
      throw SolverDivergence("cl divergence at iteration " + std::to_string(iter), iter,
                             primal, change);
    }
    if (primal <= cfg.tol_primal && change <= cfg.tol_dual) {
      fit.converged = true;
      break;
    }
  }
  fit.beta = std::move(beta);
  fit.beta_sparse = std::move(b);
  return fit;
}

double predict_cl(const ClFit& fit, const Vector& z_new) {
  if (fit.beta.size() != z_new.size()) throw ValidationError("predict_cl: shape mismatch");
  return z_new.dot(fit.beta);
}

}  // namespace cnlasso

#include "cnlasso/weber.hpp"

#include <algorithm>
#include <cmath>

#include "cnlasso/error.hpp"

namespace cnlasso {

void WeberConfig::validate() const {
  if (!(mu > 0.0)) throw ValidationError("weber config: mu must be positive");
  if (zero_sum && !(eta > 0.0)) throw ValidationError("weber config: eta must be positive");
  if (max_iters < 1) throw ValidationError("weber config: max_iters must be positive");
  if (!(tol > 0.0)) throw ValidationError("weber config: tol must be positive");
}

void WeberProblem::validate() const {
  if (anchors.rows() < 1 || anchors.cols() < 1) {
    throw ValidationError("weber problem: no anchors");
  }
  if (weights.size() != anchors.rows()) {
    throw ValidationError("weber problem: weights do not match anchors");
  }
  bool any_positive = false;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ValidationError("weber problem: negative weight");
    if (weights[i] > 0.0) any_positive = true;
  }
  if (!any_positive) {
    throw ValidationError("isolated sample: no neighbors in graph");
  }
}

Vector weber_m_step(const Vector& x, const Vector& anchor, double weight, double mu) {
  if (!(mu > 0.0)) throw ValidationError("weber_m_step: mu must be positive");
  const Vector d = x - anchor;
  const double dist = d.norm();
  if (dist < 1e-12) return anchor;  // prox value at the kink
  const double step = std::min(weight / mu, dist);
  return x - (step / dist) * d;
}

Vector update_weber_w(const RowMatrix& m, const RowMatrix& u, double v,
                      const WeberConfig& cfg) {
  cfg.validate();
  const double n = static_cast<double>(m.rows());
  const double p = static_cast<double>(m.cols());
  Vector rhs = (cfg.mu * m.colwise().sum() + u.colwise().sum()).transpose();
  if (cfg.zero_sum) {
    rhs.array() -= v;
    // (mu n I + eta 1 1^T)^{-1} via Sherman-Morrison
    const double diag = cfg.mu * n;
    const double ones_coef = cfg.eta / (diag * (diag + cfg.eta * p));
    return rhs / diag - (ones_coef * rhs.sum()) * Vector::Ones(m.cols());
  }
  return rhs / (cfg.mu * n);
}

WeberSolution solve_weber(const WeberProblem& problem, const WeberConfig& cfg) {
  cfg.validate();
  problem.validate();
  const int n = static_cast<int>(problem.anchors.rows());
  const int p = static_cast<int>(problem.anchors.cols());

  Vector w = Vector::Zero(p);
  RowMatrix m = RowMatrix::Zero(n, p);
  RowMatrix u = RowMatrix::Zero(n, p);
  double v = 0.0;

  WeberSolution out;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    for (int i = 0; i < n; ++i) {
      const Vector x = w - u.row(i).transpose() / cfg.mu;
      m.row(i) =
          weber_m_step(x, problem.anchors.row(i).transpose(), problem.weights[i], cfg.mu)
              .transpose();
    }
    const Vector w_new = update_weber_w(m, u, v, cfg);
    const double change = (w_new - w).norm();
    w = w_new;
    for (int i = 0; i < n; ++i) {
      u.row(i) += cfg.mu * (m.row(i) - w.transpose());
    }
    double primal = 0.0;
    for (int i = 0; i < n; ++i) {
      primal = std::max(primal, (m.row(i).transpose() - w).norm());
    }
    if (cfg.zero_sum) {
      const double row_sum = w.sum();
      v += cfg.eta * row_sum;
      primal = std::max(primal, std::abs(row_sum));
    }
    out.iterations = iter;
    if (!w.allFinite()) {
      throw SolverDivergence("weber divergence at iteration " + std::to_string(iter), iter,
                             primal, change);
    }
    if (primal <= cfg.tol && change <= cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.w = std::move(w);
  return out;
}

double predict_response(const Vector& w, const Vector& z) {
  if (w.size() != z.size()) throw ValidationError("predict_response: shape mismatch");
  return z.dot(w);
}

}  // namespace cnlasso

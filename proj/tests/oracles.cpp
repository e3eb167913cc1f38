#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cnlasso::oracles {

Vector constrained_ls_kkt(const RowMatrix& z, const Vector& y) {
  const Eigen::Index p = z.cols();
  Matrix kkt = Matrix::Zero(p + 1, p + 1);
  kkt.topLeftCorner(p, p) = 2.0 * z.transpose() * z;
  kkt.topRightCorner(p, 1).setOnes();
  kkt.bottomLeftCorner(1, p).setOnes();
  Vector rhs = Vector::Zero(p + 1);
  rhs.head(p) = 2.0 * z.transpose() * y;
  const Vector solution = kkt.partialPivLu().solve(rhs);
  return solution.head(p);
}

double network_objective(const RowMatrix& w, const RowMatrix& z, const Vector& y,
                         const Matrix& r, double lambda1, double lambda2) {
  double value = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double resid = y[i] - z.row(i).dot(w.row(i));
    value += resid * resid;
  }
  for (Eigen::Index i = 1; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (r(i, j) > 0.0) value += lambda1 * r(i, j) * (w.row(i) - w.row(j)).norm();
    }
  }
  return value + lambda2 * w.cwiseAbs().sum();
}

namespace {

void project_zero_sum_rows(RowMatrix& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) w.row(i).array() -= w.row(i).mean();
}

double subgradient_network_run(const RowMatrix& z, const Vector& y, const Matrix& r,
                               double lambda1, double lambda2, bool zero_sum, long steps,
                               double step_scale) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  RowMatrix w = RowMatrix::Zero(n, p);
  RowMatrix grad(n, p);
  double best = std::numeric_limits<double>::infinity();
  for (long t = 0; t < steps; ++t) {
    grad.setZero();
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double resid = z.row(i).dot(w.row(i)) - y[i];
      value += resid * resid;
      grad.row(i) += 2.0 * resid * z.row(i);
    }
    for (Eigen::Index i = 1; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (r(i, j) <= 0.0) continue;
        const double dist = (w.row(i) - w.row(j)).norm();
        value += lambda1 * r(i, j) * dist;
        if (dist > 0.0) {
          const double coef = lambda1 * r(i, j) / dist;
          grad.row(i) += coef * (w.row(i) - w.row(j));
          grad.row(j) -= coef * (w.row(i) - w.row(j));
        }
      }
    }
    value += lambda2 * w.cwiseAbs().sum();
    grad += lambda2 * w.cwiseSign();
    best = std::min(best, value);

    const double alpha = step_scale / std::sqrt(static_cast<double>(t + 1));
    w -= alpha * grad;
    if (zero_sum) project_zero_sum_rows(w);
  }
  return best;
}

}  // namespace

double subgradient_network_lasso(const RowMatrix& z, const Vector& y, const Matrix& r,
                                 double lambda1, double lambda2, bool zero_sum,
                                 long steps_per_restart) {
  double best = std::numeric_limits<double>::infinity();
  for (double scale : {0.3, 0.03, 0.003}) {
    best = std::min(best, subgradient_network_run(z, y, r, lambda1, lambda2, zero_sum,
                                                  steps_per_restart, scale));
  }
  return best;
}

double weber_objective(const Vector& w, const RowMatrix& anchors, const Vector& weights) {
  double value = 0.0;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    value += weights[i] * (w.transpose() - anchors.row(i)).norm();
  }
  return value;
}

double subgradient_weber(const RowMatrix& anchors, const Vector& weights, bool zero_sum,
                         long steps_per_restart) {
  const Eigen::Index p = anchors.cols();
  double best = std::numeric_limits<double>::infinity();
  for (double scale : {0.3, 0.03, 0.003}) {
    Vector w = Vector::Zero(p);
    if (zero_sum) w.array() -= w.mean();
    for (long t = 0; t < steps_per_restart; ++t) {
      Vector grad = Vector::Zero(p);
      double value = 0.0;
      for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
        const Vector d = w - anchors.row(i).transpose();
        const double dist = d.norm();
        value += weights[i] * dist;
        if (dist > 0.0) grad += (weights[i] / dist) * d;
      }
      best = std::min(best, value);
      const double alpha = scale / std::sqrt(static_cast<double>(t + 1));
      w -= alpha * grad;
      if (zero_sum) w.array() -= w.mean();
    }
  }
  return best;
}

ReferenceRun reference_admm(const RowMatrix& z, const Vector& y, const Matrix& r,
                            const SolverConfig& cfg, int iters) {
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());

  auto idx = [n](int i, int j) { return i * n + j; };
  RowMatrix w = RowMatrix::Zero(n, p);
  RowMatrix b = RowMatrix::Zero(n, p);
  RowMatrix t = RowMatrix::Zero(n, p);
  Vector u = Vector::Zero(n);
  RowMatrix a = RowMatrix::Zero(n * n, p);  // ordered pair (i, j) at row i*n+j
  RowMatrix s = RowMatrix::Zero(n * n, p);

  std::vector<Eigen::LLT<Matrix>> factors;
  factors.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Matrix m = 2.0 * z.row(i).transpose() * z.row(i);
    m.diagonal().array() += cfg.rho * static_cast<double>(n - 1) + cfg.phi;
    if (cfg.zero_sum) m.array() += cfg.psi;
    factors.emplace_back(m);
  }

  auto soft = [](double x, double lam) {
    if (x > lam) return x - lam;
    if (x < -lam) return x + lam;
    return 0.0;
  };

  ReferenceRun out;
  out.w_per_iter.reserve(static_cast<std::size_t>(iters));
  for (int iter = 0; iter < iters; ++iter) {
    for (int i = 0; i < n; ++i) {
      Vector rhs = 2.0 * y[i] * z.row(i).transpose() - t.row(i).transpose() +
                   cfg.phi * b.row(i).transpose();
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        rhs += cfg.rho * (a.row(idx(i, j)) - s.row(idx(i, j))).transpose();
      }
      if (cfg.zero_sum) rhs.array() -= u[i];
      w.row(i) = factors[static_cast<std::size_t>(i)].solve(rhs).transpose();
    }
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        const Vector p1 = w.row(i).transpose() + s.row(idx(i, j)).transpose();
        const Vector p2 = w.row(j).transpose() + s.row(idx(j, i)).transpose();
        double theta = 1.0;
        const double coupling = cfg.lambda1 * r(i, j);
        if (coupling > 0.0) {
          const double gap = (p1 - p2).norm();
          theta = gap < 1e-12 ? 0.5 : std::max(1.0 - coupling / (cfg.rho * gap), 0.5);
        }
        a.row(idx(i, j)) = (theta * p1 + (1.0 - theta) * p2).transpose();
        a.row(idx(j, i)) = (p1 + p2).transpose() - a.row(idx(i, j));
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) {
        b(i, j) = soft(w(i, j) + t(i, j) / cfg.phi, cfg.lambda2 / cfg.phi);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        s.row(idx(i, j)) += cfg.rho * (w.row(i) - a.row(idx(i, j)));
      }
    }
    t += cfg.phi * (w - b);
    if (cfg.zero_sum) {
      for (int i = 0; i < n; ++i) u[i] += cfg.psi * w.row(i).sum();
    }
    out.w_per_iter.push_back(w);
  }
  out.b = b;
  return out;
}

}  // namespace cnlasso::oracles

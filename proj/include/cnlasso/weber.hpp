#pragma once

#include "cnlasso/common.hpp"

namespace cnlasso {

struct WeberConfig {
  double mu = 1.0;   // consensus step
  double eta = 1.0;  // zero-sum multiplier step
  int max_iters = 5000;
  double tol = 1e-6;
  bool zero_sum = true;  // false for anchors fitted without the constraint

  void validate() const;
};

// Weighted geometric-median instance: find w minimizing
// sum_i weights_i ||w - anchors_i||_2 subject to 1^T w = 0.
struct WeberProblem {
  RowMatrix anchors;  // n x p fitted coefficient vectors
  Vector weights;     // n nonnegative neighbor weights

  void validate() const;
};

struct WeberSolution {
  Vector w;
  int iterations = 0;
  bool converged = false;
};

// Prox of (weight/mu) ||m - anchor||_2 at x: full shrink to the anchor inside
// the dead zone, otherwise move weight/mu toward it.
Vector weber_m_step(const Vector& x, const Vector& anchor, double weight, double mu);

// (mu n I + eta 1 1^T)^{-1} [mu sum_i (m_i + u_i / mu) - v 1], closed form.
Vector update_weber_w(const RowMatrix& m, const RowMatrix& u, double v,
                      const WeberConfig& cfg);

WeberSolution solve_weber(const WeberProblem& problem, const WeberConfig& cfg = {});

// z^T w.
double predict_response(const Vector& w, const Vector& z);

}  // namespace cnlasso

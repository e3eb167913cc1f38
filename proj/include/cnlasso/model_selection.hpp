#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/constrained_lasso.hpp"
#include "cnlasso/similarity_graph.hpp"
#include "cnlasso/solver.hpp"
#include "cnlasso/weber.hpp"

namespace cnlasso {

double mse(const Vector& y_true, const Vector& y_pred);

// 1 - SS_res / SS_tot; negative for worse-than-mean predictors.
double r_squared(const Vector& y_true, const Vector& y_pred);

enum class FitMode { kProposed, kSnl, kCl };

std::string to_string(FitMode mode);
FitMode fit_mode_from_string(const std::string& name);

struct CvGrid {
  std::vector<double> lambda1;
  std::vector<double> lambda2;

  // 7 log-spaced points over [1e-2, 1e1] on each axis.
  static CvGrid defaults();
  void validate() const;
};

struct CvCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
  int fallback_count = 0;  // validation samples with no train neighbors
};

struct CvReport {
  std::vector<CvCell> cells;  // sorted by (lambda1, lambda2)
  int best_index = -1;        // minimum mean MSE; ties -> smallest lambda1, then lambda2
  std::vector<int> fold_of;
  Vector predictions;  // held-out prediction per sample at the best cell
  std::uint64_t seed = 0;
  int folds = 0;
  FitMode mode = FitMode::kProposed;

  const CvCell& best() const;
};

// Deterministic fold assignment: shuffled deal, sizes differ by at most one.
std::vector<int> make_folds(int n, int k, std::uint64_t seed);

// Coefficients for one held-out sample: the constrained Weber point anchored
// on the fitted train rows, or the anchor mean when every weight is zero
// (reported through used_fallback).
Vector held_out_coefficients(const RowMatrix& train_w, const Vector& weights,
                             const WeberConfig& cfg, bool* used_fallback = nullptr);

CvReport kfold_cv(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
                  const CvGrid& grid, int k, FitMode mode, std::uint64_t seed,
                  const SolverConfig& solver_cfg = {}, const WeberConfig& weber_cfg = {},
                  int threads = 1);

// k = n with identity folds; requires n >= 3. Held-out predictions for the
// best cell are in CvReport::predictions.
CvReport loocv(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
               const CvGrid& grid, FitMode mode, const SolverConfig& solver_cfg = {},
               const WeberConfig& weber_cfg = {}, int threads = 1);

}  // namespace cnlasso

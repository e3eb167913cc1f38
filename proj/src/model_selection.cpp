#include "cnlasso/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cnlasso/error.hpp"
#include "cnlasso/parallel.hpp"
#include "cnlasso/rng.hpp"

namespace cnlasso {

double mse(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw ValidationError("mse: length mismatch");
  }
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double r_squared(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw ValidationError("r_squared: length mismatch");
  }
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).matrix().squaredNorm();
  if (!(ss_tot > 0.0)) throw ValidationError("r_squared: zero-variance truth");
  const double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

std::string to_string(FitMode mode) {
  switch (mode) {
    case FitMode::kProposed:
      return "proposed";
    case FitMode::kSnl:
      return "snl";
    case FitMode::kCl:
      return "cl";
  }
  return "?";
}

FitMode fit_mode_from_string(const std::string& name) {
  if (name == "proposed") return FitMode::kProposed;
  if (name == "snl") return FitMode::kSnl;
  if (name == "cl") return FitMode::kCl;
  throw ParseError("unknown mode: " + name);
}

CvGrid CvGrid::defaults() {
  CvGrid grid;
  for (int k = 0; k <= 6; ++k) {
    grid.lambda1.push_back(std::pow(10.0, -2.0 + 0.5 * k));
  }
  grid.lambda2 = grid.lambda1;
  return grid;
}

void CvGrid::validate() const {
  if (lambda1.empty() || lambda2.empty()) throw ValidationError("cv grid: empty axis");
  for (double v : lambda1) {
    if (!(v >= 0.0)) throw ValidationError("cv grid: negative lambda1");
  }
  for (double v : lambda2) {
    if (!(v >= 0.0)) throw ValidationError("cv grid: negative lambda2");
  }
}

const CvCell& CvReport::best() const {
  if (best_index < 0 || best_index >= static_cast<int>(cells.size())) {
    throw ValidationError("cv report: no best cell");
  }
  return cells[static_cast<std::size_t>(best_index)];
}

std::vector<int> make_folds(int n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) throw ValidationError("make_folds: need 2 <= k <= n");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, streams::kFolds);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    fold_of[static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])] = m % k;
  }
  return fold_of;
}

Vector held_out_coefficients(const RowMatrix& train_w, const Vector& weights,
                             const WeberConfig& cfg, bool* used_fallback) {
  if (weights.size() != train_w.rows()) {
    throw ValidationError("held_out_coefficients: weights do not match anchors");
  }
  if (weights.maxCoeff() <= 0.0) {
    if (used_fallback) *used_fallback = true;
    return train_w.colwise().mean().transpose();
  }
  if (used_fallback) *used_fallback = false;
  return solve_weber({train_w, weights}, cfg).w;
}

namespace {

struct FoldData {
  std::vector<int> train;
  std::vector<int> valid;
  RowMatrix z_train;
  Vector y_train;
  SimilarityGraph graph_train{Matrix::Zero(1, 1)};
  RowMatrix z_valid;
  Vector y_valid;
  Matrix neighbor_weights;  // |valid| x |train|, from the full graph
};

struct CellJobResult {
  double fold_mse = 0.0;
  int fallbacks = 0;
  std::vector<std::pair<int, double>> predictions;  // (sample index, prediction)
};

}  // namespace

CvReport kfold_cv(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
                  const CvGrid& grid, int k, FitMode mode, std::uint64_t seed,
                  const SolverConfig& solver_cfg, const WeberConfig& weber_cfg, int threads) {
  grid.validate();
  solver_cfg.validate();
  const int n = static_cast<int>(z.rows());
  if (y.size() != n || graph.size() != n) throw ValidationError("kfold_cv: shape mismatch");
  if (k < 2 || k > n) throw ValidationError("kfold_cv: need 2 <= k <= n");

  CvReport report;
  report.seed = seed;
  report.folds = k;
  report.mode = mode;
  report.fold_of = make_folds(n, k, seed);

  // expand the grid in (lambda1, lambda2) order; CL ignores the lambda1 axis
  std::vector<double> l1_values = mode == FitMode::kCl ? std::vector<double>{0.0} : grid.lambda1;
  std::vector<double> l2_values = grid.lambda2;
  std::sort(l1_values.begin(), l1_values.end());
  std::sort(l2_values.begin(), l2_values.end());
  l1_values.erase(std::unique(l1_values.begin(), l1_values.end()), l1_values.end());
  l2_values.erase(std::unique(l2_values.begin(), l2_values.end()), l2_values.end());
  for (double l1 : l1_values) {
    for (double l2 : l2_values) {
      report.cells.push_back({l1, l2, 0.0, 0.0, 0});
    }
  }
  const int n_cells = static_cast<int>(report.cells.size());

  std::vector<FoldData> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& fd = folds[static_cast<std::size_t>(f)];
    for (int i = 0; i < n; ++i) {
      (report.fold_of[static_cast<std::size_t>(i)] == f ? fd.valid : fd.train).push_back(i);
    }
    const int n_train = static_cast<int>(fd.train.size());
    const int n_valid = static_cast<int>(fd.valid.size());
    if (n_train == 0 || n_valid == 0) throw ValidationError("kfold_cv: empty fold");
    fd.z_train.resize(n_train, z.cols());
    fd.y_train.resize(n_train);
    for (int a = 0; a < n_train; ++a) {
      fd.z_train.row(a) = z.row(fd.train[static_cast<std::size_t>(a)]);
      fd.y_train[a] = y[fd.train[static_cast<std::size_t>(a)]];
    }
    fd.z_valid.resize(n_valid, z.cols());
    fd.y_valid.resize(n_valid);
    fd.neighbor_weights.resize(n_valid, n_train);
    for (int v = 0; v < n_valid; ++v) {
      const int vi = fd.valid[static_cast<std::size_t>(v)];
      fd.z_valid.row(v) = z.row(vi);
      fd.y_valid[v] = y[vi];
      for (int a = 0; a < n_train; ++a) {
        fd.neighbor_weights(v, a) = graph(vi, fd.train[static_cast<std::size_t>(a)]);
      }
    }
    fd.graph_train = graph.restricted(fd.train);
  }

  WeberConfig wcfg = weber_cfg;
  wcfg.zero_sum = mode != FitMode::kSnl;

  const int n_jobs = n_cells * k;
  std::vector<CellJobResult> results(static_cast<std::size_t>(n_jobs));
  parallel_for(n_jobs, threads, [&](int job) {
    const int cell_id = job / k;
    const int f = job % k;
    const auto& cell = report.cells[static_cast<std::size_t>(cell_id)];
    const auto& fd = folds[static_cast<std::size_t>(f)];
    auto& out = results[static_cast<std::size_t>(job)];

    const int n_valid = static_cast<int>(fd.valid.size());
    Vector preds(n_valid);
    if (mode == FitMode::kCl) {
      ClConfig cl_cfg;
      cl_cfg.phi = solver_cfg.phi;
      cl_cfg.psi = solver_cfg.psi;
      cl_cfg.max_iters = solver_cfg.max_iters;
      cl_cfg.tol_primal = solver_cfg.tol_primal;
      cl_cfg.tol_dual = solver_cfg.tol_dual;
      const ClFit fit = fit_cl(fd.z_train, fd.y_train, cell.lambda2, cl_cfg);
      for (int v = 0; v < n_valid; ++v) {
        preds[v] = predict_cl(fit, fd.z_valid.row(v).transpose());
      }
    } else {
      SolverConfig cfg = solver_cfg;
      cfg.lambda1 = cell.lambda1;
      cfg.lambda2 = cell.lambda2;
      cfg.zero_sum = mode == FitMode::kProposed;
      const FitResult fit = fit_network_lasso(fd.z_train, fd.y_train, fd.graph_train, cfg);
      for (int v = 0; v < n_valid; ++v) {
        bool fallback = false;
        const Vector w_v = held_out_coefficients(
            fit.w, fd.neighbor_weights.row(v).transpose(), wcfg, &fallback);
        if (fallback) ++out.fallbacks;
        preds[v] = predict_response(w_v, fd.z_valid.row(v).transpose());
      }
    }
    out.fold_mse = mse(fd.y_valid, preds);
    out.predictions.reserve(static_cast<std::size_t>(n_valid));
    for (int v = 0; v < n_valid; ++v) {
      out.predictions.emplace_back(fd.valid[static_cast<std::size_t>(v)], preds[v]);
    }
  });

  // aggregate per cell
  std::vector<Vector> cell_predictions(static_cast<std::size_t>(n_cells), Vector::Zero(n));
  for (int cell_id = 0; cell_id < n_cells; ++cell_id) {
    auto& cell = report.cells[static_cast<std::size_t>(cell_id)];
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int f = 0; f < k; ++f) {
      const auto& out = results[static_cast<std::size_t>(cell_id * k + f)];
      sum += out.fold_mse;
      sum_sq += out.fold_mse * out.fold_mse;
      cell.fallback_count += out.fallbacks;
      for (const auto& [idx, pred] : out.predictions) {
        cell_predictions[static_cast<std::size_t>(cell_id)][idx] = pred;
      }
    }
    cell.mean_mse = sum / static_cast<double>(k);
    const double var =
        k > 1 ? std::max(0.0, (sum_sq - sum * sum / static_cast<double>(k)) /
                                  static_cast<double>(k - 1))
              : 0.0;
    cell.sd_mse = std::sqrt(var);
  }

  report.best_index = 0;
  for (int c = 1; c < n_cells; ++c) {
    if (report.cells[static_cast<std::size_t>(c)].mean_mse <
        report.cells[static_cast<std::size_t>(report.best_index)].mean_mse) {
      report.best_index = c;  // cells are sorted by (lambda1, lambda2): first min wins ties
    }
  }
  report.predictions = cell_predictions[static_cast<std::size_t>(report.best_index)];
  return report;
}

CvReport loocv(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
               const CvGrid& grid, FitMode mode, const SolverConfig& solver_cfg,
               const WeberConfig& weber_cfg, int threads) {
  const int n = static_cast<int>(z.rows());
  if (n < 3) throw ValidationError("loocv: need n >= 3");
  return kfold_cv(z, y, graph, grid, n, mode, 0, solver_cfg, weber_cfg, threads);
}

}  // namespace cnlasso

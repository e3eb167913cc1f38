#pragma once

#include <cstdint>
#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/compositional.hpp"
#include "cnlasso/model_selection.hpp"
#include "cnlasso/similarity_graph.hpp"

namespace cnlasso {

struct SimSpec {
  int p = 30;
  int n_per_cluster = 40;
  int n_train = 100;
  int n_valid = 20;
  double p_keep = 0.99;   // probability an edge of the true graph is observed
  double noise_sd = 0.1;
  int replicates = 10;
  std::uint64_t seed = 0;

  int n() const { return 3 * n_per_cluster; }
  void validate() const;
};

struct SimDataset {
  CompositionalDataset data;
  RowMatrix true_w;              // 3 x p planted coefficient rows, each zero-sum
  std::vector<int> labels;       // cluster id per sample, in {0, 1, 2}
  SimilarityGraph true_graph;    // block graph over the planted clusters
  SimilarityGraph observed_graph;
};

// Softmax onto the simplex; invariant to adding a constant to every entry.
Composition logistic_closure(const Vector& c);

// The three planted coefficient rows (first eight slots active, rest zero).
RowMatrix true_coefficients(int p);

SimDataset generate_dataset(const SimSpec& spec);

struct TrainValidSplit {
  std::vector<int> train;
  std::vector<int> valid;
};

// Validation quotas split evenly across clusters, remainders rotated by seed.
TrainValidSplit stratified_split(const std::vector<int>& labels, int n_valid,
                                 std::uint64_t seed);

struct BenchmarkRow {
  FitMode method = FitMode::kProposed;
  int p = 0;
  double p_keep = 0.0;
  double mse_mean = 0.0;
  double mse_sd = 0.0;
  int replicates = 0;  // replicates that completed without solver errors
  std::vector<double> per_replicate;
  std::vector<std::string> errors;
  // populated for the proposed method when cluster_tau > 0
  std::vector<std::vector<int>> fitted_train_clusters;
  std::vector<std::vector<int>> true_train_labels;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
};

struct BenchmarkOptions {
  int cv_folds = 5;
  double cluster_tau = 0.0;  // > 0: record extract_clusters on each final proposed fit
  int threads = 1;
  SolverConfig solver;
  WeberConfig weber;
};

// Per replicate: generate, split train/validation, CV per method, fit at the
// best cell, predict validation coefficients, record MSE.
BenchmarkResult run_benchmark(const SimSpec& spec, const CvGrid& grid,
                              const std::vector<FitMode>& methods,
                              const BenchmarkOptions& opts = {});

}  // namespace cnlasso

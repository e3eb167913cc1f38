#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/compositional.hpp"

namespace cnlasso {

// Symmetric nonnegative pairwise distances with zero diagonal.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Matrix d);

  const Matrix& values() const { return d_; }
  int size() const { return static_cast<int>(d_.rows()); }
  double operator()(int i, int j) const { return d_(i, j); }

 private:
  Matrix d_;
};

// The sample-relationship graph R: symmetric, nonnegative, zero diagonal.
class SimilarityGraph {
 public:
  explicit SimilarityGraph(Matrix r);

  const Matrix& weights() const { return r_; }
  int size() const { return static_cast<int>(r_.rows()); }
  double operator()(int i, int j) const { return r_(i, j); }
  bool is_binary() const;

  // Subgraph on idx (no renormalization).
  SimilarityGraph restricted(const std::vector<int>& idx) const;

 private:
  Matrix r_;
};

// Gower dissimilarity with numeric ranges fitted on a reference table;
// rows scored later are clamped into the fitted range.
class GowerModel {
 public:
  static GowerModel fit(const CovariateTable& reference);

  DistanceMatrix square_distances(const CovariateTable& x) const;
  Matrix cross_distances(const CovariateTable& rows, const CovariateTable& cols) const;

 private:
  struct Range {
    double lo = 0.0;
    double hi = 0.0;
  };
  // one entry per column; engaged iff the column is numeric
  std::vector<std::optional<Range>> ranges_;
  int cols_ = 0;

  double dissimilarity(const CovariateTable& a, int i, const CovariateTable& b, int j) const;
};

DistanceMatrix gower_distance(const CovariateTable& covariates);

// Euclidean distance between clr-transformed rows (Aitchison / log-ratio).
DistanceMatrix aitchison_distance(const CompositionalDataset& data);
Matrix aitchison_cross(const RowMatrix& comp_rows, const RowMatrix& comp_cols);

// S_ij = 1 iff j is among the k nearest neighbors of i (self excluded,
// ties broken toward the lowest index); returns (S + S^T) / 2.
SimilarityGraph knn_graph(const DistanceMatrix& d, int k);

// One-sided neighbor rows for out-of-sample points: entry (i, j) = 1 iff
// column j is among the k nearest reference points of row i.
Matrix knn_rows(const Matrix& cross_distances, int k);

// r_ij = 1 iff labels[i] == labels[j] and i != j.
SimilarityGraph cluster_block_graph(const std::vector<int>& labels);

// Flips each upper-triangular entry of a binary graph independently with
// probability 1 - p_keep, mirrors the result; deterministic given seed.
SimilarityGraph corrupt_graph(const SimilarityGraph& truth, double p_keep,
                              std::uint64_t seed);

}  // namespace cnlasso

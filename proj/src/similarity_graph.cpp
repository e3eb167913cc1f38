#include "cnlasso/similarity_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "cnlasso/error.hpp"
#include "cnlasso/rng.hpp"

namespace cnlasso {

namespace {

void check_square_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw ValidationError(std::string(what) + ": not square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw ValidationError(std::string(what) + ": nonzero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (m(i, j) != m(j, i)) throw ValidationError(std::string(what) + ": not symmetric");
      if (m(i, j) < 0.0) throw ValidationError(std::string(what) + ": negative entry");
    }
  }
}

}  // namespace

DistanceMatrix::DistanceMatrix(Matrix d) : d_(std::move(d)) {
  check_square_symmetric(d_, "distance matrix");
}

SimilarityGraph::SimilarityGraph(Matrix r) : r_(std::move(r)) {
  check_square_symmetric(r_, "similarity graph");
}

bool SimilarityGraph::is_binary() const {
  for (Eigen::Index i = 0; i < r_.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (r_(i, j) != 0.0 && r_(i, j) != 1.0) return false;
    }
  }
  return true;
}

SimilarityGraph SimilarityGraph::restricted(const std::vector<int>& idx) const {
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Matrix sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      sub(a, b) = r_(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  return SimilarityGraph(std::move(sub));
}

GowerModel GowerModel::fit(const CovariateTable& reference) {
  if (reference.empty()) throw ValidationError("no covariates for Gower");
  GowerModel model;
  model.cols_ = reference.cols();
  for (const auto& col : reference.columns()) {
    if (col.categorical) {
      model.ranges_.emplace_back(std::nullopt);
    } else {
      const auto [lo, hi] = std::minmax_element(col.numeric.begin(), col.numeric.end());
      model.ranges_.emplace_back(Range{*lo, *hi});
    }
  }
  return model;
}

double GowerModel::dissimilarity(const CovariateTable& a, int i, const CovariateTable& b,
                                 int j) const {
  double total = 0.0;
  for (int c = 0; c < cols_; ++c) {
    const auto& ca = a.columns()[static_cast<std::size_t>(c)];
    const auto& cb = b.columns()[static_cast<std::size_t>(c)];
    if (ca.categorical != cb.categorical) {
      throw ValidationError("Gower: column type mismatch between tables");
    }
    if (ca.categorical) {
      total += ca.labels[static_cast<std::size_t>(i)] == cb.labels[static_cast<std::size_t>(j)]
                   ? 0.0
                   : 1.0;
    } else {
      const auto& range = ranges_[static_cast<std::size_t>(c)];
      const double span = range->hi - range->lo;
      if (span > 0.0) {
        const double va = std::clamp(ca.numeric[static_cast<std::size_t>(i)], range->lo, range->hi);
        const double vb = std::clamp(cb.numeric[static_cast<std::size_t>(j)], range->lo, range->hi);
        total += std::abs(va - vb) / span;
      }
      // zero-range columns contribute 0
    }
  }
  return total / static_cast<double>(cols_);
}

DistanceMatrix GowerModel::square_distances(const CovariateTable& x) const {
  if (x.cols() != cols_) throw ValidationError("Gower: column count mismatch");
  const int n = x.rows();
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double v = dissimilarity(x, i, x, j);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(std::move(d));
}

Matrix GowerModel::cross_distances(const CovariateTable& rows, const CovariateTable& cols) const {
  if (rows.cols() != cols_ || cols.cols() != cols_) {
    throw ValidationError("Gower: column count mismatch");
  }
  Matrix d(rows.rows(), cols.rows());
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = 0; j < cols.rows(); ++j) {
      d(i, j) = dissimilarity(rows, i, cols, j);
    }
  }
  return d;
}

DistanceMatrix gower_distance(const CovariateTable& covariates) {
  return GowerModel::fit(covariates).square_distances(covariates);
}

DistanceMatrix aitchison_distance(const CompositionalDataset& data) {
  const RowMatrix c = clr_transform(data);
  const int n = data.n();
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double v = (c.row(i) - c.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(std::move(d));
}

Matrix aitchison_cross(const RowMatrix& comp_rows, const RowMatrix& comp_cols) {
  const RowMatrix a = clr_rows(comp_rows);
  const RowMatrix b = clr_rows(comp_cols);
  if (a.cols() != b.cols()) throw ValidationError("aitchison_cross: dimension mismatch");
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return d;
}

namespace {

// indices of the k nearest columns of row i (self handled by caller),
// ties broken toward the lowest index
std::vector<int> k_smallest(const Vector& dist, const std::vector<int>& candidates, int k) {
  std::vector<int> order = candidates;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

SimilarityGraph knn_graph(const DistanceMatrix& d, int k) {
  const int n = d.size();
  if (k < 1) throw ValidationError("knn_graph: k must be positive");
  if (k >= n) throw ValidationError("knn_graph: k must be smaller than n");
  Matrix s = Matrix::Zero(n, n);
  std::vector<int> others;
  for (int i = 0; i < n; ++i) {
    others.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    for (int j : k_smallest(d.values().row(i).transpose(), others, k)) {
      s(i, j) = 1.0;
    }
  }
  Matrix r = (s + s.transpose()) / 2.0;
  r.diagonal().setZero();
  return SimilarityGraph(std::move(r));
}

Matrix knn_rows(const Matrix& cross_distances, int k) {
  const int n_ref = static_cast<int>(cross_distances.cols());
  if (k < 1 || k > n_ref) throw ValidationError("knn_rows: need 1 <= k <= #reference points");
  Matrix s = Matrix::Zero(cross_distances.rows(), n_ref);
  std::vector<int> candidates(static_cast<std::size_t>(n_ref));
  std::iota(candidates.begin(), candidates.end(), 0);
  for (Eigen::Index i = 0; i < cross_distances.rows(); ++i) {
    for (int j : k_smallest(cross_distances.row(i).transpose(), candidates, k)) {
      s(i, j) = 1.0;
    }
  }
  return s;
}

SimilarityGraph cluster_block_graph(const std::vector<int>& labels) {
  if (labels.empty()) throw ValidationError("cluster_block_graph: empty labels");
  const int n = static_cast<int>(labels.size());
  Matrix r = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        r(i, j) = 1.0;
        r(j, i) = 1.0;
      }
    }
  }
  return SimilarityGraph(std::move(r));
}

SimilarityGraph corrupt_graph(const SimilarityGraph& truth, double p_keep,
                              std::uint64_t seed) {
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) {
    throw ValidationError("corrupt_graph: p_keep must be in [0, 1]");
  }
  if (!truth.is_binary()) throw ValidationError("corrupt_graph: graph must be binary");
  const int n = truth.size();
  Matrix r = Matrix::Zero(n, n);
  Rng rng(seed, streams::kGraph);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const bool keep = rng.uniform() < p_keep;
      const double truth_ij = truth(i, j);
      const double value = keep ? truth_ij : 1.0 - truth_ij;
      r(i, j) = value;
      r(j, i) = value;
    }
  }
  return SimilarityGraph(std::move(r));
}

}  // namespace cnlasso

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cnlasso/common.hpp"

namespace cnlasso {

inline constexpr double kSimplexTol = 1e-9;

// True iff all entries are strictly positive and the sum is within tol of 1.
bool validate_simplex(const Vector& values, double tol = kSimplexTol);

// A point in the open simplex: strictly positive proportions summing to one.
class Composition {
 public:
  explicit Composition(Vector values);

  const Vector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  Vector values_;
};

// Closure with zero replacement. Zeros are swapped for `zero_replacement`
// before dividing by the total. When the replacement is not given, the
// raw-count convention applies: zeros become 1.0, but an all-zero vector is
// rejected ("degenerate count vector").
Composition close(const Vector& counts,
                  std::optional<double> zero_replacement = std::nullopt);

// One mixed-type covariate column (numeric or categorical), used by Gower.
struct CovariateColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> numeric;      // filled when !categorical
  std::vector<std::string> labels;  // filled when categorical

  int rows() const {
    return static_cast<int>(categorical ? labels.size() : numeric.size());
  }
};

class CovariateTable {
 public:
  CovariateTable() = default;
  explicit CovariateTable(std::vector<CovariateColumn> columns);

  bool empty() const { return columns_.empty(); }
  int rows() const;
  int cols() const { return static_cast<int>(columns_.size()); }
  const std::vector<CovariateColumn>& columns() const { return columns_; }
  CovariateTable subset(const std::vector<int>& idx) const;

 private:
  std::vector<CovariateColumn> columns_;
};

// n samples: composition rows, responses, optional covariates and labels.
class CompositionalDataset {
 public:
  CompositionalDataset(RowMatrix compositions, Vector responses,
                       CovariateTable covariates = {},
                       std::vector<std::string> feature_names = {},
                       std::vector<std::string> sample_ids = {});

  int n() const { return static_cast<int>(compositions_.rows()); }
  int p() const { return static_cast<int>(compositions_.cols()); }

  const RowMatrix& compositions() const { return compositions_; }
  const Vector& responses() const { return responses_; }
  const CovariateTable& covariates() const { return covariates_; }
  bool has_covariates() const { return !covariates_.empty(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }

  CompositionalDataset subset(const std::vector<int>& idx) const;

 private:
  RowMatrix compositions_;
  Vector responses_;
  CovariateTable covariates_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> sample_ids_;
};

// Log-proportion features, z_ij = log x_ij.
class LogFeatures {
 public:
  explicit LogFeatures(RowMatrix z) : z_(std::move(z)) {}

  const RowMatrix& matrix() const { return z_; }
  int n() const { return static_cast<int>(z_.rows()); }
  int p() const { return static_cast<int>(z_.cols()); }

 private:
  RowMatrix z_;
};

LogFeatures log_transform(const CompositionalDataset& data);

// Elementwise log of composition rows; throws on nonpositive entries.
RowMatrix log_rows(const RowMatrix& compositions);

// Centered log-ratio: log-proportions minus their row mean. Rows sum to zero.
RowMatrix clr_transform(const CompositionalDataset& data);
RowMatrix clr_rows(const RowMatrix& compositions);

}  // namespace cnlasso

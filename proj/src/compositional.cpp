#include "cnlasso/compositional.hpp"

#include <cmath>
#include <utility>

#include "cnlasso/error.hpp"

namespace cnlasso {

bool validate_simplex(const Vector& values, double tol) {
  if (values.size() == 0) return false;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (!(values[j] > 0.0)) return false;
  }
  return std::abs(values.sum() - 1.0) <= tol;
}

Composition::Composition(Vector values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw ValidationError("composition needs at least two parts");
  }
  if (!validate_simplex(values_)) {
    throw ValidationError("not in open simplex");
  }
}

Composition close(const Vector& counts, std::optional<double> zero_replacement) {
  if (counts.size() < 2) {
    throw ValidationError("close: need at least two parts");
  }
  if (zero_replacement && !(*zero_replacement > 0.0)) {
    throw ValidationError("close: zero_replacement must be positive");
  }
  bool all_zero = true;
  for (Eigen::Index j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0.0) throw ValidationError("close: negative count");
    if (counts[j] != 0.0) all_zero = false;
  }
  if (all_zero && !zero_replacement) {
    throw ValidationError("degenerate count vector");
  }
  const double replacement = zero_replacement.value_or(1.0);
  Vector filled = counts;
  for (Eigen::Index j = 0; j < filled.size(); ++j) {
    if (filled[j] == 0.0) filled[j] = replacement;
  }
  return Composition(filled / filled.sum());
}

CovariateTable::CovariateTable(std::vector<CovariateColumn> columns)
    : columns_(std::move(columns)) {
  for (const auto& col : columns_) {
    if (col.rows() != columns_.front().rows()) {
      throw ValidationError("covariate columns have unequal lengths");
    }
  }
}

int CovariateTable::rows() const {
  return columns_.empty() ? 0 : columns_.front().rows();
}

CovariateTable CovariateTable::subset(const std::vector<int>& idx) const {
  std::vector<CovariateColumn> out;
  out.reserve(columns_.size());
  for (const auto& col : columns_) {
    CovariateColumn sub;
    sub.name = col.name;
    sub.categorical = col.categorical;
    for (int i : idx) {
      if (i < 0 || i >= col.rows()) throw ValidationError("covariate subset index out of range");
      if (col.categorical) {
        sub.labels.push_back(col.labels[static_cast<std::size_t>(i)]);
      } else {
        sub.numeric.push_back(col.numeric[static_cast<std::size_t>(i)]);
      }
    }
    out.push_back(std::move(sub));
  }
  return CovariateTable(std::move(out));
}

CompositionalDataset::CompositionalDataset(RowMatrix compositions, Vector responses,
                                           CovariateTable covariates,
                                           std::vector<std::string> feature_names,
                                           std::vector<std::string> sample_ids)
    : compositions_(std::move(compositions)),
      responses_(std::move(responses)),
      covariates_(std::move(covariates)),
      feature_names_(std::move(feature_names)),
      sample_ids_(std::move(sample_ids)) {
  const int n = static_cast<int>(compositions_.rows());
  const int p = static_cast<int>(compositions_.cols());
  if (n < 1 || p < 2) {
    throw ValidationError("dataset needs n >= 1 samples and p >= 2 parts");
  }
  if (responses_.size() != n) {
    throw ValidationError("responses length does not match sample count");
  }
  for (int i = 0; i < n; ++i) {
    if (!validate_simplex(compositions_.row(i).transpose())) {
      throw ValidationError("sample " + std::to_string(i) + " not in open simplex");
    }
  }
  if (!covariates_.empty() && covariates_.rows() != n) {
    throw ValidationError("covariate rows do not match sample count");
  }
  if (!feature_names_.empty() && static_cast<int>(feature_names_.size()) != p) {
    throw ValidationError("feature_names length does not match p");
  }
  if (!sample_ids_.empty() && static_cast<int>(sample_ids_.size()) != n) {
    throw ValidationError("sample_ids length does not match n");
  }
}

CompositionalDataset CompositionalDataset::subset(const std::vector<int>& idx) const {
  RowMatrix x(static_cast<Eigen::Index>(idx.size()), compositions_.cols());
  Vector y(static_cast<Eigen::Index>(idx.size()));
  std::vector<std::string> ids;
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const int i = idx[m];
    if (i < 0 || i >= n()) throw ValidationError("subset index out of range");
    x.row(static_cast<Eigen::Index>(m)) = compositions_.row(i);
    y[static_cast<Eigen::Index>(m)] = responses_[i];
    if (!sample_ids_.empty()) ids.push_back(sample_ids_[static_cast<std::size_t>(i)]);
  }
  CovariateTable cov = covariates_.empty() ? CovariateTable{} : covariates_.subset(idx);
  return CompositionalDataset(std::move(x), std::move(y), std::move(cov), feature_names_,
                              std::move(ids));
}

RowMatrix log_rows(const RowMatrix& compositions) {
  RowMatrix z(compositions.rows(), compositions.cols());
  for (Eigen::Index i = 0; i < compositions.rows(); ++i) {
    for (Eigen::Index j = 0; j < compositions.cols(); ++j) {
      const double x = compositions(i, j);
      if (!(x > 0.0)) throw ValidationError("not in open simplex");
      z(i, j) = std::log(x);
    }
  }
  return z;
}

LogFeatures log_transform(const CompositionalDataset& data) {
  return LogFeatures(log_rows(data.compositions()));
}

RowMatrix clr_rows(const RowMatrix& compositions) {
  RowMatrix z = log_rows(compositions);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    z.row(i).array() -= z.row(i).mean();
  }
  return z;
}

RowMatrix clr_transform(const CompositionalDataset& data) {
  return clr_rows(data.compositions());
}

}  // namespace cnlasso

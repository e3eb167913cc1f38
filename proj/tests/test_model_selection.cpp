#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "cnlasso/error.hpp"
#include "cnlasso/model_selection.hpp"
#include "cnlasso/rng.hpp"

using namespace cnlasso;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

struct CvInstance {
  RowMatrix z;
  Vector y;
  Matrix r;
};

CvInstance small_instance(Rng& rng, int n, int p) {
  CvInstance inst;
  inst.z.resize(n, p);
  inst.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) inst.z(i, j) = rng.normal();
    inst.y[i] = rng.normal();
  }
  inst.r = Matrix::Ones(n, n);
  inst.r.diagonal().setZero();
  return inst;
}

}  // namespace

TEST_CASE("mse basics") {
  CHECK(mse(vec({1, 2, 3}), vec({1, 2, 3})) == 0.0);
  CHECK(mse(vec({1, 0}), vec({0, 0})) == doctest::Approx(0.5));
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    Vector a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a[j] = rng.normal();
      b[j] = rng.normal();
    }
    CHECK(mse(a, b) == mse(b, a));
  }
  CHECK_THROWS_AS(mse(vec({1, 2}), vec({1})), ValidationError);
}

TEST_CASE("r squared basics") {
  CHECK(r_squared(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0));
  CHECK(r_squared(vec({1, 2, 3}), vec({2, 2, 2})) == doctest::Approx(0.0));
  CHECK(r_squared(vec({1, 2, 3}), vec({5, -2, 9})) < 0.0);
  CHECK_THROWS_AS(r_squared(vec({2, 2, 2}), vec({1, 2, 3})), ValidationError);
}

TEST_CASE("fold assignment covers every sample with balanced sizes") {
  for (int n : {7, 10, 23}) {
    for (int k : {2, 3, 5}) {
      const auto fold_of = make_folds(n, k, 99);
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int f : fold_of) {
        REQUIRE(f >= 0);
        REQUIRE(f < k);
        ++counts[static_cast<std::size_t>(f)];
      }
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
  }
  CHECK(make_folds(8, 4, 5) == make_folds(8, 4, 5));
  CHECK(make_folds(8, 4, 5) != make_folds(8, 4, 6));
  CHECK_THROWS_AS(make_folds(3, 4, 0), ValidationError);
}

TEST_CASE("held-out coefficients fall back to the anchor mean when isolated") {
  RowMatrix anchors(3, 2);
  anchors << 1, -1, 3, -3, 2, -2;
  bool fallback = false;
  const Vector w = held_out_coefficients(anchors, Vector::Zero(3), WeberConfig{}, &fallback);
  CHECK(fallback);
  CHECK(w[0] == doctest::Approx(2.0));
  CHECK(w[1] == doctest::Approx(-2.0));

  Vector weights = Vector::Zero(3);
  weights[1] = 1.0;
  const Vector w2 = held_out_coefficients(anchors, weights, WeberConfig{}, &fallback);
  CHECK_FALSE(fallback);
  CHECK((w2 - anchors.row(1).transpose()).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("single-cell grid reports that cell as best, and CL collapses lambda1") {
  Rng rng(42);
  const CvInstance inst = small_instance(rng, 10, 3);
  CvGrid grid;
  grid.lambda1 = {0.5};
  grid.lambda2 = {0.1};
  const CvReport report =
      kfold_cv(inst.z, inst.y, SimilarityGraph(inst.r), grid, 2, FitMode::kProposed, 7);
  REQUIRE(report.cells.size() == 1);
  CHECK(report.best_index == 0);
  CHECK(report.best().lambda1 == 0.5);
  CHECK(report.best().mean_mse >= 0.0);

  CvGrid wide;
  wide.lambda1 = {0.1, 1.0, 10.0};
  wide.lambda2 = {0.1, 1.0};
  const CvReport cl_report =
      kfold_cv(inst.z, inst.y, SimilarityGraph(inst.r), wide, 2, FitMode::kCl, 7);
  CHECK(cl_report.cells.size() == 2);  // lambda1 axis ignored for CL
  for (const auto& cell : cl_report.cells) CHECK(cell.lambda1 == 0.0);
}

TEST_CASE("fold partition is reported and deterministic across thread counts") {
  Rng rng(43);
  const CvInstance inst = small_instance(rng, 12, 3);
  CvGrid grid;
  grid.lambda1 = {0.1, 1.0};
  grid.lambda2 = {0.1};
  const SimilarityGraph graph(inst.r);
  const CvReport a = kfold_cv(inst.z, inst.y, graph, grid, 3, FitMode::kProposed, 11, {}, {}, 1);
  const CvReport b = kfold_cv(inst.z, inst.y, graph, grid, 3, FitMode::kProposed, 11, {}, {}, 4);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    CHECK(a.cells[c].mean_mse == b.cells[c].mean_mse);  // bitwise
    CHECK(a.cells[c].sd_mse == b.cells[c].sd_mse);
  }
  CHECK(a.fold_of == b.fold_of);
  CHECK((a.predictions - b.predictions).cwiseAbs().maxCoeff() == 0.0);

  std::set<int> folds_seen(a.fold_of.begin(), a.fold_of.end());
  CHECK(folds_seen.size() == 3);
}

TEST_CASE("isolated validation samples are flagged as fallbacks") {
  Rng rng(44);
  CvInstance inst = small_instance(rng, 8, 3);
  inst.r.row(0).setZero();  // sample 0 has no neighbors at all
  inst.r.col(0).setZero();
  CvGrid grid;
  grid.lambda1 = {0.5};
  grid.lambda2 = {0.1};
  const CvReport report =
      kfold_cv(inst.z, inst.y, SimilarityGraph(inst.r), grid, 4, FitMode::kProposed, 3);
  int total_fallbacks = 0;
  for (const auto& cell : report.cells) total_fallbacks += cell.fallback_count;
  CHECK(total_fallbacks >= 1);
  CHECK(report.predictions.allFinite());
}

TEST_CASE("loocv uses singleton folds and returns one prediction per sample") {
  Rng rng(45);
  const CvInstance inst = small_instance(rng, 6, 3);
  CvGrid grid;
  grid.lambda1 = {1.0};
  grid.lambda2 = {0.1};
  const CvReport report = loocv(inst.z, inst.y, SimilarityGraph(inst.r), grid, FitMode::kCl);
  CHECK(report.folds == 6);
  std::set<int> folds_seen(report.fold_of.begin(), report.fold_of.end());
  CHECK(folds_seen.size() == 6);
  CHECK(report.predictions.size() == 6);
  // internal consistency: the reported best-cell MSE equals the prediction MSE
  CHECK(mse(inst.y, report.predictions) ==
        doctest::Approx(report.best().mean_mse).epsilon(1e-12));
  CHECK_NOTHROW(r_squared(inst.y, report.predictions));
}

TEST_CASE("best cell ties break toward the smallest lambdas") {
  // duplicate lambda values collapse; equal-mean cells keep the first (smallest) pair
  Rng rng(46);
  const CvInstance inst = small_instance(rng, 8, 3);
  CvGrid grid;
  grid.lambda1 = {0.2, 0.2};
  grid.lambda2 = {0.3};
  const CvReport report =
      kfold_cv(inst.z, inst.y, SimilarityGraph(inst.r), grid, 2, FitMode::kSnl, 1);
  CHECK(report.cells.size() == 1);
  CHECK(report.best().lambda1 == 0.2);
}

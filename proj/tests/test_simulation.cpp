#include <cmath>

#include "doctest.h"

#include "cnlasso/error.hpp"
#include "cnlasso/rng.hpp"
#include "cnlasso/simulation.hpp"

using namespace cnlasso;

TEST_CASE("logistic closure: zero vector, forced exponentials, shift invariance") {
  const Composition uniform = logistic_closure(Vector::Zero(4));
  for (int j = 0; j < 4; ++j) CHECK(uniform.values()[j] == doctest::Approx(0.25));

  Vector c(2);
  c << std::log(2.0), 0.0;
  const Composition two_thirds = logistic_closure(c);
  CHECK(two_thirds.values()[0] == doctest::Approx(2.0 / 3.0));
  CHECK(two_thirds.values()[1] == doctest::Approx(1.0 / 3.0));

  Rng rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    Vector v(5);
    for (int j = 0; j < 5; ++j) v[j] = 3.0 * rng.normal();
    Vector shifted = v;
    shifted.array() += 17.0;
    const Vector a = logistic_closure(v).values();
    const Vector b = logistic_closure(shifted).values();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("planted coefficient rows sum to zero") {
  const RowMatrix w = true_coefficients(12);
  for (int g = 0; g < 3; ++g) {
    CHECK(std::abs(w.row(g).sum()) <= 1e-15);
    CHECK(w.row(g).tail(4).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(true_coefficients(7), ValidationError);
}

TEST_CASE("generated latent rows match the AR covariance in Monte Carlo") {
  // same draw machinery as the generator: omega + chol(Sigma) * eta
  const int p = 8;
  Matrix sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(0.2, std::abs(i - j));
  }
  const Matrix chol = Eigen::LLT<Matrix>(sigma).matrixL();
  Rng rng(52);
  const int draws = 100000;
  Matrix sum = Matrix::Zero(p, p);
  Vector mean = Vector::Zero(p);
  Vector eta(p);
  std::vector<Vector> rows;
  rows.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    for (int j = 0; j < p; ++j) eta[j] = rng.normal();
    rows.push_back(chol * eta);
    mean += rows.back();
  }
  mean /= draws;
  for (const auto& row : rows) {
    const Vector centered = row - mean;
    sum += centered * centered.transpose();
  }
  const Matrix cov = sum / (draws - 1);
  CHECK((cov - sigma).cwiseAbs().maxCoeff() <= 0.02);
}

TEST_CASE("generator is deterministic and respects the spec invariants") {
  SimSpec spec;
  spec.p = 10;
  spec.n_per_cluster = 5;
  spec.n_train = 12;
  spec.n_valid = 3;
  spec.p_keep = 0.9;
  spec.seed = 777;
  spec.replicates = 1;

  const SimDataset a = generate_dataset(spec);
  const SimDataset b = generate_dataset(spec);
  CHECK(a.data.compositions() == b.data.compositions());
  CHECK(a.data.responses() == b.data.responses());
  CHECK(a.observed_graph.weights() == b.observed_graph.weights());

  CHECK(a.data.n() == 15);
  for (int i = 0; i < a.data.n(); ++i) {
    CHECK(validate_simplex(a.data.compositions().row(i).transpose(), 1e-9));
    CHECK(a.labels[static_cast<std::size_t>(i)] == i / 5);
  }
  // true graph is the exact block graph of the labels
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < i; ++j) {
      const bool same = a.labels[static_cast<std::size_t>(i)] == a.labels[static_cast<std::size_t>(j)];
      CHECK(a.true_graph(i, j) == (same ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("noiseless generator reproduces the planted model exactly") {
  SimSpec spec;
  spec.p = 9;
  spec.n_per_cluster = 3;
  spec.n_train = 7;
  spec.n_valid = 2;
  spec.noise_sd = 0.0;
  spec.seed = 5;
  const SimDataset sim = generate_dataset(spec);
  const RowMatrix z = log_rows(sim.data.compositions());
  for (int i = 0; i < sim.data.n(); ++i) {
    const double expect = z.row(i).dot(sim.true_w.row(sim.labels[static_cast<std::size_t>(i)]));
    CHECK(sim.data.responses()[i] == expect);
  }
}

TEST_CASE("generator rejects undersized dimension") {
  SimSpec spec;
  spec.p = 7;
  CHECK_THROWS_AS(generate_dataset(spec), ValidationError);
}

TEST_CASE("stratified split balances validation quotas across clusters") {
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = i / 10;
  const TrainValidSplit split = stratified_split(labels, 8, 3);
  CHECK(split.valid.size() == 8);
  CHECK(split.train.size() == 22);
  std::vector<int> quota(3, 0);
  for (int i : split.valid) ++quota[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  std::sort(quota.begin(), quota.end());
  CHECK(quota == std::vector<int>({2, 3, 3}));

  // every sample lands in exactly one side
  std::vector<bool> seen(30, false);
  for (int i : split.train) seen[static_cast<std::size_t>(i)] = true;
  for (int i : split.valid) {
    CHECK_FALSE(seen[static_cast<std::size_t>(i)]);
    seen[static_cast<std::size_t>(i)] = true;
  }
  for (bool s : seen) CHECK(s);

  const TrainValidSplit again = stratified_split(labels, 8, 3);
  CHECK(again.train == split.train);
  CHECK(again.valid == split.valid);
}

TEST_CASE("benchmark smoke run: shapes, determinism, CL ignores the graph") {
  SimSpec spec;
  spec.p = 8;
  spec.n_per_cluster = 4;
  spec.n_train = 10;
  spec.n_valid = 2;
  spec.replicates = 2;
  spec.seed = 99;
  spec.p_keep = 0.99;

  CvGrid grid;
  grid.lambda1 = {0.5};
  grid.lambda2 = {0.1};
  BenchmarkOptions opts;
  opts.cv_folds = 2;

  const BenchmarkResult res = run_benchmark(
      spec, grid, {FitMode::kProposed, FitMode::kSnl, FitMode::kCl}, opts);
  REQUIRE(res.rows.size() == 3);
  for (const auto& row : res.rows) {
    CHECK(row.per_replicate.size() == 2);
    CHECK(row.errors.empty());
    CHECK(row.replicates == 2);
    CHECK(row.mse_mean >= 0.0);
  }

  // CL never reads the graph: changing p_keep leaves its row untouched
  SimSpec degraded = spec;
  degraded.p_keep = 0.5;
  const BenchmarkResult res2 = run_benchmark(degraded, grid, {FitMode::kCl}, opts);
  CHECK(res2.rows[0].per_replicate == res.rows[2].per_replicate);
}

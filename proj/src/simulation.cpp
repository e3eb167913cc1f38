#include "cnlasso/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cnlasso/error.hpp"
#include "cnlasso/rng.hpp"

namespace cnlasso {

void SimSpec::validate() const {
  if (p < 8) throw ValidationError("sim spec: p must be at least 8");
  if (n_per_cluster < 1) throw ValidationError("sim spec: n_per_cluster must be positive");
  if (3 * n_per_cluster != n_train + n_valid) {
    throw ValidationError("sim spec: 3 * n_per_cluster must equal n_train + n_valid");
  }
  if (n_valid < 1 || n_train < 1) throw ValidationError("sim spec: empty split");
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw ValidationError("sim spec: p_keep in [0, 1]");
  if (!(noise_sd >= 0.0)) throw ValidationError("sim spec: noise_sd must be nonnegative");
  if (replicates < 1) throw ValidationError("sim spec: replicates must be positive");
}

Composition logistic_closure(const Vector& c) {
  if (!c.allFinite()) throw ValidationError("logistic_closure: non-finite input");
  const Vector shifted = c.array() - c.maxCoeff();
  const Vector e = shifted.array().exp();
  return Composition(e / e.sum());
}

RowMatrix true_coefficients(int p) {
  if (p < 8) throw ValidationError("true_coefficients: p must be at least 8");
  RowMatrix w = RowMatrix::Zero(3, p);
  const double head[3][8] = {
      {1.0, -0.8, 0.6, 0.0, 0.0, -1.5, -0.5, 1.2},
      {0.0, -0.5, 1.0, 1.2, 0.1, -1.0, 0.0, -0.8},
      {0.0, 0.0, 0.0, 0.8, 1.0, 0.0, -0.8, -1.0},
  };
  for (int g = 0; g < 3; ++g) {
    for (int j = 0; j < 8; ++j) w(g, j) = head[g][j];
  }
  return w;
}

SimDataset generate_dataset(const SimSpec& spec) {
  spec.validate();
  const int n = spec.n();
  const int p = spec.p;

  // AR(1) covariance 0.2^|i-j| for the latent normal draws
  Matrix sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(0.2, std::abs(i - j));
  }
  const Matrix chol = Eigen::LLT<Matrix>(sigma).matrixL();

  Vector omega = Vector::Zero(p);
  for (int j = 0; j < std::min(5, p); ++j) omega[j] = std::log(0.5 * p);

  const RowMatrix w_true = true_coefficients(p);

  Rng base(spec.seed);
  Rng data_rng = base.derive(streams::kData);
  Rng noise_rng = base.derive(streams::kNoise);

  RowMatrix x(n, p);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Vector y(n);
  Vector eta(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) eta[j] = data_rng.normal();
    const Vector c = omega + chol * eta;
    x.row(i) = logistic_closure(c).values().transpose();
    labels[static_cast<std::size_t>(i)] = i / spec.n_per_cluster;
  }
  const RowMatrix z = log_rows(x);
  for (int i = 0; i < n; ++i) {
    y[i] = z.row(i).dot(w_true.row(labels[static_cast<std::size_t>(i)])) +
           spec.noise_sd * noise_rng.normal();
  }

  std::vector<std::string> feature_names;
  std::vector<std::string> sample_ids;
  feature_names.reserve(static_cast<std::size_t>(p));
  sample_ids.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < p; ++j) feature_names.push_back("x" + std::to_string(j + 1));
  for (int i = 0; i < n; ++i) sample_ids.push_back("s" + std::to_string(i + 1));

  SimilarityGraph true_graph = cluster_block_graph(labels);
  SimilarityGraph observed =
      corrupt_graph(true_graph, spec.p_keep, Rng::derive_seed(spec.seed, streams::kGraph));

  return SimDataset{
      CompositionalDataset(std::move(x), std::move(y), {}, std::move(feature_names),
                           std::move(sample_ids)),
      w_true, std::move(labels), std::move(true_graph), std::move(observed)};
}

TrainValidSplit stratified_split(const std::vector<int>& labels, int n_valid,
                                 std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (n_valid < 0 || n_valid >= n) throw ValidationError("stratified_split: bad n_valid");

  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[labels[static_cast<std::size_t>(i)]].push_back(i);
  const int n_clusters = static_cast<int>(clusters.size());

  Rng rng(seed, streams::kSplit);
  const int base = n_valid / n_clusters;
  const int extra = n_valid % n_clusters;
  const int rotation = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_clusters)));

  TrainValidSplit split;
  int c = 0;
  for (auto& [label, members] : clusters) {
    int quota = base + (((c - rotation) % n_clusters + n_clusters) % n_clusters < extra ? 1 : 0);
    if (quota > static_cast<int>(members.size())) {
      throw ValidationError("stratified_split: cluster smaller than its validation quota");
    }
    for (int i = static_cast<int>(members.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
      (static_cast<int>(m) < quota ? split.valid : split.train).push_back(members[m]);
    }
    ++c;
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.valid.begin(), split.valid.end());
  return split;
}

BenchmarkResult run_benchmark(const SimSpec& spec, const CvGrid& grid,
                              const std::vector<FitMode>& methods,
                              const BenchmarkOptions& opts) {
  spec.validate();
  grid.validate();
  if (methods.empty()) throw ValidationError("run_benchmark: no methods");

  BenchmarkResult result;
  for (FitMode m : methods) {
    BenchmarkRow row;
    row.method = m;
    row.p = spec.p;
    row.p_keep = spec.p_keep;
    result.rows.push_back(std::move(row));
  }

  for (int rep = 0; rep < spec.replicates; ++rep) {
    const std::uint64_t rep_seed =
        Rng::derive_seed(spec.seed, streams::kReplicateBase + static_cast<std::uint64_t>(rep));
    SimSpec rspec = spec;
    rspec.seed = rep_seed;
    const SimDataset sim = generate_dataset(rspec);
    const TrainValidSplit split =
        stratified_split(sim.labels, spec.n_valid, Rng::derive_seed(rep_seed, streams::kSplit));

    const RowMatrix z_full = log_rows(sim.data.compositions());
    const int n_train = static_cast<int>(split.train.size());
    const int n_valid = static_cast<int>(split.valid.size());
    RowMatrix z_train(n_train, spec.p);
    Vector y_train(n_train);
    for (int a = 0; a < n_train; ++a) {
      z_train.row(a) = z_full.row(split.train[static_cast<std::size_t>(a)]);
      y_train[a] = sim.data.responses()[split.train[static_cast<std::size_t>(a)]];
    }
    RowMatrix z_valid(n_valid, spec.p);
    Vector y_valid(n_valid);
    Matrix neighbor_weights(n_valid, n_train);
    for (int v = 0; v < n_valid; ++v) {
      const int vi = split.valid[static_cast<std::size_t>(v)];
      z_valid.row(v) = z_full.row(vi);
      y_valid[v] = sim.data.responses()[vi];
      for (int a = 0; a < n_train; ++a) {
        neighbor_weights(v, a) = sim.observed_graph(vi, split.train[static_cast<std::size_t>(a)]);
      }
    }
    const SimilarityGraph graph_train = sim.observed_graph.restricted(split.train);
    const std::uint64_t cv_seed = Rng::derive_seed(rep_seed, streams::kFolds);

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const FitMode mode = methods[mi];
      auto& row = result.rows[mi];
      try {
        const CvReport cv = kfold_cv(z_train, y_train, graph_train, grid, opts.cv_folds, mode,
                                     cv_seed, opts.solver, opts.weber, opts.threads);
        const CvCell best = cv.best();
        Vector preds(n_valid);
        if (mode == FitMode::kCl) {
          ClConfig cl_cfg;
          cl_cfg.phi = opts.solver.phi;
          cl_cfg.psi = opts.solver.psi;
          cl_cfg.max_iters = opts.solver.max_iters;
          cl_cfg.tol_primal = opts.solver.tol_primal;
          cl_cfg.tol_dual = opts.solver.tol_dual;
          const ClFit fit = fit_cl(z_train, y_train, best.lambda2, cl_cfg);
          for (int v = 0; v < n_valid; ++v) {
            preds[v] = predict_cl(fit, z_valid.row(v).transpose());
          }
        } else {
          SolverConfig cfg = opts.solver;
          cfg.lambda1 = best.lambda1;
          cfg.lambda2 = best.lambda2;
          cfg.zero_sum = mode == FitMode::kProposed;
          WeberConfig wcfg = opts.weber;
          wcfg.zero_sum = cfg.zero_sum;
          const FitResult fit = fit_network_lasso(z_train, y_train, graph_train, cfg);
          for (int v = 0; v < n_valid; ++v) {
            const Vector w_v =
                held_out_coefficients(fit.w, neighbor_weights.row(v).transpose(), wcfg);
            preds[v] = predict_response(w_v, z_valid.row(v).transpose());
          }
          if (opts.cluster_tau > 0.0 && mode == FitMode::kProposed) {
            row.fitted_train_clusters.push_back(extract_clusters(fit.w, opts.cluster_tau));
            std::vector<int> truth;
            truth.reserve(split.train.size());
            for (int i : split.train) truth.push_back(sim.labels[static_cast<std::size_t>(i)]);
            row.true_train_labels.push_back(std::move(truth));
          }
        }
        row.per_replicate.push_back(mse(y_valid, preds));
      } catch (const Error& e) {
        row.per_replicate.push_back(std::numeric_limits<double>::quiet_NaN());
        row.errors.push_back("replicate " + std::to_string(rep) + ": " + e.what());
      }
    }
  }

  for (auto& row : result.rows) {
    double sum = 0.0;
    double sum_sq = 0.0;
    int count = 0;
    for (double v : row.per_replicate) {
      if (std::isnan(v)) continue;
      sum += v;
      sum_sq += v * v;
      ++count;
    }
    row.replicates = count;
    row.mse_mean = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
    row.mse_sd = count > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / count) / (count - 1)))
                           : 0.0;
  }
  return result;
}

}  // namespace cnlasso

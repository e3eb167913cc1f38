#include "cnlasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "cnlasso/error.hpp"

namespace cnlasso {

void SolverConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ValidationError("solver config: lambda1 and lambda2 must be nonnegative");
  }
  if (!(rho > 0.0) || !(phi > 0.0)) {
    throw ValidationError("solver config: rho and phi must be positive");
  }
  if (zero_sum && !(psi > 0.0)) {
    throw ValidationError("solver config: psi must be positive in zero-sum mode");
  }
  if (max_iters < 1) throw ValidationError("solver config: max_iters must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) {
    throw ValidationError("solver config: tolerances must be positive");
  }
}

double soft_threshold(double x, double lam) {
  if (x > lam) return x - lam;
  if (x < -lam) return x + lam;
  return 0.0;
}

double fusion_theta(const Vector& wi_plus_sij, const Vector& wj_plus_sji, double lambda1,
                    double r_ij, double rho) {
  const double coupling = lambda1 * r_ij;
  if (coupling == 0.0) return 1.0;  // no penalty on this pair
  const double gap = (wi_plus_sij - wj_plus_sji).norm();
  if (gap < 1e-12) return 0.5;  // fully shrunk regime: prox is the midpoint
  return std::max(1.0 - coupling / (rho * gap), 0.5);
}

std::pair<Vector, Vector> fuse_pair(const Vector& wi_plus_sij, const Vector& wj_plus_sji,
                                    double lambda1, double r_ij, double rho) {
  const double theta = fusion_theta(wi_plus_sij, wj_plus_sji, lambda1, r_ij, rho);
  Vector a_ij = theta * wi_plus_sij + (1.0 - theta) * wj_plus_sji;
  Vector a_ji = (wi_plus_sij + wj_plus_sji) - a_ij;  // pair sum preserved exactly
  return {std::move(a_ij), std::move(a_ji)};
}

double objective_value(const RowMatrix& w, const RowMatrix& z, const Vector& y,
                       const SimilarityGraph& graph, double lambda1, double lambda2) {
  const int n = static_cast<int>(w.rows());
  if (z.rows() != n || z.cols() != w.cols() || y.size() != n || graph.size() != n) {
    throw ValidationError("objective_value: shape mismatch");
  }
  double fit = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - z.row(i).dot(w.row(i));
    fit += r * r;
  }
  double fuse = 0.0;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      const double r_ij = graph(i, j);
      if (r_ij > 0.0) fuse += r_ij * (w.row(i) - w.row(j)).norm();
    }
  }
  return fit + lambda1 * fuse + lambda2 * w.cwiseAbs().sum();
}

Vector solve_w_subproblem(const Vector& z_i, double y_i, const Vector& sum_a_minus_s,
                          const Vector& t_i, const Vector& b_i, double u_i, int n,
                          const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index p = z_i.size();
  if (sum_a_minus_s.size() != p || t_i.size() != p || b_i.size() != p) {
    throw ValidationError("solve_w_subproblem: shape mismatch");
  }
  Matrix m = 2.0 * z_i * z_i.transpose();
  m.diagonal().array() += cfg.rho * static_cast<double>(n - 1) + cfg.phi;
  Vector rhs = 2.0 * y_i * z_i + cfg.rho * sum_a_minus_s - t_i + cfg.phi * b_i;
  if (cfg.zero_sum) {
    m.array() += cfg.psi;
    rhs.array() -= u_i;
  }
  if (!rhs.allFinite()) throw ValidationError("solve_w_subproblem: non-finite input");
  return Eigen::LLT<Matrix>(m).solve(rhs);
}

NetworkLassoSolver::NetworkLassoSolver(RowMatrix z, Vector y, const SimilarityGraph& graph,
                                       SolverConfig cfg)
    : z_(std::move(z)), y_(std::move(y)), cfg_(cfg) {
  cfg_.validate();
  n_ = static_cast<int>(z_.rows());
  p_ = static_cast<int>(z_.cols());
  if (n_ < 1 || p_ < 1) throw ValidationError("solver: empty data");
  if (y_.size() != n_) throw ValidationError("solver: responses do not match samples");
  if (graph.size() != n_) throw ValidationError("solver: graph size does not match samples");
  if (!z_.allFinite() || !y_.allFinite()) throw ValidationError("solver: non-finite data");

  for (int i = 1; i < n_; ++i) {
    for (int j = 0; j < i; ++j) {
      if (graph(i, j) > 0.0) edges_.push_back({i, j, graph(i, j)});
    }
  }
  implicit_pairs_.assign(static_cast<std::size_t>(n_), n_ - 1);
  for (const auto& e : edges_) {
    --implicit_pairs_[static_cast<std::size_t>(e.i)];
    --implicit_pairs_[static_cast<std::size_t>(e.j)];
  }

  st_.w = RowMatrix::Zero(n_, p_);
  st_.b = RowMatrix::Zero(n_, p_);
  st_.t = RowMatrix::Zero(n_, p_);
  st_.u = Vector::Zero(n_);
  const Eigen::Index rows_2e = 2 * static_cast<Eigen::Index>(edges_.size());
  st_.a = RowMatrix::Zero(rows_2e, p_);
  st_.s = RowMatrix::Zero(rows_2e, p_);
  sum_a_minus_s_ = RowMatrix::Zero(n_, p_);

  // Sherman-Morrison pieces: M_i = K + 2 z_i z_i^T with K = c I (+ psi 1 1^T).
  base_diag_ = cfg_.rho * static_cast<double>(n_ - 1) + cfg_.phi;
  kinv_scale_ = 1.0 / base_diag_;
  kinv_ones_ = cfg_.zero_sum
                   ? cfg_.psi / (base_diag_ * (base_diag_ + cfg_.psi * static_cast<double>(p_)))
                   : 0.0;
  kinv_z_ = RowMatrix(n_, p_);
  sm_denom_ = Vector(n_);
  for (int i = 0; i < n_; ++i) {
    Vector g = kinv_scale_ * z_.row(i).transpose();
    if (cfg_.zero_sum) g.array() -= kinv_ones_ * z_.row(i).sum();
    sm_denom_[i] = 1.0 + 2.0 * z_.row(i).dot(g);
    kinv_z_.row(i) = g.transpose();
  }

  rhs_.resize(p_);
  p1_.resize(p_);
  p2_.resize(p_);
}

void NetworkLassoSolver::update_w() {
  double worst_change2 = 0.0;
  double* __restrict__ rhs = rhs_.data();
  const double two_gdot_scale = 2.0;
  for (int i = 0; i < n_; ++i) {
    // zero-weight partners hold a_{i,j} = w_i^(k), s_{i,j} = 0 implicitly
    const double* __restrict__ z = &z_(i, 0);
    const double* __restrict__ sums = &sum_a_minus_s_(i, 0);
    const double* __restrict__ t = &st_.t(i, 0);
    const double* __restrict__ b = &st_.b(i, 0);
    const double* __restrict__ g = &kinv_z_(i, 0);
    double* __restrict__ w = &st_.w(i, 0);
    const double y2 = 2.0 * y_[i];
    const double zc = cfg_.rho * static_cast<double>(implicit_pairs_[static_cast<std::size_t>(i)]);
    const double u_i = cfg_.zero_sum ? st_.u[i] : 0.0;

    double rhs_sum = 0.0;
    double g_dot = 0.0;
    for (int k = 0; k < p_; ++k) {
      const double v = y2 * z[k] + cfg_.rho * sums[k] + zc * w[k] - t[k] + cfg_.phi * b[k] - u_i;
      rhs[k] = v;
      rhs_sum += v;
      g_dot += g[k] * v;
    }
    const double ones_term = cfg_.zero_sum ? kinv_ones_ * rhs_sum : 0.0;
    const double g_scale = two_gdot_scale * g_dot / sm_denom_[i];
    double change2 = 0.0;
    for (int k = 0; k < p_; ++k) {
      const double w_new = kinv_scale_ * rhs[k] - ones_term - g_scale * g[k];
      const double d = w_new - w[k];
      change2 += d * d;
      w[k] = w_new;
    }
    worst_change2 = std::max(worst_change2, change2);
  }
  res_dual_ = std::sqrt(worst_change2);
}

void NetworkLassoSolver::update_a() {
  double* __restrict__ buf1 = p1_.data();
  double* __restrict__ buf2 = p2_.data();
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    const double* __restrict__ wi = &st_.w(edge.i, 0);
    const double* __restrict__ wj = &st_.w(edge.j, 0);
    const Eigen::Index fw = static_cast<Eigen::Index>(2 * e);
    const double* __restrict__ sf = &st_.s(fw, 0);
    const double* __restrict__ sb = &st_.s(fw + 1, 0);
    double* __restrict__ af = &st_.a(fw, 0);
    double* __restrict__ ab = &st_.a(fw + 1, 0);

    for (int k = 0; k < p_; ++k) {
      buf1[k] = wi[k] + sf[k];
      buf2[k] = wj[k] + sb[k];
    }
    const double coupling = cfg_.lambda1 * edge.r;
    double theta = 1.0;
    if (coupling != 0.0) {
      const double gap = std::sqrt((p1_ - p2_).squaredNorm());
      theta = gap < 1e-12 ? 0.5 : std::max(1.0 - coupling / (cfg_.rho * gap), 0.5);
    }
    const double omega = 1.0 - theta;
    for (int k = 0; k < p_; ++k) {
      const double afk = theta * buf1[k] + omega * buf2[k];
      af[k] = afk;
      ab[k] = (buf1[k] + buf2[k]) - afk;
    }
  }
}

void NetworkLassoSolver::update_b() {
  const double thr = cfg_.lambda2 / cfg_.phi;
  const double inv_phi = 1.0 / cfg_.phi;
  for (int i = 0; i < n_; ++i) {
    const double* __restrict__ w = &st_.w(i, 0);
    const double* __restrict__ t = &st_.t(i, 0);
    double* __restrict__ b = &st_.b(i, 0);
    for (int k = 0; k < p_; ++k) {
      b[k] = soft_threshold(w[k] + t[k] * inv_phi, thr);
    }
  }
}

void NetworkLassoSolver::update_duals() {
  double worst_fusion2 = 0.0;
  sum_a_minus_s_.setZero();
  double* __restrict__ buf1 = p1_.data();
  double* __restrict__ buf2 = p2_.data();
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    const double* __restrict__ wi = &st_.w(edge.i, 0);
    const double* __restrict__ wj = &st_.w(edge.j, 0);
    double* __restrict__ sum_i = &sum_a_minus_s_(edge.i, 0);
    double* __restrict__ sum_j = &sum_a_minus_s_(edge.j, 0);
    const Eigen::Index fw = static_cast<Eigen::Index>(2 * e);
    const double* __restrict__ af = &st_.a(fw, 0);
    const double* __restrict__ ab = &st_.a(fw + 1, 0);
    double* __restrict__ sf = &st_.s(fw, 0);
    double* __restrict__ sb = &st_.s(fw + 1, 0);

    for (int k = 0; k < p_; ++k) {
      const double d1 = wi[k] - af[k];
      const double d2 = wj[k] - ab[k];
      buf1[k] = d1;
      buf2[k] = d2;
      const double sfk = sf[k] + cfg_.rho * d1;
      const double sbk = sb[k] + cfg_.rho * d2;
      sf[k] = sfk;
      sb[k] = sbk;
      sum_i[k] += af[k] - sfk;
      sum_j[k] += ab[k] - sbk;
    }
    worst_fusion2 = std::max({worst_fusion2, p1_.squaredNorm(), p2_.squaredNorm()});
  }
  res_fusion_ = std::sqrt(worst_fusion2);

  double worst_sparse2 = 0.0;
  res_zero_sum_ = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double* __restrict__ w = &st_.w(i, 0);
    const double* __restrict__ b = &st_.b(i, 0);
    double* __restrict__ t = &st_.t(i, 0);
    for (int k = 0; k < p_; ++k) {
      const double d = w[k] - b[k];
      buf1[k] = d;
      t[k] += cfg_.phi * d;
    }
    worst_sparse2 = std::max(worst_sparse2, p1_.squaredNorm());
    if (cfg_.zero_sum) {
      const double row_sum = st_.w.row(i).sum();
      res_zero_sum_ = std::max(res_zero_sum_, std::abs(row_sum));
      st_.u[i] += cfg_.psi * row_sum;
    }
  }
  res_sparse_ = std::sqrt(worst_sparse2);
}

void NetworkLassoSolver::refresh_pair_sums() {
  sum_a_minus_s_.setZero();
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    const Eigen::Index fw = static_cast<Eigen::Index>(2 * e);
    const Eigen::Index bw = fw + 1;
    sum_a_minus_s_.row(edge.i) += st_.a.row(fw) - st_.s.row(fw);
    sum_a_minus_s_.row(edge.j) += st_.a.row(bw) - st_.s.row(bw);
  }
}

double NetworkLassoSolver::objective() const {
  double fit = 0.0;
  for (int i = 0; i < n_; ++i) {
    const double r = y_[i] - z_.row(i).dot(st_.w.row(i));
    fit += r * r;
  }
  double fuse = 0.0;
  for (const auto& edge : edges_) {
    fuse += edge.r * (st_.w.row(edge.i) - st_.w.row(edge.j)).norm();
  }
  return fit + cfg_.lambda1 * fuse + cfg_.lambda2 * st_.w.cwiseAbs().sum();
}

IterationStats NetworkLassoSolver::sweep() {
  update_w();
  update_a();
  update_b();
  update_duals();
  const double primal = std::max({res_fusion_, res_sparse_, res_zero_sum_});
  return IterationStats{primal, res_dual_, objective()};
}

FitResult NetworkLassoSolver::run() {
  FitResult result;
  result.trace.reserve(static_cast<std::size_t>(std::min(cfg_.max_iters, 4096)));
  for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
    const IterationStats stats = sweep();
    result.trace.push_back(stats);
    result.iterations = iter;
    if (!std::isfinite(stats.objective) || !st_.w.allFinite()) {
      throw SolverDivergence("divergence at iteration " + std::to_string(iter), iter,
                             stats.primal_residual, stats.dual_residual);
    }
    if (stats.primal_residual <= cfg_.tol_primal && stats.dual_residual <= cfg_.tol_dual) {
      result.converged = true;
      break;
    }
  }
  result.w = st_.w;
  result.b = st_.b;
  return result;
}

FitResult fit_network_lasso(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
                            const SolverConfig& cfg) {
  NetworkLassoSolver solver(z, y, graph, cfg);
  return solver.run();
}

std::vector<int> extract_clusters(const RowMatrix& w, double tau) {
  if (!(tau > 0.0)) throw ValidationError("extract_clusters: tau must be positive");
  const int n = static_cast<int>(w.rows());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if ((w.row(i) - w.row(j)).cwiseAbs().maxCoeff() < tau) {
        parent[static_cast<std::size_t>(find(i))] = find(j);
      }
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (labels[static_cast<std::size_t>(root)] < 0) labels[static_cast<std::size_t>(root)] = next++;
    labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(root)];
  }
  return labels;
}

std::vector<int> agglomerative_clusters(const RowMatrix& w, int k) {
  const int n = static_cast<int>(w.rows());
  if (k < 1 || k > n) throw ValidationError("agglomerative_clusters: need 1 <= k <= n");
  // complete linkage, naive O(n^3)
  std::vector<std::vector<int>> groups;
  groups.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) groups.push_back({i});
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = (w.row(i) - w.row(j)).norm();
  }
  auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
    double worst = 0.0;
    for (int i : a) {
      for (int j : b) worst = std::max(worst, d(i, j));
    }
    return worst;
  };
  while (static_cast<int>(groups.size()) > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const double v = linkage(groups[i], groups[j]);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  // stable numbering: order groups by smallest member
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
  });
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int i : groups[g]) labels[static_cast<std::size_t>(i)] = static_cast<int>(g);
  }
  return labels;
}

}  // namespace cnlasso

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cnlasso/common.hpp"
#include "cnlasso/similarity_graph.hpp"

namespace cnlasso {

struct SolverConfig {
  double lambda1 = 0.0;  // network fusion penalty
  double lambda2 = 0.0;  // l1 penalty
  double rho = 1.0;      // consensus step for the pair copies
  double phi = 1.0;      // consensus step for the sparse copy
  double psi = 1.0;      // step for the zero-sum multiplier
  int max_iters = 2000;
  double tol_primal = 1e-5;
  double tol_dual = 1e-5;
  bool zero_sum = true;  // false = SNL variant (no zero-sum constraint)

  void validate() const;
};

struct IterationStats {
  double primal_residual;
  double dual_residual;
  double objective;
};

struct FitResult {
  RowMatrix w;  // smooth ADMM iterate (zero-sum at tolerance in constrained mode)
  RowMatrix b;  // soft-thresholded copy with exact zeros; the reported coefficients
  int iterations = 0;
  bool converged = false;
  std::vector<IterationStats> trace;
  std::optional<std::vector<int>> cluster_labels;
};

// sign(x) * max(|x| - lam, 0)
double soft_threshold(double x, double lam);

// Mixing weight for the fusion prox of one pair: clamped to [0.5, 1], with
// theta = 1 when the pair carries no penalty and theta = 0.5 when the
// displacement is numerically zero.
double fusion_theta(const Vector& wi_plus_sij, const Vector& wj_plus_sji, double lambda1,
                    double r_ij, double rho);

// Joint minimizer (a_ij, a_ji) of one pair block; preserves the pair sum exactly.
std::pair<Vector, Vector> fuse_pair(const Vector& wi_plus_sij, const Vector& wj_plus_sji,
                                    double lambda1, double r_ij, double rho);

// Sum_i (y_i - z_i^T w_i)^2 + lambda1 * sum_{i>j} r_ij ||w_i - w_j||_2
//   + lambda2 * sum_i ||w_i||_1   (each unordered pair counted once)
double objective_value(const RowMatrix& w, const RowMatrix& z, const Vector& y,
                       const SimilarityGraph& graph, double lambda1, double lambda2);

// One coefficient-block solve:
//   [2 z z^T + (rho (n-1) + phi) I + psi 1 1^T] w =
//       2 y z + rho * sum_a_minus_s - t + phi b - u 1
// (psi / u terms dropped when cfg.zero_sum is false). Direct SPD factorization;
// the in-solver fast path must agree with this to 1e-10.
Vector solve_w_subproblem(const Vector& z_i, double y_i, const Vector& sum_a_minus_s,
                          const Vector& t_i, const Vector& b_i, double u_i, int n,
                          const SolverConfig& cfg);

// Unordered pair with positive weight; i > j.
struct PairEdge {
  int i;
  int j;
  double r;
};

// Variables of the splitting. Pair copies and their duals are materialized
// only for edges (r_ij > 0): with theta(r=0) = 1 a zero-weight pair keeps
// s_ij = 0 and a_ij = w_i for the whole run, so it is carried implicitly.
struct AdmmState {
  RowMatrix w;  // n x p
  RowMatrix b;  // n x p
  RowMatrix t;  // n x p dual for w = b
  Vector u;     // n, dual for the per-row zero-sum constraint
  RowMatrix a;  // 2E x p; row 2e = a_{i,j}, row 2e+1 = a_{j,i} for edge e
  RowMatrix s;  // 2E x p duals, same layout
};

class NetworkLassoSolver {
 public:
  NetworkLassoSolver(RowMatrix z, Vector y, const SimilarityGraph& graph, SolverConfig cfg);

  FitResult run();

  // One sweep = update_w, update_a, update_b, update_duals.
  IterationStats sweep();
  void update_w();
  void update_a();
  void update_b();
  void update_duals();

  double objective() const;

  const AdmmState& state() const { return st_; }
  AdmmState& state() { return st_; }
  // Recompute the cached pair sums after editing a or s directly.
  void refresh_pair_sums();

  const std::vector<PairEdge>& edges() const { return edges_; }
  int n() const { return n_; }
  int p() const { return p_; }

 private:
  RowMatrix z_;
  Vector y_;
  SolverConfig cfg_;
  int n_ = 0;
  int p_ = 0;

  std::vector<PairEdge> edges_;
  std::vector<int> implicit_pairs_;  // per row: count of zero-weight partners

  AdmmState st_;
  RowMatrix sum_a_minus_s_;  // n x p, over edges only

  // Sherman-Morrison data for the per-sample systems
  RowMatrix kinv_z_;   // n x p rows g_i = K^{-1} z_i
  Vector sm_denom_;    // 1 + 2 z_i^T g_i
  double base_diag_ = 0.0;   // rho (n-1) + phi
  double kinv_scale_ = 0.0;  // 1 / base_diag
  double kinv_ones_ = 0.0;   // psi / (c (c + psi p)), zero-sum mode only

  // residuals of the latest sweep
  double res_fusion_ = 0.0;
  double res_sparse_ = 0.0;
  double res_zero_sum_ = 0.0;
  double res_dual_ = 0.0;

  // scratch rows
  Vector rhs_, p1_, p2_;
};

FitResult fit_network_lasso(const RowMatrix& z, const Vector& y, const SimilarityGraph& graph,
                            const SolverConfig& cfg);

// Connected components of {(i,j): ||w_i - w_j||_inf < tau}, labeled by first
// appearance.
std::vector<int> extract_clusters(const RowMatrix& w, double tau);

// Complete-linkage agglomerative clustering of the rows into k groups.
std::vector<int> agglomerative_clusters(const RowMatrix& w, int k);

}  // namespace cnlasso

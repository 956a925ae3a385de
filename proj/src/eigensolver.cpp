// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "msnet/msbasis.hpp"

namespace msnet {

namespace {

/// Main-cluster view: local cluster numbering plus the normalized operator
/// A = D^{-1/2} L D^{-1/2} in CSR form.
struct ClusterProblem {
  std::vector<Index> cluster_to_local;
  std::vector<double> inv_sqrt_degree;
  SparseOperator normalized;  // symmetric, spectrum in [0, 2]
};

ClusterProblem build_cluster_problem(const LocalSubnetwork& sub) {
  ClusterProblem prob;
  std::vector<Index> local_to_cluster(sub.global_nodes.size(), -1);
  for (Index i = 0; i < sub.n_local(); ++i) {
    if (sub.in_main[i]) {
      local_to_cluster[i] = static_cast<Index>(prob.cluster_to_local.size());
      prob.cluster_to_local.push_back(i);
    }
  }
  std::vector<WeightedEdge> cluster_edges;
  cluster_edges.reserve(sub.edges.size());
  for (const auto& e : sub.edges) {
    const Index a = local_to_cluster[e.a];
    const Index b = local_to_cluster[e.b];
    if (a >= 0 && b >= 0) cluster_edges.push_back({a, b, e.weight});
  }
  const Index nc = static_cast<Index>(prob.cluster_to_local.size());
  SparseOperator lap = assemble_laplacian_from_edges(nc, cluster_edges);
  const auto degree = lap.diagonal_values();
  prob.inv_sqrt_degree.resize(degree.size());
  for (Index i = 0; i < nc; ++i) {
    if (!(degree[i] > 0.0))
      throw MsError(fmt::format(
          "cluster node {} has zero degree; cluster is not edge-connected", i));
    prob.inv_sqrt_degree[i] = 1.0 / std::sqrt(degree[i]);
  }
  // Symmetric scaling keeps CSR structure; values become s_i * L_ij * s_j.
  SparseOperator scaled = lap;
  auto vals = scaled.mutable_values();
  const auto offs = scaled.row_offsets();
  const auto cols = scaled.col_indices();
  for (Index i = 0; i < nc; ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k)
      vals[k] *= prob.inv_sqrt_degree[i] * prob.inv_sqrt_degree[cols[k]];
  prob.normalized = std::move(scaled);
  return prob;
}

void fix_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best) {
      best = mag;
      arg = i;
    }
  }
  if (v[arg] < 0.0)
    for (auto& x : v) x = -x;
}

/// Dense route: full spectrum of the normalized operator.
void solve_dense(const ClusterProblem& prob, Index n_modes,
                 std::vector<double>& eigenvalues,
                 std::vector<Eigen::VectorXd>& vectors) {
  const Index nc = prob.normalized.rows();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(nc, nc);
  const auto offs = prob.normalized.row_offsets();
  const auto cols = prob.normalized.col_indices();
  const auto vals = prob.normalized.values();
  for (Index i = 0; i < nc; ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k) dense(i, cols[k]) = vals[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success)
    throw MsError("dense symmetric eigensolver failed");
  for (Index r = 0; r < n_modes; ++r) {
    eigenvalues.push_back(solver.eigenvalues()(r));
    vectors.push_back(solver.eigenvectors().col(r));
  }
}

/// Shift-invert Lanczos with full reorthogonalization for the n_modes
/// smallest eigenpairs of the normalized operator. The Krylov basis grows
/// until the first n_modes Ritz pairs satisfy ||A x - lambda x|| <= tol.
void solve_lanczos(const ClusterProblem& prob, Index n_modes,
                   const EigenSolveOptions& options,
                   std::vector<double>& eigenvalues,
                   std::vector<Eigen::VectorXd>& vectors) {
  const Index nc = prob.normalized.rows();
  const double sigma = 1e-3;

  Eigen::SparseMatrix<double> shifted(nc, nc);
  {
    std::vector<Eigen::Triplet<double>> trips;
    const auto offs = prob.normalized.row_offsets();
    const auto cols = prob.normalized.col_indices();
    const auto vals = prob.normalized.values();
    trips.reserve(vals.size() + static_cast<std::size_t>(nc));
    for (Index i = 0; i < nc; ++i) {
      bool has_diag = false;
      for (Index k = offs[i]; k < offs[i + 1]; ++k) {
        double v = vals[k];
        if (cols[k] == i) {
          v += sigma;
          has_diag = true;
        }
        trips.emplace_back(static_cast<int>(i), static_cast<int>(cols[k]), v);
      }
      if (!has_diag)
        trips.emplace_back(static_cast<int>(i), static_cast<int>(i), sigma);
    }
    shifted.setFromTriplets(trips.begin(), trips.end());
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw MsError("shift-invert factorization failed");

  auto apply_normalized = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y(nc);
    prob.normalized.apply(std::span<const double>(x.data(), x.size()),
                          std::span<double>(y.data(), y.size()));
    return y;
  };

  std::mt19937_64 rng(options.lanczos_seed);
  auto fresh_vector = [&]() {
    Eigen::VectorXd v(nc);
    for (Index i = 0; i < nc; ++i) v(i) = uniform_double(rng) - 0.5;
    return v;
  };

  Index m = std::min<Index>(nc, std::max<Index>(2 * n_modes + 30, 64));
  for (Index attempt = 0;; ++attempt) {
    std::vector<Eigen::VectorXd> basis;
    std::vector<double> alpha, beta;
    Eigen::VectorXd v = fresh_vector();
    v.normalize();
    basis.push_back(v);
    Eigen::VectorXd w;
    for (Index j = 0; j < m; ++j) {
      w = factor.solve(basis[j]);
      const double a = basis[j].dot(w);
      alpha.push_back(a);
      w -= a * basis[j];
      if (j > 0) w -= beta[j - 1] * basis[j - 1];
      // Two full reorthogonalization sweeps keep the basis orthonormal.
      for (int sweep = 0; sweep < 2; ++sweep)
        for (const auto& q : basis) w -= q.dot(w) * q;
      const double b = w.norm();
      // Breakdown means an exact invariant subspace; Rayleigh-Ritz on the
      // basis so far is still valid, so stop growing and evaluate it. The
      // retry loop draws a different start vector when modes are missing.
      if (b < 1e-14) break;
      if (static_cast<Index>(basis.size()) >= m) break;
      beta.push_back(b);
      basis.push_back(w / b);
    }
    const Index k = static_cast<Index>(basis.size());
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
      tri(j, j) = alpha[j];
      if (j + 1 < k) {
        tri(j, j + 1) = beta[j];
        tri(j + 1, j) = beta[j];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tsolver(tri);
    if (tsolver.info() != Eigen::Success)
      throw MsError("tridiagonal eigensolver failed");

    // Largest Ritz values of the inverse map to the smallest of A.
    const Index avail = std::min<Index>(n_modes, k);
    std::vector<double> cand_values;
    std::vector<Eigen::VectorXd> cand_vectors;
    bool converged = true;
    for (Index r = 0; r < avail; ++r) {
      const Index col = k - 1 - r;
      const double theta = tsolver.eigenvalues()(col);
      if (!(theta > 0.0)) {
        converged = false;
        break;
      }
      Eigen::VectorXd x = Eigen::VectorXd::Zero(nc);
      for (Index j = 0; j < k; ++j)
        x += tsolver.eigenvectors()(j, col) * basis[j];
      x.normalize();
      const double lambda = 1.0 / theta - sigma;
      const double resid = (apply_normalized(x) - lambda * x).norm();
      if (resid > options.lanczos_tol) {
        converged = false;
        break;
      }
      cand_values.push_back(lambda);
      cand_vectors.push_back(std::move(x));
    }
    if (converged && avail == n_modes) {
      // Ascending eigenvalue order.
      for (Index r = 0; r < n_modes; ++r) {
        eigenvalues.push_back(cand_values[r]);
        vectors.push_back(std::move(cand_vectors[r]));
      }
      return;
    }
    if (attempt >= options.lanczos_max_restarts)
      throw MsError(fmt::format(
          "Lanczos did not converge to {} modes on a {}-node cluster after {} restarts",
          n_modes, nc, attempt));
    if (m >= nc && avail == n_modes && !converged)
      throw MsError(fmt::format(
          "Lanczos stagnated at full subspace on a {}-node cluster", nc));
    m = std::min<Index>(nc, m + m / 2 + 8);
  }
}

}  // namespace

LocalEigenSet local_eigensolve(const LocalSubnetwork& sub, Index n_modes,
                               const EigenSolveOptions& options) {
  LocalEigenSet out;
  if (sub.main_size == 0 || n_modes <= 0) return out;
  const ClusterProblem prob = build_cluster_problem(sub);
  const Index nc = prob.normalized.rows();
  Index want = n_modes;
  if (want > nc) {
    warn(fmt::format("patch {}: requested {} modes on a {}-node cluster, clamping",
                     sub.patch, want, nc));
    want = nc;
  }

  std::vector<double> values;
  std::vector<Eigen::VectorXd> raw;
  if (nc <= options.dense_threshold)
    solve_dense(prob, want, values, raw);
  else
    solve_lanczos(prob, want, options, values, raw);

  for (Index r = 0; r < want; ++r) {
    // Undo the similarity: phi = D^{-1/2} v, extended by zero off-cluster.
    std::vector<double> phi(static_cast<std::size_t>(sub.n_local()), 0.0);
    for (Index c = 0; c < nc; ++c)
      phi[prob.cluster_to_local[c]] = prob.inv_sqrt_degree[c] * raw[r](c);
    fix_sign(phi);
    out.eigenvalues.push_back(values[r]);
    out.vectors.push_back(std::move(phi));
  }
  return out;
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "msnet/assembly.hpp"
#include "msnet/msbasis.hpp"
#include "msnet/sparse.hpp"

namespace msnet {

/// Uniform time grid: n_steps backward-Euler steps of size tau; the final
/// time is tau * n_steps by definition.
struct TimeGrid {
  double tau = 0.0;
  Index n_steps = 1;
  double final_time() const { return tau * static_cast<double>(n_steps); }
};

enum class LinearMethod {
  conjugate_gradient,
  dense_cholesky,
  dense_lu_oracle,  ///< independent reference route for cross-checking
};

struct LinearSolverConfig {
  LinearMethod method = LinearMethod::conjugate_gradient;
  double rtol = 1e-10;
  /// 0 selects 10*n + 100.
  Index max_iter = 0;
};

/// Recorded states of a time-stepping run. fine_solve stores full-length
/// vectors with the Dirichlet lift embedded; coarse solvers store coarse
/// coefficient vectors.
struct Trajectory {
  std::vector<Index> steps;
  std::vector<std::vector<double>> states;

  const std::vector<double>& final_state() const {
    if (states.empty()) throw MsError("trajectory is empty");
    return states.back();
  }
};

/// Result of one conjugate-gradient solve.
struct CgResult {
  Index iterations = 0;
  double rel_residual = 0.0;
};

/// Jacobi-preconditioned CG for symmetric positive definite systems.
/// x carries the start vector in and the solution out. Stops when
/// ||b - Ax||_2 <= rtol * ||b||_2; throws MsError on non-convergence.
/// max_iter <= 0 selects 10*n + 100.
CgResult conjugate_gradient(const SparseOperator& a, std::span<const double> b,
                            std::vector<double>& x, double rtol,
                            Index max_iter);

/**
 * @brief Backward-Euler evolution of the reduced system.
 *
 * Solves (C + tau L) u^n = tau (f^n + rhs_bc) + C u^{n-1} on the free nodes,
 * starting from the free part of u0 (full length). The trajectory records
 * step 0, every save_every-th step (when save_every > 0), and the final
 * step, each embedded with the Dirichlet lift. The system matrix is
 * assembled and factored once.
 */
Trajectory fine_solve(const ReducedSystem& reduced,
                      const std::vector<double>& f,
                      const std::vector<double>& u0, const TimeGrid& time,
                      const LinearSolverConfig& config = {},
                      Index save_every = 0);

/// Per-step source variant: source(step, f_free) fills the free-node source
/// for that step (1-based step index).
Trajectory fine_solve(const ReducedSystem& reduced,
                      const std::function<void(Index, std::span<double>)>& source,
                      const std::vector<double>& u0, const TimeGrid& time,
                      const LinearSolverConfig& config = {},
                      Index save_every = 0);

/// Galerkin-projected coarse system: C_H = R C R^T, L_H = R L R^T (both
/// mirrored to exact symmetry), F_H = R (f + rhs_bc).
struct CoarseSystem {
  SparseOperator mass;
  SparseOperator stiffness;
  std::vector<double> rhs;
};

CoarseSystem galerkin_project(const ProjectionOperator& projection,
                              const ReducedSystem& reduced,
                              std::span<const double> f_free);

/**
 * @brief Backward Euler in the coarse space.
 *
 * Factors C_H + tau L_H once (dense Cholesky). When the coarse matrix is
 * singular (overcomplete bases make it positive semidefinite), falls back
 * to a spectral pseudo-inverse, which is exact on consistent systems. All
 * steps are recorded. An all-zero matrix row is reported as an error naming
 * the offending basis row.
 */
Trajectory ms_solve(const CoarseSystem& coarse,
                    const std::vector<RowMeta>& row_meta,
                    const std::vector<double>& uh0, const TimeGrid& time);

/// Fine-scale reconstruction R^T u_H, embedded with the Dirichlet lift.
std::vector<double> reconstruct(const ProjectionOperator& projection,
                                const ReducedSystem& reduced,
                                std::span<const double> uh);

/// sqrt(u^T L u). Quadratic forms in [-1e-12 * ||u||_2^2, 0) clamp to 0;
/// anything lower is an error (operator not positive semidefinite).
double energy_norm(const SparseOperator& laplacian, std::span<const double> u);

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/solve.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace msnet {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Eigen::MatrixXd to_dense(const SparseOperator& a) {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  const auto offs = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k) dense(i, cols[k]) = vals[k];
  return dense;
}

/// One-shot factorization reused across time steps.
class StepSolver {
public:
  StepSolver(const SparseOperator& a, const LinearSolverConfig& config)
      : a_(a), config_(config) {
    switch (config.method) {
      case LinearMethod::conjugate_gradient: {
        for (double d : a.diagonal_values())
          if (!(d > 0.0))
            throw MsError("system diagonal is not positive; CG unavailable");
        break;
      }
      case LinearMethod::dense_cholesky: {
        llt_.compute(to_dense(a));
        if (llt_.info() != Eigen::Success)
          throw MsError("dense Cholesky factorization failed");
        break;
      }
      case LinearMethod::dense_lu_oracle: {
        lu_.compute(to_dense(a));
        break;
      }
    }
  }

  /// Solves A x = b; x carries the warm start for CG.
  void solve(std::span<const double> b, std::vector<double>& x) const {
    switch (config_.method) {
      case LinearMethod::conjugate_gradient: {
        Index max_iter = config_.max_iter;
        if (max_iter <= 0) max_iter = 10 * a_.rows() + 100;
        conjugate_gradient(a_, b, x, config_.rtol, max_iter);
        return;
      }
      case LinearMethod::dense_cholesky:
      case LinearMethod::dense_lu_oracle: {
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(),
                                              static_cast<Index>(b.size()));
        Eigen::VectorXd sol = config_.method == LinearMethod::dense_cholesky
                                  ? llt_.solve(rhs).eval()
                                  : lu_.solve(rhs).eval();
        x.assign(sol.data(), sol.data() + sol.size());
        return;
      }
    }
  }

private:
  const SparseOperator& a_;
  LinearSolverConfig config_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

CgResult conjugate_gradient(const SparseOperator& a, std::span<const double> b,
                            std::vector<double>& x, double rtol,
                            Index max_iter) {
  if (a.rows() != a.cols()) throw MsError("CG requires a square matrix");
  const Index n = a.rows();
  if (static_cast<Index>(b.size()) != n ||
      static_cast<Index>(x.size()) != n)
    throw MsError("CG: vector size mismatch");
  if (!(rtol > 0.0 && rtol < 1.0))
    throw MsError(fmt::format("CG rtol must be in (0, 1), got {}", rtol));
  if (max_iter <= 0) max_iter = 10 * n + 100;

  const double b_norm = norm2(b);
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  const auto diag = a.diagonal_values();
  std::vector<double> inv_diag(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0))
      throw MsError("CG: system diagonal is not positive");
    inv_diag[i] = 1.0 / diag[i];
  }

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> ax = a.apply(x);
  for (Index i = 0; i < n; ++i) r[i] -= ax[i];
  std::vector<double> z(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  std::vector<double> p = z;
  std::vector<double> ap(static_cast<std::size_t>(n));
  double rz = dot(r, z);
  double res = norm2(r);

  Index iter = 0;
  while (res > rtol * b_norm) {
    if (iter >= max_iter)
      throw MsError(fmt::format(
          "CG did not converge in {} iterations (relative residual {:.3e})",
          max_iter, res / b_norm));
    a.apply(p, ap);
    const double p_ap = dot(p, ap);
    if (!(p_ap > 0.0))
      throw MsError("CG: matrix is not positive definite");
    const double alpha = rz / p_ap;
    for (Index i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (Index i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    for (Index i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (Index i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res = norm2(r);
    ++iter;
  }
  return {iter, res / b_norm};
}

Trajectory fine_solve(const ReducedSystem& reduced,
                      const std::function<void(Index, std::span<double>)>& source,
                      const std::vector<double>& u0, const TimeGrid& time,
                      const LinearSolverConfig& config, Index save_every) {
  if (!(time.tau > 0.0))
    throw MsError(fmt::format("time step must be positive, got {}", time.tau));
  if (time.n_steps < 1)
    throw MsError(fmt::format("need at least one step, got {}", time.n_steps));
  if (static_cast<Index>(u0.size()) != reduced.n_global())
    throw MsError("initial state length does not match the network");

  const Index n = reduced.n_free();
  const SparseOperator system =
      SparseOperator::add(1.0, reduced.C_free, time.tau, reduced.L_free);
  const StepSolver solver(system, config);

  Trajectory traj;
  std::vector<double> u = reduced.restrict_vector(u0);
  traj.steps.push_back(0);
  traj.states.push_back(reduced.embed(u));

  std::vector<double> f_free(static_cast<std::size_t>(n), 0.0);
  std::vector<double> b(static_cast<std::size_t>(n));
  std::vector<double> cu(static_cast<std::size_t>(n));
  for (Index step = 1; step <= time.n_steps; ++step) {
    source(step, f_free);
    reduced.C_free.apply(u, cu);
    for (Index i = 0; i < n; ++i)
      b[i] = time.tau * (f_free[i] + reduced.rhs_bc[i]) + cu[i];
    try {
      solver.solve(b, u);
    } catch (const MsError& e) {
      throw MsError(fmt::format("step {}: {}", step, e.what()));
    }
    const bool record = (save_every > 0 && step % save_every == 0) ||
                        step == time.n_steps;
    if (record) {
      traj.steps.push_back(step);
      traj.states.push_back(reduced.embed(u));
    }
  }
  return traj;
}

Trajectory fine_solve(const ReducedSystem& reduced,
                      const std::vector<double>& f,
                      const std::vector<double>& u0, const TimeGrid& time,
                      const LinearSolverConfig& config, Index save_every) {
  if (static_cast<Index>(f.size()) != reduced.n_global())
    throw MsError("source length does not match the network");
  const std::vector<double> f_free = reduced.restrict_vector(f);
  return fine_solve(
      reduced,
      [&f_free](Index, std::span<double> out) {
        std::copy(f_free.begin(), f_free.end(), out.begin());
      },
      u0, time, config, save_every);
}

CoarseSystem galerkin_project(const ProjectionOperator& projection,
                              const ReducedSystem& reduced,
                              std::span<const double> f_free) {
  const SparseOperator& r = projection.matrix;
  if (r.cols() != reduced.n_free())
    throw MsError("projection columns do not match the free nodes");
  CoarseSystem coarse;
  const auto c_diag = reduced.C_free.diagonal_values();
  coarse.mass = r.scale_columns(c_diag).multiply_transposed(r);
  coarse.mass.mirror_upper();
  coarse.stiffness = r.multiply(reduced.L_free).multiply_transposed(r);
  coarse.stiffness.mirror_upper();
  std::vector<double> rhs(f_free.size());
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = f_free[i] + reduced.rhs_bc[i];
  coarse.rhs = r.apply(rhs);
  return coarse;
}

Trajectory ms_solve(const CoarseSystem& coarse,
                    const std::vector<RowMeta>& row_meta,
                    const std::vector<double>& uh0, const TimeGrid& time) {
  if (!(time.tau > 0.0))
    throw MsError(fmt::format("time step must be positive, got {}", time.tau));
  const Index n = coarse.mass.rows();
  if (static_cast<Index>(uh0.size()) != n)
    throw MsError("coarse initial state has the wrong length");

  const SparseOperator system =
      SparseOperator::add(1.0, coarse.mass, time.tau, coarse.stiffness);
  // An all-zero row means a basis function with no mass and no energy;
  // report it by provenance instead of failing inside the factorization.
  {
    const auto offs = system.row_offsets();
    const auto vals = system.values();
    for (Index i = 0; i < n; ++i) {
      bool all_zero = true;
      for (Index k = offs[i]; k < offs[i + 1] && all_zero; ++k)
        all_zero = vals[k] == 0.0;
      if (all_zero) {
        const std::string what =
            i < static_cast<Index>(row_meta.size())
                ? fmt::format("coarse row {} (patch {}, kind {}) is identically zero",
                              i, row_meta[i].patch, row_meta[i].kind)
                : fmt::format("coarse row {} is identically zero", i);
        throw MsError(what);
      }
    }
  }

  const Eigen::MatrixXd dense = to_dense(system);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  bool use_pseudo = llt.info() != Eigen::Success;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  Eigen::VectorXd inv_spectrum;
  if (use_pseudo) {
    // Overcomplete bases give a singular PSD system; the pseudo-inverse is
    // exact on consistent right-hand sides and deterministic.
    warn("coarse system is singular; using a spectral pseudo-inverse");
    eig.compute(dense);
    if (eig.info() != Eigen::Success)
      throw MsError("coarse eigendecomposition failed");
    const double lambda_max = eig.eigenvalues().cwiseAbs().maxCoeff();
    const double cutoff = 1e-12 * std::max(lambda_max, 1e-300);
    inv_spectrum.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double lambda = eig.eigenvalues()(i);
      inv_spectrum(i) = lambda > cutoff ? 1.0 / lambda : 0.0;
    }
  }
  auto solve_step = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    if (!use_pseudo) return llt.solve(b);
    return eig.eigenvectors() *
           (inv_spectrum.array() * (eig.eigenvectors().transpose() * b).array())
               .matrix();
  };

  Trajectory traj;
  traj.steps.push_back(0);
  traj.states.push_back(uh0);
  std::vector<double> u = uh0;
  std::vector<double> cu(static_cast<std::size_t>(n));
  for (Index step = 1; step <= time.n_steps; ++step) {
    coarse.mass.apply(u, cu);
    Eigen::VectorXd b(n);
    for (Index i = 0; i < n; ++i)
      b(i) = time.tau * coarse.rhs[i] + cu[i];
    const Eigen::VectorXd sol = solve_step(b);
    u.assign(sol.data(), sol.data() + sol.size());
    traj.steps.push_back(step);
    traj.states.push_back(u);
  }
  return traj;
}

std::vector<double> reconstruct(const ProjectionOperator& projection,
                                const ReducedSystem& reduced,
                                std::span<const double> uh) {
  if (static_cast<Index>(uh.size()) != projection.matrix.rows())
    throw MsError("coarse vector length does not match the projection");
  return reduced.embed(projection.matrix.apply_transpose(uh));
}

double energy_norm(const SparseOperator& laplacian, std::span<const double> u) {
  const double q = laplacian.quadratic_form(u);
  const double scale = dot(u, u);
  if (q < -1e-12 * scale)
    throw MsError(fmt::format(
        "energy form is negative ({}) beyond roundoff; operator is not PSD", q));
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace msnet

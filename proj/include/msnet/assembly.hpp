// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <tuple>

#include "msnet/network.hpp"
#include "msnet/sparse.hpp"

namespace msnet {

/// Weighted undirected edge in plain index form, used for local assemblies.
struct WeightedEdge {
  Index a = 0;
  Index b = 0;
  double weight = 1.0;
};

/**
 * @brief Assembles the weighted graph Laplacian L = D - W.
 *
 * Off-diagonal entries are -w_ij; each diagonal entry is the negated sum of
 * the stored off-diagonal row values, accumulated in ascending column order.
 * Together with the matvec's diagonal-last accumulation this makes L*1
 * exactly zero, entry by entry, in IEEE arithmetic.
 */
SparseOperator assemble_laplacian(const Network& net);

/// Laplacian of an explicit edge list on n nodes (same diagonal rule).
SparseOperator assemble_laplacian_from_edges(Index n_nodes,
                                             std::span<const WeightedEdge> edges);

/// Diagonal capacity (mass) matrix C_ii = c_i.
SparseOperator assemble_mass(const Network& net);

/// Diagonal weighted-degree matrix D_ii = sum_j w_ij.
SparseOperator degree_matrix(const Network& net);

/// Incidence factorization L = B M B^T: B is nodes-by-edges with +1 at each
/// edge head and -1 at each tail; M is the diagonal of edge weights.
std::pair<SparseOperator, SparseOperator> incidence_factorization(
    const Network& net);

/**
 * @brief Dirichlet reduction of the evolution system.
 *
 * Keeps the free (unconstrained) nodes in ascending order. L_free and C_free
 * are principal submatrices, so free diagonal entries keep the full degree
 * including couplings into the boundary. rhs_bc collects sum_{j in Dirichlet}
 * w_ij g_j per free node; lift is the full-length vector with g on
 * constrained nodes and 0 elsewhere.
 */
struct ReducedSystem {
  std::vector<Index> free_to_global;
  std::vector<Index> global_to_free;  ///< -1 for constrained nodes
  SparseOperator L_free;
  SparseOperator C_free;
  std::vector<double> rhs_bc;
  std::vector<double> lift;
  Index n_free() const { return static_cast<Index>(free_to_global.size()); }
  Index n_global() const { return static_cast<Index>(global_to_free.size()); }

  /// Extracts the free entries of a full-length vector.
  std::vector<double> restrict_vector(std::span<const double> full) const;
  /// Scatters a free vector into a full-length vector, boundary = lift.
  std::vector<double> embed(std::span<const double> free_values) const;
};

ReducedSystem reduce_dirichlet(const SparseOperator& laplacian,
                               const SparseOperator& mass, const Network& net,
                               const BoundarySpec& bc);

}  // namespace msnet

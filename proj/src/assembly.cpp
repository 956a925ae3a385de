// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/assembly.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace msnet {

SparseOperator assemble_laplacian_from_edges(
    Index n_nodes, std::span<const WeightedEdge> edges) {
  // Neighbour lists sorted ascending fix the diagonal accumulation order.
  std::vector<Index> degree(static_cast<std::size_t>(n_nodes), 0);
  for (const auto& e : edges) {
    if (e.a < 0 || e.a >= n_nodes || e.b < 0 || e.b >= n_nodes || e.a == e.b)
      throw MsError("laplacian assembly: bad edge");
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<Index> offsets(static_cast<std::size_t>(n_nodes) + 1, 0);
  for (Index i = 0; i < n_nodes; ++i)
    offsets[i + 1] = offsets[i] + degree[i];
  std::vector<std::pair<Index, double>> adj(
      static_cast<std::size_t>(offsets.back()));
  {
    std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& e : edges) {
      adj[static_cast<std::size_t>(cursor[e.a]++)] = {e.b, e.weight};
      adj[static_cast<std::size_t>(cursor[e.b]++)] = {e.a, e.weight};
    }
  }
  for (Index i = 0; i < n_nodes; ++i) {
    std::sort(adj.begin() + offsets[i], adj.begin() + offsets[i + 1],
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (Index k = offsets[i] + 1; k < offsets[i + 1]; ++k)
      if (adj[k].first == adj[k - 1].first)
        throw MsError(fmt::format("duplicate edge between nodes {} and {}", i,
                                  adj[k].first));
  }

  std::vector<Index> row_offsets(static_cast<std::size_t>(n_nodes) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(adj.size() + static_cast<std::size_t>(n_nodes));
  vals.reserve(cols.capacity());
  for (Index i = 0; i < n_nodes; ++i) {
    double offdiag_sum = 0.0;
    // First pass in ascending neighbour order defines the diagonal exactly.
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k)
      offdiag_sum += -adj[k].second;
    bool diag_placed = false;
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (!diag_placed && adj[k].first > i) {
        cols.push_back(i);
        vals.push_back(-offdiag_sum);
        diag_placed = true;
      }
      cols.push_back(adj[k].first);
      vals.push_back(-adj[k].second);
    }
    if (!diag_placed) {
      cols.push_back(i);
      vals.push_back(-offdiag_sum);
    }
    row_offsets[i + 1] = static_cast<Index>(cols.size());
  }
  return SparseOperator(n_nodes, n_nodes, std::move(row_offsets),
                        std::move(cols), std::move(vals));
}

SparseOperator assemble_laplacian(const Network& net) {
  std::vector<WeightedEdge> edges;
  edges.reserve(net.edges.size());
  for (const auto& e : net.edges)
    edges.push_back({e.head, e.tail, e.weight});
  return assemble_laplacian_from_edges(net.n_nodes(), edges);
}

SparseOperator assemble_mass(const Network& net) {
  std::vector<double> c(static_cast<std::size_t>(net.n_nodes()));
  for (Index i = 0; i < net.n_nodes(); ++i) c[i] = net.nodes[i].capacity;
  return SparseOperator::diagonal(c);
}

SparseOperator degree_matrix(const Network& net) {
  return SparseOperator::diagonal(
      assemble_laplacian(net).diagonal_values());
}

std::pair<SparseOperator, SparseOperator> incidence_factorization(
    const Network& net) {
  const Index n = net.n_nodes();
  const Index m = net.n_edges();
  std::vector<Triplet> entries;
  entries.reserve(2 * static_cast<std::size_t>(m));
  std::vector<double> weights(static_cast<std::size_t>(m));
  for (Index e = 0; e < m; ++e) {
    entries.push_back({net.edges[e].head, e, 1.0});
    entries.push_back({net.edges[e].tail, e, -1.0});
    weights[e] = net.edges[e].weight;
  }
  return {SparseOperator::from_triplets(n, m, entries),
          SparseOperator::diagonal(weights)};
}

std::vector<double> ReducedSystem::restrict_vector(
    std::span<const double> full) const {
  if (static_cast<Index>(full.size()) != n_global())
    throw MsError("restrict_vector: size mismatch");
  std::vector<double> out(free_to_global.size());
  for (std::size_t k = 0; k < free_to_global.size(); ++k)
    out[k] = full[free_to_global[k]];
  return out;
}

std::vector<double> ReducedSystem::embed(
    std::span<const double> free_values) const {
  if (static_cast<Index>(free_values.size()) != n_free())
    throw MsError("embed: size mismatch");
  std::vector<double> out = lift;
  for (std::size_t k = 0; k < free_to_global.size(); ++k)
    out[free_to_global[k]] = free_values[k];
  return out;
}

ReducedSystem reduce_dirichlet(const SparseOperator& laplacian,
                               const SparseOperator& mass, const Network& net,
                               const BoundarySpec& bc) {
  const Index n = net.n_nodes();
  if (laplacian.rows() != n || mass.rows() != n)
    throw MsError("reduce_dirichlet: operator size mismatch");
  validate_boundary(net, bc);
  const auto dirichlet = assign_dirichlet(net, bc);

  ReducedSystem sys;
  sys.global_to_free.assign(static_cast<std::size_t>(n), -1);
  sys.lift.assign(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) {
    if (dirichlet.constrained[i]) {
      sys.lift[i] = dirichlet.value[i];
    } else {
      sys.global_to_free[i] = static_cast<Index>(sys.free_to_global.size());
      sys.free_to_global.push_back(i);
    }
  }
  sys.L_free = laplacian.principal_submatrix(sys.free_to_global);
  sys.C_free = mass.principal_submatrix(sys.free_to_global);
  sys.rhs_bc.assign(sys.free_to_global.size(), 0.0);
  // Ascending edge order fixes the accumulation order per free node.
  for (const auto& e : net.edges) {
    const bool head_fixed = dirichlet.constrained[e.head];
    const bool tail_fixed = dirichlet.constrained[e.tail];
    if (head_fixed == tail_fixed) continue;
    const Index free_node = head_fixed ? e.tail : e.head;
    const Index fixed_node = head_fixed ? e.head : e.tail;
    sys.rhs_bc[sys.global_to_free[free_node]] +=
        e.weight * dirichlet.value[fixed_node];
  }
  return sys;
}

}  // namespace msnet

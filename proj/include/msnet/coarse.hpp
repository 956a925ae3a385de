// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "msnet/network.hpp"

namespace msnet {

/**
 * @brief Tensor-product coarse grid over the network box.
 *
 * cells[k] >= 2 coarse cells per axis, each of width H[k] = box[k]/cells[k].
 * Cells and coarse nodes are indexed lexicographically with axis 0 fastest.
 * Point-to-cell assignment is half-open per axis, with the last cell closed,
 * so every point of the box lands in exactly one cell.
 */
struct CoarseGrid {
  int dim = 2;
  std::array<double, 3> box = {1.0, 1.0, 1.0};
  std::array<Index, 3> cells = {2, 2, 1};
  std::array<double, 3> H = {0.5, 0.5, 1.0};

  Index n_cells() const;
  Index n_coarse_nodes() const;

  Index cell_index(const std::array<Index, 3>& c) const;
  std::array<Index, 3> cell_coords(Index cell) const;
  Index node_index(const std::array<Index, 3>& c) const;
  std::array<Index, 3> node_coords(Index node) const;
  /// Physical position of a coarse node.
  std::array<double, 3> node_position(Index node) const;
  /// Center of a coarse cell.
  std::array<double, 3> cell_center(Index cell) const;

  Index cell_of_point(const std::array<double, 3>& x) const;
};

/// Builds the grid, checking cells[k] >= 2 on each used axis.
CoarseGrid make_coarse_grid(const Network& net,
                            const std::array<Index, 3>& cells);

/// Fine-node ownership: every node belongs to exactly one coarse cell.
struct CellAssignment {
  std::vector<Index> cell_of_node;
  /// Node lists per cell, ascending by construction. Cells without nodes
  /// have empty lists.
  std::vector<std::vector<Index>> cell_nodes;
};

CellAssignment assign_cells(const Network& net, const CoarseGrid& grid);

/**
 * @brief Patch omega_i: the union of coarse cells sharing coarse node y_i.
 *
 * Every coarse node gets a patch (boundary nodes own fewer cells). chi holds
 * the multilinear hat of y_i evaluated at each member node; the hats of all
 * patches form a partition of unity over the fine nodes.
 */
struct Patch {
  Index coarse_node = -1;
  std::vector<Index> cells;
  std::vector<Index> nodes;  ///< sorted ascending global ids
  std::vector<double> chi;   ///< hat value per member of nodes
  bool empty() const { return nodes.empty(); }
};

/// Builds all patches of the grid, with partition-of-unity values filled in.
std::vector<Patch> build_patches(const Network& net, const CoarseGrid& grid,
                                 const CellAssignment& assignment);

/// Multilinear hat of coarse node `node` at position x.
double hat_value(const CoarseGrid& grid, Index node,
                 const std::array<double, 3>& x);

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/coarse.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace msnet {

Index CoarseGrid::n_cells() const {
  Index n = 1;
  for (int k = 0; k < dim; ++k) n *= cells[k];
  return n;
}

Index CoarseGrid::n_coarse_nodes() const {
  Index n = 1;
  for (int k = 0; k < dim; ++k) n *= cells[k] + 1;
  return n;
}

Index CoarseGrid::cell_index(const std::array<Index, 3>& c) const {
  Index idx = 0;
  Index stride = 1;
  for (int k = 0; k < dim; ++k) {
    idx += stride * c[k];
    stride *= cells[k];
  }
  return idx;
}

std::array<Index, 3> CoarseGrid::cell_coords(Index cell) const {
  std::array<Index, 3> c = {0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    c[k] = cell % cells[k];
    cell /= cells[k];
  }
  return c;
}

Index CoarseGrid::node_index(const std::array<Index, 3>& c) const {
  Index idx = 0;
  Index stride = 1;
  for (int k = 0; k < dim; ++k) {
    idx += stride * c[k];
    stride *= cells[k] + 1;
  }
  return idx;
}

std::array<Index, 3> CoarseGrid::node_coords(Index node) const {
  std::array<Index, 3> c = {0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    c[k] = node % (cells[k] + 1);
    node /= cells[k] + 1;
  }
  return c;
}

std::array<double, 3> CoarseGrid::node_position(Index node) const {
  const auto c = node_coords(node);
  std::array<double, 3> x = {0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) x[k] = static_cast<double>(c[k]) * H[k];
  return x;
}

std::array<double, 3> CoarseGrid::cell_center(Index cell) const {
  const auto c = cell_coords(cell);
  std::array<double, 3> x = {0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k)
    x[k] = (static_cast<double>(c[k]) + 0.5) * H[k];
  return x;
}

Index CoarseGrid::cell_of_point(const std::array<double, 3>& x) const {
  std::array<Index, 3> c = {0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    c[k] = static_cast<Index>(std::floor(x[k] / H[k]));
    c[k] = std::clamp<Index>(c[k], 0, cells[k] - 1);
  }
  return cell_index(c);
}

CoarseGrid make_coarse_grid(const Network& net,
                            const std::array<Index, 3>& cells) {
  CoarseGrid grid;
  grid.dim = net.dim;
  grid.box = net.box;
  grid.cells = cells;
  if (grid.dim == 2) grid.cells[2] = 1;
  for (int k = 0; k < grid.dim; ++k) {
    if (grid.cells[k] < 2)
      throw MsError(fmt::format("coarse grid needs >= 2 cells per axis, got {} on axis {}",
                                grid.cells[k], k));
    grid.H[k] = grid.box[k] / static_cast<double>(grid.cells[k]);
  }
  return grid;
}

CellAssignment assign_cells(const Network& net, const CoarseGrid& grid) {
  CellAssignment out;
  out.cell_of_node.resize(static_cast<std::size_t>(net.n_nodes()));
  out.cell_nodes.assign(static_cast<std::size_t>(grid.n_cells()), {});
  for (Index i = 0; i < net.n_nodes(); ++i) {
    const Index cell = grid.cell_of_point(net.nodes[i].coords);
    out.cell_of_node[i] = cell;
    out.cell_nodes[cell].push_back(i);
  }
  return out;
}

double hat_value(const CoarseGrid& grid, Index node,
                 const std::array<double, 3>& x) {
  const auto y = grid.node_position(node);
  double value = 1.0;
  for (int k = 0; k < grid.dim; ++k) {
    const double t = 1.0 - std::abs(x[k] - y[k]) / grid.H[k];
    value *= std::max(0.0, t);
  }
  return value;
}

std::vector<Patch> build_patches(const Network& net, const CoarseGrid& grid,
                                 const CellAssignment& assignment) {
  std::vector<Patch> patches;
  patches.reserve(static_cast<std::size_t>(grid.n_coarse_nodes()));
  for (Index p = 0; p < grid.n_coarse_nodes(); ++p) {
    Patch patch;
    patch.coarse_node = p;
    const auto nc = grid.node_coords(p);
    // Cells adjacent to the coarse node: offsets -1 and 0 per axis.
    std::array<Index, 3> lo, hi;
    for (int k = 0; k < 3; ++k) {
      if (k < grid.dim) {
        lo[k] = std::max<Index>(0, nc[k] - 1);
        hi[k] = std::min<Index>(grid.cells[k] - 1, nc[k]);
      } else {
        lo[k] = hi[k] = 0;
      }
    }
    std::array<Index, 3> c;
    for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2])
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
          patch.cells.push_back(grid.cell_index(c));
    std::sort(patch.cells.begin(), patch.cells.end());
    for (Index cell : patch.cells) {
      const auto& members = assignment.cell_nodes[cell];
      patch.nodes.insert(patch.nodes.end(), members.begin(), members.end());
    }
    std::sort(patch.nodes.begin(), patch.nodes.end());
    patch.chi.reserve(patch.nodes.size());
    for (Index i : patch.nodes)
      patch.chi.push_back(hat_value(grid, p, net.nodes[i].coords));
    patches.push_back(std::move(patch));
  }
  return patches;
}

}  // namespace msnet

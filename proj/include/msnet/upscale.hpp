// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "msnet/coarse.hpp"
#include "msnet/solve.hpp"

namespace msnet {

/**
 * @brief Flow domain of one interior coarse face: the two cells it divides.
 *
 * The inflow band holds the member nodes within delta of the domain's far
 * plane on the low side, the outflow band mirrors it on the high side;
 * the bands are disjoint (inflow wins overlaps).
 */
struct FaceDomain {
  Index id = -1;
  int axis = 0;
  Index cell_lo = -1;
  Index cell_hi = -1;
  std::vector<Index> nodes;    ///< sorted global ids of both cells
  std::vector<Index> inflow;   ///< global ids
  std::vector<Index> outflow;  ///< global ids
  bool solvable = true;
  std::string reason;
};

struct UpscaleOptions {
  /// Band width as a fraction of the cell width along the face axis.
  double delta_frac = 0.1;
  /// Capacity-weighted cell averages; false selects plain means.
  bool capacity_weighted = true;
  double cg_rtol = 1e-12;
  Index threads = 1;
};

/// Enumerates interior faces axis by axis, cells in lexicographic order.
std::vector<FaceDomain> face_domains(const Network& net, const CoarseGrid& grid,
                                     const CellAssignment& assignment,
                                     double delta_frac);

/**
 * @brief Steady local flow through a face domain.
 *
 * Unit potential on the inflow band, zero on the outflow band, zero-flux
 * elsewhere. Connected components without any constrained node receive the
 * potential 0. Returns the potential over FaceDomain::nodes.
 */
std::vector<double> local_flow_solve(const Network& net, const FaceDomain& face,
                                     double cg_rtol);

/**
 * @brief Effective face conductance q_bar / (u_bar_lo - u_bar_hi).
 *
 * q_bar sums w * (u_lo_side - u_hi_side) over the fine edges crossing the
 * cell interface; u_bar are (capacity-weighted) cell averages of the local
 * potential. Returns 0 when the face carries no flux or the average drop
 * vanishes (the caller marks the face unsolvable).
 */
double effective_weight(const Network& net, const FaceDomain& face,
                        const CellAssignment& assignment,
                        std::span<const double> u_local,
                        bool capacity_weighted);

/// Aggregated capacity per coarse cell: exact sum of member capacities.
std::vector<double> effective_capacity(const Network& net,
                                       const CellAssignment& assignment);

/// One coarse connection obtained from a face solve.
struct CoarseEdge {
  Index face = -1;
  Index cell_a = -1;  ///< flat cell index, low side
  Index cell_b = -1;
  double weight = 0.0;
};

/// Conductance of one coarse cell towards a Dirichlet boundary face.
struct BoundaryCoupling {
  Index cell = -1;  ///< flat cell index
  std::string label;
  double value = 0.0;  ///< boundary data g
  double weight = 0.0;
};

/**
 * @brief Finite-volume surrogate on the coarse cells.
 *
 * Cells without nodes are excluded (warned). Unsolvable faces keep no coarse
 * edge and are counted. Boundary couplings come from single-cell problems:
 * labelled nodes at unit potential, the band near the cell's opposite plane
 * grounded; the coupling conductance then multiplies (u_cell - g) in the
 * coarse equation.
 */
struct UpscaledModel {
  CoarseGrid grid;
  std::vector<Index> active_cells;    ///< ascending flat indices
  std::vector<Index> cell_to_active;  ///< -1 for excluded cells
  std::vector<double> capacity;       ///< per active cell
  std::vector<CoarseEdge> edges;
  std::vector<BoundaryCoupling> couplings;
  Index n_unsolvable = 0;
};

UpscaledModel build_upscaled_model(const Network& net, const CoarseGrid& grid,
                                   const CellAssignment& assignment,
                                   const BoundarySpec& bc,
                                   const UpscaleOptions& options = {});

/// Backward Euler on the coarse model (same scheme as the fine solver).
/// States are per active cell; all requested snapshots plus the final state
/// are recorded. Throws when the coarse graph is disconnected.
Trajectory upscaled_solve(const UpscaledModel& model,
                          const std::vector<double>& u0_cells,
                          const TimeGrid& time, double cg_rtol = 1e-12,
                          Index save_every = 0);

/// Piecewise-constant prolongation: every fine node takes its cell's value.
std::vector<double> prolong_piecewise_constant(const UpscaledModel& model,
                                               const CellAssignment& assignment,
                                               std::span<const double> u_cells);

/// Exports the coarse model as a network directory (cells as nodes at cell
/// centers, coarse edges with their conductances) plus upscale.json with the
/// boundary couplings and diagnostics.
void save_upscaled_model(const UpscaledModel& model,
                         const std::filesystem::path& dir);

}  // namespace msnet

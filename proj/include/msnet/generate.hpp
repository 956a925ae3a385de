// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>

#include "msnet/network.hpp"

namespace msnet {

enum class Family {
  structured_regular,
  structured_irregular,
  unstructured,
};

/**
 * @brief Parameters for network generation.
 *
 * Lattice families use dims (nodes per axis, each >= 2); the unstructured
 * family samples n_points uniformly in the box and connects symmetrized
 * k-nearest neighbours (knn <= 0 picks 6 in 2D, 8 in 3D). The irregular
 * family removes edges then nodes, each kept with probability
 * 1 - removal_prob, and keeps the largest connected component.
 */
struct GeneratorConfig {
  Family family = Family::structured_regular;
  int dim = 2;
  std::array<Index, 3> dims = {2, 2, 1};
  std::array<double, 3> box = {1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  Index n_points = 0;
  int knn = 0;
  double removal_prob = 0.2;
  /// Trimmed networks smaller than this are an error.
  Index min_nodes = 10;
};

/// Generates a network; the result is validated and connected. All
/// randomness comes from cfg.seed (bit-reproducible across platforms).
Network generate_network(const GeneratorConfig& cfg);

enum class ThroatRule {
  harmonic_mean,    ///< throat diameter = harmonic mean of endpoint diameters
  random_uniform,   ///< throat diameter drawn from U[d_min, d_max)
};

/// Axis-aligned inclusion box for the high-contrast assigner, with the pore
/// diameter used inside it.
struct ContrastBox {
  std::array<double, 3> lo = {0.0, 0.0, 0.0};
  std::array<double, 3> hi = {0.0, 0.0, 0.0};
  double d_in = 10.0;
};

/**
 * @brief Parameters for coefficient assignment.
 *
 * Tube-flow assignment: pore diameters d_i ~ U[d_min, d_max), node capacity
 * (4/3) pi R_i^3, edge conductance pi R_ij^4 / (8 mu L_ij) with L_ij the
 * endpoint distance clamped below by 1e-12 * min box length. High-contrast
 * assignment replaces the random diameters with d_in inside any listed box
 * (first match wins) and d_out elsewhere; throats use the harmonic mean.
 */
struct PropertyConfig {
  double d_min = 0.1;
  double d_max = 1.0;
  ThroatRule throat = ThroatRule::harmonic_mean;
  double mu = 1.0;
  std::vector<ContrastBox> boxes;
  double d_out = 1.0;
  std::uint64_t seed = 1;
};

void assign_poiseuille(Network& net, const PropertyConfig& cfg);
void assign_high_contrast(Network& net, const PropertyConfig& cfg);

enum class RasterApply {
  capacity_and_weight,
  capacity_only,
  weight_only,
};

/**
 * @brief Samples capacities and conductances from a raster file.
 *
 * Format: line 1 "dim n1 n2 [n3]", line 2 the box edge lengths, then
 * n1*n2*(n3) capacity values one per line followed by the same count of
 * weight-scale values. Cells are ordered with the first axis fastest. Each
 * node samples its containing cell; capacities are assigned directly and
 * w_ij becomes the harmonic mean of the endpoint weight-scale samples times
 * area/length (area pi R^2 when an edge radius is present, else 1; length
 * the stored edge length or the clamped endpoint distance). Nodes outside
 * the raster box are an error.
 */
void load_coefficient_field(Network& net, const std::filesystem::path& file,
                            RasterApply mode = RasterApply::capacity_and_weight);

/**
 * @brief Adds face labels to nodes within tol of the box faces.
 *
 * Axis 0 carries "left"/"right", the last axis "bottom"/"top", and the
 * middle axis of 3D networks "front"/"back". tol <= 0 selects the default
 * 1e-9 * box length per axis.
 */
void label_boundaries(Network& net, double tol = 0.0);

}  // namespace msnet

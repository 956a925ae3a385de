// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "msnet/common.hpp"

namespace msnet {

/// One network node: position, capacity, optional pore radius, and an
/// ordered set of text labels (boundary markers and user tags).
struct NodeRecord {
  std::array<double, 3> coords = {0.0, 0.0, 0.0};
  double capacity = 1.0;
  std::optional<double> radius;
  std::vector<std::string> labels;

  bool has_label(const std::string& label) const;
  /// Adds the label if absent, keeping the list sorted unique.
  void add_label(const std::string& label);
};

/// One undirected weighted connection. head/tail are 0-based node indices;
/// orientation is a storage convention only (used by the incidence map).
struct EdgeRecord {
  Index head = 0;
  Index tail = 0;
  double weight = 1.0;
  std::optional<double> length;
  std::optional<double> radius;
};

/**
 * @brief Weighted network embedded in an axis-aligned box.
 *
 * Node ids are the vector positions (0-based, dense). The box spans
 * [0, box[k]] in each of the `dim` axes; coordinates beyond `dim` are 0.
 */
struct Network {
  int dim = 2;
  std::array<double, 3> box = {1.0, 1.0, 1.0};
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  /// Provenance carried into meta.json: generator name and seed.
  std::string generator = "manual";
  std::uint64_t seed = 0;

  Index n_nodes() const { return static_cast<Index>(nodes.size()); }
  Index n_edges() const { return static_cast<Index>(edges.size()); }

  /// Euclidean distance between edge endpoints.
  double edge_distance(const EdgeRecord& e) const;
};

/// Ordered Dirichlet conditions: (label, value) pairs. When a node carries
/// several listed labels, the first matching pair wins.
struct BoundarySpec {
  std::vector<std::pair<std::string, double>> dirichlet;
};

/**
 * @brief Validates structural network invariants.
 *
 * Checks: dim in {2, 3}; positive finite box lengths; coordinates inside the
 * box; positive finite capacities and weights; finite optional lengths and
 * radii (positive where present); edge endpoints in range; no self-loops; no
 * duplicate undirected edges. Throws MsError naming the first offender.
 * With require_connected set, also demands a single connected component.
 */
void validate_network(const Network& net, bool require_connected = false);

/// Validates a boundary spec against a network: every label must match at
/// least one node (warning, not error, when it does not), values finite,
/// and at least one free node must remain. Throws on fatal problems.
void validate_boundary(const Network& net, const BoundarySpec& bc);

/// Per-node Dirichlet assignment derived from a BoundarySpec:
/// value[i] set for constrained nodes, free nodes flagged.
struct DirichletAssignment {
  std::vector<bool> constrained;
  std::vector<double> value;
  Index n_constrained = 0;
};

DirichletAssignment assign_dirichlet(const Network& net,
                                     const BoundarySpec& bc);

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "msnet/common.hpp"

namespace msnet {

/// Connected-component labelling of an undirected graph.
struct ComponentLabels {
  /// Component id per node; ids are assigned in order of each component's
  /// lowest node index, so the component containing node 0 has id 0.
  std::vector<Index> component_of;
  /// Node count per component id.
  std::vector<Index> sizes;
  Index n_components = 0;
  /// Id of the largest component; ties resolve to the lowest id.
  Index largest = -1;
};

/// Labels components of the graph on n_nodes nodes with the given edges
/// (pairs of 0-based endpoints). Deterministic BFS in ascending node order.
ComponentLabels connected_components(
    Index n_nodes, std::span<const std::pair<Index, Index>> edges);

}  // namespace msnet

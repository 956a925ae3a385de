// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/components.hpp"

#include <algorithm>
#include <numeric>

namespace msnet {

ComponentLabels connected_components(
    Index n_nodes, std::span<const std::pair<Index, Index>> edges) {
  // Adjacency in CSR-like form, neighbours ascending for a stable BFS order.
  std::vector<Index> offsets(static_cast<std::size_t>(n_nodes) + 1, 0);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n_nodes || b < 0 || b >= n_nodes)
      throw MsError("connected_components: edge endpoint out of range");
    ++offsets[static_cast<std::size_t>(a) + 1];
    ++offsets[static_cast<std::size_t>(b) + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> adj(offsets.back());
  {
    std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& [a, b] : edges) {
      adj[static_cast<std::size_t>(cursor[a]++)] = b;
      adj[static_cast<std::size_t>(cursor[b]++)] = a;
    }
  }
  for (Index i = 0; i < n_nodes; ++i)
    std::sort(adj.begin() + offsets[i], adj.begin() + offsets[i + 1]);

  ComponentLabels out;
  out.component_of.assign(static_cast<std::size_t>(n_nodes), -1);
  std::vector<Index> queue;
  for (Index start = 0; start < n_nodes; ++start) {
    if (out.component_of[start] >= 0) continue;
    const Index id = out.n_components++;
    Index size = 0;
    queue.clear();
    queue.push_back(start);
    out.component_of[start] = id;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const Index u = queue[q];
      ++size;
      for (Index k = offsets[u]; k < offsets[u + 1]; ++k) {
        const Index v = adj[k];
        if (out.component_of[v] < 0) {
          out.component_of[v] = id;
          queue.push_back(v);
        }
      }
    }
    out.sizes.push_back(size);
  }
  for (Index id = 0; id < out.n_components; ++id) {
    if (out.largest < 0 || out.sizes[id] > out.sizes[out.largest])
      out.largest = id;
  }
  return out;
}

}  // namespace msnet

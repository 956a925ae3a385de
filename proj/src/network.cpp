// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/network.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "msnet/components.hpp"

namespace msnet {

bool NodeRecord::has_label(const std::string& label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

void NodeRecord::add_label(const std::string& label) {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) labels.insert(it, label);
}

double Network::edge_distance(const EdgeRecord& e) const {
  const auto& a = nodes[e.head].coords;
  const auto& b = nodes[e.tail].coords;
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate_network(const Network& net, bool require_connected) {
  if (net.dim != 2 && net.dim != 3)
    throw MsError(fmt::format("dim must be 2 or 3, got {}", net.dim));
  for (int k = 0; k < net.dim; ++k) {
    if (!finite_positive(net.box[k]))
      throw MsError(fmt::format("box length {} must be finite positive, got {}",
                                k, net.box[k]));
  }
  const Index n = net.n_nodes();
  if (n == 0) throw MsError("network has no nodes");
  constexpr double kBoxSlack = 1e-12;
  for (Index i = 0; i < n; ++i) {
    const auto& node = net.nodes[i];
    for (int k = 0; k < net.dim; ++k) {
      const double x = node.coords[k];
      const double slack = kBoxSlack * net.box[k];
      if (!std::isfinite(x) || x < -slack || x > net.box[k] + slack)
        throw MsError(fmt::format(
            "node {}: coordinate {} = {} outside box [0, {}]", i, k, x,
            net.box[k]));
    }
    if (!finite_positive(node.capacity))
      throw MsError(fmt::format("node {}: capacity must be finite positive, got {}",
                                i, node.capacity));
    if (node.radius && !finite_positive(*node.radius))
      throw MsError(fmt::format("node {}: radius must be finite positive", i));
    if (!std::is_sorted(node.labels.begin(), node.labels.end()) ||
        std::adjacent_find(node.labels.begin(), node.labels.end()) !=
            node.labels.end())
      throw MsError(fmt::format("node {}: labels must be sorted unique", i));
  }
  std::vector<std::pair<Index, Index>> undirected;
  undirected.reserve(net.edges.size());
  for (Index e = 0; e < net.n_edges(); ++e) {
    const auto& edge = net.edges[e];
    if (edge.head < 0 || edge.head >= n || edge.tail < 0 || edge.tail >= n)
      throw MsError(fmt::format("edge {}: endpoint out of range", e));
    if (edge.head == edge.tail)
      throw MsError(fmt::format("edge {}: self-loop at node {}", e, edge.head));
    if (!finite_positive(edge.weight))
      throw MsError(fmt::format("edge {}: weight must be finite positive, got {}",
                                e, edge.weight));
    if (edge.length && !finite_positive(*edge.length))
      throw MsError(fmt::format("edge {}: length must be finite positive", e));
    if (edge.radius && !finite_positive(*edge.radius))
      throw MsError(fmt::format("edge {}: radius must be finite positive", e));
    undirected.emplace_back(std::min(edge.head, edge.tail),
                            std::max(edge.head, edge.tail));
  }
  std::sort(undirected.begin(), undirected.end());
  auto dup = std::adjacent_find(undirected.begin(), undirected.end());
  if (dup != undirected.end())
    throw MsError(fmt::format("duplicate edge between nodes {} and {}",
                              dup->first, dup->second));
  if (require_connected) {
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(net.edges.size());
    for (const auto& e : net.edges) pairs.emplace_back(e.head, e.tail);
    const auto comps = connected_components(n, pairs);
    if (comps.n_components != 1)
      throw MsError(fmt::format("network is disconnected: {} components",
                                comps.n_components));
  }
}

void validate_boundary(const Network& net, const BoundarySpec& bc) {
  for (const auto& [label, value] : bc.dirichlet) {
    if (!std::isfinite(value))
      throw MsError(fmt::format("boundary value for '{}' is not finite", label));
    bool found = false;
    for (const auto& node : net.nodes) {
      if (node.has_label(label)) {
        found = true;
        break;
      }
    }
    if (!found)
      warn(fmt::format("boundary label '{}' matches no node", label));
  }
  const auto d = assign_dirichlet(net, bc);
  if (d.n_constrained == net.n_nodes())
    throw MsError("every node is constrained; no free unknowns remain");
}

DirichletAssignment assign_dirichlet(const Network& net,
                                     const BoundarySpec& bc) {
  DirichletAssignment out;
  const auto n = static_cast<std::size_t>(net.n_nodes());
  out.constrained.assign(n, false);
  out.value.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [label, value] : bc.dirichlet) {
      if (net.nodes[i].has_label(label)) {
        out.constrained[i] = true;
        out.value[i] = value;  // first matching label wins
        ++out.n_constrained;
        break;
      }
    }
  }
  return out;
}

}  // namespace msnet

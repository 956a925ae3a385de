// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/upscale.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "msnet/components.hpp"
#include "msnet/io.hpp"

namespace msnet {

namespace {

Index position_in(const std::vector<Index>& sorted, Index value) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), value);
  if (it == sorted.end() || *it != value) return -1;
  return static_cast<Index>(it - sorted.begin());
}

/// Merges two sorted node lists (disjoint by construction).
std::vector<Index> merge_sorted(const std::vector<Index>& a,
                                const std::vector<Index>& b) {
  std::vector<Index> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Potential with fixed values on listed nodes, zero net flux elsewhere,
/// solved per connected component that touches a constrained node.
std::vector<double> constrained_flow(const Network& net,
                                     const std::vector<Index>& nodes,
                                     const std::vector<Index>& fixed_nodes,
                                     const std::vector<double>& fixed_values,
                                     double cg_rtol) {
  const Index n = static_cast<Index>(nodes.size());
  std::vector<WeightedEdge> edges;
  for (const auto& e : net.edges) {
    const Index a = position_in(nodes, e.head);
    if (a < 0) continue;
    const Index b = position_in(nodes, e.tail);
    if (b < 0) continue;
    edges.push_back({a, b, e.weight});
  }
  std::vector<double> value(static_cast<std::size_t>(n), 0.0);
  std::vector<char> is_fixed(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < fixed_nodes.size(); ++k) {
    const Index local = position_in(nodes, fixed_nodes[k]);
    if (local < 0) throw MsError("constrained node outside the local domain");
    is_fixed[local] = 1;
    value[local] = fixed_values[k];
  }

  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges) pairs.emplace_back(e.a, e.b);
  const auto comps = connected_components(n, pairs);
  std::vector<char> component_touched(
      static_cast<std::size_t>(comps.n_components), 0);
  for (Index i = 0; i < n; ++i)
    if (is_fixed[i]) component_touched[comps.component_of[i]] = 1;

  std::vector<Index> free_nodes;
  for (Index i = 0; i < n; ++i)
    if (!is_fixed[i] && component_touched[comps.component_of[i]])
      free_nodes.push_back(i);
  if (free_nodes.empty()) return value;

  const SparseOperator lap = assemble_laplacian_from_edges(n, edges);
  const SparseOperator lap_free = lap.principal_submatrix(free_nodes);
  std::vector<double> rhs(free_nodes.size(), 0.0);
  std::vector<Index> local_to_free(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < free_nodes.size(); ++k)
    local_to_free[free_nodes[k]] = static_cast<Index>(k);
  for (const auto& e : edges) {
    if (is_fixed[e.a] != is_fixed[e.b]) {
      const Index free_local = is_fixed[e.a] ? e.b : e.a;
      const Index fixed_local = is_fixed[e.a] ? e.a : e.b;
      rhs[local_to_free[free_local]] += e.weight * value[fixed_local];
    }
  }
  std::vector<double> x(free_nodes.size(), 0.0);
  conjugate_gradient(lap_free, rhs, x, cg_rtol, 20 * n + 200);
  for (std::size_t k = 0; k < free_nodes.size(); ++k)
    value[free_nodes[k]] = x[k];
  return value;
}

/// Capacity-weighted (or plain) average of the local potential over a cell.
double cell_average_local(const Network& net, const std::vector<Index>& domain,
                          const std::vector<Index>& cell_members,
                          std::span<const double> u_local,
                          bool capacity_weighted) {
  double num = 0.0;
  double den = 0.0;
  for (Index g : cell_members) {
    const Index local = position_in(domain, g);
    if (local < 0) throw MsError("cell member missing from the face domain");
    const double v = capacity_weighted ? net.nodes[g].capacity : 1.0;
    num += v * u_local[local];
    den += v;
  }
  if (!(den > 0.0)) throw MsError("cell has no averaging volume");
  return num / den;
}

struct LabelFace {
  int axis = 0;
  bool high_side = false;
};

/// Maps the built-in face labels to grid geometry.
bool face_of_label(const std::string& label, int dim, LabelFace& out) {
  if (label == "left") { out = {0, false}; return true; }
  if (label == "right") { out = {0, true}; return true; }
  if (dim == 3 && label == "front") { out = {1, false}; return true; }
  if (dim == 3 && label == "back") { out = {1, true}; return true; }
  if (label == "bottom") { out = {dim - 1, false}; return true; }
  if (label == "top") { out = {dim - 1, true}; return true; }
  return false;
}

}  // namespace

std::vector<FaceDomain> face_domains(const Network& net, const CoarseGrid& grid,
                                     const CellAssignment& assignment,
                                     double delta_frac) {
  if (!(delta_frac > 0.0) || delta_frac >= 1.0)
    throw MsError(fmt::format("band fraction must be in (0, 1), got {}",
                              delta_frac));
  std::vector<FaceDomain> faces;
  for (int axis = 0; axis < grid.dim; ++axis) {
    const double delta = grid.H[axis] * delta_frac;
    for (Index cell = 0; cell < grid.n_cells(); ++cell) {
      const auto c = grid.cell_coords(cell);
      if (c[axis] + 1 >= grid.cells[axis]) continue;
      auto hi_coords = c;
      ++hi_coords[axis];
      FaceDomain face;
      face.id = static_cast<Index>(faces.size());
      face.axis = axis;
      face.cell_lo = cell;
      face.cell_hi = grid.cell_index(hi_coords);
      face.nodes = merge_sorted(assignment.cell_nodes[face.cell_lo],
                                assignment.cell_nodes[face.cell_hi]);
      const double lo_plane = static_cast<double>(c[axis]) * grid.H[axis];
      const double hi_plane =
          static_cast<double>(c[axis] + 2) * grid.H[axis];
      for (Index g : face.nodes) {
        const double x = net.nodes[g].coords[axis];
        if (x <= lo_plane + delta)
          face.inflow.push_back(g);
        else if (x >= hi_plane - delta)
          face.outflow.push_back(g);
      }
      if (face.inflow.empty() || face.outflow.empty()) {
        face.solvable = false;
        face.reason = face.nodes.empty() ? "no nodes in the face domain"
                                         : "empty inflow or outflow band";
      }
      faces.push_back(std::move(face));
    }
  }
  return faces;
}

std::vector<double> local_flow_solve(const Network& net, const FaceDomain& face,
                                     double cg_rtol) {
  std::vector<Index> fixed = face.inflow;
  std::vector<double> values(fixed.size(), 1.0);
  fixed.insert(fixed.end(), face.outflow.begin(), face.outflow.end());
  values.resize(fixed.size(), 0.0);
  return constrained_flow(net, face.nodes, fixed, values, cg_rtol);
}

double effective_weight(const Network& net, const FaceDomain& face,
                        const CellAssignment& assignment,
                        std::span<const double> u_local,
                        bool capacity_weighted) {
  double flux = 0.0;
  for (const auto& e : net.edges) {
    const Index ch = assignment.cell_of_node[e.head];
    const Index ct = assignment.cell_of_node[e.tail];
    if (ch == face.cell_lo && ct == face.cell_hi) {
      flux += e.weight * (u_local[position_in(face.nodes, e.head)] -
                          u_local[position_in(face.nodes, e.tail)]);
    } else if (ct == face.cell_lo && ch == face.cell_hi) {
      flux += e.weight * (u_local[position_in(face.nodes, e.tail)] -
                          u_local[position_in(face.nodes, e.head)]);
    }
  }
  const double avg_lo =
      cell_average_local(net, face.nodes, assignment.cell_nodes[face.cell_lo],
                         u_local, capacity_weighted);
  const double avg_hi =
      cell_average_local(net, face.nodes, assignment.cell_nodes[face.cell_hi],
                         u_local, capacity_weighted);
  const double drop = avg_lo - avg_hi;
  const double scale = std::max({1.0, std::abs(avg_lo), std::abs(avg_hi)});
  if (std::abs(drop) <= 1e-14 * scale) return 0.0;
  return flux / drop;
}

std::vector<double> effective_capacity(const Network& net,
                                       const CellAssignment& assignment) {
  std::vector<double> out(assignment.cell_nodes.size(), 0.0);
  for (std::size_t cell = 0; cell < assignment.cell_nodes.size(); ++cell) {
    double sum = 0.0;
    for (Index g : assignment.cell_nodes[cell]) sum += net.nodes[g].capacity;
    out[cell] = sum;
  }
  return out;
}

UpscaledModel build_upscaled_model(const Network& net, const CoarseGrid& grid,
                                   const CellAssignment& assignment,
                                   const BoundarySpec& bc,
                                   const UpscaleOptions& options) {
  UpscaledModel model;
  model.grid = grid;
  model.cell_to_active.assign(static_cast<std::size_t>(grid.n_cells()), -1);
  const auto cell_capacity = effective_capacity(net, assignment);
  Index empty_cells = 0;
  for (Index cell = 0; cell < grid.n_cells(); ++cell) {
    if (assignment.cell_nodes[cell].empty()) {
      ++empty_cells;
      continue;
    }
    model.cell_to_active[cell] = static_cast<Index>(model.active_cells.size());
    model.active_cells.push_back(cell);
    model.capacity.push_back(cell_capacity[cell]);
  }
  if (empty_cells > 0)
    warn(fmt::format("{} coarse cells hold no nodes and are excluded",
                     empty_cells));
  if (model.active_cells.empty())
    throw MsError("no coarse cell holds any node");

  auto faces = face_domains(net, grid, assignment, options.delta_frac);
  std::vector<double> weights(faces.size(), 0.0);
  std::vector<std::string> failures(faces.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t f = next.fetch_add(1);
      if (f >= faces.size() || failed.load()) break;
      try {
        auto& face = faces[f];
        if (!face.solvable) {
          failures[f] = face.reason;
          continue;
        }
        const auto u = local_flow_solve(net, face, options.cg_rtol);
        const double w = effective_weight(net, face, assignment, u,
                                          options.capacity_weighted);
        if (w > 0.0)
          weights[f] = w;
        else
          failures[f] = w == 0.0 ? "no flux path between the cells"
                                 : "negative effective conductance";
      } catch (const std::exception& e) {
        std::scoped_lock lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  const Index n_threads = std::max<Index>(1, options.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw MsError(first_error);

  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    if (weights[f] > 0.0) {
      model.edges.push_back({face.id, face.cell_lo, face.cell_hi, weights[f]});
    } else if (!assignment.cell_nodes[face.cell_lo].empty() &&
               !assignment.cell_nodes[face.cell_hi].empty()) {
      ++model.n_unsolvable;
      warn(fmt::format("face {} (cells {} | {}): {}", face.id, face.cell_lo,
                       face.cell_hi, failures[f]));
    }
  }

  // Boundary couplings from single-cell problems, sequential (few cells).
  for (const auto& [label, g] : bc.dirichlet) {
    LabelFace geom;
    if (!face_of_label(label, grid.dim, geom)) {
      warn(fmt::format("boundary label '{}' has no face geometry; skipped",
                       label));
      continue;
    }
    const double delta = grid.H[geom.axis] * options.delta_frac;
    for (Index cell = 0; cell < grid.n_cells(); ++cell) {
      const auto c = grid.cell_coords(cell);
      const Index edge_coord = geom.high_side ? grid.cells[geom.axis] - 1 : 0;
      if (c[geom.axis] != edge_coord) continue;
      const auto& members = assignment.cell_nodes[cell];
      if (members.empty()) continue;
      std::vector<Index> inflow;
      for (Index gnode : members)
        if (net.nodes[gnode].has_label(label)) inflow.push_back(gnode);
      if (inflow.empty()) continue;
      // Ground the band at the cell's opposite plane.
      const double inner_plane =
          geom.high_side
              ? static_cast<double>(c[geom.axis]) * grid.H[geom.axis]
              : static_cast<double>(c[geom.axis] + 1) * grid.H[geom.axis];
      std::vector<Index> outflow;
      for (Index gnode : members) {
        if (std::binary_search(inflow.begin(), inflow.end(), gnode)) continue;
        const double x = net.nodes[gnode].coords[geom.axis];
        const bool in_band = geom.high_side ? x <= inner_plane + delta
                                            : x >= inner_plane - delta;
        if (in_band) outflow.push_back(gnode);
      }
      if (outflow.empty()) {
        ++model.n_unsolvable;
        warn(fmt::format("cell {}: no grounding band for label '{}'", cell,
                         label));
        continue;
      }
      std::vector<Index> fixed = inflow;
      std::vector<double> values(fixed.size(), 1.0);
      fixed.insert(fixed.end(), outflow.begin(), outflow.end());
      values.resize(fixed.size(), 0.0);
      const auto u = constrained_flow(net, members, fixed, values,
                                      options.cg_rtol);
      // Flux out of the labelled set, ascending edge order.
      double flux = 0.0;
      for (const auto& e : net.edges) {
        const Index a = position_in(members, e.head);
        if (a < 0) continue;
        const Index b = position_in(members, e.tail);
        if (b < 0) continue;
        const bool a_in = std::binary_search(inflow.begin(), inflow.end(),
                                             e.head);
        const bool b_in = std::binary_search(inflow.begin(), inflow.end(),
                                             e.tail);
        if (a_in == b_in) continue;
        flux += a_in ? e.weight * (u[a] - u[b]) : e.weight * (u[b] - u[a]);
      }
      double avg = 0.0;
      double den = 0.0;
      for (Index gnode : members) {
        const double v =
            options.capacity_weighted ? net.nodes[gnode].capacity : 1.0;
        avg += v * u[position_in(members, gnode)];
        den += v;
      }
      avg /= den;
      const double drop = 1.0 - avg;
      if (std::abs(drop) <= 1e-14 || !(flux > 0.0)) {
        ++model.n_unsolvable;
        warn(fmt::format("cell {}: boundary coupling for '{}' is degenerate",
                         cell, label));
        continue;
      }
      model.couplings.push_back({cell, label, g, flux / drop});
    }
  }
  return model;
}

Trajectory upscaled_solve(const UpscaledModel& model,
                          const std::vector<double>& u0_cells,
                          const TimeGrid& time, double cg_rtol,
                          Index save_every) {
  const Index n = static_cast<Index>(model.active_cells.size());
  if (static_cast<Index>(u0_cells.size()) != n)
    throw MsError("coarse initial state length mismatch");
  if (!(time.tau > 0.0))
    throw MsError(fmt::format("time step must be positive, got {}", time.tau));

  std::vector<WeightedEdge> edges;
  edges.reserve(model.edges.size());
  for (const auto& e : model.edges)
    edges.push_back({model.cell_to_active[e.cell_a],
                     model.cell_to_active[e.cell_b], e.weight});
  {
    std::vector<std::pair<Index, Index>> pairs;
    for (const auto& e : edges) pairs.emplace_back(e.a, e.b);
    const auto comps = connected_components(n, pairs);
    if (comps.n_components != 1)
      throw MsError(fmt::format("coarse model is disconnected: {} components",
                                comps.n_components));
  }
  SparseOperator lap = assemble_laplacian_from_edges(n, edges);
  std::vector<double> coupling_diag(static_cast<std::size_t>(n), 0.0);
  std::vector<double> coupling_rhs(static_cast<std::size_t>(n), 0.0);
  for (const auto& c : model.couplings) {
    const Index i = model.cell_to_active[c.cell];
    coupling_diag[i] += c.weight;
    coupling_rhs[i] += c.weight * c.value;
  }
  const SparseOperator stiffness = SparseOperator::add(
      1.0, lap, 1.0, SparseOperator::diagonal(coupling_diag));
  const SparseOperator mass = SparseOperator::diagonal(model.capacity);
  const SparseOperator system =
      SparseOperator::add(1.0, mass, time.tau, stiffness);

  Trajectory traj;
  traj.steps.push_back(0);
  traj.states.push_back(u0_cells);
  std::vector<double> u = u0_cells;
  std::vector<double> b(static_cast<std::size_t>(n));
  std::vector<double> cu(static_cast<std::size_t>(n));
  for (Index step = 1; step <= time.n_steps; ++step) {
    mass.apply(u, cu);
    for (Index i = 0; i < n; ++i)
      b[i] = time.tau * coupling_rhs[i] + cu[i];
    try {
      conjugate_gradient(system, b, u, cg_rtol, 20 * n + 200);
    } catch (const MsError& e) {
      throw MsError(fmt::format("step {}: {}", step, e.what()));
    }
    const bool record = (save_every > 0 && step % save_every == 0) ||
                        step == time.n_steps;
    if (record) {
      traj.steps.push_back(step);
      traj.states.push_back(u);
    }
  }
  return traj;
}

std::vector<double> prolong_piecewise_constant(const UpscaledModel& model,
                                               const CellAssignment& assignment,
                                               std::span<const double> u_cells) {
  if (u_cells.size() != model.active_cells.size())
    throw MsError("coarse state length mismatch");
  std::vector<double> fine(assignment.cell_of_node.size(), 0.0);
  for (std::size_t i = 0; i < assignment.cell_of_node.size(); ++i) {
    const Index active = model.cell_to_active[assignment.cell_of_node[i]];
    if (active < 0)
      throw MsError("fine node owned by an excluded coarse cell");
    fine[i] = u_cells[active];
  }
  return fine;
}

void save_upscaled_model(const UpscaledModel& model,
                         const std::filesystem::path& dir) {
  Network coarse;
  coarse.dim = model.grid.dim;
  coarse.box = model.grid.box;
  coarse.generator = "upscaled";
  coarse.nodes.reserve(model.active_cells.size());
  for (std::size_t k = 0; k < model.active_cells.size(); ++k) {
    NodeRecord node;
    node.coords = model.grid.cell_center(model.active_cells[k]);
    node.capacity = model.capacity[k];
    coarse.nodes.push_back(std::move(node));
  }
  for (const auto& c : model.couplings)
    coarse.nodes[model.cell_to_active[c.cell]].add_label(c.label);
  coarse.edges.reserve(model.edges.size());
  for (const auto& e : model.edges) {
    coarse.edges.push_back({model.cell_to_active[e.cell_a],
                            model.cell_to_active[e.cell_b], e.weight,
                            {}, {}});
  }
  save_network(coarse, dir);

  nlohmann::json extra;
  extra["n_unsolvable"] = model.n_unsolvable;
  extra["active_cells"] = model.active_cells;
  nlohmann::json couplings = nlohmann::json::array();
  for (const auto& c : model.couplings) {
    couplings.push_back({{"cell", c.cell},
                         {"label", c.label},
                         {"value", c.value},
                         {"weight", c.weight}});
  }
  extra["couplings"] = std::move(couplings);
  write_file(dir / "upscale.json", extra.dump(2) + "\n");
}

}  // namespace msnet

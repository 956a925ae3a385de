// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Release gate: ten end-to-end scenarios, each printing one [PASS]/[FAIL]
// line with its runtime against a fixed budget. argv[1] is the msnet
// command-line binary; scenario artifacts live under ./acceptance_work.
// The exit code is the number of failed scenarios.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "msnet/assembly.hpp"
#include "msnet/coarse.hpp"
#include "msnet/common.hpp"
#include "msnet/generate.hpp"
#include "msnet/io.hpp"
#include "msnet/metrics.hpp"
#include "msnet/msbasis.hpp"
#include "msnet/network.hpp"
#include "msnet/solve.hpp"
#include "msnet/sparse.hpp"
#include "msnet/upscale.hpp"

namespace fs = std::filesystem;
using namespace msnet;

namespace {

std::string g_cli;
fs::path g_work;

void expect(bool condition, const std::string& message) {
  if (!condition) throw MsError(message);
}

std::string quoted(const fs::path& p) {
  return fmt::format("\"{}\"", p.string());
}

/// Runs one msnet invocation, appending its output to acceptance_work/cli.log.
void run_cli(const std::string& args) {
  const std::string cmd = fmt::format("{} {} >> {} 2>&1", g_cli, args,
                                      quoted(g_work / "cli.log"));
  const int rc = std::system(cmd.c_str());
  expect(rc == 0, fmt::format("command failed (see acceptance_work/cli.log): "
                              "msnet {}",
                              args));
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

Network gen_lattice_poiseuille(Index nx, Index ny, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.family = Family::structured_regular;
  cfg.dims = {nx, ny, 1};
  cfg.seed = seed;
  Network net = generate_network(cfg);
  PropertyConfig props;
  props.seed = seed + 1;
  assign_poiseuille(net, props);
  label_boundaries(net);
  return net;
}

std::vector<double> zeros(Index n) {
  return std::vector<double>(static_cast<std::size_t>(n), 0.0);
}

/// Offline + online multiscale run from a zero start, reconstructed on the
/// fine nodes at the final time.
std::vector<double> multiscale_final(const Network& net,
                                     const ReducedSystem& reduced,
                                     const std::vector<double>& f_full,
                                     const TimeGrid& time,
                                     const std::array<Index, 3>& cells,
                                     const BasisRequest& request) {
  const CoarseGrid grid = make_coarse_grid(net, cells);
  const CellAssignment assignment = assign_cells(net, grid);
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, request);
  const ProjectionOperator restricted =
      restrict_projection(basis.projection, reduced);
  const std::vector<double> f_free = reduced.restrict_vector(f_full);
  const CoarseSystem coarse = galerkin_project(restricted, reduced, f_free);
  const std::vector<double> uh0 = zeros(restricted.matrix.rows());
  const Trajectory traj =
      ms_solve(coarse, restricted.row_meta, uh0, time);
  return reconstruct(restricted, reduced, traj.final_state());
}

std::vector<double> fine_final(const ReducedSystem& reduced,
                               const std::vector<double>& f_full,
                               const TimeGrid& time, LinearMethod method,
                               double rtol = 1e-10) {
  LinearSolverConfig config;
  config.method = method;
  config.rtol = rtol;
  const std::vector<double> u0 = zeros(reduced.n_global());
  return fine_solve(reduced, f_full, u0, time, config).final_state();
}

// -------------------------------------------------------------------------
// 1. Generated network and coarse-grid dimensions.

std::string check_dimensions() {
  const fs::path d2 = g_work / "c1_lat2d";
  run_cli(fmt::format("gen --seed 1 --family regular --dims 200,200 --out {}",
                      quoted(d2)));
  const Network net2 = load_network(d2);
  expect(net2.n_nodes() == 40000,
         fmt::format("2D lattice: expected 40000 nodes, got {}",
                     net2.n_nodes()));
  expect(net2.n_edges() == 79600,
         fmt::format("2D lattice: expected 79600 edges, got {}",
                     net2.n_edges()));

  const fs::path d3 = g_work / "c1_lat3d";
  run_cli(fmt::format(
      "gen --seed 2 --family regular --dims 25,25,25 --out {}", quoted(d3)));
  const Network net3 = load_network(d3);
  expect(net3.n_nodes() == 15625,
         fmt::format("3D lattice: expected 15625 nodes, got {}",
                     net3.n_nodes()));
  expect(net3.n_edges() == 45000,
         fmt::format("3D lattice: expected 45000 edges, got {}",
                     net3.n_edges()));

  const CoarseGrid grid = make_coarse_grid(net3, {5, 5, 5});
  expect(grid.n_cells() == 125, fmt::format("5^3 grid: expected 125 cells, "
                                            "got {}",
                                            grid.n_cells()));
  expect(grid.n_coarse_nodes() == 216,
         fmt::format("5^3 grid: expected 216 coarse nodes, got {}",
                     grid.n_coarse_nodes()));

  const CellAssignment assignment = assign_cells(net3, grid);
  BasisRequest request;
  request.n_modes = 2;
  request.eigen.dense_threshold = 300;  // largest patches take the
                                        // iterative eigensolver route
  request.threads = 4;
  const MultiscaleBasis basis =
      build_multiscale_basis(net3, grid, assignment, request);
  const Index rows = basis.projection.matrix.rows();
  expect(rows == 2 * 216,
         fmt::format("coarse space: expected 2 modes x 216 patches = 432 "
                     "rows, got {}",
                     rows));
  return fmt::format("40000/79600 and 15625/45000 nodes/edges, 125 cells, "
                     "216 coarse nodes, {} basis rows",
                     rows);
}

// -------------------------------------------------------------------------
// 2. Local spectral invariants on every patch.

std::string check_spectral_invariants() {
  const fs::path dir = g_work / "c2_irr40";
  run_cli(fmt::format(
      "gen --seed 7 --family irregular --dims 40,40 --out {}", quoted(dir)));
  const Network net = load_network(dir);
  const CoarseGrid grid = make_coarse_grid(net, {5, 5, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  const std::vector<Patch> patches = build_patches(net, grid, assignment);

  EigenSolveOptions dense_route;  // every cluster below the threshold
  EigenSolveOptions iterative_route;
  iterative_route.dense_threshold = 32;

  Index checked = 0;
  for (const EigenSolveOptions& options : {dense_route, iterative_route}) {
    for (const Patch& patch : patches) {
      if (patch.empty()) continue;
      LocalSubnetwork sub = extract_subnetwork(net, patch);
      main_cluster(sub);
      if (sub.main_size == 0) continue;
      const Index n_modes = std::min<Index>(8, sub.main_size);
      const LocalEigenSet eigs = local_eigensolve(sub, n_modes, options);
      expect(eigs.n_modes() == n_modes,
             fmt::format("patch {}: expected {} modes, got {}", patch.coarse_node,
                         n_modes, eigs.n_modes()));
      expect(eigs.eigenvalues.front() <= 1e-10,
             fmt::format("patch {}: smallest eigenvalue {} above 1e-10",
                         patch.coarse_node, eigs.eigenvalues.front()));
      for (Index r = 1; r < n_modes; ++r)
        expect(eigs.eigenvalues[r] >= eigs.eigenvalues[r - 1],
               fmt::format("patch {}: eigenvalues not ascending at {}",
                           patch.coarse_node, r));
      expect(eigs.eigenvalues.back() <= 2.0 + 1e-10,
             fmt::format("patch {}: eigenvalue {} above the normalized bound",
                         patch.coarse_node, eigs.eigenvalues.back()));

      const Index n_local = sub.n_local();
      std::vector<double> degree(static_cast<std::size_t>(n_local), 0.0);
      for (const WeightedEdge& e : sub.edges) {
        degree[static_cast<std::size_t>(e.a)] += e.weight;
        degree[static_cast<std::size_t>(e.b)] += e.weight;
      }
      const SparseOperator laplacian =
          assemble_laplacian_from_edges(n_local, sub.edges);
      for (Index r = 0; r < n_modes; ++r) {
        const std::vector<double>& phi = eigs.vectors[static_cast<std::size_t>(r)];
        std::vector<double> residual = laplacian.apply(phi);
        double norm_sq = 0.0;
        for (Index i = 0; i < n_local; ++i) {
          residual[static_cast<std::size_t>(i)] -=
              eigs.eigenvalues[static_cast<std::size_t>(r)] *
              degree[static_cast<std::size_t>(i)] *
              phi[static_cast<std::size_t>(i)];
          norm_sq += residual[static_cast<std::size_t>(i)] *
                     residual[static_cast<std::size_t>(i)];
        }
        expect(std::sqrt(norm_sq) <= 1e-8,
               fmt::format("patch {}: mode {} residual {} above 1e-8",
                           patch.coarse_node, r, std::sqrt(norm_sq)));
        for (Index s = r; s < n_modes; ++s) {
          const std::vector<double>& psi =
              eigs.vectors[static_cast<std::size_t>(s)];
          double gram = 0.0;
          for (Index i = 0; i < n_local; ++i)
            gram += degree[static_cast<std::size_t>(i)] *
                    phi[static_cast<std::size_t>(i)] *
                    psi[static_cast<std::size_t>(i)];
          const double target = (r == s) ? 1.0 : 0.0;
          expect(std::abs(gram - target) <= 1e-8,
                 fmt::format("patch {}: Gram entry ({},{}) off by {}",
                             patch.coarse_node, r, s,
                             std::abs(gram - target)));
        }
      }
      ++checked;
    }
  }
  return fmt::format("{} patch eigensets verified over dense and iterative "
                     "routes",
                     checked);
}

// -------------------------------------------------------------------------
// 3. Partition of unity across network families.

std::string check_partition_of_unity() {
  struct Case {
    const char* name;
    GeneratorConfig cfg;
    std::array<Index, 3> cells;
  };
  std::vector<Case> cases(3);
  cases[0].name = "regular-3d";
  cases[0].cfg.family = Family::structured_regular;
  cases[0].cfg.dim = 3;
  cases[0].cfg.dims = {15, 15, 15};
  cases[0].cells = {3, 3, 3};
  cases[1].name = "irregular";
  cases[1].cfg.family = Family::structured_irregular;
  cases[1].cfg.dims = {40, 40, 1};
  cases[1].cfg.seed = 11;
  cases[1].cells = {4, 4, 1};
  cases[2].name = "unstructured";
  cases[2].cfg.family = Family::unstructured;
  cases[2].cfg.n_points = 1200;
  cases[2].cfg.knn = 6;
  cases[2].cfg.seed = 13;
  cases[2].cells = {3, 3, 1};

  double worst = 0.0;
  for (const Case& c : cases) {
    const Network net = generate_network(c.cfg);
    const CoarseGrid grid = make_coarse_grid(net, c.cells);
    const CellAssignment assignment = assign_cells(net, grid);
    const std::vector<Patch> patches = build_patches(net, grid, assignment);
    std::vector<double> sum(static_cast<std::size_t>(net.n_nodes()), 0.0);
    for (const Patch& patch : patches)
      for (std::size_t i = 0; i < patch.nodes.size(); ++i)
        sum[static_cast<std::size_t>(patch.nodes[i])] += patch.chi[i];
    for (Index i = 0; i < net.n_nodes(); ++i) {
      const double defect = std::abs(sum[static_cast<std::size_t>(i)] - 1.0);
      worst = std::max(worst, defect);
      expect(defect <= 1e-12,
             fmt::format("{}: hat sum off by {} at node {}", c.name, defect,
                         i));
    }
  }
  return fmt::format("3 families, worst hat-sum defect {:.2e}", worst);
}

// -------------------------------------------------------------------------
// 4. Exact recovery with full local bases.

std::string check_exact_recovery() {
  const Network net = gen_lattice_poiseuille(12, 12, 5);
  const BoundarySpec bc{{{"top", 1.0}}};
  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const std::vector<double> f(static_cast<std::size_t>(net.n_nodes()), 0.05);
  const TimeGrid time{0.05, 10};

  const std::vector<double> reference =
      fine_final(reduced, f, time, LinearMethod::dense_cholesky);
  BasisRequest request;
  request.full_basis = true;
  const std::vector<double> recovered =
      multiscale_final(net, reduced, f, time, {2, 2, 1}, request);
  const double error = l2_error_percent(reference, recovered);
  expect(error <= 1e-8,
         fmt::format("full-basis recovery error {}% above 1e-8%", error));
  return fmt::format("{} nodes, e1_h = {:.2e}%", net.n_nodes(), error);
}

// -------------------------------------------------------------------------
// 5. Unconditional stability of the fine and coarse steppers.

std::string check_stability() {
  const Network net = gen_lattice_poiseuille(30, 30, 9);
  BoundarySpec bc;
  for (const char* label : {"left", "right", "top", "bottom"})
    bc.dirichlet.emplace_back(label, 0.0);
  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);

  std::mt19937_64 rng(42);
  std::vector<double> u0(static_cast<std::size_t>(net.n_nodes()), 0.0);
  for (Index i = 0; i < net.n_nodes(); ++i)
    if (reduced.global_to_free[static_cast<std::size_t>(i)] >= 0)
      u0[static_cast<std::size_t>(i)] = uniform_double(rng);
  const std::vector<double> f = zeros(net.n_nodes());

  const CoarseGrid grid = make_coarse_grid(net, {5, 5, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  BasisRequest request;
  request.n_modes = 4;
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, request);
  const ProjectionOperator restricted =
      restrict_projection(basis.projection, reduced);
  const CoarseSystem coarse = galerkin_project(
      restricted, reduced, zeros(reduced.n_free()));
  const std::vector<double> uh0 =
      restricted.matrix.apply(reduced.restrict_vector(u0));

  const auto check_monotone = [](const std::vector<double>& norms,
                                 const std::string& what) {
    const double slack = 1e-12 * norms.front();
    for (std::size_t n = 1; n < norms.size(); ++n)
      expect(norms[n] <= norms[n - 1] + slack,
             fmt::format("{}: norm rose from {} to {} at step {}", what,
                         norms[n - 1], norms[n], n));
  };

  for (const double tau : {1e-3, 1.0, 1e3}) {
    const TimeGrid time{tau, 50};
    LinearSolverConfig config;
    config.method = LinearMethod::dense_cholesky;
    const Trajectory fine = fine_solve(reduced, f, u0, time, config, 1);
    expect(fine.states.size() == 51,
           fmt::format("expected 51 recorded fine states, got {}",
                       fine.states.size()));
    std::vector<double> norms;
    norms.reserve(fine.states.size());
    for (const std::vector<double>& state : fine.states)
      norms.push_back(energy_norm(laplacian, state));
    check_monotone(norms, fmt::format("fine tau={}", tau));

    const Trajectory coarse_traj =
        ms_solve(coarse, restricted.row_meta, uh0, time);
    std::vector<double> coarse_norms;
    coarse_norms.reserve(coarse_traj.states.size());
    for (const std::vector<double>& state : coarse_traj.states)
      coarse_norms.push_back(energy_norm(coarse.stiffness, state));
    check_monotone(coarse_norms, fmt::format("coarse tau={}", tau));
  }
  return "3 step sizes, 51 fine and 51 coarse energy norms each, monotone";
}

// -------------------------------------------------------------------------
// 6. Iterative vs dense linear-solver agreement.

std::string check_solver_agreement() {
  const Network net = gen_lattice_poiseuille(20, 20, 15);
  const BoundarySpec bc{{{"top", 1.0}, {"bottom", 0.0}}};
  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const std::vector<double> f = zeros(net.n_nodes());
  const TimeGrid time{0.1, 10};

  const std::vector<double> iterative =
      fine_final(reduced, f, time, LinearMethod::conjugate_gradient);
  const std::vector<double> factored =
      fine_final(reduced, f, time, LinearMethod::dense_lu_oracle);
  const double error = l2_error_percent(factored, iterative);
  expect(error <= 1e-6,
         fmt::format("solver disagreement {}% above 1e-6%", error));
  return fmt::format("{} nodes, 10 steps, relative gap {:.2e}%",
                     net.n_nodes(), error);
}

// -------------------------------------------------------------------------
// 7. Error decay with added local modes.

std::string check_mode_decay() {
  struct Case {
    const char* name;
    std::string gen_args;
    double final_time;
  };
  const std::vector<Case> cases = {
      {"regular", "gen --seed 101 --family regular --dims 50,50 "
                  "--props poiseuille",
       0.5},
      {"irregular", "gen --seed 202 --family irregular --dims 60,60 "
                    "--removal-prob 0.2 --props poiseuille",
       2.0},
      {"unstructured", "gen --seed 303 --family unstructured --points 2500 "
                       "--knn 6 --label-tol 0.03 --props poiseuille",
       0.5},
  };
  const std::array<Index, 5> mode_counts = {1, 2, 4, 8, 16};

  std::string detail;
  for (const Case& c : cases) {
    const fs::path dir = g_work / fmt::format("c7_{}", c.name);
    run_cli(fmt::format("{} --out {}", c.gen_args, quoted(dir)));
    const Network net = load_network(dir);
    const BoundarySpec bc{{{"top", 1.0}}};
    const SparseOperator laplacian = assemble_laplacian(net);
    const SparseOperator mass = assemble_mass(net);
    const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
    const std::vector<double> f = zeros(net.n_nodes());
    const TimeGrid time{c.final_time / 50.0, 50};
    const std::vector<double> reference =
        fine_final(reduced, f, time, LinearMethod::conjugate_gradient);

    std::array<double, 5> errors{};
    for (std::size_t k = 0; k < mode_counts.size(); ++k) {
      BasisRequest request;
      request.n_modes = mode_counts[k];
      request.threads = 4;
      const std::vector<double> candidate =
          multiscale_final(net, reduced, f, time, {5, 5, 1}, request);
      errors[k] = l2_error_percent(reference, candidate);
    }
    for (std::size_t k = 1; k < errors.size(); ++k)
      expect(errors[k] <= 1.05 * errors[k - 1],
             fmt::format("{}: error rose from {:.3f}% (M={}) to {:.3f}% "
                         "(M={})",
                         c.name, errors[k - 1], mode_counts[k - 1], errors[k],
                         mode_counts[k]));
    expect(errors.back() < 0.5 * errors.front(),
           fmt::format("{}: e1_h(M=16) = {:.3f}% not below half of "
                       "e1_h(M=1) = {:.3f}%",
                       c.name, errors.back(), errors.front()));
    detail += fmt::format("{}{} {:.1f}%->{:.1f}%", detail.empty() ? "" : ", ",
                          c.name, errors.front(), errors.back());
  }
  return detail;
}

// -------------------------------------------------------------------------
// 8. Error decrease under coarse-grid refinement.

std::string check_grid_refinement() {
  const fs::path dir = g_work / "c8_irregular";
  run_cli(fmt::format("gen --seed 202 --family irregular --dims 60,60 "
                      "--removal-prob 0.2 --props poiseuille --out {}",
                      quoted(dir)));
  const Network net = load_network(dir);
  const BoundarySpec bc{{{"top", 1.0}}};
  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const std::vector<double> f = zeros(net.n_nodes());
  const TimeGrid time{2.0 / 50.0, 50};
  const std::vector<double> reference =
      fine_final(reduced, f, time, LinearMethod::conjugate_gradient);

  BasisRequest request;
  request.n_modes = 4;
  request.threads = 4;
  const double coarse_error = l2_error_percent(
      reference, multiscale_final(net, reduced, f, time, {3, 3, 1}, request));
  const double fine_error = l2_error_percent(
      reference, multiscale_final(net, reduced, f, time, {5, 5, 1}, request));
  expect(fine_error < coarse_error,
         fmt::format("refinement did not reduce the error: 3x3 gives "
                     "{:.3f}%, 5x5 gives {:.3f}%",
                     coarse_error, fine_error));
  return fmt::format("M=4, e1_h 3x3 {:.1f}% -> 5x5 {:.1f}%", coarse_error,
                     fine_error);
}

// -------------------------------------------------------------------------
// 9. Flux-averaging upscaling baseline.

Network five_node_chain() {
  Network net;
  net.dim = 2;
  net.box = {1.0, 1.0, 1.0};
  net.nodes.resize(5);
  for (Index i = 0; i < 5; ++i) {
    net.nodes[static_cast<std::size_t>(i)].coords = {
        static_cast<double>(i) / 4.0, 0.5, 0.0};
    net.nodes[static_cast<std::size_t>(i)].capacity = 1.0;
  }
  for (Index i = 0; i < 4; ++i)
    net.edges.push_back({i, i + 1, 2.0, std::nullopt, std::nullopt});
  validate_network(net, true);
  return net;
}

std::string check_upscaling() {
  // Hand-checked chain: unit potential drives 1 -> 0 across four equal
  // conductances, so the node potentials are (1, .75, .5, .25, 0), the
  // interface flux is 2 * (0.75 - 0.5) = 0.5, the cell averages are 0.875
  // and 0.25, and the effective conductance is 0.5 / 0.625 = 0.8.
  const Network chain = five_node_chain();
  const CoarseGrid chain_grid = make_coarse_grid(chain, {2, 2, 1});
  const CellAssignment chain_cells = assign_cells(chain, chain_grid);
  const std::vector<FaceDomain> faces =
      face_domains(chain, chain_grid, chain_cells, 0.1);
  const FaceDomain* face = nullptr;
  for (const FaceDomain& f : faces)
    if (f.solvable && f.cell_lo == 2 && f.cell_hi == 3) face = &f;
  expect(face != nullptr, "chain: no solvable face between the two "
                          "occupied cells");
  expect(face->inflow == std::vector<Index>{0} &&
             face->outflow == std::vector<Index>{4},
         "chain: unexpected inflow/outflow bands");
  const std::vector<double> potential = local_flow_solve(chain, *face, 1e-12);
  const std::array<double, 5> expected = {1.0, 0.75, 0.5, 0.25, 0.0};
  for (std::size_t i = 0; i < expected.size(); ++i)
    expect(std::abs(potential[i] - expected[i]) <= 1e-10,
           fmt::format("chain: potential[{}] = {} off the hand solution",
                       i, potential[i]));
  const double wbar =
      effective_weight(chain, *face, chain_cells, potential, true);
  expect(std::abs(wbar - 0.8) <= 1e-10,
         fmt::format("chain: effective conductance {} != 0.8", wbar));
  const UpscaledModel chain_model =
      build_upscaled_model(chain, chain_grid, chain_cells, BoundarySpec{});
  bool found_edge = false;
  for (const CoarseEdge& e : chain_model.edges)
    if (e.cell_a == 2 && e.cell_b == 3) {
      found_edge = true;
      expect(std::abs(e.weight - 0.8) <= 1e-10,
             fmt::format("chain model edge weight {} != 0.8", e.weight));
    }
  expect(found_edge, "chain model: missing the interface edge");

  // Homogeneous lattice: translated face problems must give one value per
  // orientation, capacities must sum exactly, and the coarse surrogate must
  // track the fine transient.
  const fs::path dir = g_work / "c9_hom50";
  run_cli(fmt::format("gen --seed 404 --family regular --dims 50,50 --out {}",
                      quoted(dir)));
  const Network net = load_network(dir);
  const CoarseGrid grid = make_coarse_grid(net, {5, 5, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  const BoundarySpec bc{{{"top", 1.0}, {"bottom", 0.0}}};
  UpscaleOptions options;
  options.threads = 4;
  const UpscaledModel model =
      build_upscaled_model(net, grid, assignment, bc, options);
  expect(model.n_unsolvable == 0,
         fmt::format("{} unsolvable faces on the homogeneous lattice",
                     model.n_unsolvable));
  expect(model.edges.size() == 40,
         fmt::format("expected 40 coarse edges, got {}", model.edges.size()));
  double spread = 0.0;
  for (const int axis : {0, 1}) {
    double lo = 0.0, hi = 0.0, mean = 0.0;
    Index count = 0;
    for (const CoarseEdge& e : model.edges) {
      const auto ca = grid.cell_coords(e.cell_a);
      const auto cb = grid.cell_coords(e.cell_b);
      if (cb[static_cast<std::size_t>(axis)] ==
          ca[static_cast<std::size_t>(axis)])
        continue;
      if (count == 0) {
        lo = hi = e.weight;
      } else {
        lo = std::min(lo, e.weight);
        hi = std::max(hi, e.weight);
      }
      mean += e.weight;
      ++count;
    }
    expect(count == 20, fmt::format("expected 20 faces along axis {}, got {}",
                                    axis, count));
    mean /= static_cast<double>(count);
    spread = std::max(spread, (hi - lo) / std::abs(mean));
    expect(hi - lo <= 1e-10 * std::abs(mean),
           fmt::format("axis {}: face conductances spread {} beyond 1e-10",
                       axis, hi - lo));
  }
  double cell_sum = 0.0;
  for (const double c : model.capacity) cell_sum += c;
  double node_sum = 0.0;
  for (const NodeRecord& node : net.nodes) node_sum += node.capacity;
  expect(cell_sum == node_sum,
         fmt::format("capacity sums differ: cells {} vs nodes {}", cell_sum,
                     node_sum));

  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const TimeGrid time{5.0, 40};
  const std::vector<double> reference = fine_final(
      reduced, zeros(net.n_nodes()), time, LinearMethod::conjugate_gradient);
  const std::vector<double> u0_cells =
      zeros(static_cast<Index>(model.active_cells.size()));
  const Trajectory traj = upscaled_solve(model, u0_cells, time);
  const std::vector<double> prolonged =
      prolong_piecewise_constant(model, assignment, traj.final_state());
  const double error =
      coarse_error_percent(reference, prolonged, net, assignment);
  expect(error <= 5.0,
         fmt::format("coarse transient error {:.3f}% above 5%", error));
  return fmt::format("wbar = {:.12f}, spread {:.1e}, e1_H = {:.2f}%", wbar,
                     spread, error);
}

// -------------------------------------------------------------------------
// 10. Deterministic artifacts across reruns and thread counts.

std::string read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  expect(in.good(), fmt::format("cannot open {}", file.string()));
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

/// Byte-compares two artifact directories. report.json is compared with the
/// wall-clock timings removed; table.txt renders those timings and is
/// skipped.
void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& entry : fs::recursive_directory_iterator(a))
    if (entry.is_regular_file())
      rel.push_back(fs::relative(entry.path(), a));
  std::sort(rel.begin(), rel.end());
  std::vector<fs::path> rel_b;
  for (const auto& entry : fs::recursive_directory_iterator(b))
    if (entry.is_regular_file())
      rel_b.push_back(fs::relative(entry.path(), b));
  std::sort(rel_b.begin(), rel_b.end());
  expect(rel == rel_b, fmt::format("{} and {} hold different file sets",
                                   a.string(), b.string()));
  for (const fs::path& r : rel) {
    if (r.filename() == "table.txt") continue;
    if (r.filename() == "report.json") {
      auto strip = [](const fs::path& file) {
        nlohmann::json doc = nlohmann::json::parse(read_bytes(file));
        doc.erase("timings_s");
        return doc.dump();
      };
      expect(strip(a / r) == strip(b / r),
             fmt::format("report mismatch at {}", (a / r).string()));
      continue;
    }
    expect(read_bytes(a / r) == read_bytes(b / r),
           fmt::format("byte mismatch at {} vs {}", (a / r).string(),
                       (b / r).string()));
  }
}

std::string check_determinism() {
  const fs::path root = g_work / "c10";
  const std::string gen_args =
      "gen --seed 21 --family irregular --dims 35,35 --props poiseuille";
  run_cli(fmt::format("{} --out {}", gen_args, quoted(root / "netA")));
  run_cli(fmt::format("{} --out {}", gen_args, quoted(root / "netB")));
  expect_same_tree(root / "netA", root / "netB");

  const std::string net = quoted(root / "netA");
  const std::string fine_args = fmt::format(
      "solve-fine --net {} --tau 0.1 --steps 10 --save-every 5", net);
  run_cli(fmt::format("{} --out {}", fine_args, quoted(root / "fineA")));
  run_cli(fmt::format("{} --out {}", fine_args, quoted(root / "fineB")));
  expect_same_tree(root / "fineA", root / "fineB");

  const std::string basis_args =
      fmt::format("basis --net {} --grid 3,3 -M 4", net);
  run_cli(fmt::format("{} --threads 1 --out {}", basis_args,
                      quoted(root / "basisT1")));
  run_cli(fmt::format("{} --threads 4 --out {}", basis_args,
                      quoted(root / "basisT4")));
  expect_same_tree(root / "basisT1", root / "basisT4");

  const std::string ms_args = fmt::format(
      "ms --net {} --grid 3,3 -M 4 --tau 0.1 --steps 10 --save-every 5", net);
  run_cli(fmt::format("{} --threads 1 --out {}", ms_args,
                      quoted(root / "msT1")));
  run_cli(fmt::format("{} --threads 4 --out {}", ms_args,
                      quoted(root / "msT4")));
  expect_same_tree(root / "msT1", root / "msT4");

  const fs::path hom = root / "hom40";
  run_cli(fmt::format(
      "gen --seed 23 --family regular --dims 40,40 --props poiseuille "
      "--out {}",
      quoted(hom)));
  const std::string up_args = fmt::format(
      "upscale --net {} --grid 4,4 --tau 0.1 --steps 10", quoted(hom));
  run_cli(fmt::format("{} --threads 1 --out {}", up_args,
                      quoted(root / "upT1")));
  run_cli(fmt::format("{} --threads 4 --out {}", up_args,
                      quoted(root / "upT4")));
  expect_same_tree(root / "upT1", root / "upT4");

  return "gen, solve-fine, basis, ms, upscale byte-stable across reruns "
         "and threads 1/4";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    fmt::print(stderr, "usage: acceptance <path-to-msnet-binary>\n");
    return 2;
  }
  g_cli = quoted(fs::path(argv[1]));
  g_work = fs::current_path() / "acceptance_work";
  std::error_code ec;
  fs::remove_all(g_work, ec);
  fs::create_directories(g_work);

  struct Scenario {
    const char* name;
    double budget_s;
    std::function<std::string()> run;
  };
  const std::vector<Scenario> scenarios = {
      {"network and coarse-grid dimensions", 10.0, check_dimensions},
      {"local spectral invariants", 30.0, check_spectral_invariants},
      {"partition of unity", 10.0, check_partition_of_unity},
      {"exact recovery with full local bases", 10.0, check_exact_recovery},
      {"unconditional stability of both steppers", 20.0, check_stability},
      {"iterative vs dense solver agreement", 10.0, check_solver_agreement},
      {"error decay with added local modes", 300.0, check_mode_decay},
      {"error decrease under grid refinement", 120.0, check_grid_refinement},
      {"flux-averaging upscaling baseline", 60.0, check_upscaling},
      {"deterministic artifacts across reruns/threads", 120.0,
       check_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& scenario = scenarios[i];
    Stopwatch watch;
    std::string detail;
    bool pass = false;
    try {
      detail = scenario.run();
      pass = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    const double elapsed = watch.seconds();
    if (pass && elapsed > scenario.budget_s) {
      pass = false;
      detail = fmt::format("runtime {:.1f} s exceeds the {:.0f} s budget",
                           elapsed, scenario.budget_s);
    }
    fmt::print("[{}] {:2}. {}: {} ({:.1f} s)\n", pass ? "PASS" : "FAIL",
               i + 1, scenario.name, detail, elapsed);
    if (!pass) ++failures;
  }
  fmt::print("acceptance: {}/{} scenarios passed\n",
             scenarios.size() - static_cast<std::size_t>(failures),
             scenarios.size());
  return failures;
}

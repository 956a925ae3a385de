// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "msnet/generate.hpp"
#include "msnet/io.hpp"
#include "msnet/msbasis.hpp"

using namespace msnet;
namespace fs = std::filesystem;

namespace {

LocalSubnetwork triangle() {
  LocalSubnetwork sub;
  sub.patch = 0;
  sub.global_nodes = {0, 1, 2};
  sub.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
  main_cluster(sub);
  return sub;
}

/// Dense (L, D) of a subnetwork, with degrees from the retained edges.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dense_pair(
    const LocalSubnetwork& sub) {
  const Index n = sub.n_local();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : sub.edges) {
    l(e.a, e.a) += e.weight;
    l(e.b, e.b) += e.weight;
    l(e.a, e.b) -= e.weight;
    l(e.b, e.a) -= e.weight;
    d(e.a, e.a) += e.weight;
    d(e.b, e.b) += e.weight;
  }
  return {l, d};
}

double generalized_residual(const LocalSubnetwork& sub, double lambda,
                            const std::vector<double>& phi) {
  const auto [l, d] = dense_pair(sub);
  const Eigen::Map<const Eigen::VectorXd> v(phi.data(), phi.size());
  return (l * v - lambda * (d * v)).norm();
}

LocalSubnetwork irregular_patch(Index* n_patches = nullptr) {
  GeneratorConfig cfg;
  cfg.family = Family::structured_irregular;
  cfg.dims = {40, 40, 1};
  cfg.seed = 99;
  cfg.removal_prob = 0.2;
  const Network net = generate_network(cfg);
  const CoarseGrid grid = make_coarse_grid(net, {5, 5, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  const auto patches = build_patches(net, grid, assignment);
  if (n_patches) *n_patches = static_cast<Index>(patches.size());
  const Patch& patch = patches[grid.node_index({2, 2, 0})];
  LocalSubnetwork sub = extract_subnetwork(net, patch);
  main_cluster(sub);
  return sub;
}

}  // namespace

TEST_SUITE("msbasis") {

TEST_CASE("triangle eigenpairs are 0, 1.5, 1.5 with D-orthonormal vectors") {
  const LocalSubnetwork sub = triangle();
  CHECK(sub.main_size == 3);
  CHECK(sub.eta == std::vector<double>{0.0, 0.0, 0.0});

  const LocalEigenSet eigs = local_eigensolve(sub, 3);
  REQUIRE(eigs.n_modes() == 3);
  CHECK(eigs.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eigs.eigenvalues[1] == doctest::Approx(1.5));
  CHECK(eigs.eigenvalues[2] == doctest::Approx(1.5));

  // First eigenvector: the D-normalized constant, positive by the sign rule.
  const double c = 1.0 / std::sqrt(6.0);
  for (double v : eigs.vectors[0]) CHECK(v == doctest::Approx(c));

  const auto [l, d] = dense_pair(sub);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) {
      const Eigen::Map<const Eigen::VectorXd> vi(eigs.vectors[i].data(), 3);
      const Eigen::Map<const Eigen::VectorXd> vj(eigs.vectors[j].data(), 3);
      const double dot = vi.dot(d * vj);
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("dense path matches an independent generalized eigensolver") {
  const LocalSubnetwork sub = irregular_patch();
  REQUIRE(sub.main_size > 50);
  const Index m = 8;
  const LocalEigenSet eigs = local_eigensolve(sub, m);
  REQUIRE(eigs.n_modes() == m);

  const auto [l, d] = dense_pair(sub);
  // Restrict the oracle to the main cluster (satellites have no degree).
  std::vector<Index> cluster;
  for (Index i = 0; i < sub.n_local(); ++i) {
    if (sub.in_main[i]) cluster.push_back(i);
  }
  const Index nc = static_cast<Index>(cluster.size());
  Eigen::MatrixXd lc(nc, nc);
  Eigen::MatrixXd dc(nc, nc);
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) {
      lc(i, j) = l(cluster[i], cluster[j]);
      dc(i, j) = d(cluster[i], cluster[j]);
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(lc, dc);
  REQUIRE(oracle.info() == Eigen::Success);

  CHECK(eigs.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-10));
  for (Index k = 0; k < m; ++k) {
    CHECK(eigs.eigenvalues[k] ==
          doctest::Approx(oracle.eigenvalues()(k)).epsilon(1e-9));
    CHECK(eigs.eigenvalues[k] >= -1e-12);
    CHECK(eigs.eigenvalues[k] <= 2.0 + 1e-12);
    // Direct residual of the returned pair.
    const double scale = std::sqrt(
        static_cast<double>(sub.main_size));
    CHECK(generalized_residual(sub, eigs.eigenvalues[k], eigs.vectors[k]) <=
          1e-9 * scale);
    // Sign rule: the largest-magnitude entry is positive.
    double best = 0.0;
    for (double v : eigs.vectors[k]) {
      if (std::abs(v) > std::abs(best)) best = v;
    }
    CHECK(best > 0.0);
  }
}

TEST_CASE("iterative path agrees with the dense path") {
  const LocalSubnetwork sub = irregular_patch();
  const Index m = 6;
  const LocalEigenSet dense = local_eigensolve(sub, m);

  EigenSolveOptions opts;
  opts.dense_threshold = 1;  // force the iterative branch
  const LocalEigenSet lanczos = local_eigensolve(sub, m, opts);
  REQUIRE(lanczos.n_modes() == m);
  for (Index k = 0; k < m; ++k) {
    CHECK(lanczos.eigenvalues[k] ==
          doctest::Approx(dense.eigenvalues[k]).epsilon(1e-9));
    CHECK(generalized_residual(sub, lanczos.eigenvalues[k],
                               lanczos.vectors[k]) <=
          1e-8 * std::sqrt(static_cast<double>(sub.main_size)));
  }
  // With a simple spectrum the vectors must agree entry by entry (signs are
  // pinned by the common rule). The last mode is skipped: its gap to the
  // next eigenvalue is unknown here.
  for (Index k = 0; k + 1 < m; ++k) {
    const double gap_lo =
        k == 0 ? 1.0 : dense.eigenvalues[k] - dense.eigenvalues[k - 1];
    const double gap_hi = dense.eigenvalues[k + 1] - dense.eigenvalues[k];
    if (std::min(std::abs(gap_lo), std::abs(gap_hi)) < 1e-6) {
      continue;  // clustered eigenvalues: vectors are not comparable
    }
    for (Index i = 0; i < sub.n_local(); ++i) {
      CHECK(lanczos.vectors[k][i] ==
            doctest::Approx(dense.vectors[k][i]).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("requests beyond the cluster size are clamped") {
  const LocalSubnetwork sub = triangle();
  const LocalEigenSet eigs = local_eigensolve(sub, 10);
  CHECK(eigs.n_modes() == 3);
}

TEST_CASE("satellites get eta 1 and stay out of the eigenproblem") {
  LocalSubnetwork sub;
  sub.patch = 0;
  sub.global_nodes = {0, 1, 2, 3, 4};
  // Component {0,1,2} (a path) and component {3,4}.
  sub.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}};
  main_cluster(sub);
  CHECK(sub.main_size == 3);
  CHECK(sub.eta == std::vector<double>{0, 0, 0, 1, 1});

  const LocalEigenSet eigs = local_eigensolve(sub, 2);
  REQUIRE(eigs.n_modes() == 2);
  // Vectors are zero-extended over the satellites.
  CHECK(eigs.vectors[0][3] == 0.0);
  CHECK(eigs.vectors[0][4] == 0.0);
  CHECK(eigs.vectors[1][3] == 0.0);

  SUBCASE("an edgeless patch has an empty main cluster") {
    LocalSubnetwork bare;
    bare.patch = 1;
    bare.global_nodes = {7, 8};
    main_cluster(bare);
    CHECK(bare.main_size == 0);
    CHECK(bare.eta == std::vector<double>{1, 1});
    CHECK(local_eigensolve(bare, 3).n_modes() == 0);
  }
}

TEST_CASE("patch basis multiplies by the hat and keeps the indicator only "
          "when satellites exist") {
  GeneratorConfig cfg;
  cfg.dims = {9, 9, 1};
  const Network net = generate_network(cfg);
  const CoarseGrid grid = make_coarse_grid(net, {2, 2, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  const auto patches = build_patches(net, grid, assignment);
  const Patch& patch = patches[grid.node_index({1, 1, 0})];

  LocalSubnetwork sub = extract_subnetwork(net, patch);
  main_cluster(sub);
  CHECK(sub.main_size == sub.n_local());  // a full lattice patch is connected

  const LocalEigenSet eigs = local_eigensolve(sub, 3);
  const PatchBasis basis = build_patch_basis(patch, sub, eigs);
  REQUIRE(basis.kinds.size() == 3);  // indicator dropped: eta is all zero
  CHECK(basis.kinds == std::vector<int>{1, 2, 3});
  for (std::size_t r = 0; r < basis.functions.size(); ++r) {
    const int kind = basis.kinds[r];
    for (std::size_t i = 0; i < patch.nodes.size(); ++i) {
      CHECK(basis.functions[r][i] ==
            doctest::Approx(patch.chi[i] * eigs.vectors[kind - 1][i])
                .epsilon(1e-14));
    }
  }
}

TEST_CASE("projection assembly is patch-major and restriction drops "
          "constrained columns") {
  GeneratorConfig cfg;
  cfg.dims = {9, 9, 1};
  Network net = generate_network(cfg);
  label_boundaries(net);
  const CoarseGrid grid = make_coarse_grid(net, {2, 2, 1});
  const CellAssignment assignment = assign_cells(net, grid);

  BasisRequest request;
  request.n_modes = 2;
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, request);

  REQUIRE(!basis.projection.row_meta.empty());
  Index prev_patch = -1;
  int prev_kind = -1;
  for (const RowMeta& meta : basis.projection.row_meta) {
    if (meta.patch == prev_patch) {
      CHECK(meta.kind > prev_kind);
    } else {
      CHECK(meta.patch > prev_patch);
    }
    prev_patch = meta.patch;
    prev_kind = meta.kind;
  }
  CHECK(basis.projection.matrix.cols() == net.n_nodes());

  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  BoundarySpec bc;
  bc.dirichlet = {{"top", 1.0}, {"bottom", 0.0}};
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const ProjectionOperator restricted =
      restrict_projection(basis.projection, reduced);
  CHECK(restricted.matrix.cols() == reduced.n_free());
  CHECK(restricted.matrix.rows() <= basis.projection.matrix.rows());
  // Restricted values coincide with the free columns of the full operator.
  for (Index j = 0; j < reduced.n_free(); ++j) {
    const Index g = reduced.free_to_global[j];
    CHECK(restricted.matrix.coeff(0, j) ==
          basis.projection.matrix.coeff(0, g));
  }
}

TEST_CASE("basis assembly is identical across thread counts") {
  GeneratorConfig cfg;
  cfg.family = Family::structured_irregular;
  cfg.dims = {25, 25, 1};
  cfg.seed = 31;
  const Network net = generate_network(cfg);
  const CoarseGrid grid = make_coarse_grid(net, {3, 3, 1});
  const CellAssignment assignment = assign_cells(net, grid);

  BasisRequest request;
  request.n_modes = 3;
  request.threads = 1;
  const MultiscaleBasis a =
      build_multiscale_basis(net, grid, assignment, request);
  request.threads = 4;
  const MultiscaleBasis b =
      build_multiscale_basis(net, grid, assignment, request);

  REQUIRE(a.projection.matrix.nnz() == b.projection.matrix.nnz());
  CHECK(std::equal(a.projection.matrix.values().begin(),
                   a.projection.matrix.values().end(),
                   b.projection.matrix.values().begin()));
  CHECK(std::equal(a.projection.matrix.col_indices().begin(),
                   a.projection.matrix.col_indices().end(),
                   b.projection.matrix.col_indices().begin()));
}

TEST_CASE("per-patch overrides and the full-basis switch are honored") {
  GeneratorConfig cfg;
  cfg.dims = {7, 7, 1};
  const Network net = generate_network(cfg);
  const CoarseGrid grid = make_coarse_grid(net, {2, 2, 1});
  const CellAssignment assignment = assign_cells(net, grid);

  BasisRequest request;
  request.n_modes = 2;
  request.overrides = {{0, 5}};
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, request);
  Index rows_patch0 = 0;
  for (const RowMeta& meta : basis.projection.row_meta) {
    if (meta.patch == 0) ++rows_patch0;
  }
  CHECK(rows_patch0 == 5);

  BasisRequest full;
  full.full_basis = true;
  const MultiscaleBasis exact =
      build_multiscale_basis(net, grid, assignment, full);
  // Full bases span every cluster: rows count the cluster sizes.
  Index expected = 0;
  const auto patches = build_patches(net, grid, assignment);
  for (const auto& patch : patches) {
    LocalSubnetwork sub = extract_subnetwork(net, patch);
    main_cluster(sub);
    expected += sub.main_size;
  }
  CHECK(exact.projection.matrix.rows() == expected);
}

TEST_CASE("basis save/load round trip is exact and refuses corruption") {
  GeneratorConfig cfg;
  cfg.family = Family::structured_irregular;
  cfg.dims = {20, 20, 1};
  cfg.seed = 4;
  const Network net = generate_network(cfg);
  const CoarseGrid grid = make_coarse_grid(net, {2, 2, 1});
  const CellAssignment assignment = assign_cells(net, grid);
  BasisRequest request;
  request.n_modes = 3;
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, request);

  const fs::path dir = fs::temp_directory_path() / "msnet_basis_rt";
  fs::remove_all(dir);
  save_basis(basis, network_hash(net), dir);
  const LoadedBasis back = load_basis(dir, net.n_nodes());

  CHECK(back.network_hash == network_hash(net));
  CHECK(back.grid.cells == grid.cells);
  REQUIRE(back.projection.matrix.nnz() == basis.projection.matrix.nnz());
  CHECK(std::equal(basis.projection.matrix.values().begin(),
                   basis.projection.matrix.values().end(),
                   back.projection.matrix.values().begin()));
  REQUIRE(back.projection.row_meta.size() == basis.projection.row_meta.size());
  CHECK(back.projection.row_meta[3].patch ==
        basis.projection.row_meta[3].patch);

  SUBCASE("version bump is refused") {
    std::string text = read_file(dir / "basis.json");
    const auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"format_version\": 2");
    write_file(dir / "basis.json", text);
    CHECK_THROWS_AS(load_basis(dir, net.n_nodes()), MsError);
  }
  SUBCASE("truncated triplet file is refused") {
    std::string text = read_file(dir / "R.coo");
    text = text.substr(0, text.size() * 2 / 3);
    write_file(dir / "R.coo", text);
    CHECK_THROWS_AS(load_basis(dir, net.n_nodes()), MsError);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE

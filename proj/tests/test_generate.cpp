// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "msnet/generate.hpp"
#include "msnet/io.hpp"

using namespace msnet;

TEST_SUITE("generate") {

TEST_CASE("regular lattice node and edge counts") {
  SUBCASE("2x2") {
    GeneratorConfig cfg;
    cfg.dims = {2, 2, 1};
    const Network net = generate_network(cfg);
    CHECK(net.n_nodes() == 4);
    CHECK(net.n_edges() == 4);
  }
  SUBCASE("2D 200x200") {
    GeneratorConfig cfg;
    cfg.dims = {200, 200, 1};
    const Network net = generate_network(cfg);
    CHECK(net.n_nodes() == 40000);
    CHECK(net.n_edges() == 2 * 199 * 200);
  }
  SUBCASE("3D 25x25x25") {
    GeneratorConfig cfg;
    cfg.dim = 3;
    cfg.dims = {25, 25, 25};
    const Network net = generate_network(cfg);
    CHECK(net.n_nodes() == 25 * 25 * 25);
    CHECK(net.n_edges() == 3 * 24 * 25 * 25);
  }
}

TEST_CASE("regular lattice geometry: x-fastest ids, spacing box/(n-1)") {
  GeneratorConfig cfg;
  cfg.dims = {3, 4, 1};
  cfg.box = {2.0, 3.0, 1.0};
  const Network net = generate_network(cfg);
  REQUIRE(net.n_nodes() == 12);
  CHECK(net.nodes[0].coords == std::array<double, 3>{0.0, 0.0, 0.0});
  CHECK(net.nodes[1].coords[0] == doctest::Approx(1.0));  // x advances first
  CHECK(net.nodes[1].coords[1] == 0.0);
  CHECK(net.nodes[3].coords[0] == 0.0);  // wraps to the next row
  CHECK(net.nodes[3].coords[1] == doctest::Approx(1.0));
  CHECK(net.nodes[11].coords[0] == doctest::Approx(2.0));
  CHECK(net.nodes[11].coords[1] == doctest::Approx(3.0));
}

TEST_CASE("irregular generation is seed-deterministic and connected") {
  GeneratorConfig cfg;
  cfg.family = Family::structured_irregular;
  cfg.dims = {30, 30, 1};
  cfg.seed = 12345;
  cfg.removal_prob = 0.25;
  const Network a = generate_network(cfg);
  const Network b = generate_network(cfg);
  CHECK(network_hash(a) == network_hash(b));
  CHECK(a.n_nodes() < 900);  // something was removed
  CHECK(a.n_nodes() >= 10);
  validate_network(a, /*require_connected=*/true);

  cfg.seed = 54321;
  const Network c = generate_network(cfg);
  CHECK(network_hash(c) != network_hash(a));
}

TEST_CASE("unstructured generation matches a brute-force kNN oracle") {
  GeneratorConfig cfg;
  cfg.family = Family::unstructured;
  cfg.dim = 2;
  cfg.n_points = 300;
  cfg.knn = 5;
  cfg.seed = 77;
  const Network net = generate_network(cfg);
  validate_network(net, /*require_connected=*/true);

  // The generator keeps the largest component of the symmetrized kNN graph,
  // so every surviving edge must appear in the brute-force kNN digraph of
  // the surviving points, and conversely every brute-force kNN pair whose
  // endpoints both survived must be present.
  const Index n = net.n_nodes();
  std::set<std::pair<Index, Index>> got;
  for (const auto& e : net.edges) {
    got.insert({std::min(e.head, e.tail), std::max(e.head, e.tail)});
  }
  std::set<std::pair<Index, Index>> expected;
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> dist;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = net.nodes[i].coords[0] - net.nodes[j].coords[0];
      const double dy = net.nodes[i].coords[1] - net.nodes[j].coords[1];
      dist.push_back({dx * dx + dy * dy, j});
    }
    std::sort(dist.begin(), dist.end());
    for (int k = 0; k < cfg.knn && k < static_cast<int>(dist.size()); ++k) {
      const Index j = dist[k].second;
      expected.insert({std::min(i, j), std::max(i, j)});
    }
  }
  // Dropped satellite components can remove edges but never add them, and
  // the kNN sets of surviving points may reference dropped points; so check
  // containment both ways over the surviving node set.
  for (const auto& e : got) CHECK(expected.count(e) == 1);
  // When the whole point cloud survived, the sets must be identical.
  if (n == cfg.n_points) CHECK(got == expected);
}

TEST_CASE("nine points with knn 8 form the complete graph") {
  GeneratorConfig cfg;
  cfg.family = Family::unstructured;
  cfg.dim = 2;
  cfg.n_points = 9;
  cfg.knn = 8;
  cfg.seed = 3;
  cfg.min_nodes = 5;
  const Network net = generate_network(cfg);
  CHECK(net.n_nodes() == 9);
  CHECK(net.n_edges() == 36);
}

TEST_CASE("tube-flow coefficients follow the stated formulas") {
  GeneratorConfig cfg;
  cfg.dims = {3, 3, 1};
  Network net = generate_network(cfg);
  PropertyConfig props;
  props.d_min = 2.0;
  props.d_max = 2.0;  // degenerate interval: every diameter is exactly 2
  props.mu = 1.0;
  assign_poiseuille(net, props);

  const double radius = 1.0;
  for (const auto& node : net.nodes) {
    REQUIRE(node.radius.has_value());
    CHECK(*node.radius == doctest::Approx(radius));
    CHECK(node.capacity ==
          doctest::Approx(4.0 / 3.0 * std::numbers::pi * radius * radius *
                          radius));
  }
  for (const auto& e : net.edges) {
    REQUIRE(e.length.has_value());
    CHECK(*e.length == doctest::Approx(0.5));  // lattice spacing
    // w = pi R^4 / (8 mu L) with R = 1, L = 1/2.
    CHECK(e.weight == doctest::Approx(std::numbers::pi / 4.0));
  }
}

TEST_CASE("tube-flow draws are seed-deterministic") {
  GeneratorConfig cfg;
  cfg.dims = {10, 10, 1};
  Network a = generate_network(cfg);
  Network b = generate_network(cfg);
  PropertyConfig props;
  props.seed = 9;
  assign_poiseuille(a, props);
  assign_poiseuille(b, props);
  CHECK(network_hash(a) == network_hash(b));
  props.seed = 10;
  assign_poiseuille(b, props);
  CHECK(network_hash(a) != network_hash(b));
}

TEST_CASE("high-contrast weights produce the exact contrast ratios") {
  GeneratorConfig cfg;
  cfg.dims = {9, 9, 1};
  Network net = generate_network(cfg);
  PropertyConfig props;
  props.boxes.push_back({{0.25, 0.25, 0.0}, {0.75, 0.75, 0.0}, 10.0});
  props.d_out = 1.0;
  assign_high_contrast(net, props);

  double w_min = 1e300;
  double w_max = 0.0;
  std::set<double> distinct;
  for (const auto& e : net.edges) {
    w_min = std::min(w_min, e.weight);
    w_max = std::max(w_max, e.weight);
    distinct.insert(e.weight);
  }
  // Spread between pure inside (d = 10) and pure outside (d = 1): 10^4.
  CHECK(w_max / w_min == doctest::Approx(1e4).epsilon(1e-12));
  // Interface throats use the harmonic mean 2*10*1/11 = 20/11, so the
  // inside/interface ratio is (10 * 11/20)^4 = 5.5^4 = 915.0625.
  REQUIRE(distinct.size() == 3);
  auto it = distinct.begin();
  const double w_out = *it++;
  const double w_iface = *it++;
  const double w_in = *it;
  CHECK(w_in / w_iface == doctest::Approx(915.0625).epsilon(1e-12));
  CHECK(w_iface / w_out ==
        doctest::Approx(std::pow(20.0 / 11.0, 4)).epsilon(1e-12));
  // Node capacities follow the assigned diameters too.
  bool found_inside = false;
  for (const auto& node : net.nodes) {
    if (node.coords[0] > 0.3 && node.coords[0] < 0.7 &&
        node.coords[1] > 0.3 && node.coords[1] < 0.7) {
      CHECK(node.capacity ==
            doctest::Approx(4.0 / 3.0 * std::numbers::pi * 125.0));
      found_inside = true;
    }
  }
  CHECK(found_inside);
}

TEST_CASE("raster coefficients sample the containing cell") {
  GeneratorConfig cfg;
  cfg.dims = {3, 3, 1};
  Network net = generate_network(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "msnet_raster";
  std::filesystem::create_directories(dir);
  const auto file = dir / "field.txt";
  // 2x2 raster over the unit box: capacities 1,2,3,4 then weight scales
  // 10,20,30,40 (first axis fastest: cell (0,0),(1,0),(0,1),(1,1)).
  write_file(file,
             "2 2 2\n1 1\n1\n2\n3\n4\n10\n20\n30\n40\n");
  load_coefficient_field(net, file);

  // Node (0,0) sits in cell (0,0): capacity 1. Node (1,0) at x=0.5 falls in
  // the second cell (half-open split): capacity 2. Node (0,1): capacity 3.
  CHECK(net.nodes[0].capacity == 1.0);
  CHECK(net.nodes[1].capacity == 2.0);
  CHECK(net.nodes[2].capacity == 2.0);
  CHECK(net.nodes[3].capacity == 3.0);
  CHECK(net.nodes[6].capacity == 3.0);
  CHECK(net.nodes[8].capacity == 4.0);

  // Horizontal edge 0-1: endpoint scales 10 and 20, harmonic mean 40/3;
  // length = 0.5 and no edge radius, so area = 1 and w = (40/3)/0.5.
  const auto& e01 = net.edges[0];
  REQUIRE(e01.head == 0);
  REQUIRE(e01.tail == 1);
  CHECK(e01.weight ==
        doctest::Approx((2.0 * 10.0 * 20.0 / 30.0) / 0.5).epsilon(1e-14));

  SUBCASE("truncated raster is an error naming the line") {
    write_file(file, "2 2 2\n1 1\n1\n2\n3\n");
    try {
      load_coefficient_field(net, file);
      FAIL("expected a raster error");
    } catch (const MsError& e) {
      CHECK(std::string(e.what()).find("field.txt") != std::string::npos);
    }
  }
  SUBCASE("points outside the raster box are an error") {
    write_file(file, "2 2 2\n0.5 0.5\n1\n2\n3\n4\n10\n20\n30\n40\n");
    CHECK_THROWS_AS(load_coefficient_field(net, file), MsError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("boundary labels land on the right faces") {
  SUBCASE("2D: left/right on x, bottom/top on y") {
    GeneratorConfig cfg;
    cfg.dims = {5, 5, 1};
    Network net = generate_network(cfg);
    label_boundaries(net);
    for (const auto& node : net.nodes) {
      CHECK(node.has_label("left") == (node.coords[0] == 0.0));
      CHECK(node.has_label("right") == (node.coords[0] == 1.0));
      CHECK(node.has_label("bottom") == (node.coords[1] == 0.0));
      CHECK(node.has_label("top") == (node.coords[1] == 1.0));
    }
  }
  SUBCASE("3D: front/back on y, bottom/top on z") {
    GeneratorConfig cfg;
    cfg.dim = 3;
    cfg.dims = {3, 3, 3};
    Network net = generate_network(cfg);
    label_boundaries(net);
    for (const auto& node : net.nodes) {
      CHECK(node.has_label("front") == (node.coords[1] == 0.0));
      CHECK(node.has_label("back") == (node.coords[1] == 1.0));
      CHECK(node.has_label("bottom") == (node.coords[2] == 0.0));
      CHECK(node.has_label("top") == (node.coords[2] == 1.0));
    }
  }
}

TEST_CASE("generation knows its limits") {
  GeneratorConfig cfg;
  cfg.dims = {1, 5, 1};  // an axis with fewer than 2 nodes
  CHECK_THROWS_AS(generate_network(cfg), MsError);

  GeneratorConfig tiny;
  tiny.family = Family::structured_irregular;
  tiny.dims = {4, 4, 1};
  tiny.removal_prob = 0.95;
  tiny.seed = 1;
  tiny.min_nodes = 10;
  CHECK_THROWS_AS(generate_network(tiny), MsError);
}

}  // TEST_SUITE

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/msbasis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "msnet/components.hpp"
#include "msnet/io.hpp"

namespace msnet {

namespace {

constexpr int kBasisFormatVersion = 1;

}  // namespace

LocalSubnetwork extract_subnetwork(const Network& net, const Patch& patch) {
  LocalSubnetwork sub;
  sub.patch = patch.coarse_node;
  sub.global_nodes = patch.nodes;
  auto local_of = [&](Index global) -> Index {
    auto it = std::lower_bound(sub.global_nodes.begin(),
                               sub.global_nodes.end(), global);
    if (it == sub.global_nodes.end() || *it != global) return -1;
    return static_cast<Index>(it - sub.global_nodes.begin());
  };
  for (const auto& e : net.edges) {
    const Index a = local_of(e.head);
    if (a < 0) continue;
    const Index b = local_of(e.tail);
    if (b < 0) continue;
    sub.edges.push_back({a, b, e.weight});
  }
  return sub;
}

void main_cluster(LocalSubnetwork& sub) {
  const Index n = sub.n_local();
  sub.in_main.assign(static_cast<std::size_t>(n), 0);
  sub.eta.assign(static_cast<std::size_t>(n), 1.0);
  sub.main_size = 0;
  if (sub.edges.empty()) return;  // all nodes are satellites
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(sub.edges.size());
  for (const auto& e : sub.edges) pairs.emplace_back(e.a, e.b);
  const auto comps = connected_components(n, pairs);
  for (Index i = 0; i < n; ++i) {
    if (comps.component_of[i] == comps.largest) {
      sub.in_main[i] = 1;
      sub.eta[i] = 0.0;
      ++sub.main_size;
    }
  }
}

PatchBasis build_patch_basis(const Patch& patch, const LocalSubnetwork& sub,
                             const LocalEigenSet& eigs) {
  PatchBasis basis;
  basis.patch = patch.coarse_node;
  basis.cluster_size = sub.main_size;
  basis.m_used = eigs.n_modes();
  basis.nodes = patch.nodes;
  const std::size_t n = patch.nodes.size();
  if (patch.chi.size() != n || static_cast<std::size_t>(sub.n_local()) != n)
    throw MsError("patch basis: inconsistent patch/subnetwork sizes");

  auto add_function = [&](int kind, const std::vector<double>& values) {
    std::vector<double> scaled(n);
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = patch.chi[i] * values[i];
      nonzero = nonzero || scaled[i] != 0.0;
    }
    if (!nonzero) return;
    basis.kinds.push_back(kind);
    basis.functions.push_back(std::move(scaled));
  };

  add_function(0, sub.eta);
  for (Index r = 0; r < eigs.n_modes(); ++r)
    add_function(static_cast<int>(r) + 1, eigs.vectors[r]);
  return basis;
}

ProjectionOperator assemble_projection(std::span<const PatchBasis> bases,
                                       Index n_nodes) {
  ProjectionOperator proj;
  std::vector<Index> offsets = {0};
  std::vector<Index> cols;
  std::vector<double> vals;
  // Patch-major stacking: the input order (ascending patch) is the row order.
  for (const auto& basis : bases) {
    for (std::size_t f = 0; f < basis.functions.size(); ++f) {
      const auto& values = basis.functions[f];
      // Patch nodes are sorted, so columns arrive ascending. Exact zeros
      // (hat boundary, off-cluster eigenvector entries) are not stored.
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0.0) continue;
        cols.push_back(basis.nodes[i]);
        vals.push_back(values[i]);
      }
      offsets.push_back(static_cast<Index>(cols.size()));
      proj.row_meta.push_back({basis.patch, basis.kinds[f]});
    }
  }
  if (proj.row_meta.empty())
    throw MsError("projection has no rows; basis is empty");
  proj.matrix = SparseOperator(static_cast<Index>(proj.row_meta.size()),
                               n_nodes, std::move(offsets), std::move(cols),
                               std::move(vals));
  return proj;
}

ProjectionOperator restrict_projection(const ProjectionOperator& proj,
                                       const ReducedSystem& reduced) {
  ProjectionOperator out;
  const auto offs = proj.matrix.row_offsets();
  const auto cols = proj.matrix.col_indices();
  const auto vals = proj.matrix.values();
  std::vector<Index> new_offsets = {0};
  std::vector<Index> new_cols;
  std::vector<double> new_vals;
  Index dropped = 0;
  for (Index r = 0; r < proj.matrix.rows(); ++r) {
    const std::size_t before = new_cols.size();
    for (Index k = offs[r]; k < offs[r + 1]; ++k) {
      const Index free_col = reduced.global_to_free[cols[k]];
      if (free_col < 0) continue;
      new_cols.push_back(free_col);
      new_vals.push_back(vals[k]);
    }
    if (new_cols.size() == before) {
      ++dropped;
      continue;
    }
    new_offsets.push_back(static_cast<Index>(new_cols.size()));
    out.row_meta.push_back(proj.row_meta[r]);
  }
  if (dropped > 0)
    warn(fmt::format("{} basis rows lost all free-node support and were dropped",
                     dropped));
  if (out.row_meta.empty())
    throw MsError("projection restriction removed every row");
  out.matrix = SparseOperator(static_cast<Index>(out.row_meta.size()),
                              reduced.n_free(), std::move(new_offsets),
                              std::move(new_cols), std::move(new_vals));
  return out;
}

MultiscaleBasis build_multiscale_basis(const Network& net,
                                       const CoarseGrid& grid,
                                       const CellAssignment& assignment,
                                       const BasisRequest& request) {
  if (request.n_modes < 1 && !request.full_basis)
    throw MsError("basis request needs at least one mode per patch");
  const auto patches = build_patches(net, grid, assignment);
  std::vector<Index> modes(patches.size(), request.n_modes);
  for (const auto& [patch, m] : request.overrides) {
    if (patch < 0 || patch >= static_cast<Index>(patches.size()))
      throw MsError(fmt::format("mode override for unknown patch {}", patch));
    if (m < 0)
      throw MsError(fmt::format("negative mode count for patch {}", patch));
    modes[patch] = m;
  }

  MultiscaleBasis result;
  result.grid = grid;
  result.patch_bases.resize(patches.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t p = next.fetch_add(1);
      if (p >= patches.size() || failed.load()) break;
      try {
        const Patch& patch = patches[p];
        LocalSubnetwork sub = extract_subnetwork(net, patch);
        main_cluster(sub);
        LocalEigenSet eigs;
        if (sub.main_size > 0) {
          const Index want =
              request.full_basis ? sub.main_size : std::min(modes[p], sub.main_size);
          if (want > 0) eigs = local_eigensolve(sub, want, request.eigen);
        } else if (!patch.empty()) {
          info(fmt::format("patch {} has no interior edges; indicator basis only",
                           patch.coarse_node));
        }
        result.patch_bases[p] = build_patch_basis(patch, sub, eigs);
      } catch (const std::exception& e) {
        std::scoped_lock lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };
  const Index n_threads = std::max<Index>(1, request.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw MsError(first_error);

  // Sequential merge; the row order depends only on patch order.
  result.projection = assemble_projection(result.patch_bases, net.n_nodes());
  return result;
}

void save_basis(const MultiscaleBasis& basis, const std::string& net_hash,
                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json header;
  header["format_version"] = kBasisFormatVersion;
  header["network_hash"] = net_hash;
  header["grid"] = {
      {"dim", basis.grid.dim},
      {"cells", basis.grid.dim == 3
                    ? nlohmann::json::array({basis.grid.cells[0],
                                             basis.grid.cells[1],
                                             basis.grid.cells[2]})
                    : nlohmann::json::array({basis.grid.cells[0],
                                             basis.grid.cells[1]})},
      {"box", basis.grid.dim == 3
                  ? nlohmann::json::array({basis.grid.box[0], basis.grid.box[1],
                                           basis.grid.box[2]})
                  : nlohmann::json::array({basis.grid.box[0], basis.grid.box[1]})},
  };
  header["rows"] = basis.projection.matrix.rows();
  header["cols"] = basis.projection.matrix.cols();
  header["nnz"] = basis.projection.matrix.nnz();
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& pb : basis.patch_bases) {
    patches.push_back({{"patch", pb.patch},
                       {"cluster_size", pb.cluster_size},
                       {"m_used", pb.m_used},
                       {"n_rows", pb.kinds.size()}});
  }
  header["patches"] = std::move(patches);
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& rm : basis.projection.row_meta)
    meta.push_back(nlohmann::json::array({rm.patch, rm.kind}));
  header["row_meta"] = std::move(meta);
  write_file(dir / "basis.json", header.dump(2) + "\n");

  std::string coo;
  const auto offs = basis.projection.matrix.row_offsets();
  const auto cols = basis.projection.matrix.col_indices();
  const auto vals = basis.projection.matrix.values();
  for (Index r = 0; r < basis.projection.matrix.rows(); ++r)
    for (Index k = offs[r]; k < offs[r + 1]; ++k)
      coo += fmt::format("{} {} {}\n", r, cols[k], format_real(vals[k]));
  write_file(dir / "R.coo", coo);
}

LoadedBasis load_basis(const std::filesystem::path& dir, Index n_nodes) {
  LoadedBasis out;
  const auto header_path = dir / "basis.json";
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_file(header_path));
  } catch (const nlohmann::json::exception& e) {
    throw MsError(fmt::format("{}: {}", header_path.string(), e.what()));
  }
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kBasisFormatVersion)
      throw MsError(fmt::format("{}: format version {} is not supported (expected {})",
                                header_path.string(), version,
                                kBasisFormatVersion));
    out.network_hash = header.at("network_hash").get<std::string>();
    const auto& grid = header.at("grid");
    out.grid.dim = grid.at("dim").get<int>();
    const auto& cells = grid.at("cells");
    const auto& box = grid.at("box");
    if (static_cast<int>(cells.size()) != out.grid.dim ||
        static_cast<int>(box.size()) != out.grid.dim)
      throw MsError(fmt::format("{}: grid arrays do not match dim",
                                header_path.string()));
    for (int k = 0; k < out.grid.dim; ++k) {
      out.grid.cells[k] = cells[k].get<Index>();
      out.grid.box[k] = box[k].get<double>();
      out.grid.H[k] = out.grid.box[k] / static_cast<double>(out.grid.cells[k]);
    }
    if (out.grid.dim == 2) out.grid.cells[2] = 1;

    const Index rows = header.at("rows").get<Index>();
    const Index cols_declared = header.at("cols").get<Index>();
    const Index nnz = header.at("nnz").get<Index>();
    if (cols_declared != n_nodes)
      throw MsError(fmt::format("{}: basis built for {} nodes, network has {}",
                                header_path.string(), cols_declared, n_nodes));
    const auto& meta = header.at("row_meta");
    if (static_cast<Index>(meta.size()) != rows)
      throw MsError(fmt::format("{}: row_meta has {} entries for {} rows",
                                header_path.string(), meta.size(), rows));
    for (const auto& rm : meta)
      out.projection.row_meta.push_back(
          {rm.at(0).get<Index>(), rm.at(1).get<int>()});

    const auto coo_path = dir / "R.coo";
    const std::string text = read_file(coo_path);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(nnz));
    std::size_t start = 0;
    std::size_t ln = 0;
    Index prev_row = -1;
    Index prev_col = -1;
    while (start < text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string::npos) nl = text.size();
      std::string_view line(text.data() + start, nl - start);
      start = nl + 1;
      ++ln;
      if (line.empty()) continue;
      const auto ctx = fmt::format("{}:{}", coo_path.string(), ln);
      const std::size_t s1 = line.find(' ');
      const std::size_t s2 = line.find(' ', s1 + 1);
      if (s1 == std::string_view::npos || s2 == std::string_view::npos)
        throw MsError(fmt::format("{}: expected 'row col value'", ctx));
      Triplet t;
      t.row = parse_index(line.substr(0, s1), ctx);
      t.col = parse_index(line.substr(s1 + 1, s2 - s1 - 1), ctx);
      t.value = parse_real(line.substr(s2 + 1), ctx);
      if (t.row < prev_row || (t.row == prev_row && t.col <= prev_col))
        throw MsError(fmt::format("{}: triplets not sorted by (row, col)", ctx));
      prev_row = t.row;
      prev_col = t.col;
      trips.push_back(t);
    }
    if (static_cast<Index>(trips.size()) != nnz)
      throw MsError(fmt::format("{}: header declares {} entries, file has {} (truncated?)",
                                coo_path.string(), nnz, trips.size()));
    out.projection.matrix = SparseOperator::from_triplets(rows, n_nodes, trips);
  } catch (const nlohmann::json::exception& e) {
    throw MsError(fmt::format("{}: {}", header_path.string(), e.what()));
  }
  return out;
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "msnet/assembly.hpp"
#include "msnet/coarse.hpp"
#include "msnet/sparse.hpp"

namespace msnet {

/// Patch-local view of the network: member nodes, interior edges in local
/// numbering, the main (largest) connected cluster, and the off-cluster
/// indicator eta (0 on the cluster, 1 elsewhere).
struct LocalSubnetwork {
  Index patch = -1;
  std::vector<Index> global_nodes;  ///< = Patch::nodes
  std::vector<WeightedEdge> edges;  ///< local endpoint indices
  std::vector<char> in_main;        ///< per local node
  std::vector<double> eta;
  Index main_size = 0;

  Index n_local() const { return static_cast<Index>(global_nodes.size()); }
};

/// Collects the edges of `net` with both endpoints in the patch. The main
/// cluster is left unset; call main_cluster next.
LocalSubnetwork extract_subnetwork(const Network& net, const Patch& patch);

/// Fills in_main/eta/main_size. A subnetwork without edges has an empty
/// main cluster and eta identically 1 (every node is off-cluster).
void main_cluster(LocalSubnetwork& sub);

/// Options for the patch eigenproblem L^w phi = lambda D^w phi on the main
/// cluster, solved through the D^{-1/2} similarity transform.
struct EigenSolveOptions {
  /// Clusters up to this size use the dense symmetric solver; larger ones
  /// use shift-invert Lanczos on the normalized operator.
  Index dense_threshold = 4000;
  double lanczos_tol = 1e-10;
  Index lanczos_max_restarts = 200;
  std::uint64_t lanczos_seed = 0x6d736e6574ull;
};

/// Eigenpairs of the patch problem, ascending; vectors are D-orthonormal and
/// extended by zero to the full local numbering.
struct LocalEigenSet {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> vectors;
  Index n_modes() const { return static_cast<Index>(eigenvalues.size()); }
};

/// Computes the n_modes smallest eigenpairs on the main cluster. Requests
/// beyond the cluster size are clamped with a warning. An empty cluster
/// yields an empty set. Eigenvector signs are fixed: the largest-magnitude
/// entry (lowest index on ties) is positive.
LocalEigenSet local_eigensolve(const LocalSubnetwork& sub, Index n_modes,
                               const EigenSolveOptions& options = {});

/// The basis functions of one patch: values over the listed global nodes.
/// kind 0 is the off-cluster indicator function chi*eta; kind r >= 1 is
/// chi*phi_r.
struct PatchBasis {
  Index patch = -1;
  Index cluster_size = 0;
  Index m_used = 0;
  std::vector<Index> nodes;  ///< sorted global ids (copy of Patch::nodes)
  std::vector<int> kinds;
  std::vector<std::vector<double>> functions;
};

/// Multiplies eta and the eigenvectors by the partition-of-unity hat.
/// Functions that vanish identically (eta on fully connected patches, or
/// hats with no interior support) are omitted.
PatchBasis build_patch_basis(const Patch& patch, const LocalSubnetwork& sub,
                             const LocalEigenSet& eigs);

/// Row provenance of the stacked projection operator.
struct RowMeta {
  Index patch = -1;
  int kind = 0;
};

/// Stacked multiscale projection. Rows are patch-major (ascending patch,
/// indicator first, then eigen kinds ascending); columns are global fine
/// nodes until restrict_projection narrows them to free nodes.
struct ProjectionOperator {
  SparseOperator matrix;
  std::vector<RowMeta> row_meta;
};

ProjectionOperator assemble_projection(std::span<const PatchBasis> bases,
                                       Index n_nodes);

/// Drops constrained columns; rows that become identically zero are removed
/// with a warning. Throws when nothing remains.
ProjectionOperator restrict_projection(const ProjectionOperator& proj,
                                       const ReducedSystem& reduced);

/// Per-patch mode request: uniform M with optional per-patch overrides.
struct BasisRequest {
  Index n_modes = 4;
  /// pairs (patch id, modes); overrides the uniform count.
  std::vector<std::pair<Index, Index>> overrides;
  /// Use every cluster eigenvector (exact-recovery configuration).
  bool full_basis = false;
  EigenSolveOptions eigen;
  Index threads = 1;
};

/// Result of the offline stage over all patches.
struct MultiscaleBasis {
  CoarseGrid grid;
  std::vector<PatchBasis> patch_bases;
  ProjectionOperator projection;  ///< global columns
};

/// Runs extract -> cluster -> eigensolve -> chi-multiply over all patches
/// (deterministically parallel over patches) and stacks the projection.
MultiscaleBasis build_multiscale_basis(const Network& net,
                                       const CoarseGrid& grid,
                                       const CellAssignment& assignment,
                                       const BasisRequest& request);

/// Writes basis.json (header, per-patch counts, row metadata, format
/// version, network hash) and R.coo ("row col value" triplets sorted by
/// row then column) into a directory.
void save_basis(const MultiscaleBasis& basis, const std::string& net_hash,
                const std::filesystem::path& dir);

/// Loaded basis plus the stored network hash for compatibility checks.
struct LoadedBasis {
  CoarseGrid grid;
  ProjectionOperator projection;
  std::string network_hash;
};

/// Rejects version mismatches, truncated files, and inconsistent counts,
/// reporting file and line. n_nodes fixes the column dimension.
LoadedBasis load_basis(const std::filesystem::path& dir, Index n_nodes);

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "msnet/common.hpp"

namespace msnet {

/// One matrix entry used for assembly.
struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/**
 * @brief Sparse matrix in compressed sparse row form.
 *
 * Invariants: column indices are sorted and unique within each row, and all
 * operations are bitwise deterministic (fixed traversal and accumulation
 * order, no hashing, no parallel reductions).
 *
 * apply() accumulates off-diagonal products in storage order and adds the
 * diagonal contribution last. Assemblers that define the diagonal as the
 * negated in-order sum of the off-diagonal row entries therefore get exact
 * cancellation on constant vectors.
 */
class SparseOperator {
public:
  SparseOperator() = default;

  /// Takes ownership of ready-made CSR arrays. Offsets must have size
  /// rows+1; columns sorted and unique per row.
  SparseOperator(Index rows, Index cols, std::vector<Index> row_offsets,
                 std::vector<Index> col_indices, std::vector<double> values);

  /// Builds from triplets. Duplicate (row, col) entries are summed in input
  /// order. Entries with value 0 are kept (pattern may matter to callers).
  static SparseOperator from_triplets(Index rows, Index cols,
                                      std::span<const Triplet> entries);

  /// Diagonal matrix with the given entries.
  static SparseOperator diagonal(std::span<const double> entries);

  /// n-by-n identity.
  static SparseOperator identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_offsets() const { return row_offsets_; }
  std::span<const Index> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  /// Entry lookup by binary search; absent entries read as 0.
  double coeff(Index row, Index col) const;

  /// Copies the matrix diagonal (absent entries read as 0).
  std::vector<double> diagonal_values() const;

  /// y = A x. Requires x.size() == cols(), y.size() == rows().
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  /// y = A^T x, deterministic scatter in row-major storage order.
  std::vector<double> apply_transpose(std::span<const double> x) const;

  /// u^T A u for square A (u.size() == rows() == cols()).
  double quadratic_form(std::span<const double> u) const;

  SparseOperator transpose() const;

  /// this * rhs with deterministic row-merge accumulation.
  SparseOperator multiply(const SparseOperator& rhs) const;

  /// this * rhs^T via sorted sparse row dot products.
  SparseOperator multiply_transposed(const SparseOperator& rhs) const;

  /// alpha*A + beta*B with pattern union; A, B must share dimensions.
  static SparseOperator add(double alpha, const SparseOperator& a,
                            double beta, const SparseOperator& b);

  /// Returns a copy with column j scaled by d[j].
  SparseOperator scale_columns(std::span<const double> d) const;

  /// Square submatrix on the kept (sorted, unique) index set.
  SparseOperator principal_submatrix(std::span<const Index> keep) const;

  /// Copies each strictly-upper entry onto its transposed position, making
  /// the matrix exactly symmetric. Requires a structurally symmetric
  /// pattern; throws otherwise. Square matrices only.
  void mirror_upper();

  /// max |A_ij - A_ji| over the stored pattern (0 for symmetric matrices).
  double symmetry_gap() const;

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_ = {0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/sparse.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msnet {

namespace {

void check_dims(Index rows, Index cols) {
  if (rows < 0 || cols < 0) throw MsError("negative matrix dimension");
}

}  // namespace

SparseOperator::SparseOperator(Index rows, Index cols,
                               std::vector<Index> row_offsets,
                               std::vector<Index> col_indices,
                               std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  check_dims(rows, cols);
  if (static_cast<Index>(row_offsets_.size()) != rows_ + 1)
    throw MsError("row offset array size mismatch");
  if (col_indices_.size() != values_.size())
    throw MsError("column/value array size mismatch");
  if (row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<Index>(values_.size()))
    throw MsError("row offsets do not span the value array");
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] < 0 || col_indices_[k] >= cols_)
        throw MsError("column index out of range");
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw MsError("column indices not sorted unique within a row");
    }
  }
}

SparseOperator SparseOperator::from_triplets(Index rows, Index cols,
                                             std::span<const Triplet> entries) {
  check_dims(rows, cols);
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw MsError(fmt::format("triplet ({}, {}) out of range for {}x{}",
                                t.row, t.col, rows, cols));
  }
  // Counting sort by row keeps the input order within each row, so duplicate
  // entries are summed deterministically.
  std::vector<Index> counts(static_cast<std::size_t>(rows) + 1, 0);
  for (const auto& t : entries) ++counts[static_cast<std::size_t>(t.row) + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<Index> by_row(entries.size());
  {
    std::vector<Index> cursor(counts.begin(), counts.end() - 1);
    for (Index k = 0; k < static_cast<Index>(entries.size()); ++k)
      by_row[static_cast<std::size_t>(cursor[entries[k].row]++)] = k;
  }

  std::vector<Index> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals_out;
  cols_out.reserve(entries.size());
  vals_out.reserve(entries.size());
  std::vector<Index> row_entries;
  for (Index i = 0; i < rows; ++i) {
    row_entries.assign(by_row.begin() + counts[i], by_row.begin() + counts[i + 1]);
    std::stable_sort(row_entries.begin(), row_entries.end(),
                     [&](Index a, Index b) {
                       return entries[a].col < entries[b].col;
                     });
    for (std::size_t k = 0; k < row_entries.size(); ++k) {
      const auto& t = entries[row_entries[k]];
      if (!cols_out.empty() &&
          static_cast<Index>(cols_out.size()) > offsets[i] &&
          cols_out.back() == t.col) {
        vals_out.back() += t.value;
      } else {
        cols_out.push_back(t.col);
        vals_out.push_back(t.value);
      }
    }
    offsets[i + 1] = static_cast<Index>(cols_out.size());
  }
  return SparseOperator(rows, cols, std::move(offsets), std::move(cols_out),
                        std::move(vals_out));
}

SparseOperator SparseOperator::diagonal(std::span<const double> entries) {
  const Index n = static_cast<Index>(entries.size());
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1);
  std::vector<Index> cols(entries.size());
  std::iota(offsets.begin(), offsets.end(), Index{0});
  std::iota(cols.begin(), cols.end(), Index{0});
  return SparseOperator(n, n, std::move(offsets), std::move(cols),
                        std::vector<double>(entries.begin(), entries.end()));
}

SparseOperator SparseOperator::identity(Index n) {
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return diagonal(ones);
}

double SparseOperator::coeff(Index row, Index col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
    throw MsError("coeff index out of range");
  auto first = col_indices_.begin() + row_offsets_[row];
  auto last = col_indices_.begin() + row_offsets_[row + 1];
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> SparseOperator::diagonal_values() const {
  const Index n = std::min(rows_, cols_);
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (Index i = 0; i < n; ++i) diag[i] = coeff(i, i);
  return diag;
}

void SparseOperator::apply(std::span<const double> x,
                           std::span<double> y) const {
  if (static_cast<Index>(x.size()) != cols_ ||
      static_cast<Index>(y.size()) != rows_)
    throw MsError("apply: vector size mismatch");
  for (Index i = 0; i < rows_; ++i) {
    double acc = 0.0;
    double diag = 0.0;
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = col_indices_[k];
      if (j == i)
        diag = values_[k];
      else
        acc += values_[k] * x[j];
    }
    y[i] = acc + diag * x[i];
  }
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
  apply(x, y);
  return y;
}

std::vector<double> SparseOperator::apply_transpose(
    std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != rows_)
    throw MsError("apply_transpose: vector size mismatch");
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (Index i = 0; i < rows_; ++i) {
    const double xi = x[i];
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      y[col_indices_[k]] += values_[k] * xi;
  }
  return y;
}

double SparseOperator::quadratic_form(std::span<const double> u) const {
  if (rows_ != cols_) throw MsError("quadratic_form requires a square matrix");
  std::vector<double> y = apply(u);
  double acc = 0.0;
  for (Index i = 0; i < rows_; ++i) acc += u[i] * y[i];
  return acc;
}

SparseOperator SparseOperator::transpose() const {
  std::vector<Index> offsets(static_cast<std::size_t>(cols_) + 1, 0);
  for (Index c : col_indices_) ++offsets[static_cast<std::size_t>(c) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(col_indices_.size());
  std::vector<double> vals(values_.size());
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index pos = cursor[col_indices_[k]]++;
      cols[pos] = i;
      vals[pos] = values_[k];
    }
  }
  // Row-major traversal emits ascending row indices per output row already.
  return SparseOperator(cols_, rows_, std::move(offsets), std::move(cols),
                        std::move(vals));
}

SparseOperator SparseOperator::multiply(const SparseOperator& rhs) const {
  if (cols_ != rhs.rows_) throw MsError("multiply: inner dimension mismatch");
  std::vector<Index> offsets(static_cast<std::size_t>(rows_) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals_out;
  std::vector<double> accum(static_cast<std::size_t>(rhs.cols_), 0.0);
  std::vector<Index> mark(static_cast<std::size_t>(rhs.cols_), -1);
  std::vector<Index> touched;
  for (Index i = 0; i < rows_; ++i) {
    touched.clear();
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = col_indices_[k];
      const double v = values_[k];
      for (Index l = rhs.row_offsets_[j]; l < rhs.row_offsets_[j + 1]; ++l) {
        const Index c = rhs.col_indices_[l];
        if (mark[c] != i) {
          mark[c] = i;
          accum[c] = 0.0;
          touched.push_back(c);
        }
        accum[c] += v * rhs.values_[l];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index c : touched) {
      cols_out.push_back(c);
      vals_out.push_back(accum[c]);
    }
    offsets[i + 1] = static_cast<Index>(cols_out.size());
  }
  return SparseOperator(rows_, rhs.cols_, std::move(offsets),
                        std::move(cols_out), std::move(vals_out));
}

SparseOperator SparseOperator::multiply_transposed(
    const SparseOperator& rhs) const {
  if (cols_ != rhs.cols_)
    throw MsError("multiply_transposed: dimension mismatch");
  // Column-to-rows map of rhs gives the candidate output columns per row.
  std::vector<Index> col_offsets(static_cast<std::size_t>(rhs.cols_) + 1, 0);
  for (Index c : rhs.col_indices_)
    ++col_offsets[static_cast<std::size_t>(c) + 1];
  std::partial_sum(col_offsets.begin(), col_offsets.end(), col_offsets.begin());
  std::vector<Index> col_rows(rhs.col_indices_.size());
  {
    std::vector<Index> cursor(col_offsets.begin(), col_offsets.end() - 1);
    for (Index r = 0; r < rhs.rows_; ++r)
      for (Index k = rhs.row_offsets_[r]; k < rhs.row_offsets_[r + 1]; ++k)
        col_rows[static_cast<std::size_t>(cursor[rhs.col_indices_[k]]++)] = r;
  }

  std::vector<Index> offsets(static_cast<std::size_t>(rows_) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals_out;
  std::vector<Index> candidates;
  for (Index i = 0; i < rows_; ++i) {
    candidates.clear();
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index c = col_indices_[k];
      candidates.insert(candidates.end(),
                        col_rows.begin() + col_offsets[c],
                        col_rows.begin() + col_offsets[c + 1]);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
    for (Index j : candidates) {
      // Sorted two-pointer dot product of row i of *this and row j of rhs.
      double dot = 0.0;
      Index ka = row_offsets_[i];
      Index kb = rhs.row_offsets_[j];
      const Index ea = row_offsets_[i + 1];
      const Index eb = rhs.row_offsets_[j + 1];
      while (ka < ea && kb < eb) {
        const Index ca = col_indices_[ka];
        const Index cb = rhs.col_indices_[kb];
        if (ca == cb) {
          dot += values_[ka] * rhs.values_[kb];
          ++ka;
          ++kb;
        } else if (ca < cb) {
          ++ka;
        } else {
          ++kb;
        }
      }
      cols_out.push_back(j);
      vals_out.push_back(dot);
    }
    offsets[i + 1] = static_cast<Index>(cols_out.size());
  }
  return SparseOperator(rows_, rhs.rows_, std::move(offsets),
                        std::move(cols_out), std::move(vals_out));
}

SparseOperator SparseOperator::add(double alpha, const SparseOperator& a,
                                   double beta, const SparseOperator& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
    throw MsError("add: dimension mismatch");
  std::vector<Index> offsets(static_cast<std::size_t>(a.rows_) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals_out;
  for (Index i = 0; i < a.rows_; ++i) {
    Index ka = a.row_offsets_[i];
    Index kb = b.row_offsets_[i];
    const Index ea = a.row_offsets_[i + 1];
    const Index eb = b.row_offsets_[i + 1];
    while (ka < ea || kb < eb) {
      const Index ca = ka < ea ? a.col_indices_[ka] : a.cols_;
      const Index cb = kb < eb ? b.col_indices_[kb] : a.cols_;
      if (ca == cb) {
        cols_out.push_back(ca);
        vals_out.push_back(alpha * a.values_[ka] + beta * b.values_[kb]);
        ++ka;
        ++kb;
      } else if (ca < cb) {
        cols_out.push_back(ca);
        vals_out.push_back(alpha * a.values_[ka]);
        ++ka;
      } else {
        cols_out.push_back(cb);
        vals_out.push_back(beta * b.values_[kb]);
        ++kb;
      }
    }
    offsets[i + 1] = static_cast<Index>(cols_out.size());
  }
  return SparseOperator(a.rows_, a.cols_, std::move(offsets),
                        std::move(cols_out), std::move(vals_out));
}

SparseOperator SparseOperator::scale_columns(std::span<const double> d) const {
  if (static_cast<Index>(d.size()) != cols_)
    throw MsError("scale_columns: size mismatch");
  SparseOperator out = *this;
  for (std::size_t k = 0; k < out.values_.size(); ++k)
    out.values_[k] *= d[out.col_indices_[k]];
  return out;
}

SparseOperator SparseOperator::principal_submatrix(
    std::span<const Index> keep) const {
  if (rows_ != cols_)
    throw MsError("principal_submatrix requires a square matrix");
  std::vector<Index> to_new(static_cast<std::size_t>(rows_), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Index g = keep[k];
    if (g < 0 || g >= rows_) throw MsError("principal_submatrix: bad index");
    if (k > 0 && keep[k] <= keep[k - 1])
      throw MsError("principal_submatrix: indices must be sorted unique");
    to_new[g] = static_cast<Index>(k);
  }
  const Index n = static_cast<Index>(keep.size());
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals_out;
  for (Index r = 0; r < n; ++r) {
    const Index i = keep[r];
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = to_new[col_indices_[k]];
      if (j >= 0) {
        cols_out.push_back(j);
        vals_out.push_back(values_[k]);
      }
    }
    offsets[r + 1] = static_cast<Index>(cols_out.size());
  }
  return SparseOperator(n, n, std::move(offsets), std::move(cols_out),
                        std::move(vals_out));
}

void SparseOperator::mirror_upper() {
  if (rows_ != cols_) throw MsError("mirror_upper requires a square matrix");
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = col_indices_[k];
      if (j <= i) continue;
      auto first = col_indices_.begin() + row_offsets_[j];
      auto last = col_indices_.begin() + row_offsets_[j + 1];
      auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i)
        throw MsError("mirror_upper: pattern is not structurally symmetric");
      values_[static_cast<std::size_t>(it - col_indices_.begin())] =
          values_[k];
    }
  }
}

double SparseOperator::symmetry_gap() const {
  if (rows_ != cols_) throw MsError("symmetry_gap requires a square matrix");
  double gap = 0.0;
  for (Index i = 0; i < rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = col_indices_[k];
      gap = std::max(gap, std::abs(values_[k] - coeff(j, i)));
    }
  }
  return gap;
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "msnet/coarse.hpp"
#include "msnet/sparse.hpp"

namespace msnet {

/// Relative L2 error in percent: 100 * ||ref - test||_2 / ||ref||_2.
/// A zero-norm reference is an error.
double l2_error_percent(std::span<const double> ref,
                        std::span<const double> test);

/// Relative energy-norm error in percent, measured in sqrt(u^T L u).
double energy_error_percent(const SparseOperator& laplacian,
                            std::span<const double> ref,
                            std::span<const double> test);

/// Cell averages over the coarse grid; cells without nodes are skipped.
struct CellAverages {
  std::vector<Index> active_cells;
  std::vector<double> values;
};

CellAverages cell_average(std::span<const double> u, const Network& net,
                          const CellAssignment& assignment,
                          bool capacity_weighted = true);

/// Relative L2 error in percent between the cell averages of two fine
/// vectors (same grid, same active cells).
double coarse_error_percent(std::span<const double> ref,
                            std::span<const double> test, const Network& net,
                            const CellAssignment& assignment,
                            bool capacity_weighted = true);

/// One run's error and cost summary, serialized as report.json.
struct ErrorSummary {
  std::string method;
  std::optional<double> e1_h;
  std::optional<double> e2_h;
  std::optional<double> e1_H;
  Index dof_h = 0;
  Index dof_H = 0;
  Index modes = 0;
  double t_offline_s = 0.0;
  double t_online_s = 0.0;
  double t_total_s = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
};

void save_report(const ErrorSummary& summary,
                 const std::filesystem::path& file);
ErrorSummary load_report(const std::filesystem::path& file);

/// Aligned text table over several summaries (sweep display).
std::string format_table(std::span<const ErrorSummary> rows);

/// Plot-data CSV: modes, dof_H, e1_h, e2_h, e1_H (empty when absent).
std::string format_plot_csv(std::span<const ErrorSummary> rows);

}  // namespace msnet

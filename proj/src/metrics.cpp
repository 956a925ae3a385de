// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "msnet/io.hpp"
#include "msnet/solve.hpp"

namespace msnet {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double l2_error_percent(std::span<const double> ref,
                        std::span<const double> test) {
  if (ref.size() != test.size()) {
    throw MsError(fmt::format("l2_error_percent: size mismatch ({} vs {})",
                              ref.size(), test.size()));
  }
  const double denom = norm2(ref);
  if (denom == 0.0) {
    throw MsError("l2_error_percent: reference vector has zero norm");
  }
  std::vector<double> diff(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = ref[i] - test[i];
  return 100.0 * norm2(diff) / denom;
}

double energy_error_percent(const SparseOperator& laplacian,
                            std::span<const double> ref,
                            std::span<const double> test) {
  if (ref.size() != test.size()) {
    throw MsError(fmt::format("energy_error_percent: size mismatch ({} vs {})",
                              ref.size(), test.size()));
  }
  if (laplacian.rows() != static_cast<Index>(ref.size())) {
    throw MsError("energy_error_percent: operator size mismatch");
  }
  const double denom = energy_norm(laplacian, ref);
  if (denom == 0.0) {
    throw MsError("energy_error_percent: reference has zero energy norm");
  }
  std::vector<double> diff(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) diff[i] = ref[i] - test[i];
  return 100.0 * energy_norm(laplacian, diff) / denom;
}

CellAverages cell_average(std::span<const double> u, const Network& net,
                          const CellAssignment& assignment,
                          bool capacity_weighted) {
  if (u.size() != net.nodes.size()) {
    throw MsError("cell_average: vector length differs from node count");
  }
  const Index n_cells = static_cast<Index>(assignment.cell_nodes.size());
  std::vector<double> weight_sum(static_cast<std::size_t>(n_cells), 0.0);
  std::vector<double> value_sum(static_cast<std::size_t>(n_cells), 0.0);
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Index cell = assignment.cell_of_node[i];
    const double w = capacity_weighted ? net.nodes[i].capacity : 1.0;
    weight_sum[static_cast<std::size_t>(cell)] += w;
    value_sum[static_cast<std::size_t>(cell)] += w * u[i];
  }
  CellAverages out;
  Index skipped = 0;
  for (Index c = 0; c < n_cells; ++c) {
    if (weight_sum[static_cast<std::size_t>(c)] == 0.0) {
      ++skipped;
      continue;
    }
    out.active_cells.push_back(c);
    out.values.push_back(value_sum[static_cast<std::size_t>(c)] /
                         weight_sum[static_cast<std::size_t>(c)]);
  }
  if (skipped > 0) {
    info(fmt::format("cell_average: {} of {} cells contain no nodes", skipped,
                     n_cells));
  }
  return out;
}

double coarse_error_percent(std::span<const double> ref,
                            std::span<const double> test, const Network& net,
                            const CellAssignment& assignment,
                            bool capacity_weighted) {
  const CellAverages a = cell_average(ref, net, assignment, capacity_weighted);
  const CellAverages b = cell_average(test, net, assignment, capacity_weighted);
  return l2_error_percent(a.values, b.values);
}

void save_report(const ErrorSummary& summary,
                 const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["method"] = summary.method;
  if (summary.e1_h) j["e1_h_percent"] = *summary.e1_h;
  if (summary.e2_h) j["e2_h_percent"] = *summary.e2_h;
  if (summary.e1_H) j["e1_H_percent"] = *summary.e1_H;
  j["dof_h"] = summary.dof_h;
  j["dof_H"] = summary.dof_H;
  j["modes"] = summary.modes;
  j["timings_s"] = {{"offline", summary.t_offline_s},
                    {"online", summary.t_online_s},
                    {"total", summary.t_total_s}};
  j["seed"] = summary.seed;
  j["config"] = summary.config;
  write_file(file, j.dump(2) + "\n");
}

ErrorSummary load_report(const std::filesystem::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw MsError(fmt::format("{}: invalid JSON: {}", file.string(), e.what()));
  }
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw MsError(fmt::format("{}: unsupported report format version",
                                file.string()));
    }
    ErrorSummary s;
    s.method = j.at("method").get<std::string>();
    if (j.contains("e1_h_percent")) s.e1_h = j["e1_h_percent"].get<double>();
    if (j.contains("e2_h_percent")) s.e2_h = j["e2_h_percent"].get<double>();
    if (j.contains("e1_H_percent")) s.e1_H = j["e1_H_percent"].get<double>();
    s.dof_h = j.at("dof_h").get<Index>();
    s.dof_H = j.at("dof_H").get<Index>();
    s.modes = j.at("modes").get<Index>();
    s.t_offline_s = j.at("timings_s").at("offline").get<double>();
    s.t_online_s = j.at("timings_s").at("online").get<double>();
    s.t_total_s = j.at("timings_s").at("total").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config")) {
      for (const auto& [key, value] : j["config"].items()) {
        s.config[key] = value.get<std::string>();
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw MsError(fmt::format("{}: malformed report: {}", file.string(),
                              e.what()));
  }
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("-");
}

}  // namespace

std::string format_table(std::span<const ErrorSummary> rows) {
  std::vector<std::array<std::string, 7>> cells;
  cells.push_back({"method", "M", "DOF_H", "e1_h[%]", "e2_h[%]", "e1_H[%]",
                   "t_online[s]"});
  for (const ErrorSummary& r : rows) {
    cells.push_back({r.method, fmt::format("{}", r.modes),
                     fmt::format("{}", r.dof_H), opt_cell(r.e1_h),
                     opt_cell(r.e2_h), opt_cell(r.e1_H),
                     fmt::format("{:.3f}", r.t_online_s)});
  }
  std::array<std::size_t, 7> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += fmt::format("{:>{}}", row[c], width[c]);
      out += (c + 1 == row.size()) ? "\n" : "  ";
    }
  }
  return out;
}

std::string format_plot_csv(std::span<const ErrorSummary> rows) {
  std::string out = "modes,dof_H,e1_h_percent,e2_h_percent,e1_H_percent\n";
  for (const ErrorSummary& r : rows) {
    out += fmt::format("{},{}", r.modes, r.dof_H);
    out += ',';
    if (r.e1_h) out += format_real(*r.e1_h);
    out += ',';
    if (r.e2_h) out += format_real(*r.e2_h);
    out += ',';
    if (r.e1_H) out += format_real(*r.e1_H);
    out += '\n';
  }
  return out;
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "msnet/assembly.hpp"
#include "msnet/coarse.hpp"
#include "msnet/components.hpp"
#include "msnet/generate.hpp"
#include "msnet/io.hpp"
#include "msnet/metrics.hpp"
#include "msnet/msbasis.hpp"
#include "msnet/network.hpp"
#include "msnet/solve.hpp"
#include "msnet/sparse.hpp"
#include "msnet/upscale.hpp"

namespace {

using namespace msnet;
namespace fs = std::filesystem;

class Stopwatch {
public:
  double seconds() const {
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(now - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

/// Shared time-grid options: exactly one of --tau / --final-time fixes the
/// step size (default: final time 1).
struct TimeOptions {
  double tau = 0.0;
  double final_time = 0.0;
  Index steps = 50;
  bool tau_given = false;
  bool final_given = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--tau", tau, "Time step size")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--final-time,-T", final_time,
                   "Final time (step size becomes T / steps)")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--steps", steps, "Number of backward-Euler steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  TimeGrid resolve(const CLI::App& cmd) const {
    const bool has_tau = cmd.count("--tau") > 0;
    const bool has_final = cmd.count("--final-time") > 0;
    if (has_tau && has_final) {
      throw MsError("give either --tau or --final-time, not both");
    }
    TimeGrid grid;
    grid.n_steps = steps;
    if (has_tau) {
      grid.tau = tau;
    } else {
      const double total = has_final ? final_time : 1.0;
      grid.tau = total / static_cast<double>(steps);
    }
    return grid;
  }
};

BoundarySpec parse_bc(std::vector<std::string> specs) {
  if (specs.empty()) specs.push_back("top=1");
  BoundarySpec bc;
  for (const std::string& s : specs) {
    if (s == "none") {
      bc.dirichlet.clear();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw MsError(fmt::format(
          "boundary condition '{}' is not of the form label=value", s));
    }
    bc.dirichlet.emplace_back(
        s.substr(0, eq),
        parse_real(std::string_view(s).substr(eq + 1),
                   fmt::format("boundary value in '{}'", s)));
  }
  return bc;
}

std::string bc_to_string(const BoundarySpec& bc) {
  if (bc.dirichlet.empty()) return "none";
  std::string out;
  for (const auto& [label, value] : bc.dirichlet) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}={}", label, format_real(value, 6));
  }
  return out;
}

Network load_net(const fs::path& dir) {
  Network net = load_network(dir);
  fmt::print("loaded network: {} nodes, {} edges ({}D)\n", net.n_nodes(),
             net.n_edges(), net.dim);
  return net;
}

/// Splits "a,b,c" into integers; every token must parse.
std::vector<Index> split_indices(const std::string& text,
                                 std::string_view context) {
  std::vector<Index> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(
        parse_index(std::string_view(text).substr(pos, comma - pos), context));
    pos = comma + 1;
  }
  return out;
}

/// Splits "a,b,c" into reals; every token must parse.
std::vector<double> split_reals(const std::string& text,
                                std::string_view context) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(
        parse_real(std::string_view(text).substr(pos, comma - pos), context));
    pos = comma + 1;
  }
  return out;
}

std::array<Index, 3> grid_dims(const std::string& cells_text, int dim) {
  const std::vector<Index> cells = split_indices(cells_text, "--grid");
  if (static_cast<int>(cells.size()) != dim) {
    throw MsError(fmt::format(
        "--grid lists {} axes but the network is {}D", cells.size(), dim));
  }
  std::array<Index, 3> out = {1, 1, 1};
  for (std::size_t k = 0; k < cells.size(); ++k) out[k] = cells[k];
  return out;
}

std::vector<double> load_initial_state(const std::string& file,
                                       Index n_nodes) {
  if (file.empty()) return std::vector<double>(n_nodes, 0.0);
  std::vector<double> u0 = load_solution(file);
  if (static_cast<Index>(u0.size()) != n_nodes) {
    throw MsError(fmt::format(
        "initial state {} has {} values but the network has {} nodes", file,
        u0.size(), n_nodes));
  }
  return u0;
}

/// Per-patch mode overrides, one "patch modes" pair per line; blank lines
/// and #-comments allowed.
std::vector<std::pair<Index, Index>> load_mode_overrides(
    const std::string& file) {
  std::vector<std::pair<Index, Index>> overrides;
  if (file.empty()) return overrides;
  const std::string text = read_file(file);
  std::size_t pos = 0;
  Index line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
      line.remove_prefix(1);
    }
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    if (line.empty()) continue;
    const auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw MsError(fmt::format("{}:{}: expected 'patch modes'", file,
                                line_no));
    }
    auto rest = line.substr(space + 1);
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) {
      rest.remove_prefix(1);
    }
    overrides.emplace_back(
        parse_index(line.substr(0, space),
                    fmt::format("{}:{}: patch id", file, line_no)),
        parse_index(rest, fmt::format("{}:{}: mode count", file, line_no)));
  }
  return overrides;
}

void write_snapshots(const Trajectory& traj, const fs::path& dir,
                     const std::string& prefix, Index save_every,
                     const std::function<std::vector<double>(
                         const std::vector<double>&)>& to_fine) {
  if (save_every <= 0) return;
  const Index last = traj.steps.back();
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const Index step = traj.steps[i];
    if (step != 0 && step != last && step % save_every != 0) continue;
    const std::vector<double> u =
        to_fine ? to_fine(traj.states[i]) : traj.states[i];
    save_solution(u, dir / fmt::format("{}_step{}.csv", prefix, step));
  }
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::uint64_t seed = 0;
  std::string family = "regular";
  std::string dims;
  std::string box;
  Index points = 0;
  int knn = 0;
  double removal_prob = 0.2;
  Index min_nodes = 10;
  std::string props = "none";
  double d_min = 0.1;
  double d_max = 1.0;
  std::string throat = "harmonic";
  double mu = 1.0;
  double d_out = 1.0;
  std::vector<std::string> contrast_boxes;
  std::uint64_t prop_seed = 0;
  std::string field_file;
  std::string field_apply = "both";
  double label_tol = 0.0;
  std::string out;
};

ContrastBox parse_contrast_box(const std::string& text) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    v.push_back(parse_real(std::string_view(text).substr(pos, comma - pos),
                           fmt::format("--contrast-box '{}'", text)));
    pos = comma + 1;
  }
  ContrastBox box;
  if (v.size() == 5) {
    box.lo = {v[0], v[1], 0.0};
    box.hi = {v[2], v[3], 0.0};
    box.d_in = v[4];
  } else if (v.size() == 7) {
    box.lo = {v[0], v[1], v[2]};
    box.hi = {v[3], v[4], v[5]};
    box.d_in = v[6];
  } else {
    throw MsError(fmt::format(
        "--contrast-box '{}' needs x0,y0,x1,y1,d_in (2D) or "
        "x0,y0,z0,x1,y1,z1,d_in (3D)",
        text));
  }
  return box;
}

void run_gen(const GenOptions& opt, const CLI::App& cmd) {
  GeneratorConfig cfg;
  cfg.seed = opt.seed;
  if (opt.family == "regular") {
    cfg.family = Family::structured_regular;
  } else if (opt.family == "irregular") {
    cfg.family = Family::structured_irregular;
  } else if (opt.family == "unstructured") {
    cfg.family = Family::unstructured;
  } else {
    throw MsError(fmt::format("unknown family '{}'", opt.family));
  }

  const std::vector<double> box_edges =
      opt.box.empty() ? std::vector<double>{} : split_reals(opt.box, "--box");
  if (cfg.family == Family::unstructured) {
    if (opt.points <= 0) {
      throw MsError("the unstructured family needs --points");
    }
    cfg.n_points = opt.points;
    cfg.knn = opt.knn;
    cfg.dim = box_edges.empty() ? 2 : static_cast<int>(box_edges.size());
  } else {
    const std::vector<Index> axis_nodes =
        opt.dims.empty() ? std::vector<Index>{}
                         : split_indices(opt.dims, "--dims");
    if (axis_nodes.size() != 2 && axis_nodes.size() != 3) {
      throw MsError("lattice families need --dims with 2 or 3 axes");
    }
    cfg.dim = static_cast<int>(axis_nodes.size());
    for (std::size_t k = 0; k < axis_nodes.size(); ++k) {
      cfg.dims[k] = axis_nodes[k];
    }
  }
  if (!box_edges.empty()) {
    if (static_cast<int>(box_edges.size()) != cfg.dim) {
      throw MsError(fmt::format("--box lists {} axes for a {}D network",
                                box_edges.size(), cfg.dim));
    }
    for (std::size_t k = 0; k < box_edges.size(); ++k) {
      cfg.box[k] = box_edges[k];
    }
  }
  cfg.removal_prob = opt.removal_prob;
  cfg.min_nodes = opt.min_nodes;

  Stopwatch watch;
  Network net = generate_network(cfg);

  PropertyConfig props;
  props.d_min = opt.d_min;
  props.d_max = opt.d_max;
  props.mu = opt.mu;
  props.d_out = opt.d_out;
  props.seed = cmd.count("--prop-seed") > 0 ? opt.prop_seed : opt.seed + 1;
  if (opt.throat == "harmonic") {
    props.throat = ThroatRule::harmonic_mean;
  } else if (opt.throat == "uniform") {
    props.throat = ThroatRule::random_uniform;
  } else {
    throw MsError(fmt::format("unknown throat rule '{}'", opt.throat));
  }
  for (const std::string& text : opt.contrast_boxes) {
    props.boxes.push_back(parse_contrast_box(text));
  }

  if (opt.props == "none") {
    // keep unit capacities and weights
  } else if (opt.props == "poiseuille") {
    assign_poiseuille(net, props);
  } else if (opt.props == "high-contrast") {
    assign_high_contrast(net, props);
  } else if (opt.props == "field") {
    if (opt.field_file.empty()) {
      throw MsError("--props field needs --field-file");
    }
    RasterApply mode = RasterApply::capacity_and_weight;
    if (opt.field_apply == "capacity") {
      mode = RasterApply::capacity_only;
    } else if (opt.field_apply == "weight") {
      mode = RasterApply::weight_only;
    } else if (opt.field_apply != "both") {
      throw MsError(fmt::format("unknown --field-apply '{}'", opt.field_apply));
    }
    load_coefficient_field(net, opt.field_file, mode);
  } else {
    throw MsError(fmt::format("unknown property model '{}'", opt.props));
  }

  label_boundaries(net, opt.label_tol);
  validate_network(net, /*require_connected=*/true);
  save_network(net, opt.out);
  fmt::print("generated {} nodes, {} edges ({}D) in {:.3f} s\n", net.n_nodes(),
             net.n_edges(), net.dim, watch.seconds());
  fmt::print("network hash {}\n", network_hash(net));
  fmt::print("wrote {}\n", opt.out);
}

// ---------------------------------------------------------------------------
// solve-fine

struct SolveFineOptions {
  std::string net;
  std::string out;
  TimeOptions time;
  std::vector<std::string> bc;
  std::string solver = "cg";
  double rtol = 1e-10;
  Index max_iter = 0;
  double source = 0.0;
  std::string u0_file;
  Index save_every = 0;
  std::string ref;
};

void run_solve_fine(const SolveFineOptions& opt, const CLI::App& cmd) {
  const Network net = load_net(opt.net);
  const BoundarySpec bc = parse_bc(opt.bc);
  validate_boundary(net, bc);

  const TimeGrid time = opt.time.resolve(cmd);
  LinearSolverConfig solver;
  solver.rtol = opt.rtol;
  solver.max_iter = opt.max_iter;
  if (opt.solver == "cg") {
    solver.method = LinearMethod::conjugate_gradient;
  } else if (opt.solver == "cholesky") {
    solver.method = LinearMethod::dense_cholesky;
  } else if (opt.solver == "lu") {
    solver.method = LinearMethod::dense_lu_oracle;
  } else {
    throw MsError(fmt::format("unknown solver '{}'", opt.solver));
  }

  Stopwatch total;
  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);
  const std::vector<double> u0 = load_initial_state(opt.u0_file, net.n_nodes());
  const std::vector<double> f(net.n_nodes(), opt.source);

  Stopwatch online;
  const Trajectory traj =
      fine_solve(reduced, f, u0, time, solver, opt.save_every);
  const double t_online = online.seconds();

  fs::create_directories(opt.out);
  save_solution(traj.final_state(), fs::path(opt.out) / "u.csv");
  write_snapshots(traj, opt.out, "u", opt.save_every, nullptr);

  ErrorSummary report;
  report.method = "fine";
  report.dof_h = reduced.n_free();
  report.seed = net.seed;
  report.t_online_s = t_online;
  report.t_total_s = total.seconds();
  report.config = {{"tau", format_real(time.tau, 6)},
                   {"steps", fmt::format("{}", time.n_steps)},
                   {"bc", bc_to_string(bc)},
                   {"solver", opt.solver},
                   {"rtol", format_real(opt.rtol, 3)},
                   {"source", format_real(opt.source, 6)}};
  if (!opt.ref.empty()) {
    const std::vector<double> ref = load_solution(opt.ref);
    report.e1_h = l2_error_percent(ref, traj.final_state());
    report.e2_h = energy_error_percent(laplacian, ref, traj.final_state());
    fmt::print("e1_h = {:.6f} %, e2_h = {:.6f} %\n", *report.e1_h,
               *report.e2_h);
  }
  save_report(report, fs::path(opt.out) / "report.json");
  fmt::print("solved {} steps of tau = {} on {} free nodes in {:.3f} s\n",
             time.n_steps, format_real(time.tau, 6), reduced.n_free(),
             t_online);
  fmt::print("wrote {}\n", opt.out);
}

// ---------------------------------------------------------------------------
// basis

struct BasisOptions {
  std::string net;
  std::string out;
  std::string grid;
  Index modes = 4;
  std::string m_file;
  bool full_basis = false;
  Index dense_threshold = 4000;
  double lanczos_tol = 1e-10;
  Index threads = 1;
};

BasisRequest make_request(const BasisOptions& opt) {
  BasisRequest request;
  request.n_modes = opt.modes;
  request.overrides = load_mode_overrides(opt.m_file);
  request.full_basis = opt.full_basis;
  request.eigen.dense_threshold = opt.dense_threshold;
  request.eigen.lanczos_tol = opt.lanczos_tol;
  request.threads = opt.threads;
  return request;
}

void run_basis(const BasisOptions& opt) {
  const Network net = load_net(opt.net);
  const CoarseGrid grid =
      make_coarse_grid(net, grid_dims(opt.grid, net.dim));
  const CellAssignment assignment = assign_cells(net, grid);

  Stopwatch watch;
  const MultiscaleBasis basis =
      build_multiscale_basis(net, grid, assignment, make_request(opt));
  const double t_build = watch.seconds();

  save_basis(basis, network_hash(net), opt.out);
  fmt::print(
      "built {} basis rows over {} patches ({} modes per patch) in {:.3f} s\n",
      basis.projection.matrix.rows(), basis.patch_bases.size(), opt.modes,
      t_build);
  fmt::print("wrote {}\n", opt.out);
}

// ---------------------------------------------------------------------------
// ms

struct MsOptions {
  std::string net;
  std::string out;
  std::string basis_dir;
  BasisOptions basis;  // inline build settings (net/out unused)
  TimeOptions time;
  std::vector<std::string> bc;
  double source = 0.0;
  std::string u0_file;
  Index save_every = 0;
  std::string ref;
  std::string sweep;
};

struct MsRun {
  ErrorSummary report;
  Trajectory coarse_traj;
  std::vector<double> u_final;
};

MsRun run_ms_once(const Network& net, const SparseOperator& laplacian,
                  const ReducedSystem& reduced, const CoarseGrid& grid,
                  const ProjectionOperator& projection, const TimeGrid& time,
                  const MsOptions& opt, const BoundarySpec& bc, Index modes,
                  double t_offline, bool write_snaps) {
  Stopwatch online;
  const ProjectionOperator restricted =
      restrict_projection(projection, reduced);
  const std::vector<double> u0 = load_initial_state(opt.u0_file, net.n_nodes());
  const std::vector<double> u0_free = reduced.restrict_vector(u0);
  const std::vector<double> uh0 = restricted.matrix.apply(u0_free);
  const std::vector<double> f_free(reduced.n_free(), opt.source);

  const CoarseSystem coarse = galerkin_project(restricted, reduced, f_free);
  const Trajectory traj = ms_solve(coarse, restricted.row_meta, uh0, time);
  std::vector<double> u_final =
      reconstruct(restricted, reduced, traj.final_state());
  const double t_online = online.seconds();

  if (write_snaps) {
    write_snapshots(traj, opt.out, "u_ms", opt.save_every,
                    [&](const std::vector<double>& uh) {
                      return reconstruct(restricted, reduced, uh);
                    });
  }

  MsRun run;
  run.report.method = "multiscale";
  run.report.dof_h = reduced.n_free();
  run.report.dof_H = restricted.matrix.rows();
  run.report.modes = modes;
  run.report.seed = net.seed;
  run.report.t_offline_s = t_offline;
  run.report.t_online_s = t_online;
  run.report.t_total_s = t_offline + t_online;
  run.report.config = {{"tau", format_real(time.tau, 6)},
                       {"steps", fmt::format("{}", time.n_steps)},
                       {"bc", bc_to_string(bc)},
                       {"grid", fmt::format("{}x{}x{}", grid.cells[0],
                                            grid.cells[1], grid.cells[2])},
                       {"source", format_real(opt.source, 6)}};
  if (!opt.ref.empty()) {
    const std::vector<double> ref = load_solution(opt.ref);
    run.report.e1_h = l2_error_percent(ref, u_final);
    run.report.e2_h = energy_error_percent(laplacian, ref, u_final);
    const CellAssignment assignment = assign_cells(net, grid);
    run.report.e1_H = coarse_error_percent(ref, u_final, net, assignment);
  }
  run.coarse_traj = traj;
  run.u_final = std::move(u_final);
  return run;
}

void run_ms(const MsOptions& opt, const CLI::App& cmd) {
  const Network net = load_net(opt.net);
  const BoundarySpec bc = parse_bc(opt.bc);
  validate_boundary(net, bc);
  const TimeGrid time = opt.time.resolve(cmd);

  const SparseOperator laplacian = assemble_laplacian(net);
  const SparseOperator mass = assemble_mass(net);
  const ReducedSystem reduced = reduce_dirichlet(laplacian, mass, net, bc);

  fs::create_directories(opt.out);
  std::vector<ErrorSummary> rows;
  MsRun last;

  if (!opt.sweep.empty()) {
    if (!opt.basis_dir.empty()) {
      throw MsError("--sweep-M rebuilds bases per mode count; it cannot be "
                    "combined with --basis");
    }
    if (opt.basis.full_basis) {
      throw MsError("--sweep-M and --full-basis are mutually exclusive");
    }
    const std::vector<Index> sweep_modes = split_indices(opt.sweep, "--sweep-M");
    const CoarseGrid grid =
        make_coarse_grid(net, grid_dims(opt.basis.grid, net.dim));
    const CellAssignment assignment = assign_cells(net, grid);
    for (Index modes : sweep_modes) {
      BasisOptions per = opt.basis;
      per.modes = modes;
      Stopwatch offline;
      const MultiscaleBasis basis =
          build_multiscale_basis(net, grid, assignment, make_request(per));
      const double t_offline = offline.seconds();
      const bool is_last = (modes == sweep_modes.back());
      last = run_ms_once(net, laplacian, reduced, grid, basis.projection,
                         time, opt, bc, modes, t_offline, is_last);
      rows.push_back(last.report);
      fmt::print("M = {:3}: DOF_H = {}{}\n", modes, last.report.dof_H,
                 last.report.e1_h
                     ? fmt::format(", e1_h = {:.6f} %", *last.report.e1_h)
                     : std::string());
    }
    write_file(fs::path(opt.out) / "sweep.csv", format_plot_csv(rows));
  } else {
    CoarseGrid grid;
    ProjectionOperator projection;
    double t_offline = 0.0;
    Index modes = opt.basis.modes;
    if (!opt.basis_dir.empty()) {
      Stopwatch offline;
      LoadedBasis loaded = load_basis(opt.basis_dir, net.n_nodes());
      if (loaded.network_hash != network_hash(net)) {
        throw MsError(fmt::format(
            "basis {} was built for network hash {} but {} has hash {}",
            opt.basis_dir, loaded.network_hash, opt.net, network_hash(net)));
      }
      grid = loaded.grid;
      projection = std::move(loaded.projection);
      t_offline = offline.seconds();
      modes = 0;
      for (const RowMeta& meta : projection.row_meta) {
        modes = std::max(modes, static_cast<Index>(meta.kind));
      }
    } else {
      if (opt.basis.grid.empty()) {
        throw MsError("give --basis to load a saved basis or --grid to "
                      "build one inline");
      }
      grid = make_coarse_grid(net, grid_dims(opt.basis.grid, net.dim));
      const CellAssignment assignment = assign_cells(net, grid);
      Stopwatch offline;
      const MultiscaleBasis basis =
          build_multiscale_basis(net, grid, assignment, make_request(opt.basis));
      projection = basis.projection;
      t_offline = offline.seconds();
    }
    last = run_ms_once(net, laplacian, reduced, grid, projection, time, opt,
                       bc, modes, t_offline, /*write_snaps=*/true);
    rows.push_back(last.report);
  }

  save_solution(last.u_final, fs::path(opt.out) / "u_ms.csv");
  save_report(rows.back(), fs::path(opt.out) / "report.json");
  write_file(fs::path(opt.out) / "table.txt", format_table(rows));
  fmt::print("{}", format_table(rows));
  fmt::print("wrote {}\n", opt.out);
}

// ---------------------------------------------------------------------------
// upscale

struct UpscaleCliOptions {
  std::string net;
  std::string out;
  std::string grid;
  TimeOptions time;
  std::vector<std::string> bc;
  std::string u0_file;
  Index save_every = 0;
  std::string ref;
  double delta_frac = 0.1;
  std::string avg = "weighted";
  double rtol = 1e-12;
  Index threads = 1;
};

void run_upscale(const UpscaleCliOptions& opt, const CLI::App& cmd) {
  const Network net = load_net(opt.net);
  const BoundarySpec bc = parse_bc(opt.bc);
  validate_boundary(net, bc);
  const TimeGrid time = opt.time.resolve(cmd);

  UpscaleOptions options;
  options.delta_frac = opt.delta_frac;
  options.cg_rtol = opt.rtol;
  options.threads = opt.threads;
  if (opt.avg == "weighted") {
    options.capacity_weighted = true;
  } else if (opt.avg == "plain") {
    options.capacity_weighted = false;
  } else {
    throw MsError(fmt::format("unknown averaging mode '{}'", opt.avg));
  }

  const CoarseGrid grid = make_coarse_grid(net, grid_dims(opt.grid, net.dim));
  const CellAssignment assignment = assign_cells(net, grid);

  Stopwatch offline;
  const UpscaledModel model =
      build_upscaled_model(net, grid, assignment, bc, options);
  const double t_offline = offline.seconds();

  fs::create_directories(opt.out);
  save_upscaled_model(model, fs::path(opt.out) / "model");

  const std::vector<double> u0 = load_initial_state(opt.u0_file, net.n_nodes());
  const CellAverages u0_avg =
      cell_average(u0, net, assignment, options.capacity_weighted);
  if (u0_avg.active_cells != model.active_cells) {
    throw MsError("cell occupancy changed between averaging and the model");
  }

  Stopwatch online;
  const Trajectory traj =
      upscaled_solve(model, u0_avg.values, time, opt.rtol, opt.save_every);
  std::vector<double> u_final =
      prolong_piecewise_constant(model, assignment, traj.final_state());
  const double t_online = online.seconds();

  save_solution(u_final, fs::path(opt.out) / "u_up.csv");
  write_snapshots(traj, opt.out, "u_up", opt.save_every,
                  [&](const std::vector<double>& cells) {
                    return prolong_piecewise_constant(model, assignment, cells);
                  });

  ErrorSummary report;
  report.method = "upscaled";
  report.dof_h = net.n_nodes();
  report.dof_H = static_cast<Index>(model.active_cells.size());
  report.seed = net.seed;
  report.t_offline_s = t_offline;
  report.t_online_s = t_online;
  report.t_total_s = t_offline + t_online;
  report.config = {{"tau", format_real(time.tau, 6)},
                   {"steps", fmt::format("{}", time.n_steps)},
                   {"bc", bc_to_string(bc)},
                   {"grid", fmt::format("{}x{}x{}", grid.cells[0],
                                        grid.cells[1], grid.cells[2])},
                   {"delta_frac", format_real(opt.delta_frac, 6)},
                   {"avg", opt.avg}};
  if (!opt.ref.empty()) {
    const std::vector<double> ref = load_solution(opt.ref);
    const SparseOperator laplacian = assemble_laplacian(net);
    report.e1_h = l2_error_percent(ref, u_final);
    report.e2_h = energy_error_percent(laplacian, ref, u_final);
    const CellAverages ref_avg =
        cell_average(ref, net, assignment, options.capacity_weighted);
    report.e1_H = l2_error_percent(ref_avg.values, traj.final_state());
    fmt::print("e1_h = {:.6f} %, e1_H = {:.6f} %\n", *report.e1_h,
               *report.e1_H);
  }
  save_report(report, fs::path(opt.out) / "report.json");
  fmt::print("upscaled model: {} cells, {} coarse edges, {} couplings, "
             "{} unsolvable faces\n",
             model.active_cells.size(), model.edges.size(),
             model.couplings.size(), model.n_unsolvable);
  fmt::print("wrote {}\n", opt.out);
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::string net;
  std::string ref;
  std::vector<std::string> candidates;
  std::string grid;
  std::string plot_csv;
  std::string table_file;
};

void run_compare(const CompareOptions& opt) {
  const Network net = load_net(opt.net);
  const SparseOperator laplacian = assemble_laplacian(net);
  const std::vector<double> ref = load_solution(opt.ref);
  if (static_cast<Index>(ref.size()) != net.n_nodes()) {
    throw MsError(fmt::format("reference {} has {} values for {} nodes",
                              opt.ref, ref.size(), net.n_nodes()));
  }

  std::optional<CellAssignment> assignment;
  CoarseGrid grid;
  if (!opt.grid.empty()) {
    grid = make_coarse_grid(net, grid_dims(opt.grid, net.dim));
    assignment = assign_cells(net, grid);
  }

  std::vector<ErrorSummary> rows;
  for (const std::string& file : opt.candidates) {
    const std::vector<double> u = load_solution(file);
    if (u.size() != ref.size()) {
      throw MsError(fmt::format("{} has {} values but the reference has {}",
                                file, u.size(), ref.size()));
    }
    ErrorSummary row;
    row.method = fs::path(file).stem().string();
    row.dof_h = net.n_nodes();
    row.seed = net.seed;
    row.e1_h = l2_error_percent(ref, u);
    row.e2_h = energy_error_percent(laplacian, ref, u);
    if (assignment) {
      row.e1_H = coarse_error_percent(ref, u, net, *assignment);
    }
    rows.push_back(std::move(row));
  }

  const std::string table = format_table(rows);
  fmt::print("{}", table);
  if (!opt.table_file.empty()) write_file(opt.table_file, table);
  if (!opt.plot_csv.empty()) write_file(opt.plot_csv, format_plot_csv(rows));
}

// ---------------------------------------------------------------------------
// info

void run_info(const std::string& dir) {
  const Network net = load_network(dir);
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(net.edges.size());
  for (const EdgeRecord& e : net.edges) pairs.emplace_back(e.head, e.tail);
  const ComponentLabels comps =
      connected_components(net.n_nodes(), pairs);

  std::vector<Index> degree(net.nodes.size(), 0);
  double w_min = std::numeric_limits<double>::infinity();
  double w_max = 0.0;
  for (const EdgeRecord& e : net.edges) {
    ++degree[static_cast<std::size_t>(e.head)];
    ++degree[static_cast<std::size_t>(e.tail)];
    w_min = std::min(w_min, e.weight);
    w_max = std::max(w_max, e.weight);
  }
  Index d_min = net.nodes.empty() ? 0 : degree[0];
  Index d_max = 0;
  for (Index d : degree) {
    d_min = std::min(d_min, d);
    d_max = std::max(d_max, d);
  }
  double c_min = std::numeric_limits<double>::infinity();
  double c_max = 0.0;
  std::map<std::string, Index> label_counts;
  for (const NodeRecord& node : net.nodes) {
    c_min = std::min(c_min, node.capacity);
    c_max = std::max(c_max, node.capacity);
    for (const std::string& label : node.labels) ++label_counts[label];
  }

  fmt::print("nodes: {}\nedges: {}\ndim: {}\n", net.n_nodes(), net.n_edges(),
             net.dim);
  fmt::print("box: {} x {}{}\n", format_real(net.box[0], 6),
             format_real(net.box[1], 6),
             net.dim == 3 ? fmt::format(" x {}", format_real(net.box[2], 6))
                          : std::string());
  fmt::print("generator: {} (seed {})\n", net.generator, net.seed);
  fmt::print("components: {}\n", comps.n_components);
  if (net.n_nodes() > 0) {
    fmt::print("degree: min {} mean {:.2f} max {}\n", d_min,
               2.0 * static_cast<double>(net.n_edges()) /
                   static_cast<double>(net.n_nodes()),
               d_max);
  }
  if (net.n_edges() > 0) {
    fmt::print("weights: [{}, {}]\n", format_real(w_min, 6),
               format_real(w_max, 6));
  }
  if (net.n_nodes() > 0) {
    fmt::print("capacities: [{}, {}]\n", format_real(c_min, 6),
               format_real(c_max, 6));
  }
  for (const auto& [label, count] : label_counts) {
    fmt::print("label {}: {} nodes\n", label, count);
  }
  fmt::print("hash: {}\n", network_hash(net));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale solvers for diffusion on weighted networks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");

  // gen ---------------------------------------------------------------
  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a network");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
  gen_cmd->add_option("--family", gen.family,
                      "regular | irregular | unstructured")
      ->capture_default_str();
  gen_cmd->add_option("--dims", gen.dims, "Lattice nodes per axis (e.g. 40,40)");
  gen_cmd->add_option("--box", gen.box, "Box edge lengths (e.g. 1,1)");
  gen_cmd->add_option("--points", gen.points,
                      "Point count (unstructured family)");
  gen_cmd->add_option("--knn", gen.knn,
                      "Neighbours per point (0: 6 in 2D, 8 in 3D)");
  gen_cmd->add_option("--removal-prob", gen.removal_prob,
                      "Edge/node removal probability (irregular family)")
      ->capture_default_str();
  gen_cmd->add_option("--min-nodes", gen.min_nodes,
                      "Smallest acceptable trimmed network")
      ->capture_default_str();
  gen_cmd->add_option("--props", gen.props,
                      "none | poiseuille | high-contrast | field")
      ->capture_default_str();
  gen_cmd->add_option("--d-min", gen.d_min, "Smallest pore diameter")
      ->capture_default_str();
  gen_cmd->add_option("--d-max", gen.d_max, "Largest pore diameter")
      ->capture_default_str();
  gen_cmd->add_option("--throat", gen.throat, "harmonic | uniform")
      ->capture_default_str();
  gen_cmd->add_option("--mu", gen.mu, "Fluid viscosity")
      ->capture_default_str();
  gen_cmd->add_option("--d-out", gen.d_out,
                      "Pore diameter outside contrast boxes")
      ->capture_default_str();
  gen_cmd->add_option("--contrast-box", gen.contrast_boxes,
                      "x0,y0,x1,y1,d_in or x0,y0,z0,x1,y1,z1,d_in "
                      "(repeatable)");
  gen_cmd->add_option("--prop-seed", gen.prop_seed,
                      "Coefficient seed (default: --seed + 1)");
  gen_cmd->add_option("--field-file", gen.field_file,
                      "Raster coefficient file (--props field)");
  gen_cmd->add_option("--field-apply", gen.field_apply,
                      "both | capacity | weight")
      ->capture_default_str();
  gen_cmd->add_option("--label-tol", gen.label_tol,
                      "Boundary label tolerance (0: 1e-9 * box)")
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output network directory")
      ->required();
  gen_cmd->callback([&] { run_gen(gen, *gen_cmd); });

  // solve-fine ----------------------------------------------------------
  SolveFineOptions fine;
  CLI::App* fine_cmd =
      app.add_subcommand("solve-fine", "Backward-Euler fine-scale solve");
  fine_cmd->add_option("--net", fine.net, "Network directory")->required();
  fine.time.add_to(*fine_cmd);
  fine_cmd->add_option("--bc", fine.bc,
                       "Dirichlet condition label=value (repeatable; "
                       "default top=1; 'none' clears)");
  fine_cmd->add_option("--solver", fine.solver, "cg | cholesky | lu")
      ->capture_default_str();
  fine_cmd->add_option("--rtol", fine.rtol, "CG relative tolerance")
      ->capture_default_str();
  fine_cmd->add_option("--max-iter", fine.max_iter,
                       "CG iteration cap (0: 10n + 100)");
  fine_cmd->add_option("--source", fine.source, "Constant nodal source")
      ->capture_default_str();
  fine_cmd->add_option("--u0", fine.u0_file, "Initial state CSV (default 0)");
  fine_cmd->add_option("--save-every", fine.save_every,
                       "Snapshot stride (0: final state only)");
  fine_cmd->add_option("--ref", fine.ref,
                       "Reference solution CSV for error reporting");
  fine_cmd->add_option("--out", fine.out, "Output directory")->required();
  fine_cmd->callback([&] { run_solve_fine(fine, *fine_cmd); });

  // basis ---------------------------------------------------------------
  BasisOptions basis;
  CLI::App* basis_cmd =
      app.add_subcommand("basis", "Build the multiscale basis (offline stage)");
  basis_cmd->add_option("--net", basis.net, "Network directory")->required();
  basis_cmd->add_option("--grid", basis.grid, "Coarse cells per axis (e.g. 5,5)")
      ->required();
  basis_cmd->add_option("--modes,-M", basis.modes, "Eigenmodes per patch")
      ->capture_default_str();
  basis_cmd->add_option("--m-file", basis.m_file,
                        "Per-patch mode overrides ('patch modes' lines)");
  basis_cmd->add_flag("--full-basis", basis.full_basis,
                      "Use every cluster eigenvector (exact recovery)");
  basis_cmd->add_option("--dense-threshold", basis.dense_threshold,
                        "Largest cluster solved densely")
      ->capture_default_str();
  basis_cmd->add_option("--lanczos-tol", basis.lanczos_tol,
                        "Iterative eigensolver residual tolerance")
      ->capture_default_str();
  basis_cmd->add_option("--threads", basis.threads, "Worker threads")
      ->capture_default_str();
  basis_cmd->add_option("--out", basis.out, "Output basis directory")
      ->required();
  basis_cmd->callback([&] { run_basis(basis); });

  // ms --------------------------------------------------------------------
  MsOptions ms;
  CLI::App* ms_cmd =
      app.add_subcommand("ms", "Multiscale solve (offline + online)");
  ms_cmd->add_option("--net", ms.net, "Network directory")->required();
  ms_cmd->add_option("--basis", ms.basis_dir,
                     "Saved basis directory (skips the offline build)");
  ms_cmd->add_option("--grid", ms.basis.grid, "Coarse cells per axis (e.g. 5,5)");
  ms_cmd->add_option("--modes,-M", ms.basis.modes, "Eigenmodes per patch")
      ->capture_default_str();
  ms_cmd->add_option("--m-file", ms.basis.m_file,
                     "Per-patch mode overrides ('patch modes' lines)");
  ms_cmd->add_flag("--full-basis", ms.basis.full_basis,
                   "Use every cluster eigenvector (exact recovery)");
  ms_cmd->add_option("--dense-threshold", ms.basis.dense_threshold,
                     "Largest cluster solved densely")
      ->capture_default_str();
  ms_cmd->add_option("--lanczos-tol", ms.basis.lanczos_tol,
                     "Iterative eigensolver residual tolerance")
      ->capture_default_str();
  ms_cmd->add_option("--threads", ms.basis.threads, "Worker threads")
      ->capture_default_str();
  ms.time.add_to(*ms_cmd);
  ms_cmd->add_option("--bc", ms.bc,
                     "Dirichlet condition label=value (repeatable; "
                     "default top=1; 'none' clears)");
  ms_cmd->add_option("--source", ms.source, "Constant nodal source")
      ->capture_default_str();
  ms_cmd->add_option("--u0", ms.u0_file, "Initial state CSV (default 0)");
  ms_cmd->add_option("--save-every", ms.save_every,
                     "Snapshot stride (0: final state only)");
  ms_cmd->add_option("--ref", ms.ref,
                     "Reference solution CSV for error reporting");
  ms_cmd->add_option("--sweep-M", ms.sweep,
                     "Comma-separated mode counts; writes sweep.csv");
  ms_cmd->add_option("--out", ms.out, "Output directory")->required();
  ms_cmd->callback([&] { run_ms(ms, *ms_cmd); });

  // upscale -----------------------------------------------------------------
  UpscaleCliOptions up;
  CLI::App* up_cmd = app.add_subcommand(
      "upscale", "Flux-averaging upscaled solve (baseline)");
  up_cmd->add_option("--net", up.net, "Network directory")->required();
  up_cmd->add_option("--grid", up.grid, "Coarse cells per axis (e.g. 5,5)")
      ->required();
  up.time.add_to(*up_cmd);
  up_cmd->add_option("--bc", up.bc,
                     "Dirichlet condition label=value (repeatable; "
                     "default top=1; 'none' clears)");
  up_cmd->add_option("--u0", up.u0_file, "Initial state CSV (default 0)");
  up_cmd->add_option("--save-every", up.save_every,
                     "Snapshot stride (0: final state only)");
  up_cmd->add_option("--ref", up.ref,
                     "Reference solution CSV for error reporting");
  up_cmd->add_option("--delta-frac", up.delta_frac,
                     "Band width as a fraction of the cell width")
      ->capture_default_str();
  up_cmd->add_option("--avg", up.avg,
                     "weighted (capacity-weighted averages) | plain")
      ->capture_default_str();
  up_cmd->add_option("--rtol", up.rtol, "Local-solve CG tolerance")
      ->capture_default_str();
  up_cmd->add_option("--threads", up.threads, "Worker threads")
      ->capture_default_str();
  up_cmd->add_option("--out", up.out, "Output directory")->required();
  up_cmd->callback([&] { run_upscale(up, *up_cmd); });

  // compare ------------------------------------------------------------------
  CompareOptions cmp;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Error table of candidate solutions against a reference");
  cmp_cmd->add_option("--net", cmp.net, "Network directory")->required();
  cmp_cmd->add_option("--ref", cmp.ref, "Reference solution CSV")->required();
  cmp_cmd->add_option("candidates", cmp.candidates, "Candidate solution CSVs")
      ->required()
      ->expected(-1);
  cmp_cmd->add_option("--grid", cmp.grid,
                      "Coarse cells per axis (enables the cell-average "
                      "error column)");
  cmp_cmd->add_option("--plot-csv", cmp.plot_csv, "Write plot data CSV here");
  cmp_cmd->add_option("--table", cmp.table_file, "Write the table here too");
  cmp_cmd->callback([&] { run_compare(cmp); });

  // info ----------------------------------------------------------------------
  std::string info_dir;
  CLI::App* info_cmd =
      app.add_subcommand("info", "Summarize a network directory");
  info_cmd->add_option("--net", info_dir, "Network directory")->required();
  info_cmd->callback([&] { run_info(info_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}

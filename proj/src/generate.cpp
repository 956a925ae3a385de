// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/generate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "msnet/components.hpp"
#include "msnet/io.hpp"

namespace msnet {

namespace {

Index lattice_index(const std::array<Index, 3>& idx,
                    const std::array<Index, 3>& dims) {
  return idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]);
}

Network build_regular_lattice(const GeneratorConfig& cfg) {
  Network net;
  net.dim = cfg.dim;
  net.box = cfg.box;
  std::array<Index, 3> dims = cfg.dims;
  if (cfg.dim == 2) dims[2] = 1;
  for (int k = 0; k < cfg.dim; ++k) {
    if (dims[k] < 2)
      throw MsError(fmt::format("lattice needs >= 2 nodes per axis, got {} on axis {}",
                                dims[k], k));
  }
  std::array<double, 3> h = {0.0, 0.0, 0.0};
  for (int k = 0; k < cfg.dim; ++k)
    h[k] = cfg.box[k] / static_cast<double>(dims[k] - 1);

  net.nodes.reserve(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
  std::array<Index, 3> idx;
  for (idx[2] = 0; idx[2] < dims[2]; ++idx[2]) {
    for (idx[1] = 0; idx[1] < dims[1]; ++idx[1]) {
      for (idx[0] = 0; idx[0] < dims[0]; ++idx[0]) {
        NodeRecord node;
        for (int k = 0; k < cfg.dim; ++k)
          node.coords[k] = static_cast<double>(idx[k]) * h[k];
        net.nodes.push_back(std::move(node));
      }
    }
  }
  for (idx[2] = 0; idx[2] < dims[2]; ++idx[2]) {
    for (idx[1] = 0; idx[1] < dims[1]; ++idx[1]) {
      for (idx[0] = 0; idx[0] < dims[0]; ++idx[0]) {
        const Index base = lattice_index(idx, dims);
        for (int k = 0; k < cfg.dim; ++k) {
          if (idx[k] + 1 >= dims[k]) continue;
          auto nb = idx;
          ++nb[k];
          net.edges.push_back({base, lattice_index(nb, dims), 1.0, {}, {}});
        }
      }
    }
  }
  return net;
}

/// Keeps the flagged nodes and the edges whose endpoints both survive, then
/// trims to the largest connected component. Node order is preserved.
Network trim_to_largest_component(const Network& net,
                                  const std::vector<bool>& keep_node,
                                  const std::vector<bool>& keep_edge,
                                  Index min_nodes) {
  std::vector<std::pair<Index, Index>> survivor_pairs;
  std::vector<Index> survivor_edges;
  for (Index e = 0; e < net.n_edges(); ++e) {
    const auto& edge = net.edges[e];
    if (keep_edge[e] && keep_node[edge.head] && keep_node[edge.tail]) {
      survivor_pairs.emplace_back(edge.head, edge.tail);
      survivor_edges.push_back(e);
    }
  }
  const auto comps = connected_components(net.n_nodes(), survivor_pairs);
  // Removed nodes form singleton components; restrict the size ranking to
  // kept nodes by computing sizes over them only.
  std::vector<Index> kept_sizes(static_cast<std::size_t>(comps.n_components), 0);
  for (Index i = 0; i < net.n_nodes(); ++i)
    if (keep_node[i]) ++kept_sizes[comps.component_of[i]];
  Index best = 0;
  for (Index c = 1; c < comps.n_components; ++c)
    if (kept_sizes[c] > kept_sizes[best]) best = c;
  if (kept_sizes[best] < min_nodes)
    throw MsError(fmt::format(
        "largest connected component has {} nodes, need at least {}",
        kept_sizes[best], min_nodes));

  Network out;
  out.dim = net.dim;
  out.box = net.box;
  std::vector<Index> to_new(static_cast<std::size_t>(net.n_nodes()), -1);
  for (Index i = 0; i < net.n_nodes(); ++i) {
    if (keep_node[i] && comps.component_of[i] == best) {
      to_new[i] = static_cast<Index>(out.nodes.size());
      out.nodes.push_back(net.nodes[i]);
    }
  }
  for (Index e : survivor_edges) {
    const auto& edge = net.edges[e];
    if (to_new[edge.head] < 0 || to_new[edge.tail] < 0) continue;
    EdgeRecord copy = edge;
    copy.head = to_new[edge.head];
    copy.tail = to_new[edge.tail];
    out.edges.push_back(copy);
  }
  return out;
}

Network build_irregular_lattice(const GeneratorConfig& cfg) {
  Network base = build_regular_lattice(cfg);
  if (cfg.removal_prob < 0.0 || cfg.removal_prob >= 1.0)
    throw MsError(fmt::format("removal_prob must be in [0, 1), got {}",
                              cfg.removal_prob));
  std::mt19937_64 rng(cfg.seed);
  // Edge pass first, then node pass; the draw order is part of the format.
  std::vector<bool> keep_edge(base.edges.size());
  for (std::size_t e = 0; e < base.edges.size(); ++e)
    keep_edge[e] = uniform_double(rng) >= cfg.removal_prob;
  std::vector<bool> keep_node(base.nodes.size());
  for (std::size_t i = 0; i < base.nodes.size(); ++i)
    keep_node[i] = uniform_double(rng) >= cfg.removal_prob;
  return trim_to_largest_component(base, keep_node, keep_edge, cfg.min_nodes);
}

/// Uniform bucket grid over the box for exact k-nearest-neighbour queries.
class BucketGrid {
public:
  BucketGrid(const std::vector<std::array<double, 3>>& points, int dim,
             const std::array<double, 3>& box) : points_(points), dim_(dim) {
    const double volume = dim == 3 ? box[0] * box[1] * box[2] : box[0] * box[1];
    const double target = std::pow(
        volume / static_cast<double>(std::max<std::size_t>(points.size(), 1)),
        1.0 / dim);
    for (int k = 0; k < 3; ++k) cells_[k] = 1;
    min_width_ = std::numeric_limits<double>::max();
    for (int k = 0; k < dim; ++k) {
      cells_[k] = std::max<Index>(1, static_cast<Index>(box[k] / target));
      width_[k] = box[k] / static_cast<double>(cells_[k]);
      min_width_ = std::min(min_width_, width_[k]);
    }
    buckets_.resize(static_cast<std::size_t>(cells_[0] * cells_[1] * cells_[2]));
    for (std::size_t p = 0; p < points.size(); ++p)
      buckets_[bucket_of(points[p])].push_back(static_cast<Index>(p));
  }

  /// Indices of the k nearest neighbours of point p (p excluded), ordered by
  /// (squared distance, index).
  std::vector<Index> nearest(Index p, int k) const {
    const auto& q = points_[p];
    std::array<Index, 3> home = cell_of(q);
    std::vector<std::pair<double, Index>> best;
    Index max_ring = 0;
    for (int a = 0; a < dim_; ++a) max_ring = std::max(max_ring, cells_[a]);
    for (Index ring = 0; ring <= max_ring; ++ring) {
      if (static_cast<int>(best.size()) >= k) {
        // Any point in a farther ring is at least (ring-1)*min_width away.
        const double bound = static_cast<double>(ring - 1) * min_width_;
        if (bound > 0.0 && bound * bound > best[k - 1].first) break;
      }
      visit_ring(home, ring, [&](Index bucket) {
        for (Index cand : buckets_[bucket]) {
          if (cand == p) continue;
          double d2 = 0.0;
          for (int a = 0; a < dim_; ++a) {
            const double diff = points_[cand][a] - q[a];
            d2 += diff * diff;
          }
          best.emplace_back(d2, cand);
        }
      });
      std::sort(best.begin(), best.end());
      if (static_cast<int>(best.size()) > k)
        best.resize(static_cast<std::size_t>(k));
    }
    if (static_cast<int>(best.size()) < k)
      throw MsError("knn: fewer candidate points than requested neighbours");
    std::vector<Index> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out[i] = best[i].second;
    return out;
  }

private:
  std::array<Index, 3> cell_of(const std::array<double, 3>& x) const {
    std::array<Index, 3> c = {0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
      c[k] = static_cast<Index>(x[k] / width_[k]);
      c[k] = std::clamp<Index>(c[k], 0, cells_[k] - 1);
    }
    return c;
  }

  std::size_t bucket_of(const std::array<double, 3>& x) const {
    const auto c = cell_of(x);
    return static_cast<std::size_t>(c[0] + cells_[0] * (c[1] + cells_[1] * c[2]));
  }

  template <class Fn>
  void visit_ring(const std::array<Index, 3>& home, Index ring, Fn&& fn) const {
    std::array<Index, 3> lo, hi;
    for (int k = 0; k < 3; ++k) {
      lo[k] = k < dim_ ? std::max<Index>(0, home[k] - ring) : 0;
      hi[k] = k < dim_ ? std::min<Index>(cells_[k] - 1, home[k] + ring) : 0;
    }
    std::array<Index, 3> c;
    for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
      for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1]) {
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0]) {
          Index cheb = 0;
          for (int k = 0; k < dim_; ++k)
            cheb = std::max(cheb, std::abs(c[k] - home[k]));
          if (cheb != ring) continue;
          fn(static_cast<Index>(c[0] + cells_[0] * (c[1] + cells_[1] * c[2])));
        }
      }
    }
  }

  const std::vector<std::array<double, 3>>& points_;
  int dim_;
  std::array<Index, 3> cells_ = {1, 1, 1};
  std::array<double, 3> width_ = {1.0, 1.0, 1.0};
  double min_width_ = 1.0;
  std::vector<std::vector<Index>> buckets_;
};

Network build_unstructured(const GeneratorConfig& cfg) {
  if (cfg.n_points < 2)
    throw MsError(fmt::format("unstructured family needs n_points >= 2, got {}",
                              cfg.n_points));
  const int knn = cfg.knn > 0 ? cfg.knn : (cfg.dim == 3 ? 8 : 6);
  if (knn >= cfg.n_points)
    throw MsError(fmt::format("knn = {} needs more than {} points", knn,
                              cfg.n_points));
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::array<double, 3>> points;
  points.reserve(static_cast<std::size_t>(cfg.n_points));
  std::map<std::array<double, 3>, Index> seen;
  for (Index p = 0; p < cfg.n_points; ++p) {
    std::array<double, 3> x = {0.0, 0.0, 0.0};
    bool fresh = false;
    for (int attempt = 0; attempt < 64 && !fresh; ++attempt) {
      for (int k = 0; k < cfg.dim; ++k)
        x[k] = uniform_double(rng, 0.0, cfg.box[k]);
      fresh = seen.emplace(x, p).second;
    }
    if (!fresh) throw MsError("unstructured: could not draw distinct points");
    points.push_back(x);
  }

  const BucketGrid grid(points, cfg.dim, cfg.box);
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(cfg.n_points) * knn);
  for (Index p = 0; p < cfg.n_points; ++p) {
    for (Index q : grid.nearest(p, knn))
      pairs.emplace_back(std::min(p, q), std::max(p, q));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  Network net;
  net.dim = cfg.dim;
  net.box = cfg.box;
  net.nodes.resize(points.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    net.nodes[p].coords = points[p];
  net.edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) net.edges.push_back({a, b, 1.0, {}, {}});

  const std::vector<bool> keep_node(net.nodes.size(), true);
  const std::vector<bool> keep_edge(net.edges.size(), true);
  return trim_to_largest_component(net, keep_node, keep_edge, cfg.min_nodes);
}

const char* family_name(Family family) {
  switch (family) {
    case Family::structured_regular: return "structured_regular";
    case Family::structured_irregular: return "structured_irregular";
    case Family::unstructured: return "unstructured";
  }
  throw MsError("unknown family");
}

}  // namespace

Network generate_network(const GeneratorConfig& cfg) {
  if (cfg.dim != 2 && cfg.dim != 3)
    throw MsError(fmt::format("dim must be 2 or 3, got {}", cfg.dim));
  Network net;
  switch (cfg.family) {
    case Family::structured_regular:
      net = build_regular_lattice(cfg);
      break;
    case Family::structured_irregular:
      net = build_irregular_lattice(cfg);
      break;
    case Family::unstructured:
      net = build_unstructured(cfg);
      break;
  }
  net.generator = family_name(cfg.family);
  net.seed = cfg.seed;
  validate_network(net, /*require_connected=*/true);
  return net;
}

namespace {

double tube_capacity(double radius) {
  return (4.0 / 3.0) * std::numbers::pi * radius * radius * radius;
}

double tube_conductance(double radius, double mu, double length) {
  return std::numbers::pi * radius * radius * radius * radius /
         (8.0 * mu * length);
}

double clamped_length(const Network& net, const EdgeRecord& e) {
  double min_box = net.box[0];
  for (int k = 1; k < net.dim; ++k) min_box = std::min(min_box, net.box[k]);
  const double floor_len = 1e-12 * min_box;
  const double dist = net.edge_distance(e);
  if (!(floor_len > 0.0))
    throw MsError("degenerate box: cannot clamp edge lengths");
  return std::max(dist, floor_len);
}

void apply_tube_properties(Network& net, const std::vector<double>& node_diam,
                           const std::vector<double>& throat_diam, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw MsError(fmt::format("viscosity must be finite positive, got {}", mu));
  for (Index i = 0; i < net.n_nodes(); ++i) {
    const double r = 0.5 * node_diam[i];
    net.nodes[i].radius = r;
    net.nodes[i].capacity = tube_capacity(r);
  }
  for (Index e = 0; e < net.n_edges(); ++e) {
    auto& edge = net.edges[e];
    const double r = 0.5 * throat_diam[e];
    edge.radius = r;
    edge.length = clamped_length(net, edge);
    edge.weight = tube_conductance(r, mu, *edge.length);
  }
}

}  // namespace

void assign_poiseuille(Network& net, const PropertyConfig& cfg) {
  if (!(cfg.d_min > 0.0) || !(cfg.d_max >= cfg.d_min))
    throw MsError(fmt::format("diameter range [{}, {}] is invalid", cfg.d_min,
                              cfg.d_max));
  std::mt19937_64 node_rng(cfg.seed);
  std::vector<double> node_diam(static_cast<std::size_t>(net.n_nodes()));
  for (auto& d : node_diam) d = uniform_double(node_rng, cfg.d_min, cfg.d_max);

  std::vector<double> throat_diam(static_cast<std::size_t>(net.n_edges()));
  if (cfg.throat == ThroatRule::random_uniform) {
    // Separate stream: the throat draw count must not disturb node draws.
    std::mt19937_64 edge_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
    for (auto& d : throat_diam)
      d = uniform_double(edge_rng, cfg.d_min, cfg.d_max);
  } else {
    for (Index e = 0; e < net.n_edges(); ++e) {
      const double da = node_diam[net.edges[e].head];
      const double db = node_diam[net.edges[e].tail];
      throat_diam[e] = 2.0 * da * db / (da + db);
    }
  }
  apply_tube_properties(net, node_diam, throat_diam, cfg.mu);
}

void assign_high_contrast(Network& net, const PropertyConfig& cfg) {
  if (cfg.boxes.empty())
    throw MsError("high-contrast assignment needs at least one box");
  if (!(cfg.d_out > 0.0))
    throw MsError(fmt::format("d_out must be positive, got {}", cfg.d_out));
  for (const auto& b : cfg.boxes)
    if (!(b.d_in > 0.0))
      throw MsError("contrast box diameter must be positive");

  std::vector<double> node_diam(static_cast<std::size_t>(net.n_nodes()));
  for (Index i = 0; i < net.n_nodes(); ++i) {
    const auto& x = net.nodes[i].coords;
    double d = cfg.d_out;
    for (const auto& b : cfg.boxes) {
      bool inside = true;
      for (int k = 0; k < net.dim; ++k)
        inside = inside && x[k] >= b.lo[k] && x[k] <= b.hi[k];
      if (inside) {
        d = b.d_in;  // first matching box wins
        break;
      }
    }
    node_diam[i] = d;
  }
  std::vector<double> throat_diam(static_cast<std::size_t>(net.n_edges()));
  for (Index e = 0; e < net.n_edges(); ++e) {
    const double da = node_diam[net.edges[e].head];
    const double db = node_diam[net.edges[e].tail];
    throat_diam[e] = 2.0 * da * db / (da + db);
  }
  apply_tube_properties(net, node_diam, throat_diam, cfg.mu);
}

namespace {

struct Raster {
  int dim = 2;
  std::array<Index, 3> cells = {1, 1, 1};
  std::array<double, 3> box = {1.0, 1.0, 1.0};
  std::vector<double> capacity;
  std::vector<double> weight_scale;

  Index cell_count() const { return cells[0] * cells[1] * cells[2]; }

  Index cell_of(const std::array<double, 3>& x,
                const std::string& context) const {
    Index flat = 0;
    Index stride = 1;
    for (int k = 0; k < dim; ++k) {
      const double w = box[k] / static_cast<double>(cells[k]);
      if (x[k] < -1e-12 * box[k] || x[k] > box[k] * (1.0 + 1e-12))
        throw MsError(fmt::format("{}: point coordinate {} outside raster box",
                                  context, x[k]));
      Index c = static_cast<Index>(x[k] / w);
      c = std::clamp<Index>(c, 0, cells[k] - 1);
      flat += stride * c;
      stride *= cells[k];
    }
    return flat;
  }
};

std::vector<std::string_view> whitespace_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Raster load_raster(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  auto ctx = [&](std::size_t ln) {
    return fmt::format("{}:{}", file.string(), ln + 1);
  };
  if (lines.empty()) throw MsError(fmt::format("{}: empty raster", file.string()));

  Raster r;
  const auto header = whitespace_tokens(lines[0]);
  if (header.empty())
    throw MsError(fmt::format("{}: missing header", ctx(0)));
  r.dim = static_cast<int>(parse_index(header[0], ctx(0)));
  if (r.dim != 2 && r.dim != 3)
    throw MsError(fmt::format("{}: raster dim must be 2 or 3, got {}", ctx(0),
                              r.dim));
  if (static_cast<int>(header.size()) != r.dim + 1)
    throw MsError(fmt::format("{}: expected {} cell counts", ctx(0), r.dim));
  for (int k = 0; k < r.dim; ++k) {
    r.cells[k] = parse_index(header[k + 1], ctx(0));
    if (r.cells[k] <= 0)
      throw MsError(fmt::format("{}: cell count must be positive", ctx(0)));
  }
  if (lines.size() < 2)
    throw MsError(fmt::format("{}: missing box line", ctx(0)));
  const auto box_tokens = whitespace_tokens(lines[1]);
  if (static_cast<int>(box_tokens.size()) != r.dim)
    throw MsError(fmt::format("{}: expected {} box lengths", ctx(1), r.dim));
  for (int k = 0; k < r.dim; ++k) {
    r.box[k] = parse_real(box_tokens[k], ctx(1));
    if (!(r.box[k] > 0.0))
      throw MsError(fmt::format("{}: box length must be positive", ctx(1)));
  }
  const Index count = r.cell_count();
  const std::size_t needed = 2 + 2 * static_cast<std::size_t>(count);
  // Trailing blank lines are tolerated; anything else must parse.
  std::size_t usable = lines.size();
  while (usable > 0 && lines[usable - 1].empty()) --usable;
  if (usable < needed)
    throw MsError(fmt::format("{}: truncated raster, expected {} value lines, found {}",
                              file.string(), 2 * count, usable - 2));
  if (usable > needed)
    throw MsError(fmt::format("{}: {} extra lines after raster data",
                              file.string(), usable - needed));
  r.capacity.reserve(static_cast<std::size_t>(count));
  r.weight_scale.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const std::size_t ln = 2 + static_cast<std::size_t>(i);
    r.capacity.push_back(parse_real(lines[ln], ctx(ln)));
    if (!(r.capacity.back() > 0.0))
      throw MsError(fmt::format("{}: capacity must be positive", ctx(ln)));
  }
  for (Index i = 0; i < count; ++i) {
    const std::size_t ln = 2 + static_cast<std::size_t>(count + i);
    r.weight_scale.push_back(parse_real(lines[ln], ctx(ln)));
    if (!(r.weight_scale.back() > 0.0))
      throw MsError(fmt::format("{}: weight scale must be positive", ctx(ln)));
  }
  return r;
}

}  // namespace

void load_coefficient_field(Network& net, const std::filesystem::path& file,
                            RasterApply mode) {
  const Raster raster = load_raster(file);
  if (raster.dim != net.dim)
    throw MsError(fmt::format("raster dim {} does not match network dim {}",
                              raster.dim, net.dim));
  const std::string ctx = file.string();
  std::vector<double> sample(static_cast<std::size_t>(net.n_nodes()));
  std::vector<double> cap(static_cast<std::size_t>(net.n_nodes()));
  for (Index i = 0; i < net.n_nodes(); ++i) {
    const Index cell = raster.cell_of(net.nodes[i].coords, ctx);
    sample[i] = raster.weight_scale[cell];
    cap[i] = raster.capacity[cell];
  }
  if (mode != RasterApply::weight_only) {
    for (Index i = 0; i < net.n_nodes(); ++i) net.nodes[i].capacity = cap[i];
  }
  if (mode != RasterApply::capacity_only) {
    for (auto& e : net.edges) {
      const double a = sample[e.head];
      const double b = sample[e.tail];
      const double harmonic = 2.0 * a * b / (a + b);
      const double length = e.length ? *e.length : clamped_length(net, e);
      const double area =
          e.radius ? std::numbers::pi * (*e.radius) * (*e.radius) : 1.0;
      e.weight = harmonic * area / length;
    }
  }
}

void label_boundaries(Network& net, double tol) {
  static const char* kLow2[] = {"left", "bottom"};
  static const char* kHigh2[] = {"right", "top"};
  static const char* kLow3[] = {"left", "front", "bottom"};
  static const char* kHigh3[] = {"right", "back", "top"};
  for (int k = 0; k < net.dim; ++k) {
    const double t = tol > 0.0 ? tol : 1e-9 * net.box[k];
    const char* lo = net.dim == 3 ? kLow3[k] : kLow2[k];
    const char* hi = net.dim == 3 ? kHigh3[k] : kHigh2[k];
    for (auto& node : net.nodes) {
      if (node.coords[k] <= t) node.add_label(lo);
      if (node.coords[k] >= net.box[k] - t) node.add_label(hi);
    }
  }
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace msnet {

namespace {

using nlohmann::json;

constexpr int kMetaFormatVersion = 1;

std::string serialize_nodes(const Network& net) {
  std::string out;
  out += net.dim == 3 ? "id,x,y,z,capacity,radius,labels\n"
                      : "id,x,y,capacity,radius,labels\n";
  for (Index i = 0; i < net.n_nodes(); ++i) {
    const auto& node = net.nodes[i];
    out += fmt::format("{},{},{}", i, format_real(node.coords[0]),
                       format_real(node.coords[1]));
    if (net.dim == 3) out += "," + format_real(node.coords[2]);
    out += "," + format_real(node.capacity);
    out += ",";
    if (node.radius) out += format_real(*node.radius);
    out += ",";
    for (std::size_t l = 0; l < node.labels.size(); ++l) {
      if (l > 0) out += ";";
      out += node.labels[l];
    }
    out += "\n";
  }
  return out;
}

std::string serialize_edges(const Network& net) {
  std::string out = "head,tail,weight,length,radius\n";
  for (const auto& e : net.edges) {
    out += fmt::format("{},{},{}", e.head, e.tail, format_real(e.weight));
    out += ",";
    if (e.length) out += format_real(*e.length);
    out += ",";
    if (e.radius) out += format_real(*e.radius);
    out += "\n";
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

/// Splits into LF-terminated lines; a trailing CR (CRLF input) is stripped.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MsError(fmt::format("cannot open '{}'", file.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof())
    throw MsError(fmt::format("read error on '{}'", file.string()));
  return buf.str();
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw MsError(fmt::format("cannot open '{}'", file.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out.good())
    throw MsError(fmt::format("write error on '{}'", file.string()));
}

void save_network(const Network& net, const std::filesystem::path& dir) {
  validate_network(net);
  std::filesystem::create_directories(dir);
  write_file(dir / "nodes.csv", serialize_nodes(net));
  write_file(dir / "edges.csv", serialize_edges(net));
  json meta;
  meta["format_version"] = kMetaFormatVersion;
  meta["dim"] = net.dim;
  meta["box"] = net.dim == 3
                    ? json::array({net.box[0], net.box[1], net.box[2]})
                    : json::array({net.box[0], net.box[1]});
  meta["generator"] = net.generator;
  meta["seed"] = net.seed;
  meta["counts"] = {{"nodes", net.n_nodes()}, {"edges", net.n_edges()}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

Network load_network(const std::filesystem::path& dir) {
  Network net;
  const auto meta_path = dir / "meta.json";
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw MsError(fmt::format("{}: {}", meta_path.string(), e.what()));
  }
  try {
    net.dim = meta.at("dim").get<int>();
    const auto box = meta.at("box");
    if (static_cast<int>(box.size()) != net.dim)
      throw MsError(fmt::format("meta.json: box has {} entries for dim {}",
                                box.size(), net.dim));
    for (int k = 0; k < net.dim; ++k) net.box[k] = box[k].get<double>();
    if (meta.contains("generator"))
      net.generator = meta["generator"].get<std::string>();
    if (meta.contains("seed")) net.seed = meta["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw MsError(fmt::format("{}: {}", meta_path.string(), e.what()));
  }

  const auto nodes_path = dir / "nodes.csv";
  const std::string nodes_text = read_file(nodes_path);
  const auto node_lines = split_lines(nodes_text);
  const std::string node_header = net.dim == 3
                                      ? "id,x,y,z,capacity,radius,labels"
                                      : "id,x,y,capacity,radius,labels";
  if (node_lines.empty() || node_lines[0] != node_header)
    throw MsError(fmt::format("{}:1: expected header '{}'",
                              nodes_path.string(), node_header));
  const std::size_t n_fields = net.dim == 3 ? 7 : 6;
  for (std::size_t ln = 1; ln < node_lines.size(); ++ln) {
    const auto ctx = fmt::format("{}:{}", nodes_path.string(), ln + 1);
    const auto fields = split_fields(node_lines[ln]);
    if (fields.size() != n_fields)
      throw MsError(fmt::format("{}: expected {} fields, got {}", ctx,
                                n_fields, fields.size()));
    const Index id = parse_index(fields[0], ctx);
    if (id != static_cast<Index>(ln - 1))
      throw MsError(fmt::format("{}: node id {} out of order", ctx, id));
    NodeRecord node;
    std::size_t f = 1;
    for (int k = 0; k < net.dim; ++k)
      node.coords[k] = parse_real(fields[f++], ctx);
    node.capacity = parse_real(fields[f++], ctx);
    if (!fields[f].empty()) node.radius = parse_real(fields[f], ctx);
    ++f;
    std::string_view labels = fields[f];
    while (!labels.empty()) {
      std::size_t semi = labels.find(';');
      std::string_view token =
          semi == std::string_view::npos ? labels : labels.substr(0, semi);
      if (token.empty())
        throw MsError(fmt::format("{}: empty label token", ctx));
      node.add_label(std::string(token));
      if (semi == std::string_view::npos) break;
      labels.remove_prefix(semi + 1);
    }
    net.nodes.push_back(std::move(node));
  }
  if (meta.contains("counts")) {
    const auto want = meta["counts"].value("nodes", Index{-1});
    if (want >= 0 && want != net.n_nodes())
      throw MsError(fmt::format("{}: meta.json declares {} nodes, file has {}",
                                nodes_path.string(), want, net.n_nodes()));
  }

  const auto edges_path = dir / "edges.csv";
  const std::string edges_text = read_file(edges_path);
  const auto edge_lines = split_lines(edges_text);
  if (edge_lines.empty() || edge_lines[0] != "head,tail,weight,length,radius")
    throw MsError(fmt::format("{}:1: expected header 'head,tail,weight,length,radius'",
                              edges_path.string()));
  for (std::size_t ln = 1; ln < edge_lines.size(); ++ln) {
    const auto ctx = fmt::format("{}:{}", edges_path.string(), ln + 1);
    const auto fields = split_fields(edge_lines[ln]);
    if (fields.size() != 5)
      throw MsError(fmt::format("{}: expected 5 fields, got {}", ctx,
                                fields.size()));
    EdgeRecord e;
    e.head = parse_index(fields[0], ctx);
    e.tail = parse_index(fields[1], ctx);
    e.weight = parse_real(fields[2], ctx);
    if (!fields[3].empty()) e.length = parse_real(fields[3], ctx);
    if (!fields[4].empty()) e.radius = parse_real(fields[4], ctx);
    net.edges.push_back(e);
  }
  if (meta.contains("counts")) {
    const auto want = meta["counts"].value("edges", Index{-1});
    if (want >= 0 && want != net.n_edges())
      throw MsError(fmt::format("{}: meta.json declares {} edges, file has {}",
                                edges_path.string(), want, net.n_edges()));
  }

  validate_network(net);
  return net;
}

std::string network_hash(const std::filesystem::path& dir) {
  Fnv1a hash;
  hash.update(read_file(dir / "nodes.csv"));
  hash.update(read_file(dir / "edges.csv"));
  return hash.hex_digest();
}

std::string network_hash(const Network& net) {
  Fnv1a hash;
  hash.update(serialize_nodes(net));
  hash.update(serialize_edges(net));
  return hash.hex_digest();
}

void save_solution(const std::vector<double>& u,
                   const std::filesystem::path& file) {
  std::string out = "id,value\n";
  for (std::size_t i = 0; i < u.size(); ++i)
    out += fmt::format("{},{}\n", i, format_real(u[i]));
  write_file(file, out);
}

std::vector<double> load_solution(const std::filesystem::path& file) {
  const std::string text = read_file(file);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "id,value")
    throw MsError(fmt::format("{}:1: expected header 'id,value'", file.string()));
  std::vector<double> u;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto ctx = fmt::format("{}:{}", file.string(), ln + 1);
    const auto fields = split_fields(lines[ln]);
    if (fields.size() != 2)
      throw MsError(fmt::format("{}: expected 2 fields", ctx));
    const Index id = parse_index(fields[0], ctx);
    if (id != static_cast<Index>(ln - 1))
      throw MsError(fmt::format("{}: id {} out of order", ctx, id));
    u.push_back(parse_real(fields[1], ctx));
  }
  return u;
}

}  // namespace msnet

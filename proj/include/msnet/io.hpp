// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msnet/network.hpp"

namespace msnet {

/**
 * @brief Writes nodes.csv, edges.csv, and meta.json into a directory.
 *
 * nodes.csv:  id,x,y[,z],capacity,radius,labels  (labels ';'-separated,
 *             radius empty when absent). edges.csv: head,tail,weight,length,
 *             radius (length/radius empty when absent). All reals use 17
 *             significant digits; lines end with LF. meta.json records dim,
 *             box, generator, seed, and node/edge counts.
 *
 * The directory is created when missing. Throws MsError on I/O failure.
 */
void save_network(const Network& net, const std::filesystem::path& dir);

/// Loads a network saved by save_network. Throws MsError with the file name
/// and line number on malformed input; validates the result structurally.
Network load_network(const std::filesystem::path& dir);

/// FNV-1a digest over the bytes of nodes.csv then edges.csv, as stored.
/// Identifies the network a basis was built for.
std::string network_hash(const std::filesystem::path& dir);

/// Same digest computed from an in-memory network (serializes to the same
/// byte stream save_network writes).
std::string network_hash(const Network& net);

/// Writes a nodal vector as "id,value" CSV (17 significant digits, LF).
void save_solution(const std::vector<double>& u,
                   const std::filesystem::path& file);

/// Loads an "id,value" CSV; ids must be 0..n-1 in order.
std::vector<double> load_solution(const std::filesystem::path& file);

/// Reads a whole file into a string; throws MsError when unreadable.
std::string read_file(const std::filesystem::path& file);

/// Writes a string to a file atomically enough for our purposes (truncate
/// then write); throws MsError on failure.
void write_file(const std::filesystem::path& file, const std::string& text);

}  // namespace msnet

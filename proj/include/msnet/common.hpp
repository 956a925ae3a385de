// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

/// Multiscale solvers for diffusion on weighted networks.
namespace msnet {

/// Signed index type used for node, edge, and matrix indices.
using Index = std::int64_t;

/// Error type thrown by all library operations on contract violations.
class MsError : public std::runtime_error {
public:
  explicit MsError(const std::string& what) : std::runtime_error(what) {}
};

/// Writes a warning line to stderr, prefixed with "[warn]".
void warn(const std::string& message);

/// Writes an informational line to stderr, prefixed with "[info]".
void info(const std::string& message);

/// Formats a real number with 17 significant digits (shortest round-trip
/// superset), locale-independent. Used for every real written to disk.
std::string format_real(double value);

/// Formats with a given significant-digit count (display tables only).
std::string format_real(double value, int significant_digits);

/// Parses a real number from a full string_view; throws MsError on trailing
/// garbage, empty input, or out-of-range values.
double parse_real(std::string_view text, std::string_view context);

/// Parses a non-negative integer; same error contract as parse_real.
Index parse_index(std::string_view text, std::string_view context);

/// FNV-1a 64-bit hash, seeded with the standard offset basis.
class Fnv1a {
public:
  void update(const void* data, std::size_t size);
  void update(std::string_view text) { update(text.data(), text.size()); }
  std::uint64_t digest() const { return state_; }
  /// Digest as a fixed-width lowercase hex string.
  std::string hex_digest() const;

private:
  std::uint64_t state_ = 1469598103934665603ull;
};

/// Draws a uniform double in [0, 1) from the upper 53 bits of the engine.
/// std::uniform_real_distribution is implementation-defined; this is not.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_double(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(rng);
}

}  // namespace msnet

// Copyright (c) 2026, the msnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "msnet/common.hpp"

#include <fmt/format.h>

#include <array>
#include <cstdio>

namespace msnet {

void warn(const std::string& message) {
  std::fputs(("[warn] " + message + "\n").c_str(), stderr);
}

void info(const std::string& message) {
  std::fputs(("[info] " + message + "\n").c_str(), stderr);
}

std::string format_real(double value, int significant_digits) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                           std::chars_format::general, significant_digits);
  if (res.ec != std::errc()) throw MsError("number formatting failed");
  return std::string(buf.data(), res.ptr);
}

std::string format_real(double value) { return format_real(value, 17); }

double parse_real(std::string_view text, std::string_view context) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw MsError(fmt::format("{}: cannot parse real number from '{}'",
                              context, std::string(text)));
  }
  return value;
}

Index parse_index(std::string_view text, std::string_view context) {
  Index value = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      value < 0) {
    throw MsError(fmt::format(
        "{}: cannot parse non-negative integer from '{}'", context,
        std::string(text)));
  }
  return value;
}

void Fnv1a::update(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = state_;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<std::uint64_t>(bytes[i]);
    h *= 1099511628211ull;
  }
  state_ = h;
}

std::string Fnv1a::hex_digest() const {
  return fmt::format("{:016x}", state_);
}

}  // namespace msnet

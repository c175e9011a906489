// Copyright 2026 The uwpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian scalar encoding for the checkpoint and codebook containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "uwpose/error.hpp"

namespace uwpose::detail {

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw DataError("truncated binary file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline void put_u32(std::ostream& o, std::uint32_t v) { put_le(o, v); }
inline void put_u64(std::ostream& o, std::uint64_t v) { put_le(o, v); }
inline void put_f64(std::ostream& o, double v) { put_le(o, std::bit_cast<std::uint64_t>(v)); }
inline void put_f32(std::ostream& o, float v) { put_le(o, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::istream& i) { return get_le<std::uint32_t>(i); }
inline std::uint64_t get_u64(std::istream& i) { return get_le<std::uint64_t>(i); }
inline double get_f64(std::istream& i) { return std::bit_cast<double>(get_le<std::uint64_t>(i)); }
inline float get_f32(std::istream& i) { return std::bit_cast<float>(get_le<std::uint32_t>(i)); }

inline void put_bytes(std::ostream& o, const std::string& s) {
  put_u32(o, static_cast<std::uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_bytes(std::istream& in, std::size_t limit = 1 << 24) {
  const std::uint32_t n = get_u32(in);
  if (n > limit) throw DataError("corrupt length field");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("truncated binary file");
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[9], const std::string& path) {
  char buf[8];
  if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) {
    throw DataError(path + ": bad magic bytes");
  }
}

}  // namespace uwpose::detail

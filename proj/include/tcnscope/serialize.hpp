#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

// Binary tensor layout: u64 rank, rank × u64 extents, then size × f64 values,
// all little-endian.

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw DataError("tensor stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
  detail::put_u64(os, t.rank());
  for (auto e : t.shape()) detail::put_u64(os, e);
  for (double v : t.values()) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw DataError("failed writing tensor");
}

inline Tensor read_tensor(std::istream& is) {
  const auto rank = detail::get_u64(is);
  if (rank == 0 || rank > 16) throw DataError("tensor stream has invalid rank " + std::to_string(rank));
  Tensor::Shape shape(rank);
  for (auto& e : shape) e = static_cast<std::size_t>(detail::get_u64(is));
  Tensor t(shape);
  for (auto& v : t.values()) v = std::bit_cast<double>(detail::get_u64(is));
  return t;
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace tcnscope

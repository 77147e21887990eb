#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "spdlab/errors.hpp"
#include "spdlab/parameters.hpp"

namespace spdlab {
namespace io {

// All on-disk integers and doubles are little-endian. Format:
//   magic "SPDLPAR1" (8 bytes)
//   u32 entry count
//   per entry: u32 name len, name bytes, u32 rank, u64 extents..., f64 values...
inline constexpr char kParamMagic[8] = {'S', 'P', 'D', 'L', 'P', 'A', 'R', '1'};

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("unexpected end of stream (u32)");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("unexpected end of stream (u64)");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& is) {
  std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  std::uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw IoError("unexpected end of stream (string)");
  return s;
}

}  // namespace io

inline void write_parameters(std::ostream& os, const ParameterSet& params) {
  os.write(io::kParamMagic, 8);
  io::put_u32(os, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Array& a = params.value_at(i);
    io::put_string(os, params.name_at(i));
    io::put_u32(os, static_cast<std::uint32_t>(a.rank()));
    for (std::size_t d = 0; d < a.rank(); ++d) io::put_u64(os, a.extent(d));
    for (double v : a.values()) io::put_f64(os, v);
  }
}

inline ParameterSet read_parameters(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, io::kParamMagic, 8) != 0)
    throw IoError("parameter blob: bad magic header");
  ParameterSet params;
  const std::uint32_t n = io::get_u32(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = io::get_string(is);
    const std::uint32_t rank = io::get_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(io::get_u64(is));
    Array a(shape);
    for (auto& v : a.values()) v = io::get_f64(is);
    params.add(name, std::move(a));
  }
  return params;
}

inline void save_parameters(const std::string& path, const ParameterSet& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write_parameters(f, params);
}

inline ParameterSet load_parameters(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return read_parameters(f);
}

inline std::string parameters_to_string(const ParameterSet& params) {
  std::ostringstream os(std::ios::binary);
  write_parameters(os, params);
  return os.str();
}

}  // namespace spdlab

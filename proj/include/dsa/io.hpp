#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dsa/graph.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] inline void io_fail(const std::filesystem::path& p,
                                 const std::string& what) {
  throw std::runtime_error(what + ": " + p.string());
}

// FMAP v1: line 1 = "C H W", then C*H*W whitespace-separated decimal reals
// in row-major (c, y, x) order.
inline void write_fmap(const std::filesystem::path& path,
                       const FeatureMap& f) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  out << f.channels << ' ' << f.height << ' ' << f.width << '\n';
  for (int c = 0; c < f.channels; ++c)
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        if (x) out << ' ';
        out << format_double(f.at(c, y, x));
      }
      out << '\n';
    }
  if (!out) io_fail(path, "write failure");
}

inline FeatureMap read_fmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open");
  int c = 0, h = 0, w = 0;
  if (!(in >> c >> h >> w) || c <= 0 || h <= 0 || w <= 0)
    io_fail(path, "malformed FMAP header");
  FeatureMap f(c, h, w);
  for (auto& v : f.data)
    if (!(in >> v)) io_fail(path, "truncated FMAP data");
  return f;
}

// PGM P2, values scaled to 0..255 by the per-file maximum.
inline void write_pgm(const std::filesystem::path& path,
                      const std::vector<double>& vals, int h, int w) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  double mx = 0.0;
  for (double v : vals) mx = std::max(mx, v);
  out << "P2\n" << w << ' ' << h << "\n255\n";
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x) out << ' ';
      const double v = vals[static_cast<size_t>(y) * w + x];
      out << (mx > 0.0 ? int(v / mx * 255.0 + 0.5) : 0);
    }
    out << '\n';
  }
  if (!out) io_fail(path, "write failure");
}

inline void write_csv_matrix(const std::filesystem::path& path,
                             const Matrix& m) {
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << format_double(m.at(i, j));
    }
    out << '\n';
  }
  if (!out) io_fail(path, "write failure");
}

inline Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) io_fail(path, "cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      row.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) io_fail(path, "empty CSV");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i) {
    if (static_cast<int>(rows[i].size()) != m.cols)
      io_fail(path, "ragged CSV");
    for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

// ---------------------------------------------------------------------------
// checkpoint: versioned header + named parameter list, 64-bit little-endian
// reals. Encoding is explicit byte packing, so files are portable.

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& s, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& s;
  size_t pos = 0;
  std::uint32_t u32() {
    if (pos + 4 > s.size()) throw std::runtime_error("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(static_cast<unsigned char>(s[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    if (pos + 8 > s.size()) throw std::runtime_error("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(static_cast<unsigned char>(s[pos++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string bytes(size_t n) {
    if (pos + n > s.size()) throw std::runtime_error("checkpoint truncated");
    std::string out = s.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace detail

constexpr char kCheckpointMagic[] = "DSACKPT1";

inline void save_checkpoint(const std::filesystem::path& path,
                            const ParamStore& ps) {
  std::string buf(kCheckpointMagic, 8);
  detail::put_u32(buf, static_cast<std::uint32_t>(ps.order.size()));
  for (const auto& name : ps.order) {
    const Tensor& t = ps.values.at(name);
    detail::put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    detail::put_u32(buf, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) detail::put_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : t.data) detail::put_f64(buf, v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) io_fail(path, "write failure");
}

inline ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  detail::ByteReader r{buf};
  if (r.bytes(8) != std::string(kCheckpointMagic, 8))
    io_fail(path, "not a checkpoint file");
  const std::uint32_t count = r.u32();
  ParamStore ps;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const std::uint32_t ndims = r.u32();
    std::vector<int> shape(ndims);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    Tensor t(shape);
    for (auto& v : t.data) v = r.f64();
    ps.add(name, std::move(t));
  }
  return ps;
}

}  // namespace dsa

// SPDX-License-Identifier: Apache-2.0
#include "core/serialize.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace fw {

void write_u64_le(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) raise(Status::IoError, "unexpected end of stream reading u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64_le(std::ostream& out, double v) { write_u64_le(out, std::bit_cast<std::uint64_t>(v)); }

double read_f64_le(std::istream& in) { return std::bit_cast<double>(read_u64_le(in)); }

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64_le(out, m.rows);
  write_u64_le(out, m.cols);
  for (double x : m.data) write_f64_le(out, x);
}

Matrix read_matrix(std::istream& in) {
  const std::uint64_t rows = read_u64_le(in);
  const std::uint64_t cols = read_u64_le(in);
  if (rows != 0 && cols > (1ull << 32) / rows) raise(Status::IoError, "matrix header implausibly large");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (double& x : m.data) x = read_f64_le(in);
  return m;
}

void write_vector(std::ostream& out, const Vector& v) {
  write_u64_le(out, v.size());
  write_u64_le(out, 1);
  for (double x : v) write_f64_le(out, x);
}

Vector read_vector(std::istream& in) {
  Matrix m = read_matrix(in);
  if (m.cols != 1) raise(Status::IoError, "expected a len x 1 matrix for a vector");
  return m.data;
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Status::IoError, "cannot open for writing: " + path);
  write_matrix(out, m);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Status::IoError, "cannot open for reading: " + path);
  return read_matrix(in);
}

}  // namespace fw

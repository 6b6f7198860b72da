// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "core/linalg.hpp"

namespace fw {

// Binary matrix format: little-endian u64 rows, u64 cols, then rows*cols
// little-endian IEEE-754 f64 values in row-major order. Vectors are stored
// as len x 1 matrices. Encoding is byte-explicit, independent of host
// endianness.

void write_u64_le(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64_le(std::istream& in);
void write_f64_le(std::ostream& out, double v);
double read_f64_le(std::istream& in);

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void write_vector(std::ostream& out, const Vector& v);
Vector read_vector(std::istream& in);

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace fw

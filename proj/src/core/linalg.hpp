// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core/error.hpp"

namespace fw {

using Vector = std::vector<double>;

// Dense f64 matrix, row-major. Row-major layout is fixed so serialized
// weights mean the same thing everywhere.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool empty() const { return data.empty(); }

  static Matrix identity(std::size_t n);

  bool operator==(const Matrix& other) const = default;
};

// v k^T, shape v.size() x k.size().
Matrix outer(const Vector& v, const Vector& k);

// m += scale * (v k^T)
void add_outer(Matrix& m, double scale, const Vector& v, const Vector& k);

// m x; throws ShapeMismatch when m.cols != x.size().
Vector matvec(const Matrix& m, const Vector& x);

// m^T y; throws ShapeMismatch when m.rows != y.size().
Vector matvec_t(const Matrix& m, const Vector& y);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm1(const Vector& v);

// y += a * x
void axpy(Vector& y, double a, const Vector& x);

void scale(Vector& v, double a);
void scale(Matrix& m, double a);
void add_inplace(Matrix& dst, const Matrix& src);
void add_inplace(Vector& dst, const Vector& src);

Vector concat(const Vector& a, const Vector& b);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

enum class Activation { Identity = 0, Tanh = 1, Relu = 2, SoftmaxOverOutput = 3 };

// Elementwise sigma(z); SoftmaxOverOutput normalises over the whole vector
// and is meant for classification heads only, never inside weight updates.
Vector activate(Activation a, const Vector& z);

// upstream^T * (d sigma / d z). Softmax is handled as a full
// Jacobian-vector product; the others are elementwise.
Vector activate_vjp(Activation a, const Vector& z, const Vector& upstream);

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace fw

// SPDX-License-Identifier: Apache-2.0
#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fw {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix outer(const Vector& v, const Vector& k) {
  Matrix m(v.size(), k.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vi = v[i];
    double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < k.size(); ++j) row[j] = vi * k[j];
  }
  return m;
}

void add_outer(Matrix& m, double scale, const Vector& v, const Vector& k) {
  if (m.rows != v.size() || m.cols != k.size())
    raise(Status::ShapeMismatch, "add_outer: " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                     " += " + std::to_string(v.size()) + " x " + std::to_string(k.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = scale * v[i];
    double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < k.size(); ++j) row[j] += s * k[j];
  }
}

Vector matvec(const Matrix& m, const Vector& x) {
  if (m.cols != x.size())
    raise(Status::ShapeMismatch, "matvec: matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                     ", vector has length " + std::to_string(x.size()));
  Vector y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + i * m.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_t(const Matrix& m, const Vector& y) {
  if (m.rows != y.size())
    raise(Status::ShapeMismatch, "matvec_t: matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                     ", vector has length " + std::to_string(y.size()));
  Vector x(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + i * m.cols;
    const double yi = y[i];
    for (std::size_t j = 0; j < m.cols; ++j) x[j] += row[j] * yi;
  }
  return x;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    raise(Status::ShapeMismatch, "dot: lengths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm1(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

void axpy(Vector& y, double a, const Vector& x) {
  if (y.size() != x.size())
    raise(Status::ShapeMismatch, "axpy: lengths " + std::to_string(y.size()) + " vs " + std::to_string(x.size()));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void scale(Vector& v, double a) {
  for (double& x : v) x *= a;
}

void scale(Matrix& m, double a) {
  for (double& x : m.data) x *= a;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  if (dst.rows != src.rows || dst.cols != src.cols) raise(Status::ShapeMismatch, "matrix add: shape mismatch");
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void add_inplace(Vector& dst, const Vector& src) {
  if (dst.size() != src.size()) raise(Status::ShapeMismatch, "vector add: length mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](double x) { return std::isfinite(x); });
}

static Vector softmax(const Vector& z) {
  Vector s(z.size());
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s[i] = std::exp(z[i] - m);
    sum += s[i];
  }
  for (double& x : s) x /= sum;
  return s;
}

Vector activate(Activation a, const Vector& z) {
  switch (a) {
    case Activation::Identity:
      return z;
    case Activation::Tanh: {
      Vector y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::tanh(z[i]);
      return y;
    }
    case Activation::Relu: {
      Vector y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = z[i] > 0.0 ? z[i] : 0.0;
      return y;
    }
    case Activation::SoftmaxOverOutput:
      if (z.empty()) raise(Status::ShapeMismatch, "softmax of empty vector");
      return softmax(z);
  }
  raise(Status::ConfigInvalid, "unknown activation");
}

Vector activate_vjp(Activation a, const Vector& z, const Vector& upstream) {
  if (z.size() != upstream.size()) raise(Status::ShapeMismatch, "activate_vjp: length mismatch");
  switch (a) {
    case Activation::Identity:
      return upstream;
    case Activation::Tanh: {
      Vector g(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double t = std::tanh(z[i]);
        g[i] = upstream[i] * (1.0 - t * t);
      }
      return g;
    }
    case Activation::Relu: {
      Vector g(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) g[i] = z[i] > 0.0 ? upstream[i] : 0.0;
      return g;
    }
    case Activation::SoftmaxOverOutput: {
      // J = diag(s) - s s^T is symmetric, so J^T u = s .* u - s (s . u).
      const Vector s = softmax(z);
      const double su = dot(s, upstream);
      Vector g(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) g[i] = s[i] * (upstream[i] - su);
      return g;
    }
  }
  raise(Status::ConfigInvalid, "unknown activation");
}

const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "ok";
    case Status::ShapeMismatch: return "shape_mismatch";
    case Status::EmptySequence: return "empty_sequence";
    case Status::RecordMismatch: return "record_mismatch";
    case Status::StrategyUnsupported: return "strategy_unsupported";
    case Status::ActionOutOfRange: return "action_out_of_range";
    case Status::SpecInvalid: return "spec_invalid";
    case Status::TokenOutOfRange: return "token_out_of_range";
    case Status::EmptyMask: return "empty_mask";
    case Status::NonFiniteGradient: return "non_finite_gradient";
    case Status::ConfigInvalid: return "config_invalid";
    case Status::IoError: return "io_error";
  }
  return "unknown";
}

}  // namespace fw

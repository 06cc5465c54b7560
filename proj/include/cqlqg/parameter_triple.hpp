#pragma once

#include "cqlqg/sym_core.hpp"

namespace cqlqg {

/// An element (R2, b, e) of the controller parameter space 𝕌 = 𝕊ₙ × ℝ^{n×m2}
/// × ℝ^{n×p1} with the direct-sum Frobenius inner product.
///
/// The same type carries controller parameters and Fréchet derivatives
/// (gradients, Hessian images, homotopy velocities), which all live in 𝕌.
struct ParameterTriple {
  Matrix R2;
  Matrix b;
  Matrix e;

  static ParameterTriple zero(int n, int m2, int p1);

  int n() const { return static_cast<int>(R2.rows()); }
  int m2() const { return static_cast<int>(b.cols()); }
  int p1() const { return static_cast<int>(e.cols()); }

  /// n(n+1)/2 + n·m2 + n·p1
  int dimension() const;

  double dot(const ParameterTriple& other) const;
  double norm() const;

  /// Isometric coordinates: diagonal of R2, then √2 × strict upper triangle
  /// (row by row), then b and e in column-major order. Euclidean inner product
  /// of coordinates equals the 𝕌 inner product.
  Vector to_vector() const;
  static ParameterTriple from_vector(const Vector& coords, int n, int m2,
                                     int p1);

  ParameterTriple& operator+=(const ParameterTriple& other);
  ParameterTriple& operator-=(const ParameterTriple& other);
  ParameterTriple& operator*=(double scale);
};

ParameterTriple operator+(ParameterTriple a, const ParameterTriple& b);
ParameterTriple operator-(ParameterTriple a, const ParameterTriple& b);
ParameterTriple operator*(double scale, ParameterTriple a);

using ControllerTriple = ParameterTriple;
using GradientTriple = ParameterTriple;

}  // namespace cqlqg

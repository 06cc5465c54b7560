#include "cqlqg/parameter_triple.hpp"

#include <cmath>

#include "cqlqg/errors.hpp"

namespace cqlqg {

ParameterTriple ParameterTriple::zero(int n, int m2, int p1) {
  return {Matrix::Zero(n, n), Matrix::Zero(n, m2), Matrix::Zero(n, p1)};
}

int ParameterTriple::dimension() const {
  const int k = n();
  return k * (k + 1) / 2 + k * m2() + k * p1();
}

double ParameterTriple::dot(const ParameterTriple& other) const {
  return frob(R2, other.R2) + frob(b, other.b) + frob(e, other.e);
}

double ParameterTriple::norm() const { return std::sqrt(dot(*this)); }

Vector ParameterTriple::to_vector() const {
  const int k = n();
  Vector out(dimension());
  int pos = 0;
  for (int i = 0; i < k; ++i) out(pos++) = R2(i, i);
  // Off-diagonal pairs are averaged so a slightly asymmetric R2 maps to the
  // coordinates of its symmetric part.
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      out(pos++) = M_SQRT2 * 0.5 * (R2(i, j) + R2(j, i));
    }
  }
  out.segment(pos, b.size()) = b.reshaped();
  pos += static_cast<int>(b.size());
  out.segment(pos, e.size()) = e.reshaped();
  return out;
}

ParameterTriple ParameterTriple::from_vector(const Vector& coords, int n,
                                             int m2, int p1) {
  ParameterTriple out = zero(n, m2, p1);
  if (coords.size() != out.dimension()) {
    throw DimensionError("ParameterTriple::from_vector: wrong length");
  }
  int pos = 0;
  for (int i = 0; i < n; ++i) out.R2(i, i) = coords(pos++);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      out.R2(i, j) = out.R2(j, i) = coords(pos++) / M_SQRT2;
    }
  }
  out.b = coords.segment(pos, n * m2).reshaped(n, m2);
  pos += n * m2;
  out.e = coords.segment(pos, n * p1).reshaped(n, p1);
  return out;
}

ParameterTriple& ParameterTriple::operator+=(const ParameterTriple& other) {
  R2 += other.R2;
  b += other.b;
  e += other.e;
  return *this;
}

ParameterTriple& ParameterTriple::operator-=(const ParameterTriple& other) {
  R2 -= other.R2;
  b -= other.b;
  e -= other.e;
  return *this;
}

ParameterTriple& ParameterTriple::operator*=(double scale) {
  R2 *= scale;
  b *= scale;
  e *= scale;
  return *this;
}

ParameterTriple operator+(ParameterTriple a, const ParameterTriple& b) {
  return a += b;
}

ParameterTriple operator-(ParameterTriple a, const ParameterTriple& b) {
  return a -= b;
}

ParameterTriple operator*(double scale, ParameterTriple a) {
  return a *= scale;
}

}  // namespace cqlqg

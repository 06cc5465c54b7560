#include "cqlqg/sym_core.hpp"

#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "cqlqg/errors.hpp"

namespace cqlqg {
namespace {

void require_even(int value, const char* name) {
  if (value < 2 || value % 2 != 0) {
    throw DimensionError(std::string(name) + " must be even and >= 2, got " +
                         std::to_string(value));
  }
}

void require_square(const Matrix& N, const char* what) {
  if (N.rows() != N.cols()) {
    throw DimensionError(std::string(what) + ": matrix is " +
                         std::to_string(N.rows()) + "x" +
                         std::to_string(N.cols()) + ", expected square");
  }
}

}  // namespace

Matrix unit_symplectic() {
  Matrix bJ(2, 2);
  bJ << 0, 1, -1, 0;
  return bJ;
}

Matrix canonical_antisymmetric(int order) {
  require_even(order, "order");
  return Eigen::kroneckerProduct(unit_symplectic(),
                                 Matrix::Identity(order / 2, order / 2))
      .eval();
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

ItoMatrices build_ito(int m1, int m2) {
  require_even(m1, "m1");
  require_even(m2, "m2");
  ItoMatrices out;
  out.J1 = canonical_antisymmetric(m1);
  out.J2 = canonical_antisymmetric(m2);
  out.J = block_diag(out.J1, out.J2);
  return out;
}

CcrMatrices canonical_ccr(int n) {
  require_even(n, "n");
  CcrMatrices out;
  out.Theta1 = canonical_antisymmetric(n);
  out.Theta2 = out.Theta1;
  out.Theta = block_diag(out.Theta1, out.Theta2);
  return out;
}

ItoCcrStructure make_structure(int n, int m1, int m2, int p1, int p2) {
  const CcrMatrices ccr = canonical_ccr(n);
  return make_structure(n, m1, m2, p1, p2, ccr.Theta1, ccr.Theta2);
}

ItoCcrStructure make_structure(int n, int m1, int m2, int p1, int p2,
                               const Matrix& Theta1, const Matrix& Theta2) {
  require_even(n, "n");
  require_even(p1, "p1");
  require_even(p2, "p2");
  const ItoMatrices ito = build_ito(m1, m2);
  if (p1 > m1) throw DimensionError("p1 must not exceed m1");
  if (p2 > m2) throw DimensionError("p2 must not exceed m2");
  for (const Matrix* theta : {&Theta1, &Theta2}) {
    if (theta->rows() != n || theta->cols() != n) {
      throw DimensionError("CCR matrix must be n x n");
    }
    if (!is_antisymmetric(*theta)) {
      throw StructureError("CCR matrix must be antisymmetric");
    }
  }
  Eigen::FullPivLU<Matrix> lu1(Theta1), lu2(Theta2);
  if (!lu1.isInvertible() || !lu2.isInvertible()) {
    throw StructureError("CCR matrix must be nonsingular");
  }

  ItoCcrStructure s;
  s.n = n;
  s.m1 = m1;
  s.m2 = m2;
  s.p1 = p1;
  s.p2 = p2;
  s.J1 = ito.J1;
  s.J2 = ito.J2;
  s.J = ito.J;
  s.Theta1 = Theta1;
  s.Theta2 = Theta2;
  s.Theta = block_diag(Theta1, Theta2);
  s.Theta1_inv = lu1.inverse();
  s.Theta2_inv = lu2.inverse();
  return s;
}

Matrix symmetrize(const Matrix& N) {
  require_square(N, "symmetrize");
  return 0.5 * (N + N.transpose());
}

Matrix antisymmetrize(const Matrix& N) {
  require_square(N, "antisymmetrize");
  return 0.5 * (N - N.transpose());
}

bool is_symmetric(const Matrix& N, double tol) {
  if (N.rows() != N.cols()) return false;
  return (N - N.transpose()).norm() <= tol * std::max(1.0, N.norm());
}

bool is_antisymmetric(const Matrix& N, double tol) {
  if (N.rows() != N.cols()) return false;
  return (N + N.transpose()).norm() <= tol * std::max(1.0, N.norm());
}

bool is_symplectic(const Matrix& sigma, const Matrix& Theta, double tol) {
  require_square(sigma, "is_symplectic");
  if (sigma.rows() != Theta.rows() || Theta.rows() != Theta.cols()) {
    throw DimensionError("is_symplectic: shape mismatch");
  }
  const double residual =
      (sigma * Theta * sigma.transpose() - Theta).norm();
  return residual <= tol * Theta.norm();
}

double min_quantum_eigenvalue(const Matrix& P, const Matrix& Theta) {
  const Eigen::Index k = P.rows();
  Matrix embed(2 * k, 2 * k);
  embed << P, -Theta, Theta, P;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(embed),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool quantum_psd_check(const Matrix& P, const Matrix& Theta, double tol) {
  require_square(P, "quantum_psd_check");
  if (P.rows() != Theta.rows() || Theta.rows() != Theta.cols()) {
    throw DimensionError("quantum_psd_check: P and Theta orders differ");
  }
  if (!is_symmetric(P)) throw StructureError("P must be symmetric");
  if (!is_antisymmetric(Theta)) {
    throw StructureError("Theta must be antisymmetric");
  }
  return min_quantum_eigenvalue(P, Theta) >= -tol;
}

}  // namespace cqlqg

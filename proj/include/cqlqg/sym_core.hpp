#pragma once

#include <Eigen/Dense>

namespace cqlqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative Frobenius tolerance for structural predicates.
inline constexpr double kStructureTol = 1e-9;

/// The 2x2 matrix [[0, 1], [-1, 0]].
Matrix unit_symplectic();

/// bJ ⊗ I_{order/2}. Throws DimensionError unless `order` is even and >= 2.
Matrix canonical_antisymmetric(int order);

Matrix block_diag(const Matrix& a, const Matrix& b);

struct ItoMatrices {
  Matrix J1;
  Matrix J2;
  Matrix J;
};

/// Imaginary parts of the quantum Ito tables of the two external fields.
ItoMatrices build_ito(int m1, int m2);

struct CcrMatrices {
  Matrix Theta1;
  Matrix Theta2;
  Matrix Theta;
};

/// Canonical CCR matrices Theta1 = Theta2 = bJ ⊗ I_{n/2}.
CcrMatrices canonical_ccr(int n);

/// Dimensions and commutation structure shared by plant, controller and the
/// closed loop. `Theta2_inv` is cached since nearly every formula needs it.
struct ItoCcrStructure {
  int n = 0;
  int m1 = 0;
  int m2 = 0;
  int p1 = 0;
  int p2 = 0;
  Matrix J1, J2, J;
  Matrix Theta1, Theta2, Theta;
  Matrix Theta1_inv, Theta2_inv;

  int m() const { return m1 + m2; }
};

/// Canonical structure. Checks parity and p1 <= m1, p2 <= m2.
ItoCcrStructure make_structure(int n, int m1, int m2, int p1, int p2);

/// Structure with caller-supplied CCR matrices (antisymmetric, nonsingular).
ItoCcrStructure make_structure(int n, int m1, int m2, int p1, int p2,
                               const Matrix& Theta1, const Matrix& Theta2);

/// (N + Nᵀ)/2
Matrix symmetrize(const Matrix& N);
/// (N - Nᵀ)/2
Matrix antisymmetrize(const Matrix& N);

/// ‖σΘσᵀ - Θ‖_F <= tol·‖Θ‖_F
bool is_symplectic(const Matrix& sigma, const Matrix& Theta,
                   double tol = kStructureTol);

/// Smallest eigenvalue of the real embedding [[P, -Θ], [Θ, P]] of P + iΘ.
double min_quantum_eigenvalue(const Matrix& P, const Matrix& Theta);

/// P + iΘ ⪰ -tol·I. Throws StructureError if P is not symmetric or Θ not
/// antisymmetric.
bool quantum_psd_check(const Matrix& P, const Matrix& Theta,
                       double tol = kStructureTol);

bool is_symmetric(const Matrix& N, double tol = kStructureTol);
bool is_antisymmetric(const Matrix& N, double tol = kStructureTol);

/// Frobenius inner product.
inline double frob(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace cqlqg

#include "cqlqg/lyapunov.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "cqlqg/errors.hpp"

namespace cqlqg {
namespace {

using ComplexMatrix = Eigen::MatrixXcd;

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

struct LyapunovSolver::Impl {
  Matrix A;
  // Kronecker path: LU of I⊗A + A⊗I.
  Eigen::PartialPivLU<Matrix> kron_lu;
  // Schur path: A = U T Uᴴ.
  ComplexMatrix U;
  ComplexMatrix T;

  Matrix solve_kron(const Matrix& W) const {
    const Eigen::Index k = A.rows();
    const Vector rhs = -W.reshaped();
    Vector x = kron_lu.solve(rhs);
    // One refinement sweep against the unfactored operator.
    Matrix X = x.reshaped(k, k);
    const Matrix R = A * X + X * A.transpose() + W;
    x -= kron_lu.solve(Vector(R.reshaped()));
    return x.reshaped(k, k);
  }

  // Bartels-Stewart on the complex Schur form: T Y + Y Tᴴ = -Uᴴ W U,
  // solved column by column from the last one since Tᴴ is lower triangular.
  Matrix solve_schur(const Matrix& W) const {
    const Eigen::Index k = A.rows();
    const ComplexMatrix C = U.adjoint() * W.cast<std::complex<double>>() * U;
    ComplexMatrix Y = ComplexMatrix::Zero(k, k);
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      Eigen::VectorXcd rhs = -C.col(j);
      for (Eigen::Index l = j + 1; l < k; ++l) {
        rhs -= std::conj(T(j, l)) * Y.col(l);
      }
      ComplexMatrix M = T;
      M.diagonal().array() += std::conj(T(j, j));
      Y.col(j) = M.triangularView<Eigen::Upper>().solve(rhs);
    }
    return (U * Y * U.adjoint()).real();
  }
};

LyapunovSolver::LyapunovSolver(const Matrix& A, AleMethod method)
    : impl_(std::make_unique<Impl>()), method_(method) {
  if (A.rows() != A.cols()) throw DimensionError("ALE: A must be square");
  require_finite(A, "ALE");
  const double alpha = spectral_abscissa(A);
  if (!(alpha < -kHurwitzMargin)) {
    std::ostringstream msg;
    msg << "ALE: matrix is not Hurwitz (spectral abscissa " << alpha << ")";
    throw StabilityError(msg.str(), alpha, max_admissible_T(A));
  }
  impl_->A = A;
  const Eigen::Index k = A.rows();
  if (method_ == AleMethod::automatic) {
    method_ = k <= kKroneckerMaxOrder ? AleMethod::kronecker : AleMethod::schur;
  }
  if (method_ == AleMethod::kronecker) {
    const Matrix I = Matrix::Identity(k, k);
    const Matrix K = Eigen::kroneckerProduct(I, A).eval() +
                     Eigen::kroneckerProduct(A, I).eval();
    impl_->kron_lu.compute(K);
  } else {
    Eigen::ComplexSchur<Matrix> schur(A);
    if (schur.info() != Eigen::Success) {
      throw NumericError("ALE: complex Schur decomposition failed");
    }
    impl_->U = schur.matrixU();
    impl_->T = schur.matrixT();
  }
}

LyapunovSolver::~LyapunovSolver() = default;
LyapunovSolver::LyapunovSolver(LyapunovSolver&&) noexcept = default;
LyapunovSolver& LyapunovSolver::operator=(LyapunovSolver&&) noexcept = default;

Matrix LyapunovSolver::solve(const Matrix& W) const {
  if (W.rows() != impl_->A.rows() || W.cols() != impl_->A.cols()) {
    throw DimensionError("ALE: W must match the order of A");
  }
  const Matrix X = method_ == AleMethod::kronecker ? impl_->solve_kron(W)
                                                   : impl_->solve_schur(W);
  require_finite(X, "ALE solution");
  return symmetrize(X);
}

Matrix solve_ale(const Matrix& A, const Matrix& W, AleMethod method) {
  return LyapunovSolver(A, method).solve(W);
}

double ale_residual(const Matrix& A, const Matrix& X, const Matrix& W) {
  return (A * X + X * A.transpose() + W).norm();
}

double spectral_abscissa(const Matrix& A) {
  if (A.rows() != A.cols()) {
    throw DimensionError("spectral_abscissa: A must be square");
  }
  if (A.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> eig(A, false);
  return eig.eigenvalues().real().maxCoeff();
}

double max_admissible_T(const Matrix& A) {
  const double alpha = spectral_abscissa(A);
  if (alpha <= 0.0) return kInfiniteHorizon;
  return 1.0 / (2.0 * alpha);
}

bool is_T_stabilizing(const Matrix& A, double T) {
  if (!(T > 0.0)) return false;
  return spectral_abscissa(A) - 0.5 / T < -kHurwitzMargin;
}

Matrix discounted_dynamics(const Matrix& A, double T) {
  Matrix A_T = A;
  if (std::isfinite(T)) A_T.diagonal().array() -= 0.5 / T;
  return A_T;
}

GramianSet gramians_infinite(const ClosedLoopProblem& cp) {
  return gramians_discounted(cp, kInfiniteHorizon, false);
}

DiscountedGramianSet gramians_discounted(const ClosedLoopProblem& cp,
                                         double T, bool with_derivatives) {
  if (!(T > 0.0)) throw PreconditionError("effective horizon T must be > 0");
  const bool finite = std::isfinite(T);
  DiscountedGramianSet g;
  g.T = T;
  g.A_T = discounted_dynamics(cp.cal_A, T);
  const double alpha = spectral_abscissa(g.A_T);
  if (!(alpha < -kHurwitzMargin)) {
    std::ostringstream msg;
    const double t_max = max_admissible_T(cp.cal_A);
    if (finite) {
      msg << "T = " << T << " is not admissible: max_admissible_T = " << t_max;
    } else {
      msg << "closed loop is not internally stable (spectral abscissa "
          << alpha << ")";
    }
    throw StabilityError(msg.str(), spectral_abscissa(cp.cal_A), t_max);
  }

  const LyapunovSolver p_solver(g.A_T);
  const LyapunovSolver q_solver(g.A_T.transpose());
  Matrix W = cp.cal_B * cp.cal_B.transpose();
  if (finite) W += cp.Sigma / T;
  g.P = p_solver.solve(W);
  g.Q = q_solver.solve(cp.cal_C.transpose() * cp.cal_C);
  g.Gamma = g.Q * g.P;

  const Eigen::Index k = g.P.rows();
  if (with_derivatives && finite) {
    g.dP = p_solver.solve((g.P - cp.Sigma) / (T * T));
    g.dQ = q_solver.solve(g.Q / (T * T));
    g.dGamma = g.dQ * g.P + g.Q * g.dP;
  } else {
    g.dP = g.dQ = g.dGamma = Matrix::Zero(k, k);
  }
  if (cp.structure) {
    g.quantum_psd = quantum_psd_check(g.P, cp.structure->Theta, 1e-8);
  }
  return g;
}

Matrix matrix_exponential(const Matrix& A) { return A.exp(); }

namespace {

// Van Loan: for M = [[-A, W], [0, Aᵀ]] h, exp(M) = [[·, G], [0, F]] with
// Fᵀ G = ∫₀ʰ e^{τA} W e^{τAᵀ} dτ and F = e^{hAᵀ}.
struct TransitionPair {
  Matrix Phi;       // e^{hA}
  Matrix Integral;  // ∫₀ʰ e^{τA} W e^{τAᵀ} dτ
};

TransitionPair transition(const Matrix& A, const Matrix& W, double h) {
  const Eigen::Index k = A.rows();
  Matrix M = Matrix::Zero(2 * k, 2 * k);
  M.topLeftCorner(k, k) = -A * h;
  M.topRightCorner(k, k) = W * h;
  M.bottomRightCorner(k, k) = A.transpose() * h;
  const Matrix E = matrix_exponential(M);
  const Matrix F = E.bottomRightCorner(k, k);
  TransitionPair out;
  out.Phi = F.transpose();
  out.Integral = symmetrize(F.transpose() * E.topRightCorner(k, k));
  return out;
}

}  // namespace

Matrix covariance_at(const ClosedLoopProblem& cp, const Matrix& Sigma,
                     double t) {
  if (t < 0.0) throw PreconditionError("covariance_at: t must be >= 0");
  if (t == 0.0) return Sigma;
  const TransitionPair tp =
      transition(cp.cal_A, cp.cal_B * cp.cal_B.transpose(), t);
  return symmetrize(tp.Phi * Sigma * tp.Phi.transpose() + tp.Integral);
}

Matrix discounted_average_quadrature(const ClosedLoopProblem& cp,
                                     const Matrix& Sigma, double T,
                                     double t_max, int steps) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw PreconditionError("quadrature: T must be finite and positive");
  }
  if (!(t_max >= 20.0 * T)) {
    throw PreconditionError("quadrature: t_max must be at least 20 T");
  }
  if (steps < 2) throw PreconditionError("quadrature: need >= 2 steps");
  if (steps % 2 != 0) ++steps;

  const double h = t_max / steps;
  // Stepping Ξ(t + h) = Φ Ξ(t) Φᵀ + ∫₀ʰ(...) is exact up to round-off.
  const TransitionPair tp =
      transition(cp.cal_A, cp.cal_B * cp.cal_B.transpose(), h);
  Matrix Xi = Sigma;
  Matrix sum = Matrix::Zero(Sigma.rows(), Sigma.cols());
  for (int i = 0; i <= steps; ++i) {
    const double t = i * h;
    const double weight = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += weight * std::exp(-t / T) * Xi;
    Xi = tp.Phi * Xi * tp.Phi.transpose() + tp.Integral;
  }
  return symmetrize(sum * (h / 3.0) / T);
}

}  // namespace cqlqg

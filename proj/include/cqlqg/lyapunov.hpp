#pragma once

#include <limits>
#include <memory>

#include "cqlqg/sym_core.hpp"
#include "cqlqg/system_model.hpp"

namespace cqlqg {

/// Passing this as the effective time horizon selects the undiscounted
/// (infinite-horizon) quantities: 𝒜_T = 𝒜 and Σ/T = 0.
inline constexpr double kInfiniteHorizon =
    std::numeric_limits<double>::infinity();

/// A matrix counts as Hurwitz only if its spectral abscissa is below
/// -kHurwitzMargin.
inline constexpr double kHurwitzMargin = 1e-12;

enum class AleMethod {
  automatic,  // Kronecker for order <= kKroneckerMaxOrder, Schur otherwise
  kronecker,
  schur,
};

inline constexpr int kKroneckerMaxOrder = 24;

/// Solver for A X + X Aᵀ + W = 0 with A fixed. The factorization is computed
/// once, so repeated right-hand sides (Hessian columns) are cheap.
class LyapunovSolver {
 public:
  /// Throws StabilityError if A is not Hurwitz.
  explicit LyapunovSolver(const Matrix& A,
                          AleMethod method = AleMethod::automatic);
  ~LyapunovSolver();
  LyapunovSolver(LyapunovSolver&&) noexcept;
  LyapunovSolver& operator=(LyapunovSolver&&) noexcept;

  /// Returns the symmetrized solution. W must be square of matching order.
  Matrix solve(const Matrix& W) const;

  AleMethod method() const { return method_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  AleMethod method_;
};

Matrix solve_ale(const Matrix& A, const Matrix& W,
                 AleMethod method = AleMethod::automatic);

/// ‖AX + XAᵀ + W‖_F
double ale_residual(const Matrix& A, const Matrix& X, const Matrix& W);

/// max Re λ(A)
double spectral_abscissa(const Matrix& A);

/// +∞ if the abscissa is <= 0, else 1/(2·abscissa).
double max_admissible_T(const Matrix& A);

/// True iff 𝒜 - I/(2T) is Hurwitz (with margin kHurwitzMargin).
bool is_T_stabilizing(const Matrix& A, double T);

/// 𝒜 - I/(2T)
Matrix discounted_dynamics(const Matrix& A, double T);

struct GramianSet {
  Matrix P;
  Matrix Q;
  Matrix Gamma;  // QP
};

struct DiscountedGramianSet : GramianSet {
  double T = kInfiniteHorizon;
  Matrix A_T;
  Matrix dP;
  Matrix dQ;
  Matrix dGamma;
  /// P_T + iΘ ⪰ 0; only evaluated when the closed loop carries a structure.
  bool quantum_psd = true;
};

/// Controllability/observability Gramians of (𝒜, ℬ, 𝒞) and the Hankelian.
GramianSet gramians_infinite(const ClosedLoopProblem& cp);

/// Discounted Gramians and their T-derivatives. T = kInfiniteHorizon gives
/// the infinite-horizon Gramians with zero derivatives.
DiscountedGramianSet gramians_discounted(const ClosedLoopProblem& cp,
                                         double T,
                                         bool with_derivatives = true);

/// Matrix exponential by scaling and squaring with a Padé approximant.
Matrix matrix_exponential(const Matrix& A);

/// Real covariance Ξ(t) = e^{t𝒜} Σ e^{t𝒜ᵀ} + ∫₀ᵗ e^{τ𝒜} ℬℬᵀ e^{τ𝒜ᵀ} dτ.
Matrix covariance_at(const ClosedLoopProblem& cp, const Matrix& Sigma,
                     double t);

/// (1/T) ∫₀^{t_max} e^{-t/T} Ξ(t) dt by composite Simpson on `steps`
/// intervals (rounded up to even). Requires t_max >= 20·T.
Matrix discounted_average_quadrature(const ClosedLoopProblem& cp,
                                     const Matrix& Sigma, double T,
                                     double t_max, int steps);

}  // namespace cqlqg

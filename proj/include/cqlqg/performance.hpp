#pragma once

#include <array>

#include "cqlqg/lyapunov.hpp"
#include "cqlqg/parameter_triple.hpp"
#include "cqlqg/system_model.hpp"

namespace cqlqg {

/// Mean-square cost with the three equivalent evaluations
///   ½⟨𝒞ᵀ𝒞, P⟩,  ½⟨Q, W⟩,  -⟨𝒜_T, Γ⟩
/// where W = Σ/T + ℬℬᵀ (W = ℬℬᵀ for the infinite horizon).
struct CostReport {
  double value = 0.0;
  double T = kInfiniteHorizon;
  std::array<double, 3> representations{};
  /// Largest pairwise difference among `representations`.
  double representation_spread = 0.0;
  DiscountedGramianSet gramians;
};

CostReport cost_infinite(const ClosedLoopProblem& cp);
CostReport cost_discounted(const ClosedLoopProblem& cp, double T);
/// T = kInfiniteHorizon gives the undiscounted cost.
CostReport cost(const SynthesisProblem& problem, const ControllerTriple& pi,
                double T);

/// Partial Fréchet derivatives of the cost with respect to (R2, b, e), given
/// the Gramian blocks. The map is linear in (P, Q, Γ), so feeding in the
/// T-derivatives of the Gramians yields the mixed derivative ∂_T∂_Π.
GradientTriple gradient_from_gramians(const SynthesisProblem& problem,
                                      const ControllerTriple& pi,
                                      const Matrix& P, const Matrix& Q,
                                      const Matrix& Gamma);

GradientTriple grad_infinite(const SynthesisProblem& problem,
                             const ControllerTriple& pi);
GradientTriple grad_discounted(const SynthesisProblem& problem,
                               const ControllerTriple& pi, double T);
GradientTriple grad_T_derivative(const SynthesisProblem& problem,
                                 const ControllerTriple& pi, double T);

/// Cost, gradient and (for finite T) ∂_T gradient from one set of ALE solves.
struct Evaluation {
  CostReport cost;
  GradientTriple grad;
  GradientTriple grad_T;
};
Evaluation evaluate(const SynthesisProblem& problem, const ControllerTriple& pi,
                    double T);

/// First-order change of the closed-loop matrices and of the controller
/// output matrix c along a direction in 𝕌.
struct ClosedLoopVariation {
  Matrix dA;
  Matrix dB;
  Matrix dC;
  Matrix dc;
};
ClosedLoopVariation closed_loop_variation(const SynthesisProblem& problem,
                                          const ControllerTriple& pi,
                                          const ParameterTriple& dir);

}  // namespace cqlqg

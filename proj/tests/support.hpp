#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cqlqg/geometry.hpp"
#include "cqlqg/homotopy.hpp"
#include "cqlqg/performance.hpp"
#include "cqlqg/system_model.hpp"

namespace cqlqg::testing {

/// bJ = [[0, 1], [-1, 0]]
Matrix bJ();

/// Closed loop built directly from (𝒜, ℬ, 𝒞, Σ) without a structure.
ClosedLoopProblem raw_system(const Matrix& A, const Matrix& B, const Matrix& C,
                             const Matrix& Sigma);

/// Solves A X + X Aᵀ + W = 0 through the vectorized system
/// (I ⊗ A + A ⊗ I) vec X = -vec W with a full-pivot LU.
Matrix kron_ale(const Matrix& A, const Matrix& W);

/// Central differences of f at x, one coordinate at a time.
Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h);

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng,
                     double scale = 1.0);
Matrix random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0);

/// exp(Θ s) for a random symmetric s, which preserves Θ.
Matrix random_symplectic(const Matrix& Theta, std::mt19937_64& rng,
                         double scale = 0.3);

ParameterTriple random_direction(const ControllerTriple& like,
                                 std::mt19937_64& rng);

/// Random instances whose sample controller makes the closed loop Hurwitz,
/// found by scanning seeds from `first_seed` upward.
std::vector<RandomInstance> hurwitz_instances(int count,
                                              const Dimensions& dims = {},
                                              std::uint64_t first_seed = 1);

/// A horizon drawn from (0, max_admissible_T / 2] (capped at 50 when the
/// closed loop is Hurwitz).
double admissible_T(const SynthesisProblem& problem, const ControllerTriple& pi,
                    std::mt19937_64& rng);

/// A random instance (correlated Σ) with its sample controller and a horizon
/// drawn by admissible_T.
struct HorizonInstance {
  SynthesisProblem problem;
  ControllerTriple pi;
  double T;
};
std::vector<HorizonInstance> horizon_instances(int count, std::uint64_t salt);

/// Central differences of Π ↦ V_T(Π) in isometric coordinates, step
/// 1e-6·(1 + ‖Π‖).
Vector fd_cost_gradient(const SynthesisProblem& problem,
                        const ControllerTriple& pi, double T);

/// Largest coordinate-wise relative error of `fd` against `analytic`, with a
/// floor of 1e-3·‖analytic‖∞ on the denominator so that vanishing
/// coordinates do not dominate.
double coordinatewise_error(const Vector& analytic, const Vector& fd);

/// Copy of `problem` with zero cost weights F and G (bypasses the rank check).
SynthesisProblem without_cost(const SynthesisProblem& problem);

/// Copy of `problem` with zero plant, zero cost weights and Σ = I.
SynthesisProblem trivial_problem(const SynthesisProblem& problem);

/// First-order change δΣ of the initial covariance under the symplectic
/// generator g of the controller variables:
/// [[0, Σ12 gᵀ], [g Σ21, g Σ22 + Σ22 gᵀ]].
Matrix sigma_variation(const Matrix& Sigma, const Matrix& g);

/// diag(I, σ) Σ diag(I, σ)ᵀ
Matrix transform_sigma(const Matrix& Sigma, const Matrix& sigma);

struct StationaryInstance {
  SynthesisProblem problem;
  ControllerTriple pi;
};

/// Stabilizing stationary points of the undiscounted cost, obtained by the
/// homotopy on correlated-Σ instances and cached for the process.
const std::vector<StationaryInstance>& infinite_horizon_minima();

/// Seeds (correlated Σ, default dimensions) on which the homotopy reaches a
/// stabilizing endpoint.
std::vector<std::uint64_t> stabilizing_seeds();

}  // namespace cqlqg::testing

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cqlqg/parameter_triple.hpp"
#include "cqlqg/sym_core.hpp"

namespace cqlqg {

struct Dimensions {
  int n = 2;
  int m1 = 4;
  int m2 = 4;
  int p1 = 2;
  int p2 = 2;
  int r = 2;
};

/// Plant energy matrix R1 and coupling matrices M1 (to w), L1 (to η), with
/// feedthrough D.
struct PlantPhysical {
  Matrix R1;
  Matrix M1;
  Matrix L1;
  Matrix D;
};

/// State-space matrices of the plant QSDE dx = Ax dt + B dw + E dη,
/// dy = Cx dt + D dw.
struct Plant {
  Matrix A, B, C, D, E;
};

/// Controller energy and coupling matrices. M2 and L2 are always recovered
/// from the gains b, e (see controller_physical).
struct ControllerPhysical {
  Matrix R2;
  Matrix M2;
  Matrix L2;
};

struct ControllerOutputs {
  Matrix a;
  Matrix c;
};

/// Closed-loop realization (𝒜, ℬ, 𝒞) with the cost weights and initial real
/// covariance Σ. `structure` is absent only for raw systems built by hand
/// (e.g. scalar plumbing cases in tests).
struct ClosedLoopProblem {
  Matrix cal_A;
  Matrix cal_B;
  Matrix cal_C;
  Matrix F;
  Matrix G;
  Matrix Sigma;
  std::optional<ItoCcrStructure> structure;
};

struct ClosedLoopEnergy {
  Matrix R;
  Matrix M;
};

/// Everything that stays fixed while the controller triple varies.
struct SynthesisProblem {
  ItoCcrStructure structure;
  PlantPhysical physical;
  Plant plant;
  Matrix d;
  Matrix J1_tilde;  // D J1 Dᵀ
  Matrix J2_tilde;  // d J2 dᵀ
  Matrix F;
  Matrix G;
  Matrix Sigma;

  int r() const { return static_cast<int>(F.rows()); }
};

struct FeedthroughReport {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Checks that D consists of conjugate pairs of rows of a permutation matrix,
/// where conjugacy of channels is read off the canonical Ito matrix
/// bJ ⊗ I_{m/2} (channel k pairs with k + m/2).
FeedthroughReport validate_feedthrough(const Matrix& D);

/// Canonical p×m feedthrough: rows k and m/2 + k of I_m for k < p/2, ordered
/// so that D J Dᵀ = bJ ⊗ I_{p/2}.
Matrix canonical_feedthrough(int p, int m);

Plant plant_from_physical(const PlantPhysical& phys, const ItoCcrStructure& s,
                          const Matrix& J2_tilde);

ControllerOutputs derive_ac(const ControllerTriple& pi, const Matrix& d,
                            const ItoCcrStructure& s, const Matrix& J1_tilde);

ControllerPhysical controller_physical(const ControllerTriple& pi,
                                       const ItoCcrStructure& s);

ClosedLoopProblem assemble_closed_loop(const Plant& plant,
                                       const ControllerTriple& pi,
                                       const Matrix& d, const Matrix& F,
                                       const Matrix& G, const Matrix& Sigma,
                                       const ItoCcrStructure& s);

/// Closed-loop energy and coupling matrices from the local plant and
/// controller parameters.
ClosedLoopEnergy closed_loop_energy(const PlantPhysical& plant,
                                    const ControllerPhysical& controller,
                                    const Matrix& C, const Matrix& c,
                                    const Matrix& D, const Matrix& d);

/// 2Θ(R + MᵀJM)
Matrix drift_from_energy(const ClosedLoopEnergy& energy,
                         const ItoCcrStructure& s);

/// ‖𝒜Θ + Θ𝒜ᵀ + ℬJℬᵀ‖_F
double pr_residual(const Matrix& cal_A, const Matrix& cal_B,
                   const Matrix& Theta, const Matrix& J);
/// Requires cp.structure.
double pr_residual(const ClosedLoopProblem& cp);

/// Validates all static data and derives J̃1, J̃2 and the plant matrices.
SynthesisProblem make_problem(const ItoCcrStructure& s,
                              const PlantPhysical& phys, const Matrix& d,
                              const Matrix& F, const Matrix& G,
                              const Matrix& Sigma);

ControllerOutputs controller_outputs(const SynthesisProblem& problem,
                                     const ControllerTriple& pi);
ClosedLoopProblem closed_loop(const SynthesisProblem& problem,
                              const ControllerTriple& pi);

bool has_full_column_rank(const Matrix& G);

struct RandomProblemOptions {
  double scale = 1.0;
  /// Draw Σ = I + LLᵀ/(2n) with dense L instead of Σ = I, so that Σ12 ≠ 0
  /// (needed for a nonzero zero-horizon controller output). Σ + iΘ ⪰ 0 still
  /// holds under the canonical Θ.
  bool correlated_sigma = false;
};

struct RandomInstance {
  SynthesisProblem problem;
  ControllerTriple controller;
};

/// Deterministic pseudo-random instance drawn from `seed`.
RandomInstance random_problem(const Dimensions& dims, std::uint64_t seed,
                              const RandomProblemOptions& options = {});

}  // namespace cqlqg

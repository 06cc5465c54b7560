#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqlqg/geometry.hpp"
#include "cqlqg/performance.hpp"

namespace cqlqg {

/// Controller data that the zero-horizon limit pins down.
struct ZeroHorizonInit {
  Matrix c0;
  Matrix b0;
  Matrix e0;  // empty unless e0_available
  bool e0_available = false;
  std::string diagnostic;
  /// ‖Σ21FᵀG + Σ22c0ᵀGᵀG‖_F
  double stationarity_residual = 0.0;
  /// ‖(𝒞ᵀ𝒞Σ)22‖_F with 𝒞 = [F, Gc0]
  double hankelian_residual = 0.0;
};

/// c0 = -(GᵀG)⁻¹GᵀFΣ12Σ22⁻¹, b0 = Θ2(c0ᵀd + χ(I - dᵀd))J2 and, when c0 has
/// full column rank, e0 = -Σ21Cᵀ - (c0ᵀGᵀGc0)⁻¹c0ᵀGᵀF(Σ11Cᵀ + BDᵀ).
/// `chi` defaults to zero. Throws PreconditionError if Σ22 is singular or G
/// is rank deficient.
ZeroHorizonInit init_zero_horizon(const SynthesisProblem& problem,
                                  const std::optional<Matrix>& chi = {});

struct NewtonOptions {
  double tol = 1e-9;
  int max_iter = 60;
};

/// R2 minimizing V_T0(R2, b0, e0) over symmetric matrices, found by damped
/// Newton on the R2 block starting from R2 = 0. Throws InitError if the
/// gradient block does not reach `options.tol`.
Matrix init_energy(const SynthesisProblem& problem, double T0, const Matrix& b0,
                   const Matrix& e0, const NewtonOptions& options = {});

/// Subspace of 𝕌 in which the homotopy moves.
///  - full: all of 𝕌. With Σ fixed, V_T is not invariant under the symplectic
///    group for finite T, so its stationary points are isolated and the
///    Hessian is nonsingular on 𝕌.
///  - normal: 𝒩(Π) only. Tracks zeros of the normal component of the
///    gradient, i.e. stationarity up to a change of the controller's
///    coordinates applied to Σ as well.
enum class HomotopySpace { full, normal };

/// dΠ/dT = -(∂²_Π V_T restricted to the chosen subspace)⁻¹ ∂_T∂_Π V_T,
/// projected onto that subspace. Throws ContinuationError when the
/// restricted Hessian is numerically singular
/// (min |λ| < singular_ratio·max |λ|).
GradientTriple homotopy_rhs(const SynthesisProblem& problem, double T,
                            const ControllerTriple& pi,
                            HomotopySpace space = HomotopySpace::normal,
                            double singular_ratio = 1e-10);

struct StationaryResult {
  ControllerTriple pi;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double min_eig_normal = 0.0;
  std::string diagnostic;
};

/// Damped Newton iteration for stationarity of V_T in the chosen subspace:
/// the full gradient vanishes (full) or its projection onto 𝒩(Π) does
/// (normal, every update taken in 𝒩(Π)). T = kInfiniteHorizon targets the
/// undiscounted cost. Steps that leave the T-stabilizing set are shortened.
/// `grad_norm` in the result is the norm of the gradient component that the
/// iteration drives to zero.
StationaryResult newton_stationary(const SynthesisProblem& problem,
                                   const ControllerTriple& pi, double T,
                                   const NewtonOptions& options,
                                   HomotopySpace space = HomotopySpace::full);

enum class Verdict { stabilizing, marginal, diverged, step_failure };

std::string to_string(Verdict v);

struct HomotopyConfig {
  /// Non-positive selects 1e-3·(1 + 1/(1 + α₊)) with α₊ the positive part of
  /// the closed-loop abscissa at (0, b0, e0), capped at a quarter of the
  /// largest admissible horizon there.
  double T0 = 0.0;
  double T_max = 1e4;
  /// Initial, minimal and maximal steps in s = ln T.
  double h0 = 0.25;
  double h_min = 1e-8;
  double h_max = 1.0;
  double tol_corrector = 1e-7;
  int max_corrector_iter = 8;
  int max_steps = 2000;
  /// Newton iterations allowed for the first stationary point at T0.
  int max_initial_iter = 200;
  std::optional<Matrix> chi;
  /// Starting controller at T0 in place of the zero-horizon initialization.
  std::optional<ControllerTriple> initial;
  HomotopySpace space = HomotopySpace::full;
  /// Guard on the restricted Hessian used by the predictor.
  double singular_ratio = 1e-10;
};

struct HomotopyState {
  double T = 0.0;
  ControllerTriple pi;
  double cost = 0.0;
  double grad_norm = 0.0;
  double abscissa = 0.0;
  double min_eig_normal = 0.0;
};

struct HomotopyTrace {
  std::vector<HomotopyState> states;
  Verdict verdict = Verdict::step_failure;
  std::string diagnostic;
  HomotopyConfig config;
  int rejected_steps = 0;
};

/// Zero-horizon initialization followed by predictor-corrector continuation
/// in s = ln T (classical RK4 predictor, Newton corrector in the configured
/// subspace). Never throws for numerical failures: they end the trace with a
/// verdict and a diagnostic. A run that reaches T_max is classified by the
/// closed-loop spectral abscissa of its last node.
HomotopyTrace continuation_run(const SynthesisProblem& problem,
                               const HomotopyConfig& config = {});

struct PolishConfig {
  double tol = 1e-9;
  int max_iter = 500;
  double armijo = 1e-4;
  double initial_step = 1.0;
};

struct PolishResult {
  ControllerTriple pi;
  double cost_before = 0.0;
  double cost_after = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Set when no step along the projected gradient was admissible.
  bool stalled = false;
};

/// Backtracking gradient descent along -grad projected onto 𝒩(Π). Every
/// accepted step strictly lowers the cost and keeps Π T-stabilizing.
PolishResult gradient_descent_polish(const SynthesisProblem& problem,
                                     const ControllerTriple& pi, double T,
                                     const PolishConfig& config = {});

struct FinalResult {
  ControllerTriple controller;
  Verdict verdict = Verdict::step_failure;
  double abscissa = 0.0;
  std::optional<double> V_inf;
  std::optional<double> grad_inf_norm;
  std::string diagnostic;
};

/// Classifies the last node of the trace by the closed-loop spectral
/// abscissa. A stabilizing endpoint is refined by Newton and gradient
/// descent on the undiscounted cost before V and its gradient are reported.
FinalResult finalize(const SynthesisProblem& problem,
                     const HomotopyTrace& trace);

}  // namespace cqlqg

#pragma once

#include <memory>
#include <vector>

#include "cqlqg/lyapunov.hpp"
#include "cqlqg/parameter_triple.hpp"
#include "cqlqg/system_model.hpp"

namespace cqlqg {

/// Singular values below kRankTol·σ_max are treated as zero.
inline constexpr double kRankTol = 1e-10;

/// (σ⁻ᵀR2σ⁻¹, σb, σe). Throws StructureError unless σΘ2σᵀ = Θ2.
ControllerTriple symplectic_transform(const ControllerTriple& pi,
                                      const Matrix& sigma,
                                      const ItoCcrStructure& s);

/// Velocity of t ↦ 𝔖_{exp(tg)}(Π) at t = 0: (-2S(R2 g), g b, g e).
ParameterTriple tangent_generator(const ControllerTriple& pi, const Matrix& g);

enum class SubspaceKind { tangent, normal };

/// Orthonormal basis of a subspace of 𝕌. `coords` holds the isometric
/// coordinates of `vectors` as columns.
struct SubspaceBasis {
  SubspaceKind kind = SubspaceKind::tangent;
  double rank_tol = kRankTol;
  Matrix coords;
  std::vector<ParameterTriple> vectors;

  int size() const { return static_cast<int>(coords.cols()); }
};

struct TangentNormalSplit {
  SubspaceBasis tangent;
  SubspaceBasis normal;
};

/// Tangent space of the symplectic orbit through Π, spanned by the images of
/// g = Θ2·s over a basis of symmetric s, and its orthogonal complement.
TangentNormalSplit tangent_normal_split(const ControllerTriple& pi,
                                        const ItoCcrStructure& s,
                                        double rank_tol = kRankTol);
SubspaceBasis tangent_basis(const ControllerTriple& pi,
                            const ItoCcrStructure& s,
                            double rank_tol = kRankTol);
SubspaceBasis normal_basis(const ControllerTriple& pi,
                           const ItoCcrStructure& s,
                           double rank_tol = kRankTol);

/// Orthogonal projection of u onto span(basis).
ParameterTriple project(const ParameterTriple& u, const SubspaceBasis& basis);

/// ‖S(Θ2ᵀ(2R2ρ - βbᵀ - εeᵀ))‖_F for u = (ρ, β, ε); zero iff u is normal.
double normal_membership_residual(const ControllerTriple& pi,
                                  const ParameterTriple& u,
                                  const ItoCcrStructure& s);

/// Second Fréchet derivative of the discounted cost at a fixed (Π, T),
/// applied to directions in 𝕌. The Gramians and ALE factorizations are
/// computed once at construction. Throws StabilityError if Π is not
/// T-stabilizing.
class HessianOperator {
 public:
  HessianOperator(const SynthesisProblem& problem, const ControllerTriple& pi,
                  double T);
  ~HessianOperator();
  HessianOperator(HessianOperator&&) noexcept;
  HessianOperator& operator=(HessianOperator&&) noexcept;

  GradientTriple apply(const ParameterTriple& dir) const;
  const GradientTriple& gradient() const;
  const DiscountedGramianSet& gramians() const;
  double T() const;

  /// Matrix of the operator in isometric coordinates of 𝕌 (symmetrized).
  Matrix full_matrix() const;
  /// Bᵀ H B for a basis given as coordinate columns (symmetrized).
  Matrix restricted_matrix(const Matrix& basis_coords) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

GradientTriple hessian_apply(const SynthesisProblem& problem,
                             const ControllerTriple& pi, double T,
                             const ParameterTriple& dir);

struct HessianReport {
  Matrix H_normal;
  SubspaceBasis tangent;
  SubspaceBasis normal;
  /// max |⟨t, H t′⟩| over pairs of tangent basis vectors.
  double tangent_kernel_residual = 0.0;
  /// +∞ when the normal subspace is trivial.
  double min_eig_normal = 0.0;
  double max_abs_eig_normal = 0.0;
  double min_eig_full = 0.0;
  bool psd_on_U = false;
};

HessianReport hessian_normal_matrix(const SynthesisProblem& problem,
                                    const ControllerTriple& pi, double T,
                                    double psd_tol = 1e-8);

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns.
Vector principal_angles(const Matrix& A, const Matrix& B);

struct StrongMinReport {
  bool stationary = false;
  bool psd = false;
  bool normal_pd = false;
  bool kernel_match = false;
  double grad_norm = 0.0;
  double cost = 0.0;
  double min_eig_full = 0.0;
  double min_eig_normal = 0.0;
  int kernel_dim = 0;
  int tangent_dim = 0;
  /// Largest principal angle between the numerical kernel and the tangent
  /// space; 0 when both are trivial, π/2 on a dimension mismatch.
  double max_principal_angle = 0.0;
};

/// Second-order sufficient conditions at (Π, T). Kernel eigenvalues are those
/// with |λ| <= tol·max(1, max|λ|).
StrongMinReport check_strong_local_min(const SynthesisProblem& problem,
                                       const ControllerTriple& pi, double T,
                                       double tol = 1e-6,
                                       double pd_tol = 1e-9);

}  // namespace cqlqg

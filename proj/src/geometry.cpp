#include "cqlqg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cqlqg/errors.hpp"
#include "cqlqg/performance.hpp"

namespace cqlqg {
namespace {

/// Orthonormal basis of 𝕊ₙ: E_ii and (E_ij + E_ji)/√2.
std::vector<Matrix> symmetric_basis(int n) {
  std::vector<Matrix> out;
  for (int i = 0; i < n; ++i) {
    Matrix s = Matrix::Zero(n, n);
    s(i, i) = 1.0;
    out.push_back(s);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Matrix s = Matrix::Zero(n, n);
      s(i, j) = s(j, i) = std::numbers::sqrt2 / 2.0;
      out.push_back(s);
    }
  }
  return out;
}

SubspaceBasis basis_from_columns(const Matrix& cols, SubspaceKind kind,
                                 double rank_tol, int n, int m2, int p1) {
  SubspaceBasis basis;
  basis.kind = kind;
  basis.rank_tol = rank_tol;
  basis.coords = cols;
  for (Eigen::Index k = 0; k < cols.cols(); ++k) {
    basis.vectors.push_back(
        ParameterTriple::from_vector(cols.col(k), n, m2, p1));
  }
  return basis;
}

Vector symmetric_eigenvalues(const Matrix& H) {
  if (H.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace

ControllerTriple symplectic_transform(const ControllerTriple& pi,
                                      const Matrix& sigma,
                                      const ItoCcrStructure& s) {
  if (sigma.rows() != s.n || sigma.cols() != s.n) {
    throw DimensionError("symplectic_transform: sigma must be n x n");
  }
  if (!is_symplectic(sigma, s.Theta2)) {
    throw StructureError("symplectic_transform: sigma is not symplectic");
  }
  const Matrix inv = sigma.fullPivLu().inverse();
  return {symmetrize(inv.transpose() * pi.R2 * inv), sigma * pi.b,
          sigma * pi.e};
}

ParameterTriple tangent_generator(const ControllerTriple& pi, const Matrix& g) {
  return {-2.0 * symmetrize(pi.R2 * g), g * pi.b, g * pi.e};
}

TangentNormalSplit tangent_normal_split(const ControllerTriple& pi,
                                        const ItoCcrStructure& s,
                                        double rank_tol) {
  const int n = pi.n();
  const int m2 = pi.m2();
  const int p1 = pi.p1();
  const std::vector<Matrix> sym = symmetric_basis(n);
  Matrix images(pi.dimension(), static_cast<Eigen::Index>(sym.size()));
  for (std::size_t k = 0; k < sym.size(); ++k) {
    images.col(k) = tangent_generator(pi, s.Theta2 * sym[k]).to_vector();
  }

  Eigen::JacobiSVD<Matrix> svd(images, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  int rank = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    while (rank < sv.size() && sv(rank) > rank_tol * sv(0)) ++rank;
  }
  const Matrix& U = svd.matrixU();
  TangentNormalSplit split;
  split.tangent = basis_from_columns(U.leftCols(rank), SubspaceKind::tangent,
                                     rank_tol, n, m2, p1);
  split.normal = basis_from_columns(U.rightCols(U.cols() - rank),
                                    SubspaceKind::normal, rank_tol, n, m2, p1);
  return split;
}

SubspaceBasis tangent_basis(const ControllerTriple& pi,
                            const ItoCcrStructure& s, double rank_tol) {
  return tangent_normal_split(pi, s, rank_tol).tangent;
}

SubspaceBasis normal_basis(const ControllerTriple& pi,
                           const ItoCcrStructure& s, double rank_tol) {
  return tangent_normal_split(pi, s, rank_tol).normal;
}

ParameterTriple project(const ParameterTriple& u, const SubspaceBasis& basis) {
  const Vector x = u.to_vector();
  const Vector y = basis.coords * (basis.coords.transpose() * x);
  return ParameterTriple::from_vector(y, u.n(), u.m2(), u.p1());
}

double normal_membership_residual(const ControllerTriple& pi,
                                  const ParameterTriple& u,
                                  const ItoCcrStructure& s) {
  const Matrix X =
      2.0 * pi.R2 * u.R2 - u.b * pi.b.transpose() - u.e * pi.e.transpose();
  return symmetrize(s.Theta2.transpose() * X).norm();
}

struct HessianOperator::Impl {
  SynthesisProblem problem;
  ControllerTriple pi;
  ClosedLoopProblem cp;
  DiscountedGramianSet g;
  GradientTriple grad;
  LyapunovSolver p_solver;
  LyapunovSolver q_solver;
  Matrix skew;  // A(Γ22 Θ2⁻¹)

  Impl(const SynthesisProblem& prob, const ControllerTriple& p,
       const ClosedLoopProblem& loop, DiscountedGramianSet gram)
      : problem(prob),
        pi(p),
        cp(loop),
        g(std::move(gram)),
        p_solver(g.A_T),
        q_solver(g.A_T.transpose()) {
    const int n = problem.structure.n;
    grad = gradient_from_gramians(problem, pi, g.P, g.Q, g.Gamma);
    skew = antisymmetrize(g.Gamma.bottomRightCorner(n, n) *
                          problem.structure.Theta2_inv);
  }
};

HessianOperator::HessianOperator(const SynthesisProblem& problem,
                                 const ControllerTriple& pi, double T) {
  const ClosedLoopProblem cp = closed_loop(problem, pi);
  impl_ = std::make_unique<Impl>(problem, pi, cp,
                                 gramians_discounted(cp, T, false));
}

HessianOperator::~HessianOperator() = default;
HessianOperator::HessianOperator(HessianOperator&&) noexcept = default;
HessianOperator& HessianOperator::operator=(HessianOperator&&) noexcept =
    default;

const GradientTriple& HessianOperator::gradient() const { return impl_->grad; }
const DiscountedGramianSet& HessianOperator::gramians() const {
  return impl_->g;
}
double HessianOperator::T() const { return impl_->g.T; }

GradientTriple HessianOperator::apply(const ParameterTriple& dir) const {
  const Impl& im = *impl_;
  const SynthesisProblem& pr = im.problem;
  const ItoCcrStructure& s = pr.structure;
  const int n = s.n;
  const Matrix& P = im.g.P;
  const Matrix& Q = im.g.Q;
  const ClosedLoopProblem& cp = im.cp;

  const ClosedLoopVariation v = closed_loop_variation(pr, im.pi, dir);
  const Matrix WP = v.dA * P + P * v.dA.transpose() +
                    v.dB * cp.cal_B.transpose() + cp.cal_B * v.dB.transpose();
  const Matrix WQ = v.dA.transpose() * Q + Q * v.dA +
                    v.dC.transpose() * cp.cal_C + cp.cal_C.transpose() * v.dC;
  const Matrix dP = im.p_solver.solve(WP);
  const Matrix dQ = im.q_solver.solve(WQ);
  const Matrix dGamma = dQ * P + Q * dP;

  // Variation through the Gramians, plus the terms where Π enters the
  // gradient formulas directly.
  GradientTriple out = gradient_from_gramians(pr, im.pi, dP, dQ, dGamma);
  const Matrix Q22 = Q.bottomRightCorner(n, n);
  const Matrix P22 = P.bottomRightCorner(n, n);
  out.b += Q22 * dir.b - im.skew * dir.b * s.J2 -
           s.Theta2_inv * P22 * v.dc.transpose() * pr.G.transpose() * pr.G *
               pr.d * s.J2;
  out.e += Q22 * dir.e - im.skew * dir.e * pr.J1_tilde;
  return out;
}

Matrix HessianOperator::full_matrix() const {
  const int dim = impl_->pi.dimension();
  return restricted_matrix(Matrix::Identity(dim, dim));
}

Matrix HessianOperator::restricted_matrix(const Matrix& basis_coords) const {
  const ControllerTriple& pi = impl_->pi;
  Matrix HB(basis_coords.rows(), basis_coords.cols());
  for (Eigen::Index k = 0; k < basis_coords.cols(); ++k) {
    const ParameterTriple dir = ParameterTriple::from_vector(
        basis_coords.col(k), pi.n(), pi.m2(), pi.p1());
    HB.col(k) = apply(dir).to_vector();
  }
  return symmetrize(basis_coords.transpose() * HB);
}

GradientTriple hessian_apply(const SynthesisProblem& problem,
                             const ControllerTriple& pi, double T,
                             const ParameterTriple& dir) {
  return HessianOperator(problem, pi, T).apply(dir);
}

HessianReport hessian_normal_matrix(const SynthesisProblem& problem,
                                    const ControllerTriple& pi, double T,
                                    double psd_tol) {
  const HessianOperator op(problem, pi, T);
  TangentNormalSplit split = tangent_normal_split(pi, problem.structure);
  const Matrix H = op.full_matrix();

  HessianReport report;
  report.H_normal =
      symmetrize(split.normal.coords.transpose() * H * split.normal.coords);
  if (split.tangent.size() > 0) {
    report.tangent_kernel_residual =
        (split.tangent.coords.transpose() * H * split.tangent.coords)
            .cwiseAbs()
            .maxCoeff();
  }
  const Vector ev_normal = symmetric_eigenvalues(report.H_normal);
  if (ev_normal.size() > 0) {
    report.min_eig_normal = ev_normal.minCoeff();
    report.max_abs_eig_normal = ev_normal.cwiseAbs().maxCoeff();
  } else {
    report.min_eig_normal = std::numeric_limits<double>::infinity();
  }
  const Vector ev_full = symmetric_eigenvalues(H);
  report.min_eig_full = ev_full.size() > 0 ? ev_full.minCoeff() : 0.0;
  report.psd_on_U = report.min_eig_full >= -psd_tol;
  report.tangent = std::move(split.tangent);
  report.normal = std::move(split.normal);
  return report;
}

Vector principal_angles(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) {
    throw DimensionError("principal_angles: ambient dimensions differ");
  }
  if (A.cols() == 0 || B.cols() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(A.transpose() * B);
  const Vector sv = svd.singularValues();
  Vector angles(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    angles(i) = std::acos(std::clamp(sv(i), 0.0, 1.0));
  }
  return angles;
}

StrongMinReport check_strong_local_min(const SynthesisProblem& problem,
                                       const ControllerTriple& pi, double T,
                                       double tol, double pd_tol) {
  const HessianOperator op(problem, pi, T);
  const TangentNormalSplit split = tangent_normal_split(pi, problem.structure);
  const Matrix H = op.full_matrix();

  StrongMinReport report;
  report.cost = cost(problem, pi, T).value;
  report.grad_norm = op.gradient().norm();
  report.stationary = report.grad_norm <= tol * (1.0 + std::abs(report.cost));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Vector& lambda = eig.eigenvalues();
  report.min_eig_full = lambda.minCoeff();
  report.psd = report.min_eig_full >= -tol;

  const Matrix H_normal =
      symmetrize(split.normal.coords.transpose() * H * split.normal.coords);
  const Vector ev_normal = symmetric_eigenvalues(H_normal);
  report.min_eig_normal = ev_normal.size() > 0
                              ? ev_normal.minCoeff()
                              : std::numeric_limits<double>::infinity();
  report.normal_pd = report.min_eig_normal >= pd_tol;

  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> kernel_idx;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) <= tol * scale) kernel_idx.push_back(i);
  }
  Matrix kernel(H.rows(), static_cast<Eigen::Index>(kernel_idx.size()));
  for (std::size_t k = 0; k < kernel_idx.size(); ++k) {
    kernel.col(k) = eig.eigenvectors().col(kernel_idx[k]);
  }
  report.kernel_dim = static_cast<int>(kernel.cols());
  report.tangent_dim = split.tangent.size();
  if (report.kernel_dim != report.tangent_dim) {
    report.max_principal_angle = std::numbers::pi / 2.0;
  } else if (report.kernel_dim > 0) {
    report.max_principal_angle =
        principal_angles(kernel, split.tangent.coords).maxCoeff();
  }
  report.kernel_match = report.kernel_dim == report.tangent_dim &&
                        report.max_principal_angle <= 1e-3;
  return report;
}

}  // namespace cqlqg

#include "cqlqg/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cqlqg/errors.hpp"

namespace cqlqg {
namespace {

constexpr double kMarginalAbscissa = 1e-9;
constexpr double kDivergenceNorm = 1e8;

struct CostGrad {
  double cost = 0.0;
  GradientTriple grad;
};

CostGrad cost_and_grad(const SynthesisProblem& problem,
                       const ControllerTriple& pi, double T) {
  const CostReport report = cost(problem, pi, T);
  const DiscountedGramianSet& g = report.gramians;
  return {report.value, gradient_from_gramians(problem, pi, g.P, g.Q, g.Gamma)};
}

/// Solves H x = -g with eigenvalues replaced by max(|λ|, floor), which is
/// the Newton step when H is positive definite and a descent step otherwise.
Vector modified_newton_step(const Matrix& H, const Vector& g,
                            double* min_eig = nullptr) {
  if (H.rows() == 0) {
    if (min_eig) *min_eig = std::numeric_limits<double>::infinity();
    return Vector();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Vector& lambda = eig.eigenvalues();
  if (min_eig) *min_eig = lambda.minCoeff();
  const double floor =
      std::max(1e-14 * lambda.cwiseAbs().maxCoeff(),
               std::numeric_limits<double>::min());
  const Matrix& V = eig.eigenvectors();
  Vector y = V.transpose() * g;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) /= -std::max(std::abs(lambda(i)), floor);
  }
  return V * y;
}

ParameterTriple from_coords(const Vector& x, const ControllerTriple& like) {
  return ParameterTriple::from_vector(x, like.n(), like.m2(), like.p1());
}

/// Coordinates of the R2 block inside the isometric coordinates of 𝕌.
Matrix energy_block_coords(const ControllerTriple& pi) {
  const int k = pi.n() * (pi.n() + 1) / 2;
  return Matrix::Identity(pi.dimension(), k);
}

using BasisFn = std::function<Matrix(const ControllerTriple&)>;

/// Damped Newton on the restriction of the cost to span(basis(Π)). The merit
/// accepted by the line search is either an Armijo decrease of the cost or a
/// decrease of the restricted gradient norm.
StationaryResult damped_newton(const SynthesisProblem& problem,
                               const ControllerTriple& start, double T,
                               const BasisFn& basis_of,
                               const NewtonOptions& options) {
  StationaryResult result;
  result.pi = start;
  CostGrad current;
  try {
    current = cost_and_grad(problem, start, T);
  } catch (const Error& err) {
    result.diagnostic = err.what();
    return result;
  }

  for (int it = 0;; ++it) {
    const Matrix B = basis_of(result.pi);
    const Vector g = B.transpose() * current.grad.to_vector();
    result.grad_norm = g.norm();
    result.iterations = it;
    if (result.grad_norm <= options.tol) {
      result.converged = true;
      return result;
    }
    if (it >= options.max_iter) {
      std::ostringstream msg;
      msg << "Newton iteration cap reached with gradient norm "
          << result.grad_norm;
      result.diagnostic = msg.str();
      return result;
    }

    Vector x;
    try {
      const HessianOperator op(problem, result.pi, T);
      x = modified_newton_step(op.restricted_matrix(B), g,
                               &result.min_eig_normal);
    } catch (const Error& err) {
      result.diagnostic = err.what();
      return result;
    }
    const ParameterTriple step = from_coords(B * x, result.pi);
    const double slope = g.dot(x);

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      const ControllerTriple trial = result.pi + alpha * step;
      CostGrad next;
      try {
        next = cost_and_grad(problem, trial, T);
      } catch (const StabilityError&) {
        continue;
      }
      const double g_next =
          (basis_of(trial).transpose() * next.grad.to_vector()).norm();
      const bool armijo = next.cost <= current.cost + 1e-4 * alpha * slope;
      const bool smaller = g_next <= (1.0 - 1e-4 * alpha) * result.grad_norm;
      if (armijo || smaller) {
        result.pi = trial;
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "line search failed with gradient norm " << result.grad_norm;
      result.diagnostic = msg.str();
      return result;
    }
  }
}

double closed_loop_abscissa(const SynthesisProblem& problem,
                            const ControllerTriple& pi) {
  return spectral_abscissa(closed_loop(problem, pi).cal_A);
}

Verdict classify(double abscissa) {
  if (abscissa < -kMarginalAbscissa) return Verdict::stabilizing;
  if (abscissa <= kMarginalAbscissa) return Verdict::marginal;
  return Verdict::diverged;
}

HomotopyState make_state(const SynthesisProblem& problem,
                         const ControllerTriple& pi, double T) {
  HomotopyState state;
  state.T = T;
  state.pi = pi;
  const CostGrad cg = cost_and_grad(problem, pi, T);
  state.cost = cg.cost;
  state.grad_norm = cg.grad.norm();
  state.abscissa = closed_loop_abscissa(problem, pi);
  const HessianReport h = hessian_normal_matrix(problem, pi, T);
  state.min_eig_normal = h.min_eig_normal;
  return state;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::stabilizing:
      return "stabilizing";
    case Verdict::marginal:
      return "marginal";
    case Verdict::diverged:
      return "diverged";
    case Verdict::step_failure:
      return "step_failure";
  }
  return "unknown";
}

ZeroHorizonInit init_zero_horizon(const SynthesisProblem& problem,
                                  const std::optional<Matrix>& chi) {
  const ItoCcrStructure& s = problem.structure;
  const int n = s.n;
  const Matrix& F = problem.F;
  const Matrix& G = problem.G;
  const Matrix& d = problem.d;
  const Matrix S11 = problem.Sigma.topLeftCorner(n, n);
  const Matrix S12 = problem.Sigma.topRightCorner(n, n);
  const Matrix S21 = problem.Sigma.bottomLeftCorner(n, n);
  const Matrix S22 = problem.Sigma.bottomRightCorner(n, n);

  const Eigen::FullPivLU<Matrix> s22_lu(S22);
  if (!s22_lu.isInvertible()) {
    throw PreconditionError("zero-horizon init: Sigma22 is singular");
  }
  if (!has_full_column_rank(G)) {
    throw PreconditionError("zero-horizon init: G is rank deficient");
  }
  const Matrix GtG = G.transpose() * G;
  const Eigen::LDLT<Matrix> gtg(GtG);

  ZeroHorizonInit init;
  // c0 = -(GᵀG)⁻¹GᵀF Σ12 Σ22⁻¹, using Σ12Σ22⁻¹ = (Σ22⁻¹Σ21)ᵀ.
  const Matrix S12_S22inv = s22_lu.solve(S21).transpose();
  init.c0 = -gtg.solve(G.transpose() * F * S12_S22inv);

  Matrix fill = init.c0.transpose() * d;
  if (chi) {
    if (chi->rows() != n || chi->cols() != s.m2) {
      throw DimensionError("zero-horizon init: chi must be n x m2");
    }
    fill += *chi * (Matrix::Identity(s.m2, s.m2) - d.transpose() * d);
  }
  init.b0 = s.Theta2 * fill * s.J2;

  init.stationarity_residual =
      (S21 * F.transpose() * G + S22 * init.c0.transpose() * GtG).norm();
  Matrix cal_C(F.rows(), 2 * n);
  cal_C << F, G * init.c0;
  init.hankelian_residual =
      (cal_C.transpose() * cal_C * problem.Sigma).bottomRightCorner(n, n).norm();

  if (!has_full_column_rank(init.c0)) {
    std::ostringstream msg;
    msg << "c0 is not of full column rank (" << init.c0.rows() << "x"
        << init.c0.cols()
        << "), so the zero-horizon controller gain e0 is undefined";
    init.diagnostic = msg.str();
    return init;
  }
  const Plant& plant = problem.plant;
  const Matrix Q22 = init.c0.transpose() * GtG * init.c0;
  init.e0 = -S21 * plant.C.transpose() -
            Q22.ldlt().solve(init.c0.transpose() * G.transpose() * F *
                             (S11 * plant.C.transpose() +
                              plant.B * plant.D.transpose()));
  init.e0_available = true;
  return init;
}

Matrix init_energy(const SynthesisProblem& problem, double T0, const Matrix& b0,
                   const Matrix& e0, const NewtonOptions& options) {
  const int n = problem.structure.n;
  ControllerTriple start{Matrix::Zero(n, n), b0, e0};
  const StationaryResult res = damped_newton(
      problem, start, T0,
      [](const ControllerTriple& pi) { return energy_block_coords(pi); },
      options);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "energy initialization at T0 = " << T0
        << " did not converge: " << res.diagnostic;
    throw InitError(msg.str());
  }
  return symmetrize(res.pi.R2);
}

namespace {

Matrix subspace_coords(const ControllerTriple& pi, const ItoCcrStructure& s,
                       HomotopySpace space) {
  if (space == HomotopySpace::normal) return normal_basis(pi, s).coords;
  return Matrix::Identity(pi.dimension(), pi.dimension());
}

}  // namespace

GradientTriple homotopy_rhs(const SynthesisProblem& problem, double T,
                            const ControllerTriple& pi, HomotopySpace space,
                            double singular_ratio) {
  const GradientTriple grad_T = grad_T_derivative(problem, pi, T);
  const Matrix B = subspace_coords(pi, problem.structure, space);
  if (B.cols() == 0 || grad_T.norm() == 0.0) {
    return GradientTriple::zero(pi.n(), pi.m2(), pi.p1());
  }
  const HessianOperator op(problem, pi, T);
  const Matrix H = op.restricted_matrix(B);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const Vector& lambda = eig.eigenvalues();
  const double max_abs = lambda.cwiseAbs().maxCoeff();
  const double min_abs = lambda.cwiseAbs().minCoeff();
  if (!(min_abs >= singular_ratio * max_abs) || max_abs == 0.0) {
    std::ostringstream msg;
    msg << "restricted Hessian is numerically singular at T = " << T
        << " (min |eig| " << min_abs << ", max |eig| " << max_abs << ")";
    throw ContinuationError(msg.str());
  }
  const Vector rhs_b = B.transpose() * grad_T.to_vector();
  const Matrix& V = eig.eigenvectors();
  const Vector y = -(V * ((V.transpose() * rhs_b).array() / lambda.array())
                             .matrix());
  return from_coords(B * y, pi);
}

namespace {

/// Orthonormal basis of 𝕊ₙ: E_ii, then (E_ij + E_ji)/√2 for i < j.
std::vector<Matrix> symmetric_generators(int n) {
  std::vector<Matrix> out;
  for (int i = 0; i < n; ++i) {
    Matrix e = Matrix::Zero(n, n);
    e(i, i) = 1.0;
    out.push_back(e);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = e(j, i) = std::sqrt(0.5);
      out.push_back(e);
    }
  }
  return out;
}

/// Newton iteration for grad V_T(Π) ∈ 𝒯(Π), written as
///   grad V_T(Π) - t(Π, Θ2 s) = 0
/// in the unknowns Π (updated within 𝒩(Π)) and a symmetric s, where
/// t(Π, g) is the tangent generator. The system is square when the orbit
/// through Π has full dimension, and its Jacobian is exact, unlike the
/// Hessian restricted to 𝒩(Π) when the gradient has a tangential part.
StationaryResult normal_newton(const SynthesisProblem& problem,
                               const ControllerTriple& start, double T,
                               const NewtonOptions& options) {
  const ItoCcrStructure& st = problem.structure;
  const std::vector<Matrix> sym = symmetric_generators(st.n);
  const auto k = static_cast<Eigen::Index>(sym.size());

  StationaryResult result;
  result.pi = start;
  auto tangent_images = [&](const ControllerTriple& pi) {
    Matrix images(pi.dimension(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      images.col(j) = tangent_generator(pi, st.Theta2 * sym[j]).to_vector();
    }
    return images;
  };
  auto assemble = [&](const Vector& coeffs) {
    Matrix out = Matrix::Zero(st.n, st.n);
    for (Eigen::Index j = 0; j < k; ++j) out += coeffs(j) * sym[j];
    return out;
  };

  CostGrad current;
  try {
    current = cost_and_grad(problem, start, T);
  } catch (const Error& err) {
    result.diagnostic = err.what();
    return result;
  }
  // Multiplier: least-squares fit of the gradient by tangent vectors.
  Vector s = tangent_images(start)
                 .completeOrthogonalDecomposition()
                 .solve(current.grad.to_vector());

  for (int it = 0;; ++it) {
    const Matrix images = tangent_images(result.pi);
    const Matrix N = normal_basis(result.pi, st).coords;
    const Vector grad = current.grad.to_vector();
    const Vector residual = grad - images * s;
    result.grad_norm = (N.transpose() * grad).norm();
    result.iterations = it;
    if (result.grad_norm <= options.tol) {
      result.converged = true;
      return result;
    }
    if (it >= options.max_iter) {
      std::ostringstream msg;
      msg << "Newton iteration cap reached with normal gradient norm "
          << result.grad_norm;
      result.diagnostic = msg.str();
      return result;
    }

    Matrix J(residual.size(), N.cols() + k);
    try {
      const HessianOperator op(problem, result.pi, T);
      const Matrix g_s = st.Theta2 * assemble(s);
      for (Eigen::Index j = 0; j < N.cols(); ++j) {
        const ParameterTriple dir = from_coords(N.col(j), result.pi);
        J.col(j) = op.apply(dir).to_vector() -
                   tangent_generator(dir, g_s).to_vector();
      }
    } catch (const Error& err) {
      result.diagnostic = err.what();
      return result;
    }
    J.rightCols(k) = -images;
    const Vector delta = J.completeOrthogonalDecomposition().solve(-residual);
    const ParameterTriple step = from_coords(N * delta.head(N.cols()),
                                             result.pi);
    const Vector ds = delta.tail(k);
    const double merit = residual.norm();

    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      const ControllerTriple trial = result.pi + alpha * step;
      CostGrad next;
      try {
        next = cost_and_grad(problem, trial, T);
      } catch (const StabilityError&) {
        continue;
      }
      const Vector s_trial = s + alpha * ds;
      const double merit_next =
          (next.grad.to_vector() - tangent_images(trial) * s_trial).norm();
      if (merit_next <= (1.0 - 1e-4 * alpha) * merit) {
        result.pi = trial;
        s = s_trial;
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "line search failed with normal gradient norm "
          << result.grad_norm;
      result.diagnostic = msg.str();
      return result;
    }
  }
}

}  // namespace

StationaryResult newton_stationary(const SynthesisProblem& problem,
                                   const ControllerTriple& pi, double T,
                                   const NewtonOptions& options,
                                   HomotopySpace space) {
  if (space == HomotopySpace::normal) {
    return normal_newton(problem, pi, T, options);
  }
  const ItoCcrStructure& s = problem.structure;
  return damped_newton(
      problem, pi, T,
      [&s, space](const ControllerTriple& p) {
        return subspace_coords(p, s, space);
      },
      options);
}

HomotopyTrace continuation_run(const SynthesisProblem& problem,
                               const HomotopyConfig& config) {
  HomotopyTrace trace;
  trace.config = config;
  auto fail = [&trace](Verdict v, const std::string& why) {
    trace.verdict = v;
    trace.diagnostic = why;
    return trace;
  };
  if (!(config.T_max > 0.0) || !(config.h0 > 0.0) ||
      !(config.tol_corrector > 0.0) || !(config.h_min > 0.0)) {
    throw PreconditionError("continuation: T_max, h0, h_min, tol must be > 0");
  }

  ZeroHorizonInit init;
  if (!config.initial) {
    try {
      init = init_zero_horizon(problem, config.chi);
    } catch (const Error& err) {
      return fail(Verdict::step_failure, err.what());
    }
    if (!init.e0_available) {
      return fail(Verdict::step_failure, init.diagnostic);
    }
  }

  const int n = problem.structure.n;
  double T0 = config.T0;
  if (!(T0 > 0.0)) {
    const ControllerTriple nominal =
        config.initial ? *config.initial
                       : ControllerTriple{Matrix::Zero(n, n), init.b0, init.e0};
    const double alpha_plus =
        std::max(0.0, closed_loop_abscissa(problem, nominal));
    T0 = 1e-3 * (1.0 + 1.0 / (1.0 + alpha_plus));
    if (alpha_plus > 0.0) T0 = std::min(T0, 0.125 / alpha_plus);
  }
  trace.config.T0 = T0;
  if (!(T0 < config.T_max)) {
    throw PreconditionError("continuation: T0 must be below T_max");
  }

  ControllerTriple pi;
  if (config.initial) {
    pi = *config.initial;
  } else {
    try {
      pi = {init_energy(problem, T0, init.b0, init.e0), init.b0, init.e0};
    } catch (const Error& err) {
      return fail(Verdict::step_failure, err.what());
    }
  }
  const StationaryResult first = newton_stationary(
      problem, pi, T0, {config.tol_corrector, config.max_initial_iter},
      config.space);
  if (!first.converged) {
    return fail(Verdict::step_failure,
                "no stationary point at T0: " + first.diagnostic);
  }
  pi = first.pi;
  trace.states.push_back(make_state(problem, pi, T0));

  const double s_end = std::log(config.T_max);
  double s = std::log(T0);
  double h = config.h0;
  int steps = 0;
  std::string last_error;
  while (s < s_end) {
    if (steps >= config.max_steps) {
      return fail(Verdict::step_failure, "maximum number of steps reached");
    }
    const bool last = s + h >= s_end;
    const double h_eff = last ? s_end - s : h;
    const double T_new = last ? config.T_max : std::exp(s + h_eff);

    auto f = [&problem, space = config.space, ratio = config.singular_ratio](double s_arg,
                                              const ControllerTriple& p) {
      const double T = std::exp(s_arg);
      return T * homotopy_rhs(problem, T, p, space, ratio);
    };
    StationaryResult corrected;
    try {
      const GradientTriple k1 = f(s, pi);
      const GradientTriple k2 = f(s + h_eff / 2, pi + (h_eff / 2) * k1);
      const GradientTriple k3 = f(s + h_eff / 2, pi + (h_eff / 2) * k2);
      const GradientTriple k4 = f(s + h_eff, pi + h_eff * k3);
      const ControllerTriple predicted =
          pi + (h_eff / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      corrected = newton_stationary(
          problem, predicted, T_new,
          {config.tol_corrector, config.max_corrector_iter}, config.space);
      if (!corrected.converged) throw ContinuationError(corrected.diagnostic);
    } catch (const Error& err) {
      last_error = err.what();
      ++trace.rejected_steps;
      h /= 2.0;
      if (h < config.h_min) {
        std::ostringstream msg;
        msg << "step size fell below h_min at T = " << std::exp(s) << ": "
            << last_error;
        return fail(Verdict::step_failure, msg.str());
      }
      continue;
    }

    ++steps;
    s = last ? s_end : s + h_eff;
    pi = corrected.pi;
    trace.states.push_back(make_state(problem, pi, T_new));
    if (!(pi.norm() < kDivergenceNorm)) {
      return fail(Verdict::diverged, "controller parameters diverge");
    }
    if (corrected.iterations <= 2) h = std::min(1.5 * h, config.h_max);
  }
  trace.verdict = classify(trace.states.back().abscissa);
  return trace;
}

PolishResult gradient_descent_polish(const SynthesisProblem& problem,
                                     const ControllerTriple& pi, double T,
                                     const PolishConfig& config) {
  PolishResult result;
  result.pi = pi;
  CostGrad current = cost_and_grad(problem, pi, T);
  result.cost_before = result.cost_after = current.cost;
  double step = config.initial_step;
  for (;;) {
    result.grad_norm = current.grad.norm();
    if (result.grad_norm <= config.tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= config.max_iter) break;
    const GradientTriple dir =
        -1.0 * project(current.grad, normal_basis(result.pi, problem.structure));
    const double slope = current.grad.dot(dir);
    if (!(slope < 0.0)) {
      result.stalled = true;
      break;
    }
    bool accepted = false;
    for (double alpha = step; alpha > 1e-16 * config.initial_step;
         alpha *= 0.5) {
      const ControllerTriple trial = result.pi + alpha * dir;
      CostGrad next;
      try {
        next = cost_and_grad(problem, trial, T);
      } catch (const StabilityError&) {
        continue;
      }
      if (next.cost < current.cost &&
          next.cost <= current.cost + config.armijo * alpha * slope) {
        result.pi = trial;
        current = std::move(next);
        step = 2.0 * alpha;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stalled = true;
      break;
    }
    ++result.iterations;
  }
  result.cost_after = current.cost;
  return result;
}

FinalResult finalize(const SynthesisProblem& problem,
                     const HomotopyTrace& trace) {
  FinalResult out;
  if (trace.states.empty()) {
    out.verdict = Verdict::step_failure;
    out.diagnostic = trace.diagnostic.empty() ? "empty trace" : trace.diagnostic;
    out.abscissa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const HomotopyState& last = trace.states.back();
  out.controller = last.pi;
  out.abscissa = closed_loop_abscissa(problem, last.pi);
  out.diagnostic = trace.diagnostic;
  if (trace.verdict == Verdict::step_failure ||
      (trace.verdict == Verdict::diverged && !trace.diagnostic.empty())) {
    out.verdict = trace.verdict;
    return out;
  }
  out.verdict = classify(out.abscissa);
  if (out.verdict != Verdict::stabilizing) return out;

  // The endpoint sits O(1/T_max) away from the undiscounted stationary point.
  ControllerTriple pi = last.pi;
  const StationaryResult refined = newton_stationary(
      problem, pi, kInfiniteHorizon, {1e-10, 50}, HomotopySpace::normal);
  if (refined.converged) {
    pi = refined.pi;
  } else {
    out.diagnostic = "infinite-horizon refinement: " + refined.diagnostic;
  }
  const PolishResult polished =
      gradient_descent_polish(problem, pi, kInfiniteHorizon, {1e-10, 200});
  pi = polished.pi;
  out.abscissa = closed_loop_abscissa(problem, pi);
  out.verdict = classify(out.abscissa);
  out.controller = pi;
  if (out.verdict == Verdict::stabilizing) {
    const CostGrad cg = cost_and_grad(problem, pi, kInfiniteHorizon);
    out.V_inf = cg.cost;
    out.grad_inf_norm = cg.grad.norm();
  }
  return out;
}

}  // namespace cqlqg

#include "cqlqg/performance.hpp"

#include <algorithm>
#include <cmath>

namespace cqlqg {
namespace {

CostReport cost_from_gramians(const ClosedLoopProblem& cp,
                              DiscountedGramianSet g) {
  CostReport report;
  report.T = g.T;
  Matrix W = cp.cal_B * cp.cal_B.transpose();
  if (std::isfinite(g.T)) W += cp.Sigma / g.T;
  report.representations = {
      0.5 * frob(cp.cal_C.transpose() * cp.cal_C, g.P),
      0.5 * frob(g.Q, W),
      -frob(g.A_T, g.Gamma),
  };
  const auto& r = report.representations;
  report.representation_spread =
      std::max({std::abs(r[0] - r[1]), std::abs(r[0] - r[2]),
                std::abs(r[1] - r[2])});
  report.value = r[0];
  report.gramians = std::move(g);
  return report;
}

}  // namespace

CostReport cost_infinite(const ClosedLoopProblem& cp) {
  return cost_from_gramians(cp,
                            gramians_discounted(cp, kInfiniteHorizon, false));
}

CostReport cost_discounted(const ClosedLoopProblem& cp, double T) {
  return cost_from_gramians(cp, gramians_discounted(cp, T, false));
}

CostReport cost(const SynthesisProblem& problem, const ControllerTriple& pi,
                double T) {
  return cost_discounted(closed_loop(problem, pi), T);
}

GradientTriple gradient_from_gramians(const SynthesisProblem& problem,
                                      const ControllerTriple& pi,
                                      const Matrix& P, const Matrix& Q,
                                      const Matrix& Gamma) {
  const ItoCcrStructure& s = problem.structure;
  const Plant& plant = problem.plant;
  const int n = s.n;
  const Matrix& Ti = s.Theta2_inv;
  const Matrix c = controller_outputs(problem, pi).c;

  const Matrix P21 = P.bottomLeftCorner(n, n);
  const Matrix P22 = P.bottomRightCorner(n, n);
  const Matrix Q21 = Q.bottomLeftCorner(n, n);
  const Matrix Q22 = Q.bottomRightCorner(n, n);
  const Matrix G12 = Gamma.topRightCorner(n, n);
  const Matrix G21 = Gamma.bottomLeftCorner(n, n);
  const Matrix G22 = Gamma.bottomRightCorner(n, n);
  const Matrix skew = antisymmetrize(G22 * Ti);
  const Matrix GtG = problem.G.transpose() * problem.G;

  GradientTriple out;
  out.R2 = -2.0 * symmetrize(s.Theta2 * G22);
  out.b = Q21 * plant.E * problem.d + Q22 * pi.b - skew * pi.b * s.J2 -
          Ti *
              (G12.transpose() * plant.E +
               P21 * problem.F.transpose() * problem.G +
               P22 * c.transpose() * GtG) *
              problem.d * s.J2;
  out.e = G21 * plant.C.transpose() +
          Q21 * plant.B * plant.D.transpose() + Q22 * pi.e -
          skew * pi.e * problem.J1_tilde;
  return out;
}

Evaluation evaluate(const SynthesisProblem& problem, const ControllerTriple& pi,
                    double T) {
  const ClosedLoopProblem cp = closed_loop(problem, pi);
  Evaluation ev;
  ev.cost = cost_from_gramians(cp, gramians_discounted(cp, T, true));
  const DiscountedGramianSet& g = ev.cost.gramians;
  ev.grad = gradient_from_gramians(problem, pi, g.P, g.Q, g.Gamma);
  ev.grad_T = gradient_from_gramians(problem, pi, g.dP, g.dQ, g.dGamma);
  return ev;
}

GradientTriple grad_infinite(const SynthesisProblem& problem,
                             const ControllerTriple& pi) {
  return grad_discounted(problem, pi, kInfiniteHorizon);
}

GradientTriple grad_discounted(const SynthesisProblem& problem,
                               const ControllerTriple& pi, double T) {
  const ClosedLoopProblem cp = closed_loop(problem, pi);
  const DiscountedGramianSet g = gramians_discounted(cp, T, false);
  return gradient_from_gramians(problem, pi, g.P, g.Q, g.Gamma);
}

GradientTriple grad_T_derivative(const SynthesisProblem& problem,
                                 const ControllerTriple& pi, double T) {
  const ClosedLoopProblem cp = closed_loop(problem, pi);
  const DiscountedGramianSet g = gramians_discounted(cp, T, true);
  return gradient_from_gramians(problem, pi, g.dP, g.dQ, g.dGamma);
}

ClosedLoopVariation closed_loop_variation(const SynthesisProblem& problem,
                                          const ControllerTriple& pi,
                                          const ParameterTriple& dir) {
  const ItoCcrStructure& s = problem.structure;
  const Plant& plant = problem.plant;
  const int n = s.n;
  const Matrix& Ti = s.Theta2_inv;

  ClosedLoopVariation v;
  v.dc = -problem.d * s.J2 * dir.b.transpose() * Ti;
  const Matrix da =
      2.0 * s.Theta2 * dir.R2 -
      0.5 *
          (dir.b * s.J2 * pi.b.transpose() + pi.b * s.J2 * dir.b.transpose() +
           dir.e * problem.J1_tilde * pi.e.transpose() +
           pi.e * problem.J1_tilde * dir.e.transpose()) *
          Ti;

  v.dA = Matrix::Zero(2 * n, 2 * n);
  v.dA.topRightCorner(n, n) = plant.E * v.dc;
  v.dA.bottomLeftCorner(n, n) = dir.e * plant.C;
  v.dA.bottomRightCorner(n, n) = da;

  v.dB = Matrix::Zero(2 * n, s.m());
  v.dB.bottomLeftCorner(n, s.m1) = dir.e * plant.D;
  v.dB.bottomRightCorner(n, s.m2) = dir.b;

  v.dC = Matrix::Zero(problem.F.rows(), 2 * n);
  v.dC.rightCols(n) = problem.G * v.dc;
  return v;
}

}  // namespace cqlqg

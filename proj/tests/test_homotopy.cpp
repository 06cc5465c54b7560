#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cqlqg/errors.hpp"
#include "cqlqg/homotopy.hpp"
#include "support.hpp"

namespace cqlqg {
namespace {

RandomInstance correlated(std::uint64_t seed) {
  RandomProblemOptions opt;
  opt.correlated_sigma = true;
  return random_problem({}, seed, opt);
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int k = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < k; ++i) {
    mx += std::log(x[i]) / k;
    my += std::log(y[i]) / k;
  }
  double sxy = 0, sxx = 0;
  for (int i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

TEST(ZeroHorizonInit, NoCostWeightOnPlantGivesZeroGains) {
  SynthesisProblem p = correlated(1).problem;
  p.F.setZero();
  const ZeroHorizonInit init = init_zero_horizon(p);
  EXPECT_TRUE(init.c0.isZero());
  EXPECT_TRUE(init.b0.isZero());
  EXPECT_FALSE(init.e0_available);
  EXPECT_FALSE(init.diagnostic.empty());
}

TEST(ZeroHorizonInit, BlockCovarianceExample) {
  SynthesisProblem p = random_problem({}, 1).problem;
  const Matrix I = Matrix::Identity(2, 2);
  p.F = I;
  p.G = I;
  p.Sigma << 2 * I, I, I, 2 * I;
  const ZeroHorizonInit init = init_zero_horizon(p);
  EXPECT_LE((init.c0 + 0.5 * I).norm(), 1e-15);
  EXPECT_TRUE(init.e0_available);
}

TEST(ZeroHorizonInit, UncorrelatedCovarianceGivesZeroOutput) {
  const SynthesisProblem p = random_problem({}, 2).problem;
  ASSERT_TRUE(p.Sigma.topRightCorner(2, 2).isZero());
  EXPECT_TRUE(init_zero_horizon(p).c0.isZero());
}

TEST(ZeroHorizonInit, SingularControllerCovarianceRejected) {
  SynthesisProblem p = correlated(3).problem;
  p.Sigma.bottomRightCorner(2, 2).setZero();
  EXPECT_THROW(init_zero_horizon(p), PreconditionError);
}

TEST(ZeroHorizonInit, ResidualsAndOutputConsistency) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SynthesisProblem p = correlated(seed).problem;
    const ZeroHorizonInit init = init_zero_horizon(p);
    EXPECT_LE(init.stationarity_residual, 1e-10);
    EXPECT_LE(init.hankelian_residual, 1e-9);
    ControllerTriple pi = ParameterTriple::zero(2, 4, 2);
    pi.b = init.b0;
    const Matrix c = controller_outputs(p, pi).c;
    EXPECT_LE((c - init.c0).norm(), 1e-12 * (1.0 + init.c0.norm()));
  }
}

TEST(ZeroHorizonInit, FreeCompletionKeepsOutput) {
  const SynthesisProblem p = correlated(4).problem;
  std::mt19937_64 rng(4);
  const Matrix chi = testing::random_matrix(2, 4, rng);
  const ZeroHorizonInit init = init_zero_horizon(p, chi);
  ControllerTriple pi = ParameterTriple::zero(2, 4, 2);
  pi.b = init.b0;
  EXPECT_LE((controller_outputs(p, pi).c - init.c0).norm(), 1e-12);
  EXPECT_THROW(init_zero_horizon(p, Matrix::Zero(3, 4)), DimensionError);
}

// At Π₀ the gradient blocks (R2, b, e) vanish to orders T², T and T².
TEST(ZeroHorizonInit, GradientBlocksVanishAtExpectedOrders) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthesisProblem p = correlated(seed).problem;
    const ZeroHorizonInit init = init_zero_horizon(p);
    ASSERT_TRUE(init.e0_available);
    ControllerTriple pi = ParameterTriple::zero(2, 4, 2);
    pi.b = init.b0;
    pi.e = init.e0;
    const double unit =
        std::min(1.0, max_admissible_T(closed_loop(p, pi).cal_A));
    const std::vector<double> Ts{1e-6 * unit, 1e-5 * unit, 1e-4 * unit};
    std::vector<double> r, b, e;
    for (double T : Ts) {
      const GradientTriple g = grad_discounted(p, pi, T);
      r.push_back(g.R2.norm());
      b.push_back(g.b.norm());
      e.push_back(g.e.norm());
    }
    EXPECT_NEAR(loglog_slope(Ts, r), 2.0, 0.2) << "seed " << seed;
    EXPECT_NEAR(loglog_slope(Ts, b), 1.0, 0.1) << "seed " << seed;
    EXPECT_NEAR(loglog_slope(Ts, e), 2.0, 0.2) << "seed " << seed;
  }
}

TEST(InitEnergy, ZeroObjectiveReturnsZero) {
  const SynthesisProblem p = testing::without_cost(correlated(1).problem);
  const Matrix R2 = init_energy(p, 1e-3, Matrix::Zero(2, 4), Matrix::Zero(2, 2));
  EXPECT_TRUE(R2.isZero());
}

TEST(InitEnergy, StationaryInEnergyBlock) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthesisProblem p = correlated(seed).problem;
    const ZeroHorizonInit init = init_zero_horizon(p);
    ASSERT_TRUE(init.e0_available);
    ControllerTriple nominal = ParameterTriple::zero(2, 4, 2);
    nominal.b = init.b0;
    nominal.e = init.e0;
    const double T0 = std::min(
        1e-3, 0.25 * max_admissible_T(closed_loop(p, nominal).cal_A));
    const Matrix R2 = init_energy(p, T0, init.b0, init.e0);
    EXPECT_EQ(R2, R2.transpose());
    const ControllerTriple pi{R2, init.b0, init.e0};
    EXPECT_LE(grad_discounted(p, pi, T0).R2.norm(), 1e-9);
  }
}

TEST(HomotopyRhs, VanishesWithoutHorizonDependence) {
  const RandomInstance inst = testing::hurwitz_instances(1).front();
  const SynthesisProblem p = testing::without_cost(inst.problem);
  for (HomotopySpace space : {HomotopySpace::normal, HomotopySpace::full}) {
    EXPECT_EQ(homotopy_rhs(p, 1.0, inst.controller, space).norm(), 0.0);
  }
}

TEST(HomotopyRhs, NormalSolutionStaysNormal) {
  for (const RandomInstance& inst : testing::hurwitz_instances(5)) {
    const double T = 2.0;
    const GradientTriple rhs =
        homotopy_rhs(inst.problem, T, inst.controller, HomotopySpace::normal);
    const TangentNormalSplit split =
        tangent_normal_split(inst.controller, inst.problem.structure);
    for (const ParameterTriple& t : split.tangent.vectors) {
      EXPECT_LE(std::abs(rhs.dot(t)), 1e-9 * (1.0 + rhs.norm()));
    }
    // Differentiating the normal stationarity condition along the flow.
    const GradientTriple residual =
        hessian_apply(inst.problem, inst.controller, T, rhs) +
        grad_T_derivative(inst.problem, inst.controller, T);
    EXPECT_LE(project(residual, split.normal).norm(),
              1e-8 * (1.0 + residual.norm() + rhs.norm()));
  }
}

TEST(HomotopyRhs, FullSpaceSolvesLinearizedStationarity) {
  for (const RandomInstance& inst : testing::hurwitz_instances(5)) {
    const double T = 2.0;
    const GradientTriple rhs =
        homotopy_rhs(inst.problem, T, inst.controller, HomotopySpace::full);
    const GradientTriple grad_T =
        grad_T_derivative(inst.problem, inst.controller, T);
    const GradientTriple residual =
        hessian_apply(inst.problem, inst.controller, T, rhs) + grad_T;
    EXPECT_LE(residual.norm(), 1e-8 * (1.0 + grad_T.norm() + rhs.norm()));
  }
}

TEST(NewtonStationary, ConvergesFromPerturbedMinimum) {
  std::mt19937_64 rng(5);
  for (const testing::StationaryInstance& m :
       testing::infinite_horizon_minima()) {
    const ControllerTriple start =
        m.pi + 1e-3 * testing::random_direction(m.pi, rng);
    for (HomotopySpace space : {HomotopySpace::full, HomotopySpace::normal}) {
      const StationaryResult r =
          newton_stationary(m.problem, start, kInfiniteHorizon, {1e-10, 50},
                            space);
      EXPECT_TRUE(r.converged) << r.diagnostic;
      EXPECT_LE(r.grad_norm, 1e-10);
    }
  }
}

TEST(Continuation, HorizonFreeProblemKeepsControllerFixed) {
  const RandomInstance inst = testing::hurwitz_instances(1).front();
  const SynthesisProblem p = testing::without_cost(inst.problem);
  HomotopyConfig config;
  config.T0 = 0.1;
  config.T_max = 100.0;
  config.initial = inst.controller;
  const HomotopyTrace trace = continuation_run(p, config);
  ASSERT_GE(trace.states.size(), 2u);
  EXPECT_EQ(trace.verdict, Verdict::stabilizing) << trace.diagnostic;
  for (const HomotopyState& s : trace.states) {
    EXPECT_LE((s.pi - inst.controller).norm(), 1e-14);
  }
  EXPECT_EQ(trace.states.front().T, 0.1);
  EXPECT_NEAR(trace.states.back().T, 100.0, 1e-9);
}

TEST(Continuation, StartMustPrecedeEnd) {
  HomotopyConfig config;
  config.T0 = 10.0;
  config.T_max = 1.0;
  EXPECT_THROW(continuation_run(correlated(5).problem, config),
               PreconditionError);
}

TEST(Continuation, AcceptedNodesAreStationaryAndAdmissible) {
  for (std::uint64_t seed : testing::stabilizing_seeds()) {
    const SynthesisProblem p = correlated(seed).problem;
    const HomotopyTrace trace = continuation_run(p);
    ASSERT_EQ(trace.verdict, Verdict::stabilizing) << trace.diagnostic;
    double previous_T = 0.0;
    for (const HomotopyState& s : trace.states) {
      EXPECT_GT(s.T, previous_T);
      previous_T = s.T;
      EXPECT_TRUE(is_T_stabilizing(closed_loop(p, s.pi).cal_A, s.T));
      EXPECT_LE(grad_discounted(p, s.pi, s.T).norm(),
                trace.config.tol_corrector);
      EXPECT_LE(s.grad_norm, trace.config.tol_corrector);
      EXPECT_NEAR(s.cost, cost(p, s.pi, s.T).value, 1e-12 * (1.0 + s.cost));
      EXPECT_EQ(s.pi.R2, s.pi.R2.transpose());
    }
    EXPECT_NEAR(trace.states.back().T, trace.config.T_max, 1e-9);
  }
}

TEST(Continuation, FailuresEndWithDiagnostic) {
  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const SynthesisProblem p = correlated(seed).problem;
    HomotopyTrace trace;
    ASSERT_NO_THROW(trace = continuation_run(p));
    const FinalResult final = finalize(p, trace);
    if (final.verdict != Verdict::stabilizing) {
      ++failures;
      EXPECT_FALSE(final.diagnostic.empty()) << "seed " << seed;
      EXPECT_FALSE(final.V_inf.has_value());
    }
  }
  EXPECT_GT(failures, 0);
}

TEST(Finalize, StabilizingEndpointReportsUndiscountedCost) {
  const SynthesisProblem p = correlated(5).problem;
  const HomotopyTrace trace = continuation_run(p);
  const FinalResult final = finalize(p, trace);
  ASSERT_EQ(final.verdict, Verdict::stabilizing);
  EXPECT_LT(final.abscissa, -1e-9);
  ASSERT_TRUE(final.V_inf.has_value());
  EXPECT_NEAR(*final.V_inf, cost(p, final.controller, kInfiniteHorizon).value,
              1e-12);
  ASSERT_TRUE(final.grad_inf_norm.has_value());
  EXPECT_LE(*final.grad_inf_norm, 10.0 * trace.config.tol_corrector);
}

TEST(Finalize, UnstableEndpointIsNotStabilizing) {
  const RandomInstance inst = correlated(1);
  const double abscissa =
      spectral_abscissa(closed_loop(inst.problem, inst.controller).cal_A);
  ASSERT_GT(abscissa, 1e-9);
  HomotopyTrace trace;
  trace.verdict = Verdict::stabilizing;
  trace.states.push_back({1.0, inst.controller, 0.0, 0.0, abscissa, 0.0});
  const FinalResult final = finalize(inst.problem, trace);
  EXPECT_EQ(final.verdict, Verdict::diverged);
  EXPECT_FALSE(final.V_inf.has_value());
}

TEST(Finalize, ZeroDriftEndpointIsMarginal) {
  const SynthesisProblem p = testing::trivial_problem(correlated(1).problem);
  HomotopyTrace trace;
  trace.verdict = Verdict::stabilizing;
  trace.states.push_back({1.0, ParameterTriple::zero(2, 4, 2), 0, 0, 0, 0});
  const FinalResult final = finalize(p, trace);
  EXPECT_EQ(final.verdict, Verdict::marginal);
  EXPECT_FALSE(final.V_inf.has_value());
}

TEST(Finalize, EmptyTraceIsStepFailure) {
  const FinalResult final = finalize(correlated(1).problem, HomotopyTrace{});
  EXPECT_EQ(final.verdict, Verdict::step_failure);
  EXPECT_FALSE(final.diagnostic.empty());
}

TEST(Polish, StationaryStartIsUnchanged) {
  for (const testing::StationaryInstance& m :
       testing::infinite_horizon_minima()) {
    const PolishResult r = gradient_descent_polish(m.problem, m.pi,
                                                   kInfiniteHorizon, {1e-9});
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ((r.pi - m.pi).norm(), 0.0);
  }
}

TEST(Polish, NeverIncreasesCost) {
  std::mt19937_64 rng(6);
  for (const RandomInstance& inst : testing::hurwitz_instances(5)) {
    const double T =
        testing::admissible_T(inst.problem, inst.controller, rng);
    const PolishResult r = gradient_descent_polish(
        inst.problem, inst.controller, T, {1e-9, 50});
    EXPECT_LE(r.cost_after, r.cost_before);
    EXPECT_NEAR(r.cost_before, cost(inst.problem, inst.controller, T).value,
                1e-12 * (1.0 + r.cost_before));
    EXPECT_NEAR(r.cost_after, cost(inst.problem, r.pi, T).value,
                1e-12 * (1.0 + r.cost_after));
    EXPECT_TRUE(is_T_stabilizing(closed_loop(inst.problem, r.pi).cal_A, T));
  }
}

// The decrease along the projected gradient matches its first-order
// prediction as the step shrinks.
TEST(Polish, DecreaseMatchesFirstOrderPrediction) {
  for (const RandomInstance& inst : testing::hurwitz_instances(3)) {
    const double T = 5.0;
    const GradientTriple g = grad_discounted(inst.problem, inst.controller, T);
    const SubspaceBasis normal =
        normal_basis(inst.controller, inst.problem.structure);
    const GradientTriple step = project(g, normal);
    const double V = cost(inst.problem, inst.controller, T).value;
    double previous = INFINITY;
    for (double alpha : {1e-4, 1e-5, 1e-6, 1e-7}) {
      const double actual =
          V - cost(inst.problem, inst.controller - alpha * step, T).value;
      const double predicted = alpha * g.dot(step);
      const double gap = std::abs(actual / predicted - 1.0);
      EXPECT_LT(gap, previous);
      previous = gap;
    }
    EXPECT_LE(previous, 1e-2);
  }
}

}  // namespace
}  // namespace cqlqg

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

namespace cqlqg::testing {

Matrix bJ() {
  Matrix m(2, 2);
  m << 0.0, 1.0, -1.0, 0.0;
  return m;
}

ClosedLoopProblem raw_system(const Matrix& A, const Matrix& B, const Matrix& C,
                             const Matrix& Sigma) {
  ClosedLoopProblem cp;
  cp.cal_A = A;
  cp.cal_B = B;
  cp.cal_C = C;
  cp.Sigma = Sigma;
  return cp;
}

Matrix kron_ale(const Matrix& A, const Matrix& W) {
  const Eigen::Index k = A.rows();
  const Matrix I = Matrix::Identity(k, k);
  Matrix K(k * k, k * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      K.block(i * k, j * k, k, k) = I(i, j) * A + A(i, j) * I;
    }
  }
  const Vector w = Eigen::Map<const Vector>(W.data(), k * k);
  const Vector x = K.fullPivLu().solve(-w);
  return Eigen::Map<const Matrix>(x.data(), k, k);
}

Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

Matrix random_symmetric(int n, std::mt19937_64& rng, double scale) {
  const Matrix m = random_matrix(n, n, rng, scale);
  return 0.5 * (m + m.transpose());
}

Matrix random_symplectic(const Matrix& Theta, std::mt19937_64& rng,
                         double scale) {
  const Matrix g = Theta * random_symmetric(Theta.rows(), rng, scale);
  return g.exp();
}

ParameterTriple random_direction(const ControllerTriple& like,
                                 std::mt19937_64& rng) {
  ParameterTriple d;
  d.R2 = random_symmetric(like.n(), rng);
  d.b = random_matrix(like.n(), like.m2(), rng);
  d.e = random_matrix(like.n(), like.p1(), rng);
  return (1.0 / d.norm()) * d;
}

std::vector<RandomInstance> hurwitz_instances(int count,
                                              const Dimensions& dims,
                                              std::uint64_t first_seed) {
  std::vector<RandomInstance> out;
  for (std::uint64_t seed = first_seed;
       static_cast<int>(out.size()) < count; ++seed) {
    if (seed > first_seed + 20000) {
      throw std::runtime_error("hurwitz_instances: seed scan exhausted");
    }
    RandomInstance inst = random_problem(dims, seed);
    const ClosedLoopProblem cp = closed_loop(inst.problem, inst.controller);
    if (spectral_abscissa(cp.cal_A) < -1e-3) out.push_back(std::move(inst));
  }
  return out;
}

double admissible_T(const SynthesisProblem& problem, const ControllerTriple& pi,
                    std::mt19937_64& rng) {
  const double max_T =
      max_admissible_T(closed_loop(problem, pi).cal_A);
  const double upper = std::isfinite(max_T) ? 0.5 * max_T : 50.0;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  return upper * u(rng);
}

std::vector<HorizonInstance> horizon_instances(int count, std::uint64_t salt) {
  std::mt19937_64 rng(salt);
  RandomProblemOptions opt;
  opt.correlated_sigma = true;
  std::vector<HorizonInstance> out;
  for (std::uint64_t seed = 1; static_cast<int>(out.size()) < count; ++seed) {
    const RandomInstance inst = random_problem({}, seed, opt);
    const double T = admissible_T(inst.problem, inst.controller, rng);
    out.push_back({inst.problem, inst.controller, T});
  }
  return out;
}

Vector fd_cost_gradient(const SynthesisProblem& problem,
                        const ControllerTriple& pi, double T) {
  const int n = pi.n(), m2 = pi.m2(), p1 = pi.p1();
  const double h = 1e-6 * (1.0 + pi.norm());
  return fd_gradient(
      [&](const Vector& x) {
        return cost(problem, ParameterTriple::from_vector(x, n, m2, p1), T)
            .value;
      },
      pi.to_vector(), h);
}

double coordinatewise_error(const Vector& analytic, const Vector& fd) {
  const double floor = 1e-3 * analytic.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double scale = std::max(std::abs(analytic(k)), floor);
    worst = std::max(worst, std::abs(fd(k) - analytic(k)) / scale);
  }
  return worst;
}

SynthesisProblem without_cost(const SynthesisProblem& problem) {
  SynthesisProblem out = problem;
  out.F.setZero();
  out.G.setZero();
  return out;
}

SynthesisProblem trivial_problem(const SynthesisProblem& problem) {
  SynthesisProblem out = without_cost(problem);
  out.physical.R1.setZero();
  out.physical.M1.setZero();
  out.physical.L1.setZero();
  out.plant.A.setZero();
  out.plant.B.setZero();
  out.plant.C.setZero();
  out.plant.E.setZero();
  out.Sigma.setIdentity();
  return out;
}

Matrix sigma_variation(const Matrix& Sigma, const Matrix& g) {
  const Eigen::Index n = g.rows();
  Matrix out = Matrix::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = Sigma.topRightCorner(n, n) * g.transpose();
  out.bottomLeftCorner(n, n) = g * Sigma.bottomLeftCorner(n, n);
  out.bottomRightCorner(n, n) = g * Sigma.bottomRightCorner(n, n) +
                                Sigma.bottomRightCorner(n, n) * g.transpose();
  return out;
}

Matrix transform_sigma(const Matrix& Sigma, const Matrix& sigma) {
  const Eigen::Index n = sigma.rows();
  Matrix T = Matrix::Identity(2 * n, 2 * n);
  T.bottomRightCorner(n, n) = sigma;
  return T * Sigma * T.transpose();
}

std::vector<std::uint64_t> stabilizing_seeds() { return {5, 17}; }

const std::vector<StationaryInstance>& infinite_horizon_minima() {
  static const std::vector<StationaryInstance> minima = [] {
    std::vector<StationaryInstance> out;
    RandomProblemOptions opt;
    opt.correlated_sigma = true;
    for (std::uint64_t seed : stabilizing_seeds()) {
      const RandomInstance inst = random_problem({}, seed, opt);
      const HomotopyTrace trace = continuation_run(inst.problem);
      const FinalResult final = finalize(inst.problem, trace);
      if (final.verdict != Verdict::stabilizing) {
        throw std::runtime_error("homotopy did not stabilize seed " +
                                 std::to_string(seed));
      }
      out.push_back({inst.problem, final.controller});
    }
    return out;
  }();
  return minima;
}

}  // namespace cqlqg::testing

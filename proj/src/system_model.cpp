#include "cqlqg/system_model.hpp"

#include <random>
#include <set>
#include <sstream>

#include "cqlqg/errors.hpp"

namespace cqlqg {
namespace {

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << name << " is " << M.rows() << "x" << M.cols() << ", expected "
        << rows << "x" << cols;
    throw DimensionError(msg.str());
  }
}

/// Uniform doubles in (-1, 1) from the top 53 bits of a 64-bit engine, so
/// output does not depend on the standard library's distribution code.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = scale * next();
    }
    return out;
  }

  Matrix symmetric(Eigen::Index order, double scale) {
    return symmetrize(matrix(order, order, scale));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

FeedthroughReport validate_feedthrough(const Matrix& D) {
  FeedthroughReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };
  const Eigen::Index p = D.rows();
  const Eigen::Index m = D.cols();
  if (p % 2 != 0 || m % 2 != 0 || p == 0 || p > m) {
    std::ostringstream msg;
    msg << "shape " << p << "x" << m << " must have even p <= m";
    fail(msg.str());
    return report;
  }

  std::vector<Eigen::Index> selected(p, -1);
  std::set<Eigen::Index> used;
  for (Eigen::Index i = 0; i < p; ++i) {
    int ones = 0;
    bool binary = true;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (D(i, j) == 1.0) {
        ++ones;
        selected[i] = j;
      } else if (D(i, j) != 0.0) {
        binary = false;
      }
    }
    if (!binary || ones != 1) {
      fail("row " + std::to_string(i + 1) +
           " is not a row of a permutation matrix");
      selected[i] = -1;
      continue;
    }
    if (!used.insert(selected[i]).second) {
      fail("row " + std::to_string(i + 1) + " repeats column " +
           std::to_string(selected[i] + 1));
    }
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (selected[i] < 0) continue;
    const Eigen::Index partner = (selected[i] + m / 2) % m;
    if (!used.count(partner)) {
      fail("row " + std::to_string(i + 1) + " selects channel " +
           std::to_string(selected[i] + 1) + " without its conjugate " +
           std::to_string(partner + 1));
    }
  }
  return report;
}

Matrix canonical_feedthrough(int p, int m) {
  if (p % 2 != 0 || m % 2 != 0 || p < 2 || p > m) {
    throw DimensionError("canonical_feedthrough: need even 2 <= p <= m");
  }
  Matrix D = Matrix::Zero(p, m);
  for (int k = 0; k < p / 2; ++k) {
    D(k, k) = 1.0;
    D(p / 2 + k, m / 2 + k) = 1.0;
  }
  return D;
}

Plant plant_from_physical(const PlantPhysical& phys, const ItoCcrStructure& s,
                          const Matrix& J2_tilde) {
  require_shape(phys.R1, s.n, s.n, "R1");
  require_shape(phys.M1, s.m1, s.n, "M1");
  require_shape(phys.L1, s.p2, s.n, "L1");
  require_shape(phys.D, s.p1, s.m1, "D");
  require_shape(J2_tilde, s.p2, s.p2, "J2_tilde");
  if (!is_symmetric(phys.R1)) throw StructureError("R1 must be symmetric");

  Plant plant;
  plant.A = 2.0 * s.Theta1 *
            (phys.R1 + phys.M1.transpose() * s.J1 * phys.M1 +
             phys.L1.transpose() * J2_tilde * phys.L1);
  plant.B = 2.0 * s.Theta1 * phys.M1.transpose();
  plant.C = 2.0 * phys.D * s.J1 * phys.M1;
  plant.D = phys.D;
  plant.E = 2.0 * s.Theta1 * phys.L1.transpose();
  return plant;
}

ControllerOutputs derive_ac(const ControllerTriple& pi, const Matrix& d,
                            const ItoCcrStructure& s, const Matrix& J1_tilde) {
  require_shape(pi.R2, s.n, s.n, "R2");
  require_shape(pi.b, s.n, s.m2, "b");
  require_shape(pi.e, s.n, s.p1, "e");
  require_shape(d, s.p2, s.m2, "d");
  require_shape(J1_tilde, s.p1, s.p1, "J1_tilde");
  if (s.Theta2_inv.rows() != s.n) {
    throw StructureError("Theta2 is singular or its inverse is missing");
  }
  ControllerOutputs out;
  out.a = 2.0 * s.Theta2 * pi.R2 -
          0.5 *
              (pi.b * s.J2 * pi.b.transpose() +
               pi.e * J1_tilde * pi.e.transpose()) *
              s.Theta2_inv;
  out.c = -d * s.J2 * pi.b.transpose() * s.Theta2_inv;
  return out;
}

ControllerPhysical controller_physical(const ControllerTriple& pi,
                                       const ItoCcrStructure& s) {
  return {pi.R2, 0.5 * (s.Theta2_inv * pi.b).transpose(),
          0.5 * (s.Theta2_inv * pi.e).transpose()};
}

ClosedLoopProblem assemble_closed_loop(const Plant& plant,
                                       const ControllerTriple& pi,
                                       const Matrix& d, const Matrix& F,
                                       const Matrix& G, const Matrix& Sigma,
                                       const ItoCcrStructure& s) {
  const int n = s.n;
  require_shape(plant.A, n, n, "A");
  require_shape(plant.B, n, s.m1, "B");
  require_shape(plant.C, s.p1, n, "C");
  require_shape(plant.D, s.p1, s.m1, "D");
  require_shape(plant.E, n, s.p2, "E");
  require_shape(F, F.rows(), n, "F");
  require_shape(G, F.rows(), s.p2, "G");
  require_shape(Sigma, 2 * n, 2 * n, "Sigma");
  if (!has_full_column_rank(G)) {
    throw StructureError("G must have full column rank");
  }

  const Matrix J1_tilde = plant.D * s.J1 * plant.D.transpose();
  const ControllerOutputs ac = derive_ac(pi, d, s, J1_tilde);

  ClosedLoopProblem cp;
  cp.cal_A.resize(2 * n, 2 * n);
  cp.cal_A << plant.A, plant.E * ac.c, pi.e * plant.C, ac.a;
  cp.cal_B.resize(2 * n, s.m());
  cp.cal_B << plant.B, plant.E * d, pi.e * plant.D, pi.b;
  cp.cal_C.resize(F.rows(), 2 * n);
  cp.cal_C << F, G * ac.c;
  cp.F = F;
  cp.G = G;
  cp.Sigma = Sigma;
  cp.structure = s;
  return cp;
}

ClosedLoopEnergy closed_loop_energy(const PlantPhysical& plant,
                                    const ControllerPhysical& controller,
                                    const Matrix& C, const Matrix& c,
                                    const Matrix& D, const Matrix& d) {
  const Eigen::Index n = plant.R1.rows();
  require_shape(controller.R2, n, n, "R2");
  require_shape(C, D.rows(), n, "C");
  require_shape(c, d.rows(), n, "c");
  require_shape(plant.L1, d.rows(), n, "L1");
  require_shape(controller.L2, D.rows(), n, "L2");
  require_shape(controller.M2, d.cols(), n, "M2");
  require_shape(plant.M1, D.cols(), n, "M1");

  ClosedLoopEnergy out;
  const Matrix off = 0.5 * (plant.L1.transpose() * c +
                            C.transpose() * controller.L2);
  out.R.resize(2 * n, 2 * n);
  out.R << plant.R1, off, off.transpose(), controller.R2;
  out.M.resize(D.cols() + d.cols(), 2 * n);
  out.M << plant.M1, D.transpose() * controller.L2,
      d.transpose() * plant.L1, controller.M2;
  return out;
}

Matrix drift_from_energy(const ClosedLoopEnergy& energy,
                         const ItoCcrStructure& s) {
  return 2.0 * s.Theta *
         (energy.R + energy.M.transpose() * s.J * energy.M);
}

double pr_residual(const Matrix& cal_A, const Matrix& cal_B,
                   const Matrix& Theta, const Matrix& J) {
  return (cal_A * Theta + Theta * cal_A.transpose() +
          cal_B * J * cal_B.transpose())
      .norm();
}

double pr_residual(const ClosedLoopProblem& cp) {
  if (!cp.structure) {
    throw StructureError("pr_residual needs the Ito/CCR structure");
  }
  return pr_residual(cp.cal_A, cp.cal_B, cp.structure->Theta,
                     cp.structure->J);
}

bool has_full_column_rank(const Matrix& G) {
  if (G.cols() == 0) return true;
  if (G.rows() < G.cols()) return false;
  Eigen::JacobiSVD<Matrix> svd(G);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > 1e-10 * std::max(1.0, sv(0));
}

SynthesisProblem make_problem(const ItoCcrStructure& s,
                              const PlantPhysical& phys, const Matrix& d,
                              const Matrix& F, const Matrix& G,
                              const Matrix& Sigma) {
  require_shape(d, s.p2, s.m2, "d");
  require_shape(F, F.rows(), s.n, "F");
  require_shape(G, F.rows(), s.p2, "G");
  require_shape(Sigma, 2 * s.n, 2 * s.n, "Sigma");
  for (const auto& [M, name] :
       {std::pair<const Matrix&, const char*>{phys.D, "D"}, {d, "d"}}) {
    const FeedthroughReport fr = validate_feedthrough(M);
    if (!fr.ok) {
      std::string msg = std::string("feedthrough ") + name + " invalid:";
      for (const auto& v : fr.violations) msg += " " + v + ";";
      throw StructureError(msg);
    }
  }
  if (!has_full_column_rank(G)) {
    throw StructureError("G must have full column rank");
  }
  if (!is_symmetric(Sigma)) throw StructureError("Sigma must be symmetric");
  if (!quantum_psd_check(Sigma, s.Theta)) {
    throw StructureError("Sigma + i Theta is not positive semi-definite");
  }

  SynthesisProblem problem;
  problem.structure = s;
  problem.physical = phys;
  problem.d = d;
  problem.J1_tilde = phys.D * s.J1 * phys.D.transpose();
  problem.J2_tilde = d * s.J2 * d.transpose();
  problem.plant = plant_from_physical(phys, s, problem.J2_tilde);
  problem.F = F;
  problem.G = G;
  problem.Sigma = symmetrize(Sigma);
  return problem;
}

ControllerOutputs controller_outputs(const SynthesisProblem& problem,
                                     const ControllerTriple& pi) {
  return derive_ac(pi, problem.d, problem.structure, problem.J1_tilde);
}

ClosedLoopProblem closed_loop(const SynthesisProblem& problem,
                              const ControllerTriple& pi) {
  const ItoCcrStructure& s = problem.structure;
  const int n = s.n;
  const Plant& plant = problem.plant;
  const ControllerOutputs ac = controller_outputs(problem, pi);

  // Same blocks as assemble_closed_loop, without re-validating G so that
  // degenerate weights (F = G = 0) remain usable.
  ClosedLoopProblem cp;
  cp.cal_A.resize(2 * n, 2 * n);
  cp.cal_A << plant.A, plant.E * ac.c, pi.e * plant.C, ac.a;
  cp.cal_B.resize(2 * n, s.m());
  cp.cal_B << plant.B, plant.E * problem.d, pi.e * plant.D, pi.b;
  cp.cal_C.resize(problem.F.rows(), 2 * n);
  cp.cal_C << problem.F, problem.G * ac.c;
  cp.F = problem.F;
  cp.G = problem.G;
  cp.Sigma = problem.Sigma;
  cp.structure = s;
  return cp;
}

RandomInstance random_problem(const Dimensions& dims, std::uint64_t seed,
                              const RandomProblemOptions& options) {
  if (!(options.scale > 0.0)) {
    throw DimensionError("random_problem: scale must be positive");
  }
  const ItoCcrStructure s =
      make_structure(dims.n, dims.m1, dims.m2, dims.p1, dims.p2);
  if (dims.r < dims.p2) {
    throw DimensionError("random_problem: r must be >= p2 for rank(G) = p2");
  }
  const int n = dims.n;
  const double k = options.scale;
  UniformSource rng(seed);

  PlantPhysical phys;
  phys.R1 = rng.symmetric(n, k);
  phys.M1 = rng.matrix(dims.m1, n, k);
  phys.L1 = rng.matrix(dims.p2, n, k);
  phys.D = canonical_feedthrough(dims.p1, dims.m1);
  const Matrix d = canonical_feedthrough(dims.p2, dims.m2);

  ControllerTriple pi;
  pi.R2 = rng.symmetric(n, k);
  pi.b = rng.matrix(n, dims.m2, k);
  pi.e = rng.matrix(n, dims.p1, k);

  const Matrix F = rng.matrix(dims.r, n, k);
  Matrix G = rng.matrix(dims.r, dims.p2, k);
  while (!has_full_column_rank(G)) G = rng.matrix(dims.r, dims.p2, k);

  Matrix Sigma = Matrix::Identity(2 * n, 2 * n);
  if (options.correlated_sigma) {
    const Matrix L = rng.matrix(2 * n, 2 * n, 1.0);
    Sigma += L * L.transpose() / (2.0 * n);
  }
  return {make_problem(s, phys, d, F, G, Sigma), pi};
}

}  // namespace cqlqg

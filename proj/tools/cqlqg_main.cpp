#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cqlqg/geometry.hpp"
#include "cqlqg/homotopy.hpp"
#include "cqlqg/io.hpp"
#include "cqlqg/performance.hpp"

namespace fs = std::filesystem;
using namespace cqlqg;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadInput = 2,
  kMarginal = 3,
  kNotStabilizing = 4,
};

struct RunConfig {
  std::string in;
  std::string out;
  std::uint64_t seed = 1;
  double tol_corrector = 1e-7;
  double tol_ale = 1e-10;
  double tol_fd = 1e-5;
  double T0 = 0.0;
  double T_max = 1e4;
  double h0 = 0.25;
  std::string format;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("cqlqg");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("CQLQG_LOG")) {
    const std::string level(env);
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else if (level != "info") spdlog::warn("ignoring CQLQG_LOG={}", level);
  }
}

double parse_horizon(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfiniteHorizon;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(),
                                   value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !(value > 0.0)) {
    throw PreconditionError("horizon must be a positive number or 'inf'");
  }
  return value;
}

std::vector<std::string> split_columns(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void emit(const std::string& out_path, const std::string& contents) {
  if (out_path.empty()) {
    std::cout << contents;
  } else {
    write_atomic(out_path, contents);
  }
}

int cmd_gen(const RunConfig& cfg, const Dimensions& dims, double scale,
            bool identity_sigma, const std::string& controller_out) {
  RandomProblemOptions opt;
  opt.scale = scale;
  opt.correlated_sigma = !identity_sigma;
  const RandomInstance inst = random_problem(dims, cfg.seed, opt);
  const std::string text = problem_to_json(inst.problem, cfg.seed);
  // The written file must parse back and pass the model validators.
  problem_from_json(text);
  write_atomic(cfg.out, text);
  if (!controller_out.empty()) {
    write_atomic(controller_out,
                 controller_to_json(inst.problem, inst.controller));
  }
  spdlog::info("wrote problem (n={}, m1={}, m2={}, p1={}, p2={}, r={}) to {}",
               dims.n, dims.m1, dims.m2, dims.p1, dims.p2, dims.r, cfg.out);
  return kOk;
}

int cmd_synth(const RunConfig& cfg, const std::string& space) {
  const ProblemFile file = problem_from_json(read_text(cfg.in));
  const SynthesisProblem& problem = file.problem;

  HomotopyConfig hc;
  hc.T0 = cfg.T0;
  hc.T_max = cfg.T_max;
  hc.h0 = cfg.h0;
  hc.tol_corrector = cfg.tol_corrector;
  hc.space = space == "normal" ? HomotopySpace::normal : HomotopySpace::full;
  if (hc.T0 > 0.0 && hc.T0 >= hc.T_max) {
    throw PreconditionError("--t0 must be smaller than --tmax");
  }

  const HomotopyTrace trace = continuation_run(problem, hc);
  for (const HomotopyState& st : trace.states) {
    spdlog::debug("T={} cost={} grad_norm={} abscissa={}", st.T, st.cost,
                  st.grad_norm, st.abscissa);
  }
  const FinalResult final = finalize(problem, trace);

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const TraceFile records = trace_records(trace);
  write_atomic(dir / "trace.json", trace_to_json(records, final));
  write_atomic(dir / "trace.txt", trace_to_text(records));
  if (!trace.states.empty()) {
    write_atomic(dir / "controller.json",
                 controller_to_json(problem, final.controller));
  }

  spdlog::info("verdict {} after {} nodes (last T = {})",
               to_string(final.verdict), trace.states.size(),
               trace.states.empty() ? 0.0 : trace.states.back().T);
  if (!final.diagnostic.empty()) spdlog::info("{}", final.diagnostic);
  if (final.V_inf) spdlog::info("infinite-horizon cost {}", *final.V_inf);

  switch (final.verdict) {
    case Verdict::stabilizing: return kOk;
    case Verdict::marginal: return kMarginal;
    default: return kNotStabilizing;
  }
}

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  bool required = true;
};

double max_fd_error(const SynthesisProblem& problem, const ControllerTriple& pi,
                    double T) {
  const Vector grad = grad_discounted(problem, pi, T).to_vector();
  const Vector x = pi.to_vector();
  const double scale = grad.cwiseAbs().maxCoeff();
  // Near a stationary point the difference quotient is limited by rounding
  // of the cost, so the error is measured against the cost scale as well.
  const double floor = 1e-4 * (1.0 + std::abs(cost(problem, pi, T).value));
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(x(k)));
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const auto at = [&](const Vector& v) {
      return cost(problem,
                  ParameterTriple::from_vector(v, pi.n(), pi.m2(), pi.p1()), T)
          .value;
    };
    const double fd = (at(xp) - at(xm)) / (2.0 * h);
    const double denom = std::max({std::abs(grad(k)), 1e-3 * scale, floor});
    worst = std::max(worst, std::abs(fd - grad(k)) / denom);
  }
  return worst;
}

std::vector<Check> plant_checks(const SynthesisProblem& problem) {
  const ItoCcrStructure& s = problem.structure;
  const Plant& p = problem.plant;
  std::vector<Check> checks;

  const FeedthroughReport fD = validate_feedthrough(problem.physical.D);
  checks.push_back({"plant_feedthrough_D", fD.ok,
                    static_cast<double>(fD.violations.size()), 0.0});
  const FeedthroughReport fd = validate_feedthrough(problem.d);
  checks.push_back({"controller_feedthrough_d", fd.ok,
                    static_cast<double>(fd.violations.size()), 0.0});

  Matrix inputs(s.n, s.m1 + s.p2);
  inputs << p.B, p.E;
  const Matrix J = block_diag(s.J1, problem.J2_tilde);
  const double pr = pr_residual(p.A, inputs, s.Theta1, J);
  const double pr_tol = 1e-9 * (1.0 + (inputs * J * inputs.transpose()).norm());
  checks.push_back({"plant_pr_residual", pr <= pr_tol, pr, pr_tol});

  const double q = min_quantum_eigenvalue(problem.Sigma, s.Theta);
  checks.push_back({"sigma_quantum_psd", q >= -1e-9, q, -1e-9});
  checks.push_back({"G_full_column_rank", has_full_column_rank(problem.G),
                    0.0, 0.0});
  return checks;
}

std::vector<Check> controller_checks(const SynthesisProblem& problem,
                                     const ControllerFile& file, double T,
                                     const RunConfig& cfg, bool expect_min) {
  const ItoCcrStructure& s = problem.structure;
  const int n = s.n;
  std::vector<Check> checks;

  ClosedLoopProblem cp = closed_loop(problem, file.pi);
  const ControllerOutputs derived = controller_outputs(problem, file.pi);
  const Matrix a = file.a.value_or(derived.a);
  const Matrix c = file.c.value_or(derived.c);
  cp.cal_A.topRightCorner(n, n) = problem.plant.E * c;
  cp.cal_A.bottomRightCorner(n, n) = a;
  cp.cal_C.rightCols(n) = problem.G * c;

  const double pr = pr_residual(cp);
  const Matrix BJB = cp.cal_B * s.J * cp.cal_B.transpose();
  const double pr_tol = 1e-9 * (1.0 + BJB.norm());
  checks.push_back({"closed_loop_pr_residual", pr <= pr_tol, pr, pr_tol});

  const double absc = spectral_abscissa(cp.cal_A);
  const double shift = std::isfinite(T) ? 1.0 / (2.0 * T) : 0.0;
  const bool stabilizing = absc - shift < -kHurwitzMargin;
  checks.push_back({"T_stabilizing", stabilizing, absc, shift});
  if (!stabilizing) return checks;

  const DiscountedGramianSet g = gramians_discounted(cp, T, false);
  Matrix W = cp.cal_B * cp.cal_B.transpose();
  if (std::isfinite(T)) W += cp.Sigma / T;
  const double ale = ale_residual(g.A_T, g.P, W);
  const double ale_tol = cfg.tol_ale * (1.0 + W.norm());
  checks.push_back({"controllability_ale_residual", ale <= ale_tol, ale,
                    ale_tol});
  const double q = min_quantum_eigenvalue(g.P, s.Theta);
  checks.push_back({"gramian_quantum_psd", q >= -1e-8, q, -1e-8});

  const double fd = max_fd_error(problem, file.pi, T);
  checks.push_back({"gradient_fd", fd <= cfg.tol_fd, fd, cfg.tol_fd});

  const StrongMinReport sm = check_strong_local_min(problem, file.pi, T);
  checks.push_back({"strong_local_min",
                    sm.stationary && sm.psd && sm.normal_pd && sm.kernel_match,
                    sm.grad_norm, 1e-6, expect_min});
  return checks;
}

std::string report_json(const std::vector<Check>& checks, bool pass) {
  std::ostringstream out;
  out << "{\n  \"pass\": " << (pass ? "true" : "false") << ",\n  \"checks\": [";
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const Check& c = checks[k];
    out << (k ? "," : "") << "\n    {\"name\": \"" << c.name
        << "\", \"pass\": " << (c.pass ? "true" : "false")
        << ", \"required\": " << (c.required ? "true" : "false")
        << ", \"value\": " << format_double(c.value)
        << ", \"threshold\": " << format_double(c.threshold) << "}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

std::string report_csv(const std::vector<Check>& checks) {
  std::string out = "name,pass,required,value,threshold\n";
  for (const Check& c : checks) {
    out += c.name + "," + (c.pass ? "1" : "0") + "," + (c.required ? "1" : "0") +
           "," + format_double(c.value) + "," + format_double(c.threshold) +
           "\n";
  }
  return out;
}

int cmd_verify(const RunConfig& cfg, const std::string& controller_path,
               const std::string& horizon, bool expect_min) {
  const ProblemFile file = problem_from_json(read_text(cfg.in));
  const double T = parse_horizon(horizon);
  std::vector<Check> checks = plant_checks(file.problem);
  if (!controller_path.empty()) {
    const ControllerFile ctrl =
        controller_from_json(read_text(controller_path), file.problem);
    for (Check& c :
         controller_checks(file.problem, ctrl, T, cfg, expect_min)) {
      checks.push_back(std::move(c));
    }
  }
  bool pass = true;
  for (const Check& c : checks) {
    if (c.required && !c.pass) {
      pass = false;
      spdlog::info("check {} failed: value {} threshold {}", c.name,
                   format_double(c.value), format_double(c.threshold));
    }
  }
  emit(cfg.out, cfg.format == "csv" ? report_csv(checks)
                                    : report_json(checks, pass));
  return pass ? kOk : kFailure;
}

int cmd_export(const RunConfig& cfg, const std::string& columns) {
  const TraceFile trace = trace_from_json(read_text(cfg.in));
  const std::vector<std::string> cols =
      columns.empty() ? trace_columns(trace) : split_columns(columns);
  emit(cfg.out, cfg.format == "json" ? trace_columns_to_json(trace, cols)
                                     : trace_to_csv(trace, cols));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Coherent quantum LQG controller synthesis by discounted-cost "
               "homotopy"};
  app.require_subcommand(1);

  RunConfig cfg;
  Dimensions dims;
  double scale = 1.0;
  bool identity_sigma = false;
  std::string controller_out;
  std::string space = "full";
  std::string controller_path;
  std::string horizon = "inf";
  bool expect_min = false;
  std::string columns;

  const auto positive = CLI::PositiveNumber;

  CLI::App* gen = app.add_subcommand("gen", "Write a random problem file");
  gen->add_option("--out", cfg.out, "Problem file to write")->required();
  gen->add_option("--seed", cfg.seed, "Random seed");
  gen->add_option("--n", dims.n, "Plant and controller order");
  gen->add_option("--m1", dims.m1, "External input channels");
  gen->add_option("--m2", dims.m2, "Controller noise channels");
  gen->add_option("--p1", dims.p1, "Plant output channels");
  gen->add_option("--p2", dims.p2, "Controller output channels");
  gen->add_option("--r", dims.r, "Cost output dimension");
  gen->add_option("--scale", scale, "Entry scale")->check(positive);
  gen->add_flag("--identity-sigma", identity_sigma,
                "Use Sigma = I instead of a correlated initial covariance");
  gen->add_option("--controller-out", controller_out,
                  "Also write the sample controller drawn with the problem");

  CLI::App* synth = app.add_subcommand("synth", "Run the homotopy synthesis");
  synth->add_option("--in", cfg.in, "Problem file")->required();
  synth->add_option("--out", cfg.out, "Output directory")->required();
  synth->add_option("--seed", cfg.seed, "Unused; the synthesis is deterministic");
  synth->add_option("--t0", cfg.T0, "Initial horizon (0 selects the default)")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--tmax", cfg.T_max, "Final horizon")->check(positive);
  synth->add_option("--tol", cfg.tol_corrector, "Corrector tolerance")
      ->check(positive);
  synth->add_option("--h0", cfg.h0, "Initial step in ln T")->check(positive);
  synth->add_option("--space", space, "Subspace of the continuation")
      ->check(CLI::IsMember({"full", "normal"}));

  CLI::App* verify = app.add_subcommand("verify", "Check a problem/controller");
  verify->add_option("--in", cfg.in, "Problem file")->required();
  verify->add_option("--controller", controller_path, "Controller file");
  verify->add_option("--T", horizon, "Horizon for the checks, or 'inf'");
  verify->add_option("--out", cfg.out, "Report file (default: stdout)");
  verify->add_option("--format", cfg.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  verify->add_option("--tol", cfg.tol_fd, "Finite-difference tolerance")
      ->check(positive);
  verify->add_option("--ale-tol", cfg.tol_ale, "ALE residual tolerance")
      ->check(positive);
  verify->add_flag("--expect-min", expect_min,
                   "Require the second-order optimality check to pass");

  CLI::App* exp = app.add_subcommand("export", "Export trace columns");
  exp->add_option("--in", cfg.in, "Trace JSON file")->required();
  exp->add_option("--out", cfg.out, "Output file (default: stdout)");
  exp->add_option("--columns", columns, "Comma-separated column names");
  exp->add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*gen) return cmd_gen(cfg, dims, scale, identity_sigma, controller_out);
    if (*synth) return cmd_synth(cfg, space);
    if (*verify) return cmd_verify(cfg, controller_path, horizon, expect_min);
    if (*exp) return cmd_export(cfg, columns);
  } catch (const IoError& err) {
    spdlog::error("{}", err.what());
    return kBadInput;
  } catch (const DimensionError& err) {
    spdlog::error("{}", err.what());
    return kBadInput;
  } catch (const StructureError& err) {
    spdlog::error("{}", err.what());
    return kBadInput;
  } catch (const PreconditionError& err) {
    spdlog::error("{}", err.what());
    return kBadInput;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kFailure;
  }
  return kFailure;
}

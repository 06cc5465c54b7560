#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cqlqg/errors.hpp"
#include "cqlqg/homotopy.hpp"
#include "cqlqg/system_model.hpp"

namespace cqlqg {

/// Decimal text with 17 significant digits (exact round trip), independent
/// of the global locale.
std::string format_double(double x);

/// Writes `contents` to a temporary file next to `path`, then renames it over
/// `path`. Throws IoError.
void write_atomic(const std::filesystem::path& path,
                  const std::string& contents);
std::string read_text(const std::filesystem::path& path);

struct ProblemFile {
  SynthesisProblem problem;
  std::optional<std::uint64_t> seed;
};

/// JSON object with the dimensions and the matrices R1, M1, L1, D, d, F, G,
/// Sigma (row-major nested arrays), plus Theta1/Theta2 and the seed when
/// given.
std::string problem_to_json(const SynthesisProblem& problem,
                            std::optional<std::uint64_t> seed = {});
/// Throws IoError on malformed input; validator failures propagate as the
/// library's structural errors.
ProblemFile problem_from_json(const std::string& text);

struct ControllerFile {
  ControllerTriple pi;
  /// Stored outputs; absent when the file only holds (R2, b, e).
  std::optional<Matrix> a;
  std::optional<Matrix> c;
};

std::string controller_to_json(const SynthesisProblem& problem,
                               const ControllerTriple& pi);
/// Shapes are checked against the problem dimensions.
ControllerFile controller_from_json(const std::string& text,
                                    const SynthesisProblem& problem);

struct TraceRecord {
  double T = 0.0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double abscissa = 0.0;
  double min_eig_normal = 0.0;
  std::vector<double> pi;  // R2, b, e, each flattened row by row
};

struct TraceFile {
  int n = 0;
  int m2 = 0;
  int p1 = 0;
  std::string verdict;
  std::string diagnostic;
  std::vector<TraceRecord> records;
};

TraceFile trace_records(const HomotopyTrace& trace);

/// Non-finite numbers are stored as null and read back as NaN.
std::string trace_to_json(const TraceFile& trace,
                          const std::optional<FinalResult>& final = {});
TraceFile trace_from_json(const std::string& text);

/// Whitespace-separated table with a header line, numbers at 17 significant
/// digits.
std::string trace_to_text(const TraceFile& trace);

/// T, cost, grad_norm, abscissa, min_eig_normal, then the controller entries
/// R2_i_j, b_i_j, e_i_j.
std::vector<std::string> trace_columns(const TraceFile& trace);

/// Throws IoError on an unknown column.
std::string trace_to_csv(const TraceFile& trace,
                         const std::vector<std::string>& columns);
/// {"columns": [...], "rows": [[...], ...]}. Throws IoError on an unknown
/// column.
std::string trace_columns_to_json(const TraceFile& trace,
                                  const std::vector<std::string>& columns);

}  // namespace cqlqg

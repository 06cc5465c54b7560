#include "cqlqg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace cqlqg {
namespace {

using nlohmann::json;

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

double read_number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw IoError("expected a number, got " + j.dump());
  return j.get<double>();
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& name, int rows,
                        int cols) {
  auto shape_error = [&] {
    std::ostringstream msg;
    msg << "field '" << name << "' must be a " << rows << "x" << cols
        << " array of rows";
    return IoError(msg.str());
  };
  if (!j.is_array() || static_cast<int>(j.size()) != rows) throw shape_error();
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw shape_error();
    }
    for (int k = 0; k < cols; ++k) {
      if (!row[k].is_number()) {
        throw IoError("field '" + name + "' holds a non-numeric entry");
      }
      m(i, k) = row[k].get<double>();
    }
  }
  return m;
}

const json& field(const json& obj, const std::string& name) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw IoError("missing field '" + name + "'");
  return *it;
}

int int_field(const json& obj, const std::string& name) {
  const json& j = field(obj, name);
  if (!j.is_number_integer()) {
    throw IoError("field '" + name + "' must be an integer");
  }
  return j.get<int>();
}

json parse(const std::string& text, const std::string& kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw IoError(kind + " file is not valid JSON: " + err.what());
  }
  if (!j.is_object()) throw IoError(kind + " file must hold a JSON object");
  return j;
}

void append_row_major(const Matrix& m, std::vector<double>& out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path,
                  const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string problem_to_json(const SynthesisProblem& problem,
                            std::optional<std::uint64_t> seed) {
  const ItoCcrStructure& s = problem.structure;
  json j;
  j["kind"] = "cqlqg-problem";
  j["n"] = s.n;
  j["m1"] = s.m1;
  j["m2"] = s.m2;
  j["p1"] = s.p1;
  j["p2"] = s.p2;
  j["r"] = problem.r();
  if (seed) j["seed"] = *seed;
  j["R1"] = matrix_to_json(problem.physical.R1);
  j["M1"] = matrix_to_json(problem.physical.M1);
  j["L1"] = matrix_to_json(problem.physical.L1);
  j["D"] = matrix_to_json(problem.physical.D);
  j["d"] = matrix_to_json(problem.d);
  j["F"] = matrix_to_json(problem.F);
  j["G"] = matrix_to_json(problem.G);
  j["Sigma"] = matrix_to_json(problem.Sigma);
  const CcrMatrices canonical = canonical_ccr(s.n);
  if (s.Theta1 != canonical.Theta1 || s.Theta2 != canonical.Theta2) {
    j["Theta1"] = matrix_to_json(s.Theta1);
    j["Theta2"] = matrix_to_json(s.Theta2);
  }
  return j.dump(2) + "\n";
}

ProblemFile problem_from_json(const std::string& text) {
  const json j = parse(text, "problem");
  const int n = int_field(j, "n");
  const int m1 = int_field(j, "m1");
  const int m2 = int_field(j, "m2");
  const int p1 = int_field(j, "p1");
  const int p2 = int_field(j, "p2");
  const int r = int_field(j, "r");
  if (n <= 0 || m1 <= 0 || m2 <= 0 || p1 <= 0 || p2 <= 0 || r <= 0) {
    throw IoError("problem dimensions must be positive");
  }

  ItoCcrStructure s;
  if (j.contains("Theta1") || j.contains("Theta2")) {
    s = make_structure(n, m1, m2, p1, p2,
                       matrix_from_json(field(j, "Theta1"), "Theta1", n, n),
                       matrix_from_json(field(j, "Theta2"), "Theta2", n, n));
  } else {
    s = make_structure(n, m1, m2, p1, p2);
  }

  PlantPhysical phys;
  phys.R1 = matrix_from_json(field(j, "R1"), "R1", n, n);
  phys.M1 = matrix_from_json(field(j, "M1"), "M1", m1, n);
  phys.L1 = matrix_from_json(field(j, "L1"), "L1", p2, n);
  phys.D = matrix_from_json(field(j, "D"), "D", p1, m1);
  const Matrix d = matrix_from_json(field(j, "d"), "d", p2, m2);
  const Matrix F = matrix_from_json(field(j, "F"), "F", r, n);
  const Matrix G = matrix_from_json(field(j, "G"), "G", r, p2);
  const Matrix Sigma = matrix_from_json(field(j, "Sigma"), "Sigma", 2 * n,
                                        2 * n);

  ProblemFile out{make_problem(s, phys, d, F, G, Sigma), std::nullopt};
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      throw IoError("field 'seed' must be a non-negative integer");
    }
    out.seed = j["seed"].get<std::uint64_t>();
  }
  return out;
}

std::string controller_to_json(const SynthesisProblem& problem,
                               const ControllerTriple& pi) {
  const ControllerOutputs out = controller_outputs(problem, pi);
  json j;
  j["kind"] = "cqlqg-controller";
  j["R2"] = matrix_to_json(pi.R2);
  j["b"] = matrix_to_json(pi.b);
  j["e"] = matrix_to_json(pi.e);
  j["a"] = matrix_to_json(out.a);
  j["c"] = matrix_to_json(out.c);
  return j.dump(2) + "\n";
}

ControllerFile controller_from_json(const std::string& text,
                                    const SynthesisProblem& problem) {
  const json j = parse(text, "controller");
  const ItoCcrStructure& s = problem.structure;
  ControllerFile out;
  out.pi.R2 = matrix_from_json(field(j, "R2"), "R2", s.n, s.n);
  out.pi.b = matrix_from_json(field(j, "b"), "b", s.n, s.m2);
  out.pi.e = matrix_from_json(field(j, "e"), "e", s.n, s.p1);
  if (!is_symmetric(out.pi.R2)) {
    throw StructureError("controller R2 must be symmetric");
  }
  if (j.contains("a")) out.a = matrix_from_json(j["a"], "a", s.n, s.n);
  if (j.contains("c")) out.c = matrix_from_json(j["c"], "c", s.p2, s.n);
  return out;
}

TraceFile trace_records(const HomotopyTrace& trace) {
  TraceFile out;
  out.verdict = to_string(trace.verdict);
  out.diagnostic = trace.diagnostic;
  for (const HomotopyState& st : trace.states) {
    TraceRecord rec;
    rec.T = st.T;
    rec.cost = st.cost;
    rec.grad_norm = st.grad_norm;
    rec.abscissa = st.abscissa;
    rec.min_eig_normal = st.min_eig_normal;
    append_row_major(st.pi.R2, rec.pi);
    append_row_major(st.pi.b, rec.pi);
    append_row_major(st.pi.e, rec.pi);
    out.n = st.pi.n();
    out.m2 = st.pi.m2();
    out.p1 = st.pi.p1();
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::string trace_to_json(const TraceFile& trace,
                          const std::optional<FinalResult>& final) {
  json j;
  j["kind"] = "cqlqg-trace";
  j["n"] = trace.n;
  j["m2"] = trace.m2;
  j["p1"] = trace.p1;
  j["verdict"] = trace.verdict;
  j["diagnostic"] = trace.diagnostic;
  json nodes = json::array();
  for (const TraceRecord& rec : trace.records) {
    json node;
    node["T"] = number(rec.T);
    node["cost"] = number(rec.cost);
    node["grad_norm"] = number(rec.grad_norm);
    node["abscissa"] = number(rec.abscissa);
    node["min_eig_normal"] = number(rec.min_eig_normal);
    json pi = json::array();
    for (double x : rec.pi) pi.push_back(number(x));
    node["pi"] = std::move(pi);
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  if (final) {
    json f;
    f["verdict"] = to_string(final->verdict);
    f["abscissa"] = number(final->abscissa);
    f["V_inf"] = final->V_inf ? number(*final->V_inf) : json(nullptr);
    f["grad_inf_norm"] =
        final->grad_inf_norm ? number(*final->grad_inf_norm) : json(nullptr);
    f["diagnostic"] = final->diagnostic;
    j["final"] = std::move(f);
  }
  return j.dump(2) + "\n";
}

TraceFile trace_from_json(const std::string& text) {
  const json j = parse(text, "trace");
  TraceFile out;
  out.n = int_field(j, "n");
  out.m2 = int_field(j, "m2");
  out.p1 = int_field(j, "p1");
  if (!field(j, "verdict").is_string()) {
    throw IoError("field 'verdict' must be a string");
  }
  out.verdict = j["verdict"].get<std::string>();
  if (j.contains("diagnostic") && j["diagnostic"].is_string()) {
    out.diagnostic = j["diagnostic"].get<std::string>();
  }
  const json& nodes = field(j, "nodes");
  if (!nodes.is_array()) throw IoError("field 'nodes' must be an array");
  const std::size_t width = static_cast<std::size_t>(
      out.n * out.n + out.n * out.m2 + out.n * out.p1);
  for (const json& node : nodes) {
    if (!node.is_object()) throw IoError("trace node must be an object");
    TraceRecord rec;
    rec.T = read_number(field(node, "T"));
    rec.cost = read_number(field(node, "cost"));
    rec.grad_norm = read_number(field(node, "grad_norm"));
    rec.abscissa = read_number(field(node, "abscissa"));
    rec.min_eig_normal = read_number(field(node, "min_eig_normal"));
    const json& pi = field(node, "pi");
    if (!pi.is_array() || pi.size() != width) {
      throw IoError("trace node 'pi' has the wrong length");
    }
    for (const json& x : pi) rec.pi.push_back(read_number(x));
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> trace_columns(const TraceFile& trace) {
  std::vector<std::string> cols = {"T", "cost", "grad_norm", "abscissa",
                                   "min_eig_normal"};
  auto add_block = [&cols](const std::string& name, int rows, int c) {
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < c; ++k) {
        cols.push_back(name + "_" + std::to_string(i) + "_" +
                       std::to_string(k));
      }
    }
  };
  add_block("R2", trace.n, trace.n);
  add_block("b", trace.n, trace.m2);
  add_block("e", trace.n, trace.p1);
  return cols;
}

namespace {

double column_value(const TraceRecord& rec, std::size_t index) {
  switch (index) {
    case 0: return rec.T;
    case 1: return rec.cost;
    case 2: return rec.grad_norm;
    case 3: return rec.abscissa;
    case 4: return rec.min_eig_normal;
    default: return rec.pi.at(index - 5);
  }
}

std::string render(const TraceFile& trace, const std::vector<std::size_t>& idx,
                   const std::vector<std::string>& names,
                   const std::string& sep) {
  std::string out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out += sep;
    out += names[k];
  }
  out += "\n";
  for (const TraceRecord& rec : trace.records) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k) out += sep;
      out += format_double(column_value(rec, idx[k]));
    }
    out += "\n";
  }
  return out;
}

}  // namespace

std::string trace_to_text(const TraceFile& trace) {
  const std::vector<std::string> names = trace_columns(trace);
  std::vector<std::size_t> idx(names.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::string out = "# verdict: " + trace.verdict + "\n";
  if (!trace.diagnostic.empty()) {
    out += "# diagnostic: " + trace.diagnostic + "\n";
  }
  return out + render(trace, idx, names, " ");
}

namespace {

std::vector<std::size_t> column_indices(
    const TraceFile& trace, const std::vector<std::string>& columns) {
  const std::vector<std::string> all = trace_columns(trace);
  std::vector<std::size_t> idx;
  for (const std::string& name : columns) {
    std::size_t k = 0;
    while (k < all.size() && all[k] != name) ++k;
    if (k == all.size()) throw IoError("unknown trace column '" + name + "'");
    idx.push_back(k);
  }
  return idx;
}

}  // namespace

std::string trace_to_csv(const TraceFile& trace,
                         const std::vector<std::string>& columns) {
  return render(trace, column_indices(trace, columns), columns, ",");
}

std::string trace_columns_to_json(const TraceFile& trace,
                                  const std::vector<std::string>& columns) {
  const std::vector<std::size_t> idx = column_indices(trace, columns);
  json rows = json::array();
  for (const TraceRecord& rec : trace.records) {
    json row = json::array();
    for (std::size_t k : idx) row.push_back(number(column_value(rec, k)));
    rows.push_back(std::move(row));
  }
  json j;
  j["columns"] = columns;
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace cqlqg

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "cqlqg/io.hpp"
#include "support.hpp"

namespace cqlqg {
namespace {

namespace fs = std::filesystem;

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!same_bits(a.data()[k], b.data()[k])) return false;
  }
  return true;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cqlqg_io_" + std::to_string(::testing::UnitTest::GetInstance()
                                             ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TraceFile short_trace() {
  const RandomInstance inst = testing::hurwitz_instances(1).front();
  HomotopyConfig config;
  config.T0 = 0.1;
  config.T_max = 10.0;
  config.initial = inst.controller;
  return trace_records(
      continuation_run(testing::without_cost(inst.problem), config));
}

TEST(FormatDouble, ExactRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int trial = 0; trial < 2000; ++trial) {
    const double x = std::ldexp(mantissa(rng), exponent(rng));
    const std::string text = format_double(x);
    EXPECT_TRUE(same_bits(std::strtod(text.c_str(), nullptr), x)) << text;
  }
  for (double x : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0,
                   std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max()}) {
    EXPECT_TRUE(same_bits(std::strtod(format_double(x).c_str(), nullptr), x));
  }
}

TEST(FormatDouble, NonFiniteSpellings) {
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(FormatDouble, PointDecimalSeparator) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(-2.25), "-2.25");
}

TEST_F(TempDir, AtomicWriteReplacesContents) {
  const fs::path file = dir_ / "out.json";
  write_atomic(file, "first");
  EXPECT_EQ(read_text(file), "first");
  write_atomic(file, "second");
  EXPECT_EQ(read_text(file), "second");
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().filename(), "out.json");
  }
}

TEST_F(TempDir, MissingPathsReported) {
  EXPECT_THROW(read_text(dir_ / "absent.json"), IoError);
  EXPECT_THROW(write_atomic(dir_ / "no" / "such" / "dir.json", "x"), IoError);
}

TEST(ProblemJson, RoundTripIsExact) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomProblemOptions opt;
    opt.correlated_sigma = seed % 2 == 1;
    const RandomInstance inst = random_problem({}, seed, opt);
    const std::string text = problem_to_json(inst.problem, seed);
    const ProblemFile file = problem_from_json(text);
    ASSERT_TRUE(file.seed.has_value());
    EXPECT_EQ(*file.seed, seed);
    const SynthesisProblem& a = inst.problem;
    const SynthesisProblem& b = file.problem;
    EXPECT_TRUE(same_matrix(a.physical.R1, b.physical.R1));
    EXPECT_TRUE(same_matrix(a.physical.M1, b.physical.M1));
    EXPECT_TRUE(same_matrix(a.physical.L1, b.physical.L1));
    EXPECT_TRUE(same_matrix(a.physical.D, b.physical.D));
    EXPECT_TRUE(same_matrix(a.d, b.d));
    EXPECT_TRUE(same_matrix(a.F, b.F));
    EXPECT_TRUE(same_matrix(a.G, b.G));
    EXPECT_TRUE(same_matrix(a.Sigma, b.Sigma));
    EXPECT_TRUE(same_matrix(a.plant.A, b.plant.A));
    EXPECT_EQ(problem_to_json(b, seed), text);
  }
}

TEST(ProblemJson, LargerDimensionsRoundTrip) {
  const RandomInstance inst = random_problem({4, 6, 4, 4, 2, 3}, 3);
  const ProblemFile file = problem_from_json(problem_to_json(inst.problem));
  EXPECT_FALSE(file.seed.has_value());
  EXPECT_TRUE(same_matrix(file.problem.G, inst.problem.G));
  EXPECT_EQ(file.problem.r(), 3);
}

TEST(ProblemJson, MalformedInputRejected) {
  EXPECT_THROW(problem_from_json("not json"), IoError);
  EXPECT_THROW(problem_from_json("{}"), IoError);
  EXPECT_THROW(problem_from_json("[1, 2]"), IoError);
}

TEST(ProblemJson, ShapeMismatchRejected) {
  const RandomInstance inst = random_problem({}, 1);
  std::string text = problem_to_json(inst.problem);
  // Drop the last row of R1 by declaring a larger plant order.
  const std::string key = "\"n\": 2";
  const std::size_t at = text.find(key);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, key.size(), "\"n\": 4");
  EXPECT_THROW(problem_from_json(text), Error);
}

TEST(ControllerJson, RoundTripWithOutputs) {
  const RandomInstance inst = random_problem({}, 2);
  const std::string text = controller_to_json(inst.problem, inst.controller);
  const ControllerFile file = controller_from_json(text, inst.problem);
  EXPECT_TRUE(same_matrix(file.pi.R2, inst.controller.R2));
  EXPECT_TRUE(same_matrix(file.pi.b, inst.controller.b));
  EXPECT_TRUE(same_matrix(file.pi.e, inst.controller.e));
  const ControllerOutputs out = controller_outputs(inst.problem, inst.controller);
  ASSERT_TRUE(file.a.has_value());
  ASSERT_TRUE(file.c.has_value());
  EXPECT_TRUE(same_matrix(*file.a, out.a));
  EXPECT_TRUE(same_matrix(*file.c, out.c));
}

TEST(ControllerJson, ShapeCheckedAgainstProblem) {
  const RandomInstance small = random_problem({}, 2);
  const RandomInstance large = random_problem({4, 4, 4, 2, 2, 2}, 2);
  const std::string text = controller_to_json(small.problem, small.controller);
  EXPECT_THROW(controller_from_json(text, large.problem), Error);
  EXPECT_THROW(controller_from_json("{\"R2\": 1}", small.problem), IoError);
}

TEST(TraceJson, RoundTripIsExact) {
  const TraceFile trace = short_trace();
  ASSERT_GE(trace.records.size(), 2u);
  const TraceFile back = trace_from_json(trace_to_json(trace));
  EXPECT_EQ(back.verdict, trace.verdict);
  EXPECT_EQ(back.n, 2);
  EXPECT_EQ(back.m2, 4);
  EXPECT_EQ(back.p1, 2);
  ASSERT_EQ(back.records.size(), trace.records.size());
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const TraceRecord& a = trace.records[k];
    const TraceRecord& b = back.records[k];
    EXPECT_TRUE(same_bits(a.T, b.T));
    EXPECT_TRUE(same_bits(a.cost, b.cost));
    EXPECT_TRUE(same_bits(a.grad_norm, b.grad_norm));
    EXPECT_TRUE(same_bits(a.abscissa, b.abscissa));
    ASSERT_EQ(a.pi.size(), b.pi.size());
    for (std::size_t i = 0; i < a.pi.size(); ++i) {
      EXPECT_TRUE(same_bits(a.pi[i], b.pi[i]));
    }
  }
  EXPECT_EQ(trace_to_json(back), trace_to_json(trace));
}

TEST(TraceJson, NonFiniteValuesBecomeNull) {
  TraceFile trace;
  trace.n = 2;
  trace.m2 = 4;
  trace.p1 = 2;
  trace.verdict = "stabilizing";
  TraceRecord r;
  r.T = 1.0;
  r.min_eig_normal = std::numeric_limits<double>::infinity();
  r.pi.assign(4 + 8 + 4, 0.0);
  trace.records.push_back(r);
  const std::string text = trace_to_json(trace);
  EXPECT_NE(text.find("null"), std::string::npos);
  EXPECT_TRUE(std::isnan(trace_from_json(text).records[0].min_eig_normal));
}

TEST(TraceJson, MalformedInputRejected) {
  EXPECT_THROW(trace_from_json("{"), IoError);
  EXPECT_THROW(trace_from_json("{\"kind\": \"cqlqg-trace\", \"nodes\": 3}"), IoError);
}

TEST(TraceExport, SelectedColumnsOneRowPerNode) {
  const TraceFile trace = short_trace();
  const std::string csv = trace_to_csv(trace, {"T", "cost"});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "T,cost");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 1);
  }
  EXPECT_EQ(rows, trace.records.size());
  EXPECT_THROW(trace_to_csv(trace, {"T", "bogus"}), IoError);
  EXPECT_THROW(trace_columns_to_json(trace, {"bogus"}), IoError);
}

TEST(TraceExport, ColumnNamesCoverController) {
  const TraceFile trace = short_trace();
  const std::vector<std::string> cols = trace_columns(trace);
  EXPECT_EQ(cols.size(), 5u + 4u + 8u + 4u);
  EXPECT_EQ(cols.front(), "T");
  EXPECT_NE(std::find(cols.begin(), cols.end(), "R2_1_0"), cols.end());
  EXPECT_NE(std::find(cols.begin(), cols.end(), "b_1_3"), cols.end());
  EXPECT_NE(std::find(cols.begin(), cols.end(), "e_0_1"), cols.end());
  const std::string json = trace_columns_to_json(trace, {"T", "R2_0_1"});
  EXPECT_NE(json.find("\"columns\""), std::string::npos);
  EXPECT_NE(json.find("\"rows\""), std::string::npos);
}

TEST(TraceText, HeaderAndTable) {
  const TraceFile trace = short_trace();
  const std::string text = trace_to_text(trace);
  EXPECT_EQ(text.rfind("# verdict:", 0), 0u);
  const auto lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_GE(static_cast<std::size_t>(lines), trace.records.size() + 1);
}

}  // namespace
}  // namespace cqlqg

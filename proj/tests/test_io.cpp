#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "sgdfclt/config.hpp"
#include "sgdfclt/csv.hpp"

using namespace sgdfclt;

namespace {

Trajectory laplace_trajectory(std::uint64_t n, std::uint64_t stride) {
  ModelSpec s;
  return run_sgd(build_model(s), StepSchedule::delta_over_n(2.0), Vector{5.0, 5.0}, n, 17, stride);
}

}  // namespace

TEST(Csv, TrajectoryRoundTripIsLossless) {
  const auto tr = laplace_trajectory(1000, 7);
  std::stringstream buf;
  write_trajectory_csv(buf, tr);
  const auto back = read_trajectory_csv(buf);
  EXPECT_EQ(back.indices, tr.indices);
  EXPECT_EQ(back.values, tr.values);
  EXPECT_EQ(back.stride, 7u);
  EXPECT_EQ(back.n_steps, 1000u);
}

TEST(Csv, HeaderAndFormatting) {
  EXPECT_EQ(column_header("k", "theta_", 3), "k,theta_1,theta_2,theta_3");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  std::stringstream buf;
  write_path_csv(buf, Vector{0.5, 1.0}, Matrix{{1.0, 2.0}, {3.0, -4.5}});
  EXPECT_EQ(buf.str(), "t,y_1,y_2\n0.5,1,2\n1,3,-4.5\n");
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream bad_header("x,theta_1\n0,1\n");
  EXPECT_THROW(read_trajectory_csv(bad_header), CsvError);
  std::stringstream bad_field("k,theta_1\n0,abc\n");
  EXPECT_THROW(read_trajectory_csv(bad_field), CsvError);
  std::stringstream short_row("k,theta_1,theta_2\n0,1\n");
  EXPECT_THROW(read_trajectory_csv(short_row), CsvError);
  std::stringstream empty("");
  EXPECT_THROW(read_trajectory_csv(empty), CsvError);
  std::stringstream crlf("k,theta_1\r\n0,1.5\r\n1,2\r\n");
  const auto tr = read_trajectory_csv(crlf);
  EXPECT_EQ(tr.values, (std::vector<double>{1.5, 2.0}));
}

TEST(Config, DefaultsRoundTripIdempotently) {
  const RunConfig c;
  const std::string text = serialize(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.n, 50000u);
  EXPECT_EQ(back.schedule.delta, 2.0);
}

TEST(Config, NonDefaultValuesSurviveRoundTrip) {
  const std::string text =
      "[model]\nkind = quadratic_gaussian\ndim = 2\ncurvature = 1, 0.5; 0.5, 2\nnoise_cov = 1, 0; 0, 0.25\n"
      "minimizer = 1, -1\n"
      "[schedule]\nkind = power\nc = 0.5\nalpha = 0.75\n"
      "[run]\nn = 123\ntheta0 = 1, 2\n"
      "[verify]\nchecks = clt, kernel\ny_grid = 1, 0; 0, -2\nn_list = 10, 20\n";
  const RunConfig c = parse_config(text);
  EXPECT_EQ(c.model.kind, ModelKind::quadratic_gaussian);
  ASSERT_TRUE(c.model.curvature.has_value());
  EXPECT_EQ((*c.model.curvature)(0, 1), 0.5);
  EXPECT_EQ((*c.model.noise_cov)(1, 1), 0.25);
  EXPECT_EQ(c.schedule.kind, StepSchedule::Kind::power);
  EXPECT_EQ(c.schedule.alpha, 0.75);
  EXPECT_EQ(c.start_point(), (Vector{1.0, 2.0}));
  EXPECT_EQ(c.checks, (std::vector<std::string>{"clt", "kernel"}));
  ASSERT_EQ(c.y_grid.size(), 2u);
  EXPECT_EQ(c.y_grid[1], (Vector{0.0, -2.0}));
  const RunConfig again = parse_config(serialize(c));
  EXPECT_EQ(serialize(again), serialize(c));
}

TEST(Config, UnknownKeysAndSectionsAreRejected) {
  EXPECT_THROW(parse_config("[run]\nsteps = 10\n"), ConfigError);
  EXPECT_THROW(parse_config("[extras]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nn = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nkind = cauchy\n"), ConfigError);
  EXPECT_THROW(parse_config("[run\nn = 1\n"), ConfigError);
}

TEST(Config, ValidationCatchesStructuralErrors) {
  RunConfig c;
  c.n = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.grid_times = {0.5, 0.5};
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.checks = {"nonsense"};
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.theta0 = {1.0, 2.0, 3.0};
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(RunConfig{}));
}

TEST(Config, OverridesTakePrecedence) {
  ConfigTree tree = default_tree();
  std::istringstream file("[run]\nn = 10\nseed = 5\n");
  merge_into(tree, parse_ini(file));
  apply_override(tree, "run.n = 20");
  const RunConfig c = from_tree(tree);
  EXPECT_EQ(c.n, 20u);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW(apply_override(tree, "run.n"), ConfigError);
  EXPECT_THROW(apply_override(tree, "n=3"), ConfigError);
}

TEST(Config, OutputDirectoryFromEnvironment) {
  ::setenv(kOutputDirEnv, "/tmp/sgdfclt_env_dir", 1);
  EXPECT_EQ(from_tree(default_tree()).output_dir, "/tmp/sgdfclt_env_dir");
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(from_tree(default_tree()).output_dir, "out");
}

TEST(Config, CoefficientPointsDefaultToUnitVectors) {
  RunConfig c;
  c.model.dim = 2;
  const auto ys = c.coefficient_points();
  ASSERT_EQ(ys.size(), 4u);
  EXPECT_EQ(ys[0], (Vector{1.0, 0.0}));
  EXPECT_EQ(ys[3], (Vector{0.0, -1.0}));
}

#include <gtest/gtest.h>

#include <filesystem>

#include <nwt/pipeline.hpp>

using namespace nwt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nwt_pipe_" + name);
  fs::remove_all(d);
  return d;
}

RunConfig gaussian_direct(const fs::path& dir) {
  RunConfig c = parse_config(
      "[state]\nn_points = 64\nx_extent = 32\n"
      "[schedule]\ndp = linspace(-4, 4, 50)\ndx = linspace(-8, 8, 50)\nnoiseless = true\nexposure = 1e12\naux_shift = 0\n"
      "[output]\nwigner_points = 65\nx_half = 6\np_half = 3\n");
  c.output.dir = dir.string();
  return c;
}

}  // namespace

TEST(Pipeline, NoiselessGaussianDirect) {
  const fs::path dir = scratch("gauss");
  const ReportBundle b = run_pipeline(gaussian_direct(dir));
  ASSERT_TRUE(b.metrics.fidelity);
  EXPECT_GE(*b.metrics.fidelity, 0.99);
  EXPECT_NEAR(b.metrics.integral, 1.0, 1e-3);
  EXPECT_NEAR(b.metrics.resolution_natural.dx_min, 0.25, 1e-12);
  for (const char* s : {"_dataset.txt", "_wigner.csv", "_wigner.pgm", "_report.json"})
    EXPECT_TRUE(fs::exists(dir / (std::string("run") + s))) << s;
  const auto j = nlohmann::json::parse(detail::read_file((dir / "run_report.json").string()));
  EXPECT_EQ(j["method"], "direct");
  EXPECT_EQ(j["provenance"]["version"], kVersion);
  EXPECT_EQ(j["provenance"]["dataset_checksum"].get<std::string>().size(), 16u);
}

TEST(Pipeline, RepeatRunsAreByteIdentical) {
  RunConfig c = gaussian_direct(scratch("a"));
  c.schedule.noiseless = false;
  c.schedule.exposure = 1e3;
  c.schedule.seed = 7;
  run_pipeline(c);
  const std::string csv_a = detail::read_file(output_path(c, "_wigner.csv"));
  const std::string data_a = detail::read_file(output_path(c, "_dataset.txt"));
  c.output.dir = scratch("b").string();
  run_pipeline(c);
  EXPECT_EQ(detail::read_file(output_path(c, "_wigner.csv")), csv_a);
  EXPECT_EQ(detail::read_file(output_path(c, "_dataset.txt")), data_a);
  c.schedule.seed = 8;
  c.output.dir = scratch("c").string();
  run_pipeline(c);
  EXPECT_NE(detail::read_file(output_path(c, "_dataset.txt")), data_a);
}

TEST(Pipeline, CatThroughMlKeepsNegativity) {
  RunConfig c = parse_config(
      "[state]\nfamily = cat\nseparation = 8\nn_points = 64\nx_extent = 40\n"
      "[schedule]\ndp = linspace(-2, 2, 24)\ndx = linspace(-14, 14, 24)\nexposure = 1e5\nseed = 3\naux_shift = 0\n"
      "[method]\nname = ml\nml.dim = 32\n"
      "[output]\nwigner_points = 81\nx_half = 10\np_half = 2.5\n");
  c.output.dir = scratch("cat").string();
  const ReportBundle b = run_pipeline(c, false);
  ASSERT_TRUE(b.state);
  EXPECT_GT(b.metrics.negativity, 0.05);
  ASSERT_TRUE(b.metrics.fidelity);
  EXPECT_GT(*b.metrics.fidelity, 0.9);
  ASSERT_TRUE(b.iterations);
  EXPECT_FALSE(fs::exists(c.output.dir));
}

TEST(Pipeline, RadonMethodRuns) {
  RunConfig c = gaussian_direct(scratch("radon"));
  c.method.name = "radon";
  const ReportBundle b = run_pipeline(c, false);
  ASSERT_TRUE(b.metrics.fidelity);
  EXPECT_GT(*b.metrics.fidelity, 0.95);
}

TEST(Pipeline, LoadedDatasetHasNoTruthMetrics) {
  const fs::path dir = scratch("load");
  RunConfig c = gaussian_direct(dir);
  run_pipeline(c);
  RunConfig r = c;
  r.output.dataset = output_path(c, "_dataset.txt");
  r.output.prefix = "again";
  const ReportBundle b = run_pipeline(r);
  EXPECT_FALSE(b.metrics.fidelity);
  EXPECT_FALSE(b.metrics.l2_to_truth);
  EXPECT_FALSE(b.notes.empty());
  EXPECT_EQ(detail::read_file(output_path(r, "_wigner.csv")), detail::read_file(output_path(c, "_wigner.csv")));
}

TEST(Pipeline, HardwareScheduleReportsSiResolution) {
  RunConfig c = parse_config(
      "[physics]\nlength_unit = 2e-5\n[state]\nn_points = 128\nx_extent = 64\n"
      "[schedule]\nB = linspace(0, 1, 9)\nL = linspace(0.5, 20, 9)\nnoiseless = true\n"
      "[method]\nname = radon\n[output]\nwigner_points = 33\n");
  c.output.dir = scratch("hw").string();
  const auto g = state_grid(c);
  const Schedule s = build_schedule(c);
  for (const auto& k : s.settings) {
    EXPECT_LE(std::abs(k.dp), g.p_max());
    EXPECT_LE(std::abs(k.dx), 0.5 * g.extent());
  }
  const ReportBundle b = run_pipeline(c, false);
  ASSERT_TRUE(b.metrics.resolution_si);
  EXPECT_GT(b.metrics.resolution_si->dx_min, 0.0);
}

TEST(Pipeline, ErrorsCarryStageAndKind) {
  RunConfig c = gaussian_direct(scratch("err"));
  c.schedule.dp = {100.0};  // far beyond the grid momentum limit
  try {
    run_pipeline(c, false);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("simulate: ", 0), 0u) << e.what();
    EXPECT_EQ(e.kind(), ErrorKind::runtime);
  }
  RunConfig m = gaussian_direct(scratch("err2"));
  m.output.dataset = "/nonexistent/data.txt";
  try {
    run_pipeline(m, false);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("load: ", 0), 0u);
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
  RunConfig none;
  EXPECT_THROW(run_pipeline(none, false), StageError);
}

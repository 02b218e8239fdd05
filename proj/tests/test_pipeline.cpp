#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "bellsim/config.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/pipeline.hpp"

using namespace bellsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bellsim_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig small_config() {
  ExperimentConfig c = default_config();
  c.daq.run_duration = 20.0;
  c.daq.n_runs = 4;
  c.rng_seed = 3;
  return c;
}

int cli(const std::string& args) {
  const int status = std::system((std::string(BELLSIM_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Parallel, RethrowsFirstFailure) {
  EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) {
                 if (i == 37) throw PreconditionError("x");
               }),
               PreconditionError);
}

TEST(Simulate, SameOutputForAnyJobCount) {
  const ExperimentConfig c = small_config();
  const auto one = simulate(c, 1);
  const auto four = simulate(c, 4);
  EXPECT_EQ(one.events, four.events);
  EXPECT_EQ(encode_events(c, c.daq.n_runs, one.events), encode_events(c, c.daq.n_runs, four.events));
}

TEST(Simulate, SinglesRateOracle) {
  // D1 rate = 2 sources x rate x t_max/2 x 3/16 x t_max x QE + 3 pixels x dark,
  // times the live fraction.
  const ExperimentConfig c = small_config();
  const auto r = simulate(c, 2);
  const double live = c.daq.live_time_per_run() * c.daq.n_runs;
  const double per_s = 2 * 1000.0 * 0.4 * 3.0 / 16 * 0.8 * 0.15 + 3 * 1.0;
  EXPECT_NEAR(r.summary.d1_singles, per_s * live, 5 * std::sqrt(per_s * live));
  EXPECT_NEAR(r.summary.d2_singles, per_s * live, 5 * std::sqrt(per_s * live));
  EXPECT_DOUBLE_EQ(r.summary.live_time, live);
}

TEST(Simulate, CrossedIdealAnalyzerLeavesOnlyDarkCounts) {
  ExperimentConfig c = rotated(ideal_config(), RunKind::analyzer_d, 90.0);
  c.detector.dark_rate_per_pixel = 2.0;
  c.daq.run_duration = 20.0;
  c.daq.n_runs = 2;
  c.rng_seed = 5;
  const auto r = simulate(c);
  const double dark = 3 * 2.0 * r.summary.live_time;
  EXPECT_NEAR(r.summary.d2_singles, dark, 5 * std::sqrt(dark));
}

TEST(Analyze, EmptyInputGivesEmptyHistogram) {
  EventFile f;
  f.config = small_config();
  f.run_count = 4;
  AnalysisOptions o = histogram_analysis(f.config.detector);
  const FileAnalysis a = analyze_events({f}, o);
  EXPECT_EQ(a.histogram.total(), 0u);
  EXPECT_FALSE(a.bunching.has_value());
}

TEST(Analyze, OverlappingGroupsAreConfigErrors) {
  EventFile f;
  f.config = small_config();
  f.run_count = 1;
  AnalysisOptions o;
  o.d1 = PixelSet{1, 2};
  o.d2 = PixelSet{2, 3};
  EXPECT_THROW(analyze_events({f}, o), ConfigError);
}

TEST(Sweep, MeasurementsRoundTripAndMissingAngles) {
  ExperimentConfig c = small_config();
  c.daq.n_runs = 2;
  SweepOptions o;
  o.thetas = {0, 20, 40, 60};
  o.seed = 9;
  o.jobs = 2;
  const fs::path dir = scratch("sweep");
  const auto rows = run_sweep(c, o, dir);
  ASSERT_EQ(rows.size(), 8u);
  const auto back = read_measurements(dir);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(measurements_csv(back), measurements_csv(rows));
  EXPECT_NO_THROW(bell_verdict(rows, 20.0));  // d at 0, 20, 60 and c at 40
}

TEST(Sweep, MissingAngleIsNamed) {
  ExperimentConfig c = small_config();
  c.daq.n_runs = 1;
  SweepOptions o;
  o.thetas = {0, 20};
  const auto rows = run_sweep(c, o, scratch("missing"));
  try {
    bell_verdict(rows, 20.0);
    FAIL();
  } catch (const PreconditionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("analyzer_d at 60"), std::string::npos) << msg;
    EXPECT_NE(msg.find("analyzer_c at 40"), std::string::npos) << msg;
  }
  o.thetas = {20};
  EXPECT_THROW(run_sweep(c, o, scratch("nozero")), PreconditionError);
}

TEST(Sweep, SeedsDependOnKindAndAngle) {
  EXPECT_NE(sweep_seed(1, RunKind::analyzer_d, 20), sweep_seed(1, RunKind::analyzer_c, 20));
  EXPECT_NE(sweep_seed(1, RunKind::analyzer_d, 20), sweep_seed(1, RunKind::analyzer_d, 40));
  EXPECT_EQ(sweep_seed(1, RunKind::analyzer_d, 20), sweep_seed(1, RunKind::analyzer_d, 380));
  EXPECT_EQ(sweep_file_name(RunKind::analyzer_c, 40), "c_040.000.evt");
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  ExperimentConfig c = small_config();
  c.daq.n_runs = 1;
  c.daq.run_duration = 5.0;
  save_config(c, dir / "c.conf");
  const std::string conf = (dir / "c.conf").string();

  EXPECT_EQ(cli("simulate --config " + conf + " --out " + (dir / "a.evt").string()), 0);
  EXPECT_EQ(cli("simulate --config " + conf + " --out " + (dir / "b.evt").string()), 0);
  EXPECT_EQ(read_file_bytes(dir / "a.evt"), read_file_bytes(dir / "b.evt"));

  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("simulate --config"), 1);
  write_text_file(dir / "bad.conf", "rng_seed = 1\nsource_a.rate = fast\n");
  EXPECT_EQ(cli("simulate --config " + (dir / "bad.conf").string() + " --out x.evt"), 2);
  EXPECT_EQ(cli("simulate --config " + (dir / "none.conf").string() + " --out x.evt"), 3);
  write_text_file(dir / "junk.evt", "not an event file");
  EXPECT_EQ(cli("analyze --in " + (dir / "junk.evt").string()), 4);
  EXPECT_EQ(cli("analyze --in " + (dir / "a.evt").string() + " --d1 0,4 --d2 4,8"), 2);

  // empty file: success with a warning
  write_events(dir / "empty.evt", c, {});
  EXPECT_EQ(cli("analyze --in " + (dir / "empty.evt").string() + " --out " + (dir / "h.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "h.csv"));

  EXPECT_EQ(cli("sweep -q --config " + conf + " --thetas 20,40 --out " + (dir / "sw").string()), 5);
  EXPECT_EQ(cli("sweep -q --config " + conf + " --thetas 0,20 --out " + (dir / "sw").string()), 0);
  EXPECT_EQ(cli("bell --sweep " + (dir / "sw").string() + " --theta 20"), 5);
  EXPECT_EQ(cli("figures --sweep " + (dir / "sw").string() + " --out " + (dir / "fig").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "fig" / "p12_curve.csv"));
}

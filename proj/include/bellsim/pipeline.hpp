#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bellsim/bell_ch.hpp"
#include "bellsim/coincidence.hpp"
#include "bellsim/detector.hpp"
#include "bellsim/event_file.hpp"
#include "bellsim/types.hpp"

namespace bellsim {

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Simulation

/// Sources -> preparation polarizers -> analyzers and pixels -> detector and
/// DAQ for run `run`, all randomness drawn from (config.rng_seed, run).
Detection simulate_run(const ExperimentConfig& config, std::uint32_t run);

struct SimulationSummary {
  DetectionStats detection;  // summed over runs
  std::uint64_t events = 0;
  std::uint64_t d1_singles = 0;
  std::uint64_t d2_singles = 0;
  double live_time = 0.0;
};

struct SimulationResult {
  std::vector<PhotonEvent> events;  // sorted by (run, tick)
  SimulationSummary summary;
};

/// All config.daq.n_runs runs. Output is identical for every `jobs` value.
SimulationResult simulate(const ExperimentConfig& config, unsigned jobs = 1);

std::string format_summary(const ExperimentConfig& config, const SimulationSummary& summary);

// ---------------------------------------------------------------------------
// Analysis

enum class SumRange {
  full,    // every recorded delay [0, max_delay)
  window,  // the coincidence window only
};

struct AnalysisOptions {
  std::uint64_t bin_width = 1;       // ticks
  std::uint64_t max_delay = 400;     // ticks
  SumRange sum_range = SumRange::window;
  std::optional<std::uint64_t> window_ticks;  // default: detector coincidence window
  BackgroundMode background = BackgroundMode::sideband;
  std::optional<TickRange> sideband;          // default: [2 us, 10 us)
  std::optional<double> dark_rate_per_pixel;  // default: the file's config echo
  std::optional<PixelSet> d1;                 // default: the file's config echo
  std::optional<PixelSet> d2;
  TickRange bunching_peak{0, 1};              // zero-delay tick
};

/// Delay histogram for the bunching plot: 1-tick bins to 10 us, coincidence
/// window counts with sideband background.
AnalysisOptions histogram_analysis(const DetectorSpec& detector);

/// Joint-probability analysis: 1 us bins to 100 ms, full-range sum with the
/// dark-count background.
AnalysisOptions probability_analysis(const DetectorSpec& detector);

struct FileAnalysis {
  DelayHistogram histogram;
  TickRange window;
  CoincidenceResult coincidences;
  SinglesCount d1;
  SinglesCount d2;
  std::optional<Measured> bunching;  // absent when the baseline is empty
};

/// Analyzes one or more event files as one data set. Files must agree on
/// clock period. Histograms are built per run on up to `jobs` threads and
/// merged in run order.
FileAnalysis analyze_events(const std::vector<EventFile>& files, const AnalysisOptions& options, unsigned jobs = 1);

std::string format_analysis(const FileAnalysis& analysis);

// ---------------------------------------------------------------------------
// Angle sweeps

enum class RunKind {
  analyzer_d,  // d rotated by theta, c aligned: joint probabilities and p2
  analyzer_c,  // c rotated by theta, d aligned: p1
};

const char* to_string(RunKind kind);
RunKind parse_run_kind(const std::string& text);

ExperimentConfig rotated(const ExperimentConfig& base, RunKind kind, double theta_deg);

/// Seed of the file for (kind, theta) within a sweep seeded with `seed`.
std::uint64_t sweep_seed(std::uint64_t seed, RunKind kind, double theta_deg);

std::string sweep_file_name(RunKind kind, double theta_deg);

/// One line of measurements.csv.
struct MeasurementRow {
  RunKind kind = RunKind::analyzer_d;
  double theta_deg = 0.0;
  std::string file;
  CoincidenceResult coincidences;
  SinglesCount d1;
  SinglesCount d2;
};

struct SweepOptions {
  std::vector<double> thetas;
  std::uint64_t seed = 1;
  bool singles_runs = true;  // also run analyzer_c rotations
  unsigned jobs = 1;
  std::optional<AnalysisOptions> analysis;  // default: probability_analysis
  std::function<void(const std::string&)> progress;
};

/// Simulates and analyzes every (kind, theta) configuration, writing
/// <kind>_<theta>.evt files, measurements.csv and p12.csv into `out_dir`.
/// theta = 0 must be in the list.
std::vector<MeasurementRow> run_sweep(const ExperimentConfig& base, const SweepOptions& options,
                                      const std::filesystem::path& out_dir);

std::string measurements_csv(const std::vector<MeasurementRow>& rows);
std::vector<MeasurementRow> parse_measurements_csv(const std::string& text);
std::vector<MeasurementRow> read_measurements(const std::filesystem::path& sweep_dir);

/// Looks up the row of (kind, theta); theta compared modulo 360.
const MeasurementRow* find_row(const std::vector<MeasurementRow>& rows, RunKind kind, double theta_deg);

/// p12(theta) for every analyzer_d row, normalized to theta = 0.
struct P12Point {
  double theta_deg;
  Measured p12;
};
std::vector<P12Point> p12_table(const std::vector<MeasurementRow>& rows);
std::string p12_csv(const std::vector<P12Point>& points);

/// Rates behind S(theta): analyzer_d rows at 0, theta, 3 theta and the
/// analyzer_c row at 2 theta. Missing rows raise PreconditionError listing
/// all of them.
ChRates ch_rates(const std::vector<MeasurementRow>& rows, double theta_deg);

ChVerdict bell_verdict(const std::vector<MeasurementRow>& rows, double theta_deg,
                       Propagation propagation = Propagation::uncorrelated);

/// histogram.csv, p12_curve.csv, s_ideal.csv and s_measured.csv.
void write_figures(const std::filesystem::path& sweep_dir, const std::filesystem::path& out_dir,
                   const std::optional<std::filesystem::path>& histogram_events = std::nullopt);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace bellsim

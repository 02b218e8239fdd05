// bellsim command-line front-end.
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 I/O, 4 event-file format,
// 5 precondition or domain error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bellsim/config.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/event_file.hpp"
#include "bellsim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bellsim;

namespace {

enum Exit { ok = 0, usage = 1, config_error = 2, io_error = 3, format_error = 4, precondition_error = 5 };

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::uint64_t ns_to_ticks(double ns, double clock_period, const char* what) {
  if (!(ns > 0.0)) throw PreconditionError(fmt::format("{} must be positive", what));
  const double ticks = ns * 1e-9 / clock_period;
  const double whole = std::round(ticks);
  if (whole < 1.0 || std::abs(ticks - whole) > 1e-6) {
    throw PreconditionError(fmt::format("{} of {} ns is not a whole number of {} ns clock ticks", what, ns,
                                        clock_period * 1e9));
  }
  return static_cast<std::uint64_t>(whole);
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  double theta = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = default_jobs();
};

int cmd_simulate(const SimulateArgs& a) {
  ExperimentConfig config = rotated(load_config(a.config), RunKind::analyzer_d, a.theta);
  if (a.seed) config.rng_seed = *a.seed;
  const SimulationResult r = simulate(config, a.jobs);
  write_events(a.out, config, r.events);
  std::cout << format_summary(config, r.summary);
  return ok;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<std::string> in;
  std::string d1;
  std::string d2;
  std::optional<double> window_ns;
  std::string preset = "histogram";
  std::optional<double> bin_ns;
  std::optional<double> range_ns;
  std::string background;
  std::optional<double> dark_rate;
  std::string out;
  std::string result;
  unsigned jobs = default_jobs();
};

int cmd_analyze(const AnalyzeArgs& a) {
  std::vector<EventFile> files;
  for (const std::string& path : a.in) files.push_back(read_events(path));
  const double clock = files.front().config.detector.clock_period;

  AnalysisOptions o = a.preset == "probability" ? probability_analysis(files.front().config.detector)
                                                 : histogram_analysis(files.front().config.detector);
  if (!a.d1.empty()) o.d1 = PixelSet::parse(a.d1);
  if (!a.d2.empty()) o.d2 = PixelSet::parse(a.d2);
  if (a.bin_ns) o.bin_width = ns_to_ticks(*a.bin_ns, clock, "bin width");
  if (a.range_ns) o.max_delay = ns_to_ticks(*a.range_ns, clock, "delay range");
  if (a.window_ns) {
    o.window_ticks = ns_to_ticks(*a.window_ns, clock, "coincidence window");
    o.sum_range = SumRange::window;
  }
  if (a.background == "none") o.background = BackgroundMode::none;
  if (a.background == "sideband") o.background = BackgroundMode::sideband;
  if (a.background == "dark") o.background = BackgroundMode::dark_noise;
  if (a.dark_rate) o.dark_rate_per_pixel = *a.dark_rate;

  std::size_t n_events = 0;
  for (const EventFile& f : files) n_events += f.events.size();
  if (n_events == 0) {
    std::cerr << "warning: no events in input; histogram is empty\n";
    // an empty data set has nothing to subtract
    o.background = BackgroundMode::none;
  }

  const FileAnalysis r = analyze_events(files, o, a.jobs);
  std::cout << format_analysis(r);
  if (!a.out.empty()) write_text_file(a.out, histogram_csv(r.histogram));
  if (!a.result.empty()) {
    const CoincidenceResult& c = r.coincidences;
    const double tick_ns = std::round(clock * 1e12) / 1e3;
    std::string csv =
        "runs,live_time,singles_d1,singles_d2,window_begin_ns,window_end_ns,raw,background,background_sigma,"
        "corrected,sigma,bunching_ratio,bunching_sigma\n";
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.histogram.n_runs, c.live_time, c.singles_d1,
                       c.singles_d2, static_cast<double>(r.window.begin) * tick_ns,
                       static_cast<double>(r.window.end) * tick_ns, c.raw, c.background, c.background_sigma,
                       c.corrected, c.uncertainty, r.bunching ? fmt::format("{}", r.bunching->value) : "",
                       r.bunching ? fmt::format("{}", r.bunching->sigma) : "");
    write_text_file(a.result, csv);
  }
  return ok;
}

// --- sweep / bell / figures --------------------------------------------------

struct SweepArgs {
  std::string config;
  std::vector<double> thetas;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_singles = false;
  bool quiet = false;
  unsigned jobs = default_jobs();
};

int cmd_sweep(const SweepArgs& a) {
  const ExperimentConfig base = load_config(a.config);
  SweepOptions o;
  o.thetas = a.thetas;
  o.seed = a.seed.value_or(base.rng_seed);
  o.singles_runs = !a.no_singles;
  o.jobs = a.jobs;
  if (!a.quiet) o.progress = [](const std::string& line) { std::cerr << line << '\n'; };
  const std::vector<MeasurementRow> rows = run_sweep(base, o, a.out);
  std::cout << p12_csv(p12_table(rows));
  return ok;
}

struct BellArgs {
  std::string sweep;
  double theta = 0.0;
  bool correlated = false;
  std::string csv;
};

int cmd_bell(const BellArgs& a) {
  const std::vector<MeasurementRow> rows = read_measurements(a.sweep);
  const ChVerdict v =
      bell_verdict(rows, a.theta, a.correlated ? Propagation::correlated : Propagation::uncorrelated);
  std::cout << verdict_report(a.theta, v);
  if (!a.csv.empty()) write_text_file(a.csv, verdict_csv_header() + verdict_csv_row(a.theta, v));
  return ok;
}

struct FiguresArgs {
  std::string sweep;
  std::string out;
  std::string events;
};

int cmd_figures(const FiguresArgs& a) {
  std::optional<fs::path> events;
  if (!a.events.empty()) events = a.events;
  write_figures(a.sweep, a.out, events);
  for (const char* name : {"histogram.csv", "p12_curve.csv", "s_ideal.csv", "s_measured.csv"}) {
    std::cout << (fs::path(a.out) / name).string() << '\n';
  }
  return ok;
}

struct InitArgs {
  std::string preset = "bench";
  std::string out;
};

int cmd_init_config(const InitArgs& a) {
  ExperimentConfig c = a.preset == "ideal" ? ideal_config() : default_config();
  if (a.preset == "bunching") {
    c = ideal_config();
    c.source_a.mode = SourceMode::chaotic;
    c.source_a.rate = 8e5;
    c.source_b.enabled = false;
    c.detector.quantum_efficiency = 1.0;
    c.daq.run_duration = 1.0;
    c.daq.n_runs = 50;
  }
  if (a.out.empty()) {
    std::cout << serialize_config(c);
  } else {
    save_config(c, a.out);
  }
  return ok;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return format_error;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return precondition_error;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return precondition_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-source photon correlation and Clauser-Horne test simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate runs with analyzer d at theta and write an event file");
  s->add_option("--config", sim.config, "config file")->required();
  s->add_option("--theta", sim.theta, "analyzer d offset from c, degrees");
  s->add_option("--seed", sim.seed, "override rng_seed");
  s->add_option("--out", sim.out, "event file to write")->required();
  s->add_option("--jobs,-j", sim.jobs, "worker threads")->check(CLI::PositiveNumber);

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "delay histogram, coincidences and singles of event files");
  z->add_option("--in", an.in, "event files, analyzed as one data set")->required()->expected(1, -1);
  z->add_option("--d1", an.d1, "D1 pixel indices, e.g. 0,4,8");
  z->add_option("--d2", an.d2, "D2 pixel indices, e.g. 2,6,10");
  z->add_option("--window", an.window_ns, "coincidence window, ns");
  z->add_option("--preset", an.preset, "histogram (1 tick bins to 10 us) or probability (1 us bins to 100 ms)")
      ->check(CLI::IsMember({"histogram", "probability"}));
  z->add_option("--bin", an.bin_ns, "bin width, ns");
  z->add_option("--range", an.range_ns, "largest delay histogrammed, ns");
  z->add_option("--background", an.background, "none, sideband or dark")
      ->check(CLI::IsMember({"none", "sideband", "dark"}));
  z->add_option("--dark-rate", an.dark_rate, "dark counts per pixel per second for the dark background");
  z->add_option("--out", an.out, "histogram CSV");
  z->add_option("--result", an.result, "coincidence result CSV");
  z->add_option("--jobs,-j", an.jobs, "worker threads")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "simulate and analyze a list of analyzer angles");
  w->add_option("--config", sw.config, "config file")->required();
  w->add_option("--thetas", sw.thetas, "angles in degrees, must include 0")->required()->delimiter(',');
  w->add_option("--seed", sw.seed, "sweep seed (default: rng_seed of the config)");
  w->add_option("--out", sw.out, "output directory")->required();
  w->add_flag("--no-singles", sw.no_singles, "skip the analyzer c rotations");
  w->add_flag("--quiet,-q", sw.quiet, "no progress lines");
  w->add_option("--jobs,-j", sw.jobs, "worker threads")->check(CLI::PositiveNumber);

  BellArgs be;
  auto* b = app.add_subcommand("bell", "S(theta) verdict from a sweep directory");
  b->add_option("--sweep", be.sweep, "sweep directory")->required();
  b->add_option("--theta", be.theta, "theta in degrees, 0 < theta <= 60")->required();
  b->add_flag("--correlated", be.correlated, "propagate errors from the seven independent rates");
  b->add_option("--csv", be.csv, "also write the verdict row as CSV");

  FiguresArgs fi;
  auto* f = app.add_subcommand("figures", "write the histogram, p12 and S(theta) CSV products");
  f->add_option("--sweep", fi.sweep, "sweep directory")->required();
  f->add_option("--out", fi.out, "output directory")->required();
  f->add_option("--events", fi.events, "event file for the delay histogram (default: theta = 0 run)");

  InitArgs in;
  auto* c = app.add_subcommand("init-config", "print or write a preset config");
  c->add_option("--preset", in.preset, "bench, ideal or bunching")
      ->check(CLI::IsMember({"bench", "ideal", "bunching"}));
  c->add_option("--out", in.out, "file to write (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  if (*s) return run_guarded([&] { return cmd_simulate(sim); });
  if (*z) return run_guarded([&] { return cmd_analyze(an); });
  if (*w) return run_guarded([&] { return cmd_sweep(sw); });
  if (*b) return run_guarded([&] { return cmd_bell(be); });
  if (*f) return run_guarded([&] { return cmd_figures(fi); });
  if (*c) return run_guarded([&] { return cmd_init_config(in); });
  return usage;
}

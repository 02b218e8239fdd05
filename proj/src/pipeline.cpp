#include "bellsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "bellsim/config.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/source.hpp"

namespace bellsim {

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1u), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

Detection simulate_run(const ExperimentConfig& config, std::uint32_t run) {
  const std::uint64_t seed = config.rng_seed;
  const double duration = config.daq.run_duration;

  Rng rng_a = make_rng(seed, run, Stream::source_a);
  Rng rng_b = make_rng(seed, run, Stream::source_b);
  const std::vector<double> times_a = generate_stream(config.source_a, duration, rng_a);
  const std::vector<double> times_b = generate_stream(config.source_b, duration, rng_b);

  Rng prep_a = make_rng(seed, run, Stream::prep_a);
  Rng prep_b = make_rng(seed, run, Stream::prep_b);
  const auto photons_a = prepare_polarization(times_a, config.prep_a, Origin::source_a, prep_a);
  const auto photons_b = prepare_polarization(times_b, config.prep_b, Origin::source_b, prep_b);
  const auto merged = merge_streams(photons_a, photons_b);

  Rng routing = make_rng(seed, run, Stream::routing);
  const auto analyzed = route_to_pixels(merged, config, routing);

  Rng detection = make_rng(seed, run, Stream::detection);
  return detect(analyzed, config.detector, config.daq, run, detection);
}

SimulationResult simulate(const ExperimentConfig& config, unsigned jobs) {
  config.validate();
  std::vector<Detection> runs(config.daq.n_runs);
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    runs[i] = simulate_run(config, static_cast<std::uint32_t>(i));
  });

  SimulationResult out;
  std::size_t total = 0;
  for (const Detection& d : runs) total += d.events.size();
  out.events.reserve(total);
  SimulationSummary& s = out.summary;
  for (const Detection& d : runs) {
    out.events.insert(out.events.end(), d.events.begin(), d.events.end());
    s.detection.photons_in += d.stats.photons_in;
    s.detection.lost_to_efficiency += d.stats.lost_to_efficiency;
    s.detection.dark_counts += d.stats.dark_counts;
    s.detection.lost_to_transfer += d.stats.lost_to_transfer;
    s.detection.piled_up += d.stats.piled_up;
  }
  s.events = out.events.size();
  for (const PhotonEvent& e : out.events) {
    if (config.d1_pixels.contains(e.pixel)) ++s.d1_singles;
    if (config.d2_pixels.contains(e.pixel)) ++s.d2_singles;
  }
  s.live_time = config.daq.live_time_per_run() * config.daq.n_runs;
  return out;
}

std::string format_summary(const ExperimentConfig& config, const SimulationSummary& s) {
  return fmt::format(
      "runs              {} x {} s\n"
      "live time         {:.3f} s (duty cycle {:.4f})\n"
      "analyzer c / d    {} / {} deg\n"
      "photons at pixels {}\n"
      "lost to QE        {}\n"
      "dark counts       {}\n"
      "lost to transfer  {}\n"
      "piled up          {}\n"
      "events written    {}\n"
      "D1 singles        {} ({:.3f} /s)\n"
      "D2 singles        {} ({:.3f} /s)\n",
      config.daq.n_runs, config.daq.run_duration, s.live_time, config.daq.duty_cycle(),
      config.analyzer_c.axis.deg(), config.analyzer_d.axis.deg(), s.detection.photons_in,
      s.detection.lost_to_efficiency, s.detection.dark_counts, s.detection.lost_to_transfer,
      s.detection.piled_up, s.events, s.d1_singles, s.live_time > 0 ? s.d1_singles / s.live_time : 0.0,
      s.d2_singles, s.live_time > 0 ? s.d2_singles / s.live_time : 0.0);
}

// ---------------------------------------------------------------------------

AnalysisOptions histogram_analysis(const DetectorSpec& detector) {
  AnalysisOptions o;
  o.bin_width = 1;
  o.max_delay = static_cast<std::uint64_t>(std::llround(10e-6 / detector.clock_period));
  o.sum_range = SumRange::window;
  o.background = BackgroundMode::sideband;
  return o;
}

AnalysisOptions probability_analysis(const DetectorSpec& detector) {
  AnalysisOptions o;
  o.bin_width = static_cast<std::uint64_t>(std::llround(1e-6 / detector.clock_period));
  o.max_delay = o.bin_width * 100000;  // 100 ms
  o.sum_range = SumRange::full;
  o.background = BackgroundMode::dark_noise;
  return o;
}

FileAnalysis analyze_events(const std::vector<EventFile>& files, const AnalysisOptions& options, unsigned jobs) {
  if (files.empty()) {
    throw PreconditionError("no event files to analyze");
  }
  const ExperimentConfig& first = files.front().config;
  const double clock = first.detector.clock_period;
  for (const EventFile& f : files) {
    if (f.config.detector.clock_period != clock) {
      throw PreconditionError("event files disagree on the clock period");
    }
  }
  const PixelSet d1 = options.d1.value_or(first.d1_pixels);
  const PixelSet d2 = options.d2.value_or(first.d2_pixels);
  if (d1.empty() || d2.empty()) throw ConfigError("detector pixel groups must be non-empty");
  if (!d1.disjoint(d2)) throw ConfigError("detector pixel groups overlap");
  const double dark = options.dark_rate_per_pixel.value_or(first.detector.dark_rate_per_pixel);

  // One segment per (file, run) block of events.
  struct Segment {
    std::span<const PhotonEvent> events;
  };
  std::vector<Segment> segments;
  for (const EventFile& f : files) {
    std::span<const PhotonEvent> all(f.events);
    std::size_t i = 0;
    while (i < all.size()) {
      std::size_t j = i;
      while (j < all.size() && all[j].run == all[i].run) ++j;
      segments.push_back({all.subspan(i, j - i)});
      i = j;
    }
  }

  FileAnalysis out;
  std::vector<DelayHistogram> parts(segments.size());
  parallel_for(segments.size(), jobs, [&](std::size_t i) {
    parts[i] = build_histogram(segments[i].events, d1, d2, options.bin_width, options.max_delay);
  });
  DelayHistogram h = build_histogram({}, d1, d2, options.bin_width, options.max_delay);
  h.clock_period = clock;
  for (DelayHistogram& p : parts) {
    p.clock_period = clock;
    h = merge(h, p);
  }
  h.live_time = 0.0;
  h.n_runs = 0;
  for (const EventFile& f : files) {
    h.live_time += f.config.daq.live_time_per_run() * f.run_count;
    h.n_runs += f.run_count;
  }

  if (options.sum_range == SumRange::full) {
    out.window = h.full_range();
  } else {
    const std::uint64_t w = options.window_ticks.value_or(first.detector.window_ticks());
    if (w == 0 || w % options.bin_width != 0) {
      throw PreconditionError("coincidence window must be a positive multiple of the bin width");
    }
    out.window = {0, w};
  }

  BackgroundOptions bg;
  bg.mode = options.background;
  bg.sideband = options.sideband.value_or(default_sideband(clock));
  bg.d1_dark_rate = dark * static_cast<double>(d1.size());
  bg.d2_dark_rate = dark * static_cast<double>(d2.size());
  out.coincidences = coincidence_result(h, out.window, bg);

  for (const EventFile& f : files) {
    const double live = f.config.daq.live_time_per_run() * f.run_count;
    const SinglesCount s1 = count_singles(f.events, d1, live, dark);
    const SinglesCount s2 = count_singles(f.events, d2, live, dark);
    for (auto [acc, add] : {std::pair{&out.d1, &s1}, std::pair{&out.d2, &s2}}) {
      acc->raw += add->raw;
      acc->background += add->background;
      acc->corrected += add->corrected;
      acc->live_time += add->live_time;
    }
  }
  out.d1.sigma = std::sqrt(static_cast<double>(out.d1.raw));
  out.d2.sigma = std::sqrt(static_cast<double>(out.d2.raw));

  const TickRange baseline = bg.sideband;
  if (baseline.end <= h.max_delay() && baseline.width() > 0 && h.sum(baseline) > 0 &&
      options.bunching_peak.end % h.bin_width == 0 && options.bunching_peak.begin % h.bin_width == 0 &&
      !options.bunching_peak.overlaps(baseline)) {
    out.bunching = bunching_ratio(h, options.bunching_peak, baseline);
  }
  out.histogram = std::move(h);
  return out;
}

std::string format_analysis(const FileAnalysis& a) {
  const CoincidenceResult& c = a.coincidences;
  const double tick_ns = std::round(a.histogram.clock_period * 1e12) / 1e3;
  std::string out = fmt::format(
      "runs              {}\n"
      "live time         {:.3f} s\n"
      "D1 singles        {} (dark-corrected {:.1f})\n"
      "D2 singles        {} (dark-corrected {:.1f})\n"
      "delay range       [0, {} ns), bin {} ns\n"
      "window            [{}, {}) ns\n"
      "coincidences      {} raw, {:.2f} background, {:.2f} +/- {:.2f} corrected\n",
      a.histogram.n_runs, a.histogram.live_time, a.d1.raw, a.d1.corrected, a.d2.raw, a.d2.corrected,
      static_cast<double>(a.histogram.max_delay()) * tick_ns, static_cast<double>(a.histogram.bin_width) * tick_ns,
      static_cast<double>(a.window.begin) * tick_ns, static_cast<double>(a.window.end) * tick_ns, c.raw,
      c.background, c.corrected, c.uncertainty);
  if (a.bunching) {
    out += fmt::format("bunching ratio    {:.3f} +/- {:.3f}\n", a.bunching->value, a.bunching->sigma);
  } else {
    out += "bunching ratio    n/a (empty baseline)\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(RunKind kind) { return kind == RunKind::analyzer_d ? "analyzer_d" : "analyzer_c"; }

RunKind parse_run_kind(const std::string& text) {
  if (text == "analyzer_d") return RunKind::analyzer_d;
  if (text == "analyzer_c") return RunKind::analyzer_c;
  throw PreconditionError(fmt::format("unknown run kind '{}'", text));
}

ExperimentConfig rotated(const ExperimentConfig& base, RunKind kind, double theta_deg) {
  ExperimentConfig c = base;
  PolarizerSpec& moving = kind == RunKind::analyzer_d ? c.analyzer_d : c.analyzer_c;
  const PolarizerSpec& fixed = kind == RunKind::analyzer_d ? base.analyzer_c : base.analyzer_d;
  moving.axis = Angle::from_degrees(fixed.axis.deg() + theta_deg);
  return c;
}

std::uint64_t sweep_seed(std::uint64_t seed, RunKind kind, double theta_deg) {
  const auto millideg = static_cast<std::uint64_t>(std::llround(Angle::from_degrees(theta_deg).deg() * 1000.0));
  return combine_seed({seed, kind == RunKind::analyzer_d ? 0x64ULL : 0x63ULL, millideg});
}

std::string sweep_file_name(RunKind kind, double theta_deg) {
  return fmt::format("{}_{:07.3f}.evt", kind == RunKind::analyzer_d ? "d" : "c",
                     Angle::from_degrees(theta_deg).deg());
}

namespace {

bool same_angle(double x, double y) {
  return relative_angle(Angle::from_degrees(x), Angle::from_degrees(y)).deg() < 1e-9;
}

}  // namespace

std::vector<MeasurementRow> run_sweep(const ExperimentConfig& base, const SweepOptions& options,
                                      const std::filesystem::path& out_dir) {
  base.validate();
  if (std::none_of(options.thetas.begin(), options.thetas.end(), [](double t) { return same_angle(t, 0.0); })) {
    throw PreconditionError("sweep is missing the required reference angle 0 deg");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  }
  const AnalysisOptions analysis = options.analysis.value_or(probability_analysis(base.detector));

  std::vector<std::pair<RunKind, double>> plan;
  for (double t : options.thetas) plan.emplace_back(RunKind::analyzer_d, t);
  if (options.singles_runs) {
    for (double t : options.thetas) plan.emplace_back(RunKind::analyzer_c, t);
  }

  std::vector<MeasurementRow> rows;
  for (const auto& [kind, theta] : plan) {
    ExperimentConfig config = rotated(base, kind, theta);
    config.rng_seed = sweep_seed(options.seed, kind, theta);
    SimulationResult sim = simulate(config, options.jobs);
    const std::string name = sweep_file_name(kind, theta);
    write_events(out_dir / name, config, sim.events);

    std::vector<EventFile> files(1);
    files[0].config = config;
    files[0].run_count = config.daq.n_runs;
    files[0].events = std::move(sim.events);
    const FileAnalysis a = analyze_events(files, analysis, options.jobs);
    rows.push_back(MeasurementRow{kind, theta, name, a.coincidences, a.d1, a.d2});
    if (options.progress) {
      options.progress(fmt::format("{} theta={} deg: {} coincidences, D1 {} D2 {} singles", to_string(kind),
                                   theta, a.coincidences.raw, a.d1.raw, a.d2.raw));
    }
  }

  write_text_file(out_dir / "measurements.csv", measurements_csv(rows));
  write_text_file(out_dir / "p12.csv", p12_csv(p12_table(rows)));
  return rows;
}

namespace {

constexpr const char* kMeasurementHeader =
    "kind,theta_deg,file,live_time,coinc_raw,coinc_background,coinc_background_sigma,coinc_corrected,"
    "coinc_sigma,singles_d1,singles_d2,d1_raw,d1_background,d1_corrected,d1_sigma,d2_raw,d2_background,"
    "d2_corrected,d2_sigma";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_real(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw PreconditionError(fmt::format("measurements.csv line {}: bad number '{}'", line, s));
}

std::uint64_t to_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw PreconditionError(fmt::format("measurements.csv line {}: bad count '{}'", line, s));
}

}  // namespace

std::string measurements_csv(const std::vector<MeasurementRow>& rows) {
  std::string out = std::string(kMeasurementHeader) + "\n";
  for (const MeasurementRow& r : rows) {
    const CoincidenceResult& c = r.coincidences;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.kind), r.theta_deg,
                       r.file, c.live_time, c.raw, c.background, c.background_sigma, c.corrected, c.uncertainty,
                       c.singles_d1, c.singles_d2, r.d1.raw, r.d1.background, r.d1.corrected, r.d1.sigma, r.d2.raw,
                       r.d2.background, r.d2.corrected, r.d2.sigma);
  }
  return out;
}

std::vector<MeasurementRow> parse_measurements_csv(const std::string& text) {
  std::vector<MeasurementRow> rows;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kMeasurementHeader) {
        throw PreconditionError("measurements.csv has an unexpected header");
      }
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 19) {
      throw PreconditionError(fmt::format("measurements.csv line {}: expected 19 fields, got {}", line_no, f.size()));
    }
    MeasurementRow r;
    r.kind = parse_run_kind(f[0]);
    r.theta_deg = to_real(f[1], line_no);
    r.file = f[2];
    CoincidenceResult& c = r.coincidences;
    c.live_time = to_real(f[3], line_no);
    c.raw = to_count(f[4], line_no);
    c.background = to_real(f[5], line_no);
    c.background_sigma = to_real(f[6], line_no);
    c.corrected = to_real(f[7], line_no);
    c.uncertainty = to_real(f[8], line_no);
    c.singles_d1 = to_count(f[9], line_no);
    c.singles_d2 = to_count(f[10], line_no);
    r.d1 = {to_count(f[11], line_no), to_real(f[12], line_no), to_real(f[13], line_no), to_real(f[14], line_no),
            c.live_time};
    r.d2 = {to_count(f[15], line_no), to_real(f[16], line_no), to_real(f[17], line_no), to_real(f[18], line_no),
            c.live_time};
    rows.push_back(r);
  }
  if (line_no == 0) {
    throw PreconditionError("measurements.csv is empty");
  }
  return rows;
}

std::vector<MeasurementRow> read_measurements(const std::filesystem::path& sweep_dir) {
  return parse_measurements_csv(read_text_file(sweep_dir / "measurements.csv"));
}

const MeasurementRow* find_row(const std::vector<MeasurementRow>& rows, RunKind kind, double theta_deg) {
  for (const MeasurementRow& r : rows) {
    if (r.kind == kind && same_angle(r.theta_deg, theta_deg)) return &r;
  }
  return nullptr;
}

std::vector<P12Point> p12_table(const std::vector<MeasurementRow>& rows) {
  const MeasurementRow* zero = find_row(rows, RunKind::analyzer_d, 0.0);
  if (zero == nullptr) {
    throw PreconditionError("missing required measurement: analyzer_d at 0 deg");
  }
  std::vector<P12Point> out;
  for (const MeasurementRow& r : rows) {
    if (r.kind != RunKind::analyzer_d) continue;
    out.push_back({r.theta_deg, coincidence_probability(r.coincidences, zero->coincidences)});
  }
  return out;
}

std::string p12_csv(const std::vector<P12Point>& points) {
  std::string out = "theta_deg,p12,sigma\n";
  for (const P12Point& p : points) {
    out += fmt::format("{},{},{}\n", p.theta_deg, p.p12.value, p.p12.sigma);
  }
  return out;
}

ChRates ch_rates(const std::vector<MeasurementRow>& rows, double theta_deg) {
  struct Need {
    RunKind kind;
    double theta;
    const MeasurementRow* row;
  };
  Need needs[] = {{RunKind::analyzer_d, 0.0, nullptr},
                  {RunKind::analyzer_d, theta_deg, nullptr},
                  {RunKind::analyzer_d, 3.0 * theta_deg, nullptr},
                  {RunKind::analyzer_c, 2.0 * theta_deg, nullptr}};
  std::string missing;
  for (Need& n : needs) {
    n.row = find_row(rows, n.kind, n.theta);
    if (n.row == nullptr) {
      if (!missing.empty()) missing += ", ";
      missing += fmt::format("{} at {} deg", to_string(n.kind), Angle::from_degrees(n.theta).deg());
    }
  }
  if (!missing.empty()) {
    throw PreconditionError(fmt::format("missing required measurements for theta = {} deg: {}", theta_deg, missing));
  }
  auto coinc = [](const MeasurementRow* r) {
    const CoincidenceResult& c = r->coincidences;
    return Measured{c.corrected / c.live_time, c.uncertainty / c.live_time};
  };
  auto singles = [](const SinglesCount& s) { return Measured{s.corrected / s.live_time, s.sigma / s.live_time}; };
  for (const Need& n : needs) {
    if (!(n.row->coincidences.live_time > 0.0)) {
      throw PreconditionError(fmt::format("{} has no live time", n.row->file));
    }
  }
  return ChRates{
      .coinc_theta = coinc(needs[1].row),
      .coinc_3theta = coinc(needs[2].row),
      .coinc_zero = coinc(needs[0].row),
      .d1_2theta = singles(needs[3].row->d1),
      .d1_zero = singles(needs[0].row->d1),
      .d2_theta = singles(needs[1].row->d2),
      .d2_zero = singles(needs[0].row->d2),
  };
}

ChVerdict bell_verdict(const std::vector<MeasurementRow>& rows, double theta_deg, Propagation propagation) {
  ch_settings(Angle::from_degrees(theta_deg));  // domain check
  return s_from_rates(ch_rates(rows, theta_deg), propagation);
}

void write_figures(const std::filesystem::path& sweep_dir, const std::filesystem::path& out_dir,
                   const std::optional<std::filesystem::path>& histogram_events) {
  const std::vector<MeasurementRow> rows = read_measurements(sweep_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  }

  // Delay histogram of the aligned run.
  std::filesystem::path events_path;
  if (histogram_events) {
    events_path = *histogram_events;
  } else {
    const MeasurementRow* zero = find_row(rows, RunKind::analyzer_d, 0.0);
    if (zero == nullptr) throw PreconditionError("missing required measurement: analyzer_d at 0 deg");
    events_path = sweep_dir / zero->file;
  }
  std::vector<EventFile> files{read_events(events_path)};
  const FileAnalysis a = analyze_events(files, histogram_analysis(files[0].config.detector));
  write_text_file(out_dir / "histogram.csv", histogram_csv(a.histogram));

  // p12 with the cos^2 curve.
  std::string curve = "theta_deg,p12,sigma,cos2\n";
  for (const P12Point& p : p12_table(rows)) {
    curve += fmt::format("{},{},{},{}\n", p.theta_deg, p.p12.value, p.p12.sigma,
                        cos_squared(Angle::from_degrees(p.theta_deg)));
  }
  write_text_file(out_dir / "p12_curve.csv", curve);

  // Ideal S curve and whatever measured points the sweep supports.
  std::string ideal = "theta_deg,S_ideal\n";
  for (int i = 1; i <= 120; ++i) {
    const double t = 0.5 * i;
    ideal += fmt::format("{},{}\n", t, s_of_theta_ideal(Angle::from_degrees(t)));
  }
  write_text_file(out_dir / "s_ideal.csv", ideal);

  std::string measured = verdict_csv_header();
  for (const MeasurementRow& r : rows) {
    if (r.kind != RunKind::analyzer_d || !(r.theta_deg > 0.0 && r.theta_deg <= 60.0)) continue;
    try {
      measured += verdict_csv_row(r.theta_deg, bell_verdict(rows, r.theta_deg));
    } catch (const PreconditionError&) {
      // angle without its 2 theta / 3 theta partners
    }
  }
  write_text_file(out_dir / "s_measured.csv", measured);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}'", path.string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bellsim

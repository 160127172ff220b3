#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "ecgtk/detect.hpp"
#include "ecgtk/features.hpp"
#include "ecgtk/filters.hpp"
#include "ecgtk/io.hpp"
#include "ecgtk/signal.hpp"
#include "ecgtk/spectral.hpp"

namespace {

using namespace ecgtk;

struct PipelineConfig {
  std::vector<std::string> inputs;
  std::string format = "csv";
  std::size_t channel = 0;
  double fs = 0.0;  // csv only; wfdb takes the header rate

  double notch_hz = 50.0;
  double notch_q = 30.0;
  bool no_notch = false;
  double bp_low = 0.5;
  double bp_high = 40.0;
  int bp_order = 3;
  bool no_bandpass = false;

  std::string window = "hamming";
  std::size_t wlen = 256;
  double beta = 8.6;
  double sigma = 0.4;
  std::size_t hop = 0;   // 0: wlen / 4
  std::size_t nfft = 0;  // 0: smallest power of two >= wlen

  std::string out_dir = ".";
  std::vector<std::string> emit = {"csv", "json", "pgm"};

  bool emits(const char* kind) const {
    return std::find(emit.begin(), emit.end(), kind) != emit.end();
  }
};

enum class Command { filter, spectrogram, analyze };

EcgSignal ingest(const PipelineConfig& config, const std::string& input) {
  if (config.format == "wfdb") return read_wfdb(input, config.channel);
  if (config.channel != 0)
    throw std::out_of_range("channel " + std::to_string(config.channel) +
                            " requested but csv input has a single channel");
  if (!(config.fs > 0.0))
    throw std::invalid_argument("csv input needs --fs > 0");
  return read_csv(input, config.fs);
}

/// Notch followed by band-pass, either optionally disabled. May be empty.
BiquadCascade combined_cascade(const PipelineConfig& config, double fs) {
  BiquadCascade out;
  out.sample_rate_hz = fs;
  if (!config.no_notch) {
    const auto notch = design_notch({config.notch_hz, config.notch_q, fs});
    out.sections.insert(out.sections.end(), notch.sections.begin(),
                        notch.sections.end());
  }
  if (!config.no_bandpass) {
    const auto bp = design_butterworth_bandpass(
        {config.bp_low, config.bp_high, config.bp_order, fs});
    out.sections.insert(out.sections.end(), bp.sections.begin(),
                        bp.sections.end());
  }
  return out;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::filesystem::path artifact_path(const PipelineConfig& config,
                                    const EcgSignal& signal,
                                    const char* suffix) {
  return std::filesystem::path(config.out_dir) / (signal.record_id + suffix);
}

std::string run_filter(const PipelineConfig& config, const EcgSignal& signal) {
  const auto cascade = combined_cascade(config, signal.sample_rate_hz);
  const auto filtered =
      cascade.sections.empty() ? signal : apply(cascade, signal);

  if (config.emits("csv")) {
    write_signal_csv(artifact_path(config, signal, "_filtered.csv"), filtered);
    if (!cascade.sections.empty()) {
      // uniform grid plus the exact notch frequency
      std::vector<double> grid;
      const double nyquist = signal.sample_rate_hz / 2.0;
      for (int k = 0; k <= 1024; ++k)
        grid.push_back(nyquist * static_cast<double>(k) / 1024.0);
      if (!config.no_notch) grid.push_back(config.notch_hz);
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      write_response_csv(artifact_path(config, signal, "_response.csv"),
                         cascade, grid);
    }
  }
  if (config.emits("json") && !cascade.sections.empty())
    write_cascade_json(artifact_path(config, signal, "_coefficients.json"),
                       cascade);

  return signal.record_id + " samples=" + std::to_string(filtered.size()) +
         " sections=" + std::to_string(cascade.sections.size());
}

std::string run_spectrogram(const PipelineConfig& config,
                            const EcgSignal& signal) {
  WindowSpec spec;
  spec.family = window_family_from_string(config.window);
  spec.length_n = config.wlen;
  spec.beta = config.beta;
  spec.sigma = config.sigma;
  const std::size_t hop =
      config.hop != 0 ? config.hop : std::max<std::size_t>(1, config.wlen / 4);
  const std::size_t nfft =
      config.nfft != 0 ? config.nfft : next_pow2(config.wlen);
  const auto sg = stft(signal, spec, hop, nfft);

  if (config.emits("csv")) {
    write_spectrogram_csv(artifact_path(config, signal, "_spectrogram.csv"),
                          sg);
    write_histogram_csv(artifact_path(config, signal, "_histogram.csv"),
                        histogram(signal, 64));
  }
  if (config.emits("pgm"))
    write_spectrogram_pgm(artifact_path(config, signal, "_spectrogram.pgm"),
                          sg);

  return signal.record_id + " frames=" + std::to_string(sg.frames()) +
         " bins=" + std::to_string(sg.n_bins);
}

std::string run_analyze(const PipelineConfig& config, const EcgSignal& signal) {
  const auto cascade = combined_cascade(config, signal.sample_rate_hz);
  const auto filtered =
      cascade.sections.empty() ? signal : apply(cascade, signal);

  auto beats = detect_r_peaks(filtered);
  if (!beats.r_indices.empty()) beats = delineate_pqst(filtered, beats);
  const auto intervals = beat_intervals(beats, filtered.sample_rate_hz);

  FeatureReport report;
  report.record_id = signal.record_id;
  report.mean_mv = mean(filtered.samples);
  report.std_mv = std_dev(filtered.samples);
  if (!beats.rr_intervals_s.empty())
    report.hbr_bpm = heart_rate_bpm(beats.rr_intervals_s);
  if (beats.rr_intervals_s.size() >= 2)
    report.sdsd_s = sdsd(beats.rr_intervals_s);

  std::vector<double> pr, qrs, st;
  for (const auto& b : intervals) {
    if (b.pr_s) pr.push_back(*b.pr_s);
    if (b.qrs_s) qrs.push_back(*b.qrs_s);
    if (b.st_s) st.push_back(*b.st_s);
  }
  if (!pr.empty()) report.median_pr_s = median(pr);
  if (!qrs.empty()) report.median_qrs_s = median(qrs);
  if (!st.empty()) report.median_st_s = median(st);

  // an unmeasurable rate can never satisfy the heart-rate band
  const double hbr =
      report.hbr_bpm.value_or(std::numeric_limits<double>::quiet_NaN());
  const auto result = classify(hbr, intervals);
  report.verdict = result.verdict;
  report.violations = result.violations;

  if (config.emits("csv"))
    write_annotations_csv(artifact_path(config, signal, "_annotations.csv"),
                          beats);
  if (config.emits("json")) {
    write_report_json(artifact_path(config, signal, "_report.json"), report);
    // mains-frequency distortion of the raw signal, when measurable
    const double nyquist = signal.sample_rate_hz / 2.0;
    const int n_max = std::min(
        5, static_cast<int>(std::floor((nyquist - 1e-9) / config.notch_hz)));
    if (n_max >= 2) {
      try {
        write_harmonics_json(artifact_path(config, signal, "_thd.json"),
                             thd(signal, config.notch_hz, n_max));
      } catch (const std::invalid_argument&) {
        // silent signal or too few whole periods: nothing to report
      }
    }
  }

  std::string line = signal.record_id + " hbr_bpm=";
  line += report.hbr_bpm ? format_double(*report.hbr_bpm) : "n/a";
  line += " verdict=";
  line += to_string(report.verdict);
  return line;
}

struct RecordResult {
  std::string summary;
  std::string error;
  int code = 0;
};

RecordResult process_record(const PipelineConfig& config, Command command,
                            const std::string& input) {
  RecordResult out;
  try {
    const auto signal = ingest(config, input);
    switch (command) {
      case Command::filter: out.summary = run_filter(config, signal); break;
      case Command::spectrogram:
        out.summary = run_spectrogram(config, signal);
        break;
      case Command::analyze: out.summary = run_analyze(config, signal); break;
    }
  } catch (const std::invalid_argument& e) {
    out.code = 2;
    out.error = input + ": " + e.what();
  } catch (const std::out_of_range& e) {
    out.code = 2;
    out.error = input + ": " + e.what();
  } catch (const std::exception& e) {
    out.code = 1;
    out.error = input + ": " + e.what();
  }
  return out;
}

std::size_t worker_count(std::size_t n_inputs) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("ECG_TOOLKIT_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw std::invalid_argument(
          "ECG_TOOLKIT_THREADS must be a positive integer");
    n = v;
  }
  return std::min(n, n_inputs);
}

/// Records are processed by a worker pool but reported in input order.
int run_command(const PipelineConfig& config, Command command) {
  std::filesystem::create_directories(config.out_dir);

  std::vector<RecordResult> results(config.inputs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= results.size()) return;
      results[i] = process_record(config, command, config.inputs[i]);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < worker_count(config.inputs.size()); ++t)
    pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& r : results) {
    if (!r.summary.empty()) std::cout << r.summary << '\n';
    if (!r.error.empty()) std::cerr << r.error << '\n';
    if (r.code != 0 && code == 0) code = r.code;
  }
  return code;
}

int run_design(double r_ohms, double c_farads) {
  const TwinTParams params{r_ohms, c_farads};
  const double rc_inv = 1.0 / (r_ohms * c_farads);
  std::cout << "f_notch_hz=" << format_double(twin_t_notch_frequency(params))
            << '\n'
            << "one_over_rc=" << format_double(rc_inv) << '\n'
            << "one_over_rc_squared=" << format_double(rc_inv * rc_inv) << '\n';
  auto print = [](const char* name, const AnalogTransferFunction& h) {
    auto poly = [](const std::array<double, 3>& c) {
      return format_double(c[0]) + "," + format_double(c[1]) + "," +
             format_double(c[2]);
    };
    std::cout << name << "_num=" << poly(h.num) << '\n'
              << name << "_den=" << poly(h.den) << '\n';
  };
  print("canonical", twin_t_transfer_function(params, TwinTVariant::canonical));
  print("alternate", twin_t_transfer_function(params, TwinTVariant::alternate));
  return 0;
}

void add_input_options(CLI::App& sub, PipelineConfig& config) {
  sub.add_option("--input", config.inputs, "input record path (repeatable)")
      ->required();
  sub.add_option("--format", config.format, "input format")
      ->check(CLI::IsMember({"wfdb", "csv"}));
  sub.add_option("--channel", config.channel, "signal channel index");
  sub.add_option("--fs", config.fs, "sample rate in Hz (csv input only)");
  sub.add_option("--out-dir", config.out_dir, "output directory");
  sub.add_option("--emit", config.emit, "output kinds to write")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json", "pgm"}));
}

void add_filter_options(CLI::App& sub, PipelineConfig& config) {
  sub.add_option("--notch-hz", config.notch_hz, "mains notch frequency");
  sub.add_option("--notch-q", config.notch_q, "notch quality factor");
  sub.add_flag("--no-notch", config.no_notch, "disable the notch stage");
  sub.add_option("--bp-low", config.bp_low, "band-pass low edge in Hz");
  sub.add_option("--bp-high", config.bp_high, "band-pass high edge in Hz");
  sub.add_option("--bp-order", config.bp_order, "band-pass prototype order");
  sub.add_flag("--no-bandpass", config.no_bandpass,
               "disable the band-pass stage");
}

void add_stft_options(CLI::App& sub, PipelineConfig& config) {
  sub.add_option("--window", config.window, "analysis window family")
      ->check(CLI::IsMember(
          {"rectangular", "hamming", "kaiser", "blackman", "gaussian"}));
  sub.add_option("--wlen", config.wlen, "window length in samples");
  sub.add_option("--beta", config.beta, "kaiser shape parameter");
  sub.add_option("--sigma", config.sigma, "gaussian width fraction");
  sub.add_option("--hop", config.hop, "frame hop in samples (0: wlen/4)");
  sub.add_option("--nfft", config.nfft,
                 "transform size (0: next power of two >= wlen)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECG filtering, spectral analysis, and beat classification"};
  app.require_subcommand(1);
  PipelineConfig config;

  auto* filter_cmd =
      app.add_subcommand("filter", "denoise a record and report the response");
  add_input_options(*filter_cmd, config);
  add_filter_options(*filter_cmd, config);

  auto* spectrogram_cmd =
      app.add_subcommand("spectrogram", "short-time spectrum and histogram");
  add_input_options(*spectrogram_cmd, config);
  add_stft_options(*spectrogram_cmd, config);

  auto* analyze_cmd = app.add_subcommand(
      "analyze", "full pipeline: filter, detect, delineate, classify");
  add_input_options(*analyze_cmd, config);
  add_filter_options(*analyze_cmd, config);

  double r_ohms = 32000.0;
  double c_farads = 100e-9;
  auto* design_cmd = app.add_subcommand(
      "design", "print twin-T notch design values for R and C");
  design_cmd->add_option("--r-ohm", r_ohms, "resistance in ohms");
  design_cmd->add_option("--c-farad", c_farads, "capacitance in farads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version are not failures
  }

  try {
    if (design_cmd->parsed()) return run_design(r_ohms, c_farads);
    if (filter_cmd->parsed()) return run_command(config, Command::filter);
    if (spectrogram_cmd->parsed())
      return run_command(config, Command::spectrogram);
    return run_command(config, Command::analyze);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
}

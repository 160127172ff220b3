#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgtk/detect.hpp"
#include "ecgtk/features.hpp"
#include "ecgtk/filters.hpp"
#include "ecgtk/signal.hpp"
#include "ecgtk/spectral.hpp"

namespace ecgtk {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), res.ptr};
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path,
                                 std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

inline std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> try_parse_double(const std::string& token) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return value;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PhysioNet-style records: text header + packed format-212 signal file
// ---------------------------------------------------------------------------

struct SignalInfo {
  std::string file_name;
  int format = 0;
  double gain = 0.0;  // ADC units per mV
  int baseline = 0;   // ADC units at 0 mV
  std::string label;
};

struct RecordHeader {
  std::string record_name;
  int n_signals = 0;
  double sample_rate_hz = 0.0;
  std::uint64_t n_samples = 0;
  std::vector<SignalInfo> signals;
};

/// Header text: a record line "name n_signals fs n_samples", then one line per
/// signal "file format gain(baseline)/unit [adc_res [adc_zero [... [label]]]]".
/// '#' comments and blank lines are skipped.
inline RecordHeader parse_header(std::istream& in, const std::string& origin) {
  auto fail = [&](std::size_t line_no, const std::string& what) -> void {
    throw std::runtime_error("header error in " + origin + " line " +
                             std::to_string(line_no) + ": " + what);
  };
  auto tokens_of = [](const std::string& line) {
    std::istringstream iss(line);
    std::vector<std::string> toks;
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
  };

  RecordHeader header;
  std::string line;
  std::size_t line_no = 0;
  bool have_record_line = false;
  int signals_read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trimmed(line);
    if (text.empty() || text.front() == '#') continue;
    const auto toks = tokens_of(text);
    if (!have_record_line) {
      if (toks.size() < 4)
        fail(line_no, "record line needs name, signal count, rate, sample count");
      header.record_name = toks[0].substr(0, toks[0].find('/'));
      const auto n_sig = detail::try_parse_double(toks[1]);
      if (!n_sig || *n_sig < 1) fail(line_no, "bad signal count '" + toks[1] + "'");
      header.n_signals = static_cast<int>(*n_sig);
      const auto fs = detail::try_parse_double(toks[2].substr(0, toks[2].find('/')));
      if (!fs || !(*fs > 0.0)) fail(line_no, "bad sample rate '" + toks[2] + "'");
      header.sample_rate_hz = *fs;
      const auto n_samp = detail::try_parse_double(toks[3]);
      if (!n_samp || *n_samp < 0) fail(line_no, "bad sample count '" + toks[3] + "'");
      header.n_samples = static_cast<std::uint64_t>(*n_samp);
      have_record_line = true;
      continue;
    }
    if (signals_read == header.n_signals) break;
    if (toks.size() < 3) fail(line_no, "signal line needs file, format, gain");
    SignalInfo info;
    info.file_name = toks[0];
    const auto fmt = detail::try_parse_double(toks[1]);
    if (!fmt) fail(line_no, "bad format code '" + toks[1] + "'");
    info.format = static_cast<int>(*fmt);

    // gain token: gain, optionally "(baseline)" and "/unit"
    std::string gain_tok = toks[2];
    if (const auto slash = gain_tok.find('/'); slash != std::string::npos)
      gain_tok = gain_tok.substr(0, slash);
    std::optional<int> paren_baseline;
    if (const auto open = gain_tok.find('('); open != std::string::npos) {
      const auto close = gain_tok.find(')', open);
      if (close == std::string::npos) fail(line_no, "unbalanced baseline parens");
      const auto base = detail::try_parse_double(gain_tok.substr(open + 1, close - open - 1));
      if (!base) fail(line_no, "bad baseline");
      paren_baseline = static_cast<int>(*base);
      gain_tok = gain_tok.substr(0, open);
    }
    const auto gain = detail::try_parse_double(gain_tok);
    if (!gain) fail(line_no, "bad gain '" + toks[2] + "'");
    if (!(*gain > 0.0)) fail(line_no, "missing or non-positive gain");
    info.gain = *gain;

    if (paren_baseline) {
      info.baseline = *paren_baseline;
    } else if (toks.size() > 4) {
      const auto adc_zero = detail::try_parse_double(toks[4]);
      if (!adc_zero) fail(line_no, "bad adc zero '" + toks[4] + "'");
      info.baseline = static_cast<int>(*adc_zero);
    }
    if (toks.size() > 8) {
      std::string label = toks[8];
      for (std::size_t i = 9; i < toks.size(); ++i) label += " " + toks[i];
      info.label = label;
    } else {
      info.label = "ECG" + std::to_string(signals_read + 1);
    }
    header.signals.push_back(std::move(info));
    ++signals_read;
  }
  if (!have_record_line)
    throw std::runtime_error("header error in " + origin + ": no record line");
  if (signals_read != header.n_signals)
    throw std::runtime_error("header error in " + origin + ": expected " +
                             std::to_string(header.n_signals) +
                             " signal lines, found " + std::to_string(signals_read));
  return header;
}

inline RecordHeader read_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open header " + path.string());
  return parse_header(in, path.string());
}

/// Format 212 packs two 12-bit two's-complement samples into three bytes:
/// byte0 = s0 low 8; byte1 = s1 high 4 | s0 high 4; byte2 = s1 low 8.
inline std::pair<int, int> decode_212(std::uint8_t b0, std::uint8_t b1,
                                      std::uint8_t b2) {
  int s0 = ((b1 & 0x0F) << 8) | b0;
  int s1 = ((b1 & 0xF0) << 4) | b2;
  if (s0 & 0x800) s0 -= 4096;
  if (s1 & 0x800) s1 -= 4096;
  return {s0, s1};
}

inline std::array<std::uint8_t, 3> encode_212(int s0, int s1) {
  if (s0 < -2048 || s0 > 2047 || s1 < -2048 || s1 > 2047)
    throw std::invalid_argument("encode_212: samples must fit 12-bit signed range");
  const auto u0 = static_cast<unsigned>(s0) & 0xFFFu;
  const auto u1 = static_cast<unsigned>(s1) & 0xFFFu;
  return {static_cast<std::uint8_t>(u0 & 0xFFu),
          static_cast<std::uint8_t>(((u1 >> 8) << 4) | (u0 >> 8)),
          static_cast<std::uint8_t>(u1 & 0xFFu)};
}

/// Read one channel of a packed record in physical units:
/// mV = (adc - baseline) / gain. Samples of all channels are interleaved
/// before packing; an odd total still occupies a whole final group.
inline EcgSignal read_wfdb(const std::filesystem::path& header_path,
                           std::size_t channel_index = 0) {
  const auto header = read_header(header_path);
  if (channel_index >= header.signals.size())
    throw std::out_of_range("read_wfdb: channel " + std::to_string(channel_index) +
                            " but record has " +
                            std::to_string(header.signals.size()) + " signals");
  for (const auto& s : header.signals)
    if (s.format != 212)
      throw std::runtime_error("read_wfdb: unsupported format code " +
                               std::to_string(s.format) + " in " +
                               header_path.string());
  for (const auto& s : header.signals)
    if (s.file_name != header.signals.front().file_name)
      throw std::runtime_error("read_wfdb: signals split across files are not supported");

  const auto data_path = header_path.parent_path() / header.signals.front().file_name;
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open signal file " + data_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

  const std::uint64_t total = header.n_samples * static_cast<std::uint64_t>(header.n_signals);
  const std::uint64_t n_groups = (total + 1) / 2;
  if (bytes.size() < 3 * n_groups)
    throw std::runtime_error("read_wfdb: signal file " + data_path.string() +
                             " truncated at byte offset " +
                             std::to_string(bytes.size()) + ", expected " +
                             std::to_string(3 * n_groups) + " bytes");

  const auto& info = header.signals[channel_index];
  EcgSignal out;
  out.sample_rate_hz = header.sample_rate_hz;
  out.record_id = header.record_name;
  out.channel = info.label;
  out.samples.reserve(header.n_samples);

  const auto as_u8 = [&](std::uint64_t i) {
    return static_cast<std::uint8_t>(bytes[i]);
  };
  const auto stride = static_cast<std::uint64_t>(header.n_signals);
  for (std::uint64_t flat = channel_index; flat < total; flat += stride) {
    const std::uint64_t group = flat / 2;
    const auto [s0, s1] =
        decode_212(as_u8(3 * group), as_u8(3 * group + 1), as_u8(3 * group + 2));
    const int adc = (flat % 2 == 0) ? s0 : s1;
    out.samples.push_back((adc - info.baseline) / info.gain);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// One amplitude per row; a leading time column is detected and ignored when a
/// row has two numeric fields.
inline EcgSignal read_csv(const std::filesystem::path& path, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("read_csv: sample rate must be > 0");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  EcgSignal out;
  out.sample_rate_hz = sample_rate_hz;
  out.record_id = path.stem().string();
  out.channel = "csv";

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trimmed(line);
    if (text.empty()) continue;
    const auto fields = detail::split(text, ',');
    std::optional<double> amplitude;
    if (fields.size() == 1) {
      amplitude = detail::try_parse_double(detail::trimmed(fields[0]));
    } else if (fields.size() == 2) {
      const auto t = detail::try_parse_double(detail::trimmed(fields[0]));
      const auto v = detail::try_parse_double(detail::trimmed(fields[1]));
      if (t && v) amplitude = v;
    }
    if (!amplitude)
      throw std::runtime_error("parse error in " + path.string() + " at line " +
                               std::to_string(line_no) + ": '" + text + "'");
    if (!std::isfinite(*amplitude))
      throw std::invalid_argument("non-finite amplitude in " + path.string() +
                                  " at line " + std::to_string(line_no));
    out.samples.push_back(*amplitude);
  }
  if (out.samples.empty())
    throw std::invalid_argument("empty input: no samples in " + path.string());
  return out;
}

inline void write_signal_csv(const std::filesystem::path& path,
                             const EcgSignal& signal) {
  auto out = detail::open_output(path);
  for (double v : signal.samples) out << format_double(v) << '\n';
}

inline void write_histogram_csv(const std::filesystem::path& path,
                                const AmplitudeHistogram& h) {
  auto out = detail::open_output(path);
  out << "bin_low_mv,bin_high_mv,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1])
        << ',' << h.counts[i] << '\n';
}

inline double magnitude_db(double magnitude, double floor_db = -400.0) {
  if (magnitude <= 0.0) return floor_db;
  return std::max(floor_db, 20.0 * std::log10(magnitude));
}

inline void write_response_csv(const std::filesystem::path& path,
                               const BiquadCascade& cascade,
                               const std::vector<double>& freqs_hz) {
  auto out = detail::open_output(path);
  out << "frequency_hz,magnitude_db,phase_deg\n";
  for (double f : freqs_hz) {
    const auto h = frequency_response_at(cascade, f);
    out << format_double(f) << ',' << format_double(magnitude_db(std::abs(h)))
        << ',' << format_double(std::arg(h) * 180.0 / std::numbers::pi) << '\n';
  }
}

/// One frame per row; the header row lists the bin frequencies. Magnitudes are
/// linear millivolts.
inline void write_spectrogram_csv(const std::filesystem::path& path,
                                  const Spectrogram& sg) {
  auto out = detail::open_output(path);
  for (std::size_t k = 0; k < sg.n_bins; ++k)
    out << (k ? "," : "") << format_double(sg.bin_freqs_hz[k]);
  out << '\n';
  for (std::size_t t = 0; t < sg.frames(); ++t) {
    for (std::size_t k = 0; k < sg.n_bins; ++k)
      out << (k ? "," : "") << format_double(sg.magnitudes[t * sg.n_bins + k]);
    out << '\n';
  }
}

/// 8-bit binary PGM; dB range [-120, 0] scaled linearly onto 0..255.
inline void write_spectrogram_pgm(const std::filesystem::path& path,
                                  const Spectrogram& sg) {
  auto out = detail::open_output(path, std::ios::out | std::ios::binary);
  out << "P5\n" << sg.n_bins << ' ' << sg.frames() << "\n255\n";
  for (double mag : sg.magnitudes) {
    const double db = std::clamp(magnitude_db(mag, -120.0), -120.0, 0.0);
    const auto pixel = static_cast<unsigned char>(std::lround((db + 120.0) / 120.0 * 255.0));
    out.put(static_cast<char>(pixel));
  }
}

inline void write_annotations_csv(const std::filesystem::path& path,
                                  const BeatAnnotations& beats) {
  auto out = detail::open_output(path);
  out << "beat_index,r_sample,p_sample,q_sample,s_sample,t_sample,rr_prev_s\n";
  auto cell = [](const std::optional<std::size_t>& idx) {
    return idx ? std::to_string(*idx) : std::string{};
  };
  for (std::size_t i = 0; i < beats.r_indices.size(); ++i) {
    const BeatLandmarks marks =
        i < beats.landmarks.size() ? beats.landmarks[i] : BeatLandmarks{};
    out << i << ',' << beats.r_indices[i] << ',' << cell(marks.p) << ','
        << cell(marks.q) << ',' << cell(marks.s) << ',' << cell(marks.t) << ',';
    if (i > 0) out << format_double(beats.rr_intervals_s[i - 1]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json cascade_to_json(const BiquadCascade& cascade) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : cascade.sections)
    sections.push_back({{"b", {s.b0, s.b1, s.b2}}, {"a", {1.0, s.a1, s.a2}}});
  return {{"sections", std::move(sections)}, {"fs", cascade.sample_rate_hz}};
}

inline BiquadCascade cascade_from_json(const nlohmann::json& j) {
  BiquadCascade out;
  if (!j.contains("sections") || !j.contains("fs"))
    throw std::invalid_argument("cascade json needs 'sections' and 'fs'");
  out.sample_rate_hz = j.at("fs").get<double>();
  for (const auto& js : j.at("sections")) {
    const auto b = js.at("b").get<std::vector<double>>();
    const auto a = js.at("a").get<std::vector<double>>();
    if (b.size() != 3 || a.size() != 3)
      throw std::invalid_argument("cascade json sections need 3 b and 3 a coefficients");
    if (a[0] == 0.0) throw std::invalid_argument("cascade json a0 must be nonzero");
    out.sections.push_back(
        {b[0] / a[0], b[1] / a[0], b[2] / a[0], a[1] / a[0], a[2] / a[0]});
  }
  return out;
}

inline void write_cascade_json(const std::filesystem::path& path,
                               const BiquadCascade& cascade) {
  auto out = detail::open_output(path);
  out << cascade_to_json(cascade).dump(2) << '\n';
}

inline BiquadCascade read_cascade_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path.string() + ": " + e.what());
  }
  return cascade_from_json(j);
}

inline nlohmann::json report_to_json(const FeatureReport& report) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["record_id"] = report.record_id;
  j["mean_mv"] = report.mean_mv;
  j["std_mv"] = report.std_mv;
  j["sdsd"] = opt(report.sdsd_s);
  j["sdsd_unit"] = "s";
  j["hbr_bpm"] = opt(report.hbr_bpm);
  j["intervals"] = {{"pr_s", opt(report.median_pr_s)},
                    {"qrs_s", opt(report.median_qrs_s)},
                    {"st_s", opt(report.median_st_s)}};
  j["verdict"] = to_string(report.verdict);
  j["violations"] = report.violations;
  return j;
}

inline void write_report_json(const std::filesystem::path& path,
                              const FeatureReport& report) {
  auto out = detail::open_output(path);
  out << report_to_json(report).dump(2) << '\n';
}

inline nlohmann::json harmonics_to_json(const HarmonicAnalysis& h) {
  return {{"fundamental_hz", h.fundamental_hz},
          {"fundamental_rms_mv", h.fundamental_rms_mv},
          {"harmonic_rms_mv", h.harmonic_rms_mv},
          {"thd_percent", h.thd_percent}};
}

inline void write_harmonics_json(const std::filesystem::path& path,
                                 const HarmonicAnalysis& h) {
  auto out = detail::open_output(path);
  out << harmonics_to_json(h).dump(2) << '\n';
}

}  // namespace ecgtk

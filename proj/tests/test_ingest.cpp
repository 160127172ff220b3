#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ecgtk/io.hpp"

using namespace ecgtk;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

fs::path test_dir() {
  const auto dir = fs::temp_directory_path() / "ecgtk_ingest_tests";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Interleaves adc(channel, sample) across channels and packs as format 212.
void write_record(const fs::path& dir, const std::string& name, int n_signals,
                  double fs_hz, std::uint64_t n_samples,
                  const std::function<int(int, std::uint64_t)>& adc,
                  const std::vector<std::string>& gain_tokens) {
  std::string header = name + " " + std::to_string(n_signals) + " " +
                       format_double(fs_hz) + " " + std::to_string(n_samples) +
                       "\n";
  for (int c = 0; c < n_signals; ++c)
    header += name + ".dat 212 " + gain_tokens[static_cast<std::size_t>(c)] + "\n";
  write_text(dir / (name + ".hea"), header);

  std::vector<int> flat;
  for (std::uint64_t k = 0; k < n_samples; ++k)
    for (int c = 0; c < n_signals; ++c) flat.push_back(adc(c, k));
  if (flat.size() % 2 != 0) flat.push_back(0);

  std::ofstream out(dir / (name + ".dat"), std::ios::binary);
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    const auto bytes = encode_212(flat[i], flat[i + 1]);
    out.write(reinterpret_cast<const char*>(bytes.data()), 3);
  }
}

}  // namespace

TEST_CASE("format 212 packs the documented byte layout") {
  const auto bytes = encode_212(-2048, 2047);
  REQUIRE(bytes == std::array<std::uint8_t, 3>{0x00, 0x78, 0xFF});
  const auto [s0, s1] = decode_212(bytes[0], bytes[1], bytes[2]);
  REQUIRE(s0 == -2048);
  REQUIRE(s1 == 2047);

  const auto zero = encode_212(0, 0);
  REQUIRE(zero == std::array<std::uint8_t, 3>{0x00, 0x00, 0x00});
  REQUIRE(decode_212(0x39, 0x21, 0x74) == std::pair<int, int>{0x139, 0x274});
}

TEST_CASE("format 212 encode/decode are mutually inverse") {
  std::mt19937 rng(59);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto b0 = static_cast<std::uint8_t>(byte(rng));
    const auto b1 = static_cast<std::uint8_t>(byte(rng));
    const auto b2 = static_cast<std::uint8_t>(byte(rng));
    const auto [s0, s1] = decode_212(b0, b1, b2);
    REQUIRE(encode_212(s0, s1) == std::array<std::uint8_t, 3>{b0, b1, b2});
  }
  std::uniform_int_distribution<int> sample(-2048, 2047);
  for (int trial = 0; trial < 10000; ++trial) {
    const int s0 = sample(rng), s1 = sample(rng);
    const auto bytes = encode_212(s0, s1);
    REQUIRE(decode_212(bytes[0], bytes[1], bytes[2]) == std::pair<int, int>{s0, s1});
  }
}

TEST_CASE("format 212 encode rejects out-of-range samples") {
  REQUIRE_THROWS_AS(encode_212(2048, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(encode_212(0, -2049), std::invalid_argument);
}

TEST_CASE("header parsing reads record and signal lines") {
  std::istringstream in(
      "# a comment\n"
      "\n"
      "rec01/2 2 360/1000 230400 0:0:0\n"
      "rec01.dat 212 200(1024)/mV 11 1024 0 0 0 MLII\n"
      "# interleaved channel\n"
      "rec01.dat 212 100 11 512 0 0 0\n");
  const auto h = parse_header(in, "test");
  REQUIRE(h.record_name == "rec01");
  REQUIRE(h.n_signals == 2);
  REQUIRE(h.sample_rate_hz == 360.0);
  REQUIRE(h.n_samples == 230400);
  REQUIRE(h.signals[0].gain == 200.0);
  REQUIRE(h.signals[0].baseline == 1024);
  REQUIRE(h.signals[0].label == "MLII");
  REQUIRE(h.signals[1].gain == 100.0);
  REQUIRE(h.signals[1].baseline == 512);  // adc-zero fallback
  REQUIRE(h.signals[1].label == "ECG2");  // default label
}

TEST_CASE("header parsing rejects malformed content") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_header(in, "test");
  };
  REQUIRE_THROWS_AS(parse(""), std::runtime_error);
  REQUIRE_THROWS_AS(parse("rec 1 360\n"), std::runtime_error);
  REQUIRE_THROWS_AS(parse("rec 1 360 100\n"), std::runtime_error);  // no signal line
  REQUIRE_THROWS_AS(parse("rec 1 360 100\nrec.dat 212\n"), std::runtime_error);
  REQUIRE_THROWS_WITH(parse("rec 1 360 100\nrec.dat 212 0 11 0\n"),
                      ContainsSubstring("gain"));
  REQUIRE_THROWS_AS(parse("rec x 360 100\nrec.dat 212 200\n"), std::runtime_error);
}

TEST_CASE("read_wfdb converts interleaved channels to millivolts") {
  const auto dir = test_dir();
  // odd sample count exercises the half-filled trailing group
  const std::uint64_t n = 101;
  write_record(dir, "twoch", 2, 250.0, n,
               [](int c, std::uint64_t k) {
                 return c == 0 ? static_cast<int>(k) - 50
                               : static_cast<int>(2 * k) - 100;
               },
               {"200(1024)/mV", "100"});

  const auto ch0 = read_wfdb(dir / "twoch.hea", 0);
  REQUIRE(ch0.samples.size() == n);
  REQUIRE(ch0.sample_rate_hz == 250.0);
  REQUIRE(ch0.record_id == "twoch");
  REQUIRE(ch0.channel == "ECG1");
  for (std::uint64_t k = 0; k < n; ++k)
    REQUIRE_THAT(ch0.samples[k],
                 WithinAbs((static_cast<double>(k) - 50.0 - 1024.0) / 200.0, 1e-12));

  const auto ch1 = read_wfdb(dir / "twoch.hea", 1);
  REQUIRE(ch1.channel == "ECG2");
  for (std::uint64_t k = 0; k < n; ++k)
    REQUIRE_THAT(ch1.samples[k],
                 WithinAbs((2.0 * static_cast<double>(k) - 100.0) / 100.0, 1e-12));

  REQUIRE_THROWS_AS(read_wfdb(dir / "twoch.hea", 2), std::out_of_range);
}

TEST_CASE("read_wfdb defaults to the first channel") {
  const auto dir = test_dir();
  write_record(dir, "firstch", 2, 128.0, 10,
               [](int c, std::uint64_t) { return c == 0 ? 7 : 99; }, {"200", "200"});
  const auto s = read_wfdb(dir / "firstch.hea");
  for (double v : s.samples) REQUIRE_THAT(v, WithinAbs(7.0 / 200.0, 1e-12));
}

TEST_CASE("read_wfdb doubles gain, halves amplitude") {
  const auto dir = test_dir();
  auto adc = [](int, std::uint64_t k) { return static_cast<int>(k % 37) - 18; };
  write_record(dir, "gain200", 1, 360.0, 64, adc, {"200"});
  write_record(dir, "gain400", 1, 360.0, 64, adc, {"400"});
  const auto a = read_wfdb(dir / "gain200.hea");
  const auto b = read_wfdb(dir / "gain400.hea");
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    REQUIRE_THAT(b.samples[i], WithinAbs(a.samples[i] / 2.0, 1e-12));
}

TEST_CASE("read_wfdb reports truncation with a byte offset") {
  const auto dir = test_dir();
  write_record(dir, "trunc", 1, 360.0, 100,
               [](int, std::uint64_t) { return 5; }, {"200"});
  fs::resize_file(dir / "trunc.dat", 30);
  REQUIRE_THROWS_WITH(read_wfdb(dir / "trunc.hea"),
                      ContainsSubstring("byte offset 30"));
}

TEST_CASE("read_wfdb names an unsupported format code") {
  const auto dir = test_dir();
  write_text(dir / "fmt16.hea", "fmt16 1 360 10\nfmt16.dat 16 200\n");
  write_text(dir / "fmt16.dat", std::string(30, '\0'));
  REQUIRE_THROWS_WITH(read_wfdb(dir / "fmt16.hea"), ContainsSubstring("16"));
}

TEST_CASE("read_wfdb requires the signal file") {
  const auto dir = test_dir();
  write_text(dir / "nodata.hea", "nodata 1 360 10\nnodata.dat 212 200\n");
  fs::remove(dir / "nodata.dat");
  REQUIRE_THROWS_AS(read_wfdb(dir / "nodata.hea"), std::runtime_error);
  REQUIRE_THROWS_AS(read_wfdb(dir / "missing.hea"), std::runtime_error);
}

TEST_CASE("read_csv parses amplitudes one per row") {
  const auto dir = test_dir();
  write_text(dir / "plain.csv", "0.0\n0.1\n-0.1\n");
  const auto s = read_csv(dir / "plain.csv", 360.0);
  REQUIRE(s.samples == std::vector<double>{0.0, 0.1, -0.1});
  REQUIRE(s.sample_rate_hz == 360.0);
  REQUIRE(s.record_id == "plain");
}

TEST_CASE("read_csv ignores a leading time column") {
  const auto dir = test_dir();
  write_text(dir / "timed.csv", "0.000, 0.5\n0.004, 0.25\n\n0.008, -0.5\n");
  const auto s = read_csv(dir / "timed.csv", 250.0);
  REQUIRE(s.samples == std::vector<double>{0.5, 0.25, -0.5});
}

TEST_CASE("read_csv reports the offending line") {
  const auto dir = test_dir();
  write_text(dir / "bad.csv", "0.5\nabc\n0.25\n");
  REQUIRE_THROWS_WITH(read_csv(dir / "bad.csv", 360.0),
                      ContainsSubstring("line 2"));
  write_text(dir / "wide.csv", "1,2,3\n");
  REQUIRE_THROWS_AS(read_csv(dir / "wide.csv", 360.0), std::runtime_error);
}

TEST_CASE("read_csv rejects empty and non-finite input") {
  const auto dir = test_dir();
  write_text(dir / "empty.csv", "");
  REQUIRE_THROWS_AS(read_csv(dir / "empty.csv", 360.0), std::invalid_argument);
  write_text(dir / "blank.csv", "\n\n");
  REQUIRE_THROWS_AS(read_csv(dir / "blank.csv", 360.0), std::invalid_argument);
  write_text(dir / "inf.csv", "0.1\ninf\n");
  REQUIRE_THROWS_AS(read_csv(dir / "inf.csv", 360.0), std::invalid_argument);
  write_text(dir / "nan.csv", "nan\n");
  REQUIRE_THROWS_AS(read_csv(dir / "nan.csv", 360.0), std::invalid_argument);
  write_text(dir / "ok.csv", "0.1\n");
  REQUIRE_THROWS_AS(read_csv(dir / "ok.csv", 0.0), std::invalid_argument);
}

TEST_CASE("signal csv writing round-trips doubles exactly") {
  const auto dir = test_dir();
  EcgSignal s;
  s.sample_rate_hz = 360.0;
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> amp(-3.0, 3.0);
  s.samples.resize(500);
  for (double& v : s.samples) v = amp(rng);
  s.samples[0] = 0.1;  // not exactly representable; shortest form must round-trip
  write_signal_csv(dir / "roundtrip.csv", s);
  const auto back = read_csv(dir / "roundtrip.csv", 360.0);
  REQUIRE(back.samples == s.samples);
}

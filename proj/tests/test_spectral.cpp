#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ecgtk/spectral.hpp"
#include "ecgtk/synthetic.hpp"

using namespace ecgtk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<std::complex<double>> direct_dft(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t m = 0; m < n; ++m)
      out[k] += x[m] * std::polar(1.0, -2.0 * std::numbers::pi *
                                           static_cast<double>(k * m) /
                                           static_cast<double>(n));
  return out;
}

std::vector<std::complex<double>> random_frame(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::vector<std::complex<double>> x(n);
  for (auto& v : x) v = {amp(rng), amp(rng)};
  return x;
}

EcgSignal tone(double freq_hz, double amplitude, double duration_s, double fs) {
  EcgSignal s;
  s.sample_rate_hz = fs;
  s.samples.assign(static_cast<std::size_t>(std::llround(duration_s * fs)), 0.0);
  return add_tone(s, freq_hz, amplitude);
}

}  // namespace

TEST_CASE("hamming window of length 4") {
  const auto w = make_window({WindowFamily::hamming, 4});
  REQUIRE(w.size() == 4);
  REQUIRE_THAT(w[0], WithinAbs(0.08, 1e-12));
  REQUIRE_THAT(w[1], WithinAbs(0.77, 1e-12));
  REQUIRE_THAT(w[2], WithinAbs(0.77, 1e-12));
  REQUIRE_THAT(w[3], WithinAbs(0.08, 1e-12));
}

TEST_CASE("blackman endpoints are zero") {
  for (std::size_t n : {2, 5, 64, 255}) {
    const auto w = make_window({WindowFamily::blackman, n});
    REQUIRE_THAT(w.front(), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(w.back(), WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("kaiser with beta 0 degenerates to rectangular") {
  WindowSpec spec{WindowFamily::kaiser, 8};
  spec.beta = 0.0;
  const auto w = make_window(spec);
  for (double v : w) REQUIRE_THAT(v, WithinAbs(1.0, 1e-12));
}

TEST_CASE("windows are symmetric with coefficients in [0,1]") {
  for (auto family :
       {WindowFamily::rectangular, WindowFamily::hamming, WindowFamily::kaiser,
        WindowFamily::blackman, WindowFamily::gaussian}) {
    for (std::size_t n : {2, 3, 8, 63, 256}) {
      WindowSpec spec{family, n};
      const auto w = make_window(spec);
      REQUIRE(w.size() == n);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(w[i] >= 0.0);
        REQUIRE(w[i] <= 1.0 + 1e-12);
        REQUIRE_THAT(w[i], WithinAbs(w[n - 1 - i], 1e-12));
      }
    }
  }
}

TEST_CASE("window construction rejects bad specs") {
  REQUIRE_THROWS_AS(make_window({WindowFamily::hamming, 1}),
                    std::invalid_argument);
  WindowSpec bad_beta{WindowFamily::kaiser, 16};
  bad_beta.beta = -1.0;
  REQUIRE_THROWS_AS(make_window(bad_beta), std::invalid_argument);
  WindowSpec bad_sigma{WindowFamily::gaussian, 16};
  bad_sigma.sigma = 0.0;
  REQUIRE_THROWS_AS(make_window(bad_sigma), std::invalid_argument);
}

TEST_CASE("window family names round-trip") {
  for (auto family :
       {WindowFamily::rectangular, WindowFamily::hamming, WindowFamily::kaiser,
        WindowFamily::blackman, WindowFamily::gaussian})
    REQUIRE(window_family_from_string(to_string(family)) == family);
  REQUIRE_THROWS_AS(window_family_from_string("hann"), std::invalid_argument);
}

TEST_CASE("fft of small known frames") {
  const auto impulse = fft(std::vector<double>{1.0, 0.0, 0.0, 0.0}, 4);
  for (const auto& bin : impulse.bins)
    REQUIRE_THAT(std::abs(bin - std::complex<double>{1.0, 0.0}),
                 WithinAbs(0.0, 1e-12));

  const auto constant = fft(std::vector<double>{1.0, 1.0, 1.0, 1.0}, 4);
  REQUIRE_THAT(std::abs(constant.bins[0] - std::complex<double>{4.0, 0.0}),
               WithinAbs(0.0, 1e-12));
  for (std::size_t k = 1; k < 4; ++k)
    REQUIRE_THAT(std::abs(constant.bins[k]), WithinAbs(0.0, 1e-12));

  REQUIRE_THAT(constant.bin_width_hz(), WithinRel(0.25, 1e-15));
  const auto sized = fft(std::vector<double>{1.0}, 256, 360.0);
  REQUIRE_THAT(sized.bin_width_hz(), WithinRel(360.0 / 256.0, 1e-15));
}

TEST_CASE("fft validates its arguments") {
  REQUIRE_THROWS_AS(fft(std::vector<double>{}, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(fft(std::vector<double>{1.0, 2.0, 3.0}, 3),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(fft(std::vector<double>{1.0, 2.0, 3.0}, 2),
                    std::invalid_argument);
}

TEST_CASE("fft matches the direct transform") {
  std::mt19937 rng(41);
  int frames_checked = 0;
  for (std::size_t n = 2; n <= 256; n *= 2) {
    for (int trial = 0; trial < 13; ++trial) {
      const auto x = random_frame(rng, n);
      const auto fast = fft(x, n);
      const auto slow = direct_dft(x);
      double err = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        err = std::max(err, std::abs(fast.bins[k] - slow[k]));
        scale = std::max(scale, std::abs(slow[k]));
      }
      REQUIRE(err <= 1e-9 * std::max(1.0, scale));
      ++frames_checked;
    }
  }
  REQUIRE(frames_checked >= 100);
}

TEST_CASE("fft satisfies Parseval's identity") {
  std::mt19937 rng(43);
  for (std::size_t n = 4; n <= 1024; n *= 2) {
    const auto x = random_frame(rng, n);
    const auto spectrum = fft(x, n);
    double time_energy = 0.0, freq_energy = 0.0;
    for (const auto& v : x) time_energy += std::norm(v);
    for (const auto& v : spectrum.bins) freq_energy += std::norm(v);
    freq_energy /= static_cast<double>(n);
    REQUIRE_THAT(freq_energy, WithinRel(time_energy, 1e-9));
  }
}

TEST_CASE("fft is linear") {
  std::mt19937 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 64;
    const auto x = random_frame(rng, n);
    const auto y = random_frame(rng, n);
    std::vector<std::complex<double>> mix(n);
    const std::complex<double> alpha{1.3, -0.4}, beta{-0.7, 2.1};
    for (std::size_t i = 0; i < n; ++i) mix[i] = alpha * x[i] + beta * y[i];
    const auto fx = fft(x, n), fy = fft(y, n), fmix = fft(mix, n);
    for (std::size_t k = 0; k < n; ++k)
      REQUIRE_THAT(std::abs(fmix.bins[k] - (alpha * fx.bins[k] + beta * fy.bins[k])),
                   WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("stft frame geometry") {
  const auto x = tone(20.0, 1.0, 10.0, 360.0);
  const WindowSpec window{WindowFamily::hamming, 256};
  const auto sg = stft(x, window, 64, 256);
  REQUIRE(sg.frames() == 53);  // (3600 - 256) / 64 + 1
  REQUIRE(sg.n_bins == 129);
  REQUIRE(sg.hop_samples == 64);
  REQUIRE_THAT(sg.frame_times_s[0], WithinAbs(127.5 / 360.0, 1e-12));
  REQUIRE_THAT(sg.frame_times_s[1] - sg.frame_times_s[0],
               WithinAbs(64.0 / 360.0, 1e-12));
  for (std::size_t k = 0; k < sg.n_bins; ++k)
    REQUIRE_THAT(sg.bin_freqs_hz[k],
                 WithinAbs(static_cast<double>(k) * 360.0 / 256.0, 1e-12));
  for (double m : sg.magnitudes) REQUIRE(m >= 0.0);
}

TEST_CASE("stft keeps exactly one frame when only one window fits") {
  EcgSignal x;
  x.sample_rate_hz = 360.0;
  x.samples.assign(300, 0.5);
  const auto sg = stft(x, {WindowFamily::hamming, 256}, 64, 256);
  REQUIRE(sg.frames() == 1);
}

TEST_CASE("stft of a stationary tone has a constant argmax bin") {
  const auto x = tone(20.0, 1.0, 10.0, 360.0);
  const auto sg = stft(x, {WindowFamily::hamming, 256}, 64, 256);
  // 20 Hz / (360/256 Hz per bin) = 14.2
  for (std::size_t t = 0; t < sg.frames(); ++t) {
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < sg.n_bins; ++k)
      if (sg.at(t, k) > sg.at(t, argmax)) argmax = k;
    REQUIRE(argmax == 14);
  }
}

TEST_CASE("stft zero-padding interpolates without moving the peak") {
  const auto x = tone(20.0, 1.0, 4.0, 360.0);
  const auto sg = stft(x, {WindowFamily::hamming, 256}, 128, 1024);
  REQUIRE(sg.n_bins == 513);
  std::size_t argmax = 0;
  for (std::size_t k = 1; k < sg.n_bins; ++k)
    if (sg.at(0, k) > sg.at(0, argmax)) argmax = k;
  REQUIRE_THAT(sg.bin_freqs_hz[argmax], WithinAbs(20.0, 360.0 / 1024.0));
}

TEST_CASE("stft validates its arguments") {
  const auto x = tone(20.0, 1.0, 1.0, 360.0);
  REQUIRE_THROWS_AS(stft(x, {WindowFamily::hamming, 512}, 64, 512),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stft(x, {WindowFamily::hamming, 256}, 0, 256),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stft(x, {WindowFamily::hamming, 256}, 64, 255),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stft(x, {WindowFamily::hamming, 256}, 64, 128),
                    std::invalid_argument);
}

TEST_CASE("tone_rms recovers a sine's RMS amplitude") {
  const auto x = tone(50.0, 2.0, 2.0, 1000.0);
  REQUIRE_THAT(tone_rms(x, 50.0), WithinAbs(2.0 / std::numbers::sqrt2, 1e-9));
  // off-frequency content projects to almost nothing
  REQUIRE(tone_rms(x, 130.0) < 1e-9);
  REQUIRE_THROWS_AS(tone_rms(x, 0.25), std::invalid_argument);  // < 1 period
  REQUIRE_THROWS_AS(tone_rms(x, 500.0), std::out_of_range);
  REQUIRE_THROWS_AS(tone_rms(x, -5.0), std::invalid_argument);
}

TEST_CASE("thd of a pure tone is below 0.1 percent") {
  const auto x = tone(50.0, 1.0, 2.0, 1000.0);
  const auto h = thd(x, 50.0, 5);
  REQUIRE(h.thd_percent <= 0.1);
  REQUIRE_THAT(h.fundamental_rms_mv, WithinAbs(1.0 / std::numbers::sqrt2, 1e-6));
  REQUIRE(h.harmonic_rms_mv.size() == 4);
}

TEST_CASE("thd of a two-tone fixture is 10 percent") {
  // RMS 1.0 at 50 Hz plus RMS 0.1 at the third harmonic
  auto x = tone(50.0, std::numbers::sqrt2, 2.0, 1000.0);
  x = add_tone(x, 150.0, 0.1 * std::numbers::sqrt2);
  const auto h = thd(x, 50.0, 5);
  REQUIRE_THAT(h.thd_percent, WithinAbs(10.0, 0.2));
  REQUIRE_THAT(h.fundamental_rms_mv, WithinAbs(1.0, 1e-6));
  REQUIRE_THAT(h.harmonic_rms_mv[1], WithinAbs(0.1, 1e-6));
}

TEST_CASE("thd combines harmonics in quadrature") {
  auto x = tone(50.0, std::numbers::sqrt2, 2.0, 1000.0);
  x = add_tone(x, 100.0, 0.06 * std::numbers::sqrt2);
  x = add_tone(x, 150.0, 0.08 * std::numbers::sqrt2);
  const auto h = thd(x, 50.0, 5);
  REQUIRE_THAT(h.thd_percent, WithinAbs(10.0, 0.2));  // sqrt(0.06^2 + 0.08^2) = 0.1
}

TEST_CASE("thd is invariant under amplitude scaling") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> amp(0.2, 2.0);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = tone(60.0, amp(rng), 1.0, 1200.0);
    x = add_tone(x, 180.0, amp(rng) * 0.2);
    auto scaled = x;
    const double factor = scale(rng);
    for (double& v : scaled.samples) v *= factor;
    const auto a = thd(x, 60.0, 4);
    const auto b = thd(scaled, 60.0, 4);
    REQUIRE_THAT(b.thd_percent, WithinRel(a.thd_percent, 1e-9));
  }
}

TEST_CASE("thd validates its arguments") {
  const auto x = tone(50.0, 1.0, 2.0, 1000.0);
  REQUIRE_THROWS_AS(thd(x, 0.0, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(thd(x, 50.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(thd(x, 50.0, 10), std::invalid_argument);  // 500 Hz = Nyquist
  const auto brief = tone(50.0, 1.0, 0.03, 1000.0);
  REQUIRE_THROWS_AS(thd(brief, 50.0, 5), std::invalid_argument);

  EcgSignal silent;
  silent.sample_rate_hz = 1000.0;
  silent.samples.assign(2000, 0.0);
  REQUIRE_THROWS_AS(thd(silent, 50.0, 5), std::invalid_argument);
}

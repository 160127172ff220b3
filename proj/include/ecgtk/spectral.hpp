#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecgtk/signal.hpp"

namespace ecgtk {

enum class WindowFamily { rectangular, hamming, kaiser, blackman, gaussian };

inline const char* to_string(WindowFamily family) {
  switch (family) {
    case WindowFamily::rectangular: return "rectangular";
    case WindowFamily::hamming: return "hamming";
    case WindowFamily::kaiser: return "kaiser";
    case WindowFamily::blackman: return "blackman";
    case WindowFamily::gaussian: return "gaussian";
  }
  throw std::invalid_argument("to_string: unknown window family");
}

inline WindowFamily window_family_from_string(const std::string& name) {
  if (name == "rectangular") return WindowFamily::rectangular;
  if (name == "hamming") return WindowFamily::hamming;
  if (name == "kaiser") return WindowFamily::kaiser;
  if (name == "blackman") return WindowFamily::blackman;
  if (name == "gaussian") return WindowFamily::gaussian;
  throw std::invalid_argument("unknown window family '" + name + "'");
}

struct WindowSpec {
  WindowFamily family = WindowFamily::hamming;
  std::size_t length_n = 256;
  double beta = 8.6;   // kaiser shape
  double sigma = 0.4;  // gaussian width, relative to half the span
};

/// Symmetric window coefficients; all families are normalized so the peak
/// coefficient is at most 1.
inline std::vector<double> make_window(const WindowSpec& spec) {
  if (spec.length_n < 2)
    throw std::invalid_argument("make_window: length must be >= 2");
  const std::size_t n = spec.length_n;
  const double m = static_cast<double>(n - 1);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> w(n);
  switch (spec.family) {
    case WindowFamily::rectangular:
      std::fill(w.begin(), w.end(), 1.0);
      break;
    case WindowFamily::hamming:
      for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(two_pi * static_cast<double>(i) / m);
      break;
    case WindowFamily::blackman:
      for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / m;
        w[i] = 0.42 - 0.5 * std::cos(two_pi * x) + 0.08 * std::cos(2.0 * two_pi * x);
      }
      break;
    case WindowFamily::kaiser: {
      if (!(spec.beta >= 0.0))
        throw std::invalid_argument("make_window: kaiser beta must be >= 0");
      const double denom = std::cyl_bessel_i(0.0, spec.beta);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * static_cast<double>(i) / m - 1.0;
        const double arg = std::sqrt(std::max(0.0, 1.0 - x * x));
        w[i] = std::cyl_bessel_i(0.0, spec.beta * arg) / denom;
      }
      break;
    }
    case WindowFamily::gaussian: {
      if (!(spec.sigma > 0.0))
        throw std::invalid_argument("make_window: gaussian sigma must be > 0");
      const double half = spec.sigma * m / 2.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (static_cast<double>(i) - m / 2.0) / half;
        w[i] = std::exp(-0.5 * d * d);
      }
      break;
    }
  }
  // the formulas land in [0,1] analytically; squeeze out fp undershoot
  for (double& v : w) v = std::clamp(v, 0.0, 1.0);
  return w;
}

constexpr bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

/// Iterative radix-2 decimation-in-time transform, unnormalized forward.
/// Length must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < half; ++k)
      twiddle[k] = std::polar(1.0, ang * static_cast<double>(k));
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * twiddle[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

}  // namespace detail

struct Spectrum {
  std::vector<std::complex<double>> bins;  // size n, bin k at k * fs / n
  double sample_rate_hz = 1.0;
  double bin_width_hz() const {
    return sample_rate_hz / static_cast<double>(bins.size());
  }
};

/// Forward transform of a frame zero-padded to n (a power of two).
inline Spectrum fft(const std::vector<std::complex<double>>& frame, std::size_t n,
                    double sample_rate_hz = 1.0) {
  if (frame.empty()) throw std::invalid_argument("fft: frame has no samples");
  if (!is_power_of_two(n))
    throw std::invalid_argument("fft: transform length " + std::to_string(n) +
                                " is not a power of two");
  if (frame.size() > n)
    throw std::invalid_argument("fft: frame longer than transform length");
  Spectrum out;
  out.sample_rate_hz = sample_rate_hz;
  out.bins.assign(n, {0.0, 0.0});
  std::copy(frame.begin(), frame.end(), out.bins.begin());
  detail::fft_inplace(out.bins);
  return out;
}

inline Spectrum fft(const std::vector<double>& frame, std::size_t n,
                    double sample_rate_hz = 1.0) {
  return fft(std::vector<std::complex<double>>(frame.begin(), frame.end()), n,
             sample_rate_hz);
}

struct Spectrogram {
  std::vector<double> magnitudes;  // row-major, frames() x n_bins
  std::size_t n_bins = 0;
  std::vector<double> frame_times_s;  // window-center time of each frame
  std::vector<double> bin_freqs_hz;
  WindowSpec window;
  std::size_t hop_samples = 0;

  std::size_t frames() const { return frame_times_s.size(); }
  double at(std::size_t frame, std::size_t bin) const {
    if (frame >= frames() || bin >= n_bins)
      throw std::out_of_range("Spectrogram::at: index out of range");
    return magnitudes[frame * n_bins + bin];
  }
};

/// Magnitude short-time transform. Frames start at multiples of hop; a
/// trailing partial frame is dropped. Bins 0..nfft/2 are kept.
inline Spectrogram stft(const EcgSignal& signal, const WindowSpec& window,
                        std::size_t hop, std::size_t nfft) {
  const std::size_t n = window.length_n;
  if (signal.samples.size() < n)
    throw std::invalid_argument("stft: signal shorter than one window (" +
                                std::to_string(signal.samples.size()) + " < " +
                                std::to_string(n) + " samples)");
  if (hop < 1) throw std::invalid_argument("stft: hop must be >= 1");
  if (!is_power_of_two(nfft))
    throw std::invalid_argument("stft: nfft " + std::to_string(nfft) +
                                " is not a power of two");
  if (nfft < n)
    throw std::invalid_argument("stft: nfft must be >= window length");

  const auto w = make_window(window);
  const std::size_t n_frames = (signal.samples.size() - n) / hop + 1;
  const std::size_t n_bins = nfft / 2 + 1;
  const double fs = signal.sample_rate_hz;

  Spectrogram out;
  out.n_bins = n_bins;
  out.window = window;
  out.hop_samples = hop;
  out.magnitudes.resize(n_frames * n_bins);
  out.frame_times_s.resize(n_frames);
  out.bin_freqs_hz.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    out.bin_freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(nfft);

  std::vector<std::complex<double>> frame(nfft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * hop;
    std::fill(frame.begin(), frame.end(), std::complex<double>{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i)
      frame[i] = signal.samples[start + i] * w[i];
    detail::fft_inplace(frame);
    for (std::size_t k = 0; k < n_bins; ++k)
      out.magnitudes[t * n_bins + k] = std::abs(frame[k]);
    out.frame_times_s[t] =
        (static_cast<double>(start) + 0.5 * static_cast<double>(n - 1)) / fs;
  }
  return out;
}

namespace detail {

/// Complex projection of a tone at freq_hz onto the first m samples.
inline std::complex<double> tone_projection(const std::vector<double>& samples,
                                            double sample_rate_hz, double freq_hz,
                                            std::size_t m) {
  const double step = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double phase = step * static_cast<double>(i);
    re += samples[i] * std::cos(phase);
    im -= samples[i] * std::sin(phase);
  }
  return {re, im};
}

/// Sample count covering the largest whole number of periods of freq_hz that
/// fits in len samples, and that period count.
inline std::pair<std::size_t, std::size_t> whole_period_span(std::size_t len,
                                                             double sample_rate_hz,
                                                             double freq_hz) {
  const double periods =
      static_cast<double>(len) * freq_hz / sample_rate_hz;
  const auto k = static_cast<std::size_t>(periods);
  if (k == 0) return {0, 0};
  auto m = static_cast<std::size_t>(
      std::llround(static_cast<double>(k) * sample_rate_hz / freq_hz));
  m = std::min(m, len);
  return {m, k};
}

}  // namespace detail

/// RMS amplitude of the tone at freq_hz, projected over a whole number of its
/// periods (at least one must fit).
inline double tone_rms(const EcgSignal& signal, double freq_hz) {
  if (signal.samples.empty())
    throw std::invalid_argument("tone_rms: signal has no samples");
  if (!(freq_hz > 0.0))
    throw std::invalid_argument("tone_rms: frequency must be > 0");
  if (freq_hz >= signal.sample_rate_hz / 2.0)
    throw std::out_of_range("tone_rms: frequency " + std::to_string(freq_hz) +
                            " Hz is at or above Nyquist");
  const auto [m, k] = detail::whole_period_span(signal.samples.size(),
                                                signal.sample_rate_hz, freq_hz);
  if (k < 1)
    throw std::invalid_argument("tone_rms: signal shorter than one period of " +
                                std::to_string(freq_hz) + " Hz");
  const auto proj =
      detail::tone_projection(signal.samples, signal.sample_rate_hz, freq_hz, m);
  const double amplitude = 2.0 * std::abs(proj) / static_cast<double>(m);
  return amplitude / std::numbers::sqrt2;
}

struct HarmonicAnalysis {
  double fundamental_hz = 0.0;
  double fundamental_rms_mv = 0.0;
  std::vector<double> harmonic_rms_mv;  // orders 2..n_max in order
  double thd_percent = 0.0;
};

/// Total harmonic distortion: each component measured by single-tone
/// projection over the same whole number of fundamental periods, then
/// 100 * sqrt(sum of squared harmonic RMS) / fundamental RMS.
inline HarmonicAnalysis thd(const EcgSignal& signal, double fundamental_hz,
                            int n_max) {
  if (signal.samples.empty())
    throw std::invalid_argument("thd: signal has no samples");
  if (!(fundamental_hz > 0.0))
    throw std::invalid_argument("thd: fundamental must be > 0");
  if (n_max < 2) throw std::invalid_argument("thd: n_max must be >= 2");
  const double nyquist = signal.sample_rate_hz / 2.0;
  if (fundamental_hz * static_cast<double>(n_max) >= nyquist)
    throw std::invalid_argument(
        "thd: harmonic " + std::to_string(n_max) + " of " +
        std::to_string(fundamental_hz) + " Hz is at or above Nyquist (" +
        std::to_string(nyquist) + " Hz)");

  const auto [m, k] = detail::whole_period_span(
      signal.samples.size(), signal.sample_rate_hz, fundamental_hz);
  if (k < 2)
    throw std::invalid_argument(
        "thd: need at least 2 whole fundamental periods, signal covers " +
        std::to_string(k));

  auto component_rms = [&](double freq) {
    const auto proj =
        detail::tone_projection(signal.samples, signal.sample_rate_hz, freq, m);
    return 2.0 * std::abs(proj) / static_cast<double>(m) / std::numbers::sqrt2;
  };

  HarmonicAnalysis out;
  out.fundamental_hz = fundamental_hz;
  out.fundamental_rms_mv = component_rms(fundamental_hz);
  if (out.fundamental_rms_mv < 1e-12)
    throw std::invalid_argument("thd: degenerate fundamental, RMS below 1e-12");
  double sum_sq = 0.0;
  for (int h = 2; h <= n_max; ++h) {
    const double v = component_rms(fundamental_hz * h);
    out.harmonic_rms_mv.push_back(v);
    sum_sq += v * v;
  }
  out.thd_percent = 100.0 * std::sqrt(sum_sq) / out.fundamental_rms_mv;
  return out;
}

}  // namespace ecgtk

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecgtk/signal.hpp"

namespace ecgtk {

/// One Gaussian bump of a synthetic beat, placed relative to the R peak.
struct WaveComponent {
  double offset_s = 0.0;
  double amplitude_mv = 1.0;
  double sigma_s = 0.01;
};

/// P-QRS-T morphology giving roughly 0.16 s PR, 0.08 s QRS, 0.30 s ST at the
/// default timing.
inline std::vector<WaveComponent> default_pqrst_waves() {
  return {
      {-0.189, 0.12, 0.025},   // P
      {-0.0306, -0.10, 0.010}, // Q
      {0.0, 1.0, 0.010},       // R
      {0.05, -0.15, 0.010},    // S
      {0.35, 0.30, 0.040},     // T
  };
}

inline std::vector<WaveComponent> r_spike_waves(double amplitude_mv = 1.0,
                                                double sigma_s = 0.010) {
  return {{0.0, amplitude_mv, sigma_s}};
}

struct SyntheticEcgConfig {
  double sample_rate_hz = 360.0;
  double duration_s = 30.0;
  double beat_period_s = 0.8;  // 75 bpm
  double first_beat_s = 0.4;
  std::vector<WaveComponent> waves = default_pqrst_waves();
  std::string record_id = "synthetic";
};

/// Ground-truth R sample indices for a config.
inline std::vector<std::size_t> beat_centers(const SyntheticEcgConfig& config) {
  std::vector<std::size_t> centers;
  const auto n = static_cast<std::size_t>(
      std::llround(config.duration_s * config.sample_rate_hz));
  for (double t = config.first_beat_s; ; t += config.beat_period_s) {
    const auto idx = std::llround(t * config.sample_rate_hz);
    if (idx < 0 || static_cast<std::size_t>(idx) >= n) break;
    centers.push_back(static_cast<std::size_t>(idx));
  }
  return centers;
}

inline EcgSignal make_synthetic_ecg(const SyntheticEcgConfig& config) {
  if (!(config.sample_rate_hz > 0.0) || !(config.duration_s > 0.0) ||
      !(config.beat_period_s > 0.0))
    throw std::invalid_argument("make_synthetic_ecg: rates and durations must be > 0");
  const auto n = static_cast<std::size_t>(
      std::llround(config.duration_s * config.sample_rate_hz));
  EcgSignal out;
  out.sample_rate_hz = config.sample_rate_hz;
  out.record_id = config.record_id;
  out.channel = "synthetic";
  out.samples.assign(n, 0.0);

  for (double beat = config.first_beat_s;
       beat * config.sample_rate_hz < static_cast<double>(n);
       beat += config.beat_period_s) {
    for (const auto& wave : config.waves) {
      const double center = (beat + wave.offset_s) * config.sample_rate_hz;
      const double sigma = wave.sigma_s * config.sample_rate_hz;
      const auto lo = std::max<long long>(0, std::llround(center - 5.0 * sigma));
      const auto hi = std::min<long long>(static_cast<long long>(n) - 1,
                                          std::llround(center + 5.0 * sigma));
      for (long long i = lo; i <= hi; ++i) {
        const double d = (static_cast<double>(i) - center) / sigma;
        out.samples[static_cast<std::size_t>(i)] +=
            wave.amplitude_mv * std::exp(-0.5 * d * d);
      }
    }
  }
  return out;
}

inline EcgSignal add_gaussian_noise(const EcgSignal& signal, double noise_rms_mv,
                                    std::uint64_t seed) {
  if (!(noise_rms_mv >= 0.0))
    throw std::invalid_argument("add_gaussian_noise: noise RMS must be >= 0");
  EcgSignal out = signal;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, noise_rms_mv);
  for (double& v : out.samples) v += dist(rng);
  return out;
}

inline EcgSignal add_tone(const EcgSignal& signal, double freq_hz,
                          double amplitude_mv, double phase_rad = 0.0) {
  EcgSignal out = signal;
  const double step = 2.0 * std::numbers::pi * freq_hz / signal.sample_rate_hz;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] +=
        amplitude_mv * std::sin(step * static_cast<double>(i) + phase_rad);
  return out;
}

}  // namespace ecgtk

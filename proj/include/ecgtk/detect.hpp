#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ecgtk/filters.hpp"
#include "ecgtk/signal.hpp"

namespace ecgtk {

struct BeatLandmarks {
  std::optional<std::size_t> p, q, s, t;
};

struct BeatAnnotations {
  std::vector<std::size_t> r_indices;
  std::vector<double> rr_intervals_s;        // size r_indices.size() - 1
  std::vector<BeatLandmarks> landmarks;      // empty until delineated
};

struct PanTompkinsConfig {
  double bandpass_low_hz = 5.0;
  double bandpass_high_hz = 15.0;
  int bandpass_order = 2;
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double threshold_fraction = 0.25;
  double searchback_factor = 1.66;
};

namespace detail {

/// Five-point derivative, zero history: y[n] = (2x[n] + x[n-1] - x[n-3] - 2x[n-4]) / 8.
inline std::vector<double> derivative(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  auto at = [&](std::ptrdiff_t i) { return i < 0 ? 0.0 : x[static_cast<std::size_t>(i)]; };
  for (std::size_t n = 0; n < x.size(); ++n) {
    const auto i = static_cast<std::ptrdiff_t>(n);
    y[n] = (2.0 * at(i) + at(i - 1) - at(i - 3) - 2.0 * at(i - 4)) / 8.0;
  }
  return y;
}

/// Trailing moving-window mean, zero history before the first sample.
inline std::vector<double> moving_window_integral(const std::vector<double>& x,
                                                  std::size_t window) {
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    acc += x[n];
    if (n >= window) acc -= x[n - window];
    y[n] = acc / static_cast<double>(window);
  }
  return y;
}

/// Strict-rise local maxima: x[i-1] < x[i] >= x[i+1].
inline std::vector<std::size_t> local_maxima(const std::vector<double>& x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < x.size(); ++i)
    if (x[i - 1] < x[i] && x[i] >= x[i + 1]) out.push_back(i);
  return out;
}

}  // namespace detail

/// Adaptive-threshold R peak detector: band-pass, derivative, squaring,
/// moving-window integration, dual running thresholds with a search-back for
/// long RR gaps, then delay compensation and snapping to the raw-signal peak.
inline BeatAnnotations detect_r_peaks(const EcgSignal& signal,
                                      const PanTompkinsConfig& config = {}) {
  const double fs = signal.sample_rate_hz;
  if (!(fs >= 100.0))
    throw std::invalid_argument("detect_r_peaks: sample rate must be >= 100 Hz");
  if (signal.samples.empty() || signal.duration_s() < 2.0)
    throw std::invalid_argument("detect_r_peaks: need at least 2 s of signal");
  if (!(config.integration_window_s > 0.0) || !(config.refractory_s > 0.0) ||
      !(config.threshold_fraction > 0.0) || !(config.searchback_factor > 1.0))
    throw std::invalid_argument("detect_r_peaks: config values out of range");

  const BandpassDesign bp{config.bandpass_low_hz, config.bandpass_high_hz,
                          config.bandpass_order, fs};
  const auto cascade = design_butterworth_bandpass(bp);
  const auto filtered = apply(cascade, signal);
  const auto deriv = detail::derivative(filtered.samples);
  std::vector<double> squared(deriv.size());
  std::transform(deriv.begin(), deriv.end(), squared.begin(),
                 [](double v) { return v * v; });
  const auto mwi_window = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(config.integration_window_s * fs)));
  const auto mwi = detail::moving_window_integral(squared, mwi_window);

  const auto candidates = detail::local_maxima(mwi);
  const auto init_n =
      std::min(mwi.size(), static_cast<std::size_t>(std::llround(2.0 * fs)));
  double peak_level = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(init_n)) / 2.0;
  double noise_level = 0.0;
  for (std::size_t i = 0; i < init_n; ++i) noise_level += mwi[i];
  noise_level /= static_cast<double>(init_n);

  double threshold1 = 0.0, threshold2 = 0.0;
  auto update_thresholds = [&]() {
    threshold1 = noise_level + config.threshold_fraction * (peak_level - noise_level);
    threshold2 = 0.5 * threshold1;
  };
  update_thresholds();

  const auto refractory = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(config.refractory_s * fs)));

  std::vector<std::size_t> accepted;
  std::vector<double> recent_rr;  // last 8 accepted RR spans, in samples
  auto rr_average = [&]() {
    if (recent_rr.empty()) return 0.0;
    double sum = 0.0;
    for (double rr : recent_rr) sum += rr;
    return sum / static_cast<double>(recent_rr.size());
  };
  auto accept = [&](std::size_t idx, double gain) {
    if (!accepted.empty()) {
      recent_rr.push_back(static_cast<double>(idx - accepted.back()));
      if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
    }
    accepted.push_back(idx);
    peak_level = gain * mwi[idx] + (1.0 - gain) * peak_level;
    update_thresholds();
  };

  std::vector<std::size_t> pending;  // rejected candidates since last acceptance
  for (const std::size_t i : candidates) {
    const double rr_avg = rr_average();
    if (!accepted.empty() && rr_avg > 0.0 &&
        static_cast<double>(i - accepted.back()) >
            config.searchback_factor * rr_avg) {
      std::size_t best = 0;
      double best_v = threshold2;
      for (const std::size_t j : pending) {
        if (j <= accepted.back() + refractory) continue;
        if (mwi[j] > best_v) {
          best_v = mwi[j];
          best = j;
        }
      }
      if (best != 0) {
        accept(best, 0.25);
        pending.clear();
      }
    }
    if (!accepted.empty() && i - accepted.back() < refractory) continue;
    if (mwi[i] > threshold1) {
      accept(i, 0.125);
      pending.clear();
    } else {
      noise_level = 0.125 * mwi[i] + 0.875 * noise_level;
      update_thresholds();
      pending.push_back(i);
    }
  }

  // The integrator peak trails the R wave: band-pass group delay at the
  // geometric band center, 2 samples of derivative delay, half the window.
  // Where inside the integration plateau the local maximum lands depends on
  // the QRS energy shape, so the raw-signal search window below is widened by
  // half the integration window on top of the 0.05 s alignment slack.
  const double center_hz =
      std::sqrt(config.bandpass_low_hz * config.bandpass_high_hz);
  const double delay = group_delay_samples(cascade, center_hz) + 2.0 +
                       static_cast<double>(mwi_window - 1) / 2.0;
  const auto shift = std::llround(delay);
  const auto snap_half =
      std::llround(0.05 * fs) + static_cast<long long>((mwi_window - 1) / 2);
  const auto last = static_cast<long long>(signal.samples.size()) - 1;

  BeatAnnotations out;
  for (const std::size_t a : accepted) {
    long long center = static_cast<long long>(a) - shift;
    center = std::clamp<long long>(center, 0, last);
    const auto lo = std::max<long long>(0, center - snap_half);
    const auto hi = std::min<long long>(last, center + snap_half);
    auto best = static_cast<std::size_t>(lo);
    for (long long i = lo + 1; i <= hi; ++i)
      if (signal.samples[static_cast<std::size_t>(i)] > signal.samples[best])
        best = static_cast<std::size_t>(i);
    if (!out.r_indices.empty() && best - out.r_indices.back() < refractory) {
      if (signal.samples[best] > signal.samples[out.r_indices.back()])
        out.r_indices.back() = best;
    } else if (out.r_indices.empty() || best > out.r_indices.back()) {
      out.r_indices.push_back(best);
    }
  }
  for (std::size_t i = 1; i < out.r_indices.size(); ++i)
    out.rr_intervals_s.push_back(
        static_cast<double>(out.r_indices[i] - out.r_indices[i - 1]) / fs);
  return out;
}

/// Landmark search windows around each R peak, open intervals in seconds
/// discretized to sample indices. Q and S windows are clipped to the signal
/// and to neighboring beats; P and T are dropped when their nominal windows
/// would be truncated.
inline BeatAnnotations delineate_pqst(const EcgSignal& signal,
                                      const BeatAnnotations& beats) {
  if (beats.r_indices.empty())
    throw std::invalid_argument("delineate_pqst: no beats to delineate");
  const double fs = signal.sample_rate_hz;
  const auto len = static_cast<long long>(signal.samples.size());
  const double w_qrs = 0.08 * fs;
  const double w_p = 0.20 * fs;
  const double w_t_gap = 0.04 * fs;
  const double w_t_end = 0.40 * fs;

  auto argmin = [&](long long lo, long long hi) -> std::optional<std::size_t> {
    if (lo > hi) return std::nullopt;
    auto best = static_cast<std::size_t>(lo);
    for (long long i = lo + 1; i <= hi; ++i)
      if (signal.samples[static_cast<std::size_t>(i)] < signal.samples[best])
        best = static_cast<std::size_t>(i);
    return best;
  };
  auto argmax = [&](long long lo, long long hi) -> std::optional<std::size_t> {
    if (lo > hi) return std::nullopt;
    auto best = static_cast<std::size_t>(lo);
    for (long long i = lo + 1; i <= hi; ++i)
      if (signal.samples[static_cast<std::size_t>(i)] > signal.samples[best])
        best = static_cast<std::size_t>(i);
    return best;
  };

  BeatAnnotations out = beats;
  out.landmarks.assign(beats.r_indices.size(), {});
  const std::size_t n_beats = beats.r_indices.size();
  for (std::size_t b = 0; b < n_beats; ++b) {
    const auto r = static_cast<long long>(beats.r_indices[b]);
    if (r >= len) throw std::out_of_range("delineate_pqst: R index beyond signal");
    const long long prev_r =
        b > 0 ? static_cast<long long>(beats.r_indices[b - 1]) : -1;
    const long long next_r =
        b + 1 < n_beats ? static_cast<long long>(beats.r_indices[b + 1]) : len;
    auto& marks = out.landmarks[b];

    // Q: minimum in (R - 0.08 s, R), clipped to the signal and previous beat.
    const auto q_lo = std::max<long long>(
        {0, prev_r + 1,
         static_cast<long long>(std::floor(static_cast<double>(r) - w_qrs)) + 1});
    marks.q = argmin(q_lo, r - 1);

    // S: minimum in (R, R + 0.08 s), clipped likewise.
    const auto s_hi = std::min<long long>(
        {len - 1, next_r - 1,
         static_cast<long long>(std::ceil(static_cast<double>(r) + w_qrs)) - 1});
    marks.s = argmin(r + 1, s_hi);

    // P: maximum in (R - 0.20 s, Q); absent when the window would be truncated.
    if (marks.q) {
      const auto p_lo =
          static_cast<long long>(std::floor(static_cast<double>(r) - w_p)) + 1;
      if (p_lo >= 0 && p_lo > prev_r)
        marks.p = argmax(p_lo, static_cast<long long>(*marks.q) - 1);
    }

    // T: maximum in (S + 0.04 s, R + 0.40 s); absent when truncated.
    if (marks.s) {
      const auto t_lo = static_cast<long long>(std::floor(
                            static_cast<double>(*marks.s) + w_t_gap)) + 1;
      const auto t_hi = static_cast<long long>(std::ceil(
                            static_cast<double>(r) + w_t_end)) - 1;
      if (t_hi <= len - 1 && t_hi < next_r) marks.t = argmax(t_lo, t_hi);
    }
  }
  return out;
}

}  // namespace ecgtk

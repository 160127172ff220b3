#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecgtk {

/// Uniformly sampled waveform, amplitudes in millivolts.
/// Signals are immutable values: every operation returns a new signal.
struct EcgSignal {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::string record_id;
  std::string channel;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

struct AmplitudeHistogram {
  std::vector<double> edges;  // n_bins + 1 ascending bin edges (mV)
  std::vector<std::size_t> counts;
};

inline double rms(const std::vector<double>& values, std::size_t start = 0) {
  if (start >= values.size()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = start; i < values.size(); ++i) acc += values[i] * values[i];
  return std::sqrt(acc / static_cast<double>(values.size() - start));
}

/// Copy of the samples in [start_s, end_s), metadata preserved.
inline EcgSignal slice(const EcgSignal& signal, double start_s, double end_s) {
  if (signal.samples.empty())
    throw std::invalid_argument("slice: signal has no samples");
  const double duration = signal.duration_s();
  if (!(start_s >= 0.0 && start_s < end_s && end_s <= duration))
    throw std::out_of_range("slice: invalid range [" + std::to_string(start_s) +
                            ", " + std::to_string(end_s) +
                            "); valid bounds are 0 <= start < end <= " +
                            std::to_string(duration) + " s");
  const auto first =
      static_cast<std::size_t>(std::llround(start_s * signal.sample_rate_hz));
  const auto last = std::min(
      static_cast<std::size_t>(std::llround(end_s * signal.sample_rate_hz)),
      signal.samples.size());
  EcgSignal out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.record_id = signal.record_id;
  out.channel = signal.channel;
  out.samples.assign(signal.samples.begin() + static_cast<std::ptrdiff_t>(first),
                     signal.samples.begin() + static_cast<std::ptrdiff_t>(last));
  return out;
}

/// Equal-width amplitude histogram over [min, max]; the maximum lands in the
/// last bin. A constant signal widens the span by one ulp so the width stays
/// positive and everything counts into the first bin.
inline AmplitudeHistogram histogram(const EcgSignal& signal, std::size_t n_bins) {
  if (signal.samples.empty())
    throw std::invalid_argument("histogram: signal has no samples");
  if (n_bins < 1) throw std::invalid_argument("histogram: n_bins must be >= 1");
  const auto [lo_it, hi_it] =
      std::minmax_element(signal.samples.begin(), signal.samples.end());
  const double lo = *lo_it;
  double hi = *hi_it;
  const bool degenerate = hi == lo;
  if (degenerate) hi = std::nextafter(hi, std::numeric_limits<double>::infinity());

  AmplitudeHistogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  h.edges.back() = hi;

  h.counts.assign(n_bins, 0);
  const double scale = static_cast<double>(n_bins) / (hi - lo);
  for (double v : signal.samples) {
    auto idx = degenerate ? 0
                          : static_cast<std::size_t>((v - lo) * scale);
    idx = std::min(idx, n_bins - 1);
    ++h.counts[idx];
  }
  return h;
}

}  // namespace ecgtk

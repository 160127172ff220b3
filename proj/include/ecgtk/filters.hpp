#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecgtk/signal.hpp"

namespace ecgtk {

// ---------------------------------------------------------------------------
// Analog twin-T notch analysis
// ---------------------------------------------------------------------------

struct TwinTParams {
  double r_ohms = 32000.0;
  double c_farads = 100e-9;
};

/// canonical: symmetric twin-T null, H(jw0) = 0, passive Q = 1/4.
/// alternate: numerator s^2 + w0*s (no null; |H(jw0)| = sqrt(2)).
enum class TwinTVariant { canonical, alternate };

/// Second-order rational function of s, coefficients in descending powers.
struct AnalogTransferFunction {
  std::array<double, 3> num{};
  std::array<double, 3> den{};

  std::complex<double> at(std::complex<double> s) const {
    const auto n = (num[0] * s + num[1]) * s + num[2];
    const auto d = (den[0] * s + den[1]) * s + den[2];
    return n / d;
  }
  double magnitude_at_hz(double freq_hz) const {
    return std::abs(at({0.0, 2.0 * std::numbers::pi * freq_hz}));
  }
};

inline void validate(const TwinTParams& p) {
  if (!(p.r_ohms > 0.0) || !(p.c_farads > 0.0))
    throw std::invalid_argument("twin-t: R and C must be > 0");
}

inline double twin_t_notch_frequency(const TwinTParams& p) {
  validate(p);
  return 1.0 / (2.0 * std::numbers::pi * p.r_ohms * p.c_farads);
}

inline AnalogTransferFunction twin_t_transfer_function(
    const TwinTParams& p, TwinTVariant variant = TwinTVariant::canonical) {
  validate(p);
  const double w0 = 1.0 / (p.r_ohms * p.c_farads);
  constexpr double passive_q = 0.25;
  if (variant == TwinTVariant::canonical)
    return {{1.0, 0.0, w0 * w0}, {1.0, w0 / passive_q, w0 * w0}};
  return {{1.0, w0, 0.0}, {1.0, w0, w0 * w0}};
}

// ---------------------------------------------------------------------------
// Digital IIR designs as second-order section cascades
// ---------------------------------------------------------------------------

/// One second-order section; a0 is normalized to 1.
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct BiquadCascade {
  std::vector<BiquadSection> sections;
  double sample_rate_hz = 0.0;
};

struct NotchDesign {
  double notch_hz = 50.0;
  double quality_q = 30.0;
  double sample_rate_hz = 360.0;
};

struct BandpassDesign {
  double low_hz = 0.5;
  double high_hz = 40.0;
  int order = 3;
  double sample_rate_hz = 360.0;
};

/// Presets for the common powerline frequencies; 50 Hz is the default target.
inline NotchDesign notch_preset(double mains_hz, double sample_rate_hz = 360.0) {
  if (mains_hz != 40.0 && mains_hz != 50.0 && mains_hz != 60.0)
    throw std::invalid_argument("notch_preset: supported targets are 40, 50, and 60 Hz");
  return {mains_hz, 30.0, sample_rate_hz};
}

/// Single-section notch: unit-circle zeros at the notch angle, poles at the
/// same angle with radius set by Q, gain normalized for unit DC response.
inline BiquadCascade design_notch(const NotchDesign& d) {
  if (!(d.sample_rate_hz > 0.0))
    throw std::invalid_argument("design_notch: sample rate must be > 0");
  if (!(d.notch_hz > 0.0) || d.notch_hz >= d.sample_rate_hz / 2.0)
    throw std::invalid_argument("design_notch: notch frequency " +
                                std::to_string(d.notch_hz) +
                                " Hz must lie in (0, Nyquist)");
  if (!(d.quality_q > 0.0))
    throw std::invalid_argument("design_notch: Q must be > 0");

  const double omega = 2.0 * std::numbers::pi * d.notch_hz / d.sample_rate_hz;
  const double c = std::cos(omega);
  double r = 1.0 - omega / (2.0 * d.quality_q);
  r = std::clamp(r, 0.0, 0.999999);
  const double gain = (1.0 - 2.0 * r * c + r * r) / (2.0 - 2.0 * c);

  BiquadSection s;
  s.b0 = gain;
  s.b1 = -2.0 * c * gain;
  s.b2 = gain;
  s.a1 = -2.0 * r * c;
  s.a2 = r * r;
  return {{s}, d.sample_rate_hz};
}

namespace detail {

struct PoleZeroGain {
  std::vector<std::complex<double>> zeros;
  std::vector<std::complex<double>> poles;
  double gain = 1.0;
};

/// Unit-cutoff low-pass prototype: poles evenly spaced on the left unit
/// semicircle, no zeros.
inline PoleZeroGain butterworth_prototype(int order) {
  PoleZeroGain out;
  for (int k = 0; k < order / 2; ++k) {
    const double theta =
        std::numbers::pi * (0.5 + (2.0 * k + 1.0) / (2.0 * order));
    const auto p = std::polar(1.0, theta);
    out.poles.push_back(p);
    out.poles.push_back(std::conj(p));
  }
  if (order % 2 != 0) out.poles.emplace_back(-1.0, 0.0);
  return out;
}

/// s -> (s^2 + w_low*w_high) / (s * (w_high - w_low)). Each prototype pole
/// splits into two; one zero lands at s = 0 per prototype pole.
inline PoleZeroGain lowpass_to_bandpass(const PoleZeroGain& lp, double w_low,
                                        double w_high) {
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;
  PoleZeroGain bp;
  for (const auto& p : lp.poles) {
    const auto s = p * (bw / 2.0);
    const auto d = std::sqrt(s * s - w0_sq);
    bp.poles.push_back(s + d);
    bp.poles.push_back(s - d);
  }
  bp.zeros.assign(lp.poles.size(), {0.0, 0.0});
  bp.gain = lp.gain * std::pow(bw, static_cast<double>(lp.poles.size()));
  return bp;
}

/// z = (2fs + s) / (2fs - s); zeros at infinity map to z = -1.
inline PoleZeroGain bilinear(const PoleZeroGain& analog, double sample_rate_hz) {
  const double fs2 = 2.0 * sample_rate_hz;
  PoleZeroGain digital;
  std::complex<double> num = 1.0, den = 1.0;
  for (const auto& z : analog.zeros) {
    digital.zeros.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (const auto& p : analog.poles) {
    digital.poles.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  digital.gain = analog.gain * (num / den).real();
  while (digital.zeros.size() < digital.poles.size())
    digital.zeros.emplace_back(-1.0, 0.0);
  return digital;
}

}  // namespace detail

/// Butterworth band-pass designed in the analog domain (prewarped edges,
/// low-pass prototype, band-pass transform) and discretized bilinearly.
/// Yields `order` sections, each pairing one zero at z=1 with one at z=-1.
inline BiquadCascade design_butterworth_bandpass(const BandpassDesign& d) {
  if (!(d.sample_rate_hz > 0.0))
    throw std::invalid_argument("design_bandpass: sample rate must be > 0");
  if (d.order < 1 || d.order > 8)
    throw std::invalid_argument("design_bandpass: order must be in [1, 8]");
  const double nyquist = d.sample_rate_hz / 2.0;
  if (!(d.low_hz > 0.0) || !(d.low_hz < d.high_hz) || d.high_hz >= nyquist)
    throw std::invalid_argument(
        "design_bandpass: need 0 < low < high < Nyquist, got [" +
        std::to_string(d.low_hz) + ", " + std::to_string(d.high_hz) +
        "] Hz at fs " + std::to_string(d.sample_rate_hz));

  const double fs2 = 2.0 * d.sample_rate_hz;
  const double w_low = fs2 * std::tan(std::numbers::pi * d.low_hz / d.sample_rate_hz);
  const double w_high = fs2 * std::tan(std::numbers::pi * d.high_hz / d.sample_rate_hz);

  auto zpk = detail::bilinear(
      detail::lowpass_to_bandpass(detail::butterworth_prototype(d.order), w_low,
                                  w_high),
      d.sample_rate_hz);

  // Collect one representative per conjugate pole pair, plus real poles.
  std::vector<std::complex<double>> reps;
  std::vector<double> reals;
  const double tol = 1e-10;
  for (const auto& p : zpk.poles) {
    if (p.imag() > tol)
      reps.push_back(p);
    else if (std::abs(p.imag()) <= tol)
      reals.push_back(p.real());
  }
  if (reals.size() % 2 != 0 || reps.size() * 2 + reals.size() != zpk.poles.size())
    throw std::logic_error("design_bandpass: pole set not conjugate-closed");
  std::sort(reals.begin(), reals.end());

  struct PolePair {
    double a1, a2, radius;
  };
  std::vector<PolePair> pairs;
  for (const auto& p : reps)
    pairs.push_back({-2.0 * p.real(), std::norm(p), std::abs(p)});
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    pairs.push_back({-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1],
                     std::max(std::abs(reals[i]), std::abs(reals[i + 1]))});
  std::sort(pairs.begin(), pairs.end(),
            [](const PolePair& x, const PolePair& y) { return x.radius < y.radius; });

  const auto n_sections = pairs.size();
  const double g = std::pow(std::abs(zpk.gain), 1.0 / static_cast<double>(n_sections));
  BiquadCascade out;
  out.sample_rate_hz = d.sample_rate_hz;
  for (const auto& pp : pairs)
    out.sections.push_back({g, 0.0, -g, pp.a1, pp.a2});
  if (zpk.gain < 0.0) {
    out.sections.front().b0 *= -1.0;
    out.sections.front().b2 *= -1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cascade evaluation
// ---------------------------------------------------------------------------

/// Direct form II transposed, zero initial state, sections in order.
inline EcgSignal apply(const BiquadCascade& cascade, const EcgSignal& signal) {
  if (signal.samples.empty())
    throw std::invalid_argument("apply: signal has no samples");
  if (cascade.sections.empty())
    throw std::invalid_argument("apply: cascade has no sections");
  if (signal.sample_rate_hz != cascade.sample_rate_hz)
    throw std::invalid_argument(
        "apply: signal sampled at " + std::to_string(signal.sample_rate_hz) +
        " Hz but cascade designed for " + std::to_string(cascade.sample_rate_hz) +
        " Hz");
  EcgSignal out = signal;
  for (const auto& s : cascade.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& sample : out.samples) {
      const double x = sample;
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      sample = y;
    }
  }
  return out;
}

inline std::complex<double> frequency_response_at(const BiquadCascade& cascade,
                                                  double freq_hz) {
  if (cascade.sections.empty())
    throw std::invalid_argument("frequency_response: cascade has no sections");
  if (!(freq_hz >= 0.0) || freq_hz > cascade.sample_rate_hz / 2.0)
    throw std::out_of_range("frequency_response: " + std::to_string(freq_hz) +
                            " Hz outside [0, Nyquist]");
  const double omega =
      2.0 * std::numbers::pi * freq_hz / cascade.sample_rate_hz;
  const auto zi = std::polar(1.0, -omega);  // z^-1
  std::complex<double> h = 1.0;
  for (const auto& s : cascade.sections)
    h *= (s.b0 + (s.b1 + s.b2 * zi) * zi) / (1.0 + (s.a1 + s.a2 * zi) * zi);
  return h;
}

inline std::vector<std::complex<double>> frequency_response(
    const BiquadCascade& cascade, const std::vector<double>& freqs_hz) {
  std::vector<std::complex<double>> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) out.push_back(frequency_response_at(cascade, f));
  return out;
}

/// All cascade poles (roots of each section denominator).
inline std::vector<std::complex<double>> poles(const BiquadCascade& cascade) {
  std::vector<std::complex<double>> out;
  for (const auto& s : cascade.sections) {
    const double disc = s.a1 * s.a1 / 4.0 - s.a2;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      out.emplace_back(-s.a1 / 2.0 + root, 0.0);
      out.emplace_back(-s.a1 / 2.0 - root, 0.0);
    } else {
      const double im = std::sqrt(-disc);
      out.emplace_back(-s.a1 / 2.0, im);
      out.emplace_back(-s.a1 / 2.0, -im);
    }
  }
  return out;
}

/// Group delay in samples, from the numeric phase slope at freq_hz.
inline double group_delay_samples(const BiquadCascade& cascade, double freq_hz) {
  const double omega =
      2.0 * std::numbers::pi * freq_hz / cascade.sample_rate_hz;
  const double delta = 1e-4;
  const double f_lo = (omega - delta) * cascade.sample_rate_hz /
                      (2.0 * std::numbers::pi);
  const double f_hi = (omega + delta) * cascade.sample_rate_hz /
                      (2.0 * std::numbers::pi);
  const auto h_lo = frequency_response_at(cascade, std::max(0.0, f_lo));
  const auto h_hi = frequency_response_at(cascade, f_hi);
  return -std::arg(h_hi / h_lo) / (2.0 * delta);
}

}  // namespace ecgtk

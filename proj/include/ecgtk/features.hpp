#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecgtk/detect.hpp"

namespace ecgtk {

inline double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// Population (1/N) standard deviation.
inline double std_dev(const std::vector<double>& values) {
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

/// Standard deviation of successive R-R differences.
inline double sdsd(const std::vector<double>& rr_intervals_s) {
  if (rr_intervals_s.size() < 2)
    throw std::invalid_argument("sdsd: need at least 2 R-R intervals");
  std::vector<double> diffs(rr_intervals_s.size() - 1);
  for (std::size_t i = 0; i + 1 < rr_intervals_s.size(); ++i)
    diffs[i] = rr_intervals_s[i + 1] - rr_intervals_s[i];
  return std_dev(diffs);
}

/// Beats per minute from the mean R-R interval.
inline double heart_rate_bpm(const std::vector<double>& rr_intervals_s) {
  if (rr_intervals_s.empty())
    throw std::invalid_argument("heart_rate_bpm: no R-R intervals");
  return 60.0 / mean(rr_intervals_s);
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 != 0) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

struct BeatIntervals {
  std::optional<double> pr_s, qrs_s, st_s;
};

/// Peak-to-peak interval proxies: pr = (Q − P)/fs, qrs = (S − Q)/fs,
/// st = (T − S)/fs. An absent landmark makes the interval absent.
inline std::vector<BeatIntervals> beat_intervals(const BeatAnnotations& beats,
                                                 double sample_rate_hz) {
  if (beats.landmarks.size() != beats.r_indices.size())
    throw std::invalid_argument("beat_intervals: beats are not delineated");
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("beat_intervals: sample rate must be > 0");
  std::vector<BeatIntervals> out(beats.landmarks.size());
  for (std::size_t i = 0; i < beats.landmarks.size(); ++i) {
    const auto& m = beats.landmarks[i];
    auto span_s = [&](std::size_t from, std::size_t to) {
      return static_cast<double>(to - from) / sample_rate_hz;
    };
    if (m.p && m.q) out[i].pr_s = span_s(*m.p, *m.q);
    if (m.q && m.s) out[i].qrs_s = span_s(*m.q, *m.s);
    if (m.s && m.t) out[i].st_s = span_s(*m.s, *m.t);
  }
  return out;
}

struct NormalityRules {
  double hbr_min_bpm = 60.0, hbr_max_bpm = 90.0;
  double pr_min_s = 0.12, pr_max_s = 0.20;
  double qrs_min_s = 0.06, qrs_max_s = 0.10;
  double st_max_s = 0.40;
};

enum class Verdict { normal, abnormal };

inline const char* to_string(Verdict v) {
  return v == Verdict::normal ? "normal" : "abnormal";
}

struct Classification {
  Verdict verdict = Verdict::abnormal;
  std::vector<std::string> violations;
};

/// Rule check over the heart rate and the per-beat interval medians. Needs at
/// least one beat carrying all three intervals; otherwise the verdict is
/// abnormal with a single "insufficient-landmarks" violation.
inline Classification classify(double hbr_bpm,
                               const std::vector<BeatIntervals>& beats,
                               const NormalityRules& rules = {}) {
  if (beats.empty()) return {Verdict::abnormal, {"no-beats"}};
  const bool any_full = std::any_of(beats.begin(), beats.end(),
                                    [](const BeatIntervals& b) {
                                      return b.pr_s && b.qrs_s && b.st_s;
                                    });
  if (!any_full) return {Verdict::abnormal, {"insufficient-landmarks"}};

  std::vector<double> pr, qrs, st;
  for (const auto& b : beats) {
    if (b.pr_s) pr.push_back(*b.pr_s);
    if (b.qrs_s) qrs.push_back(*b.qrs_s);
    if (b.st_s) st.push_back(*b.st_s);
  }

  Classification out;
  if (!(hbr_bpm >= rules.hbr_min_bpm && hbr_bpm <= rules.hbr_max_bpm))
    out.violations.emplace_back("heart-rate");
  const double m_pr = median(pr);
  if (!(m_pr >= rules.pr_min_s && m_pr <= rules.pr_max_s))
    out.violations.emplace_back("pr-interval");
  const double m_qrs = median(qrs);
  if (!(m_qrs >= rules.qrs_min_s && m_qrs <= rules.qrs_max_s))
    out.violations.emplace_back("qrs-duration");
  if (!(median(st) <= rules.st_max_s))
    out.violations.emplace_back("st-interval");
  out.verdict = out.violations.empty() ? Verdict::normal : Verdict::abnormal;
  return out;
}

struct FeatureReport {
  std::string record_id;
  double mean_mv = 0.0;
  double std_mv = 0.0;
  std::optional<double> sdsd_s;
  std::optional<double> hbr_bpm;
  std::optional<double> median_pr_s, median_qrs_s, median_st_s;
  Verdict verdict = Verdict::abnormal;
  std::vector<std::string> violations;
};

}  // namespace ecgtk

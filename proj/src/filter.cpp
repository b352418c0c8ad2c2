#include <algorithm>
#include <cmath>
#include <numbers>

#include "gaitbench/error.hpp"
#include "gaitbench/kernels.hpp"
#include "gaitbench/preprocess.hpp"

namespace gaitbench {

double dual_pass_correction() {
  // Two passes of an order-2 section: |H|^2 = 1 / (1 + (w/wc)^4)^2 per pass pair.
  return std::pow(std::sqrt(2.0) - 1.0, 0.25);
}

Biquad butterworth_section(double cutoff, double sample_rate) {
  if (!(sample_rate > 0)) fail(ErrorKind::invalid_argument, "sample rate must be positive");
  if (!(cutoff > 0 && cutoff < sample_rate / 2))
    fail(ErrorKind::invalid_argument, "cut-off " + std::to_string(cutoff) +
                                          " Hz outside (0, Nyquist) for " +
                                          std::to_string(sample_rate) + " Hz");
  // Pre-warped analogue cut-off, widened so the cascade is -3 dB at `cutoff`.
  const double k = std::tan(std::numbers::pi * cutoff / sample_rate) / dual_pass_correction();
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad s;
  s.b0 = k2 * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k2 - 1.0) * norm;
  s.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return s;
}

namespace {

void run_section(const Biquad& s, std::vector<double>& x) {
  // Steady state for a constant input equal to x[0].
  const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double z1 = (gain - s.b0) * x.front();
  double z2 = (s.b2 - s.a2 * gain) * x.front();
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

}  // namespace

std::vector<double> butterworth_lowpass(std::span<const double> series, double cutoff,
                                        double sample_rate) {
  if (series.size() < 8)
    fail(ErrorKind::invalid_argument, "series too short to filter (" +
                                          std::to_string(series.size()) + " < 8 samples)");
  const Biquad s = butterworth_section(cutoff, sample_rate);
  const std::size_t n = series.size();
  const std::size_t pad = std::min<std::size_t>(3 * 3, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * series[0] - series[i]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * series[n - 1] - series[n - 1 - i]);

  run_section(s, ext);
  std::reverse(ext.begin(), ext.end());
  run_section(s, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<long>(pad), ext.begin() + static_cast<long>(pad + n)};
}

double lag_one_autocorrelation(std::span<const double> r) {
  if (r.size() < 2) return 0.0;
  double mean = 0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - mean;
    den += d * d;
    if (i + 1 < r.size()) num += d * (r[i + 1] - mean);
  }
  return den > 0 ? num / den : 0.0;
}

std::vector<double> cutoff_candidates(double sample_rate) {
  std::vector<double> out;
  for (int i = 0; i <= 96; ++i) {
    const double f = 2.0 + 0.5 * i;
    if (f < sample_rate / 2) out.push_back(f);
  }
  return out;
}

double optimal_cutoff(std::span<const double> series, double sample_rate) {
  if (series.size() < 32)
    fail(ErrorKind::invalid_argument, "series too short for cut-off selection (" +
                                          std::to_string(series.size()) + " < 32 samples)");
  const auto candidates = cutoff_candidates(sample_rate);
  if (candidates.empty()) fail(ErrorKind::invalid_argument, "sample rate too low for the 2-50 Hz sweep");
  const auto scores = kernels::cutoff_scores_parallel(series, sample_rate, candidates);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  return candidates[best];
}

}  // namespace gaitbench

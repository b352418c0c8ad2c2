#include "gaitbench/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "gaitbench/parallel.hpp"
#include "gaitbench/preprocess.hpp"

namespace gaitbench::kernels {

namespace {

double residual_score(std::span<const double> series, double sample_rate, double cutoff) {
  const auto filtered = butterworth_lowpass(series, cutoff, sample_rate);
  double scale = 1.0, peak = 0.0;
  std::vector<double> r(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    r[i] = series[i] - filtered[i];
    scale = std::max(scale, std::abs(series[i]));
    peak = std::max(peak, std::abs(r[i]));
  }
  // A residual at rounding level carries no signal; treat it as white.
  if (peak <= 1e-10 * scale) return 0.0;
  return std::abs(lag_one_autocorrelation(r));
}

FilteredSeries filter_one(std::span<const double> series, double sample_rate) {
  FilteredSeries out;
  out.cutoff = optimal_cutoff(series, sample_rate);
  out.values = butterworth_lowpass(series, out.cutoff, sample_rate);
  return out;
}

}  // namespace

std::vector<double> cutoff_scores_serial(std::span<const double> series, double sample_rate,
                                         std::span<const double> candidates) {
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scores[i] = residual_score(series, sample_rate, candidates[i]);
  return scores;
}

std::vector<double> cutoff_scores_parallel(std::span<const double> series, double sample_rate,
                                           std::span<const double> candidates) {
  std::vector<double> scores(candidates.size());
  const long n = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) scores[i] = residual_score(series, sample_rate, candidates[i]);
  return scores;
}

std::vector<FilteredSeries> auto_filter_serial(const std::vector<std::vector<double>>& series,
                                               double sample_rate) {
  std::vector<FilteredSeries> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = filter_one(series[i], sample_rate);
  return out;
}

std::vector<FilteredSeries> auto_filter_parallel(const std::vector<std::vector<double>>& series,
                                                 double sample_rate) {
  std::vector<FilteredSeries> out(series.size());
  omp_for_each(static_cast<long>(series.size()), 0,
               [&](long i) { out[i] = filter_one(series[i], sample_rate); });
  return out;
}

}  // namespace gaitbench::kernels

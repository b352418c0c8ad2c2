#pragma once

// Data-parallel kernels. Each has a plain serial reference and an OpenMP variant;
// both produce bit-identical results for any thread count, because every loop
// iteration owns its output slot and no floating-point reduction crosses threads.

#include <span>
#include <vector>

namespace gaitbench::kernels {

/// |lag-one autocorrelation| of the residual for each candidate cut-off.
std::vector<double> cutoff_scores_serial(std::span<const double> series, double sample_rate,
                                         std::span<const double> candidates);
std::vector<double> cutoff_scores_parallel(std::span<const double> series, double sample_rate,
                                           std::span<const double> candidates);

struct FilteredSeries {
  std::vector<double> values;
  double cutoff = 0;
};

/// Auto cut-off selection and filtering of many independent series.
std::vector<FilteredSeries> auto_filter_serial(const std::vector<std::vector<double>>& series,
                                               double sample_rate);
std::vector<FilteredSeries> auto_filter_parallel(const std::vector<std::vector<double>>& series,
                                                 double sample_rate);

}  // namespace gaitbench::kernels

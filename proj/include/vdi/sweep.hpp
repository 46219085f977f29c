#pragma once

#include <string>
#include <vector>

#include "vdi/run_log.hpp"

namespace vdi {

struct WeightPoint {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double w4 = 0.0;
  double d = 0.0;
};

/// Axis values for a full-factorial grid. An empty axis keeps the
/// scenario's own value.
struct WeightGrid {
  std::vector<double> w1, w2, w3, w4, d;

  /// Cartesian product in row-major order (d varies fastest).
  std::vector<WeightPoint> expand(const OptimizerConfig& base) const;
};

/// Parses "0,50,100" into a list of numbers; throws std::invalid_argument.
std::vector<double> parse_axis(const std::string& text);

Scenario with_weights(const Scenario& scenario, const WeightPoint& p);

/// Summary of a full run without keeping the log.
MetricsSummary run_summary(const Scenario& scenario);

/// One summary per grid point, OpenMP-parallel over points. Results do not
/// depend on the thread count.
std::vector<MetricsSummary> sweep(const Scenario& scenario, const std::vector<WeightPoint>& points);
/// Single-threaded reference of sweep.
std::vector<MetricsSummary> sweep_serial(const Scenario& scenario, const std::vector<WeightPoint>& points);

/// Delimited table, one row per grid point.
std::string sweep_table(const std::vector<WeightPoint>& points, const std::vector<MetricsSummary>& summaries,
                        char delimiter = ',');

}  // namespace vdi

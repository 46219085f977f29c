#pragma once

#include <cstddef>

#include "vdi/viewpoint_optimizer.hpp"

namespace vdi::kernels {

struct GridSpec {
  double linear_pitch = 0.01;   ///< [m]
  double angular_pitch = 0.05;  ///< [rad]
};

struct GridSearchResult {
  CameraDecision best;
  double objective = 0.0;
  /// Largest objective change between the best node and its axis neighbours.
  double cell_spread = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search of the decision box on a regular grid that includes both
/// bounds on every axis. OpenMP-parallel; ties resolve to the lowest grid index,
/// so the result is identical to grid_search_serial.
GridSearchResult grid_search(const OptimizerConfig& config, const Vec3& tool_pos,
                             const GridSpec& spec = {});

/// Single-threaded reference of grid_search.
GridSearchResult grid_search_serial(const OptimizerConfig& config, const Vec3& tool_pos,
                                    const GridSpec& spec = {});

}  // namespace vdi::kernels

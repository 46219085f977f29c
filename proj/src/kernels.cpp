#include "vdi/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace vdi::kernels {

namespace {

std::vector<double> axis_nodes(double lo, double hi, double pitch) {
  const auto n = static_cast<int>(std::ceil((hi - lo) / pitch - 1e-9)) + 1;
  std::vector<double> nodes(static_cast<std::size_t>(std::max(n, 1)));
  if (nodes.size() == 1) {
    nodes[0] = lo;
    return nodes;
  }
  const double step = (hi - lo) / static_cast<double>(nodes.size() - 1);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = lo + step * static_cast<double>(i);
  nodes.back() = hi;
  return nodes;
}

/// Grid layout with precomputed optical axes; flat index order is
/// (theta_x, theta_y, x, y, z) with z fastest.
struct Grid {
  std::array<std::vector<double>, 5> nodes;
  std::vector<Vec3> axes;  // one per (theta_x, theta_y) pair

  Grid(const OptimizerConfig& c, const GridSpec& spec) {
    for (int i = 0; i < 3; ++i) nodes[i] = axis_nodes(c.pos_lo[i], c.pos_hi[i], spec.linear_pitch);
    nodes[3] = axis_nodes(c.theta_x_lo, c.theta_x_hi, spec.angular_pitch);
    nodes[4] = axis_nodes(c.theta_y_lo, c.theta_y_hi, spec.angular_pitch);
    for (double tx : nodes[3]) {
      for (double ty : nodes[4]) axes.push_back(camera_rotation(c, tx, ty) * Vec3::UnitZ());
    }
  }

  std::size_t n(int axis) const { return nodes[static_cast<std::size_t>(axis)].size(); }
};

struct Best {
  double value = std::numeric_limits<double>::infinity();
  std::array<std::size_t, 5> index{};  // x, y, z, theta_x, theta_y
};

bool index_less(const std::array<std::size_t, 5>& a, const std::array<std::size_t, 5>& b) {
  // flat order: theta_x, theta_y, x, y, z
  const std::array<std::size_t, 5> ka{a[3], a[4], a[0], a[1], a[2]};
  const std::array<std::size_t, 5> kb{b[3], b[4], b[0], b[1], b[2]};
  return ka < kb;
}

void consider(Best& best, double value, const std::array<std::size_t, 5>& idx) {
  if (value < best.value || (value == best.value && index_less(idx, best.index))) {
    best.value = value;
    best.index = idx;
  }
}

double eval(const OptimizerConfig& c, const Grid& g, const Vec3& tool,
            const std::array<std::size_t, 5>& idx) {
  const Vec3 p(g.nodes[0][idx[0]], g.nodes[1][idx[1]], g.nodes[2][idx[2]]);
  const Vec3& axis = g.axes[idx[3] * g.n(4) + idx[4]];
  const Vec3 r = tool - p;
  const double depth = axis.dot(r);
  const double center = depth / r.norm() - 1.0;
  const double dy = g.nodes[4][idx[4]] - c.theta_y_neutral;
  const double value = c.w1 * (depth - c.d) * (depth - c.d) + c.w2 * center * center +
                       c.w3 * (p - c.p_n).squaredNorm() + c.w4 * dy * dy;
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

/// Scans every position for one (theta_x, theta_y, x) slab.
void scan_slab(const OptimizerConfig& c, const Grid& g, const Vec3& tool, std::size_t ix_angle,
               std::size_t ix, Best& best) {
  const std::size_t itx = ix_angle / g.n(4), ity = ix_angle % g.n(4);
  for (std::size_t iy = 0; iy < g.n(1); ++iy) {
    for (std::size_t iz = 0; iz < g.n(2); ++iz) {
      const std::array<std::size_t, 5> idx{ix, iy, iz, itx, ity};
      consider(best, eval(c, g, tool, idx), idx);
    }
  }
}

GridSearchResult finish(const OptimizerConfig& c, const Grid& g, const Vec3& tool, const Best& best) {
  GridSearchResult out;
  out.objective = best.value;
  out.best = CameraDecision{Vec3(g.nodes[0][best.index[0]], g.nodes[1][best.index[1]],
                                 g.nodes[2][best.index[2]]),
                            g.nodes[3][best.index[3]], g.nodes[4][best.index[4]]};
  out.evaluated = g.n(0) * g.n(1) * g.n(2) * g.n(3) * g.n(4);
  for (int axis = 0; axis < 5; ++axis) {
    for (int dir : {-1, 1}) {
      auto idx = best.index;
      const auto k = static_cast<long>(idx[static_cast<std::size_t>(axis)]) + dir;
      if (k < 0 || k >= static_cast<long>(g.n(axis))) continue;
      idx[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(k);
      out.cell_spread = std::max(out.cell_spread, std::abs(eval(c, g, tool, idx) - best.value));
    }
  }
  return out;
}

}  // namespace

GridSearchResult grid_search(const OptimizerConfig& config, const Vec3& tool_pos,
                             const GridSpec& spec) {
  const Grid grid(config, spec);
  const std::size_t n_angle = grid.axes.size();
  const std::size_t n_x = grid.n(0);
  const auto n_slabs = static_cast<long>(n_angle * n_x);

  std::vector<Best> slab_best(static_cast<std::size_t>(n_slabs));
#pragma omp parallel for schedule(static)
  for (long s = 0; s < n_slabs; ++s) {
    const auto slab = static_cast<std::size_t>(s);
    scan_slab(config, grid, tool_pos, slab / n_x, slab % n_x, slab_best[slab]);
  }

  Best best;
  for (const Best& b : slab_best) consider(best, b.value, b.index);
  return finish(config, grid, tool_pos, best);
}

GridSearchResult grid_search_serial(const OptimizerConfig& config, const Vec3& tool_pos,
                                    const GridSpec& spec) {
  const Grid grid(config, spec);
  Best best;
  for (std::size_t a = 0; a < grid.axes.size(); ++a) {
    for (std::size_t ix = 0; ix < grid.n(0); ++ix) scan_slab(config, grid, tool_pos, a, ix, best);
  }
  return finish(config, grid, tool_pos, best);
}

}  // namespace vdi::kernels

#include <doctest.h>

#include <cstring>

#include "test_support.hpp"
#include "vdi/kernels.hpp"
#include "vdi/viewpoint_optimizer.hpp"

using namespace vdi;
using vdi::testing::random_feasible;
using vdi::testing::random_vec3;

namespace {

Vec3 random_tool(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(-1.2, -0.5), uz(-0.2, 0.6);
  return Vec3(ux(rng), uy(rng), uz(rng));
}

Pose tool_at(const Vec3& p) { return Pose::from_translation(p); }

Vec5 central_difference(const OptimizerConfig& c, const CameraDecision& d, const Pose& tool, double h) {
  Vec5 g;
  const Vec5 x = d.as_vector();
  for (int i = 0; i < 5; ++i) {
    Vec5 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (total_objective(c, CameraDecision::from_vector(xp), tool) -
            total_objective(c, CameraDecision::from_vector(xm), tool)) /
           (2.0 * h);
  }
  return g;
}

/// Tool placed exactly d along the optical axis of a camera sitting at p_n.
Vec3 optimum_tool(const OptimizerConfig& c, double theta_x) {
  return c.p_n + c.d * (camera_rotation(c, theta_x, c.theta_y_neutral) * Vec3::UnitZ());
}

int active_bounds(const OptimizerConfig& c, const CameraDecision& d, double tol = 1e-9) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    n += std::abs(d.position[i] - c.pos_lo[i]) < tol || std::abs(d.position[i] - c.pos_hi[i]) < tol;
  }
  n += std::abs(d.theta_x - c.theta_x_lo) < tol || std::abs(d.theta_x - c.theta_x_hi) < tol;
  n += std::abs(d.theta_y - c.theta_y_lo) < tol || std::abs(d.theta_y - c.theta_y_hi) < tol;
  return n;
}

}  // namespace

TEST_CASE("default config values") {
  const OptimizerConfig c;
  CHECK(c.w1 == 100.0);
  CHECK(c.w2 == 100.0);
  CHECK(c.w3 == 2.0);
  CHECK(c.w4 == 0.5);
  CHECK(c.d == 0.3);
  CHECK(c.p_n == Vec3(0.0, -0.4, 0.35));
  CHECK(c.pos_lo == Vec3(-0.3, -0.45, -0.2));
  CHECK(c.pos_hi == Vec3(0.3, -0.25, 0.55));
  CHECK(c.theta_x_lo == -0.45);
  CHECK(c.theta_x_hi == 0.0);
  CHECK(c.theta_y_lo == -0.8);
  CHECK(c.theta_y_hi == 0.8);
  CHECK(c.v_lin_max == 0.01);
  CHECK(c.v_ang_max == 0.1);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation rejects bad fields") {
  OptimizerConfig c;
  c.d = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("optimizer.d"), std::invalid_argument);
  c = OptimizerConfig{};
  c.pos_lo.x() = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = OptimizerConfig{};
  c.w2 = -1.0;
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("w2"));
}

TEST_CASE("level camera frame is a proper rotation looking along -y") {
  const Mat3 m = level_camera_frame().matrix();
  CHECK(m.determinant() == doctest::Approx(1.0));
  CHECK((m.col(2) - Vec3(0, -1, 0)).norm() < 1e-12);
  // negative theta_x tilts the view downward
  const OptimizerConfig c;
  CHECK((camera_rotation(c, -0.3, 0.0) * Vec3::UnitZ()).z() < 0.0);
}

TEST_CASE("objective_distance examples") {
  const Pose cam = Pose::identity();
  CHECK(objective_distance(cam, Vec3(0, 0, 0.3), 0.3) == doctest::Approx(0.0));
  CHECK(objective_distance(cam, Vec3(0, 0, 0.5), 0.3) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("objective_distance measures depth along the camera axis") {
  // lateral placement does not matter once the depth equals d
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const Pose cam{random_vec3(rng, -1, 1), vdi::testing::random_rotation(rng)};
    const Vec3 offset = random_vec3(rng, -1, 1);
    const Vec3 lateral = cam.rotation * Vec3(offset.x(), offset.y(), 0.0);
    const Vec3 tool = cam.position + cam.rotation * Vec3(0, 0, 0.3) + lateral;
    CHECK(objective_distance(cam, tool, 0.3) < 1e-20);
  }
}

TEST_CASE("objective_centering examples") {
  const Pose cam = Pose::identity();
  CHECK(objective_centering(cam, Vec3(0, 0, 0.7)) == doctest::Approx(0.0));
  CHECK(objective_centering(cam, Vec3(0.3, 0, 0.4)) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(objective_centering(cam, Vec3(0, 0, -0.4)) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::isnan(objective_centering(cam, Vec3::Zero())));
}

TEST_CASE("objective_neutral_position examples") {
  const OptimizerConfig c;
  CHECK(objective_neutral_position(c.p_n, c.p_n) == 0.0);
  CHECK(objective_neutral_position(Vec3(0.1, -0.4, 0.35), c.p_n) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("objective_neutral_rotation examples") {
  const OptimizerConfig c;
  CHECK(objective_neutral_rotation(Pose{c.p_n, c.neutral_rotation()}, c) == doctest::Approx(0.0));
  const Pose off = camera_pose(c, CameraDecision{c.p_n, c.theta_x_neutral, 0.2});
  CHECK(objective_neutral_rotation(off, c) == doctest::Approx(0.04).epsilon(1e-12));
  // theta_x deviation is not penalized
  const Pose tilted = camera_pose(c, CameraDecision{c.p_n, -0.3, 0.2});
  CHECK(objective_neutral_rotation(tilted, c) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("total_objective examples") {
  const OptimizerConfig c;
  const CameraDecision neutral = CameraDecision::neutral(c);
  CHECK(total_objective(c, neutral, tool_at(optimum_tool(c, 0.0))) == doctest::Approx(0.0).epsilon(1e-15));

  std::mt19937_64 rng(7);
  OptimizerConfig doubled = c;
  doubled.w1 *= 2;
  doubled.w2 *= 2;
  doubled.w3 *= 2;
  doubled.w4 *= 2;
  for (int i = 0; i < 50; ++i) {
    const CameraDecision d = random_feasible(rng, c);
    const Pose tool = tool_at(random_tool(rng));
    CHECK(total_objective(doubled, d, tool) == doctest::Approx(2.0 * total_objective(c, d, tool)).epsilon(1e-14));

    // compositional oracle through the pose-based term functions
    const Pose cam = camera_pose(c, d);
    const double summed = c.w1 * objective_distance(cam, tool.position, c.d) +
                          c.w2 * objective_centering(cam, tool.position) +
                          c.w3 * objective_neutral_position(cam.position, c.p_n) +
                          c.w4 * objective_neutral_rotation(cam, c);
    CHECK(std::abs(total_objective(c, d, tool) - summed) < 1e-12 * std::max(1.0, summed));
  }
}

TEST_CASE("gradient examples") {
  const OptimizerConfig c;
  const CameraDecision neutral = CameraDecision::neutral(c);
  CHECK(gradient(c, neutral, tool_at(optimum_tool(c, 0.0))).norm() < 1e-6);
  const CameraDecision tilted{c.p_n, -0.2, 0.0};
  CHECK(gradient(c, tilted, tool_at(optimum_tool(c, -0.2))).norm() < 1e-6);

  OptimizerConfig only_phi3 = c;
  only_phi3.w1 = only_phi3.w2 = only_phi3.w4 = 0.0;
  only_phi3.w3 = 1.0;
  const CameraDecision shifted{c.p_n + Vec3(0.1, 0, 0), 0.0, 0.0};
  const Vec5 g = gradient(only_phi3, shifted, tool_at(Vec3(0, -0.8, 0.2)));
  CHECK(g[0] == doctest::Approx(0.2));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[2] == doctest::Approx(0.0));
  // unweighted term derivative 2 * (p_r - p_n) = (0.2, 0, 0); doubled weight gives 0.4
  only_phi3.w3 = 2.0;
  CHECK(gradient(only_phi3, shifted, tool_at(Vec3(0, -0.8, 0.2)))[0] == doctest::Approx(0.4));
}

TEST_CASE("gradient matches central finite differences") {
  const OptimizerConfig c;
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const CameraDecision d = random_feasible(rng, c);
    const Pose tool = tool_at(random_tool(rng));
    const Vec5 analytic = gradient(c, d, tool);
    const Vec5 numeric = central_difference(c, d, tool, 1e-6);
    const double rel = (analytic - numeric).norm() / std::max(1.0, numeric.norm());
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("solve reaches interior optimum") {
  const OptimizerConfig c;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> tx(-0.4, -0.05);
  for (int i = 0; i < 5; ++i) {
    const Vec3 tool = optimum_tool(c, tx(rng)) + random_vec3(rng, -0.004, 0.004);
    const SolveResult r = solve(c, CameraDecision::neutral(c), tool_at(tool));
    REQUIRE_FALSE(r.rejected);
    const ObjectiveTerms t = evaluate_terms(c, r.decision, tool);
    CHECK(t.phi1 < 1e-6);
    CHECK(t.phi2 < 1e-6);
    CHECK(active_bounds(c, r.decision, 1e-6) == 0);

    // coarse grid oracle also puts the optimum strictly inside the box
    const auto grid = kernels::grid_search(c, tool);
    CHECK(active_bounds(c, grid.best, 1e-9) == 0);
    CHECK(r.objective <= grid.objective + 1e-12);
  }
}

TEST_CASE("solve pushes to the boundary for unreachable tools") {
  const OptimizerConfig c;
  for (const Vec3 tool : {Vec3(1.5, -0.8, 0.2), Vec3(-1.2, -0.6, 0.9), Vec3(0.0, -0.5, -1.2)}) {
    const SolveResult r = solve(c, CameraDecision::neutral(c), tool_at(tool));
    CHECK(active_bounds(c, r.decision) >= 1);
    const auto grid = kernels::grid_search(c, tool);
    CHECK(active_bounds(c, grid.best) >= 1);
    CHECK(r.objective <= grid.objective + grid.cell_spread);
  }
}

TEST_CASE("solve keeps an optimal decision fixed") {
  const OptimizerConfig c;
  const CameraDecision start{c.p_n, -0.25, 0.0};
  const SolveResult r = solve(c, start, tool_at(optimum_tool(c, -0.25)));
  CHECK((r.decision.as_vector() - start.as_vector()).norm() < 1e-6);
}

TEST_CASE("solve refuses a corrupt tool estimate") {
  const OptimizerConfig c;
  const CameraDecision start = CameraDecision::neutral(c);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const SolveResult r = solve(c, start, tool_at(Vec3(nan, 0, 0)));
  CHECK(r.rejected);
  CHECK(r.decision.as_vector() == start.as_vector());
  const SolveResult on_camera = solve(c, start, tool_at(c.p_n));
  CHECK(on_camera.rejected);
}

TEST_CASE("solve is feasible, monotone and deterministic") {
  const OptimizerConfig c;
  std::mt19937_64 rng(23);
  for (int i = 0; i < 60; ++i) {
    const CameraDecision start = random_feasible(rng, c);
    const Pose tool = tool_at(random_vec3(rng, -1.5, 1.5));
    const SolveResult a = solve(c, start, tool);
    if (a.rejected) continue;
    CHECK(within_bounds(c, a.decision, 1e-9));
    CHECK(a.objective <= total_objective(c, start, tool) + 1e-12);
    const SolveResult b = solve(c, start, tool);
    const Vec5 va = a.decision.as_vector(), vb = b.decision.as_vector();
    CHECK(std::memcmp(va.data(), vb.data(), sizeof(double) * 5) == 0);
  }
}

TEST_CASE("limit_velocity examples") {
  OptimizerConfig c;
  const CameraDecision prev{c.p_n, -0.2, 0.0};

  CameraDecision next = prev;
  next.position += Vec3(0.003, 0.0, 0.004);  // 5 mm
  const CameraDecision out = limit_velocity(prev, next, 0.1, c);
  const Vec3 step = out.position - prev.position;
  CHECK(step.norm() == doctest::Approx(0.001).epsilon(1e-12));
  CHECK((step.normalized() - Vec3(0.6, 0.0, 0.8)).norm() < 1e-12);

  CameraDecision small = prev;
  small.position.x() += 0.0005;
  small.theta_y += 0.005;
  const CameraDecision same = limit_velocity(prev, small, 0.1, c);
  CHECK(same.as_vector() == small.as_vector());

  CameraDecision turn = prev;
  turn.theta_y += 0.05;
  const CameraDecision clamped = limit_velocity(prev, turn, 0.1, c);
  CHECK(clamped.theta_y - prev.theta_y == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(clamped.theta_x == prev.theta_x);
}

TEST_CASE("limit_velocity stays feasible") {
  const OptimizerConfig c;
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    const CameraDecision a = random_feasible(rng, c), b = random_feasible(rng, c);
    const CameraDecision out = limit_velocity(a, b, 0.02, c);
    CHECK(within_bounds(c, out, 1e-9));
    CHECK((out.position - a.position).norm() <= c.v_lin_max * 0.02 * (1 + 1e-12));
    const double dth = std::hypot(out.theta_x - a.theta_x, out.theta_y - a.theta_y);
    CHECK(dth <= c.v_ang_max * 0.02 * (1 + 1e-12));
  }
}

TEST_CASE("parallel grid search agrees with the serial reference") {
  const OptimizerConfig c;
  const kernels::GridSpec coarse{0.03, 0.1};
  std::mt19937_64 rng(31);
  for (int i = 0; i < 4; ++i) {
    const Vec3 tool = random_tool(rng);
    const auto par = kernels::grid_search(c, tool, coarse);
    const auto ser = kernels::grid_search_serial(c, tool, coarse);
    CHECK(par.objective == ser.objective);
    CHECK(par.best.as_vector() == ser.best.as_vector());
    CHECK(par.cell_spread == ser.cell_spread);
    CHECK(par.evaluated == ser.evaluated);
  }
}

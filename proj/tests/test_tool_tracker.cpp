#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <limits>

#include "test_support.hpp"
#include "vdi/tool_tracker.hpp"

using namespace vdi;
using vdi::testing::random_pose;
using vdi::testing::random_rotation;
using vdi::testing::random_vec3;

namespace {

MarkerLayout single_marker_layout(const Pose& marker_in_tool = Pose::identity()) {
  return MarkerLayout{{MarkerLayoutEntry{7, marker_in_tool, 0.03}}};
}

double min_eigenvalue(const Mat6& m) {
  return Eigen::SelfAdjointEigenSolver<Mat6>(m).eigenvalues().minCoeff();
}

ToolEstimate prior_at(const Pose& mean, double pos_var, double rot_var) {
  ToolEstimate e;
  e.tool_in_world = mean;
  e.covariance.setZero();
  e.covariance.diagonal() << pos_var, pos_var, pos_var, rot_var, rot_var, rot_var;
  return e;
}

Pose perturb(std::mt19937_64& rng, const Pose& p, double pos_sigma, double rot_sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 dp(n(rng), n(rng), n(rng));
  const Vec3 dr(n(rng), n(rng), n(rng));
  return Pose{p.position + pos_sigma * dp, Rotation::exp(rot_sigma * dr) * p.rotation};
}

}  // namespace

TEST_CASE("marker layout validation") {
  MarkerLayout empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  MarkerLayout dup{{MarkerLayoutEntry{1, Pose::identity(), 0.03}, MarkerLayoutEntry{1, Pose::identity(), 0.03}}};
  CHECK_THROWS_WITH(dup.validate(), doctest::Contains("duplicate"));
  CHECK_NOTHROW(single_marker_layout().validate());
}

TEST_CASE("marker_to_tool_pose examples") {
  std::mt19937_64 rng(1);
  const Pose observed = random_pose(rng);
  const MarkerObservation obs{7, observed, 0.0};
  const Pose tool = marker_to_tool_pose(obs, single_marker_layout(), Pose::identity());
  CHECK((tool.position - observed.position).norm() < 1e-12);
  CHECK(rotation_angle(tool.rotation.inverse() * observed.rotation) < 1e-12);

  const MarkerLayout offset = single_marker_layout(Pose::from_translation(Vec3(0.05, 0, 0)));
  const Pose t2 = marker_to_tool_pose(MarkerObservation{7, Pose::identity(), 0.0}, offset, Pose::identity());
  CHECK((t2.position - Vec3(-0.05, 0, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(marker_to_tool_pose(MarkerObservation{99, Pose::identity(), 0.0}, offset, Pose::identity()),
                  UnknownMarkerError);
}

TEST_CASE("marker_to_tool_pose agrees across markers of one rigid tool") {
  std::mt19937_64 rng(2);
  const MarkerLayout layout{{MarkerLayoutEntry{1, random_pose(rng), 0.03}, MarkerLayoutEntry{2, random_pose(rng), 0.03}}};
  const Pose camera = random_pose(rng);
  const Pose tool = random_pose(rng);
  const Pose cam_inv = invert(camera);
  const MarkerObservation a{1, cam_inv * tool * layout.entries[0].marker_in_tool, 0.0};
  const MarkerObservation b{2, cam_inv * tool * layout.entries[1].marker_in_tool, 0.0};
  const Pose ta = marker_to_tool_pose(a, layout, camera), tb = marker_to_tool_pose(b, layout, camera);
  CHECK((ta.position - tb.position).norm() < 1e-12);
  CHECK(rotation_angle(ta.rotation.inverse() * tb.rotation) < 1e-12);
  CHECK((ta.position - tool.position).norm() < 1e-12);
}

TEST_CASE("ekf_predict examples") {
  const ToolEstimate s = prior_at(Pose::identity(), 0.01, 0.1);
  const Vec6 q = Vec6::Constant(1e-4);

  const ToolEstimate same = ekf_predict(s, 0.0, q);
  CHECK(same.covariance == s.covariance);
  CHECK(same.timestamp == s.timestamp);

  const ToolEstimate grown = ekf_predict(s, 1.0, q);
  CHECK(grown.covariance.trace() > s.covariance.trace());
  for (int i = 0; i < 6; ++i) CHECK(grown.covariance(i, i) - s.covariance(i, i) == doctest::Approx(1e-4));
  CHECK((grown.tool_in_world.position - s.tool_in_world.position).norm() == 0.0);
  CHECK(grown.timestamp == doctest::Approx(1.0));
}

TEST_CASE("ekf_update with a dominant measurement snaps to it") {
  std::mt19937_64 rng(3);
  const Pose meas = random_pose(rng);
  const ToolEstimate prior = prior_at(perturb(rng, meas, 0.3, 0.5), 1e6, 1e6);
  const UpdateResult r = ekf_update(prior, meas, Vec6::Constant(1e-6));
  REQUIRE_FALSE(r.rejected);
  CHECK((r.state.tool_in_world.position - meas.position).norm() < 1e-3);
  CHECK(rotation_angle(r.state.tool_in_world.rotation.inverse() * meas.rotation) < 1e-3);
}

TEST_CASE("ekf_update with zero innovation shrinks covariance only") {
  std::mt19937_64 rng(4);
  const ToolEstimate prior = prior_at(random_pose(rng), 0.01, 0.1);
  const UpdateResult r = ekf_update(prior, prior.tool_in_world, TrackerConfig{}.measurement_noise);
  CHECK((r.state.tool_in_world.position - prior.tool_in_world.position).norm() < 1e-15);
  CHECK(rotation_angle(r.state.tool_in_world.rotation.inverse() * prior.tool_in_world.rotation) < 1e-12);
  CHECK(r.state.covariance.trace() < prior.covariance.trace());
}

TEST_CASE("ekf_update rejects non-finite measurements") {
  const ToolEstimate prior = prior_at(Pose::identity(), 0.01, 0.1);
  Pose bad = Pose::identity();
  bad.position.x() = std::numeric_limits<double>::infinity();
  const UpdateResult r = ekf_update(prior, bad, TrackerConfig{}.measurement_noise);
  CHECK(r.rejected);
  CHECK(r.state.covariance == prior.covariance);
  CHECK(r.state.tool_in_world.position == prior.tool_in_world.position);
}

TEST_CASE("repeated exact measurements converge from a far prior") {
  std::mt19937_64 rng(5);
  const TrackerConfig cfg;
  for (int run = 0; run < 20; ++run) {
    const Pose truth = random_pose(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vec3 dp = random_vec3(rng, -1.0, 1.0).normalized() * 0.5 * std::abs(u(rng));
    const Vec3 dr = random_vec3(rng, -1.0, 1.0).normalized() * std::abs(u(rng));
    ToolEstimate s = prior_at(Pose{truth.position + dp, Rotation::exp(dr) * truth.rotation}, 0.01, 0.1);
    for (int k = 0; k < 20; ++k) {
      s = ekf_predict(s, 0.2, cfg.process_noise);
      s = ekf_update(s, truth, cfg.measurement_noise).state;
    }
    CHECK((s.tool_in_world.position - truth.position).norm() < 1e-3);
    CHECK(rotation_angle(s.tool_in_world.rotation.inverse() * truth.rotation) < 0.01);
  }
}

TEST_CASE("covariance stays PSD over randomized predict/update steps") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ToolEstimate s = prior_at(Pose::identity(), 0.01, 0.1);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10000; ++i) {
    if (u(rng) < 0.5) {
      const Vec6 q = Vec6::NullaryExpr([&] { return u(rng) < 0.2 ? 0.0 : 1e-6 + u(rng) * 1e-2; });
      s = ekf_predict(s, u(rng) * 0.3, q);
    } else {
      const Vec6 r = Vec6::NullaryExpr([&] { return u(rng) < 0.2 ? 0.0 : 1e-8 + u(rng) * 1e-3; });
      s = ekf_update(s, perturb(rng, s.tool_in_world, 0.01, 0.05), r).state;
    }
    worst = std::min(worst, min_eigenvalue(s.covariance));
    CHECK((s.covariance - s.covariance.transpose()).norm() == 0.0);
  }
  CHECK(worst >= -1e-10);
}

TEST_CASE("batch update does not depend on measurement order") {
  std::mt19937_64 rng(7);
  const TrackerConfig cfg;
  for (int i = 0; i < 100; ++i) {
    const Pose truth = random_pose(rng);
    const ToolEstimate prior = prior_at(perturb(rng, truth, 0.05, 0.2), 0.01, 0.1);
    const std::vector<Pose> ab{perturb(rng, truth, 0.005, 0.02), perturb(rng, truth, 0.005, 0.02)};
    const std::vector<Pose> ba{ab[1], ab[0]};
    const ToolEstimate x = ekf_update_batch(prior, ab, cfg.measurement_noise).state;
    const ToolEstimate y = ekf_update_batch(prior, ba, cfg.measurement_noise).state;
    CHECK((x.tool_in_world.position - y.tool_in_world.position).norm() < 1e-6);
    CHECK(rotation_angle(x.tool_in_world.rotation.inverse() * y.tool_in_world.rotation) < 1e-6);
  }
}

TEST_CASE("ingest examples") {
  const MarkerLayout layout{{MarkerLayoutEntry{1, Pose::from_translation(Vec3(0.02, 0, 0)), 0.03},
                             MarkerLayoutEntry{2, Pose::from_translation(Vec3(-0.02, 0, 0)), 0.03}}};
  TrackerState st(TrackerConfig{}, layout);
  const Pose camera = Pose::identity();
  const Pose tool = Pose::from_translation(Vec3(0, 0, 0.3));

  SUBCASE("empty observation list leaves the tracker untouched") {
    const TrackerState next = ingest(st, {}, camera, 0.1);
    CHECK_FALSE(next.filter.has_value());
    CHECK_FALSE(next.last_seen.has_value());
    CHECK_FALSE(next.published_now);
  }

  SUBCASE("two sightings in one window are fused into one publication") {
    std::vector<MarkerObservation> first{{1, tool * layout.entries[0].marker_in_tool, 0.0}};
    st = ingest(st, first, camera, 0.0);
    CHECK(st.published_now);
    int publications = 0;
    std::vector<MarkerObservation> a{{1, tool * layout.entries[0].marker_in_tool, 0.06}};
    std::vector<MarkerObservation> b{{2, tool * layout.entries[1].marker_in_tool, 0.12}};
    st = ingest(st, a, camera, 0.06);
    publications += st.published_now;
    st = ingest(st, b, camera, 0.12);
    publications += st.published_now;
    CHECK(st.fused_since_publish == 2);
    st = ingest(st, {}, camera, 0.2);
    publications += st.published_now;
    CHECK(publications == 1);
    CHECK(st.fused_total == 3);
    CHECK(st.published->timestamp == doctest::Approx(0.2));
    CHECK(*st.last_seen == doctest::Approx(0.12));
  }

  SUBCASE("unknown markers are skipped") {
    std::vector<MarkerObservation> obs{{42, Pose::identity(), 0.0}};
    st = ingest(st, obs, camera, 0.0);
    CHECK(st.rejected_total == 1);
    CHECK_FALSE(st.filter.has_value());
  }
}

TEST_CASE("ingest is insensitive to observation order at one timestamp") {
  std::mt19937_64 rng(8);
  const MarkerLayout layout{{MarkerLayoutEntry{1, random_pose(rng), 0.03}, MarkerLayoutEntry{2, random_pose(rng), 0.03}}};
  const Pose tool = random_pose(rng);
  for (int i = 0; i < 20; ++i) {
    const MarkerObservation a{1, perturb(rng, tool * layout.entries[0].marker_in_tool, 0.005, 0.02), 0.0};
    const MarkerObservation b{2, perturb(rng, tool * layout.entries[1].marker_in_tool, 0.005, 0.02), 0.0};
    const std::vector<MarkerObservation> ab{a, b}, ba{b, a};
    const TrackerState x = ingest(TrackerState(TrackerConfig{}, layout), ab, Pose::identity(), 0.0);
    const TrackerState y = ingest(TrackerState(TrackerConfig{}, layout), ba, Pose::identity(), 0.0);
    CHECK((x.filter->tool_in_world.position - y.filter->tool_in_world.position).norm() < 1e-6);
  }
}

TEST_CASE("publication spacing follows the throttle period") {
  const MarkerLayout layout = single_marker_layout();
  TrackerState st(TrackerConfig{}, layout);
  const double tick = 0.02;
  std::vector<double> stamps;
  for (long k = 0; k <= 3000; ++k) {
    const double now = static_cast<double>(k) * tick;
    std::vector<MarkerObservation> obs{{7, Pose::from_translation(Vec3(0, 0, 0.3)), now}};
    st = ingest(st, obs, Pose::identity(), now);
    if (st.published_now) stamps.push_back(now);
  }
  REQUIRE(stamps.size() > 2);
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    CHECK(std::abs(stamps[i] - stamps[i - 1] - 0.2) <= tick + 1e-9);
  }
}

TEST_CASE("tracking_status times out") {
  TrackerState st(TrackerConfig{}, single_marker_layout());
  CHECK(tracking_status(st, 0.0) == TrackingStatus::Lost);
  std::vector<MarkerObservation> obs{{7, Pose::from_translation(Vec3(0, 0, 0.3)), 1.0}};
  st = ingest(st, obs, Pose::identity(), 1.0);
  CHECK(tracking_status(st, 1.0) == TrackingStatus::Tracking);
  CHECK(tracking_status(st, 1.6) == TrackingStatus::Tracking);
  CHECK(tracking_status(st, 1.6 + 1e-3) == TrackingStatus::Lost);
}

TEST_CASE("NEES of a matched filter is chi-square distributed") {
  // reduced version of the acceptance Monte-Carlo
  std::mt19937_64 rng(9);
  const TrackerConfig cfg;
  int inside = 0;
  const int runs = 60;
  for (int run = 0; run < runs; ++run) {
    Pose truth = random_pose(rng);
    ToolEstimate s = prior_at(Pose::identity(), 0.0, 0.0);
    s.covariance = cfg.initial_variance.asDiagonal();
    s.tool_in_world = perturb(rng, truth, 0.1, std::sqrt(0.1));
    for (int k = 0; k < 100; ++k) {
      const Vec6 q = cfg.process_noise * 0.2;
      truth = perturb(rng, truth, std::sqrt(q[0]), std::sqrt(q[3]));
      s = ekf_predict(s, 0.2, cfg.process_noise);
      s = ekf_update(s, perturb(rng, truth, 0.005, 0.02), cfg.measurement_noise).state;
    }
    const double value = nees(s, truth);
    inside += (value >= 1.2373 && value <= 14.4494);
  }
  CHECK(inside >= 0.9 * runs);
}

// Copyright 2026 The selfcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "selfcal/window.hpp"

#include <gtest/gtest.h>

#include "selfcal/experiment.hpp"
#include "selfcal/sim.hpp"

namespace selfcal {
namespace {

TEST(TriadTest, IdentityAndYaw) {
  const WorldConfig world;
  const Vec3 m = world.magnetic_field.normalized();
  EXPECT_LT(angular_offset_deg(triad_init(-world.gravity, m, world), Quat::Identity()), 1e-9);

  // Readings of an IMU turned by q: y = R^T v.
  const Quat q = rot_z(-kPi / 2);
  const Mat3 rt = quat_to_rotmat(q).transpose();
  const Quat est = triad_init(rt * -world.gravity, rt * m, world);
  EXPECT_LT(angular_offset_deg(est, q), 1e-7);
}

TEST(TriadTest, RandomAttitudesRecovered) {
  const WorldConfig world;
  for (int k = 0; k < 50; ++k) {
    const Quat q = rotvec_exp(Vec3(0.1 * k, -0.05 * k, 0.03 * k));
    const Mat3 rt = quat_to_rotmat(q).transpose();
    const Quat est = triad_init(rt * -world.gravity, rt * world.magnetic_field, world);
    EXPECT_LT(angular_offset_deg(est, q), 1e-7);
  }
}

TEST(TriadTest, DegenerateInputsThrow) {
  const WorldConfig world;
  EXPECT_THROW(triad_init(Vec3(0, 0, 1), Vec3(0, 0, 2), world), std::invalid_argument);
  EXPECT_THROW(triad_init(Vec3::Zero(), Vec3(1, 0, 0), world), std::invalid_argument);
}

TEST(TriadTest, GravityYaw) {
  const WorldConfig world;
  const Quat q = quat_mul(rot_z(0.7), rot_x(0.2));
  const Mat3 rt = quat_to_rotmat(q).transpose();
  EXPECT_LT(angular_offset_deg(gravity_yaw_init(rt * -world.gravity, 0.7, world), q), 1e-7);
}

WindowState history_state(int batches, const std::function<CalibrationEntry(int)>& entry) {
  WindowState s;
  s.batch = batches;
  for (int b = batches - 10; b <= batches; ++b) s.history.push_back({entry(b)});
  s.excitation.assign(10, 1.0);
  return s;
}

TEST(DetectorTest, FrozenHistoryConverges) {
  const WindowConfig cfg;
  const CalibrationEntry c{rot_y(0.3), Vec3(0.1, 0, 0.1)};
  const WindowState s = history_state(11, [&](int) { return c; });
  const DetectorTerms d = convergence_indicator(s, cfg, Vec3::Zero(), 10, 1);
  EXPECT_TRUE(d.eligible);
  EXPECT_TRUE(d.converged);
  EXPECT_EQ(d.orientation, 0.0);
}

TEST(DetectorTest, RotatingCalibrationDoesNotConverge) {
  const WindowConfig cfg;
  const WindowState s = history_state(
      20, [](int b) { return CalibrationEntry{rot_z(5.0 * kDegToRad * b), Vec3(0.1, 0, 0.1)}; });
  const DetectorTerms d = convergence_indicator(s, cfg, Vec3::Zero(), 10, 1);
  EXPECT_NEAR(d.orientation, 5.0 * kDegToRad, 1e-12);
  EXPECT_NEAR(d.orientation, 0.087, 5e-4);
  EXPECT_FALSE(d.converged);
}

TEST(DetectorTest, TooEarlyIsNotEligible) {
  const WindowConfig cfg;
  const CalibrationEntry c{rot_y(0.3), Vec3(0.1, 0, 0.1)};
  WindowState s = history_state(10, [&](int) { return c; });
  EXPECT_FALSE(convergence_indicator(s, cfg, Vec3::Zero(), 10, 1).converged);
}

TEST(DetectorTest, MotionFreeHistoryDoesNotConverge) {
  const WindowConfig cfg;
  const CalibrationEntry c{rot_y(0.3), Vec3(0.1, 0, 0.1)};
  WindowState s = history_state(11, [&](int) { return c; });
  s.excitation.assign(10, 0.01);
  const DetectorTerms d = convergence_indicator(s, cfg, Vec3::Zero(), 10, 1);
  EXPECT_NEAR(d.excitation, 0.01, 1e-15);
  EXPECT_FALSE(d.converged);
  WindowConfig ungated = cfg;
  ungated.min_excitation = 0.0;
  EXPECT_TRUE(convergence_indicator(s, ungated, Vec3::Zero(), 10, 1).converged);
}

TEST(DetectorTest, JointVelocityTermIsNormOfMean) {
  const WindowConfig cfg;
  const CalibrationEntry c{rot_y(0.3), Vec3(0.1, 0, 0.1)};
  const WindowState s = history_state(11, [&](int) { return c; });
  const DetectorTerms d = convergence_indicator(s, cfg, Vec3(0.3, 0.4, 0.0), 10, 1);
  EXPECT_NEAR(d.joint_velocity, 0.05, 1e-15);
  EXPECT_FALSE(d.converged);
}

TEST(WindowConfigTest, Validation) {
  EXPECT_TRUE(WindowConfig{}.validate().empty());
  WindowConfig bad;
  bad.batch_size = 1;
  bad.tightening_factor = 1.0;
  EXPECT_EQ(bad.validate().size(), 2u);
  EXPECT_THROW(SlidingWindowEstimator(two_segment_model(), NoiseConfig{}, bad,
                                      two_segment_target_calibration()),
               std::invalid_argument);
  EXPECT_THROW(SlidingWindowEstimator(two_segment_model(), NoiseConfig{}, WindowConfig{},
                                      I2SCalibration(1)),
               std::invalid_argument);
}

// Full noiseless sequence with the experiment defaults.
class StreamFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new ExperimentConfig(default_experiment_config());
    scenario_ = new Scenario(simulate(*config_, 0));
  }
  static void TearDownTestSuite() {
    delete config_;
    delete scenario_;
  }
  static WindowConfig window_with_truth_start() {
    WindowConfig w = config_->window;
    std::vector<Quat> q;
    for (const auto& s : scenario_->truth.imus[0]) q.push_back(s.orientation);
    w.initial_orientations = q;
    return w;
  }
  static ExperimentConfig* config_;
  static Scenario* scenario_;
};

ExperimentConfig* StreamFixture::config_ = nullptr;
Scenario* StreamFixture::scenario_ = nullptr;

TEST_F(StreamFixture, TruthStartDetectsAtFirstEligibleBatch) {
  const RunOutput out = run_stream(config_->model, scenario_->streams,
                                   config_->true_calibration, config_->noise,
                                   window_with_truth_start());
  EXPECT_EQ(out.detection_batch, config_->window.history + 1);
  EXPECT_EQ(static_cast<int>(out.batches.size()), (629 - 1) / 9);
  // Batches share one step; the first-step prior keeps the seam continuous.
  for (std::size_t b = 1; b < out.batches.size(); ++b) {
    for (int i = 0; i < 2; ++i) {
      const Quat prev = out.batches[b - 1].values.imu_at(9, i).orientation;
      const Quat next = out.batches[b].values.imu_at(0, i).orientation;
      EXPECT_LT(2.0 * quat_log(quat_mul(quat_conj(prev), next)).norm(), 1e-3) << b;
    }
  }
  // Tightening happens once.
  int detections = 0;
  for (const auto& b : out.batches) detections += b.detected_now ? 1 : 0;
  EXPECT_EQ(detections, 1);
}

TEST_F(StreamFixture, InitBatchCopiesAnchor) {
  SlidingWindowEstimator est(config_->model, config_->noise, window_with_truth_start(),
                             config_->true_calibration);
  std::vector<std::vector<ImuSample>> first;
  for (const auto& s : scenario_->streams) first.emplace_back(s.begin(), s.begin() + 10);
  est.step(first);
  std::vector<std::vector<ImuSample>> second;
  for (const auto& s : scenario_->streams) second.emplace_back(s.begin() + 9, s.begin() + 19);
  WindowConfig copy_cfg = window_with_truth_start();
  copy_cfg.propagate_init = false;
  SlidingWindowEstimator copy(config_->model, config_->noise, copy_cfg,
                              config_->true_calibration);
  copy.step(first);
  const BatchValues x = copy.init_batch(second);
  for (int t = 0; t < 10; ++t) {
    for (int i = 0; i < 2; ++i) {
      EXPECT_EQ(x.imu_at(t, i).orientation.coeffs(), copy.state().last_imu[i].orientation.coeffs());
    }
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(x.calib[i].position, copy.state().calibration[i].position);
    EXPECT_EQ(est.init_batch(second).calib[i].position, est.state().calibration[i].position);
  }
}

TEST_F(StreamFixture, DeterministicAcrossRuns) {
  const WindowConfig w = window_with_truth_start();
  const I2SCalibration init = offset_calibration(*config_, {1, -25.0, 25.0});
  std::vector<std::vector<ImuSample>> part;
  for (const auto& s : scenario_->streams) part.emplace_back(s.begin(), s.begin() + 100);
  const RunOutput a = run_stream(config_->model, part, init, config_->noise, w);
  const RunOutput b = run_stream(config_->model, part, init, config_->noise, w);
  ASSERT_EQ(a.step_calibration.size(), b.step_calibration.size());
  for (std::size_t t = 0; t < a.step_calibration.size(); ++t) {
    for (int i = 0; i < 2; ++i) {
      EXPECT_EQ(a.step_calibration[t][i].orientation.coeffs(),
                b.step_calibration[t][i].orientation.coeffs());
      EXPECT_EQ(a.step_calibration[t][i].position, b.step_calibration[t][i].position);
    }
  }
}

TEST(StaticStreamTest, NoSpuriousDetection) {
  const ExperimentConfig c = default_experiment_config();
  const WorldConfig& world = c.model.world;
  const auto segs = forward_kinematics(c.model, {0.3, 0.2, 0.0, 0.8});
  const int steps = 50 * 9 + 1;
  std::vector<std::vector<ImuSample>> streams(2);
  std::vector<Quat> q;
  for (int i = 0; i < 2; ++i) {
    const Quat qi = quat_mul(segs[i].orientation, c.true_calibration[i].orientation);
    q.push_back(qi);
    const Mat3 rt = quat_to_rotmat(qi).transpose();
    for (int t = 0; t < steps; ++t) {
      ImuSample s;
      s.t_index = t;
      s.acc = -(rt * world.gravity);
      s.mag = rt * world.magnetic_field.normalized();
      streams[i].push_back(s);
    }
  }
  WindowConfig w = c.window;
  w.initial_orientations = q;
  const RunOutput out = run_stream(c.model, streams, offset_calibration(c, {1, -25.0, 25.0}),
                                   c.noise, w);
  EXPECT_EQ(out.batches.size(), 50u);
  EXPECT_EQ(out.detection_batch, -1);
}

}  // namespace
}  // namespace selfcal

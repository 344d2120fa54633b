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

// Synthetic two-segment motion, exact inertial signals and error metrics.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "selfcal/biomech.hpp"
#include "selfcal/residuals.hpp"

namespace selfcal {

/// φ_d(t) = π sin(α/2) sin(α), α = 2πt / period, optionally clipped per DoF.
struct AngleProfile {
  int num_steps = 629;
  double period_steps = 629.0;
  // Optional [lo, hi] bounds in radians, indexed by DoF.
  std::vector<std::optional<std::pair<double, double>>> clip;

  double angle(int dof, int t) const;
};

/// Number of rotational DoFs of a joint (3 for ball, 1 for hinge).
int joint_dofs(const JointSpec& joint);
int total_dofs(const BodyModel& model);

/// Two capsule segments of length 0.3 m and radius 0.1 m, a ball joint
/// anchoring the first segment at the origin and a hinge about x with a
/// [0, 162] degree range of motion; one IMU per segment.
BodyModel two_segment_model();
I2SCalibration two_segment_target_calibration();
/// Profile for two_segment_model with the hinge clipped at its upper bound.
AngleProfile two_segment_profile(const BodyModel& model);

/// Segment poses for one set of joint angles (ball joints compose
/// Rx·Ry·Rz, hinges rotate about their axis). Joints are applied parent
/// first, so the root joint pose fixes the chain.
std::vector<SegmentState> forward_kinematics(const BodyModel& model,
                                             const std::vector<double>& angles);

struct GroundTruth {
  int num_steps = 0;
  std::vector<std::vector<SegmentState>> segments;  // [t][s]
  std::vector<std::vector<ImuState>> imus;          // [t][i]
  I2SCalibration calibration;
};

/// IMU angular velocities are the forward increments Log(q_t^-1 q_{t+1}) / T.
/// IMU velocities solve v_{t+1} = -v_t + 2 (p_{t+1} - p_t) / T with v_0
/// fitted to central differences, so both position and velocity motion
/// equations hold exactly for the synthesized accelerations.
GroundTruth generate_ground_truth(const BodyModel& model, const I2SCalibration& calibration,
                                  const AngleProfile& profile);

struct SynthesisNoise {
  double gyro_std = 0.0;   // rad/s
  double accel_std = 0.0;  // m/s^2
  std::uint64_t seed = 0;
};

/// One stream per IMU. Every sample carries a magnetometer reading.
std::vector<std::vector<ImuSample>> synthesize_imu(const GroundTruth& truth,
                                                   const WorldConfig& world,
                                                   const SynthesisNoise& noise = {});

/// q_z(γ) ⊙ q^SI ⊙ q_z(β) and R_z(γ) I^S.
CalibrationEntry apply_offset(const CalibrationEntry& target, double beta_deg,
                              double gamma_deg);

struct Stats {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
};
Stats summarize(const std::vector<double>& values);

struct ErrorStats {
  Stats position_m;        // |I^S_est - I^S_true|
  Stats calib_deg;         // angular offset of q^SI
  Stats segment_deg;       // angular offset of q^SG
  int num_samples = 0;
};

/// Errors for one IMU over steps from_step..end. `calib[t]` and
/// `segment_orientation[t]` are the estimates used at step t.
ErrorStats error_stats(const std::vector<CalibrationEntry>& calib,
                       const std::vector<Quat>& segment_orientation,
                       const CalibrationEntry& true_calib,
                       const std::vector<Quat>& true_segment_orientation, int from_step);

}  // namespace selfcal

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

#pragma once

#include <string>
#include <vector>

#include "selfcal/so3.hpp"

namespace selfcal {

/// Rigid body segment. The local frame has its origin in the proximal joint
/// centre and the z-axis along the segment; `segment_vector` points from the
/// proximal to the distal joint. The segment is wrapped by a capsule whose
/// radius varies linearly from `proximal_radius` to `distal_radius`.
struct SegmentSpec {
  std::string name;
  Vec3 segment_vector = Vec3(0.0, 0.0, 0.3);
  double proximal_radius = 0.1;
  double distal_radius = 0.1;

  double length() const { return segment_vector.norm(); }
};

enum class JointKind { kBall, kHinge };

/// Joint between `parent` (proximal) and `child` (distal) segment. A parent
/// index of -1 attaches the child to the world at `world_anchor`.
struct JointSpec {
  std::string name;
  int parent = -1;
  int child = 0;
  JointKind kind = JointKind::kBall;
  Vec3 hinge_axis = Vec3::UnitX();
  double rom_min_deg = 0.0;
  double rom_max_deg = 180.0;
  Vec3 world_anchor = Vec3::Zero();

  bool is_root() const { return parent < 0; }
};

struct ImuAttachment {
  std::string name;
  int segment = 0;
};

struct FixedPointSpec {
  int segment = 0;
  Vec3 local_point = Vec3::Zero();
  Vec3 global_point = Vec3::Zero();
};

/// I2S calibration of a single IMU: orientation q^SI and position I^S.
struct CalibrationEntry {
  Quat orientation = Quat::Identity();
  Vec3 position = Vec3::Zero();
};

/// One entry per IMU, in the order of BodyModel::imus.
using I2SCalibration = std::vector<CalibrationEntry>;

struct WorldConfig {
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  Vec3 magnetic_field = Vec3(0.6, 0.0, -0.8);
  double sample_period = 0.01;
};

struct BodyModel {
  std::vector<SegmentSpec> segments;
  std::vector<JointSpec> joints;
  std::vector<ImuAttachment> imus;
  std::vector<FixedPointSpec> fixed_points;
  WorldConfig world;

  int segment_index(const std::string& name) const;  // -1 if unknown
  int imu_on_segment(int segment) const;             // -1 if none
};

enum class CapsuleRegion { kBelowProximal, kLateral, kBeyondDistal };

struct CapsuleProjection {
  double pr = 0.0;                  // projection length along the segment
  Vec3 orthogonal = Vec3::Zero();   // I^O
  CapsuleRegion region = CapsuleRegion::kLateral;
  // The radial direction used by the shape prior has zero length.
  bool degenerate = false;
};

CapsuleProjection capsule_project(const Vec3& cal_pos, const SegmentSpec& seg);

// Linear radius interpolation; throws std::domain_error for pr outside
// [0, |p^S|].
double capsule_radius_at(double pr, const SegmentSpec& seg);

struct SurfaceFrame {
  Vec3 normal;
  Vec3 tangent1;
  Vec3 tangent2;
};

// Derivatives of the frame vectors with respect to the query position.
struct SurfaceFrameJacobian {
  Mat3 d_normal;
  Mat3 d_tangent1;
  Mat3 d_tangent2;
};

/// Outward normal and two tangents of the capsule at the point closest to
/// `cal_pos`. In the lateral region tangent1 runs along the segment; on the
/// caps the tangents complete the normal using the world axis least aligned
/// with it. Throws std::invalid_argument when the radial direction is
/// undefined (position on the segment axis).
SurfaceFrame surface_frame(const Vec3& cal_pos, const SegmentSpec& seg,
                           SurfaceFrameJacobian* jacobian = nullptr);

/// Empty iff the model is a connected kinematic tree with valid references.
std::vector<std::string> validate_model(const BodyModel& model);

}  // namespace selfcal

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

#include "selfcal/biomech.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace selfcal {
namespace {

constexpr double kDegenerateLength = 1e-9;

std::string seg_label(const BodyModel& m, int i) {
  if (i >= 0 && i < static_cast<int>(m.segments.size())) return m.segments[i].name;
  return std::to_string(i);
}

}  // namespace

int BodyModel::segment_index(const std::string& name) const {
  for (size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int BodyModel::imu_on_segment(int segment) const {
  for (size_t i = 0; i < imus.size(); ++i) {
    if (imus[i].segment == segment) return static_cast<int>(i);
  }
  return -1;
}

CapsuleProjection capsule_project(const Vec3& cal_pos, const SegmentSpec& seg) {
  const double len = seg.length();
  const Vec3 axis = seg.segment_vector / len;
  CapsuleProjection out;
  out.pr = cal_pos.dot(axis);
  out.orthogonal = cal_pos - out.pr * axis;
  if (out.pr < 0.0) {
    out.region = CapsuleRegion::kBelowProximal;
    out.degenerate = cal_pos.norm() < kDegenerateLength;
  } else if (out.pr > len) {
    out.region = CapsuleRegion::kBeyondDistal;
    out.degenerate = (cal_pos - seg.segment_vector).norm() < kDegenerateLength;
  } else {
    out.region = CapsuleRegion::kLateral;
    out.degenerate = out.orthogonal.norm() < kDegenerateLength;
  }
  return out;
}

double capsule_radius_at(double pr, const SegmentSpec& seg) {
  const double len = seg.length();
  if (pr < 0.0 || pr > len) {
    throw std::domain_error("capsule_radius_at: projection " + std::to_string(pr) +
                            " outside [0, " + std::to_string(len) + "]");
  }
  return seg.proximal_radius + pr / len * (seg.distal_radius - seg.proximal_radius);
}

SurfaceFrame surface_frame(const Vec3& cal_pos, const SegmentSpec& seg,
                           SurfaceFrameJacobian* jacobian) {
  const CapsuleProjection proj = capsule_project(cal_pos, seg);
  if (proj.degenerate) {
    throw std::invalid_argument("surface_frame: position on the segment axis");
  }
  const Vec3 axis = seg.segment_vector / seg.length();
  SurfaceFrame frame;

  if (proj.region == CapsuleRegion::kLateral) {
    const double on = proj.orthogonal.norm();
    frame.normal = proj.orthogonal / on;
    frame.tangent1 = axis;
    frame.tangent2 = frame.normal.cross(frame.tangent1);
    if (jacobian != nullptr) {
      const Mat3 p_orth = Mat3::Identity() - axis * axis.transpose();
      const Mat3 dn =
          (Mat3::Identity() - frame.normal * frame.normal.transpose()) * p_orth / on;
      jacobian->d_normal = dn;
      jacobian->d_tangent1.setZero();
      jacobian->d_tangent2 = -skew(frame.tangent1) * dn;
    }
    return frame;
  }

  // Caps: radial direction from the respective joint centre.
  const Vec3 c = proj.region == CapsuleRegion::kBelowProximal
                     ? cal_pos
                     : Vec3(cal_pos - seg.segment_vector);
  const double cn = c.norm();
  frame.normal = c / cn;
  int k = 0;
  for (int j = 1; j < 3; ++j) {
    if (std::abs(frame.normal[j]) < std::abs(frame.normal[k])) k = j;
  }
  const Vec3 e = Vec3::Unit(k);
  const Vec3 u = e - e.dot(frame.normal) * frame.normal;
  const double un = u.norm();
  frame.tangent1 = u / un;
  frame.tangent2 = frame.normal.cross(frame.tangent1);
  if (jacobian != nullptr) {
    const Mat3 dn = (Mat3::Identity() - frame.normal * frame.normal.transpose()) / cn;
    const Mat3 du = -frame.normal * (e.transpose() * dn) - e.dot(frame.normal) * dn;
    const Mat3 dt1 =
        (Mat3::Identity() - frame.tangent1 * frame.tangent1.transpose()) * du / un;
    jacobian->d_normal = dn;
    jacobian->d_tangent1 = dt1;
    jacobian->d_tangent2 = -skew(frame.tangent1) * dn + skew(frame.normal) * dt1;
  }
  return frame;
}

std::vector<std::string> validate_model(const BodyModel& model) {
  std::vector<std::string> violations;
  const int n_seg = static_cast<int>(model.segments.size());
  if (n_seg == 0) {
    violations.emplace_back("model has no segments");
    return violations;
  }
  for (const auto& s : model.segments) {
    if (!(s.segment_vector.norm() > 0.0)) {
      violations.push_back("segment " + s.name + ": zero segment vector");
    }
    if (!(s.proximal_radius > 0.0) || !(s.distal_radius > 0.0)) {
      violations.push_back("segment " + s.name + ": capsule radii must be positive");
    }
  }

  std::vector<int> parent_count(n_seg, 0);
  std::vector<std::vector<int>> children(n_seg);
  std::vector<int> roots;
  for (const auto& j : model.joints) {
    const bool child_ok = j.child >= 0 && j.child < n_seg;
    const bool parent_ok = j.parent < n_seg;
    if (!child_ok) violations.push_back("joint " + j.name + ": unknown child segment");
    if (!parent_ok) violations.push_back("joint " + j.name + ": unknown parent segment");
    if (child_ok && j.parent == j.child) {
      violations.push_back("joint " + j.name + ": segment attached to itself");
    }
    if (j.kind == JointKind::kHinge) {
      if (j.is_root()) violations.push_back("joint " + j.name + ": root joint must be a ball joint");
      if (std::abs(j.hinge_axis.norm() - 1.0) > 1e-9) {
        violations.push_back("joint " + j.name + ": hinge axis is not unit length");
      }
      if (!(j.rom_min_deg < j.rom_max_deg)) {
        violations.push_back("joint " + j.name + ": empty range of motion");
      }
    }
    if (!child_ok || !parent_ok) continue;
    ++parent_count[j.child];
    if (j.is_root()) {
      roots.push_back(j.child);
    } else {
      children[j.parent].push_back(j.child);
    }
  }

  for (int s = 0; s < n_seg; ++s) {
    if (parent_count[s] > 1) {
      violations.push_back("segment " + seg_label(model, s) + " has several proximal joints");
    }
    if (parent_count[s] == 0) roots.push_back(s);
  }
  if (roots.size() != 1) {
    violations.push_back("kinematic tree must have exactly one root, found " +
                         std::to_string(roots.size()));
  } else {
    std::vector<bool> seen(n_seg, false);
    std::vector<int> stack{roots.front()};
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      if (seen[s]) continue;
      seen[s] = true;
      for (int c : children[s]) stack.push_back(c);
    }
    for (int s = 0; s < n_seg; ++s) {
      if (!seen[s]) {
        violations.push_back("segment " + seg_label(model, s) + " is not connected to the root");
      }
    }
  }

  std::vector<int> imus_per_segment(n_seg, 0);
  for (const auto& imu : model.imus) {
    if (imu.segment < 0 || imu.segment >= n_seg) {
      violations.push_back("imu " + imu.name + ": unknown segment");
      continue;
    }
    if (++imus_per_segment[imu.segment] == 2) {
      violations.push_back("segment " + seg_label(model, imu.segment) +
                           " carries more than one IMU");
    }
  }
  for (const auto& fp : model.fixed_points) {
    if (fp.segment < 0 || fp.segment >= n_seg) {
      violations.emplace_back("fixed point on unknown segment");
    }
  }
  if (!(model.world.gravity.norm() > 0.0)) violations.emplace_back("gravity must be non-zero");
  if (!(model.world.sample_period > 0.0)) {
    violations.emplace_back("sample period must be positive");
  }
  return violations;
}

}  // namespace selfcal

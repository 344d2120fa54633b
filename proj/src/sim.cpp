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

#include "selfcal/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace selfcal {

double AngleProfile::angle(int dof, int t) const {
  const double alpha = 2.0 * kPi * t / period_steps;
  double phi = kPi * std::sin(alpha / 2.0) * std::sin(alpha);
  if (dof >= 0 && dof < static_cast<int>(clip.size()) && clip[dof]) {
    phi = std::clamp(phi, clip[dof]->first, clip[dof]->second);
  }
  return phi;
}

int joint_dofs(const JointSpec& joint) { return joint.kind == JointKind::kBall ? 3 : 1; }

int total_dofs(const BodyModel& model) {
  int n = 0;
  for (const auto& j : model.joints) n += joint_dofs(j);
  return n;
}

BodyModel two_segment_model() {
  BodyModel m;
  m.segments = {{"S0", Vec3(0.0, 0.0, 0.3), 0.1, 0.1}, {"S1", Vec3(0.0, 0.0, 0.3), 0.1, 0.1}};
  JointSpec root;
  root.name = "J0";
  root.parent = -1;
  root.child = 0;
  root.kind = JointKind::kBall;
  JointSpec knee;
  knee.name = "J1";
  knee.parent = 0;
  knee.child = 1;
  knee.kind = JointKind::kHinge;
  knee.hinge_axis = Vec3::UnitX();
  knee.rom_min_deg = 0.0;
  knee.rom_max_deg = 162.0;
  m.joints = {root, knee};
  m.imus = {{"I0", 0}, {"I1", 1}};
  m.fixed_points = {{0, Vec3::Zero(), Vec3::Zero()}};
  return m;
}

I2SCalibration two_segment_target_calibration() {
  Mat3 r0;
  r0.col(0) = Vec3(0, 0, 1);
  r0.col(1) = Vec3(-1, 0, 0);
  r0.col(2) = Vec3(0, -1, 0);
  Mat3 r1;
  r1.col(0) = Vec3(0, 0, 1);
  r1.col(1) = Vec3(1, 0, 0);
  r1.col(2) = Vec3(0, 1, 0);
  return {{rotmat_to_quat(r0), Vec3(0.0, -0.1, 0.15)}, {rotmat_to_quat(r1), Vec3(0.0, 0.1, 0.15)}};
}

AngleProfile two_segment_profile(const BodyModel& model) {
  AngleProfile p;
  int dof = 0;
  for (const auto& j : model.joints) {
    for (int k = 0; k < joint_dofs(j); ++k, ++dof) {
      p.clip.emplace_back();
      if (j.kind == JointKind::kHinge) {
        p.clip.back() = std::make_pair(-kPi, j.rom_max_deg * kDegToRad);
      }
    }
  }
  return p;
}

std::vector<SegmentState> forward_kinematics(const BodyModel& model,
                                             const std::vector<double>& angles) {
  if (static_cast<int>(angles.size()) != total_dofs(model)) {
    throw std::invalid_argument("forward_kinematics: angle count does not match joint DoFs");
  }
  const int n_seg = static_cast<int>(model.segments.size());
  const int n_joint = static_cast<int>(model.joints.size());
  std::vector<Quat> rel(n_joint);
  int dof = 0;
  for (int k = 0; k < n_joint; ++k) {
    const auto& j = model.joints[k];
    if (j.kind == JointKind::kBall) {
      rel[k] = quat_mul(quat_mul(rot_x(angles[dof]), rot_y(angles[dof + 1])), rot_z(angles[dof + 2]));
    } else {
      rel[k] = axis_angle(j.hinge_axis, angles[dof]);
    }
    dof += joint_dofs(j);
  }

  std::vector<SegmentState> out(n_seg);
  std::vector<bool> done(n_seg, false);
  for (int pass = 0; pass < n_joint; ++pass) {
    bool progress = false;
    for (int k = 0; k < n_joint; ++k) {
      const auto& j = model.joints[k];
      if (done[j.child]) continue;
      if (j.is_root()) {
        out[j.child] = {j.world_anchor, rel[k]};
      } else if (done[j.parent]) {
        const SegmentState& p = out[j.parent];
        out[j.child] = {p.position + quat_to_rotmat(p.orientation) * model.segments[j.parent].segment_vector,
                        quat_mul(p.orientation, rel[k])};
      } else {
        continue;
      }
      done[j.child] = true;
      progress = true;
    }
    if (!progress) break;
  }
  if (std::find(done.begin(), done.end(), false) != done.end()) {
    throw std::invalid_argument("forward_kinematics: segment not reachable from a root joint");
  }
  return out;
}

GroundTruth generate_ground_truth(const BodyModel& model, const I2SCalibration& calibration,
                                  const AngleProfile& profile) {
  const int n = profile.num_steps;
  if (n < 2) throw std::invalid_argument("ground truth needs at least two steps");
  const int n_imu = static_cast<int>(model.imus.size());
  if (static_cast<int>(calibration.size()) != n_imu) {
    throw std::invalid_argument("one calibration entry per IMU expected");
  }
  const double T = model.world.sample_period;
  const int dofs = total_dofs(model);

  // One extra pose for the forward angular velocity at the last step.
  std::vector<std::vector<SegmentState>> segs(n + 1);
  for (int t = 0; t <= n; ++t) {
    std::vector<double> a(dofs);
    for (int d = 0; d < dofs; ++d) a[d] = profile.angle(d, t);
    segs[t] = forward_kinematics(model, a);
  }

  GroundTruth gt;
  gt.num_steps = n;
  gt.calibration = calibration;
  gt.segments.assign(segs.begin(), segs.begin() + n);
  gt.imus.assign(n, std::vector<ImuState>(n_imu));

  for (int i = 0; i < n_imu; ++i) {
    const int s = model.imus[i].segment;
    const CalibrationEntry& c = calibration[i];
    std::vector<Vec3> p(n + 1);
    std::vector<Quat> q(n + 1);
    for (int t = 0; t <= n; ++t) {
      q[t] = quat_mul(segs[t][s].orientation, c.orientation);
      p[t] = segs[t][s].position + quat_to_rotmat(segs[t][s].orientation) * c.position;
    }
    // Velocities: particular solution c_t of the recursion plus an
    // alternating homogeneous part fitted to central differences.
    std::vector<Vec3> part(n);
    part[0].setZero();
    for (int t = 0; t + 1 < n; ++t) part[t + 1] = -part[t] + 2.0 * (p[t + 1] - p[t]) / T;
    Vec3 v0 = Vec3::Zero();
    for (int t = 0; t < n; ++t) {
      const Vec3 vc = t == 0 ? Vec3((p[1] - p[0]) / T) : Vec3((p[t + 1] - p[t - 1]) / (2.0 * T));
      v0 += (t % 2 == 0 ? 1.0 : -1.0) * (vc - part[t]);
    }
    v0 /= n;
    for (int t = 0; t < n; ++t) {
      ImuState& st = gt.imus[t][i];
      st.position = p[t];
      st.orientation = q[t];
      st.velocity = part[t] + (t % 2 == 0 ? 1.0 : -1.0) * v0;
      st.angular_velocity = rotvec_log(quat_mul(quat_conj(q[t]), q[t + 1])) / T;
    }
  }
  return gt;
}

std::vector<std::vector<ImuSample>> synthesize_imu(const GroundTruth& truth,
                                                   const WorldConfig& world,
                                                   const SynthesisNoise& noise) {
  const int n = truth.num_steps;
  const int n_imu = n > 0 ? static_cast<int>(truth.imus[0].size()) : 0;
  const double T = world.sample_period;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<ImuSample>> out(n_imu, std::vector<ImuSample>(n));
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < n_imu; ++i) {
      const ImuState& s = truth.imus[t][i];
      const Mat3 r_ig = quat_to_rotmat(s.orientation).transpose();
      Vec3 acc;
      if (t + 1 < n) {
        const Vec3& p1 = truth.imus[t + 1][i].position;
        acc = 2.0 / (T * T) * (p1 - s.position - T * s.velocity);
      } else {
        acc = (s.velocity - truth.imus[t - 1][i].velocity) / T;
      }
      ImuSample& y = out[i][t];
      y.t_index = t;
      y.acc = r_ig * (acc - world.gravity);
      y.gyr = s.angular_velocity;
      y.mag = r_ig * world.magnetic_field.normalized();
      if (noise.accel_std > 0.0 || noise.gyro_std > 0.0) {
        for (int k = 0; k < 3; ++k) y.acc[k] += noise.accel_std * gauss(rng);
        for (int k = 0; k < 3; ++k) y.gyr[k] += noise.gyro_std * gauss(rng);
      }
    }
  }
  return out;
}

CalibrationEntry apply_offset(const CalibrationEntry& target, double beta_deg,
                              double gamma_deg) {
  const Quat qg = rot_z(gamma_deg * kDegToRad);
  const Quat qb = rot_z(beta_deg * kDegToRad);
  return {quat_mul(quat_mul(qg, target.orientation), qb), quat_to_rotmat(qg) * target.position};
}

Stats summarize(const std::vector<double>& values) {
  Stats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    s.max = std::max(s.max, v);
  }
  s.mean = sum / values.size();
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / values.size());
  return s;
}

ErrorStats error_stats(const std::vector<CalibrationEntry>& calib,
                       const std::vector<Quat>& segment_orientation,
                       const CalibrationEntry& true_calib,
                       const std::vector<Quat>& true_segment_orientation, int from_step) {
  const int n = static_cast<int>(std::min({calib.size(), segment_orientation.size(),
                                           true_segment_orientation.size()}));
  if (from_step < 0 || from_step >= n) {
    throw std::invalid_argument("error_stats: start step outside the sequence");
  }
  std::vector<double> pos;
  std::vector<double> cal;
  std::vector<double> seg;
  for (int t = from_step; t < n; ++t) {
    pos.push_back((calib[t].position - true_calib.position).norm());
    cal.push_back(angular_offset_deg(calib[t].orientation, true_calib.orientation));
    seg.push_back(angular_offset_deg(segment_orientation[t], true_segment_orientation[t]));
  }
  ErrorStats e;
  e.position_m = summarize(pos);
  e.calib_deg = summarize(cal);
  e.segment_deg = summarize(seg);
  e.num_samples = static_cast<int>(pos.size());
  return e;
}

}  // namespace selfcal

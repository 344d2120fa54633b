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

#include "selfcal/residuals.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace selfcal {

Eigen::MatrixXd sqrt_information(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw std::invalid_argument("covariance must be a non-empty square matrix");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance must be positive definite");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(covariance.rows(), covariance.rows());
  return llt.matrixL().solve(eye);
}

Vec9 motion_residual(const ImuState& imu_t, const ImuState& imu_t1, const Vec3& acc,
                     const WorldConfig& world, MotionJacobians* jac) {
  const double T = world.sample_period;
  const Mat3 rt = quat_to_rotmat(imu_t.orientation).transpose();  // R^IG_t

  const Vec3 a_pos = 2.0 / (T * T) *
                         (imu_t1.position - imu_t.position - T * imu_t.velocity) -
                     world.gravity;
  const Vec3 a_vel = (imu_t1.velocity - imu_t.velocity) / T - world.gravity;

  const Quat inc = rotvec_exp(T * imu_t.angular_velocity);
  const Quat q_err = inc.conjugate() * imu_t.orientation.conjugate() * imu_t1.orientation;
  const Vec3 r_ori = quat_log(q_err);

  Vec9 r;
  r.segment<3>(0) = acc - rt * a_pos;
  r.segment<3>(3) = acc - rt * a_vel;
  r.segment<3>(6) = r_ori;

  if (jac != nullptr) {
    const Mat3 jr_inv = 0.5 * right_jacobian_inv(2.0 * r_ori);
    const Mat3 jl_inv = jr_inv.transpose();
    auto& J = *jac;
    for (auto* m : {&J.pos0, &J.vel0, &J.ori0, &J.omega0, &J.pos1, &J.vel1, &J.ori1}) {
      m->setZero();
    }
    J.pos0.block<3, 3>(0, 0) = 2.0 / (T * T) * rt;
    J.pos1.block<3, 3>(0, 0) = -2.0 / (T * T) * rt;
    J.vel0.block<3, 3>(0, 0) = 2.0 / T * rt;
    J.ori0.block<3, 3>(0, 0) = -skew(rt * a_pos);

    J.vel0.block<3, 3>(3, 0) = rt / T;
    J.vel1.block<3, 3>(3, 0) = -rt / T;
    J.ori0.block<3, 3>(3, 0) = -skew(rt * a_vel);

    J.ori1.block<3, 3>(6, 0) = jr_inv;
    J.ori0.block<3, 3>(6, 0) = -jl_inv * quat_to_rotmat(inc).transpose();
    J.omega0.block<3, 3>(6, 0) = -jl_inv * right_jacobian(T * imu_t.angular_velocity) * T;
  }
  return r;
}

Vec3 gyro_residual(const ImuState& imu, const Vec3& gyr) { return gyr - imu.angular_velocity; }

Vec3 connected_segments_constraint(const SegmentState& parent, const SegmentState& child,
                                   const Vec3& segment_vector, ConnectedJacobians* jac) {
  const Mat3 r = quat_to_rotmat(parent.orientation);
  if (jac != nullptr) {
    jac->pos_child = Mat3::Identity();
    jac->pos_parent = -Mat3::Identity();
    jac->ori_parent = r * skew(segment_vector);
  }
  return child.position - (parent.position + r * segment_vector);
}

Vec3 root_joint_constraint(const SegmentState& child, const Vec3& anchor) {
  return child.position - anchor;
}

Vec6 i2s_coupling_residual(const ImuState& imu, const SegmentState& seg,
                           const CalibrationEntry& cal, CouplingJacobians* jac) {
  const Quat q_err = (seg.orientation * cal.orientation).conjugate() * imu.orientation;
  const Vec3 r_ori = rotvec_log(q_err);
  const Mat3 rs_t = quat_to_rotmat(seg.orientation).transpose();
  const Vec3 rel = imu.position - seg.position;

  Vec6 r;
  r.head<3>() = r_ori;
  r.tail<3>() = rs_t * rel - cal.position;

  if (jac != nullptr) {
    auto& J = *jac;
    for (auto* m : {&J.imu_pos, &J.imu_ori, &J.seg_pos, &J.seg_ori, &J.cal_ori, &J.cal_pos}) {
      m->setZero();
    }
    const Mat3 jr_inv = right_jacobian_inv(r_ori);
    const Mat3 jl_inv = jr_inv.transpose();
    J.imu_ori.topRows<3>() = jr_inv;
    J.seg_ori.topRows<3>() = -jl_inv * quat_to_rotmat(cal.orientation).transpose();
    J.cal_ori.topRows<3>() = -jl_inv;

    J.imu_pos.bottomRows<3>() = rs_t;
    J.seg_pos.bottomRows<3>() = -rs_t;
    J.seg_ori.bottomRows<3>() = skew(rs_t * rel);
    J.cal_pos.bottomRows<3>() = -Mat3::Identity();
  }
  return r;
}

Vec3 joint_velocity_residual(const ImuState& imu_i, const ImuState& imu_j,
                             const CalibrationEntry& cal_i, const CalibrationEntry& cal_j,
                             const Vec3& segment_vector_i, JointVelocityJacobians* jac) {
  const Mat3 ri = quat_to_rotmat(imu_i.orientation);
  const Mat3 rj = quat_to_rotmat(imu_j.orientation);
  const Mat3 ci = quat_to_rotmat(cal_i.orientation);
  const Mat3 cj = quat_to_rotmat(cal_j.orientation);
  const Vec3& wi = imu_i.angular_velocity;
  const Vec3& wj = imu_j.angular_velocity;

  // Lever arms in the IMU frames: IMU i to the distal joint of segment i, and
  // the proximal joint of segment j to IMU j.
  const Vec3 u = ci.transpose() * (segment_vector_i - cal_i.position);
  const Vec3 m = cj.transpose() * cal_j.position;
  const Vec3 n = m.cross(wj);
  const Vec3 wv = imu_i.velocity - imu_j.velocity - rj * n;
  const Mat3 ri_t = ri.transpose();

  if (jac != nullptr) {
    auto& J = *jac;
    const Mat3 rij = ri_t * rj;
    J.vel_i = ri_t;
    J.vel_j = -ri_t;
    J.ori_i = skew(ri_t * wv);
    J.ori_j = rij * skew(n);
    J.omega_i = -skew(u);
    J.omega_j = -rij * skew(m);
    J.cal_pos_i = -skew(wi) * ci.transpose();
    J.cal_ori_i = skew(wi) * skew(u);
    J.cal_pos_j = rij * skew(wj) * cj.transpose();
    J.cal_ori_j = rij * skew(wj) * skew(m);
  }
  return ri_t * wv + wi.cross(u);
}

Vec3 hinge_residual(const SegmentState& seg_i, const SegmentState& seg_j, const Vec3& axis,
                    PairJacobians* jac) {
  const Mat3 ri = quat_to_rotmat(seg_i.orientation);
  const Mat3 rj_t = quat_to_rotmat(seg_j.orientation).transpose();
  const Vec3 moved = rj_t * (ri * axis);
  if (jac != nullptr) {
    jac->ori_i = rj_t * ri * skew(axis);
    jac->ori_j = -skew(moved);
  }
  return axis - moved;
}

namespace {

// Rotation vector of q^SG_j ⊙ q^GS_i.
Vec3 relative_rotvec(const SegmentState& seg_i, const SegmentState& seg_j) {
  return rotvec_log(seg_j.orientation.conjugate() * seg_i.orientation);
}

double wrap_hinge_angle(double theta, double rom_min) {
  const double lo = rom_min - kPi;
  return theta - 2.0 * kPi * std::floor((theta - lo) / (2.0 * kPi));
}

}  // namespace

double hinge_angle(const SegmentState& seg_i, const SegmentState& seg_j,
                   const JointSpec& joint) {
  const double theta = relative_rotvec(seg_i, seg_j).norm();
  return wrap_hinge_angle(theta, joint.rom_min_deg * kDegToRad);
}

double rom_residual(const SegmentState& seg_i, const SegmentState& seg_j,
                    const JointSpec& joint, RomJacobians* jac) {
  const Vec3 phi = relative_rotvec(seg_i, seg_j);
  const double norm = phi.norm();
  const double theta_min = joint.rom_min_deg * kDegToRad;
  const double theta_max = joint.rom_max_deg * kDegToRad;
  const double theta = wrap_hinge_angle(norm, theta_min);

  double sign = 0.0;
  double r = 0.0;
  if (theta < theta_min) {
    r = theta_min - theta;
    sign = -1.0;
  } else if (theta > theta_max) {
    r = theta - theta_max;
    sign = 1.0;
  }
  if (jac != nullptr) {
    if (sign == 0.0 || norm < 1e-12) {
      jac->ori_i.setZero();
      jac->ori_j.setZero();
    } else {
      const Eigen::RowVector3d dtheta = (phi / norm).transpose();
      jac->ori_i = sign * dtheta;
      jac->ori_j = -sign * dtheta;
    }
  }
  return r;
}

Vec3 shape_pos_residual(const Vec3& cal_pos, const SegmentSpec& seg, Mat3* jac,
                        bool* degenerate) {
  const CapsuleProjection proj = capsule_project(cal_pos, seg);
  if (degenerate != nullptr) *degenerate = proj.degenerate;
  if (proj.degenerate) {
    if (jac != nullptr) jac->setZero();
    return Vec3::Zero();
  }
  const double len = seg.length();
  const Vec3 axis = seg.segment_vector / len;

  // Radial excess of `c` beyond `radius`, with d/dc.
  auto radial = [&](const Vec3& c, double radius, Mat3* dc) -> Vec3 {
    const double cn = c.norm();
    const Vec3 dir = c / cn;
    if (dc != nullptr) {
      *dc = Mat3::Identity() - radius * (Mat3::Identity() - dir * dir.transpose()) / cn;
    }
    return c - radius * dir;
  };

  switch (proj.region) {
    case CapsuleRegion::kBelowProximal:
      return radial(cal_pos, seg.proximal_radius, jac);
    case CapsuleRegion::kBeyondDistal:
      return radial(cal_pos - seg.segment_vector, seg.distal_radius, jac);
    case CapsuleRegion::kLateral:
      break;
  }
  const Vec3& o = proj.orthogonal;
  const double on = o.norm();
  const Vec3 dir = o / on;
  const double radius = capsule_radius_at(proj.pr, seg);
  if (jac != nullptr) {
    const Mat3 p_orth = Mat3::Identity() - axis * axis.transpose();
    const double dr = (seg.distal_radius - seg.proximal_radius) / len;
    *jac = p_orth - dr * dir * axis.transpose() -
           radius * (Mat3::Identity() - dir * dir.transpose()) * p_orth / on;
  }
  return o - radius * dir;
}

Vec2 shape_ori_residual(const CalibrationEntry& cal, const SegmentSpec& seg,
                        ShapeOriJacobians* jac, bool* degenerate) {
  const CapsuleProjection proj = capsule_project(cal.position, seg);
  if (degenerate != nullptr) *degenerate = proj.degenerate;
  if (proj.degenerate) {
    if (jac != nullptr) {
      jac->cal_ori.setZero();
      jac->cal_pos.setZero();
    }
    return Vec2::Zero();
  }
  SurfaceFrameJacobian fj;
  const SurfaceFrame frame = surface_frame(cal.position, seg, jac != nullptr ? &fj : nullptr);
  const Mat3 c = quat_to_rotmat(cal.orientation);
  const Vec3 z = c.col(2);  // IMU z-axis in the segment frame
  if (jac != nullptr) {
    const Mat3 dz = -c * skew(Vec3::UnitZ());
    jac->cal_ori.row(0) = frame.tangent1.transpose() * dz;
    jac->cal_ori.row(1) = frame.tangent2.transpose() * dz;
    jac->cal_pos.row(0) = z.transpose() * fj.d_tangent1;
    jac->cal_pos.row(1) = z.transpose() * fj.d_tangent2;
  }
  return Vec2(z.dot(frame.tangent1), z.dot(frame.tangent2));
}

Vec3 fixed_pos_residual(const SegmentState& seg, const FixedPointSpec& fp,
                        FixedJacobians* jac) {
  const Mat3 r = quat_to_rotmat(seg.orientation);
  if (jac != nullptr) {
    jac->pos = -Mat3::Identity();
    jac->ori = r * skew(fp.local_point);
  }
  return fp.global_point - (seg.position + r * fp.local_point);
}

Vec3 batch_init_residual(const Quat& q_first, const Quat& q_anchor, Mat3* jac) {
  const Vec3 r = rotvec_log(q_anchor.conjugate() * q_first);
  if (jac != nullptr) *jac = right_jacobian_inv(r);
  return r;
}

Vec6 calib_smoothness_residual(const CalibrationEntry& cal_b, const CalibrationEntry& cal_prev,
                               CalibSmoothJacobians* jac) {
  const Vec3 phi = rotvec_log(cal_prev.orientation.conjugate() * cal_b.orientation);
  Vec6 r;
  r.head<3>() = 0.5 * phi;
  r.tail<3>() = cal_b.position - cal_prev.position;
  if (jac != nullptr) {
    jac->cal_ori.setZero();
    jac->cal_pos.setZero();
    jac->cal_ori.topRows<3>() = 0.5 * right_jacobian_inv(phi);
    jac->cal_pos.bottomRows<3>() = Mat3::Identity();
  }
  return r;
}

}  // namespace selfcal

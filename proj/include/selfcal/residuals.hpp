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

// Residuals of the motion, measurement and biomechanical models.
//
// Every function returns the noise term isolated from its stochastic
// equation. Jacobians are taken with respect to the tangent
// parametrization: plain 3-vectors for positions and velocities, and a
// right-multiplied rotation vector (q <- q ⊙ Exp(delta)) for quaternions.

#pragma once

#include <optional>

#include <Eigen/Core>

#include "selfcal/biomech.hpp"

namespace selfcal {

using Vec2 = Eigen::Vector2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
template <int Rows>
using Jac = Eigen::Matrix<double, Rows, 3>;

struct ImuState {
  Vec3 position = Vec3::Zero();          // I^G
  Vec3 velocity = Vec3::Zero();          // İ^G
  Quat orientation = Quat::Identity();   // q^GI
  Vec3 angular_velocity = Vec3::Zero();  // ω^GI_I, IMU frame
};

struct SegmentState {
  Vec3 position = Vec3::Zero();         // S^G
  Quat orientation = Quat::Identity();  // q^GS
};

struct ImuSample {
  int t_index = 0;
  Vec3 acc = Vec3::Zero();  // y^a, m/s^2
  Vec3 gyr = Vec3::Zero();  // y^ω, rad/s
  std::optional<Vec3> mag;  // y^m, unit vector
};

/// Covariances of every term of the per-batch objective.
struct NoiseConfig {
  Eigen::MatrixXd motion_position = Mat3::Identity();
  Eigen::MatrixXd motion_velocity = Mat3::Identity();
  Eigen::MatrixXd motion_orientation = Mat3::Identity();
  Eigen::MatrixXd gyroscope = Mat3::Identity();
  Eigen::MatrixXd coupling_orientation = Mat3::Identity();
  Eigen::MatrixXd coupling_position = Mat3::Identity();
  Eigen::MatrixXd joint_velocity = 10.0 * Mat3::Identity();
  Eigen::MatrixXd hinge = Mat3::Identity();
  Eigen::MatrixXd rom = Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd shape_position = 100.0 * Mat3::Identity();
  Eigen::MatrixXd shape_orientation = 100.0 * Eigen::Matrix2d::Identity();
  Eigen::MatrixXd fixed_position = Mat3::Identity();
  Eigen::MatrixXd batch_init = Mat3::Identity();
  Eigen::MatrixXd calib_orientation = 100.0 * Mat3::Identity();
  Eigen::MatrixXd calib_position = 100.0 * Mat3::Identity();
};

// Σ^{-1/2} such that |sqrt_information(Σ) r|^2 = r^T Σ^{-1} r. Throws
// std::invalid_argument if Σ is not symmetric positive definite.
Eigen::MatrixXd sqrt_information(const Eigen::MatrixXd& covariance);

// ---------------------------------------------------------------------------
// Motion and measurement models.

struct MotionJacobians {
  Jac<9> pos0, vel0, ori0, omega0, pos1, vel1, ori1;
};

/// Stacked [v^pos; v^vel; v^ori] between steps t and t+1, with the measured
/// acceleration as input. v^ori is the quaternion logarithm (half the rotation
/// vector) of
/// conj(exp(T ω_t / 2)) ⊙ conj(q_t) ⊙ q_{t+1}.
Vec9 motion_residual(const ImuState& imu_t, const ImuState& imu_t1, const Vec3& acc,
                     const WorldConfig& world, MotionJacobians* jac = nullptr);

/// y^ω - ω. The Jacobian with respect to ω is -I.
Vec3 gyro_residual(const ImuState& imu, const Vec3& gyr);

// ---------------------------------------------------------------------------
// Biomechanical constraints and priors.

struct ConnectedJacobians {
  Jac<3> pos_parent, ori_parent, pos_child;
};

/// S^G_j - (S^G_i + R^GS_i p^S_i). Hard equality constraint.
Vec3 connected_segments_constraint(const SegmentState& parent, const SegmentState& child,
                                   const Vec3& segment_vector,
                                   ConnectedJacobians* jac = nullptr);

/// Root joint variant: S^G_j - anchor.
Vec3 root_joint_constraint(const SegmentState& child, const Vec3& anchor);

struct CouplingJacobians {
  Jac<6> imu_pos, imu_ori, seg_pos, seg_ori, cal_ori, cal_pos;
};

/// [Log(conj(q^GS ⊙ q^SI) ⊙ q^GI); R^SG (I^G - S^G) - I^S].
Vec6 i2s_coupling_residual(const ImuState& imu, const SegmentState& seg,
                           const CalibrationEntry& cal, CouplingJacobians* jac = nullptr);

struct JointVelocityJacobians {
  Jac<3> vel_i, ori_i, omega_i, vel_j, ori_j, omega_j;
  Jac<3> cal_ori_i, cal_pos_i, cal_ori_j, cal_pos_j;
};

/// Linear velocity mismatch at the joint between the distal end of segment i
/// and the proximal end of segment j, expressed in the frame of IMU i.
Vec3 joint_velocity_residual(const ImuState& imu_i, const ImuState& imu_j,
                             const CalibrationEntry& cal_i, const CalibrationEntry& cal_j,
                             const Vec3& segment_vector_i,
                             JointVelocityJacobians* jac = nullptr);

struct PairJacobians {
  Jac<3> ori_i, ori_j;
};

/// h - R^SG_j R^GS_i h.
Vec3 hinge_residual(const SegmentState& seg_i, const SegmentState& seg_j, const Vec3& axis,
                    PairJacobians* jac = nullptr);

/// Hinge angle 2 acos([q^SG_j ⊙ q^GS_i]_w) in radians after sign
/// canonicalization and wrapping into [θ_min - π, θ_min + π).
double hinge_angle(const SegmentState& seg_i, const SegmentState& seg_j,
                   const JointSpec& joint);

struct RomJacobians {
  Eigen::RowVector3d ori_i, ori_j;
};

/// One-sided range-of-motion penalty in radians.
double rom_residual(const SegmentState& seg_i, const SegmentState& seg_j,
                    const JointSpec& joint, RomJacobians* jac = nullptr);

/// Capsule-surface position prior. Returns zero with `degenerate` set when
/// the radial direction is undefined.
Vec3 shape_pos_residual(const Vec3& cal_pos, const SegmentSpec& seg,
                        Mat3* jac = nullptr, bool* degenerate = nullptr);

struct ShapeOriJacobians {
  Eigen::Matrix<double, 2, 3> cal_ori, cal_pos;
};

/// Components of the IMU z-axis (in the segment frame) along the two surface
/// tangents at the IMU position.
Vec2 shape_ori_residual(const CalibrationEntry& cal, const SegmentSpec& seg,
                        ShapeOriJacobians* jac = nullptr, bool* degenerate = nullptr);

struct FixedJacobians {
  Jac<3> pos, ori;
};

/// p^G_fix - (S^G + R^GS p^S_fix).
Vec3 fixed_pos_residual(const SegmentState& seg, const FixedPointSpec& fp,
                        FixedJacobians* jac = nullptr);

/// 2 log(conj(q_anchor) ⊙ q_first).
Vec3 batch_init_residual(const Quat& q_first, const Quat& q_anchor, Mat3* jac = nullptr);

struct CalibSmoothJacobians {
  Jac<6> cal_ori, cal_pos;
};

/// [log(conj(q^SI_{b-1}) ⊙ q^SI_b); I^S_b - I^S_{b-1}] (half-angle log).
Vec6 calib_smoothness_residual(const CalibrationEntry& cal_b, const CalibrationEntry& cal_prev,
                               CalibSmoothJacobians* jac = nullptr);

}  // namespace selfcal

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

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace selfcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Hamilton, scalar-first unit quaternion. A quaternion q^AB rotates vectors
// expressed in frame B into frame A (passive convention): v^A = R(q^AB) v^B.
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

Quat quat_identity();
Quat quat_conj(const Quat& q);

// Hamilton product, renormalized.
Quat quat_mul(const Quat& a, const Quat& b);

// Returns the representative with w >= 0.
Quat quat_canonical(const Quat& q);

// exp(v) = [cos|v|, sin|v| v/|v|]. The argument is a half-angle vector:
// quat_exp(v) rotates by 2|v| about v.
Quat quat_exp(const Vec3& v);

// Inverse of quat_exp after canonicalizing to w >= 0, so |log(q)| <= pi/2.
Vec3 quat_log(const Quat& q);

// Full-angle rotation vector maps: rotvec_exp(phi) = quat_exp(phi / 2).
Quat rotvec_exp(const Vec3& phi);
Vec3 rotvec_log(const Quat& q);

Mat3 skew(const Vec3& v);
Mat3 quat_to_rotmat(const Quat& q);
Quat rotmat_to_quat(const Mat3& r);

Quat axis_angle(const Vec3& axis, double angle_rad);
Quat rot_x(double angle_rad);
Quat rot_y(double angle_rad);
Quat rot_z(double angle_rad);

// |2 acos([a ⊙ conj(b)]_w)| in degrees, in [0, 180].
double angular_offset_deg(const Quat& a, const Quat& b);

// Right-multiplied manifold retraction: q ⊙ Exp(delta), delta a rotation
// vector in the local frame of q.
Quat retract(const Quat& q, const Vec3& delta);

// SO(3) right Jacobian and its inverse for a rotation vector phi.
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inv(const Vec3& phi);
// Jl^{-1}(phi) = Jr^{-1}(phi)^T
Mat3 left_jacobian_inv(const Vec3& phi);

}  // namespace selfcal

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

#include "selfcal/so3.hpp"

#include <algorithm>
#include <cmath>

namespace selfcal {
namespace {

constexpr double kSmallAngle = 1e-8;

}  // namespace

Quat quat_identity() { return Quat::Identity(); }

Quat quat_conj(const Quat& q) { return q.conjugate(); }

Quat quat_mul(const Quat& a, const Quat& b) { return (a * b).normalized(); }

Quat quat_canonical(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Quat quat_exp(const Vec3& v) {
  const double n = v.norm();
  double c;
  double s;  // sin(n) / n
  if (n < kSmallAngle) {
    const double n2 = n * n;
    c = 1.0 - 0.5 * n2;
    s = 1.0 - n2 / 6.0;
  } else {
    c = std::cos(n);
    s = std::sin(n) / n;
  }
  Quat q(c, s * v.x(), s * v.y(), s * v.z());
  q.normalize();
  return q;
}

Vec3 quat_log(const Quat& q_in) {
  const Quat q = quat_canonical(q_in);
  const Vec3 v = q.vec();
  const double n = v.norm();
  const double w = q.w();
  if (n < kSmallAngle) {
    // atan(n / w) / n ~ (1 - n^2 / (3 w^2)) / w
    const double inv_w = 1.0 / w;
    return v * inv_w * (1.0 - n * n * inv_w * inv_w / 3.0);
  }
  return v * (std::atan2(n, w) / n);
}

Quat rotvec_exp(const Vec3& phi) { return quat_exp(0.5 * phi); }

Vec3 rotvec_log(const Quat& q) { return 2.0 * quat_log(q); }

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 quat_to_rotmat(const Quat& q) { return q.normalized().toRotationMatrix(); }

Quat rotmat_to_quat(const Mat3& r) { return quat_canonical(Quat(r).normalized()); }

Quat axis_angle(const Vec3& axis, double angle_rad) {
  return rotvec_exp(axis.normalized() * angle_rad);
}

Quat rot_x(double angle_rad) { return axis_angle(Vec3::UnitX(), angle_rad); }
Quat rot_y(double angle_rad) { return axis_angle(Vec3::UnitY(), angle_rad); }
Quat rot_z(double angle_rad) { return axis_angle(Vec3::UnitZ(), angle_rad); }

double angular_offset_deg(const Quat& a, const Quat& b) {
  const Quat d = quat_canonical(a.normalized() * b.normalized().conjugate());
  // atan2 keeps precision near zero where acos(w) does not.
  const double angle = 2.0 * std::atan2(d.vec().norm(), d.w());
  return std::abs(angle) * kRadToDeg;
}

Quat retract(const Quat& q, const Vec3& delta) {
  return quat_mul(q, rotvec_exp(delta));
}

Mat3 right_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < 1e-6) return Mat3::Identity() - 0.5 * k + k * k / 6.0;
  const double t2 = theta * theta;
  return Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * k +
         (theta - std::sin(theta)) / (t2 * theta) * k * k;
}

Mat3 right_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < 1e-6) return Mat3::Identity() + 0.5 * k + k * k / 12.0;
  const double coeff = 1.0 / (theta * theta) -
                       (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * k + coeff * k * k;
}

Mat3 left_jacobian_inv(const Vec3& phi) { return right_jacobian_inv(phi).transpose(); }

}  // namespace selfcal

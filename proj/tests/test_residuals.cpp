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

#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "selfcal/sim.hpp"

namespace selfcal {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kStep = 1e-6;
constexpr double kJacTol = 1e-5;

// Residual with variable `slot` moved by the tangent offset `d`.
using Perturbed = std::function<VectorXd(int slot, const Vec3& d)>;

MatrixXd numeric_jacobian(const Perturbed& f, int slot) {
  const VectorXd r0 = f(slot, Vec3::Zero());
  MatrixXd j(r0.size(), 3);
  for (int c = 0; c < 3; ++c) {
    const Vec3 d = kStep * Vec3::Unit(c);
    j.col(c) = (f(slot, d) - f(slot, -d)) / (2.0 * kStep);
  }
  return j;
}

double relative_error(const MatrixXd& analytic, const MatrixXd& numeric) {
  const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

struct Rng {
  std::mt19937 gen;
  explicit Rng(unsigned seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  Vec3 vec(double scale) { return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)); }
  Quat quat() { return rotvec_exp(vec(3.0)); }
  ImuState imu() { return {vec(1.0), vec(2.0), quat(), vec(3.0)}; }
  SegmentState seg() { return {vec(1.0), quat()}; }
  // Lateral capsule position off the axis.
  CalibrationEntry cal() {
    const double a = uniform(-kPi, kPi);
    const double r = uniform(0.05, 0.15);
    return {quat(), Vec3(r * std::cos(a), r * std::sin(a), uniform(0.02, 0.28))};
  }
};

void move(ImuState& s, int field, const Vec3& d) {
  switch (field) {
    case 0: s.position += d; break;
    case 1: s.velocity += d; break;
    case 2: s.orientation = retract(s.orientation, d); break;
    default: s.angular_velocity += d; break;
  }
}

void move(SegmentState& s, int field, const Vec3& d) {
  if (field == 0) {
    s.position += d;
  } else {
    s.orientation = retract(s.orientation, d);
  }
}

void move(CalibrationEntry& c, int field, const Vec3& d) {
  if (field == 0) {
    c.orientation = retract(c.orientation, d);
  } else {
    c.position += d;
  }
}

// Compares every analytic block against central differences.
void expect_jacobians(const Perturbed& f, const std::vector<MatrixXd>& analytic,
                      const std::string& what) {
  for (int k = 0; k < static_cast<int>(analytic.size()); ++k) {
    const MatrixXd fd = numeric_jacobian(f, k);
    EXPECT_LT(relative_error(analytic[k], fd), kJacTol) << what << " slot " << k << "\nanalytic\n"
                                                       << analytic[k] << "\nnumeric\n" << fd;
  }
}

TEST(ResidualJacobianTest, Motion) {
  Rng rng(11);
  WorldConfig world;
  world.sample_period = 0.02;
  for (int n = 0; n < 100; ++n) {
    const ImuState a = rng.imu();
    const ImuState b = rng.imu();
    const Vec3 acc = rng.vec(10.0);
    MotionJacobians j;
    motion_residual(a, b, acc, world, &j);
    // Slots: pos0 vel0 ori0 omega0 pos1 vel1 ori1.
    const Perturbed f = [&](int slot, const Vec3& d) {
      ImuState x = a;
      ImuState y = b;
      if (slot < 4) {
        move(x, slot, d);
      } else {
        move(y, slot - 4, d);
      }
      return VectorXd(motion_residual(x, y, acc, world));
    };
    expect_jacobians(f, {j.pos0, j.vel0, j.ori0, j.omega0, j.pos1, j.vel1, j.ori1}, "motion");
  }
}

TEST(ResidualJacobianTest, Coupling) {
  Rng rng(12);
  for (int n = 0; n < 100; ++n) {
    const ImuState imu = rng.imu();
    const SegmentState seg = rng.seg();
    const CalibrationEntry cal = rng.cal();
    CouplingJacobians j;
    i2s_coupling_residual(imu, seg, cal, &j);
    const Perturbed f = [&](int slot, const Vec3& d) {
      ImuState i = imu;
      SegmentState s = seg;
      CalibrationEntry c = cal;
      switch (slot) {
        case 0: move(i, 0, d); break;
        case 1: move(i, 2, d); break;
        case 2: move(s, 0, d); break;
        case 3: move(s, 1, d); break;
        case 4: move(c, 0, d); break;
        default: move(c, 1, d); break;
      }
      return VectorXd(i2s_coupling_residual(i, s, c));
    };
    expect_jacobians(f, {j.imu_pos, j.imu_ori, j.seg_pos, j.seg_ori, j.cal_ori, j.cal_pos},
                     "coupling");
  }
}

TEST(ResidualJacobianTest, JointVelocity) {
  Rng rng(13);
  const Vec3 segment_vector(0.0, 0.0, 0.3);
  for (int n = 0; n < 100; ++n) {
    const ImuState a = rng.imu();
    const ImuState b = rng.imu();
    const CalibrationEntry ca = rng.cal();
    const CalibrationEntry cb = rng.cal();
    JointVelocityJacobians j;
    joint_velocity_residual(a, b, ca, cb, segment_vector, &j);
    const Perturbed f = [&](int slot, const Vec3& d) {
      ImuState x = a;
      ImuState y = b;
      CalibrationEntry cx = ca;
      CalibrationEntry cy = cb;
      switch (slot) {
        case 0: move(x, 1, d); break;
        case 1: move(x, 2, d); break;
        case 2: move(x, 3, d); break;
        case 3: move(y, 1, d); break;
        case 4: move(y, 2, d); break;
        case 5: move(y, 3, d); break;
        case 6: move(cx, 0, d); break;
        case 7: move(cx, 1, d); break;
        case 8: move(cy, 0, d); break;
        default: move(cy, 1, d); break;
      }
      return VectorXd(joint_velocity_residual(x, y, cx, cy, segment_vector));
    };
    expect_jacobians(f,
                     {j.vel_i, j.ori_i, j.omega_i, j.vel_j, j.ori_j, j.omega_j, j.cal_ori_i,
                      j.cal_pos_i, j.cal_ori_j, j.cal_pos_j},
                     "joint velocity");
  }
}

TEST(ResidualJacobianTest, ConnectedSegments) {
  Rng rng(14);
  for (int n = 0; n < 100; ++n) {
    const SegmentState p = rng.seg();
    const SegmentState c = rng.seg();
    const Vec3 v = rng.vec(0.4);
    ConnectedJacobians j;
    connected_segments_constraint(p, c, v, &j);
    const Perturbed f = [&](int slot, const Vec3& d) {
      SegmentState x = p;
      SegmentState y = c;
      if (slot < 2) {
        move(x, slot, d);
      } else {
        move(y, 0, d);
      }
      return VectorXd(connected_segments_constraint(x, y, v));
    };
    expect_jacobians(f, {j.pos_parent, j.ori_parent, j.pos_child}, "connected");
  }
}

TEST(ResidualJacobianTest, HingeAndRom) {
  Rng rng(15);
  JointSpec joint;
  joint.kind = JointKind::kHinge;
  joint.rom_min_deg = 20.0;
  joint.rom_max_deg = 100.0;
  int rom_active = 0;
  for (int n = 0; n < 100; ++n) {
    const SegmentState a = rng.seg();
    const SegmentState b = rng.seg();
    const Vec3 axis = rng.vec(1.0).normalized();
    PairJacobians j;
    hinge_residual(a, b, axis, &j);
    const Perturbed f = [&](int slot, const Vec3& d) {
      SegmentState x = a;
      SegmentState y = b;
      move(slot == 0 ? x : y, 1, d);
      return VectorXd(hinge_residual(x, y, axis));
    };
    expect_jacobians(f, {j.ori_i, j.ori_j}, "hinge");

    RomJacobians rj;
    const double r = rom_residual(a, b, joint, &rj);
    if (r > 1e-4) ++rom_active;
    const Perturbed g = [&](int slot, const Vec3& d) {
      SegmentState x = a;
      SegmentState y = b;
      move(slot == 0 ? x : y, 1, d);
      return VectorXd::Constant(1, rom_residual(x, y, joint));
    };
    if (std::abs(hinge_angle(a, b, joint) - joint.rom_min_deg * kDegToRad) > 1e-4 &&
        std::abs(hinge_angle(a, b, joint) - joint.rom_max_deg * kDegToRad) > 1e-4) {
      expect_jacobians(g, {MatrixXd(rj.ori_i), MatrixXd(rj.ori_j)}, "rom");
    }
  }
  EXPECT_GT(rom_active, 10);
}

TEST(ResidualJacobianTest, ShapePriors) {
  Rng rng(16);
  const SegmentSpec seg{"S", Vec3(0.0, 0.05, 0.3), 0.09, 0.06};
  int checked = 0;
  for (int n = 0; n < 100; ++n) {
    CalibrationEntry cal = rng.cal();
    // Cover the caps as well as the lateral region.
    if (n % 4 == 1) cal.position = Vec3(0.0, 0.0, -0.05) + rng.vec(0.04);
    if (n % 4 == 2) cal.position = seg.segment_vector + Vec3(0.0, 0.0, 0.05) + rng.vec(0.04);
    const CapsuleRegion region = capsule_project(cal.position, seg).region;
    bool stencil_ok = true;
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = kStep * Vec3::Unit(c);
      stencil_ok = stencil_ok && capsule_project(cal.position + d, seg).region == region &&
                   capsule_project(cal.position - d, seg).region == region;
    }
    if (!stencil_ok) continue;
    ++checked;

    Mat3 jp;
    shape_pos_residual(cal.position, seg, &jp);
    const Perturbed f = [&](int, const Vec3& d) {
      return VectorXd(shape_pos_residual(cal.position + d, seg));
    };
    expect_jacobians(f, {jp}, "shape position");

    ShapeOriJacobians jo;
    shape_ori_residual(cal, seg, &jo);
    const Perturbed g = [&](int slot, const Vec3& d) {
      CalibrationEntry c = cal;
      move(c, slot, d);
      return VectorXd(shape_ori_residual(c, seg));
    };
    expect_jacobians(g, {jo.cal_ori, jo.cal_pos}, "shape orientation");
  }
  EXPECT_GT(checked, 90);
}

TEST(ResidualJacobianTest, FixedInitAndSmoothness) {
  Rng rng(17);
  for (int n = 0; n < 100; ++n) {
    const SegmentState s = rng.seg();
    const FixedPointSpec fp{0, rng.vec(0.3), rng.vec(0.3)};
    FixedJacobians jf;
    fixed_pos_residual(s, fp, &jf);
    const Perturbed f = [&](int slot, const Vec3& d) {
      SegmentState x = s;
      move(x, slot, d);
      return VectorXd(fixed_pos_residual(x, fp));
    };
    expect_jacobians(f, {jf.pos, jf.ori}, "fixed position");

    const Quat q = rng.quat();
    const Quat anchor = retract(q, rng.vec(1.0));
    Mat3 ji;
    batch_init_residual(q, anchor, &ji);
    const Perturbed g = [&](int, const Vec3& d) {
      return VectorXd(batch_init_residual(retract(q, d), anchor));
    };
    expect_jacobians(g, {ji}, "batch init");

    const CalibrationEntry cb = rng.cal();
    CalibrationEntry prev = cb;
    prev.orientation = retract(cb.orientation, rng.vec(1.0));
    prev.position += rng.vec(0.05);
    CalibSmoothJacobians jc;
    calib_smoothness_residual(cb, prev, &jc);
    const Perturbed h = [&](int slot, const Vec3& d) {
      CalibrationEntry c = cb;
      move(c, slot, d);
      return VectorXd(calib_smoothness_residual(c, prev));
    };
    expect_jacobians(h, {jc.cal_ori, jc.cal_pos}, "calibration smoothness");
  }
}

TEST(MotionResidualTest, StaticEquilibrium) {
  WorldConfig world;
  ImuState s;
  EXPECT_LT(motion_residual(s, s, -world.gravity, world).norm(), 1e-15);
}

TEST(MotionResidualTest, FreeFall) {
  WorldConfig world;
  ImuState a;
  a.velocity = Vec3(0.3, 0.0, -1.0);
  ImuState b = a;
  b.velocity = a.velocity + world.sample_period * world.gravity;
  b.position = a.position + world.sample_period * a.velocity +
               0.5 * world.sample_period * world.sample_period * world.gravity;
  const Vec9 r = motion_residual(a, b, Vec3::Zero(), world);
  EXPECT_LT(r.segment<3>(3).norm(), 1e-12);
  EXPECT_LT(r.norm(), 1e-12);
}

TEST(MotionResidualTest, PositionJacobianIsScaledRotation) {
  Rng rng(18);
  WorldConfig world;
  MotionJacobians j;
  const ImuState a = rng.imu();
  motion_residual(a, rng.imu(), rng.vec(5.0), world, &j);
  // The position row is in IMU-frame acceleration units.
  const double s = 2.0 / (world.sample_period * world.sample_period);
  const Mat3 rt = quat_to_rotmat(a.orientation).transpose();
  EXPECT_LT((j.pos0.topRows<3>() - s * rt).norm(), 1e-6);
  EXPECT_LT((j.pos1.topRows<3>() + s * rt).norm(), 1e-6);
}

TEST(GyroResidualTest, Examples) {
  ImuState s;
  s.angular_velocity = Vec3(0.1, 0.2, 0.3);
  EXPECT_LT(gyro_residual(s, s.angular_velocity).norm(), 1e-15);
  s.angular_velocity.setZero();
  EXPECT_LT((gyro_residual(s, Vec3(0.1, 0, 0)) - Vec3(0.1, 0, 0)).norm(), 1e-15);
}

TEST(ConnectedSegmentsTest, Examples) {
  const Vec3 v(0.0, 0.0, 0.3);
  SegmentState parent;
  SegmentState child{Vec3(0.0, 0.0, 0.3), Quat::Identity()};
  EXPECT_LT(connected_segments_constraint(parent, child, v).norm(), 1e-15);
  child.position = Vec3(0.0, 0.01, 0.3);
  EXPECT_LT((connected_segments_constraint(parent, child, v) - Vec3(0, 0.01, 0)).norm(), 1e-15);
  parent.orientation = rot_x(0.7);
  child.position = quat_to_rotmat(parent.orientation) * v;
  EXPECT_LT(connected_segments_constraint(parent, child, v).norm(), 1e-15);
}

TEST(CouplingResidualTest, Examples) {
  Rng rng(19);
  const SegmentState seg = rng.seg();
  const CalibrationEntry cal = rng.cal();
  ImuState imu;
  imu.orientation = quat_mul(seg.orientation, cal.orientation);
  imu.position = seg.position + quat_to_rotmat(seg.orientation) * cal.position;
  EXPECT_LT(i2s_coupling_residual(imu, seg, cal).norm(), 1e-14);

  CalibrationEntry rotated = cal;
  rotated.orientation = quat_mul(cal.orientation, rot_z(10.0 * kDegToRad));
  EXPECT_NEAR(i2s_coupling_residual(imu, seg, rotated).head<3>().norm(), 10.0 * kDegToRad, 1e-9);

  CalibrationEntry shifted = cal;
  shifted.position.x() -= 0.01;
  EXPECT_LT((i2s_coupling_residual(imu, seg, shifted).tail<3>() - Vec3(0.01, 0, 0)).norm(), 1e-14);
}

TEST(JointVelocityResidualTest, Stationary) {
  Rng rng(20);
  ImuState a;
  a.orientation = rng.quat();
  ImuState b;
  b.orientation = rng.quat();
  EXPECT_LT(joint_velocity_residual(a, b, rng.cal(), rng.cal(), Vec3(0, 0, 0.3)).norm(), 1e-15);
}

// Two rigid segments about fixed joints with exact instantaneous kinematics.
TEST(JointVelocityResidualTest, RigidChainKinematics) {
  Rng rng(21);
  const Vec3 p(0.0, 0.0, 0.3);
  for (int n = 0; n < 50; ++n) {
    const SegmentState s0{Vec3::Zero(), rng.quat()};
    const Vec3 w0 = rng.vec(2.0);  // world frame
    const SegmentState s1{quat_to_rotmat(s0.orientation) * p, rng.quat()};
    const Vec3 w1 = rng.vec(2.0);
    const CalibrationEntry c0 = rng.cal();
    const CalibrationEntry c1 = rng.cal();
    auto imu_state = [](const SegmentState& s, const CalibrationEntry& c, const Vec3& w,
                        const Vec3& joint_pos, const Vec3& joint_vel) {
      ImuState i;
      i.orientation = quat_mul(s.orientation, c.orientation);
      i.position = s.position + quat_to_rotmat(s.orientation) * c.position;
      i.velocity = joint_vel + w.cross(i.position - joint_pos);
      i.angular_velocity = quat_to_rotmat(i.orientation).transpose() * w;
      return i;
    };
    const ImuState i0 = imu_state(s0, c0, w0, Vec3::Zero(), Vec3::Zero());
    const Vec3 joint_vel = w0.cross(s1.position);
    const ImuState i1 = imu_state(s1, c1, w1, s1.position, joint_vel);
    EXPECT_LT(joint_velocity_residual(i0, i1, c0, c1, p).norm(), 1e-12);

    // A displaced child IMU position gives an ω × displacement mismatch.
    CalibrationEntry moved = c1;
    const Vec3 disp(0.05, 0.0, 0.0);
    moved.position += disp;
    const Vec3 r = joint_velocity_residual(i0, i1, c0, moved, p);
    const Vec3 expected = quat_to_rotmat(i0.orientation).transpose() *
                          w1.cross(quat_to_rotmat(s1.orientation) * disp);
    EXPECT_LT((r - expected).norm(), 1e-12);
  }
}

TEST(HingeResidualTest, Examples) {
  Rng rng(22);
  const Vec3 h = Vec3::UnitX();
  const SegmentState a{Vec3::Zero(), rng.quat()};
  EXPECT_LT(hinge_residual(a, a, h).norm(), 1e-15);
  for (int k = 0; k < 50; ++k) {
    const SegmentState b{Vec3::Zero(), quat_mul(a.orientation, rot_x(rng.uniform(-3, 3)))};
    EXPECT_LT(hinge_residual(a, b, h).norm(), 1e-12);
  }
  const SegmentState c{Vec3::Zero(), quat_mul(a.orientation, rot_y(kPi / 2))};
  EXPECT_NEAR(hinge_residual(a, c, h).norm(), std::sqrt(2.0), 1e-9);
}

TEST(RomResidualTest, Examples) {
  JointSpec joint;
  joint.kind = JointKind::kHinge;
  joint.rom_min_deg = 0.0;
  joint.rom_max_deg = 162.0;
  const SegmentState a{Vec3::Zero(), Quat::Identity()};
  auto at = [&](double deg) {
    return rom_residual(a, {Vec3::Zero(), rot_x(deg * kDegToRad)}, joint);
  };
  EXPECT_NEAR(at(80.0), 0.0, 1e-15);
  EXPECT_NEAR(at(170.0), 8.0 * kDegToRad, 1e-9);
  EXPECT_NEAR(at(0.0), 0.0, 1e-15);
}

TEST(RomResidualTest, ContinuousAcrossBounds) {
  JointSpec joint;
  joint.kind = JointKind::kHinge;
  joint.rom_min_deg = 30.0;
  joint.rom_max_deg = 120.0;
  const SegmentState a{Vec3::Zero(), rot_y(0.2)};
  double prev = 0.0;
  bool first = true;
  for (double deg = 0.5; deg < 179.5; deg += 0.01) {
    const SegmentState b{Vec3::Zero(), quat_mul(a.orientation, rot_x(deg * kDegToRad))};
    const double r = rom_residual(a, b, joint);
    if (!first) EXPECT_LT(std::abs(r - prev), 0.011 * kDegToRad) << deg;
    prev = r;
    first = false;
  }
}

TEST(ShapeResidualTest, PositionExamples) {
  const SegmentSpec seg{"S", Vec3(0, 0, 0.3), 0.1, 0.1};
  EXPECT_LT(shape_pos_residual(Vec3(0.1, 0, 0.15), seg).norm(), 1e-15);
  const Vec3 r = shape_pos_residual(Vec3(0.12, 0, 0.15), seg);
  EXPECT_LT((r - Vec3(0.02, 0, 0)).norm(), 1e-15);
  EXPECT_LT(shape_pos_residual(Vec3(0, 0, -0.1), seg).norm(), 1e-15);
  bool degenerate = false;
  EXPECT_LT(shape_pos_residual(Vec3(0, 0, 0.1), seg, nullptr, &degenerate).norm(), 1e-15);
  EXPECT_TRUE(degenerate);
}

TEST(ShapeResidualTest, OrientationExamples) {
  const SegmentSpec seg{"S", Vec3(0, 0, 0.3), 0.1, 0.1};
  // Position on +x: normal x, tangent1 along z.
  auto with_z = [](const Vec3& z) {
    const Vec3 zn = z.normalized();
    const Vec3 x = (std::abs(zn.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitX()).cross(zn).normalized();
    Mat3 r;
    r << x, zn.cross(x), zn;
    return CalibrationEntry{rotmat_to_quat(r), Vec3(0.1, 0, 0.15)};
  };
  const SurfaceFrame f = surface_frame(Vec3(0.1, 0, 0.15), seg);
  EXPECT_LT(shape_ori_residual(with_z(f.normal), seg).norm(), 1e-12);
  EXPECT_LT((shape_ori_residual(with_z(f.tangent1), seg) - Vec2(1, 0)).norm(), 1e-12);
  const Vec2 r = shape_ori_residual(with_z(f.normal + f.tangent1), seg);
  EXPECT_NEAR(r.x(), std::sqrt(0.5), 1e-9);
  EXPECT_NEAR(r.y(), 0.0, 1e-12);
}

TEST(FixedPositionTest, Examples) {
  const FixedPointSpec fp{0, Vec3::Zero(), Vec3::Zero()};
  SegmentState s;
  EXPECT_LT(fixed_pos_residual(s, fp).norm(), 1e-15);
  s.position = Vec3(0, 0, 0.01);
  EXPECT_LT((fixed_pos_residual(s, fp) - Vec3(0, 0, -0.01)).norm(), 1e-15);
  s.position.setZero();
  s.orientation = rot_y(1.0);
  EXPECT_LT(fixed_pos_residual(s, fp).norm(), 1e-15);
}

TEST(PriorResidualTest, BatchInit) {
  const Quat a = rot_x(0.4);
  EXPECT_LT(batch_init_residual(a, a).norm(), 1e-15);
  const Vec3 r = batch_init_residual(quat_mul(a, rot_z(10.0 * kDegToRad)), a);
  EXPECT_LT((r - Vec3(0, 0, 10.0 * kDegToRad)).norm(), 1e-9);
}

TEST(PriorResidualTest, CalibrationSmoothnessUsesHalfAngle) {
  const CalibrationEntry c{rot_y(0.3), Vec3(0.1, 0, 0.1)};
  EXPECT_LT(calib_smoothness_residual(c, c).norm(), 1e-15);
  CalibrationEntry moved = c;
  moved.position.y() += 0.002;
  EXPECT_NEAR(calib_smoothness_residual(moved, c).tail<3>().norm(), 0.002, 1e-15);
  CalibrationEntry turned = c;
  turned.orientation = quat_mul(c.orientation, rot_x(5.0 * kDegToRad));
  const Vec6 r = calib_smoothness_residual(turned, c);
  EXPECT_NEAR(r(0), 2.5 * kDegToRad, 1e-12);
  EXPECT_NEAR(2.0 * r.head<3>().norm(), 5.0 * kDegToRad, 1e-12);
}

TEST(WeightingTest, SqrtInformation) {
  Mat3 cov;
  cov << 2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5;
  const MatrixXd s = sqrt_information(cov);
  EXPECT_LT((s.transpose() * s - cov.inverse()).norm(), 1e-12);
  const Vec3 r(0.3, -0.2, 0.5);
  // Doubling the covariance halves the weighted cost.
  const double c1 = (s * r).squaredNorm();
  const double c2 = (sqrt_information(2.0 * cov) * r).squaredNorm();
  EXPECT_NEAR(c2, 0.5 * c1, 1e-14);
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = -1.0;
  EXPECT_THROW(sqrt_information(bad), std::invalid_argument);
}

}  // namespace
}  // namespace selfcal

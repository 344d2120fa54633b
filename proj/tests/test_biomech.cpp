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

#include <random>

#include <gtest/gtest.h>

#include "selfcal/residuals.hpp"
#include "selfcal/sim.hpp"

namespace selfcal {
namespace {

SegmentSpec straight(double length = 0.3, double rp = 0.1, double rd = 0.1) {
  return {"S", Vec3(0.0, 0.0, length), rp, rd};
}

TEST(CapsuleTest, ProjectLateral) {
  const CapsuleProjection p = capsule_project(Vec3(0.1, 0.0, 0.15), straight());
  EXPECT_NEAR(p.pr, 0.15, 1e-15);
  EXPECT_LT((p.orthogonal - Vec3(0.1, 0.0, 0.0)).norm(), 1e-15);
  EXPECT_EQ(p.region, CapsuleRegion::kLateral);
  EXPECT_FALSE(p.degenerate);
}

TEST(CapsuleTest, ProjectCaps) {
  const CapsuleProjection below = capsule_project(Vec3(0.0, 0.0, -0.05), straight());
  EXPECT_NEAR(below.pr, -0.05, 1e-15);
  EXPECT_EQ(below.region, CapsuleRegion::kBelowProximal);
  const CapsuleProjection beyond = capsule_project(Vec3(0.0, 0.0, 0.35), straight());
  EXPECT_NEAR(beyond.pr, 0.35, 1e-15);
  EXPECT_EQ(beyond.region, CapsuleRegion::kBeyondDistal);
}

TEST(CapsuleTest, ProjectionReconstructs) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const SegmentSpec seg{"S", Vec3(0.05, -0.1, 0.25), 0.08, 0.05};
  for (int k = 0; k < 200; ++k) {
    const Vec3 p(u(rng), u(rng), u(rng) + 0.15);
    const CapsuleProjection c = capsule_project(p, seg);
    const Vec3 rebuilt = c.pr / seg.length() * seg.segment_vector + c.orthogonal;
    EXPECT_LT((rebuilt - p).norm(), 1e-12);
  }
}

TEST(CapsuleTest, RadiusInterpolation) {
  const SegmentSpec seg = straight(0.4, 0.074, 0.049);
  EXPECT_NEAR(capsule_radius_at(0.0, seg), 0.074, 1e-15);
  EXPECT_NEAR(capsule_radius_at(0.4, seg), 0.049, 1e-15);
  EXPECT_NEAR(capsule_radius_at(0.2, seg), 0.0615, 1e-12);
  EXPECT_THROW(capsule_radius_at(-0.01, seg), std::domain_error);
  EXPECT_THROW(capsule_radius_at(0.41, seg), std::domain_error);
}

TEST(CapsuleTest, SurfaceFrameExamples) {
  const SurfaceFrame f = surface_frame(Vec3(0.1, 0.0, 0.15), straight());
  EXPECT_LT((f.normal - Vec3::UnitX()).norm(), 1e-12);
  EXPECT_NEAR(std::abs(f.tangent1.dot(Vec3::UnitZ())), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(f.tangent2.dot(Vec3::UnitY())), 1.0, 1e-12);
  EXPECT_LT((surface_frame(Vec3(0.0, 0.1, 0.1), straight()).normal - Vec3::UnitY()).norm(), 1e-12);
  EXPECT_LT((surface_frame(Vec3(0.0, 0.0, -0.05), straight()).normal + Vec3::UnitZ()).norm(),
            1e-12);
  EXPECT_THROW(surface_frame(Vec3(0.0, 0.0, 0.1), straight()), std::invalid_argument);
}

TEST(CapsuleTest, SurfaceFrameIsRightHandedOrthonormal) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const SegmentSpec seg{"S", Vec3(0.0, 0.1, 0.3), 0.1, 0.06};
  for (int k = 0; k < 300; ++k) {
    const Vec3 p(u(rng), u(rng), u(rng) + 0.15);
    if (capsule_project(p, seg).degenerate) continue;
    const SurfaceFrame f = surface_frame(p, seg);
    Mat3 m;
    m << f.normal, f.tangent1, f.tangent2;
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).norm(), 1e-9);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-9);
  }
}

TEST(CapsuleTest, SurfaceFrameJacobianMatchesFiniteDifferences) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  const SegmentSpec seg{"S", Vec3(0.0, 0.0, 0.3), 0.1, 0.07};
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const Vec3 p(u(rng), u(rng), u(rng) + 0.15);
    if (capsule_project(p, seg).orthogonal.norm() < 0.02) continue;
    SurfaceFrameJacobian jac;
    surface_frame(p, seg, &jac);
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = h * Vec3::Unit(c);
      const SurfaceFrame fp = surface_frame(p + d, seg);
      const SurfaceFrame fm = surface_frame(p - d, seg);
      // Skip samples whose stencil crosses a region boundary.
      if (capsule_project(p + d, seg).region != capsule_project(p - d, seg).region) continue;
      EXPECT_LT(((fp.normal - fm.normal) / (2 * h) - jac.d_normal.col(c)).norm(), 1e-5);
      EXPECT_LT(((fp.tangent1 - fm.tangent1) / (2 * h) - jac.d_tangent1.col(c)).norm(), 1e-5);
      EXPECT_LT(((fp.tangent2 - fm.tangent2) / (2 * h) - jac.d_tangent2.col(c)).norm(), 1e-5);
    }
  }
}

TEST(CapsuleTest, OnSurfacePointHasZeroShapeResidual) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> along(0.01, 0.29);
  const SegmentSpec seg = straight(0.3, 0.09, 0.06);
  for (int k = 0; k < 100; ++k) {
    const double pr = along(rng);
    const double a = angle(rng);
    const Vec3 p = capsule_radius_at(pr, seg) * Vec3(std::cos(a), std::sin(a), 0.0) +
                   Vec3(0.0, 0.0, pr);
    EXPECT_LT(shape_pos_residual(p, seg).norm(), 1e-12);
  }
}

TEST(ModelTest, TwoSegmentModelIsValid) {
  EXPECT_TRUE(validate_model(two_segment_model()).empty());
}

TEST(ModelTest, ZeroHingeAxisIsOneViolation) {
  BodyModel m = two_segment_model();
  m.joints[1].hinge_axis = Vec3::Zero();
  EXPECT_EQ(validate_model(m).size(), 1u);
}

TEST(ModelTest, UnknownImuSegmentIsOneViolation) {
  BodyModel m = two_segment_model();
  m.imus[1].segment = 7;
  EXPECT_EQ(validate_model(m).size(), 1u);
}

TEST(ModelTest, DetectsStructuralProblems) {
  BodyModel two_imus = two_segment_model();
  two_imus.imus.push_back({"I2", 0});
  EXPECT_FALSE(validate_model(two_imus).empty());

  BodyModel detached = two_segment_model();
  detached.joints.pop_back();
  EXPECT_FALSE(validate_model(detached).empty());

  BodyModel bad_rom = two_segment_model();
  bad_rom.joints[1].rom_min_deg = 170.0;
  EXPECT_FALSE(validate_model(bad_rom).empty());

  BodyModel bad_radius = two_segment_model();
  bad_radius.segments[0].proximal_radius = 0.0;
  EXPECT_FALSE(validate_model(bad_radius).empty());
}

TEST(ModelTest, Lookups) {
  const BodyModel m = two_segment_model();
  EXPECT_EQ(m.segment_index("S1"), 1);
  EXPECT_EQ(m.segment_index("nope"), -1);
  EXPECT_EQ(m.imu_on_segment(0), 0);
  EXPECT_EQ(m.imu_on_segment(5), -1);
}

}  // namespace
}  // namespace selfcal

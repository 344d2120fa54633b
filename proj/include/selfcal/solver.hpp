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

// Per-batch constrained weighted least squares.
//
// A batch holds w time steps of IMU kinematics (position, velocity,
// orientation, angular velocity) and segment poses, plus one I2S calibration
// per IMU. Every variable is a "slot" with a 3-dimensional tangent space, so
// the tangent offset of slot k is 3k.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "selfcal/biomech.hpp"
#include "selfcal/residuals.hpp"

namespace selfcal {

enum class BlockKind {
  kMotion,
  kGyro,
  kCoupling,
  kJointVelocity,
  kHinge,
  kRom,
  kFixed,
  kBatchInit,
  kCalibSmooth,
  kShapePos,
  kShapeOri,
  kConnected,
};
inline constexpr int kNumBlockKinds = 12;

const char* block_kind_name(BlockKind kind);

enum class SlotField { kImuPos, kImuVel, kImuOri, kImuOmega, kSegPos, kSegOri, kCalOri, kCalPos };

struct SlotInfo {
  SlotField field;
  int t = -1;      // -1 for calibration slots
  int entity = 0;  // IMU or segment index
};

struct BatchLayout {
  int window = 0;
  int num_imus = 0;
  int num_segments = 0;

  int slots_per_step() const { return 4 * num_imus + 2 * num_segments; }
  int num_slots() const { return window * slots_per_step() + 2 * num_imus; }
  int tangent_dim() const { return 3 * num_slots(); }

  int imu_pos(int t, int i) const { return t * slots_per_step() + 4 * i; }
  int imu_vel(int t, int i) const { return imu_pos(t, i) + 1; }
  int imu_ori(int t, int i) const { return imu_pos(t, i) + 2; }
  int imu_omega(int t, int i) const { return imu_pos(t, i) + 3; }
  int seg_pos(int t, int s) const { return t * slots_per_step() + 4 * num_imus + 2 * s; }
  int seg_ori(int t, int s) const { return seg_pos(t, s) + 1; }
  int cal_ori(int i) const { return window * slots_per_step() + 2 * i; }
  int cal_pos(int i) const { return cal_ori(i) + 1; }

  SlotInfo decode(int slot) const;
};

/// Values of all variables of one batch.
struct BatchValues {
  BatchLayout layout;
  std::vector<ImuState> imu;      // index t * num_imus + i
  std::vector<SegmentState> seg;  // index t * num_segments + s
  I2SCalibration calib;

  static BatchValues zeros(const BatchLayout& layout);

  ImuState& imu_at(int t, int i) { return imu[t * layout.num_imus + i]; }
  const ImuState& imu_at(int t, int i) const { return imu[t * layout.num_imus + i]; }
  SegmentState& seg_at(int t, int s) { return seg[t * layout.num_segments + s]; }
  const SegmentState& seg_at(int t, int s) const { return seg[t * layout.num_segments + s]; }

  // x ⊕ delta, delta of size layout.tangent_dim().
  void retract(const Eigen::VectorXd& delta);
  // Perturbs one slot by a 3-vector.
  void retract_slot(int slot, const Vec3& delta);
};

/// One term of the batch objective, or a hard constraint.
struct ResidualBlock {
  using Evaluator = std::function<Eigen::VectorXd(const BatchValues&,
                                                  std::vector<Eigen::MatrixXd>*)>;
  BlockKind kind = BlockKind::kMotion;
  int t = -1;  // time step within the batch, -1 for time-independent terms
  int a = -1;  // primary entity (IMU, joint or fixed point index)
  int dim = 0;
  std::vector<int> slots;
  Eigen::MatrixXd sqrt_info;  // Σ^{-1/2}, identity for hard constraints
  bool hard_constraint = false;
  // Returns the raw residual; fills one dim x 3 Jacobian per slot on request.
  Evaluator evaluate;
};

/// Which optional model terms enter the problem (connected segments, hinge
/// with range of motion, joint velocity, body shape).
struct TermMask {
  bool connected = true;
  bool hinge = true;
  bool velocity = true;
  bool shape = true;

  static TermMask parse(const std::string& spec);  // e.g. "c+h+v+s"
  std::string to_string() const;
};

struct BatchPriors {
  int batch_index = 0;
  std::vector<Quat> orientation_anchors;              // one per IMU
  // Required for b > 0. At b = 0 it optionally ties the calibration to its
  // initial value.
  std::optional<I2SCalibration> previous_calibration;
};

struct BatchProblem {
  BatchLayout layout;
  std::vector<ResidualBlock> blocks;       // soft terms
  std::vector<ResidualBlock> constraints;  // hard equality constraints

  int count(BlockKind kind) const;
};

/// Assembles all terms of one batch. `samples[i]` holds the w samples of
/// IMU i. Throws std::invalid_argument on a malformed model or inputs.
BatchProblem build_problem(const BodyModel& model,
                           std::span<const std::vector<ImuSample>> samples,
                           const BatchPriors& priors, const NoiseConfig& noise,
                           const TermMask& mask = {});

enum class SolverMode { kHardGaussNewton, kSoftLevenbergMarquardt };

struct SolverConfig {
  SolverMode mode = SolverMode::kHardGaussNewton;
  int max_iterations = 50;
  double objective_tolerance = 1e-9;
  double constraint_tolerance = 1e-8;
  double lm_initial_damping = 1e-4;
  double lm_damping_scale = 10.0;
  double soft_constraint_variance = 1e-6;
};

struct SolveReport {
  int iterations = 0;
  double initial_objective = 0.0;
  double objective = 0.0;
  double max_constraint_violation = 0.0;
  std::vector<double> block_norms;  // weighted norm per soft block
  std::vector<double> objective_trace;
  bool converged = false;
  bool rank_deficient = false;
  std::string message;
};

/// Normal equations J^T W J, J^T W r of the soft terms plus the constraint
/// Jacobian and values.
struct LinearSystem {
  Eigen::SparseMatrix<double> hessian;
  Eigen::VectorXd gradient;
  Eigen::SparseMatrix<double> constraint_jacobian;
  Eigen::VectorXd constraint_value;
  double objective = 0.0;  // sum of squared weighted residuals
};

/// Throws std::runtime_error naming the offending block on non-finite
/// residuals.
LinearSystem linearize(const BatchProblem& problem, const BatchValues& x);

/// Weighted objective sum |Σ^{-1/2} r|^2 over the soft blocks.
double objective(const BatchProblem& problem, const BatchValues& x);
double max_constraint_violation(const BatchProblem& problem, const BatchValues& x);

std::pair<BatchValues, SolveReport> solve(const BatchProblem& problem, const BatchValues& x0,
                                          const SolverConfig& config);

}  // namespace selfcal

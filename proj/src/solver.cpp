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

#include "selfcal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace selfcal {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

MatrixXd block_diag(std::initializer_list<const MatrixXd*> parts) {
  int n = 0;
  for (const auto* p : parts) n += static_cast<int>(p->rows());
  MatrixXd out = MatrixXd::Zero(n, n);
  int o = 0;
  for (const auto* p : parts) {
    out.block(o, o, p->rows(), p->cols()) = *p;
    o += static_cast<int>(p->rows());
  }
  return out;
}

void warn_degenerate_shape() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    std::cerr << "selfcal: warning: IMU position on the segment axis, shape prior "
                 "disabled for this evaluation\n";
  });
}

template <typename Derived>
void push_jac(std::vector<MatrixXd>* jac, const Eigen::MatrixBase<Derived>& m) {
  jac->emplace_back(m);
}

}  // namespace

const char* block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::kMotion: return "motion";
    case BlockKind::kGyro: return "gyro";
    case BlockKind::kCoupling: return "coupling";
    case BlockKind::kJointVelocity: return "joint_velocity";
    case BlockKind::kHinge: return "hinge";
    case BlockKind::kRom: return "rom";
    case BlockKind::kFixed: return "fixed_position";
    case BlockKind::kBatchInit: return "batch_init";
    case BlockKind::kCalibSmooth: return "calib_smoothness";
    case BlockKind::kShapePos: return "shape_position";
    case BlockKind::kShapeOri: return "shape_orientation";
    case BlockKind::kConnected: return "connected_segments";
  }
  return "unknown";
}

SlotInfo BatchLayout::decode(int slot) const {
  const int per_step = slots_per_step();
  if (slot >= window * per_step) {
    const int k = slot - window * per_step;
    return {k % 2 == 0 ? SlotField::kCalOri : SlotField::kCalPos, -1, k / 2};
  }
  const int t = slot / per_step;
  const int k = slot % per_step;
  if (k < 4 * num_imus) {
    static constexpr SlotField kImuFields[] = {SlotField::kImuPos, SlotField::kImuVel,
                                               SlotField::kImuOri, SlotField::kImuOmega};
    return {kImuFields[k % 4], t, k / 4};
  }
  const int s = k - 4 * num_imus;
  return {s % 2 == 0 ? SlotField::kSegPos : SlotField::kSegOri, t, s / 2};
}

BatchValues BatchValues::zeros(const BatchLayout& layout) {
  BatchValues v;
  v.layout = layout;
  v.imu.assign(static_cast<size_t>(layout.window) * layout.num_imus, ImuState{});
  v.seg.assign(static_cast<size_t>(layout.window) * layout.num_segments, SegmentState{});
  v.calib.assign(layout.num_imus, CalibrationEntry{});
  return v;
}

void BatchValues::retract_slot(int slot, const Vec3& d) {
  const SlotInfo info = layout.decode(slot);
  switch (info.field) {
    case SlotField::kImuPos: imu_at(info.t, info.entity).position += d; break;
    case SlotField::kImuVel: imu_at(info.t, info.entity).velocity += d; break;
    case SlotField::kImuOmega: imu_at(info.t, info.entity).angular_velocity += d; break;
    case SlotField::kImuOri: {
      auto& q = imu_at(info.t, info.entity).orientation;
      q = selfcal::retract(q, d);
      break;
    }
    case SlotField::kSegPos: seg_at(info.t, info.entity).position += d; break;
    case SlotField::kSegOri: {
      auto& q = seg_at(info.t, info.entity).orientation;
      q = selfcal::retract(q, d);
      break;
    }
    case SlotField::kCalOri: {
      auto& q = calib[info.entity].orientation;
      q = selfcal::retract(q, d);
      break;
    }
    case SlotField::kCalPos: calib[info.entity].position += d; break;
  }
}

void BatchValues::retract(const VectorXd& delta) {
  const int n = layout.num_slots();
  for (int k = 0; k < n; ++k) retract_slot(k, delta.segment<3>(3 * k));
}

TermMask TermMask::parse(const std::string& spec) {
  TermMask m{false, false, false, false};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, '+')) {
    if (item == "c") {
      m.connected = true;
    } else if (item == "h") {
      m.hinge = true;
    } else if (item == "v") {
      m.velocity = true;
    } else if (item == "s") {
      m.shape = true;
    } else {
      throw std::invalid_argument("unknown term '" + item + "' in mask '" + spec + "'");
    }
  }
  return m;
}

std::string TermMask::to_string() const {
  std::string s;
  auto add = [&](bool on, const char* tag) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += tag;
  };
  add(connected, "c");
  add(hinge, "h");
  add(velocity, "v");
  add(shape, "s");
  return s;
}

int BatchProblem::count(BlockKind kind) const {
  const auto& list = kind == BlockKind::kConnected ? constraints : blocks;
  return static_cast<int>(
      std::count_if(list.begin(), list.end(), [&](const auto& b) { return b.kind == kind; }));
}

BatchProblem build_problem(const BodyModel& model,
                           std::span<const std::vector<ImuSample>> samples,
                           const BatchPriors& priors, const NoiseConfig& noise,
                           const TermMask& mask) {
  const auto violations = validate_model(model);
  if (!violations.empty()) {
    throw std::invalid_argument("invalid body model: " + violations.front());
  }
  const int n_imu = static_cast<int>(model.imus.size());
  const int n_seg = static_cast<int>(model.segments.size());
  if (static_cast<int>(samples.size()) != n_imu) {
    throw std::invalid_argument("expected one sample stream per IMU");
  }
  const int w = n_imu > 0 ? static_cast<int>(samples[0].size()) : 0;
  if (w < 2) throw std::invalid_argument("a batch needs at least two samples per IMU");
  for (int i = 0; i < n_imu; ++i) {
    if (static_cast<int>(samples[i].size()) != w) {
      throw std::invalid_argument("missing samples for IMU " + model.imus[i].name);
    }
  }
  if (static_cast<int>(priors.orientation_anchors.size()) != n_imu) {
    throw std::invalid_argument("expected one orientation anchor per IMU");
  }
  if (priors.batch_index > 0 && !priors.previous_calibration) {
    throw std::invalid_argument("batches after the first need the previous calibration");
  }
  if (priors.previous_calibration && static_cast<int>(priors.previous_calibration->size()) != n_imu) {
    throw std::invalid_argument("previous calibration needs one entry per IMU");
  }

  BatchProblem p;
  p.layout = {w, n_imu, n_seg};
  const BatchLayout L = p.layout;
  const WorldConfig world = model.world;

  const MatrixXd w_motion = block_diag({&noise.motion_position, &noise.motion_velocity,
                                        &noise.motion_orientation});
  const MatrixXd si_motion = sqrt_information(w_motion);
  const MatrixXd si_gyro = sqrt_information(noise.gyroscope);
  const MatrixXd si_coupling =
      sqrt_information(block_diag({&noise.coupling_orientation, &noise.coupling_position}));
  const MatrixXd si_jv = sqrt_information(noise.joint_velocity);
  const MatrixXd si_hinge = sqrt_information(noise.hinge);
  const MatrixXd si_rom = sqrt_information(noise.rom);
  const MatrixXd si_fixed = sqrt_information(noise.fixed_position);
  const MatrixXd si_init = sqrt_information(noise.batch_init);
  const MatrixXd si_smooth =
      sqrt_information(block_diag({&noise.calib_orientation, &noise.calib_position}));
  const MatrixXd si_spos = sqrt_information(noise.shape_position);
  const MatrixXd si_sori = sqrt_information(noise.shape_orientation);

  auto add = [&](BlockKind kind, int t, int a, int dim, std::vector<int> slots,
                 const MatrixXd& si, ResidualBlock::Evaluator f) {
    ResidualBlock b;
    b.kind = kind;
    b.t = t;
    b.a = a;
    b.dim = dim;
    b.slots = std::move(slots);
    b.sqrt_info = si;
    b.evaluate = std::move(f);
    p.blocks.push_back(std::move(b));
  };

  // Motion model between consecutive steps.
  for (int t = 0; t + 1 < w; ++t) {
    for (int i = 0; i < n_imu; ++i) {
      const Vec3 acc = samples[i][t].acc;
      add(BlockKind::kMotion, t + 1, i, 9,
          {L.imu_pos(t, i), L.imu_vel(t, i), L.imu_ori(t, i), L.imu_omega(t, i),
           L.imu_pos(t + 1, i), L.imu_vel(t + 1, i), L.imu_ori(t + 1, i)},
          si_motion, [t, i, acc, world](const BatchValues& x, std::vector<MatrixXd>* jac) {
            MotionJacobians J;
            const Vec9 r = motion_residual(x.imu_at(t, i), x.imu_at(t + 1, i), acc, world,
                                           jac ? &J : nullptr);
            if (jac) {
              for (const auto* m : {&J.pos0, &J.vel0, &J.ori0, &J.omega0, &J.pos1, &J.vel1,
                                    &J.ori1}) {
                push_jac(jac, *m);
              }
            }
            return VectorXd(r);
          });
    }
  }

  for (int t = 0; t < w; ++t) {
    // Gyroscope and I2S coupling.
    for (int i = 0; i < n_imu; ++i) {
      const Vec3 gyr = samples[i][t].gyr;
      add(BlockKind::kGyro, t, i, 3, {L.imu_omega(t, i)}, si_gyro,
          [t, i, gyr](const BatchValues& x, std::vector<MatrixXd>* jac) {
            if (jac) push_jac(jac, -Mat3::Identity());
            return VectorXd(gyro_residual(x.imu_at(t, i), gyr));
          });
      const int s = model.imus[i].segment;
      add(BlockKind::kCoupling, t, i, 6,
          {L.imu_pos(t, i), L.imu_ori(t, i), L.seg_pos(t, s), L.seg_ori(t, s), L.cal_ori(i),
           L.cal_pos(i)},
          si_coupling, [t, i, s](const BatchValues& x, std::vector<MatrixXd>* jac) {
            CouplingJacobians J;
            const Vec6 r = i2s_coupling_residual(x.imu_at(t, i), x.seg_at(t, s), x.calib[i],
                                                 jac ? &J : nullptr);
            if (jac) {
              for (const auto* m : {&J.imu_pos, &J.imu_ori, &J.seg_pos, &J.seg_ori, &J.cal_ori,
                                    &J.cal_pos}) {
                push_jac(jac, *m);
              }
            }
            return VectorXd(r);
          });
    }

    for (int k = 0; k < static_cast<int>(model.joints.size()); ++k) {
      const JointSpec& joint = model.joints[k];
      if (joint.is_root()) continue;
      const int si = joint.parent;
      const int sj = joint.child;
      const int ii = model.imu_on_segment(si);
      const int ij = model.imu_on_segment(sj);
      if (mask.velocity && ii >= 0 && ij >= 0) {
        const Vec3 pv = model.segments[si].segment_vector;
        add(BlockKind::kJointVelocity, t, k, 3,
            {L.imu_vel(t, ii), L.imu_ori(t, ii), L.imu_omega(t, ii), L.imu_vel(t, ij),
             L.imu_ori(t, ij), L.imu_omega(t, ij), L.cal_ori(ii), L.cal_pos(ii), L.cal_ori(ij),
             L.cal_pos(ij)},
            si_jv, [t, ii, ij, pv](const BatchValues& x, std::vector<MatrixXd>* jac) {
              JointVelocityJacobians J;
              const Vec3 r =
                  joint_velocity_residual(x.imu_at(t, ii), x.imu_at(t, ij), x.calib[ii],
                                          x.calib[ij], pv, jac ? &J : nullptr);
              if (jac) {
                for (const auto* m : {&J.vel_i, &J.ori_i, &J.omega_i, &J.vel_j, &J.ori_j,
                                      &J.omega_j, &J.cal_ori_i, &J.cal_pos_i, &J.cal_ori_j,
                                      &J.cal_pos_j}) {
                  push_jac(jac, *m);
                }
              }
              return VectorXd(r);
            });
      }
      if (mask.hinge && joint.kind == JointKind::kHinge) {
        const Vec3 h = joint.hinge_axis;
        add(BlockKind::kHinge, t, k, 3, {L.seg_ori(t, si), L.seg_ori(t, sj)}, si_hinge,
            [t, si, sj, h](const BatchValues& x, std::vector<MatrixXd>* jac) {
              PairJacobians J;
              const Vec3 r = hinge_residual(x.seg_at(t, si), x.seg_at(t, sj), h,
                                            jac ? &J : nullptr);
              if (jac) {
                push_jac(jac, J.ori_i);
                push_jac(jac, J.ori_j);
              }
              return VectorXd(r);
            });
        add(BlockKind::kRom, t, k, 1, {L.seg_ori(t, si), L.seg_ori(t, sj)}, si_rom,
            [t, si, sj, joint](const BatchValues& x, std::vector<MatrixXd>* jac) {
              RomJacobians J;
              VectorXd r(1);
              r(0) = rom_residual(x.seg_at(t, si), x.seg_at(t, sj), joint, jac ? &J : nullptr);
              if (jac) {
                push_jac(jac, J.ori_i);
                push_jac(jac, J.ori_j);
              }
              return r;
            });
      }
    }

    for (int f = 0; f < static_cast<int>(model.fixed_points.size()); ++f) {
      const FixedPointSpec fp = model.fixed_points[f];
      const int s = fp.segment;
      add(BlockKind::kFixed, t, f, 3, {L.seg_pos(t, s), L.seg_ori(t, s)}, si_fixed,
          [t, s, fp](const BatchValues& x, std::vector<MatrixXd>* jac) {
            FixedJacobians J;
            const Vec3 r = fixed_pos_residual(x.seg_at(t, s), fp, jac ? &J : nullptr);
            if (jac) {
              push_jac(jac, J.pos);
              push_jac(jac, J.ori);
            }
            return VectorXd(r);
          });
    }
  }

  for (int i = 0; i < n_imu; ++i) {
    const Quat anchor = priors.orientation_anchors[i];
    add(BlockKind::kBatchInit, 0, i, 3, {L.imu_ori(0, i)}, si_init,
        [i, anchor](const BatchValues& x, std::vector<MatrixXd>* jac) {
          Mat3 J;
          const Vec3 r = batch_init_residual(x.imu_at(0, i).orientation, anchor,
                                             jac ? &J : nullptr);
          if (jac) push_jac(jac, J);
          return VectorXd(r);
        });
    if (priors.previous_calibration) {
      const CalibrationEntry prev = (*priors.previous_calibration)[i];
      add(BlockKind::kCalibSmooth, -1, i, 6, {L.cal_ori(i), L.cal_pos(i)}, si_smooth,
          [i, prev](const BatchValues& x, std::vector<MatrixXd>* jac) {
            CalibSmoothJacobians J;
            const Vec6 r = calib_smoothness_residual(x.calib[i], prev, jac ? &J : nullptr);
            if (jac) {
              push_jac(jac, J.cal_ori);
              push_jac(jac, J.cal_pos);
            }
            return VectorXd(r);
          });
    }
    if (mask.shape) {
      const SegmentSpec seg = model.segments[model.imus[i].segment];
      add(BlockKind::kShapePos, -1, i, 3, {L.cal_pos(i)}, si_spos,
          [i, seg](const BatchValues& x, std::vector<MatrixXd>* jac) {
            Mat3 J;
            bool degenerate = false;
            const Vec3 r =
                shape_pos_residual(x.calib[i].position, seg, jac ? &J : nullptr, &degenerate);
            if (degenerate) warn_degenerate_shape();
            if (jac) push_jac(jac, J);
            return VectorXd(r);
          });
      add(BlockKind::kShapeOri, -1, i, 2, {L.cal_ori(i), L.cal_pos(i)}, si_sori,
          [i, seg](const BatchValues& x, std::vector<MatrixXd>* jac) {
            ShapeOriJacobians J;
            bool degenerate = false;
            const Vec2 r =
                shape_ori_residual(x.calib[i], seg, jac ? &J : nullptr, &degenerate);
            if (degenerate) warn_degenerate_shape();
            if (jac) {
              push_jac(jac, J.cal_ori);
              push_jac(jac, J.cal_pos);
            }
            return VectorXd(r);
          });
    }
  }

  // Connected segments, one hard constraint per joint and time step.
  if (mask.connected) {
    for (int t = 0; t < w; ++t) {
      for (int k = 0; k < static_cast<int>(model.joints.size()); ++k) {
        const JointSpec& joint = model.joints[k];
        ResidualBlock c;
        c.kind = BlockKind::kConnected;
        c.t = t;
        c.a = k;
        c.dim = 3;
        c.hard_constraint = true;
        c.sqrt_info = MatrixXd::Identity(3, 3);
        const int sj = joint.child;
        if (joint.is_root()) {
          const Vec3 anchor = joint.world_anchor;
          c.slots = {L.seg_pos(t, sj)};
          c.evaluate = [t, sj, anchor](const BatchValues& x, std::vector<MatrixXd>* jac) {
            if (jac) push_jac(jac, Mat3::Identity());
            return VectorXd(root_joint_constraint(x.seg_at(t, sj), anchor));
          };
        } else {
          const int si = joint.parent;
          const Vec3 pv = model.segments[si].segment_vector;
          c.slots = {L.seg_pos(t, si), L.seg_ori(t, si), L.seg_pos(t, sj)};
          c.evaluate = [t, si, sj, pv](const BatchValues& x, std::vector<MatrixXd>* jac) {
            ConnectedJacobians J;
            const Vec3 r = connected_segments_constraint(x.seg_at(t, si), x.seg_at(t, sj), pv,
                                                         jac ? &J : nullptr);
            if (jac) {
              push_jac(jac, J.pos_parent);
              push_jac(jac, J.ori_parent);
              push_jac(jac, J.pos_child);
            }
            return VectorXd(r);
          };
        }
        p.constraints.push_back(std::move(c));
      }
    }
  }
  return p;
}

namespace {

void check_finite(const ResidualBlock& b, const VectorXd& r) {
  if (!r.allFinite()) {
    std::ostringstream os;
    os << "non-finite residual in block " << block_kind_name(b.kind) << " (t=" << b.t
       << ", index=" << b.a << ")";
    throw std::runtime_error(os.str());
  }
}

// Adds J^T W J and J^T W r of one block scaled by `weight_scale`.
void accumulate(const ResidualBlock& b, const VectorXd& r, const std::vector<MatrixXd>& jac,
                const MatrixXd& sqrt_info, Triplets& h, VectorXd& g) {
  const VectorXd wr = sqrt_info * r;
  std::vector<MatrixXd> wj;
  wj.reserve(jac.size());
  for (const auto& j : jac) wj.push_back(sqrt_info * j);
  for (size_t k = 0; k < b.slots.size(); ++k) {
    const int ok = 3 * b.slots[k];
    g.segment<3>(ok) += wj[k].transpose() * wr;
    for (size_t l = 0; l < b.slots.size(); ++l) {
      const int ol = 3 * b.slots[l];
      const Mat3 hk = wj[k].transpose() * wj[l];
      for (int r0 = 0; r0 < 3; ++r0) {
        for (int c0 = 0; c0 < 3; ++c0) {
          if (hk(r0, c0) != 0.0) h.emplace_back(ok + r0, ol + c0, hk(r0, c0));
        }
      }
    }
  }
}

// Soft terms, optionally with the constraints folded in as stiff soft terms.
LinearSystem linearize_impl(const BatchProblem& problem, const BatchValues& x,
                            double soft_constraint_weight) {
  const int n = problem.layout.tangent_dim();
  LinearSystem sys;
  sys.gradient = VectorXd::Zero(n);
  Triplets h;
  h.reserve(problem.blocks.size() * 200);
  std::vector<MatrixXd> jac;
  for (const auto& b : problem.blocks) {
    jac.clear();
    const VectorXd r = b.evaluate(x, &jac);
    check_finite(b, r);
    sys.objective += (b.sqrt_info * r).squaredNorm();
    accumulate(b, r, jac, b.sqrt_info, h, sys.gradient);
  }

  int m = 0;
  for (const auto& c : problem.constraints) m += c.dim;
  if (soft_constraint_weight > 0.0) {
    for (const auto& c : problem.constraints) {
      jac.clear();
      const VectorXd r = c.evaluate(x, &jac);
      check_finite(c, r);
      const MatrixXd si = soft_constraint_weight * MatrixXd::Identity(c.dim, c.dim);
      sys.objective += (si * r).squaredNorm();
      accumulate(c, r, jac, si, h, sys.gradient);
    }
    m = 0;
  }
  sys.hessian.resize(n, n);
  sys.hessian.setFromTriplets(h.begin(), h.end());

  sys.constraint_value = VectorXd::Zero(m);
  sys.constraint_jacobian.resize(m, n);
  if (m > 0) {
    Triplets a;
    int row = 0;
    for (const auto& c : problem.constraints) {
      jac.clear();
      const VectorXd r = c.evaluate(x, &jac);
      check_finite(c, r);
      sys.constraint_value.segment(row, c.dim) = r;
      for (size_t k = 0; k < c.slots.size(); ++k) {
        for (int r0 = 0; r0 < c.dim; ++r0) {
          for (int c0 = 0; c0 < 3; ++c0) {
            const double v = jac[k](r0, c0);
            if (v != 0.0) a.emplace_back(row + r0, 3 * c.slots[k] + c0, v);
          }
        }
      }
      row += c.dim;
    }
    sys.constraint_jacobian.setFromTriplets(a.begin(), a.end());
  }
  return sys;
}

double soft_objective(const BatchProblem& problem, const BatchValues& x,
                      double soft_constraint_weight) {
  double f = 0.0;
  for (const auto& b : problem.blocks) f += (b.sqrt_info * b.evaluate(x, nullptr)).squaredNorm();
  if (soft_constraint_weight > 0.0) {
    const double w2 = soft_constraint_weight * soft_constraint_weight;
    for (const auto& c : problem.constraints) f += w2 * c.evaluate(x, nullptr).squaredNorm();
  }
  return f;
}

double constraint_l1(const BatchProblem& problem, const BatchValues& x) {
  double s = 0.0;
  for (const auto& c : problem.constraints) s += c.evaluate(x, nullptr).lpNorm<1>();
  return s;
}

std::vector<double> block_norms(const BatchProblem& problem, const BatchValues& x) {
  std::vector<double> out;
  out.reserve(problem.blocks.size());
  for (const auto& b : problem.blocks) out.push_back((b.sqrt_info * b.evaluate(x, nullptr)).norm());
  return out;
}

// Solves [H A^T; A 0] [dx; nu] = [-g; -c] with symmetric diagonal
// equilibration. Returns false if the factorization fails.
bool solve_kkt(const Eigen::SparseMatrix<double>& hess, const VectorXd& g,
               const Eigen::SparseMatrix<double>& a, const VectorXd& c, double damping,
               VectorXd& dx, VectorXd& nu) {
  const int n = static_cast<int>(hess.rows());
  const int m = static_cast<int>(a.rows());
  VectorXd scale(n + m);
  const VectorXd diag = hess.diagonal();
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, diag(i));
  const double floor = std::max(max_diag * 1e-14, 1e-300);
  for (int i = 0; i < n; ++i) scale(i) = 1.0 / std::sqrt(std::max(diag(i), floor));
  if (m > 0) {
    const Eigen::SparseMatrix<double> as = a * scale.head(n).asDiagonal();
    VectorXd row_norm = VectorXd::Zero(m);
    for (int k = 0; k < as.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(as, k); it; ++it) {
        row_norm(it.row()) += it.value() * it.value();
      }
    }
    for (int j = 0; j < m; ++j) scale(n + j) = 1.0 / std::sqrt(std::max(row_norm(j), 1e-300));
  }

  Triplets t;
  t.reserve(hess.nonZeros() + 2 * a.nonZeros() + n);
  for (int k = 0; k < hess.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(hess, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value() * scale(it.row()) * scale(it.col()));
    }
  }
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, damping);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      const double v = it.value() * scale(n + it.row()) * scale(it.col());
      t.emplace_back(n + it.row(), it.col(), v);
      t.emplace_back(it.col(), n + it.row(), v);
    }
  }
  Eigen::SparseMatrix<double> kkt(n + m, n + m);
  kkt.setFromTriplets(t.begin(), t.end());
  kkt.makeCompressed();

  VectorXd rhs(n + m);
  rhs.head(n) = -g;
  rhs.tail(m) = -c;
  rhs = scale.asDiagonal() * rhs;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success) return false;
  VectorXd y = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !y.allFinite()) return false;
  y = scale.asDiagonal() * y;
  dx = y.head(n);
  nu = y.tail(m);
  return true;
}

bool small_change(double f_old, double f_new, double tol) {
  return std::abs(f_old - f_new) <= tol * f_old + 1e-12;
}

std::pair<BatchValues, SolveReport> solve_hard(const BatchProblem& problem, BatchValues x,
                                               const SolverConfig& cfg) {
  SolveReport rep;
  double f = soft_objective(problem, x, 0.0);
  rep.initial_objective = f;
  rep.objective_trace.push_back(f);
  double mu = 0.0;
  // Marquardt damping on the equilibrated KKT system. It stays near zero on
  // well-conditioned problems and keeps steps short along flat directions.
  double damping = cfg.lm_initial_damping;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const LinearSystem sys = linearize_impl(problem, x, 0.0);
    rep.iterations = it + 1;
    const double c1 = sys.constraint_value.lpNorm<1>();
    bool accepted = false;
    BatchValues trial = x;
    double f_trial = f;
    for (int attempt = 0; attempt < 16 && !accepted; ++attempt) {
      VectorXd dx;
      VectorXd nu;
      if (!solve_kkt(sys.hessian, sys.gradient, sys.constraint_jacobian, sys.constraint_value,
                     damping, dx, nu)) {
        rep.rank_deficient = true;
        damping = std::max(damping * cfg.lm_damping_scale, 1e-9);
        continue;
      }
      // Merit f/2 + mu |c|_1 with mu above the multiplier scale.
      const double nu_max = nu.size() > 0 ? nu.lpNorm<Eigen::Infinity>() : 0.0;
      mu = std::max(mu, 2.0 * nu_max + 1e-8);
      const double merit0 = 0.5 * f + mu * c1;
      const double slope = sys.gradient.dot(dx) - mu * c1;
      trial = x;
      trial.retract(dx);
      f_trial = soft_objective(problem, trial, 0.0);
      const double bound = merit0 + 1e-4 * std::min(slope, 0.0);
      double c1_trial = constraint_l1(problem, trial);
      double merit = 0.5 * f_trial + mu * c1_trial;
      if (!(std::isfinite(merit) && merit <= bound) && c1_trial > c1) {
        // Second-order correction: pull the trial point back onto the
        // constraints linearized at x, which avoids rejecting good steps on
        // the curvature of the constraints alone.
        const LinearSystem at_trial = linearize_impl(problem, trial, 0.0);
        VectorXd dc;
        VectorXd nu_c;
        if (solve_kkt(sys.hessian, VectorXd::Zero(dx.size()), sys.constraint_jacobian,
                      at_trial.constraint_value, damping, dc, nu_c)) {
          BatchValues corrected = trial;
          corrected.retract(dc);
          const double f_c = soft_objective(problem, corrected, 0.0);
          const double c1_c = constraint_l1(problem, corrected);
          const double merit_c = 0.5 * f_c + mu * c1_c;
          if (std::isfinite(merit_c) && merit_c < merit) {
            trial = std::move(corrected);
            f_trial = f_c;
            c1_trial = c1_c;
            merit = merit_c;
          }
        }
      }
      if (std::isfinite(merit) && merit <= bound) {
        accepted = true;
        damping = std::max(damping / cfg.lm_damping_scale, 1e-12);
      } else {
        damping = std::max(damping * cfg.lm_damping_scale, 1e-9);
      }
    }
    if (!accepted) {
      rep.converged = max_constraint_violation(problem, x) < cfg.constraint_tolerance;
      rep.message = "no descent step";
      break;
    }
    const double f_old = f;
    x = std::move(trial);
    f = f_trial;
    rep.objective_trace.push_back(f);
    const double viol = max_constraint_violation(problem, x);
    if (small_change(f_old, f, cfg.objective_tolerance) && viol < cfg.constraint_tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.objective = f;
  rep.max_constraint_violation = max_constraint_violation(problem, x);
  rep.block_norms = block_norms(problem, x);
  if (rep.message.empty()) rep.message = rep.converged ? "converged" : "iteration limit";
  return {std::move(x), std::move(rep)};
}

std::pair<BatchValues, SolveReport> solve_soft(const BatchProblem& problem, BatchValues x,
                                               const SolverConfig& cfg) {
  SolveReport rep;
  const double wc = 1.0 / std::sqrt(cfg.soft_constraint_variance);
  double f = soft_objective(problem, x, wc);
  rep.initial_objective = f;
  rep.objective_trace.push_back(f);
  double lambda = cfg.lm_initial_damping;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    rep.iterations = it + 1;
    const LinearSystem sys = linearize_impl(problem, x, wc);
    bool improved = false;
    for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
      Eigen::SparseMatrix<double> damped = sys.hessian;
      for (int i = 0; i < damped.rows(); ++i) {
        damped.coeffRef(i, i) += lambda * std::max(sys.hessian.coeff(i, i), 1e-9);
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(damped);
      VectorXd dx;
      if (ldlt.info() == Eigen::Success) dx = ldlt.solve(-sys.gradient);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        rep.rank_deficient = true;
        lambda *= cfg.lm_damping_scale;
        continue;
      }
      BatchValues trial = x;
      trial.retract(dx);
      const double f_trial = soft_objective(problem, trial, wc);
      if (std::isfinite(f_trial) && f_trial <= f) {
        const double f_old = f;
        x = std::move(trial);
        f = f_trial;
        rep.objective_trace.push_back(f);
        lambda = std::max(lambda / cfg.lm_damping_scale, 1e-12);
        improved = true;
        if (small_change(f_old, f, cfg.objective_tolerance)) rep.converged = true;
      } else {
        lambda *= cfg.lm_damping_scale;
      }
    }
    if (!improved) {
      rep.converged = true;  // no descent direction left at this damping range
      rep.message = "damping saturated";
      break;
    }
    if (rep.converged) break;
  }
  rep.objective = soft_objective(problem, x, 0.0);
  rep.max_constraint_violation = max_constraint_violation(problem, x);
  rep.block_norms = block_norms(problem, x);
  if (rep.message.empty()) rep.message = rep.converged ? "converged" : "iteration limit";
  return {std::move(x), std::move(rep)};
}

}  // namespace

LinearSystem linearize(const BatchProblem& problem, const BatchValues& x) {
  return linearize_impl(problem, x, 0.0);
}

double objective(const BatchProblem& problem, const BatchValues& x) {
  return soft_objective(problem, x, 0.0);
}

double max_constraint_violation(const BatchProblem& problem, const BatchValues& x) {
  double m = 0.0;
  for (const auto& c : problem.constraints) {
    m = std::max(m, c.evaluate(x, nullptr).lpNorm<Eigen::Infinity>());
  }
  return m;
}

std::pair<BatchValues, SolveReport> solve(const BatchProblem& problem, const BatchValues& x0,
                                          const SolverConfig& config) {
  if (x0.layout.num_slots() != problem.layout.num_slots()) {
    throw std::invalid_argument("initial values do not match the problem layout");
  }
  if (config.mode == SolverMode::kHardGaussNewton) return solve_hard(problem, x0, config);
  return solve_soft(problem, x0, config);
}

}  // namespace selfcal

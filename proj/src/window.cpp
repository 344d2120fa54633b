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

#include "selfcal/window.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace selfcal {
namespace {

constexpr double kParallelTolerance = 1e-9;

Mat3 triad_basis(const Vec3& a, const Vec3& b) {
  const Vec3 t1 = a.normalized();
  const Vec3 c = t1.cross(b.normalized());
  if (c.norm() < kParallelTolerance) {
    throw std::invalid_argument("triad: reference vectors are parallel");
  }
  const Vec3 t2 = c.normalized();
  Mat3 m;
  m.col(0) = t1;
  m.col(1) = t2;
  m.col(2) = t1.cross(t2);
  return m;
}

void warn_missing_magnetometer() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    std::cerr << "selfcal: warning: no magnetometer in the first samples, using the "
                 "configured initial yaw\n";
  });
}

}  // namespace

std::vector<std::string> WindowConfig::validate() const {
  std::vector<std::string> v;
  if (batch_size < 2) v.emplace_back("batch size must be at least 2");
  if (history < 1) v.emplace_back("history must be at least 1");
  if (!(threshold_joint_velocity > 0.0) || !(threshold_orientation > 0.0) ||
      !(threshold_position > 0.0)) {
    v.emplace_back("convergence thresholds must be positive");
  }
  if (!(tightening_factor > 1.0)) v.emplace_back("tightening factor must exceed 1");
  if (!(min_excitation >= 0.0)) v.emplace_back("min_excitation must be non-negative");
  if (triad_samples < 1) v.emplace_back("triad_samples must be at least 1");
  if (solver.max_iterations < 1) v.emplace_back("max_iterations must be positive");
  return v;
}

Quat triad_init(const Vec3& acc, const Vec3& mag, const WorldConfig& world) {
  if (acc.norm() < kParallelTolerance || mag.norm() < kParallelTolerance) {
    throw std::invalid_argument("triad: zero accelerometer or magnetometer vector");
  }
  const Mat3 ref = triad_basis(-world.gravity, world.magnetic_field);
  const Mat3 body = triad_basis(acc, mag);
  return rotmat_to_quat(ref * body.transpose());
}

Quat gravity_yaw_init(const Vec3& acc, double yaw_rad, const WorldConfig& world) {
  if (acc.norm() < kParallelTolerance) {
    throw std::invalid_argument("gravity init: zero accelerometer vector");
  }
  // Smallest rotation taking the measured up direction onto the world one.
  const Vec3 up_b = acc.normalized();
  const Vec3 up_g = (-world.gravity).normalized();
  const Quat tilt = Quat::FromTwoVectors(up_b, up_g).normalized();
  return quat_mul(axis_angle(up_g, yaw_rad), tilt);
}

DetectorTerms convergence_indicator(const WindowState& state, const WindowConfig& config,
                                    const Vec3& joint_velocity_sum, int window,
                                    int num_joints) {
  DetectorTerms d;
  const int h = config.history;
  // state.batch is the index of the batch that has just been added.
  d.eligible = state.batch > h && static_cast<int>(state.history.size()) == h + 1;
  if (num_joints > 0) {
    d.joint_velocity = joint_velocity_sum.norm() / (static_cast<double>(window) * num_joints);
  }
  if (static_cast<int>(state.history.size()) >= 2) {
    const int n_imu = static_cast<int>(state.history.back().size());
    Vec3 dq = Vec3::Zero();
    Vec3 dp = Vec3::Zero();
    for (size_t l = 1; l < state.history.size(); ++l) {
      for (int i = 0; i < n_imu; ++i) {
        const auto& prev = state.history[l - 1][i];
        const auto& cur = state.history[l][i];
        dq += 2.0 * quat_log(quat_mul(quat_conj(prev.orientation), cur.orientation));
        dp += cur.position - prev.position;
      }
    }
    const double denom = static_cast<double>(h) * std::max(n_imu, 1);
    d.orientation = dq.norm() / denom;
    d.position = dp.norm() / denom;
  }
  if (!state.excitation.empty()) {
    double sum = 0.0;
    for (double e : state.excitation) sum += e;
    d.excitation = sum / static_cast<double>(state.excitation.size());
  }
  d.converged = d.eligible && d.joint_velocity < config.threshold_joint_velocity &&
                d.orientation < config.threshold_orientation &&
                d.position < config.threshold_position &&
                (config.min_excitation <= 0.0 || d.excitation >= config.min_excitation);
  return d;
}

SlidingWindowEstimator::SlidingWindowEstimator(BodyModel model, NoiseConfig noise,
                                               WindowConfig config,
                                               I2SCalibration initial_calibration)
    : model_(std::move(model)), config_(std::move(config)) {
  const auto errors = config_.validate();
  if (!errors.empty()) throw std::invalid_argument("invalid window config: " + errors.front());
  const auto violations = validate_model(model_);
  if (!violations.empty()) throw std::invalid_argument("invalid body model: " + violations.front());
  if (initial_calibration.size() != model_.imus.size()) {
    throw std::invalid_argument("one initial calibration entry per IMU expected");
  }
  state_.noise = std::move(noise);
  state_.calibration = std::move(initial_calibration);
}

BatchValues SlidingWindowEstimator::init_batch(
    std::span<const std::vector<ImuSample>> samples) const {
  const int n_imu = static_cast<int>(model_.imus.size());
  const int w = static_cast<int>(samples[0].size());
  BatchValues x = BatchValues::zeros({w, n_imu, static_cast<int>(model_.segments.size())});
  x.calib = state_.calibration;
  if (state_.batch == 0) {
    for (int i = 0; i < n_imu; ++i) {
      const int n = std::min<int>(config_.triad_samples, w);
      Vec3 acc = Vec3::Zero();
      Vec3 mag = Vec3::Zero();
      bool have_mag = true;
      for (int k = 0; k < n; ++k) {
        acc += samples[i][k].acc;
        if (samples[i][k].mag) {
          mag += *samples[i][k].mag;
        } else {
          have_mag = false;
        }
      }
      Quat q;
      if (config_.initial_orientations) {
        q = config_.initial_orientations->at(i);
      } else if (have_mag) {
        q = triad_init(acc, mag, model_.world);
      } else if (config_.initial_yaw_rad) {
        warn_missing_magnetometer();
        q = gravity_yaw_init(acc, *config_.initial_yaw_rad, model_.world);
      } else {
        throw std::invalid_argument("first batch needs magnetometer readings or an initial yaw");
      }
      for (int t = 0; t < w; ++t) {
        x.imu_at(t, i).orientation = q;
        x.imu_at(t, i).angular_velocity = samples[i][t].gyr;
      }
    }
    if (config_.calibrated_first_batch) {
      place_segments(x, /*imu_positions=*/true);
    } else {
      for (int t = 0; t < w; ++t) {
        for (int i = 0; i < n_imu; ++i) x.imu_at(t, i).angular_velocity = Vec3::Zero();
      }
    }
    return x;
  }
  for (int t = 0; t < w; ++t) {
    for (int i = 0; i < n_imu; ++i) x.imu_at(t, i) = state_.last_imu[i];
    for (int s = 0; s < x.layout.num_segments; ++s) x.seg_at(t, s) = state_.last_seg[s];
  }
  if (!config_.propagate_init) return x;
  // Dead reckoning from the anchor state with the batch's own measurements.
  const double T = model_.world.sample_period;
  for (int i = 0; i < n_imu; ++i) {
    for (int t = 0; t < w; ++t) {
      ImuState& cur = x.imu_at(t, i);
      if (t > 0) {
        const ImuState& prev = x.imu_at(t - 1, i);
        const Vec3 acc =
            quat_to_rotmat(prev.orientation) * samples[i][t - 1].acc + model_.world.gravity;
        cur.position = prev.position + T * prev.velocity + 0.5 * T * T * acc;
        cur.velocity = prev.velocity + T * acc;
        cur.orientation = quat_mul(prev.orientation, quat_exp(0.5 * T * prev.angular_velocity));
      }
      cur.angular_velocity = samples[i][t].gyr;
    }
  }
  place_segments(x, /*imu_positions=*/false);
  return x;
}

// Segment orientations from the carried IMUs and the current calibration,
// positions chained outwards from the root anchor. Optionally moves the IMU
// positions onto their segments.
void SlidingWindowEstimator::place_segments(BatchValues& x, bool imu_positions) const {
  const int n_seg = x.layout.num_segments;
  for (int t = 0; t < x.layout.window; ++t) {
    std::vector<Quat> seg_ori(n_seg);
    for (int s = 0; s < n_seg; ++s) {
      const int i = model_.imu_on_segment(s);
      seg_ori[s] = i >= 0 ? quat_mul(x.imu_at(t, i).orientation, quat_conj(x.calib[i].orientation))
                          : x.seg_at(t, s).orientation;
    }
    std::vector<Vec3> seg_pos(n_seg, Vec3::Zero());
    std::vector<bool> placed(n_seg, false);
    for (size_t pass = 0; pass < model_.joints.size(); ++pass) {
      for (const auto& j : model_.joints) {
        if (placed[j.child]) continue;
        if (j.is_root()) {
          seg_pos[j.child] = j.world_anchor;
        } else if (placed[j.parent]) {
          seg_pos[j.child] = seg_pos[j.parent] + quat_to_rotmat(seg_ori[j.parent]) *
                                                     model_.segments[j.parent].segment_vector;
        } else {
          continue;
        }
        placed[j.child] = true;
      }
    }
    for (int s = 0; s < n_seg; ++s) x.seg_at(t, s) = {seg_pos[s], seg_ori[s]};
    if (!imu_positions) continue;
    for (int i = 0; i < static_cast<int>(model_.imus.size()); ++i) {
      const int s = model_.imus[i].segment;
      x.imu_at(t, i).position = seg_pos[s] + quat_to_rotmat(seg_ori[s]) * x.calib[i].position;
    }
  }
}

BatchResult SlidingWindowEstimator::step(std::span<const std::vector<ImuSample>> samples) {
  const int n_imu = static_cast<int>(model_.imus.size());
  if (static_cast<int>(samples.size()) != n_imu) {
    throw std::invalid_argument("expected one sample stream per IMU");
  }
  const int w = config_.batch_size;
  for (const auto& s : samples) {
    if (static_cast<int>(s.size()) != w) {
      throw std::invalid_argument("each batch needs exactly batch_size samples per IMU");
    }
  }

  BatchResult out;
  out.batch = state_.batch;
  out.first_step = state_.batch * (w - 1);
  BatchValues x0 = init_batch(samples);

  BatchPriors priors;
  priors.batch_index = state_.batch;
  if (state_.batch == 0) {
    for (int i = 0; i < n_imu; ++i) priors.orientation_anchors.push_back(x0.imu_at(0, i).orientation);
    if (config_.initial_calibration_prior) priors.previous_calibration = state_.calibration;
  } else {
    for (int i = 0; i < n_imu; ++i) priors.orientation_anchors.push_back(state_.last_imu[i].orientation);
    priors.previous_calibration = state_.calibration;
  }

  const BatchProblem problem = build_problem(model_, samples, priors, state_.noise, config_.mask);
  auto [x, report] = solve(problem, x0, config_.solver);

  // Raw joint-velocity residuals at the solution, independent of the mask.
  Vec3 jv_sum = Vec3::Zero();
  int jv_joints = 0;
  for (const auto& joint : model_.joints) {
    if (joint.is_root()) continue;
    const int ii = model_.imu_on_segment(joint.parent);
    const int ij = model_.imu_on_segment(joint.child);
    if (ii < 0 || ij < 0) continue;
    ++jv_joints;
    for (int t = 0; t < w; ++t) {
      jv_sum += joint_velocity_residual(x.imu_at(t, ii), x.imu_at(t, ij), x.calib[ii],
                                        x.calib[ij], model_.segments[joint.parent].segment_vector);
    }
  }

  state_.last_imu.assign(x.imu.end() - n_imu, x.imu.end());
  state_.last_seg.assign(x.seg.end() - x.layout.num_segments, x.seg.end());
  state_.calibration = x.calib;
  state_.history.push_back(x.calib);
  while (static_cast<int>(state_.history.size()) > config_.history + 1) state_.history.pop_front();
  double least_rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_imu; ++i) {
    double rate = 0.0;
    for (const auto& y : samples[i]) rate += y.gyr.norm();
    least_rate = std::min(least_rate, rate / static_cast<double>(samples[i].size()));
  }
  state_.excitation.push_back(n_imu > 0 ? least_rate : 0.0);
  while (static_cast<int>(state_.excitation.size()) > config_.history) state_.excitation.pop_front();

  out.detector = convergence_indicator(state_, config_, jv_sum, w, jv_joints);
  if (out.detector.converged && !state_.converged) {
    state_.converged = true;
    state_.detection_batch = state_.batch;
    state_.detection_step = out.first_step + w - 1;
    state_.noise.calib_orientation /= config_.tightening_factor;
    state_.noise.calib_position /= config_.tightening_factor;
    out.detected_now = true;
  }
  out.values = std::move(x);
  out.report = std::move(report);
  ++state_.batch;
  return out;
}

RunOutput run_stream(const BodyModel& model, std::span<const std::vector<ImuSample>> streams,
                     const I2SCalibration& initial_calibration, const NoiseConfig& noise,
                     const WindowConfig& config) {
  const int n_imu = static_cast<int>(model.imus.size());
  if (static_cast<int>(streams.size()) != n_imu || n_imu == 0) {
    throw std::invalid_argument("expected one stream per IMU");
  }
  const size_t n = streams[0].size();
  for (const auto& s : streams) {
    if (s.size() != n) throw std::invalid_argument("IMU streams differ in length");
  }
  SlidingWindowEstimator est(model, noise, config, initial_calibration);
  const int w = config.batch_size;
  RunOutput out;
  std::vector<std::vector<ImuSample>> batch(n_imu);
  for (int b = 0;; ++b) {
    const size_t first = static_cast<size_t>(b) * (w - 1);
    if (first + w > n) break;
    for (int i = 0; i < n_imu; ++i) {
      batch[i].assign(streams[i].begin() + first, streams[i].begin() + first + w);
    }
    BatchResult r = est.step(batch);
    for (int t = b == 0 ? 0 : 1; t < w; ++t) {
      out.step_calibration.push_back(r.values.calib);
      out.step_imus.emplace_back(r.values.imu.begin() + t * n_imu,
                                 r.values.imu.begin() + (t + 1) * n_imu);
      const int ns = r.values.layout.num_segments;
      out.step_segments.emplace_back(r.values.seg.begin() + t * ns,
                                     r.values.seg.begin() + (t + 1) * ns);
    }
    out.batches.push_back(std::move(r));
  }
  out.detection_batch = est.state().detection_batch;
  out.detection_step = est.state().detection_step;
  return out;
}

}  // namespace selfcal

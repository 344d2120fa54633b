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

// File formats: JSON for models, calibrations and configs, CSV for time
// series. Every CSV starts with a header row and is readable by the
// functions below.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfcal/biomech.hpp"
#include "selfcal/residuals.hpp"
#include "selfcal/sim.hpp"

namespace selfcal {

/// Malformed input. `row` is the 1-based line number in the file (the
/// header is line 1), or 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int row = 0);
  int row() const { return row_; }

 private:
  int row_;
};

std::string model_to_json(const BodyModel& model);
/// Throws ParseError on missing fields and std::invalid_argument when the
/// resulting model fails validate_model.
BodyModel model_from_json(const std::string& text);

/// [{"orientation_wxyz": [w,x,y,z], "position": [x,y,z]}, ...]
std::string calibration_to_json(const I2SCalibration& calibration);
I2SCalibration calibration_from_json(const std::string& text);

struct ImuStreams {
  std::vector<double> times;                    // one per step
  std::vector<std::vector<ImuSample>> samples;  // [imu][step]
};

/// Columns t, imu_id, ax, ay, az, gx, gy, gz and, when every sample has one,
/// mx, my, mz. Values are written with 17 significant digits so that the
/// file reads back bit-exactly.
std::string imu_csv(const std::vector<std::vector<ImuSample>>& streams, double sample_period);

/// Rows must be grouped by time step, with t strictly increasing between
/// steps and every IMU present exactly once per step. Errors name the row.
ImuStreams parse_imu_csv(const std::string& text);

/// Columns step, then per segment px, py, pz, qw, qx, qy, qz, then per IMU
/// position, velocity, orientation and angular velocity.
std::string truth_csv(const GroundTruth& truth);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace selfcal

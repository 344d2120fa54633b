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

// Python bindings. Configurations and results cross the boundary as JSON
// text and CSV; the thin wrapper in selfcal/__init__.py decodes them.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "selfcal/experiment.hpp"
#include "selfcal/io.hpp"

namespace py = pybind11;
using namespace selfcal;

namespace {

Eigen::Vector4d wxyz(const Quat& q) { return {q.w(), q.x(), q.y(), q.z()}; }
Quat from_wxyz(const Eigen::Vector4d& v) { return Quat(v(0), v(1), v(2), v(3)).normalized(); }

ExperimentConfig config_of(const std::string& json) {
  return json.empty() ? default_experiment_config() : experiment_config_from_json(json);
}

py::dict simulate_py(const std::string& config_json, std::uint64_t seed) {
  const ExperimentConfig c = config_of(config_json);
  Scenario s;
  {
    py::gil_scoped_release release;
    s = simulate(c, seed);
  }
  const int n_imu = static_cast<int>(s.streams.size());
  const int n = n_imu > 0 ? static_cast<int>(s.streams[0].size()) : 0;
  // Arrays shaped [imu, step, 3].
  auto stack = [&](auto get) {
    py::list imus;
    for (int i = 0; i < n_imu; ++i) {
      Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> m(n, 3);
      for (int t = 0; t < n; ++t) m.row(t) = get(s.streams[i][t]).transpose();
      imus.append(m);
    }
    return imus;
  };
  py::dict out;
  out["acc"] = stack([](const ImuSample& y) { return y.acc; });
  out["gyr"] = stack([](const ImuSample& y) { return y.gyr; });
  out["imu_csv"] = imu_csv(s.streams, c.model.world.sample_period);
  out["truth_csv"] = truth_csv(s.truth);
  return out;
}

std::string calibrate_py(const std::string& config_json, std::uint64_t seed) {
  const ExperimentConfig c = config_of(config_json);
  py::gil_scoped_release release;
  const Scenario s = simulate(c, seed);
  const I2SCalibration init = c.initial_calibration.empty()
                                  ? offset_calibration(c, c.offset)
                                  : calibration_from_json(read_file(c.initial_calibration));
  return run_summary_json(calibrate(c, s.streams, init, &s.truth));
}

std::string calibrate_csv_py(const std::string& config_json, const std::string& csv_text,
                             const std::string& initial_calibration_json) {
  const ExperimentConfig c = config_of(config_json);
  py::gil_scoped_release release;
  const ImuStreams streams = parse_imu_csv(csv_text);
  const I2SCalibration init = initial_calibration_json.empty()
                                  ? offset_calibration(c, c.offset)
                                  : calibration_from_json(initial_calibration_json);
  return run_summary_json(calibrate(c, streams.samples, init, nullptr));
}

std::string sweep_py(const std::string& config_json, std::uint64_t seed, int jobs) {
  const ExperimentConfig c = config_of(config_json);
  py::gil_scoped_release release;
  return sweep_csv(run_sweep(c, seed, jobs));
}

std::string ablate_py(const std::string& config_json, std::uint64_t seed, int jobs) {
  const ExperimentConfig c = config_of(config_json);
  py::gil_scoped_release release;
  return ablation_summary_csv(run_ablation(c, seed, jobs));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sliding-window IMU-to-segment calibration";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("default_config_json", [] { return experiment_config_to_json(default_experiment_config()); },
        "Default experiment configuration as JSON text.");
  m.def("normalize_config_json",
        [](const std::string& text) {
          return experiment_config_to_json(experiment_config_from_json(text));
        },
        py::arg("text"), "Parses a configuration and returns it with every field filled in.");
  m.def("simulate", &simulate_py, py::arg("config_json") = "", py::arg("seed") = 0,
        "Simulated IMU streams: acc and gyr arrays per IMU plus CSV renderings.");
  m.def("calibrate", &calibrate_py, py::arg("config_json") = "", py::arg("seed") = 0,
        "Runs the estimator on simulated data; returns the run summary JSON.");
  m.def("calibrate_csv", &calibrate_csv_py, py::arg("config_json"), py::arg("imu_csv"),
        py::arg("initial_calibration_json") = "",
        "Runs the estimator on recorded IMU CSV text; returns the run summary JSON.");
  m.def("sweep", &sweep_py, py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("jobs") = 1, "Offset sweep; returns the sweep CSV.");
  m.def("ablate", &ablate_py, py::arg("config_json") = "", py::arg("seed") = 0,
        py::arg("jobs") = 1, "Term ablation; returns the summary CSV.");

  m.def("rotvec_exp", [](const Vec3& v) { return wxyz(rotvec_exp(v)); }, py::arg("rotvec"),
        "Unit quaternion [w, x, y, z] of a rotation vector.");
  m.def("rotvec_log", [](const Eigen::Vector4d& q) { return rotvec_log(from_wxyz(q)); },
        py::arg("wxyz"), "Rotation vector of a quaternion [w, x, y, z].");
  m.def("angular_offset_deg",
        [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
          return angular_offset_deg(from_wxyz(a), from_wxyz(b));
        },
        py::arg("a"), py::arg("b"), "Angle between two orientations in degrees.");
  m.def("apply_offset",
        [](const Eigen::Vector4d& q, const Vec3& p, double beta_deg, double gamma_deg) {
          const CalibrationEntry e = apply_offset({from_wxyz(q), p}, beta_deg, gamma_deg);
          return std::make_pair(wxyz(e.orientation), Vec3(e.position));
        },
        py::arg("orientation_wxyz"), py::arg("position"), py::arg("beta_deg"),
        py::arg("gamma_deg"), "Offset calibration entry (orientation, position).");
}

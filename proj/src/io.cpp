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

#include "selfcal/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "json_util.hpp"

namespace selfcal {

using nlohmann::json;

ParseError::ParseError(const std::string& what, int row)
    : std::runtime_error(row > 0 ? "line " + std::to_string(row) + ": " + what : what),
      row_(row) {}

namespace {

int segment_ref(const json& j, const BodyModel& m, const char* field) {
  if (j.is_null()) return -1;
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    const int s = m.segment_index(j.get<std::string>());
    if (s < 0) throw ParseError(std::string(field) + ": unknown segment '" + j.get<std::string>() + "'");
    return s;
  }
  throw ParseError(std::string(field) + ": expected a segment name or index");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, int row, const std::string& column) {
  const std::string s = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("column " + column + ": '" + s + "' is not a number", row);
  }
  return v;
}

}  // namespace

std::string model_to_json(const BodyModel& model) {
  json j;
  j["segments"] = json::array();
  for (const auto& s : model.segments) {
    j["segments"].push_back({{"name", s.name},
                             {"segment_vector", vec_to_json(s.segment_vector)},
                             {"proximal_radius", s.proximal_radius},
                             {"distal_radius", s.distal_radius}});
  }
  j["joints"] = json::array();
  for (const auto& jt : model.joints) {
    json e = {{"name", jt.name},
              {"parent", jt.parent < 0 ? json(nullptr) : json(model.segments[jt.parent].name)},
              {"child", model.segments[jt.child].name},
              {"kind", jt.kind == JointKind::kHinge ? "hinge" : "ball"}};
    if (jt.kind == JointKind::kHinge) {
      e["hinge_axis"] = vec_to_json(jt.hinge_axis);
      e["rom_deg"] = {jt.rom_min_deg, jt.rom_max_deg};
    }
    if (jt.is_root()) e["world_anchor"] = vec_to_json(jt.world_anchor);
    j["joints"].push_back(e);
  }
  j["imus"] = json::array();
  for (const auto& i : model.imus) {
    j["imus"].push_back({{"name", i.name}, {"segment", model.segments[i.segment].name}});
  }
  j["fixed_points"] = json::array();
  for (const auto& f : model.fixed_points) {
    j["fixed_points"].push_back({{"segment", model.segments[f.segment].name},
                                 {"local_point", vec_to_json(f.local_point)},
                                 {"global_point", vec_to_json(f.global_point)}});
  }
  j["world"] = {{"gravity", vec_to_json(model.world.gravity)},
                {"magnetic_field", vec_to_json(model.world.magnetic_field)},
                {"sample_period", model.world.sample_period}};
  return j.dump(2) + "\n";
}

BodyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  BodyModel m;
  try {
    for (const auto& s : j.at("segments")) {
      SegmentSpec seg;
      seg.name = s.at("name").get<std::string>();
      seg.segment_vector = vec_from_json(s.at("segment_vector"));
      seg.proximal_radius = s.value("proximal_radius", seg.proximal_radius);
      seg.distal_radius = s.value("distal_radius", seg.distal_radius);
      m.segments.push_back(seg);
    }
    for (const auto& e : j.at("joints")) {
      JointSpec jt;
      jt.name = e.value("name", std::string());
      jt.parent = segment_ref(e.value("parent", json(nullptr)), m, "parent");
      jt.child = segment_ref(e.at("child"), m, "child");
      const std::string kind = e.value("kind", std::string("ball"));
      if (kind == "hinge") {
        jt.kind = JointKind::kHinge;
      } else if (kind != "ball") {
        throw ParseError("joint '" + jt.name + "': unknown kind '" + kind + "'");
      }
      if (e.contains("hinge_axis")) jt.hinge_axis = vec_from_json(e["hinge_axis"]);
      if (e.contains("rom_deg")) {
        jt.rom_min_deg = e["rom_deg"].at(0).get<double>();
        jt.rom_max_deg = e["rom_deg"].at(1).get<double>();
      }
      if (e.contains("world_anchor")) jt.world_anchor = vec_from_json(e["world_anchor"]);
      m.joints.push_back(jt);
    }
    for (const auto& e : j.at("imus")) {
      m.imus.push_back({e.value("name", std::string()), segment_ref(e.at("segment"), m, "segment")});
    }
    for (const auto& e : j.value("fixed_points", json::array())) {
      FixedPointSpec f;
      f.segment = segment_ref(e.at("segment"), m, "segment");
      f.local_point = vec_from_json(e.at("local_point"));
      f.global_point = vec_from_json(e.at("global_point"));
      m.fixed_points.push_back(f);
    }
    if (j.contains("world")) {
      const json& w = j["world"];
      if (w.contains("gravity")) m.world.gravity = vec_from_json(w["gravity"]);
      if (w.contains("magnetic_field")) m.world.magnetic_field = vec_from_json(w["magnetic_field"]);
      m.world.sample_period = w.value("sample_period", m.world.sample_period);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("body model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("body model: ") + e.what());
  }
  const auto problems = validate_model(m);
  if (!problems.empty()) throw std::invalid_argument("body model: " + problems.front());
  return m;
}

std::string calibration_to_json(const I2SCalibration& calibration) {
  json j = json::array();
  for (const auto& c : calibration) {
    j.push_back({{"orientation_wxyz", quat_to_json(c.orientation)},
                 {"position", vec_to_json(c.position)}});
  }
  return j.dump(2) + "\n";
}

I2SCalibration calibration_from_json(const std::string& text) {
  I2SCalibration out;
  try {
    const json j = json::parse(text);
    for (const auto& e : j) {
      out.push_back({quat_from_json(e.at("orientation_wxyz")), vec_from_json(e.at("position"))});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("calibration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("calibration: ") + e.what());
  }
  return out;
}

std::string imu_csv(const std::vector<std::vector<ImuSample>>& streams, double sample_period) {
  bool with_mag = !streams.empty();
  for (const auto& s : streams) {
    for (const auto& y : s) with_mag = with_mag && y.mag.has_value();
  }
  std::string out = "t,imu_id,ax,ay,az,gx,gy,gz";
  if (with_mag) out += ",mx,my,mz";
  out += "\n";
  const std::size_t n = streams.empty() ? 0 : streams[0].size();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < streams.size(); ++i) {
      const ImuSample& y = streams[i][t];
      out += fmt(y.t_index * sample_period) + "," + std::to_string(i);
      for (int k = 0; k < 3; ++k) out += "," + fmt(y.acc[k]);
      for (int k = 0; k < 3; ++k) out += "," + fmt(y.gyr[k]);
      if (with_mag) {
        for (int k = 0; k < 3; ++k) out += "," + fmt((*y.mag)[k]);
      }
      out += "\n";
    }
  }
  return out;
}

ImuStreams parse_imu_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file");
  std::vector<std::string> header = split_csv(line);
  for (auto& h : header) h = trim(h);
  const std::vector<std::string> base = {"t", "imu_id", "ax", "ay", "az", "gx", "gy", "gz"};
  const std::vector<std::string> mag = {"mx", "my", "mz"};
  bool with_mag = false;
  if (header.size() == base.size() + mag.size() &&
      std::equal(mag.begin(), mag.end(), header.begin() + base.size())) {
    with_mag = true;
  } else if (header.size() != base.size()) {
    throw ParseError("unexpected header", 1);
  }
  if (!std::equal(base.begin(), base.end(), header.begin())) {
    throw ParseError("unexpected header", 1);
  }

  struct Row {
    double t;
    int imu;
    ImuSample y;
    int line;
  };
  std::vector<Row> rows;
  int row = 1;
  int max_imu = -1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()),
                       row);
    }
    Row r;
    r.line = row;
    r.t = parse_number(cells[0], row, "t");
    const double id = parse_number(cells[1], row, "imu_id");
    if (id < 0 || id != static_cast<int>(id)) {
      throw ParseError("column imu_id: not a non-negative integer", row);
    }
    r.imu = static_cast<int>(id);
    for (int k = 0; k < 3; ++k) r.y.acc[k] = parse_number(cells[2 + k], row, header[2 + k]);
    for (int k = 0; k < 3; ++k) r.y.gyr[k] = parse_number(cells[5 + k], row, header[5 + k]);
    if (with_mag) {
      Vec3 m;
      for (int k = 0; k < 3; ++k) m[k] = parse_number(cells[8 + k], row, header[8 + k]);
      r.y.mag = m;
    }
    max_imu = std::max(max_imu, r.imu);
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("no data rows");

  const int n_imu = max_imu + 1;
  ImuStreams out;
  out.samples.assign(n_imu, {});
  std::size_t k = 0;
  while (k < rows.size()) {
    const double t = rows[k].t;
    if (!out.times.empty() && !(t > out.times.back())) {
      throw ParseError("non-monotone t", rows[k].line);
    }
    const int step = static_cast<int>(out.times.size());
    std::vector<bool> seen(n_imu, false);
    std::size_t e = k;
    while (e < rows.size() && rows[e].t == t) {
      const Row& r = rows[e];
      if (seen[r.imu]) {
        throw ParseError("IMU " + std::to_string(r.imu) + " repeated at t = " + fmt(t), r.line);
      }
      seen[r.imu] = true;
      ImuSample y = r.y;
      y.t_index = step;
      out.samples[r.imu].push_back(y);
      ++e;
    }
    for (int i = 0; i < n_imu; ++i) {
      if (!seen[i]) {
        const int at = e < rows.size() ? rows[e].line : rows[e - 1].line;
        throw ParseError("IMU " + std::to_string(i) + " missing at t = " + fmt(t), at);
      }
    }
    out.times.push_back(t);
    k = e;
  }
  return out;
}

std::string truth_csv(const GroundTruth& truth) {
  std::string out = "step";
  const int n_seg = truth.num_steps > 0 ? static_cast<int>(truth.segments[0].size()) : 0;
  const int n_imu = truth.num_steps > 0 ? static_cast<int>(truth.imus[0].size()) : 0;
  for (int s = 0; s < n_seg; ++s) {
    for (const char* c : {"px", "py", "pz", "qw", "qx", "qy", "qz"}) {
      out += ",S" + std::to_string(s) + "_" + c;
    }
  }
  for (int i = 0; i < n_imu; ++i) {
    for (const char* c :
         {"px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz"}) {
      out += ",I" + std::to_string(i) + "_" + c;
    }
  }
  out += "\n";
  auto put_vec = [&out](const Vec3& v) {
    for (int k = 0; k < 3; ++k) out += "," + fmt(v[k]);
  };
  auto put_quat = [&out](const Quat& q) {
    out += "," + fmt(q.w()) + "," + fmt(q.x()) + "," + fmt(q.y()) + "," + fmt(q.z());
  };
  for (int t = 0; t < truth.num_steps; ++t) {
    out += std::to_string(t);
    for (const auto& s : truth.segments[t]) {
      put_vec(s.position);
      put_quat(s.orientation);
    }
    for (const auto& i : truth.imus[t]) {
      put_vec(i.position);
      put_vec(i.velocity);
      put_quat(i.orientation);
      put_vec(i.angular_velocity);
    }
    out += "\n";
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << contents;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace selfcal

# Copyright 2026 The selfcal Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Sliding-window IMU-to-segment calibration.

Configurations are plain dicts with the same schema as the CLI's JSON
config files; omitted fields keep their defaults.
"""

import csv
import io
import json

import numpy as np

from . import _core
from ._core import ParseError, angular_offset_deg, apply_offset, rotvec_exp, rotvec_log

__all__ = [
    "ParseError",
    "ablate",
    "angular_offset_deg",
    "apply_offset",
    "calibrate",
    "calibrate_csv",
    "default_config",
    "rotvec_exp",
    "rotvec_log",
    "simulate",
    "sweep",
]


def _encode(config):
    return "" if config is None else json.dumps(config)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def default_config():
    """Default experiment configuration with every field present."""
    return json.loads(_core.default_config_json())


def simulate(config=None, seed=0):
    """Simulated streams: acc and gyr arrays of shape (imus, steps, 3)."""
    out = _core.simulate(_encode(config), seed)
    out["acc"] = np.stack(out["acc"])
    out["gyr"] = np.stack(out["gyr"])
    return out


def calibrate(config=None, seed=0):
    """Runs the estimator on simulated data and returns the summary dict."""
    return json.loads(_core.calibrate(_encode(config), seed))


def calibrate_csv(imu_csv, config=None, initial_calibration=None):
    """Runs the estimator on IMU CSV text; no ground-truth errors."""
    init = "" if initial_calibration is None else json.dumps(initial_calibration)
    return json.loads(_core.calibrate_csv(_encode(config) or "{}", imu_csv, init))


def sweep(config=None, seed=0, jobs=1):
    """Offset sweep rows as dicts of strings, in grid order."""
    return _rows(_core.sweep(_encode(config), seed, jobs))


def ablate(config=None, seed=0, jobs=1):
    """Final calibration error per term mask and IMU."""
    return _rows(_core.ablate(_encode(config), seed, jobs))

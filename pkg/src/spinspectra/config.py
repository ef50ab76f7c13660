# Copyright 2026 spinspectra Contributors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#      http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
from dataclasses import dataclass, replace
from typing import List, Optional

from spinspectra.cluster import DEFAULT_REDUCE_ABOVE, GROWTH_RULES
from spinspectra.spin_system import DEFAULT_MAX_DIMENSION, SpectrometerSettings

FIELD_PRESETS = {"high": 400.0, "low": 80.0, "very-low": 20.0}
BROADENING_PRESETS = {"high": 1.0, "low": 0.1}
OUTPUT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Regime:
    """A named (field, broadening) pair"""
    field: str
    broadening: str

    @property
    def field_mhz(self) -> float:
        return FIELD_PRESETS[self.field]

    @property
    def fwhm_hz(self) -> float:
        return BROADENING_PRESETS[self.broadening]

    @property
    def name(self) -> str:
        return f"{self.field}:{self.broadening}"


def parse_presets(text: str) -> List[Regime]:
    """Parse ``"all"`` or a comma separated list of ``field:broadening`` preset pairs

    Examples
    --------
    >>> from spinspectra.config import parse_presets
    >>> [r.name for r in parse_presets("high:high,very-low:low")]
    ['high:high', 'very-low:low']
    >>> len(parse_presets("all"))
    6
    """
    text = text.strip()
    if text == "all":
        return [Regime(f, b) for f in FIELD_PRESETS for b in BROADENING_PRESETS]
    regimes = []
    for item in text.split(","):
        field, sep, broadening = item.strip().partition(":")
        if not sep or field not in FIELD_PRESETS or broadening not in BROADENING_PRESETS:
            raise ValueError(f"Unknown preset {item.strip()!r}: expected field:broadening with field in "
                             f"{sorted(FIELD_PRESETS)} and broadening in {sorted(BROADENING_PRESETS)}")
        regimes.append(Regime(field, broadening))
    return regimes


def parse_range(text: str, upper: int) -> List[int]:
    """Cluster sizes from ``"a..b"``, ``"a-b"``, or a comma list, each within ``1..upper``"""
    text = text.strip()
    sizes: List[int] = []
    try:
        for part in text.split(","):
            for sep in ("..", "-"):
                if sep in part:
                    lo, hi = (int(v) for v in part.split(sep, 1))
                    sizes.extend(range(lo, hi + 1))
                    break
            else:
                sizes.append(int(part))
    except ValueError:
        raise ValueError(f"Cannot parse the cluster size range {text!r}") from None
    if not sizes:
        raise ValueError(f"The cluster size range {text!r} is empty")
    bad = [s for s in sizes if not 1 <= s <= upper]
    if bad:
        raise ValueError(f"Cluster sizes {bad} are outside 1..{upper}")
    return sorted(set(sizes))


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one command line run

    ``detect_isotope`` of None detects every nucleus. ``threads`` of None uses every CPU.
    """
    field_mhz: float = 400.0
    fwhm_hz: float = 1.0
    max_cluster: int = 12
    grid_points: Optional[int] = None
    detect_isotope: Optional[str] = "1H"
    epsilon: float = 0.1
    exact: bool = False
    threads: Optional[int] = None
    output_format: str = "csv"
    exact_threshold: int = 12
    growth: str = "max"
    reduce_above: int = DEFAULT_REDUCE_ABOVE
    max_dimension: int = DEFAULT_MAX_DIMENSION

    def __post_init__(self):
        if self.max_cluster < 1:
            raise ValueError(f"max_cluster must be at least 1, not {self.max_cluster}")
        if self.growth not in GROWTH_RULES:
            raise ValueError(f"Unknown growth rule {self.growth!r}, expected one of {GROWTH_RULES}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"Unknown output format {self.output_format!r}, expected one of {OUTPUT_FORMATS}")
        if self.threads is not None and self.threads < 1:
            raise ValueError(f"threads must be positive, not {self.threads}")

    @property
    def workers(self) -> int:
        return self.threads if self.threads is not None else (os.cpu_count() or 1)

    def to_settings(self) -> SpectrometerSettings:
        return SpectrometerSettings(ref_frequency=self.field_mhz * 1e6, fwhm=self.fwhm_hz,
                                    detect_isotope=self.detect_isotope, epsilon_metric=self.epsilon,
                                    grid_points=self.grid_points, max_dimension=self.max_dimension)

    def with_regime(self, regime: Regime) -> "RunConfig":
        return replace(self, field_mhz=regime.field_mhz, fwhm_hz=regime.fwhm_hz)

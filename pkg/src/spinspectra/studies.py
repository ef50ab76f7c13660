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

import csv
import io
import json
import logging
import math
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from spinspectra._version import __version__
from spinspectra.analysis import EPSILON_FLOOR, Spectrum, cosine_similarity
from spinspectra.cluster import assemble_spectrum, plan_clusters
from spinspectra.config import Regime, RunConfig
from spinspectra.solver import exact_spectrum, render_spectrum
from spinspectra.spin_system import SpinSystem

logger = logging.getLogger(__name__)


def _rows_to_csv(rows) -> str:
    buffer = io.StringIO()
    buffer.write(f"# spinspectra {__version__}\n")
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=[f.name for f in fields(rows[0])], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in asdict(row).items()})
    return buffer.getvalue()


@dataclass(frozen=True)
class ConvergenceRow:
    regime: str
    field_mhz: float
    fwhm_hz: float
    method: str
    max_cluster: int
    epsilon: float
    cos_theta: float
    seconds: float
    peak_memory_bytes: int
    distinct_clusters: Optional[int]
    diagonalizations: Optional[int]
    reference: bool


@dataclass
class ConvergenceReport:
    """Convergence error of each cluster size against a reference spectrum, per regime

    ``reference`` is ``"exact"`` when the full system could be solved, otherwise
    ``"cluster"`` and the largest requested size serves as the reference.
    """
    rows: List[ConvergenceRow]
    reference: str
    spectra: Dict[Tuple[str, str], Spectrum] = field(default_factory=dict)

    def rows_for(self, regime: str) -> List[ConvergenceRow]:
        return [r for r in self.rows if r.regime == regime]

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows)

    def to_json(self) -> str:
        return json.dumps({"version": __version__, "reference": self.reference,
                           "rows": [asdict(r) for r in self.rows]}, indent=2) + "\n"


def _exact_available(system: SpinSystem, config: RunConfig) -> bool:
    return config.exact or system.num_nuclei <= config.exact_threshold


def converge(system: SpinSystem,
             sizes: Sequence[int],
             regimes: Sequence[Regime],
             config: RunConfig = RunConfig(),
             *,
             keep_spectra: bool = False,
             progress: bool = False) -> ConvergenceReport:
    """Compute the spectrum at every cluster size and compare it with a reference

    Parameters
    ----------
    system : SpinSystem
    sizes : sequence of int
        Maximum cluster sizes, each within 1..N.
    regimes : sequence of Regime
        Field and broadening presets; every other parameter comes from ``config``.
    config : RunConfig
    keep_spectra : bool
        Keep every rendered spectrum in ``report.spectra`` keyed by ``(regime, size)``,
        where size is ``str(max_cluster)`` or ``"exact"``.
    progress : bool
        Show a progress bar on stderr.

    Returns
    -------
    ConvergenceReport
    """
    sizes = sorted(set(sizes))
    if not sizes:
        raise ValueError("At least one cluster size is needed")
    bad = [s for s in sizes if not 1 <= s <= system.num_nuclei]
    if bad:
        raise ValueError(f"Cluster sizes {bad} are outside 1..{system.num_nuclei}")
    use_exact = _exact_available(system, config)
    rows: List[ConvergenceRow] = []
    spectra: Dict[Tuple[str, str], Spectrum] = {}
    steps = [(regime, size) for regime in regimes for size in (["exact"] if use_exact else []) + sizes]
    with tqdm(total=len(steps), disable=not progress, file=sys.stderr, desc="converge") as bar:
        for regime in regimes:
            run = config.with_regime(regime)
            settings = run.to_settings()
            results = []
            if use_exact:
                start = time.perf_counter()
                sticks = exact_spectrum(system, settings, workers=run.workers)
                spectrum = render_spectrum(sticks, system, settings)
                results.append(("exact", system.num_nuclei, spectrum, time.perf_counter() - start, sticks.metadata))
                bar.update()
            for size in sizes:
                start = time.perf_counter()
                sticks = assemble_spectrum(system, settings, size, growth=run.growth,
                                           reduce_above=run.reduce_above, workers=run.workers)
                spectrum = render_spectrum(sticks, system, settings)
                results.append(("cluster", size, spectrum, time.perf_counter() - start, sticks.metadata))
                bar.update()
            reference = results[0][2] if use_exact else results[-1][2]
            for index, (method, size, spectrum, seconds, metadata) in enumerate(results):
                is_reference = index == (0 if use_exact else len(results) - 1)
                if is_reference:
                    cos_theta, epsilon = 1.0, EPSILON_FLOOR
                else:
                    report = cosine_similarity(spectrum, reference)
                    cos_theta, epsilon = report.cos_theta, report.epsilon
                rows.append(ConvergenceRow(regime=regime.name, field_mhz=run.field_mhz, fwhm_hz=run.fwhm_hz,
                                           method=method, max_cluster=size, epsilon=epsilon, cos_theta=cos_theta,
                                           seconds=seconds, peak_memory_bytes=metadata.get("peak_memory_bytes", 0),
                                           distinct_clusters=metadata.get("distinct_clusters"),
                                           diagonalizations=metadata.get("diagonalizations"),
                                           reference=is_reference))
                if keep_spectra:
                    spectra[(regime.name, "exact" if method == "exact" else str(size))] = spectrum
                logger.info("%s %s size %d: epsilon %.2f in %.3fs", regime.name, method, size, epsilon, seconds)
    return ConvergenceReport(rows=rows, reference="exact" if use_exact else "cluster", spectra=spectra)


@dataclass(frozen=True)
class BenchRow:
    max_cluster: int
    repeats: int
    median_seconds: float
    min_seconds: float
    largest_sector: int
    predicted_sector: int
    peak_memory_bytes: int
    clusters: int
    distinct_clusters: int
    diagonalizations: int
    dedup_savings: int


@dataclass
class BenchReport:
    """Wall-clock time and memory estimate of the cluster path per size"""
    rows: List[BenchRow]
    num_nuclei: int

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows)

    def to_json(self) -> str:
        return json.dumps({"version": __version__, "num_nuclei": self.num_nuclei,
                           "rows": [asdict(r) for r in self.rows]}, indent=2) + "\n"


def bench(system: SpinSystem,
          sizes: Sequence[int],
          repeats: int = 3,
          config: RunConfig = RunConfig(),
          *,
          progress: bool = False) -> BenchReport:
    """Time `assemble_spectrum` at each cluster size

    The memory column is an estimate, 16 * D**2 bytes for the largest dense block of
    dimension D and its eigenvectors. ``predicted_sector`` is binom(m, floor(m/2)), the
    largest sector of m spins-1/2.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, not {repeats}")
    settings = config.to_settings()
    rows = []
    for size in tqdm(sorted(set(sizes)), disable=not progress, file=sys.stderr, desc="bench"):
        size = min(size, system.num_nuclei)
        plan = plan_clusters(system, settings, size, config.growth)
        durations = []
        metadata = {}
        for _ in range(repeats):
            start = time.perf_counter()
            metadata = assemble_spectrum(system, settings, size, growth=config.growth,
                                         reduce_above=config.reduce_above, workers=config.workers,
                                         plan=plan).metadata
            durations.append(time.perf_counter() - start)
        rows.append(BenchRow(max_cluster=size, repeats=repeats, median_seconds=statistics.median(durations),
                             min_seconds=min(durations), largest_sector=metadata["largest_sector"],
                             predicted_sector=math.comb(size, size // 2),
                             peak_memory_bytes=metadata["peak_memory_bytes"], clusters=metadata["clusters"],
                             distinct_clusters=metadata["distinct_clusters"],
                             diagonalizations=metadata["diagonalizations"],
                             dedup_savings=metadata["clusters"] - metadata["distinct_clusters"]))
        logger.info("size %d: median %.4fs over %d repeats", size, rows[-1].median_seconds, repeats)
    return BenchReport(rows=rows, num_nuclei=system.num_nuclei)

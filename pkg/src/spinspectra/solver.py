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

import logging
from typing import Optional, Union

from spinspectra.analysis import Spectrum, equal_area_grid, normalize, sample, to_ppm_axis
from spinspectra.cluster import DEFAULT_REDUCE_ABOVE, assemble_spectrum
from spinspectra.equivalence import DEFAULT_MAX_ASSIGNMENTS, detect_equivalence, reduced_spectra, reducible_groups
from spinspectra.exact import DEFAULT_WEIGHT_FLOOR, StickSpectrum
from spinspectra.spin_system import SpectrometerSettings, SpinSystem, active_count, detection_weights

logger = logging.getLogger(__name__)

REDUCTION_THRESHOLD = 2 ** 12


def exact_spectrum(system: SpinSystem,
                   settings: SpectrometerSettings,
                   reduce: Union[bool, str] = "auto",
                   *,
                   workers: Optional[int] = None,
                   max_assignments: int = DEFAULT_MAX_ASSIGNMENTS) -> StickSpectrum:
    """Exact stick spectrum of the whole system

    Uncoupled parts of the molecule are diagonalized separately: the trace over the
    remaining spins only multiplies a part's weights by their dimension.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    reduce : bool or "auto"
        Whether to replace equivalent spin-1/2 groups by composite spins. ``"auto"``
        reduces a coupled part only when its product space has at least 2**12 states.
    workers : int, optional
        Threads over which irrep assignments are distributed.
    max_assignments : int
        See `reduced_spectra`.

    Returns
    -------
    StickSpectrum
        Canonical and coalesced at 1e-3 * eta.
    """
    if reduce not in (True, False, "auto"):
        raise ValueError(f"reduce must be True, False or 'auto', not {reduce!r}")
    weights = detection_weights(system, settings)
    parts = []
    largest = 0
    assignments = 0
    for component in system.connected_components():
        if not any(weights[i] != 0.0 for i in component):
            continue
        sub = system.subsystem(component)
        groups = reducible_groups(detect_equivalence(sub)) if reduce else []
        if reduce == "auto" and sub.dimension < REDUCTION_THRESHOLD:
            groups = []
        spectrum = reduced_spectra(sub, settings, groups, [None], weights[list(component)],
                                   max_assignments=max_assignments, workers=workers)[0]
        largest = max(largest, spectrum.metadata.get("largest_sector", 0))
        assignments += spectrum.metadata.get("assignments", 1)
        parts.append(spectrum.scaled(system.dimension / sub.dimension))
    metadata = {
        "method": "exact",
        "components": len(parts),
        "assignments": assignments,
        "largest_sector": int(largest),
        "peak_memory_bytes": 16 * int(largest) ** 2,
        "system": system.digest(),
        "settings": settings.digest(),
    }
    logger.info("exact spectrum from %d coupled part(s), largest sector %d", len(parts), largest)
    return StickSpectrum.concatenate(parts, metadata).coalesced(1e-3 * settings.eta).above_floor(DEFAULT_WEIGHT_FLOOR)


def compute_sticks(system: SpinSystem,
                   settings: SpectrometerSettings,
                   max_cluster: int,
                   *,
                   exact: bool = False,
                   exact_threshold: int = 12,
                   growth: str = "max",
                   reduce_above: int = DEFAULT_REDUCE_ABOVE,
                   workers: Optional[int] = None) -> StickSpectrum:
    """The exact path for small systems (or when asked for), the cluster path otherwise"""
    if exact or system.num_nuclei <= exact_threshold:
        return exact_spectrum(system, settings, "auto", workers=workers)
    return assemble_spectrum(system, settings, max_cluster, growth=growth, reduce_above=reduce_above,
                             workers=workers)


def render_spectrum(sticks: StickSpectrum, system: SpinSystem, settings: SpectrometerSettings) -> Spectrum:
    """Sample on the equal-area grid, normalize to the detected nuclei, and move to the ppm axis"""
    grid = equal_area_grid(sticks, settings.eta, settings.num_grid_points, fallback_center=settings.omega_ref)
    spectrum = to_ppm_axis(sample(sticks, settings.eta, grid), settings)
    return normalize(spectrum, active_count(system, settings))

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
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from spinspectra.equivalence import detect_equivalence, reduced_spectra, reducible_groups
from spinspectra.exact import DEFAULT_WEIGHT_FLOOR, StickSpectrum, diagonalize_blocks, stick_spectra
from spinspectra.operators import build_hamiltonian, collective_ladder
from spinspectra.spin_system import (SpectrometerSettings, SpinSystem, check_dimension, detection_weights,
                                     larmor_frequencies)

logger = logging.getLogger(__name__)

GROWTH_RULES = ("max", "direct")
DEFAULT_REDUCE_ABOVE = 12


@dataclass(frozen=True)
class Cluster:
    """The spins kept around ``center`` when computing its spin-resolved spectrum

    ``members`` starts with the center and lists the other spins in the order they were
    added; ``ranking`` records ``(spin, score)`` for each addition.
    """
    center: int
    members: Tuple[int, ...]
    ranking: Tuple[Tuple[int, float], ...] = ()

    @property
    def key(self) -> Tuple[int, ...]:
        """Canonical (sorted) member set"""
        return tuple(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class ClusterPlan:
    """One cluster per spin, plus the centers sharing each distinct member set"""
    clusters: Tuple[Cluster, ...]
    dedup: Dict[Tuple[int, ...], Tuple[int, ...]]

    @property
    def num_distinct(self) -> int:
        return len(self.dedup)


def importance_metric(system: SpinSystem, settings: SpectrometerSettings, i: int, j: int) -> float:
    """Score (2 pi J_ij)^2 / (|omega_i - omega_j| + epsilon) in rad/s

    Examples
    --------
    >>> import spinspectra
    >>> h = spinspectra.ISOTOPES["1H"]
    >>> system = spinspectra.SpinSystem([spinspectra.Nucleus(h, 0.0), spinspectra.Nucleus(h, 0.0)], {(0, 1): 10.0})
    >>> round(float(spinspectra.importance_metric(system, spinspectra.SpectrometerSettings(400e6), 0, 1)), 1)
    39478.4
    """
    if i == j:
        raise ValueError(f"The importance metric needs two different spins, got {i} twice")
    j_hz = system.coupling(i, j)
    if j_hz == 0.0:
        return 0.0
    omega = larmor_frequencies(system.subsystem([i, j]), settings)
    return float((2 * math.pi * j_hz) ** 2 / (abs(omega[0] - omega[1]) + settings.epsilon_metric))


def importance_matrix(system: SpinSystem, settings: SpectrometerSettings) -> np.ndarray:
    """`importance_metric` for every pair, with a zero diagonal"""
    omega = larmor_frequencies(system, settings)
    j = system.coupling_matrix()
    scores = (2 * math.pi * j) ** 2 / (np.abs(omega[:, None] - omega[None, :]) + settings.epsilon_metric)
    np.fill_diagonal(scores, 0.0)
    return scores


def build_cluster(system: SpinSystem,
                  settings: SpectrometerSettings,
                  center: int,
                  max_size: int,
                  growth: str = "max",
                  scores: Optional[np.ndarray] = None) -> Cluster:
    """Greedily grow the cluster of ``center``

    Starting from the center alone, repeatedly adds the outside spin with the highest
    score until ``max_size`` spins are in or no outside spin has a positive score. With
    ``growth="max"`` a candidate's score is its largest importance to any current member,
    so chains of strong couplings are followed; with ``growth="direct"`` only its
    importance to the center counts. Ties go to the lower index.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    center : int
    max_size : int
        Between 1 and the number of nuclei.
    growth : str
        ``"max"`` or ``"direct"``.
    scores : numpy.ndarray, optional
        Precomputed `importance_matrix`.

    Returns
    -------
    Cluster
    """
    n = system.num_nuclei
    if not 0 <= center < n:
        raise ValueError(f"Center {center} is outside 0..{n - 1}")
    if not 1 <= max_size <= n:
        raise ValueError(f"max_size must be between 1 and {n}, not {max_size}")
    if growth not in GROWTH_RULES:
        raise ValueError(f"Unknown growth rule {growth!r}, expected one of {GROWTH_RULES}")
    if scores is None:
        scores = importance_matrix(system, settings)

    members = [center]
    ranking = []
    inside = np.zeros(n, dtype=bool)
    inside[center] = True
    best = scores[center].copy()
    while len(members) < max_size:
        candidates = np.where(inside, -1.0, best)
        k = int(np.argmax(candidates))
        if candidates[k] <= 0.0:
            break
        members.append(k)
        ranking.append((k, float(candidates[k])))
        inside[k] = True
        if growth == "max":
            best = np.maximum(best, scores[k])
    return Cluster(center=center, members=tuple(members), ranking=tuple(ranking))


def plan_clusters(system: SpinSystem,
                  settings: SpectrometerSettings,
                  max_size: int,
                  growth: str = "max") -> ClusterPlan:
    """Clusters of every spin, with identical member sets grouped together"""
    scores = importance_matrix(system, settings)
    clusters = tuple(build_cluster(system, settings, i, max_size, growth, scores) for i in range(system.num_nuclei))
    dedup: Dict[Tuple[int, ...], List[int]] = {}
    for cluster in clusters:
        dedup.setdefault(cluster.key, []).append(cluster.center)
    return ClusterPlan(clusters=clusters, dedup={key: tuple(centers) for key, centers in dedup.items()})


def _outside_dimension(system: SpinSystem, members: Sequence[int]) -> float:
    inside = set(members)
    return float(math.prod(n.isotope.dimension for i, n in enumerate(system.nuclei) if i not in inside))


def _member_set_spectrum(system: SpinSystem,
                         settings: SpectrometerSettings,
                         members: Tuple[int, ...],
                         centers: Sequence[int],
                         reduce_above: int) -> Tuple[StickSpectrum, int]:
    """Summed spin-resolved spectra of ``centers`` whose clusters all equal ``members``"""
    sub = system.subsystem(members)
    weights = detection_weights(system, settings)
    right = weights[list(members)]
    position = {m: p for p, m in enumerate(members)}
    left = np.zeros(len(members), dtype=np.float64)
    for c in centers:
        left[position[c]] += weights[c]
    tolerance = 1e-3 * settings.eta
    # the centers together may cover the whole right operator
    symmetric = np.array_equal(left, right)

    groups = reducible_groups(detect_equivalence(sub)) if len(members) > reduce_above else []
    if groups:
        # the cap applies to each effective system of the reduction, not to the raw cluster
        spectrum = reduced_spectra(sub, settings, groups, [None if symmetric else left], right,
                                   coalesce_tolerance=tolerance)[0]
        largest = spectrum.metadata.get("largest_sector", 0)
    else:
        check_dimension(sub.dimension, settings, f"cluster of {len(members)} spins")
        hamiltonian = build_hamiltonian(sub, settings)
        eig = diagonalize_blocks(hamiltonian)
        raising, _ = collective_ladder(sub, settings, weights=right, basis=hamiltonian.basis)
        lowering = None
        if not symmetric:
            _, lowering = collective_ladder(sub, settings, weights=left, basis=hamiltonian.basis)
        spectrum = stick_spectra(eig, [lowering], raising, coalesce_tolerance=tolerance)[0]
        largest = eig.largest_sector
    return spectrum.scaled(_outside_dimension(system, members)), largest


def spin_resolved_spectrum(system: SpinSystem,
                           settings: SpectrometerSettings,
                           cluster: Cluster,
                           reduce_above: int = DEFAULT_REDUCE_ABOVE) -> StickSpectrum:
    """Stick spectrum C_i of the cluster's center

    The left operator is gamma_i I-_i on the center only and the right operator is
    sum_j gamma_j I+_j over the cluster members, both restricted to detected nuclei. The
    weights are scaled by the dimension of the spins outside the cluster, so that they
    add up like traces over the whole system.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    cluster : Cluster
    reduce_above : int
        Clusters with more members than this use the composite-spin reduction when they
        contain equivalent spins.

    Returns
    -------
    StickSpectrum
    """
    members = cluster.key
    if detection_weights(system, settings)[cluster.center] == 0.0:
        return StickSpectrum(metadata={"center": cluster.center, "members": list(members)})
    spectrum, _ = _member_set_spectrum(system, settings, members, [cluster.center], reduce_above)
    spectrum.metadata.update({"center": cluster.center, "members": list(members)})
    return spectrum


def assemble_spectrum(system: SpinSystem,
                      settings: SpectrometerSettings,
                      max_size: int,
                      *,
                      growth: str = "max",
                      reduce_above: int = DEFAULT_REDUCE_ABOVE,
                      workers: Optional[int] = None,
                      plan: Optional[ClusterPlan] = None) -> StickSpectrum:
    """Approximate stick spectrum as the sum of spin-resolved spectra over all centers

    Each distinct member set is diagonalized once and serves every center whose cluster
    it is. Since C_i is linear in the center's lowering operator, the centers of one member
    set are handled together with a single combined lowering operator.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    max_size : int
        Largest cluster size. Values above the number of nuclei are clipped.
    growth : str
        Cluster growth rule, see `build_cluster`.
    reduce_above : int
        See `spin_resolved_spectrum`.
    workers : int, optional
        Threads over which member sets are distributed.
    plan : ClusterPlan, optional
        A precomputed plan for the same system, settings and size.

    Returns
    -------
    StickSpectrum
        Canonical and coalesced at 1e-3 * eta. ``metadata`` records ``clusters``,
        ``distinct_clusters``, ``diagonalizations``, ``largest_sector`` and
        ``peak_memory_bytes``.
    """
    if max_size < 1:
        raise ValueError(f"max_size must be at least 1, not {max_size}")
    max_size = min(max_size, system.num_nuclei)
    if plan is None:
        plan = plan_clusters(system, settings, max_size, growth)
    weights = detection_weights(system, settings)
    tasks = []
    for members, centers in plan.dedup.items():
        detected = [c for c in centers if weights[c] != 0.0]
        if detected:
            tasks.append((members, detected))
    logger.info("%d clusters of at most %d spins, %d distinct, %d to diagonalize",
                system.num_nuclei, max_size, plan.num_distinct, len(tasks))

    def solve(task):
        members, centers = task
        return _member_set_spectrum(system, settings, members, centers, reduce_above)

    if workers is not None and workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(solve, tasks))
    else:
        solved = [solve(task) for task in tasks]

    largest = max((size for _, size in solved), default=0)
    metadata = {
        "method": "cluster",
        "max_size": max_size,
        "clusters": len(plan.clusters),
        "distinct_clusters": plan.num_distinct,
        "diagonalizations": len(tasks),
        "largest_sector": int(largest),
        "peak_memory_bytes": 16 * int(largest) ** 2,
        "system": system.digest(),
        "settings": settings.digest(),
    }
    combined = StickSpectrum.concatenate([spectrum for spectrum, _ in solved], metadata)
    return combined.coalesced(1e-3 * settings.eta).above_floor(DEFAULT_WEIGHT_FLOOR)

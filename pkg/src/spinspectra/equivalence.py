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

import itertools
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from spinspectra.exact import DEFAULT_WEIGHT_FLOOR, StickSpectrum, diagonalize_blocks, stick_spectra
from spinspectra.operators import build_hamiltonian, collective_ladder
from spinspectra.spin_system import (Isotope, Nucleus, SpectrometerSettings, SpinSystem, check_dimension,
                                     detection_weights)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ASSIGNMENTS = 10_000


@dataclass(frozen=True)
class EquivalenceGroup:
    """Magnetically equivalent nuclei

    ``external`` lists ``(k, J_hz)`` for every non-member k with a non-zero coupling to
    the group, and ``intra_coupling`` is the J shared by all pairs of members.
    """
    members: Tuple[int, ...]
    isotope: Isotope
    delta: float
    external: Tuple[Tuple[int, float], ...]
    intra_coupling: float = 0.0

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_spin_half(self) -> bool:
        return self.isotope.two_spin == 1


@dataclass(frozen=True, eq=False)
class IrrepAssignment:
    """One choice of total spin per group, with the effective system it produces

    ``two_js`` holds twice the chosen total spin of each group. ``sources`` maps each
    site of ``system`` to the original nuclei it stands for.
    """
    two_js: Tuple[int, ...]
    multiplicity: int
    system: Optional[SpinSystem]
    sources: Tuple[Tuple[int, ...], ...]

    @property
    def dimension(self) -> int:
        return 1 if self.system is None else self.system.dimension


def _equivalent(system: SpinSystem, j: np.ndarray, a: int, b: int, tolerance: float) -> bool:
    na, nb = system.nuclei[a], system.nuclei[b]
    if na.isotope != nb.isotope or na.delta != nb.delta:
        return False
    others = np.ones(system.num_nuclei, dtype=bool)
    others[[a, b]] = False
    return bool(np.all(np.abs(j[a, others] - j[b, others]) <= tolerance))


def detect_equivalence(system: SpinSystem, tolerance: float = 1e-12) -> List[EquivalenceGroup]:
    """Partition the nuclei into groups of magnetically equivalent spins

    Two nuclei are equivalent when they share isotope and chemical shift exactly and
    couple identically (within ``tolerance`` Hz) to every other nucleus. This relation is
    transitive, and it forces the couplings inside a group to be uniform.

    Returns
    -------
    list of EquivalenceGroup
        Groups with at least two members, ordered by their lowest member.

    Examples
    --------
    >>> import spinspectra
    >>> h = spinspectra.ISOTOPES["1H"]
    >>> methyl = [spinspectra.Nucleus.from_ppm(h, 1.0) for _ in range(3)]
    >>> system = spinspectra.SpinSystem(methyl + [spinspectra.Nucleus.from_ppm(h, 4.0)],
    ...                                 {(0, 3): 7.0, (1, 3): 7.0, (2, 3): 7.0})
    >>> [g.members for g in spinspectra.detect_equivalence(system)]
    [(0, 1, 2)]
    """
    j = system.coupling_matrix()
    graph = nx.Graph()
    graph.add_nodes_from(range(system.num_nuclei))
    for a, b in itertools.combinations(range(system.num_nuclei), 2):
        if _equivalent(system, j, a, b, tolerance):
            graph.add_edge(a, b)
    groups = []
    for component in nx.connected_components(graph):
        if len(component) < 2:
            continue
        members = tuple(sorted(component))
        first = system.nuclei[members[0]]
        outside = [k for k in range(system.num_nuclei) if k not in component]
        external = tuple((k, float(j[members[0], k])) for k in outside if j[members[0], k] != 0.0)
        groups.append(EquivalenceGroup(members=members, isotope=first.isotope, delta=first.delta,
                                       external=external, intra_coupling=float(j[members[0], members[1]])))
    return sorted(groups, key=lambda g: g.members[0])


def multiplicity(n: int, two_j: int) -> int:
    """Number of copies of total spin j = two_j/2 among n spin-1/2 particles"""
    if (n - two_j) % 2 or not 0 <= two_j <= n:
        return 0
    return (two_j + 1) * math.factorial(n) // (
        math.factorial((n + two_j) // 2 + 1) * math.factorial((n - two_j) // 2))


def irrep_decomposition(n: int, two_spin: int = 1) -> List[Tuple[float, int]]:
    """Total-spin content of n coupled spin-1/2 particles

    Parameters
    ----------
    n : int
        Group size, at least 2.
    two_spin : int
        Twice the member spin. Only spin-1/2 members are supported.

    Returns
    -------
    list of (float, int)
        ``(j, g)`` pairs from j = n/2 downwards, where g counts the copies of spin j.

    Examples
    --------
    >>> from spinspectra import irrep_decomposition
    >>> irrep_decomposition(3)
    [(1.5, 1), (0.5, 2)]
    >>> irrep_decomposition(2)
    [(1.0, 1), (0.0, 1)]
    """
    if two_spin != 1:
        raise ValueError(f"Only groups of spin-1/2 nuclei can be reduced, not spin {two_spin / 2}")
    if n < 2:
        raise ValueError(f"An equivalence group needs at least two members, not {n}")
    return [(two_j / 2, multiplicity(n, two_j)) for two_j in range(n, -1, -2)]


def _composite_nucleus(system: SpinSystem, group: EquivalenceGroup, two_j: int) -> Nucleus:
    label = "+".join(system.nuclei[m].label or str(m) for m in group.members)
    isotope = Isotope(symbol=group.isotope.symbol, gamma=group.isotope.gamma, two_spin=two_j)
    return Nucleus(isotope=isotope, delta=group.delta, label=f"{label} (j={two_j}/2)")


def _effective_system(system: SpinSystem,
                      groups: Sequence[EquivalenceGroup],
                      two_js: Sequence[int]) -> Tuple[Optional[SpinSystem], Tuple[Tuple[int, ...], ...]]:
    owner = {m: g for g, group in enumerate(groups) for m in group.members}
    sources: List[Tuple[int, ...]] = []
    nuclei: List[Nucleus] = []
    for i, nucleus in enumerate(system.nuclei):
        if i not in owner:
            sources.append((i,))
            nuclei.append(nucleus)
        else:
            g = owner[i]
            group = groups[g]
            # a composite sits where its lowest member was; singlets drop out
            if i == group.members[0] and two_js[g] > 0:
                sources.append(group.members)
                nuclei.append(_composite_nucleus(system, group, two_js[g]))
    if not nuclei:
        return None, ()
    couplings = {}
    for a, b in itertools.combinations(range(len(nuclei)), 2):
        j_hz = system.coupling(sources[a][0], sources[b][0])
        if j_hz != 0.0:
            couplings[(a, b)] = j_hz
    return SpinSystem(nuclei, couplings), tuple(sources)


def irrep_assignments(system: SpinSystem, groups: Sequence[EquivalenceGroup]) -> Iterator[IrrepAssignment]:
    """Every combination of per-group total spins, with multiplicities and effective systems"""
    for group in groups:
        if not group.is_spin_half:
            raise ValueError(f"Group {group.members} has spin {group.isotope.spin} members; "
                             "only spin-1/2 groups can be reduced")
    choices = [[(int(round(2 * j)), g) for j, g in irrep_decomposition(group.size)] for group in groups]
    for combo in itertools.product(*choices):
        two_js = tuple(two_j for two_j, _ in combo)
        effective, sources = _effective_system(system, groups, two_js)
        yield IrrepAssignment(two_js=two_js, multiplicity=math.prod(g for _, g in combo),
                              system=effective, sources=sources)


def reducible_groups(groups: Sequence[EquivalenceGroup]) -> List[EquivalenceGroup]:
    return [g for g in groups if g.is_spin_half and g.size >= 2]


def _limit_assignments(groups: List[EquivalenceGroup], max_assignments: int) -> List[EquivalenceGroup]:
    groups = list(groups)
    count = math.prod(g.size // 2 + 1 for g in groups)
    while groups and count > max_assignments:
        widest = max(range(len(groups)), key=lambda k: (groups[k].size, -k))
        dropped = groups.pop(widest)
        warnings.warn(f"{count} irrep assignments exceed the cap of {max_assignments}; treating group "
                      f"{dropped.members} without reduction", stacklevel=3)
        count = math.prod(g.size // 2 + 1 for g in groups)
    return groups


def _site_weights(weights: np.ndarray, sources: Sequence[Tuple[int, ...]]) -> np.ndarray:
    return np.array([np.mean(weights[list(members)]) for members in sources], dtype=np.float64)


def reduced_spectra(system: SpinSystem,
                    settings: SpectrometerSettings,
                    groups: Sequence[EquivalenceGroup],
                    lefts: Sequence[Optional[Union[Sequence[float], np.ndarray]]],
                    right: Optional[Union[Sequence[float], np.ndarray]] = None,
                    *,
                    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS,
                    weight_floor: float = DEFAULT_WEIGHT_FLOOR,
                    coalesce_tolerance: Optional[float] = None,
                    workers: Optional[int] = None) -> List[StickSpectrum]:
    """Stick spectra for several left weight vectors, using composite spins for ``groups``

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    groups : sequence of EquivalenceGroup
        Disjoint spin-1/2 groups of ``system``.
    lefts : sequence of array-like or None
        Per-nucleus weights of the lowering operator, one spectrum per entry. ``None``
        reuses ``right``. A composite site gets the mean weight of its members.
    right : array-like, optional
        Per-nucleus weights of the raising operator, which must be uniform within each
        group. By default the detection weights.
    max_assignments : int
        Largest number of irrep combinations before groups are left unreduced.
    weight_floor : float
        Relative floor below which sticks are dropped from each result.
    coalesce_tolerance : float, optional
        Merge distance in rad/s. By default 1e-3 * eta.
    workers : int, optional
        Threads over which irrep assignments are distributed.

    Returns
    -------
    list of StickSpectrum
    """
    right = detection_weights(system, settings) if right is None else np.asarray(right, dtype=np.float64)
    lefts = [None if left is None else np.asarray(left, dtype=np.float64) for left in lefts]
    if coalesce_tolerance is None:
        coalesce_tolerance = 1e-3 * settings.eta
    claimed = [m for g in groups for m in g.members]
    if len(set(claimed)) != len(claimed):
        raise ValueError("Equivalence groups must be disjoint")
    for group in groups:
        members = list(group.members)
        if not np.allclose(right[members], right[members[0]], rtol=1e-12, atol=0):
            raise ValueError(f"Raising-operator weights differ inside group {group.members}")
    groups = _limit_assignments(list(groups), max_assignments)

    assignments = list(irrep_assignments(system, groups))
    for assignment in assignments:
        check_dimension(assignment.dimension, settings, "effective system of an irrep assignment")
    logger.debug("reducing %d group(s) into %d irrep assignment(s)", len(groups), len(assignments))

    def solve(assignment: IrrepAssignment) -> Tuple[List[StickSpectrum], int]:
        effective = assignment.system
        if effective is None:
            return [StickSpectrum() for _ in lefts], 1
        hamiltonian = build_hamiltonian(effective, settings)
        eig = diagonalize_blocks(hamiltonian)
        right_eff = _site_weights(right, assignment.sources)
        raising, _ = collective_ladder(effective, settings, weights=right_eff, basis=hamiltonian.basis)
        lowerings = []
        for left in lefts:
            if left is None:
                lowerings.append(None)
            else:
                _, lowering = collective_ladder(effective, settings, weights=_site_weights(left, assignment.sources),
                                                basis=hamiltonian.basis)
                lowerings.append(lowering)
        spectra = stick_spectra(eig, lowerings, raising, weight_floor=0.0,
                                coalesce_tolerance=coalesce_tolerance)
        return [s.scaled(assignment.multiplicity) for s in spectra], eig.largest_sector

    if workers is not None and workers > 1 and len(assignments) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(solve, assignments))
    else:
        solved = [solve(a) for a in assignments]

    metadata = {
        "assignments": len(assignments),
        "reduced_groups": [list(g.members) for g in groups],
        "largest_sector": max(largest for _, largest in solved),
    }
    results = []
    for k in range(len(lefts)):
        combined = StickSpectrum.concatenate([spectra[k] for spectra, _ in solved], metadata)
        results.append(combined.coalesced(coalesce_tolerance).above_floor(weight_floor).canonical())
    return results


def reduced_spectrum(system: SpinSystem,
                     settings: SpectrometerSettings,
                     groups: Sequence[EquivalenceGroup],
                     *,
                     left: Optional[Union[Sequence[float], np.ndarray]] = None,
                     right: Optional[Union[Sequence[float], np.ndarray]] = None,
                     **kwargs) -> StickSpectrum:
    """Stick spectrum of ``system`` computed through the composite-spin reduction of ``groups``

    The intra-group coupling is constant inside each total-spin sector and never shifts a
    transition, so it is left out of the effective systems. With an empty ``groups`` the
    full system is diagonalized directly.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    groups : sequence of EquivalenceGroup
        Usually the output of `detect_equivalence`.
    left, right : array-like, optional
        Per-nucleus ladder weights; see `reduced_spectra`.
    **kwargs
        Passed on to `reduced_spectra`.

    Returns
    -------
    StickSpectrum
    """
    return reduced_spectra(system, settings, groups, [left], right, **kwargs)[0]

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

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

GAMMA_H = 2.6752218708e8
"""Proton gyromagnetic ratio in rad s^-1 T^-1 (CODATA)."""

DEFAULT_MAX_DIMENSION = 2 ** 22


class DimensionCapError(ValueError):
    """Raised when a product space is larger than the configured ``max_dimension``."""


@dataclass(frozen=True)
class Isotope:
    """A nuclear isotope.

    Parameters
    ----------
    symbol : str
        Isotope symbol, for example ``"1H"``.
    gamma : float
        Gyromagnetic ratio in rad s^-1 T^-1.
    two_spin : int
        Twice the spin quantum number, so that spin-1/2 is stored as 1.
    """
    symbol: str
    gamma: float
    two_spin: int = 1

    def __post_init__(self):
        if not math.isfinite(self.gamma) or self.gamma == 0:
            raise ValueError(f"Isotope {self.symbol!r} needs a finite non-zero gamma, not {self.gamma}")
        if int(self.two_spin) != self.two_spin or self.two_spin < 1:
            raise ValueError(f"Isotope {self.symbol!r} has invalid doubled spin {self.two_spin}, "
                             "2*spin must be a positive integer")
        object.__setattr__(self, "two_spin", int(self.two_spin))

    @classmethod
    def from_spin(cls, symbol: str, gamma: float, spin: float) -> "Isotope":
        two_spin = 2 * spin
        if abs(two_spin - round(two_spin)) > 1e-12:
            raise ValueError(f"Spin {spin} of isotope {symbol!r} is not a half-integer")
        return cls(symbol=symbol, gamma=float(gamma), two_spin=int(round(two_spin)))

    @property
    def spin(self) -> float:
        return self.two_spin / 2

    @property
    def dimension(self) -> int:
        """Dimension 2S+1 of the local Hilbert space"""
        return self.two_spin + 1


ISOTOPES: Dict[str, Isotope] = {
    "1H": Isotope("1H", GAMMA_H, 1),
    "31P": Isotope("31P", 1.082915e8, 1),
}


@dataclass(frozen=True)
class Nucleus:
    """A nucleus in a molecule: an isotope together with its chemical shift.

    ``delta`` is dimensionless (1 ppm is ``1e-6``).
    """
    isotope: Isotope
    delta: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValueError(f"Chemical shift of nucleus {self.label!r} must be finite")
        if abs(self.delta) >= 1e-3:
            raise ValueError(f"Chemical shift {self.delta} of nucleus {self.label!r} is outside the sanity "
                             "bound |delta| < 1e-3 (did you pass ppm instead of a dimensionless shift?)")

    @classmethod
    def from_ppm(cls, isotope: Isotope, shift_ppm: float, label: str = "") -> "Nucleus":
        return cls(isotope=isotope, delta=shift_ppm * 1e-6, label=label)

    @property
    def shift_ppm(self) -> float:
        return self.delta * 1e6


class SpinSystem:
    """
    The nuclei of a molecule together with their scalar J couplings.

    The coupling table is symmetric and stored sparsely: only non-zero couplings
    between distinct nuclei are kept, keyed by the ordered pair ``(k, l)`` with ``k < l``.
    Instances are not modified after construction and can be shared between threads.
    """

    def __init__(self,
                 nuclei: Sequence[Nucleus],
                 couplings: Optional[Mapping[Tuple[int, int], float]] = None):
        r"""Constructor for the SpinSystem class

        Parameters
        ----------
        nuclei : sequence of Nucleus
            The nuclei, in the order that defines their indices.
        couplings : dict, optional
            Maps index pairs ``(k, l)`` to the coupling constant J_kl in Hz. Either
            ordering of a pair is accepted, but each unordered pair may only appear once.
            By default there are no couplings.

        Raises
        ------
        ValueError
            If there are no nuclei, an index is out of range, a pair couples a nucleus
            to itself, a pair is repeated, or a coupling is not finite.

        Examples
        --------
        >>> import spinspectra
        >>> h = spinspectra.ISOTOPES["1H"]
        >>> system = spinspectra.SpinSystem(
        ...     [spinspectra.Nucleus.from_ppm(h, 1.0), spinspectra.Nucleus.from_ppm(h, 2.0)],
        ...     {(0, 1): 10.0})
        >>> system
        <spinspectra.SpinSystem object with 2 nuclei and 1 coupling>
        >>> system.coupling(1, 0)
        10.0
        """
        self._nuclei: Tuple[Nucleus, ...] = tuple(nuclei)
        if len(self._nuclei) == 0:
            raise ValueError("A SpinSystem needs at least one nucleus")
        n = len(self._nuclei)
        table: Dict[Tuple[int, int], float] = {}
        for (k, l), j_hz in (couplings or {}).items():
            k, l = int(k), int(l)
            if not (0 <= k < n and 0 <= l < n):
                raise ValueError(f"Coupling ({k}, {l}) refers to a nucleus outside 0..{n - 1}")
            if k == l:
                raise ValueError(f"Coupling ({k}, {l}) couples a nucleus to itself")
            key = (min(k, l), max(k, l))
            if key in table:
                raise ValueError(f"Coupling between nuclei {key[0]} and {key[1]} is given more than once")
            j_hz = float(j_hz)
            if not math.isfinite(j_hz):
                raise ValueError(f"Coupling ({k}, {l}) must be finite, not {j_hz}")
            table[key] = j_hz
        self._couplings = {key: table[key] for key in sorted(table) if table[key] != 0.0}

    @property
    def nuclei(self) -> Tuple[Nucleus, ...]:
        return self._nuclei

    @property
    def num_nuclei(self) -> int:
        return len(self._nuclei)

    def __len__(self) -> int:
        return len(self._nuclei)

    @property
    def couplings(self) -> Dict[Tuple[int, int], float]:
        """The non-zero couplings in Hz, keyed by ``(k, l)`` with ``k < l``"""
        return dict(self._couplings)

    def coupling(self, k: int, l: int) -> float:
        """J_kl in Hz (zero if the pair is not coupled)"""
        return self._couplings.get((min(k, l), max(k, l)), 0.0)

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric N x N matrix of couplings in Hz with a zero diagonal"""
        n = self.num_nuclei
        j = np.zeros((n, n), dtype=np.float64)
        for (k, l), j_hz in self._couplings.items():
            j[k, l] = j_hz
            j[l, k] = j_hz
        return j

    @property
    def two_spins(self) -> np.ndarray:
        return np.array([nucleus.isotope.two_spin for nucleus in self._nuclei], dtype=np.int64)

    @property
    def dimension(self) -> int:
        """Dimension of the full product space, prod(2S_i + 1)"""
        return math.prod(nucleus.isotope.dimension for nucleus in self._nuclei)

    def subsystem(self, sites: Iterable[int]) -> "SpinSystem":
        """The spin system restricted to ``sites``, with couplings to all other nuclei dropped.

        Nuclei are re-indexed in the order given by ``sites``.
        """
        sites = list(sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"Subset {sites} contains repeated nuclei")
        for s in sites:
            if not 0 <= s < self.num_nuclei:
                raise ValueError(f"Subset index {s} is outside 0..{self.num_nuclei - 1}")
        position = {s: p for p, s in enumerate(sites)}
        couplings = {
            (position[k], position[l]): j_hz
            for (k, l), j_hz in self._couplings.items()
            if k in position and l in position
        }
        return SpinSystem([self._nuclei[s] for s in sites], couplings)

    def to_networkx(self) -> nx.Graph:
        """Convert to a NetworkX coupling graph

        Every nucleus is a node with attributes ``label``, ``isotope`` and ``shift_ppm``, and
        every non-zero coupling is an edge with attribute ``j_hz``.

        Returns
        -------
        NetworkX.Graph
        """
        graph = nx.Graph()
        for i, nucleus in enumerate(self._nuclei):
            graph.add_node(i, label=nucleus.label, isotope=nucleus.isotope.symbol, shift_ppm=nucleus.shift_ppm)
        for (k, l), j_hz in self._couplings.items():
            graph.add_edge(k, l, j_hz=j_hz)
        return graph

    def connected_components(self) -> List[Tuple[int, ...]]:
        """Sets of nuclei linked by chains of couplings, ordered by their lowest index"""
        components = [tuple(sorted(c)) for c in nx.connected_components(self.to_networkx())]
        return sorted(components)

    def digest(self) -> str:
        """A short content hash, stable across runs"""
        payload = {
            "nuclei": [[n.label, n.isotope.symbol, repr(n.isotope.gamma), n.isotope.two_spin, repr(n.delta)]
                       for n in self._nuclei],
            "couplings": [[k, l, repr(j)] for (k, l), j in self._couplings.items()],
        }
        return hashlib.sha256(json.dumps(payload).encode("utf-8")).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinSystem):
            return NotImplemented
        return self._nuclei == other._nuclei and self._couplings == other._couplings

    def __hash__(self) -> int:
        return hash((self._nuclei, tuple(self._couplings.items())))

    def __repr__(self) -> str:
        n = self.num_nuclei
        c = len(self._couplings)
        return "<spinspectra.SpinSystem object with " \
               "{} nucle{} and {} coupling{}>".format(n, 'i' if n != 1 else 'us', c, 's' if c != 1 else '')


@dataclass(frozen=True)
class SpectrometerSettings:
    """Physical and numerical parameters of a simulated measurement.

    Parameters
    ----------
    ref_frequency : float
        Proton reference frequency in Hz, e.g. ``400e6``.
    fwhm : float
        Line width (full width at half maximum) in Hz.
    detect_isotope : str, optional
        Only nuclei of this isotope enter the detected magnetization. By default every
        nucleus is detected.
    epsilon_metric : float
        Regularizer of the cluster importance metric in rad/s.
    grid_points : int, optional
        Number of points of the equal-area sampling grid. By default 2,000, or 20,000 when
        ``fwhm <= 0.1``.
    max_dimension : int
        Largest product-space dimension that will be built.
    """
    ref_frequency: float
    fwhm: float = 1.0
    detect_isotope: Optional[str] = None
    epsilon_metric: float = 0.1
    grid_points: Optional[int] = None
    max_dimension: int = DEFAULT_MAX_DIMENSION

    def __post_init__(self):
        for name in ("ref_frequency", "fwhm", "epsilon_metric"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, not {value}")
        if self.grid_points is not None and self.grid_points < 2:
            raise ValueError(f"grid_points must be at least 2, not {self.grid_points}")
        if self.max_dimension < 1:
            raise ValueError(f"max_dimension must be positive, not {self.max_dimension}")

    @property
    def eta(self) -> float:
        """Lorentzian half width in rad/s, pi * fwhm"""
        return math.pi * self.fwhm

    @property
    def omega_ref(self) -> float:
        return 2 * math.pi * self.ref_frequency

    @property
    def field_strength(self) -> float:
        """Static field B^z in tesla implied by the proton reference frequency"""
        return self.omega_ref / GAMMA_H

    @property
    def num_grid_points(self) -> int:
        if self.grid_points is not None:
            return self.grid_points
        return 20000 if self.fwhm <= 0.1 else 2000

    def detects(self, nucleus: Nucleus) -> bool:
        return self.detect_isotope is None or nucleus.isotope.symbol == self.detect_isotope

    def digest(self) -> str:
        payload = [repr(self.ref_frequency), repr(self.fwhm), self.detect_isotope,
                   repr(self.epsilon_metric), self.num_grid_points, self.max_dimension]
        return hashlib.sha256(json.dumps(payload).encode("utf-8")).hexdigest()[:16]


def larmor_frequency(nucleus: Nucleus, settings: SpectrometerSettings) -> float:
    """Angular Larmor frequency gamma * (1 + delta) * B^z in rad/s

    Examples
    --------
    >>> import spinspectra
    >>> proton = spinspectra.Nucleus(spinspectra.ISOTOPES["1H"], 0.0)
    >>> omega = spinspectra.larmor_frequency(proton, spinspectra.SpectrometerSettings(400e6))
    >>> round(omega / (2 * 3.141592653589793) / 1e6, 6)
    400.0
    """
    return nucleus.isotope.gamma * (1.0 + nucleus.delta) * settings.field_strength


def larmor_frequencies(system: SpinSystem, settings: SpectrometerSettings) -> np.ndarray:
    return np.array([larmor_frequency(n, settings) for n in system.nuclei], dtype=np.float64)


def detection_weights(system: SpinSystem, settings: SpectrometerSettings) -> np.ndarray:
    """gamma_i for detected nuclei and zero for the rest"""
    return np.array([n.isotope.gamma if settings.detects(n) else 0.0 for n in system.nuclei],
                    dtype=np.float64)


def active_count(system: SpinSystem, settings: SpectrometerSettings) -> int:
    """Number of detected nuclei, the integral of a normalized spectrum"""
    return sum(1 for n in system.nuclei if settings.detects(n))


def check_dimension(dimension: int, settings: SpectrometerSettings, what: str = "product space") -> None:
    if dimension > settings.max_dimension:
        raise DimensionCapError(
            f"The {what} has dimension {dimension}, above the cap of {settings.max_dimension} states. "
            "Use a smaller maximum cluster size, allow equivalence reduction, or raise max_dimension.")

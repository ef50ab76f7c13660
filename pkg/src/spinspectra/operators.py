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

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, diags

from spinspectra.spin_system import (SpectrometerSettings, SpinSystem, check_dimension,
                                     detection_weights, larmor_frequencies)


@dataclass(frozen=True)
class ProductBasisState:
    """One product state, with quantum numbers stored doubled (spin-1/2 up is ``1``)."""
    two_m: Tuple[int, ...]

    @property
    def two_mz(self) -> int:
        return sum(self.two_m)

    @property
    def m(self) -> Tuple[float, ...]:
        return tuple(v / 2 for v in self.two_m)

    @property
    def mz(self) -> float:
        return self.two_mz / 2


class ProductBasis:
    """
    The product basis of a set of spins, ordered by total Mz (descending) and then
    lexicographically by the per-site quantum numbers (each site from +S down to -S).

    States of equal Mz are contiguous, so each Mz sector is a slice of the basis.
    Site 0 is the most significant digit of the mixed-radix "natural" index of a state, in
    which local index 0 means m = +S.
    """

    def __init__(self, two_spins: Sequence[int]):
        self.two_spins = np.asarray(two_spins, dtype=np.int64)
        if self.two_spins.ndim != 1 or len(self.two_spins) == 0:
            raise ValueError("A product basis needs at least one site")
        self.dims = self.two_spins + 1
        self.dimension = math.prod(int(d) for d in self.dims)
        n = len(self.dims)
        strides = np.ones(n, dtype=np.int64)
        for i in range(n - 2, -1, -1):
            strides[i] = strides[i + 1] * self.dims[i + 1]
        self.strides = strides

        natural = np.arange(self.dimension, dtype=np.int64)
        local = np.empty((self.dimension, n), dtype=np.int16)
        for i in range(n):
            local[:, i] = (natural // strides[i]) % self.dims[i]
        two_mz = (self.two_spins[None, :] - 2 * local).sum(axis=1)
        order = np.argsort(-two_mz, kind="stable")

        self.natural_index = order
        self.position = np.empty(self.dimension, dtype=np.int64)
        self.position[order] = np.arange(self.dimension, dtype=np.int64)
        self.local = local[order]
        self.two_mz = two_mz[order]

        boundaries = np.flatnonzero(np.diff(self.two_mz)) + 1
        starts = np.concatenate(([0], boundaries))
        stops = np.concatenate((boundaries, [self.dimension]))
        self.sectors: List[Tuple[int, slice]] = [
            (int(self.two_mz[a]), slice(int(a), int(b))) for a, b in zip(starts, stops)
        ]

    @property
    def num_sites(self) -> int:
        return len(self.dims)

    def two_m(self) -> np.ndarray:
        """Doubled per-site quantum numbers of every basis state, shape (dimension, num_sites)"""
        return self.two_spins[None, :] - 2 * self.local.astype(np.int64)

    def state(self, index: int) -> ProductBasisState:
        return ProductBasisState(tuple(int(v) for v in self.two_m()[index]))

    def sector_dimensions(self) -> List[int]:
        return [s.stop - s.start for _, s in self.sectors]

    def __repr__(self) -> str:
        return "<spinspectra.ProductBasis object with {} site{} and {} state{}>".format(
            self.num_sites, 's' if self.num_sites != 1 else '',
            self.dimension, 's' if self.dimension != 1 else '')


@dataclass(frozen=True, eq=False)
class SpinHamiltonian:
    """A sparse Hamiltonian in rad/s together with the basis it is written in.

    ``sites`` are the indices of the parent system's nuclei, in the order of the basis
    sites, and ``system`` is the restricted system the matrix was built from. ``matrix``
    is written in a frame rotating about z at ``frame`` rad/s, that is H + frame * Mz.
    """
    matrix: csr_matrix
    basis: ProductBasis
    system: SpinSystem
    sites: Tuple[int, ...]
    frame: float = 0.0

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def lab_matrix(self) -> csr_matrix:
        """The Hamiltonian in the laboratory frame, H = matrix - frame * Mz"""
        if self.frame == 0.0:
            return self.matrix
        return (self.matrix - diags(self.frame * 0.5 * self.basis.two_mz.astype(np.float64))).tocsr()


def frame_gamma(system: SpinSystem, settings: SpectrometerSettings) -> float:
    """Gyromagnetic ratio whose reference Larmor frequency sets the rotating frame

    The first detected nucleus decides, or the first nucleus when none is detected.
    """
    for nucleus in system.nuclei:
        if settings.detects(nucleus):
            return nucleus.isotope.gamma
    return system.nuclei[0].isotope.gamma


def zeeman_offsets(system: SpinSystem, settings: SpectrometerSettings, gamma: float) -> np.ndarray:
    """omega_l - gamma * B^z for every nucleus, without forming the full Larmor frequencies"""
    b = settings.field_strength
    return np.array([n.isotope.gamma * n.delta * b + (n.isotope.gamma - gamma) * b for n in system.nuclei],
                    dtype=np.float64)


def _raise_coefficients(two_s: np.ndarray, two_m: np.ndarray) -> np.ndarray:
    # sqrt(S(S+1) - m(m+1)) in doubled units
    return 0.5 * np.sqrt((two_s * (two_s + 2) - two_m * (two_m + 2)).astype(np.float64))


def _lower_coefficients(two_s: np.ndarray, two_m: np.ndarray) -> np.ndarray:
    return 0.5 * np.sqrt((two_s * (two_s + 2) - two_m * (two_m - 2)).astype(np.float64))


def _resolve_subset(system: SpinSystem, subset: Optional[Sequence[int]]) -> Tuple[SpinSystem, Tuple[int, ...]]:
    if subset is None:
        return system, tuple(range(system.num_nuclei))
    subset = tuple(int(s) for s in subset)
    if len(subset) == 0:
        raise ValueError("A subset must contain at least one nucleus")
    return system.subsystem(subset), subset


def build_hamiltonian(system: SpinSystem,
                      settings: SpectrometerSettings,
                      subset: Optional[Sequence[int]] = None,
                      basis: Optional[ProductBasis] = None,
                      frame: Optional[float] = None) -> SpinHamiltonian:
    r"""Build the liquid-state spin Hamiltonian in the product basis

    .. math::

        H = -\sum_l \omega_l I^z_l + 2\pi \sum_{k<l} J_{kl} \mathbf{I}_k \cdot \mathbf{I}_l

    in rad/s. Couplings to nuclei outside ``subset`` are dropped. The matrix is stored in a
    frame rotating at ``frame``, H + frame * Mz, which has the same eigenvectors since the
    total Mz is conserved. Energies then stay of the order of the chemical shifts, and the
    frame is added back to every transition frequency.

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
    subset : sequence of int, optional
        Indices of the nuclei to include. By default, every nucleus.
    basis : ProductBasis, optional
        A basis previously built for the same sites, to avoid rebuilding it.
    frame : float, optional
        Rotation frequency in rad/s. By default the reference Larmor frequency
        gamma * B^z of the isotope picked by `frame_gamma`; 0.0 gives the laboratory frame.

    Returns
    -------
    SpinHamiltonian

    Raises
    ------
    DimensionCapError
        If the product space has more than ``settings.max_dimension`` states.

    Examples
    --------
    >>> import spinspectra
    >>> proton = spinspectra.Nucleus(spinspectra.ISOTOPES["1H"], 0.0)
    >>> settings = spinspectra.SpectrometerSettings(1.0)
    >>> h = spinspectra.build_hamiltonian(spinspectra.SpinSystem([proton]), settings, frame=0.0)
    >>> h.matrix.toarray().round(6).tolist()
    [[-3.141593, 0.0], [0.0, 3.141593]]
    """
    restricted, sites = _resolve_subset(system, subset)
    check_dimension(restricted.dimension, settings)
    if basis is None:
        basis = ProductBasis(restricted.two_spins)
    elif basis.dimension != restricted.dimension or not np.array_equal(basis.two_spins, restricted.two_spins):
        raise ValueError("The given basis does not match the spins of the requested subset")

    if frame is None:
        gamma = frame_gamma(restricted, settings)
        frame = gamma * settings.field_strength
        offsets = zeeman_offsets(restricted, settings, gamma)
    else:
        offsets = larmor_frequencies(restricted, settings) - frame
    two_m = basis.two_m()
    diagonal = -0.5 * (two_m @ offsets)
    rows = [np.arange(basis.dimension, dtype=np.int64)]
    cols = [rows[0]]
    data = [diagonal]

    natural = basis.natural_index
    local = basis.local
    two_s = basis.two_spins
    for (k, l), j_hz in restricted.couplings.items():
        scale = 2 * math.pi * j_hz
        data[0] = data[0] + scale * 0.25 * two_m[:, k] * two_m[:, l]
        # pi*J (I+_k I-_l + I-_k I+_l); the second term is added as the transpose
        can = (local[:, k] > 0) & (local[:, l] < basis.dims[l] - 1)
        src = np.flatnonzero(can)
        dst_natural = natural[src] - basis.strides[k] + basis.strides[l]
        dst = basis.position[dst_natural]
        values = 0.5 * scale \
            * _raise_coefficients(two_s[k], two_m[src, k]) \
            * _lower_coefficients(two_s[l], two_m[src, l])
        rows.extend([dst, src])
        cols.extend([src, dst])
        data.extend([values, values])

    matrix = coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(basis.dimension, basis.dimension)).tocsr()
    matrix.sum_duplicates()
    return SpinHamiltonian(matrix=matrix, basis=basis, system=restricted, sites=sites, frame=float(frame))


def collective_ladder(system: SpinSystem,
                      settings: SpectrometerSettings,
                      sites: Optional[Sequence[int]] = None,
                      weights: Union[None, Sequence[float], np.ndarray] = None,
                      basis: Optional[ProductBasis] = None) -> Tuple[csr_matrix, csr_matrix]:
    """Collective raising and lowering operators M+ = sum_i w_i I+_i and M- = (M+)^dagger

    Parameters
    ----------
    system : SpinSystem
    settings : SpectrometerSettings
        Supplies the detection filter used for the default weights.
    sites : sequence of int, optional
        Nuclei spanning the basis, in basis order. By default, every nucleus.
    weights : array-like, optional
        One weight per entry of ``sites``. By default gamma_i, set to zero for nuclei
        that are not detected.
    basis : ProductBasis, optional
        A basis previously built for the same sites.

    Returns
    -------
    (scipy.sparse.csr_matrix, scipy.sparse.csr_matrix)
        M+ and M-, in the same basis as ``build_hamiltonian`` uses for these sites.
    """
    restricted, sites = _resolve_subset(system, sites)
    check_dimension(restricted.dimension, settings)
    if weights is None:
        weights = detection_weights(restricted, settings)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(sites),):
        raise ValueError(f"Expected {len(sites)} ladder weights, got shape {weights.shape}")
    if basis is None:
        basis = ProductBasis(restricted.two_spins)

    two_m = basis.two_m()
    rows, cols, data = [], [], []
    for i in range(basis.num_sites):
        if weights[i] == 0.0:
            continue
        src = np.flatnonzero(basis.local[:, i] > 0)
        dst = basis.position[basis.natural_index[src] - basis.strides[i]]
        rows.append(dst)
        cols.append(src)
        data.append(weights[i] * _raise_coefficients(basis.two_spins[i], two_m[src, i]))
    if data:
        raising = coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(basis.dimension, basis.dimension)).tocsr()
    else:
        raising = csr_matrix((basis.dimension, basis.dimension), dtype=np.float64)
    return raising, raising.conj().T.tocsr()

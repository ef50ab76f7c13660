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
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid
from scipy.sparse import issparse, spmatrix

from spinspectra.operators import SpinHamiltonian
from spinspectra.spin_system import DimensionCapError

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_FLOOR = 1e-14
ORACLE_MAX_DIMENSION = 2 ** 10


@dataclass(frozen=True, eq=False)
class Sector:
    """Eigen-decomposition of one total-Mz block

    ``states`` is the slice of the product basis spanned by the block.
    """
    two_mz: int
    states: slice
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def mz(self) -> float:
        return self.two_mz / 2

    @property
    def dimension(self) -> int:
        return self.states.stop - self.states.start


@dataclass(frozen=True, eq=False)
class SzBlockEigensystem:
    """Per-sector eigenvalues (rad/s, in the rotating frame of the Hamiltonian) and orthonormal
    eigenvectors of a Hamiltonian.

    Sectors are ordered by decreasing Mz, matching the basis layout.
    """
    hamiltonian: SpinHamiltonian
    sectors: Tuple[Sector, ...]

    @property
    def dimension(self) -> int:
        return sum(s.dimension for s in self.sectors)

    @property
    def largest_sector(self) -> int:
        return max(s.dimension for s in self.sectors)

    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([s.eigenvalues for s in self.sectors])

    def residual(self, sector: Sector) -> float:
        """Relative reconstruction residual ||HV - VE|| / ||H|| of one sector"""
        block = self.hamiltonian.matrix[sector.states, sector.states].toarray()
        v = sector.eigenvectors
        norm = np.linalg.norm(block)
        if norm == 0:
            return 0.0
        return float(np.linalg.norm(block @ v - v * sector.eigenvalues[None, :]) / norm)

    def adjacent_pairs(self) -> List[Tuple[Sector, Sector]]:
        """(lower, upper) sector pairs whose Mz differ by exactly one"""
        pairs = []
        for upper, lower in zip(self.sectors[:-1], self.sectors[1:]):
            if upper.two_mz == lower.two_mz + 2:
                pairs.append((lower, upper))
        return pairs


class StickSpectrum:
    """
    Transition frequencies (rad/s) and weights of a spectral function before broadening.

    Arrays are stored read-only; combining, scaling and coalescing return new objects.
    """

    def __init__(self,
                 frequencies: Union[Sequence[float], np.ndarray] = (),
                 weights: Union[Sequence[float], np.ndarray] = (),
                 metadata: Optional[Dict[str, Any]] = None):
        frequencies = np.array(frequencies, dtype=np.float64).reshape(-1)
        weights = np.array(weights, dtype=np.float64).reshape(-1)
        if frequencies.shape != weights.shape:
            raise ValueError(f"Got {len(frequencies)} frequencies but {len(weights)} weights")
        if not (np.all(np.isfinite(frequencies)) and np.all(np.isfinite(weights))):
            raise ValueError("Stick frequencies and weights must be finite")
        frequencies.setflags(write=False)
        weights.setflags(write=False)
        self._frequencies = frequencies
        self._weights = weights
        self.metadata: Dict[str, Any] = dict(metadata or {})

    @property
    def frequencies(self) -> np.ndarray:
        return self._frequencies

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def __len__(self) -> int:
        return len(self._weights)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self._weights))

    def scaled(self, factor: float) -> "StickSpectrum":
        return StickSpectrum(self._frequencies, self._weights * factor, self.metadata)

    def above_floor(self, floor: float = DEFAULT_WEIGHT_FLOOR) -> "StickSpectrum":
        """Drop sticks with |w| below ``floor`` times the total absolute weight"""
        total = np.sum(np.abs(self._weights))
        if total == 0:
            return StickSpectrum(metadata=self.metadata)
        keep = np.abs(self._weights) >= floor * total
        return StickSpectrum(self._frequencies[keep], self._weights[keep], self.metadata)

    def canonical(self) -> "StickSpectrum":
        """Sorted by frequency, then weight"""
        order = np.lexsort((self._weights, self._frequencies))
        return StickSpectrum(self._frequencies[order], self._weights[order], self.metadata)

    def coalesced(self, tolerance: float) -> "StickSpectrum":
        """Merge chains of sticks whose neighbours are at most ``tolerance`` apart

        Weights are summed and the merged frequency is the |w|-weighted mean. The result
        is canonical. Nothing here knows which sector pair a stick came from, so sticks of
        different pairs merge too; `stick_spectra` coalesces each pair on its own before the
        solvers coalesce the combined result at the same tolerance, which leaves the broadened
        spectrum unchanged.
        """
        if len(self) == 0:
            return StickSpectrum(metadata=self.metadata)
        spectrum = self.canonical()
        f, w = spectrum._frequencies, spectrum._weights
        starts = np.concatenate(([0], np.flatnonzero(np.diff(f) > tolerance) + 1))
        if len(starts) == len(f):
            return spectrum
        merged_w = np.add.reduceat(w, starts)
        abs_w = np.add.reduceat(np.abs(w), starts)
        weighted_f = np.add.reduceat(np.abs(w) * f, starts)
        counts = np.diff(np.concatenate((starts, [len(f)])))
        plain_f = np.add.reduceat(f, starts) / counts
        with np.errstate(invalid="ignore", divide="ignore"):
            merged_f = np.where(abs_w > 0, weighted_f / np.where(abs_w > 0, abs_w, 1.0), plain_f)
        return StickSpectrum(merged_f, merged_w, self.metadata).canonical()

    @classmethod
    def concatenate(cls, spectra: Iterable["StickSpectrum"],
                    metadata: Optional[Dict[str, Any]] = None) -> "StickSpectrum":
        spectra = list(spectra)
        if not spectra:
            return cls(metadata=metadata)
        return cls(np.concatenate([s.frequencies for s in spectra]),
                   np.concatenate([s.weights for s in spectra]),
                   metadata)

    def __repr__(self) -> str:
        k = len(self)
        return "<spinspectra.StickSpectrum object with {} stick{} and total weight {:.6g}>".format(
            k, 's' if k != 1 else '', self.total_weight)


def diagonalize_blocks(hamiltonian: SpinHamiltonian, workers: Optional[int] = None) -> SzBlockEigensystem:
    """Dense diagonalization of every total-Mz sector of ``hamiltonian``

    Parameters
    ----------
    hamiltonian : SpinHamiltonian
        Output of `spinspectra.build_hamiltonian`.
    workers : int, optional
        Number of threads over which sectors are distributed. By default sectors are
        diagonalized one after the other.

    Returns
    -------
    SzBlockEigensystem

    Raises
    ------
    ValueError
        If a block is not Hermitian or the matrix couples different Mz sectors.

    Examples
    --------
    >>> import spinspectra
    >>> h = spinspectra.ISOTOPES["1H"]
    >>> system = spinspectra.SpinSystem([spinspectra.Nucleus(h, 0.0) for _ in range(4)])
    >>> settings = spinspectra.SpectrometerSettings(400e6)
    >>> eig = spinspectra.diagonalize_blocks(spinspectra.build_hamiltonian(system, settings))
    >>> [s.dimension for s in eig.sectors]
    [1, 4, 6, 4, 1]
    """
    matrix = hamiltonian.matrix
    sectors = hamiltonian.basis.sectors
    inside = sum(matrix[s, s].nnz for _, s in sectors)
    if inside != matrix.nnz:
        raise ValueError("The Hamiltonian couples different total-Mz sectors and cannot be block diagonalized")

    def solve(sector: Tuple[int, slice]) -> Sector:
        two_mz, states = sector
        block = matrix[states, states].toarray()
        scale = max(1.0, float(np.max(np.abs(block))))
        if np.max(np.abs(block - block.conj().T)) > 1e-12 * scale:
            raise ValueError(f"The Mz={two_mz / 2} block of the Hamiltonian is not Hermitian")
        # Shifting by the mean diagonal keeps any remaining Zeeman offset out of the solver.
        shift = float(np.mean(np.real(np.diag(block))))
        values, vectors = scipy.linalg.eigh(block - shift * np.eye(block.shape[0]))
        return Sector(two_mz=two_mz, states=states, eigenvalues=values + shift, eigenvectors=vectors)

    if workers is not None and workers > 1 and len(sectors) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(solve, sectors))
    else:
        solved = [solve(s) for s in sectors]
    logger.debug("diagonalized %d sectors, largest %d", len(solved), max(s.dimension for s in solved))
    return SzBlockEigensystem(hamiltonian=hamiltonian, sectors=tuple(solved))


def _pair_matrix(operator: spmatrix, rows: Sector, cols: Sector) -> np.ndarray:
    block = operator[rows.states, cols.states]
    return rows.eigenvectors.conj().T @ (block @ cols.eigenvectors)


def stick_spectra(eig: SzBlockEigensystem,
                  lefts: Sequence[Optional[spmatrix]],
                  right: spmatrix,
                  *,
                  weight_floor: float = DEFAULT_WEIGHT_FLOOR,
                  coalesce_tolerance: float = 0.0) -> List[StickSpectrum]:
    """`stick_spectrum` for several lowering operators sharing one raising operator

    The projected raising operator is computed once per sector pair and reused for every
    entry of ``lefts``. A ``None`` entry stands for the adjoint of ``right``.
    """
    lefts = list(lefts)
    collected: List[List[StickSpectrum]] = [[] for _ in lefts]
    for lower, upper in eig.adjacent_pairs():
        # upper holds |E_m> (Mz + 1), lower holds |E_n>
        projected_right = _pair_matrix(right, upper, lower)
        frequencies = (lower.eigenvalues[None, :] - upper.eigenvalues[:, None]) + eig.hamiltonian.frame
        for slot, left in zip(collected, lefts):
            if left is None:
                weights = np.abs(projected_right) ** 2
            else:
                projected_left = _pair_matrix(left, lower, upper)
                weights = np.real(projected_left.T * projected_right)
            mask = weights != 0
            pair = StickSpectrum(frequencies[mask], weights[mask])
            if coalesce_tolerance > 0:
                pair = pair.coalesced(coalesce_tolerance)
            slot.append(pair)
    metadata = {"dimension": eig.dimension, "largest_sector": eig.largest_sector}
    return [StickSpectrum.concatenate(slot, metadata).above_floor(weight_floor).canonical() for slot in collected]


def stick_spectrum(eig: SzBlockEigensystem,
                   left: spmatrix,
                   right: Optional[spmatrix] = None,
                   *,
                   weight_floor: float = DEFAULT_WEIGHT_FLOOR,
                   coalesce_tolerance: float = 0.0) -> StickSpectrum:
    r"""Transition frequencies and weights of the spectral function

    For every pair of adjacent Mz sectors, emits a stick at :math:`E_n - E_m` with weight
    :math:`\langle E_n|M^-|E_m\rangle\langle E_m|M^+|E_n\rangle`, where
    :math:`|E_m\rangle` lies one unit of Mz above :math:`|E_n\rangle`.

    Parameters
    ----------
    eig : SzBlockEigensystem
    left : scipy.sparse matrix
        Lowering operator M- of the left side, in the basis of ``eig``.
    right : scipy.sparse matrix, optional
        Raising operator M+ of the right side. By default the adjoint of ``left``, which
        makes every weight a squared modulus.
    weight_floor : float
        Sticks with |w| below this fraction of the total absolute weight are dropped.
    coalesce_tolerance : float
        Sticks of the same sector pair closer than this (rad/s) are merged. Zero keeps
        every stick.

    Returns
    -------
    StickSpectrum
        Sorted by frequency.

    Examples
    --------
    >>> import spinspectra
    >>> proton = spinspectra.Nucleus(spinspectra.ISOTOPES["1H"], 0.0)
    >>> system = spinspectra.SpinSystem([proton])
    >>> settings = spinspectra.SpectrometerSettings(400e6)
    >>> eig = spinspectra.diagonalize_blocks(spinspectra.build_hamiltonian(system, settings))
    >>> raising, lowering = spinspectra.collective_ladder(system, settings)
    >>> sticks = spinspectra.stick_spectrum(eig, lowering, raising)
    >>> len(sticks)
    1
    >>> round(float(sticks.weights[0]) / spinspectra.GAMMA_H ** 2, 12)
    1.0
    """
    if right is None:
        return stick_spectra(eig, [None], left.conj().T.tocsr(), weight_floor=weight_floor,
                             coalesce_tolerance=coalesce_tolerance)[0]
    return stick_spectra(eig, [left], right, weight_floor=weight_floor,
                         coalesce_tolerance=coalesce_tolerance)[0]


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    """Samples of C++(t), demodulated by ``frame_frequency``

    ``values[k]`` is C++(t_k) * exp(-i * frame_frequency * t_k). ``max_offset`` is the
    largest |E_n - E_m - frame_frequency| over transitions with non-zero weight.
    """
    times: np.ndarray
    values: np.ndarray
    frame_frequency: float = 0.0
    max_offset: float = 0.0
    transitions: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def _dense(hamiltonian: Union[SpinHamiltonian, spmatrix, np.ndarray]) -> np.ndarray:
    if isinstance(hamiltonian, SpinHamiltonian):
        hamiltonian = hamiltonian.lab_matrix()
    if issparse(hamiltonian):
        return hamiltonian.toarray()
    return np.asarray(hamiltonian)


def _oracle_eigensystem(hamiltonian, raising, max_dimension: int) -> Tuple[np.ndarray, np.ndarray]:
    h = _dense(hamiltonian)
    if h.shape[0] > max_dimension:
        raise DimensionCapError(f"The time-domain oracle is limited to {max_dimension} states, "
                                f"got a {h.shape[0]}-dimensional Hamiltonian")
    energies, vectors = np.linalg.eigh(h)
    m_plus = raising.toarray() if issparse(raising) else np.asarray(raising)
    if m_plus.shape != h.shape:
        raise ValueError(f"Operator shape {m_plus.shape} does not match Hamiltonian shape {h.shape}")
    return energies, vectors.conj().T @ m_plus @ vectors


def correlation_time_domain(hamiltonian: Union[SpinHamiltonian, spmatrix, np.ndarray],
                            raising: Union[spmatrix, np.ndarray],
                            times: Union[Sequence[float], np.ndarray],
                            frame_frequency: float = 0.0,
                            max_dimension: int = ORACLE_MAX_DIMENSION) -> CorrelationSeries:
    """Trace correlation C++(t) = Tr[M- e^{-iHt} M+ e^{iHt}] from a full eigendecomposition

    Ignores the block structure on purpose, which makes it an independent check of the
    exact engine.

    Parameters
    ----------
    hamiltonian : SpinHamiltonian or matrix
    raising : matrix
        M+ in the same basis.
    times : array-like
        Sample times in seconds.
    frame_frequency : float
        Demodulation frequency in rad/s. The returned samples are multiplied by
        exp(-i * frame_frequency * t).
    max_dimension : int
        Largest Hilbert space accepted.

    Returns
    -------
    CorrelationSeries
    """
    times = np.asarray(times, dtype=np.float64)
    energies, projected = _oracle_eigensystem(hamiltonian, raising, max_dimension)
    weights = np.abs(projected) ** 2
    m_idx, n_idx = np.nonzero(weights > 1e-14 * weights.max())
    w = weights[m_idx, n_idx]
    offsets = energies[n_idx] - energies[m_idx] - frame_frequency
    values = np.zeros(times.shape, dtype=np.complex128)
    if len(w):
        chunk = max(1, (1 << 22) // len(w))
        for start in range(0, len(times), chunk):
            t = times[start:start + chunk]
            values[start:start + chunk] = np.exp(1j * np.outer(t, offsets)) @ w
    max_offset = float(np.max(np.abs(offsets))) if len(w) else 0.0
    return CorrelationSeries(times=times, values=values, frame_frequency=float(frame_frequency),
                             max_offset=max_offset,
                             transitions={"offsets": offsets, "weights": w})


def half_sided_transform(series: CorrelationSeries,
                         eta: float,
                         omega: Union[Sequence[float], np.ndarray],
                         *,
                         oversampling: float = 8.0,
                         min_span: float = 10.0) -> np.ndarray:
    r"""Real part of :math:`\int_0^\infty C_{++}(t) e^{-i\omega t} e^{-\eta t} dt` by the trapezoid rule

    Parameters
    ----------
    series : CorrelationSeries
        Samples on a uniform grid starting at t = 0.
    eta : float
        Broadening in rad/s.
    omega : array-like
        Angular frequencies at which to evaluate the transform.
    oversampling : float
        Required ratio between the Nyquist frequency of the time grid and the largest
        frequency present in the integrand.
    min_span : float
        Required total time span in units of 1/eta.

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    ValueError
        If the time grid is not uniform from zero, too short, or too coarse.
    """
    times = series.times
    omega = np.asarray(omega, dtype=np.float64)
    if eta <= 0:
        raise ValueError(f"eta must be positive, not {eta}")
    if len(times) < 2 or times[0] != 0.0:
        raise ValueError("The time grid must start at t = 0 and contain at least two samples")
    step = times[1] - times[0]
    if step <= 0 or not np.allclose(np.diff(times), step, rtol=1e-9, atol=0):
        raise ValueError("The time grid must be uniform and increasing")
    if times[-1] < min_span / eta * (1 - 1e-9):
        raise ValueError(f"The time grid spans {times[-1]:.3g} s, shorter than {min_span}/eta = "
                         f"{min_span / eta:.3g} s")
    shifted = omega - series.frame_frequency
    highest = series.max_offset + (float(np.max(np.abs(shifted))) if len(shifted) else 0.0)
    if highest * step > math.pi / oversampling:
        raise ValueError(f"The time step {step:.3g} s under-resolves frequencies up to {highest:.6g} rad/s; "
                         f"it must be at most {math.pi / (oversampling * highest):.3g} s")

    damped = series.values * np.exp(-eta * times)
    result = np.empty(omega.shape, dtype=np.float64)
    chunk = max(1, (1 << 22) // len(times))
    for start in range(0, len(omega), chunk):
        phases = np.exp(-1j * np.outer(shifted[start:start + chunk], times))
        result[start:start + chunk] = np.real(trapezoid(phases * damped[None, :], x=times, axis=1))
    return result


def transverse_correlations(hamiltonian: Union[SpinHamiltonian, spmatrix, np.ndarray],
                            raising: Union[spmatrix, np.ndarray],
                            times: Union[Sequence[float], np.ndarray],
                            max_dimension: int = ORACLE_MAX_DIMENSION) -> Tuple[np.ndarray, np.ndarray]:
    """C_XY(t) and C_YY(t) for M^x = (M+ + M-)/2 and M^y = (M+ - M-)/2i

    Here C_AB(t) = Tr[A e^{-iHt} B e^{iHt}].
    """
    energies, plus = _oracle_eigensystem(hamiltonian, raising, max_dimension)
    minus = plus.conj().T
    mx = (plus + minus) / 2
    my = (plus - minus) / 2j
    gaps = energies[:, None] - energies[None, :]  # [m, n] -> E_m - E_n
    xy = mx.T * my
    yy = my.T * my
    c_xy = np.empty(len(times), dtype=np.complex128)
    c_yy = np.empty(len(times), dtype=np.complex128)
    for k, t in enumerate(np.asarray(times, dtype=np.float64)):
        phase = np.exp(-1j * gaps * t)
        c_xy[k] = np.sum(xy * phase)
        c_yy[k] = np.sum(yy * phase)
    return c_xy, c_yy


def raising_from_transverse(c_xy: np.ndarray, c_yy: np.ndarray) -> np.ndarray:
    """C++ = 2 (C_YY + i C_XY), which holds because H conserves total Mz"""
    return 2 * (np.asarray(c_yy) + 1j * np.asarray(c_xy))

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
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from spinspectra.exact import StickSpectrum
from spinspectra.spin_system import SpectrometerSettings

logger = logging.getLogger(__name__)

AXIS_KINDS = ("angular", "ppm")
EPSILON_FLOOR = -16.0
DEFAULT_RESAMPLE_POINTS = 100_000
BINNING_THRESHOLD = 20_000
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class Spectrum:
    """A sampled spectral function

    ``points`` are angular frequencies in rad/s when ``axis`` is ``"angular"`` and chemical
    shifts in ppm when it is ``"ppm"``. They are stored in increasing order; rendering in
    the conventional descending ppm order is left to the writers.
    """
    points: np.ndarray
    amplitudes: np.ndarray
    axis: str = "angular"
    eta: Optional[float] = None
    normalized: bool = False

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64).reshape(-1)
        amplitudes = np.array(self.amplitudes, dtype=np.float64).reshape(-1)
        if self.axis not in AXIS_KINDS:
            raise ValueError(f"Unknown axis kind {self.axis!r}, expected one of {AXIS_KINDS}")
        if points.shape != amplitudes.shape:
            raise ValueError(f"Got {len(points)} points but {len(amplitudes)} amplitudes")
        if len(points) < 2:
            raise ValueError("A spectrum needs at least two sample points")
        if not np.all(np.diff(points) > 0):
            raise ValueError("Spectrum points must be strictly increasing")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(amplitudes))):
            raise ValueError("Spectrum points and amplitudes must be finite")
        if np.any(amplitudes < 0):
            raise ValueError("Spectrum amplitudes must be non-negative")
        points.setflags(write=False)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "amplitudes", amplitudes)

    def __len__(self) -> int:
        return len(self.points)

    def integral(self) -> float:
        """Trapezoid integral over the sample points"""
        return float(trapezoid(self.amplitudes, x=self.points))

    def scaled(self, factor: float) -> "Spectrum":
        return replace(self, amplitudes=self.amplitudes * factor, normalized=False)

    def __repr__(self) -> str:
        return "<spinspectra.Spectrum object with {} points on the {} axis{}>".format(
            len(self), self.axis, ", normalized" if self.normalized else "")


@dataclass(frozen=True)
class SimilarityReport:
    """Cosine similarity of two spectra and the error metric log10(1 - cos)"""
    cos_theta: float
    epsilon: float
    points: int
    support: Tuple[float, float]


def _mixture(x: np.ndarray, frequencies: np.ndarray, weights: np.ndarray, eta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Normalized cumulative distribution and density of a Lorentzian mixture at ``x``"""
    total = weights.sum()
    cdf = np.empty(len(x))
    pdf = np.empty(len(x))
    chunk = max(1, _CHUNK // len(frequencies))
    for start in range(0, len(x), chunk):
        d = (x[start:start + chunk, None] - frequencies[None, :]) / eta
        cdf[start:start + chunk] = (np.arctan(d) / math.pi + 0.5) @ weights
        pdf[start:start + chunk] = (1.0 / (math.pi * eta * (1.0 + d * d))) @ weights
    return cdf / total, pdf / total


def _binned(frequencies: np.ndarray, weights: np.ndarray, width: float) -> Tuple[np.ndarray, np.ndarray]:
    bins = np.floor((frequencies - frequencies[0]) / width).astype(np.int64)
    unique, inverse = np.unique(bins, return_inverse=True)
    summed = np.bincount(inverse, weights=weights, minlength=len(unique))
    centers = np.bincount(inverse, weights=weights * (frequencies - frequencies[0]), minlength=len(unique))
    keep = summed > 0
    return centers[keep] / summed[keep] + frequencies[0], summed[keep]


def equal_area_grid(sticks: StickSpectrum,
                    eta: float,
                    n_points: int,
                    *,
                    fallback_center: float = 0.0,
                    fallback_width: Optional[float] = None,
                    max_iterations: int = 200) -> np.ndarray:
    """Frequency grid holding equal spectral weight between consecutive points

    The grid points are the quantiles (q + 1/2)/n of the analytic cumulative integral of
    the broadened sticks, found by Newton steps kept inside bisection brackets. Absolute
    weights are used, so asymmetric cluster weights still give a monotone distribution.

    Parameters
    ----------
    sticks : StickSpectrum
    eta : float
        Lorentzian half width in rad/s.
    n_points : int
        Number of grid points, at least 2.
    fallback_center, fallback_width : float, optional
        Window of the uniform grid returned when there are no sticks. The width defaults
        to 200 * eta.
    max_iterations : int

    Returns
    -------
    numpy.ndarray
        Strictly increasing angular frequencies.

    Examples
    --------
    >>> import numpy as np
    >>> from spinspectra import StickSpectrum, equal_area_grid
    >>> grid = equal_area_grid(StickSpectrum([0.0], [1.0]), eta=1.0, n_points=3)
    >>> np.round(grid, 6).tolist()
    [-1.732051, 0.0, 1.732051]
    """
    if n_points < 2:
        raise ValueError(f"n_points must be at least 2, not {n_points}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, not {eta}")
    weights = np.abs(sticks.weights)
    frequencies = sticks.frequencies
    if len(weights) == 0 or weights.sum() == 0:
        width = 200 * eta if fallback_width is None else fallback_width
        logger.info("no spectral weight, using a uniform grid of width %g around %g", width, fallback_center)
        return np.linspace(fallback_center - width / 2, fallback_center + width / 2, n_points)

    order = np.argsort(frequencies, kind="stable")
    frequencies, weights = frequencies[order], weights[order]
    if len(weights) > BINNING_THRESHOLD:
        frequencies, weights = _binned(frequencies, weights, eta / 50)
    center = float(np.sum(weights * frequencies) / weights.sum())
    offsets = frequencies - center

    quantiles = (np.arange(n_points) + 0.5) / n_points
    tails = eta * np.tan(math.pi * (quantiles - 0.5))
    lo = offsets[0] + tails
    hi = offsets[-1] + tails
    x = np.clip(tails, lo, hi)
    tolerance = 1e-10 * eta
    active = np.arange(n_points)
    for _ in range(max_iterations):
        if len(active) == 0:
            break
        xa = x[active]
        cdf, pdf = _mixture(xa, offsets, weights, eta)
        residual = cdf - quantiles[active]
        hi[active] = np.where(residual > 0, xa, hi[active])
        lo[active] = np.where(residual <= 0, xa, lo[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - residual / pdf
        outside = ~np.isfinite(step) | (step <= lo[active]) | (step >= hi[active])
        step = np.where(outside, 0.5 * (lo[active] + hi[active]), step)
        x[active] = step
        done = (np.abs(step - xa) <= tolerance) | (hi[active] - lo[active] <= tolerance)
        active = active[~done]
    grid = center + x
    if not np.all(np.diff(grid) > 0):
        grid = np.unique(grid)
        warnings.warn(f"Equal-area grid points collapsed under float resolution; kept {len(grid)} of {n_points}",
                      stacklevel=2)
    return grid


def sample(sticks: StickSpectrum, eta: float, grid: Union[Sequence[float], np.ndarray]) -> Spectrum:
    """Lorentzian-broadened spectral function sum_k w_k eta / (eta^2 + (omega - omega_k)^2) on ``grid``

    Asymmetric cluster weights can leave small negative lobes; they are clipped to zero
    with a warning when they exceed 1e-9 of the maximum.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("The sampling grid must be strictly increasing")
    amplitudes = np.zeros(len(grid))
    if len(sticks):
        frequencies, weights = sticks.frequencies, sticks.weights
        chunk = max(1, _CHUNK // len(frequencies))
        for start in range(0, len(grid), chunk):
            d = grid[start:start + chunk, None] - frequencies[None, :]
            amplitudes[start:start + chunk] = (eta / (eta * eta + d * d)) @ weights
    lowest = float(amplitudes.min()) if len(amplitudes) else 0.0
    if lowest < 0:
        if lowest < -1e-9 * float(np.max(np.abs(amplitudes))):
            warnings.warn(f"Clipping negative spectral amplitudes down to {lowest:.3g}", stacklevel=2)
        amplitudes = np.maximum(amplitudes, 0.0)
    return Spectrum(points=grid, amplitudes=amplitudes, axis="angular", eta=eta)


def normalize(spectrum: Spectrum, target: float) -> Spectrum:
    """Rescale so that the trapezoid integral equals ``target``, usually the number of detected nuclei"""
    integral = spectrum.integral()
    if not integral > 0:
        raise ValueError("Cannot normalize a spectrum without signal")
    return replace(spectrum, amplitudes=spectrum.amplitudes * (target / integral), normalized=True)


def to_ppm_axis(spectrum: Spectrum, settings: SpectrometerSettings) -> Spectrum:
    """Re-express an angular-frequency spectrum against the chemical shift (omega - omega_ref)/omega_ref in ppm

    Examples
    --------
    >>> import numpy as np
    >>> import spinspectra
    >>> settings = spinspectra.SpectrometerSettings(400e6)
    >>> w = settings.omega_ref
    >>> spectrum = spinspectra.Spectrum(np.array([w, w * (1 + 2e-6)]), np.array([1.0, 1.0]))
    >>> np.round(spinspectra.to_ppm_axis(spectrum, settings).points, 9).tolist()
    [0.0, 2.0]
    """
    if spectrum.axis != "angular":
        raise ValueError(f"Expected a spectrum on the angular axis, got the {spectrum.axis} axis")
    omega_ref = settings.omega_ref
    points = (spectrum.points - omega_ref) / omega_ref * 1e6
    return replace(spectrum, points=points, axis="ppm", normalized=False)


def _resampled(spectrum: Spectrum, grid: np.ndarray) -> np.ndarray:
    values = PchipInterpolator(spectrum.points, spectrum.amplitudes, extrapolate=False)(grid)
    return np.nan_to_num(values, nan=0.0)


def cosine_similarity(a: Spectrum, b: Spectrum, n_points: int = DEFAULT_RESAMPLE_POINTS) -> SimilarityReport:
    """Cosine similarity of two spectra and the error metric log10(1 - cos theta)

    Both spectra are interpolated with a shape-preserving monotone cubic onto one uniform
    grid spanning the union of their supports; outside its own samples a spectrum is zero.
    The inner products are plain Riemann sums. The error metric is clamped at -16.

    Raises
    ------
    ValueError
        If the axes differ or either spectrum is identically zero on the grid.
    """
    if a.axis != b.axis:
        raise ValueError(f"Cannot compare a spectrum on the {a.axis} axis with one on the {b.axis} axis")
    if n_points < 2:
        raise ValueError(f"n_points must be at least 2, not {n_points}")
    lo = min(a.points[0], b.points[0])
    hi = max(a.points[-1], b.points[-1])
    grid = np.linspace(lo, hi, n_points)
    ya = _resampled(a, grid)
    yb = _resampled(b, grid)
    norm_a = float(np.dot(ya, ya))
    norm_b = float(np.dot(yb, yb))
    if norm_a == 0 or norm_b == 0:
        raise ValueError("Cosine similarity is undefined for an all-zero spectrum")
    cos_theta = float(np.dot(ya, yb)) / math.sqrt(norm_a * norm_b)
    cos_theta = min(1.0, max(-1.0, cos_theta))
    deficit = 1.0 - cos_theta
    epsilon = EPSILON_FLOOR if deficit <= 10 ** EPSILON_FLOOR else max(EPSILON_FLOOR, math.log10(deficit))
    return SimilarityReport(cos_theta=cos_theta, epsilon=epsilon, points=n_points, support=(float(lo), float(hi)))

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

import numpy as np
import pytest
from scipy.sparse import csr_matrix

from spinspectra import (GAMMA_H, ISOTOPES, DimensionCapError, Nucleus, SpectrometerSettings, SpinSystem,
                         StickSpectrum, build_hamiltonian, collective_ladder, correlation_time_domain,
                         diagonalize_blocks, half_sided_transform, raising_from_transverse, sample,
                         stick_spectrum, transverse_correlations)
from spinspectra.exact import stick_spectra
from spinspectra.operators import SpinHamiltonian
from spinspectra.spin_system import detection_weights, larmor_frequency

H = ISOTOPES["1H"]
P = ISOTOPES["31P"]


def abx_system() -> SpinSystem:
    nuclei = [Nucleus.from_ppm(H, 1.00), Nucleus.from_ppm(H, 1.03), Nucleus.from_ppm(H, 2.5)]
    return SpinSystem(nuclei, {(0, 1): 15.0, (0, 2): 6.0, (1, 2): -2.5})


def phosphine_system() -> SpinSystem:
    nuclei = [Nucleus.from_ppm(H, 1.1), Nucleus.from_ppm(H, 1.1), Nucleus.from_ppm(P, -20.0),
              Nucleus.from_ppm(H, 4.0)]
    return SpinSystem(nuclei, {(0, 2): 12.0, (1, 2): 12.0, (2, 3): 200.0, (0, 3): 0.4, (1, 3): 0.4})


def exact_sticks(system: SpinSystem, settings: SpectrometerSettings) -> StickSpectrum:
    hamiltonian = build_hamiltonian(system, settings)
    raising, lowering = collective_ladder(system, settings, basis=hamiltonian.basis)
    return stick_spectrum(diagonalize_blocks(hamiltonian), lowering, raising)


def random_proton_system(seed: int) -> SpinSystem:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    nuclei = [Nucleus.from_ppm(H, float(s)) for s in rng.uniform(0.0, 10.0, size=n)]
    couplings = {(k, l): float(rng.uniform(-20.0, 20.0)) for k in range(n) for l in range(k + 1, n)}
    return SpinSystem(nuclei, couplings)


def dense_oracle_sticks(system: SpinSystem, settings: SpectrometerSettings) -> StickSpectrum:
    hamiltonian = build_hamiltonian(system, settings)
    raising, _ = collective_ladder(system, settings, basis=hamiltonian.basis)
    energies, vectors = np.linalg.eigh(hamiltonian.matrix.toarray())
    projected = vectors.T @ raising.toarray() @ vectors
    weights = np.abs(projected) ** 2
    m, n = np.nonzero(weights > 1e-14 * weights.max())
    return StickSpectrum(energies[n] - energies[m] + hamiltonian.frame, weights[m, n])


def assert_same_sticks(actual: StickSpectrum, expected: StickSpectrum, atol: float):
    """Both spectra merged at 1e-4 rad/s and cut at 1e-10 of their total weight"""
    actual = actual.coalesced(1e-4).above_floor(1e-10)
    expected = expected.coalesced(1e-4).above_floor(1e-10)
    assert len(actual) == len(expected)
    assert np.all(np.abs(actual.frequencies - expected.frequencies) <= 1e-9 * np.abs(expected.frequencies))
    np.testing.assert_allclose(actual.frequencies, expected.frequencies, rtol=0, atol=atol)
    np.testing.assert_allclose(actual.weights, expected.weights, rtol=1e-9,
                               atol=1e-12 * np.sum(np.abs(expected.weights)))


def broadened(frequencies, weights, eta, grid):
    return (eta / (eta ** 2 + (grid[:, None] - np.asarray(frequencies)[None, :]) ** 2)) @ np.asarray(weights)


def test_single_spin_gives_one_stick_at_larmor_frequency():
    nucleus = Nucleus.from_ppm(H, 2.0)
    settings = SpectrometerSettings(400e6)
    sticks = exact_sticks(SpinSystem([nucleus]), settings)
    assert len(sticks) == 1
    assert sticks.frequencies[0] == pytest.approx(larmor_frequency(nucleus, settings), rel=1e-14)
    assert sticks.weights[0] == pytest.approx(GAMMA_H ** 2, rel=1e-12)


def test_uncoupled_spins_give_trace_weighted_lines():
    nuclei = [Nucleus.from_ppm(H, s) for s in (1.0, 2.0, 3.0)]
    settings = SpectrometerSettings(400e6)
    sticks = exact_sticks(SpinSystem(nuclei), settings).coalesced(1e-6)
    assert len(sticks) == 3
    assert sticks.frequencies.tolist() == pytest.approx([larmor_frequency(n, settings) for n in nuclei], rel=1e-14)
    assert sticks.weights.tolist() == pytest.approx([4 * GAMMA_H ** 2] * 3, rel=1e-12)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("ref_frequency", [400e6, 80e6, 20e6])
def test_block_sticks_match_dense_diagonalization(seed, ref_frequency):
    system = random_proton_system(seed)
    settings = SpectrometerSettings(ref_frequency)
    assert_same_sticks(exact_sticks(system, settings), dense_oracle_sticks(system, settings), atol=5e-6)


@pytest.mark.parametrize("make_system", [abx_system, phosphine_system])
@pytest.mark.parametrize("ref_frequency", [400e6, 80e6, 20e6])
def test_block_sticks_match_dense_diagonalization_on_fixed_systems(make_system, ref_frequency):
    system = make_system()
    settings = SpectrometerSettings(ref_frequency, detect_isotope="1H")
    # the 31P Zeeman term stays in the blocks and limits the absolute precision
    atol = 5e-6 if make_system is abx_system else 5e-5
    assert_same_sticks(exact_sticks(system, settings), dense_oracle_sticks(system, settings), atol=atol)


def test_laboratory_frame_gives_the_same_sticks():
    system = abx_system()
    settings = SpectrometerSettings(80e6)
    rotating = build_hamiltonian(system, settings)
    lab = build_hamiltonian(system, settings, frame=0.0)
    assert rotating.frame == pytest.approx(settings.omega_ref, rel=1e-15)
    assert lab.frame == 0.0
    assert abs(rotating.matrix).max() < 1e-4 * abs(lab.matrix).max()
    np.testing.assert_allclose(rotating.lab_matrix().toarray(), lab.matrix.toarray(), rtol=0,
                               atol=1e-9 * abs(lab.matrix).max())
    raising, lowering = collective_ladder(system, settings, basis=lab.basis)
    from_lab = stick_spectrum(diagonalize_blocks(lab), lowering, raising)
    assert_same_sticks(exact_sticks(system, settings), from_lab, atol=5e-5)


@pytest.mark.parametrize("make_system", [abx_system, phosphine_system])
def test_sum_rule_and_positivity(make_system):
    system = make_system()
    settings = SpectrometerSettings(80e6)
    sticks = exact_sticks(system, settings)
    _, lowering = collective_ladder(system, settings)
    raising, _ = collective_ladder(system, settings)
    trace = (lowering @ raising).diagonal().sum()
    assert sticks.total_weight == pytest.approx(trace, rel=1e-9)
    expected = 2 ** (system.num_nuclei - 1) * np.sum(detection_weights(system, settings) ** 2)
    assert sticks.total_weight == pytest.approx(expected, rel=1e-9)
    assert np.all(sticks.weights > 0)


def test_eigensystem_residuals_and_spectrum():
    system = phosphine_system()
    hamiltonian = build_hamiltonian(system, SpectrometerSettings(400e6))
    eig = diagonalize_blocks(hamiltonian, workers=3)
    assert eig.dimension == 16
    assert eig.largest_sector == 6
    assert [s.mz for s in eig.sectors] == [2.0, 1.0, 0.0, -1.0, -2.0]
    for sector in eig.sectors:
        assert eig.residual(sector) < 1e-12
    dense = np.linalg.eigvalsh(hamiltonian.matrix.toarray())
    assert np.allclose(np.sort(eig.eigenvalues()), dense, rtol=0, atol=1e-6 * np.abs(dense).max())
    assert len(eig.adjacent_pairs()) == 4


def test_diagonalization_rejects_cross_sector_terms():
    hamiltonian = build_hamiltonian(abx_system(), SpectrometerSettings(400e6))
    broken = hamiltonian.matrix.tolil()
    broken[0, hamiltonian.dimension - 1] = 1.0
    broken[hamiltonian.dimension - 1, 0] = 1.0
    with pytest.raises(ValueError, match="sectors"):
        diagonalize_blocks(SpinHamiltonian(csr_matrix(broken), hamiltonian.basis, hamiltonian.system,
                                           hamiltonian.sites))


def test_diagonalization_rejects_non_hermitian_blocks():
    hamiltonian = build_hamiltonian(abx_system(), SpectrometerSettings(400e6))
    broken = hamiltonian.matrix.tolil()
    _, states = hamiltonian.basis.sectors[1]
    broken[states.start, states.start + 1] += 5.0
    with pytest.raises(ValueError, match="Hermitian"):
        diagonalize_blocks(SpinHamiltonian(csr_matrix(broken), hamiltonian.basis, hamiltonian.system,
                                           hamiltonian.sites))


def test_asymmetric_left_operator_splits_the_symmetric_spectrum():
    system = abx_system()
    settings = SpectrometerSettings(80e6)
    hamiltonian = build_hamiltonian(system, settings)
    eig = diagonalize_blocks(hamiltonian)
    raising, lowering = collective_ladder(system, settings, basis=hamiltonian.basis)
    lefts = []
    for site in range(3):
        weights = np.zeros(3)
        weights[site] = GAMMA_H
        lefts.append(collective_ladder(system, settings, weights=weights, basis=hamiltonian.basis)[1])
    per_site = stick_spectra(eig, lefts, raising, weight_floor=0.0)
    full = stick_spectrum(eig, lowering, raising, weight_floor=0.0)
    grid = np.linspace(full.frequencies.min() - 100, full.frequencies.max() + 100, 2001)
    center = full.frequencies.mean()
    total = sum(broadened(s.frequencies - center, s.weights, 1.0, grid - center) for s in per_site)
    expected = broadened(full.frequencies - center, full.weights, 1.0, grid - center)
    assert np.allclose(total, expected, rtol=0, atol=1e-9 * expected.max())


def test_stick_spectrum_default_right_is_adjoint():
    system = abx_system()
    settings = SpectrometerSettings(400e6)
    hamiltonian = build_hamiltonian(system, settings)
    eig = diagonalize_blocks(hamiltonian)
    raising, lowering = collective_ladder(system, settings, basis=hamiltonian.basis)
    a = stick_spectrum(eig, lowering)
    b = stick_spectrum(eig, lowering, raising)
    assert np.allclose(a.frequencies, b.frequencies)
    assert np.allclose(a.weights, b.weights)


def test_stick_spectrum_helpers():
    sticks = StickSpectrum([3.0, 1.0, 1.0 + 1e-9, 2.0], [1.0, 2.0, 2.0, 1e-20])
    assert sticks.canonical().frequencies.tolist() == [1.0, 1.0 + 1e-9, 2.0, 3.0]
    merged = sticks.coalesced(1e-6)
    assert len(merged) == 3
    assert merged.weights.tolist() == pytest.approx([4.0, 1e-20, 1.0])
    assert len(sticks.above_floor(1e-14)) == 3
    assert sticks.scaled(2.0).total_weight == pytest.approx(2 * sticks.total_weight)
    joined = StickSpectrum.concatenate([sticks, sticks], {"method": "test"})
    assert len(joined) == 8
    assert joined.metadata == {"method": "test"}
    with pytest.raises(ValueError):
        sticks.frequencies[0] = 0.0
    with pytest.raises(ValueError, match="frequencies"):
        StickSpectrum([1.0, 2.0], [1.0])
    assert len(StickSpectrum().coalesced(1.0)) == 0


@pytest.mark.parametrize("seed", range(5))
def test_time_domain_oracle_matches_sticks_in_rotating_frame(seed):
    system = random_proton_system(seed)
    settings = SpectrometerSettings(400e6, fwhm=5.0)
    hamiltonian = build_hamiltonian(system, settings)
    raising, lowering = collective_ladder(system, settings, basis=hamiltonian.basis)
    sticks = stick_spectrum(diagonalize_blocks(hamiltonian), lowering, raising)

    frame = float(sticks.frequencies.mean())
    spread = float(np.max(np.abs(sticks.frequencies - frame)))
    omega = np.linspace(frame - spread - 50, frame + spread + 50, 201)
    first = correlation_time_domain(hamiltonian, raising, [0.0], frame_frequency=frame)
    assert first.max_offset >= spread * (1 - 1e-9)
    highest = first.max_offset + spread + 50
    step = math.pi / (8 * highest) * 0.99
    times = step * np.arange(math.ceil(30 / settings.eta / step) + 1)
    series = correlation_time_domain(hamiltonian, raising, times, frame_frequency=frame)
    transformed = half_sided_transform(series, settings.eta, omega, min_span=30.0)
    expected = sample(sticks, settings.eta, omega).amplitudes
    assert np.linalg.norm(transformed - expected) <= 1e-4 * np.linalg.norm(expected)


def test_half_sided_transform_accepts_a_grid_of_exactly_the_minimum_span():
    system = abx_system()
    settings = SpectrometerSettings(1e3)
    hamiltonian = build_hamiltonian(system, settings)
    raising, _ = collective_ladder(system, settings, basis=hamiltonian.basis)
    eta = 40.0
    times = np.linspace(0, 10 / eta, 4001)
    times[-1] = np.nextafter(10 / eta, 0.0)
    series = correlation_time_domain(hamiltonian, raising, times)
    assert np.all(np.isfinite(half_sided_transform(series, eta, [0.0], oversampling=1.0)))


def test_time_domain_oracle_at_zero_time_is_the_trace():
    system = phosphine_system()
    settings = SpectrometerSettings(20e6)
    hamiltonian = build_hamiltonian(system, settings)
    raising, lowering = collective_ladder(system, settings, basis=hamiltonian.basis)
    series = correlation_time_domain(hamiltonian, raising, [0.0])
    assert series.values[0].real == pytest.approx((lowering @ raising).diagonal().sum(), rel=1e-12)


def test_half_sided_transform_rejects_bad_grids():
    system = abx_system()
    settings = SpectrometerSettings(400e6)
    hamiltonian = build_hamiltonian(system, settings)
    raising, _ = collective_ladder(system, settings)
    eta = settings.eta
    too_short = correlation_time_domain(hamiltonian, raising, np.linspace(0, 1 / eta, 100))
    with pytest.raises(ValueError, match="shorter"):
        half_sided_transform(too_short, eta, [0.0])
    lab_frame = correlation_time_domain(hamiltonian, raising, np.linspace(0, 20 / eta, 1000))
    with pytest.raises(ValueError, match="under-resolves"):
        half_sided_transform(lab_frame, eta, [settings.omega_ref])
    shifted = correlation_time_domain(hamiltonian, raising, np.linspace(1e-3, 20 / eta, 1000))
    with pytest.raises(ValueError, match="t = 0"):
        half_sided_transform(shifted, eta, [0.0])
    with pytest.raises(ValueError, match="eta"):
        half_sided_transform(lab_frame, 0.0, [0.0])


def test_time_domain_oracle_dimension_cap():
    system = SpinSystem([Nucleus(H, 0.0) for _ in range(4)])
    settings = SpectrometerSettings(400e6)
    hamiltonian = build_hamiltonian(system, settings)
    raising, _ = collective_ladder(system, settings)
    with pytest.raises(DimensionCapError):
        correlation_time_domain(hamiltonian, raising, [0.0], max_dimension=8)


def test_transverse_correlations_reconstruct_raising_correlation():
    system = abx_system()
    settings = SpectrometerSettings(1e3)
    hamiltonian = build_hamiltonian(system, settings)
    raising, _ = collective_ladder(system, settings)
    times = np.linspace(0, 0.05, 64)
    c_xy, c_yy = transverse_correlations(hamiltonian, raising, times)
    series = correlation_time_domain(hamiltonian, raising, times)
    rebuilt = raising_from_transverse(c_xy, c_yy)
    assert np.allclose(rebuilt, series.values, rtol=0, atol=1e-9 * np.abs(series.values).max())

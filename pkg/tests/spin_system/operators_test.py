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
from functools import reduce

import numpy as np
import pytest
from scipy.special import comb

from spinspectra import (ISOTOPES, DimensionCapError, Isotope, Nucleus, ProductBasis, SpectrometerSettings,
                         SpinSystem, build_hamiltonian, collective_ladder)
from spinspectra.spin_system import detection_weights, larmor_frequencies

H = ISOTOPES["1H"]


def spin_operators(two_s: int):
    """Iz, I+ and I- of one spin in the basis m = +S, ..., -S"""
    s = two_s / 2
    m = s - np.arange(two_s + 1)
    iz = np.diag(m)
    ip = np.zeros((two_s + 1, two_s + 1))
    for k in range(1, two_s + 1):
        ip[k - 1, k] = math.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    return iz, ip, ip.T


def embed(op: np.ndarray, site: int, two_spins) -> np.ndarray:
    factors = [op if i == site else np.eye(t + 1) for i, t in enumerate(two_spins)]
    return reduce(np.kron, factors)


def kron_hamiltonian(system: SpinSystem, settings: SpectrometerSettings) -> np.ndarray:
    two_spins = system.two_spins.tolist()
    ops = [spin_operators(t) for t in two_spins]
    omega = larmor_frequencies(system, settings)
    h = sum(-omega[i] * embed(ops[i][0], i, two_spins) for i in range(len(two_spins)))
    for (k, l), j_hz in system.couplings.items():
        zz = embed(ops[k][0], k, two_spins) @ embed(ops[l][0], l, two_spins)
        flip = embed(ops[k][1], k, two_spins) @ embed(ops[l][2], l, two_spins)
        h = h + 2 * math.pi * j_hz * (zz + 0.5 * (flip + flip.T))
    return h


def mixed_system() -> SpinSystem:
    deuteron = Isotope.from_spin("2H", 4.1066e7, 1.0)
    nuclei = [Nucleus.from_ppm(H, 1.0), Nucleus.from_ppm(deuteron, 2.0), Nucleus.from_ppm(H, 1.2),
              Nucleus.from_ppm(ISOTOPES["31P"], -20.0)]
    return SpinSystem(nuclei, {(0, 1): 2.0, (0, 2): 12.0, (1, 2): -3.0, (2, 3): 40.0, (0, 3): 7.5})


def test_product_basis_sectors_are_contiguous_and_binomial():
    basis = ProductBasis([1] * 6)
    assert basis.dimension == 64
    assert basis.sector_dimensions() == [int(comb(6, k)) for k in range(7)]
    assert [two_mz for two_mz, _ in basis.sectors] == list(range(6, -7, -2))
    assert np.all(np.diff(basis.two_mz) <= 0)
    for two_mz, states in basis.sectors:
        assert np.all(basis.two_mz[states] == two_mz)
    assert basis.state(0).two_m == (1,) * 6
    assert basis.state(63).mz == -3.0


def test_product_basis_position_inverts_natural_index():
    basis = ProductBasis([1, 2, 1])
    assert basis.dimension == 12
    assert np.array_equal(basis.position[basis.natural_index], np.arange(12))
    assert sorted(basis.natural_index.tolist()) == list(range(12))
    assert basis.two_m().shape == (12, 3)


def test_product_basis_rejects_empty():
    with pytest.raises(ValueError):
        ProductBasis([])


@pytest.mark.parametrize("ref_frequency", [400e6, 1e3])
def test_hamiltonian_matches_kronecker_oracle(ref_frequency):
    system = mixed_system()
    settings = SpectrometerSettings(ref_frequency)
    hamiltonian = build_hamiltonian(system, settings)
    order = hamiltonian.basis.natural_index
    expected = kron_hamiltonian(system, settings)[np.ix_(order, order)]
    atol = 1e-9 * np.abs(expected).max()
    assert np.allclose(hamiltonian.lab_matrix().toarray(), expected, rtol=0, atol=atol)
    lab = build_hamiltonian(system, settings, frame=0.0)
    assert lab.frame == 0.0
    assert np.allclose(lab.matrix.toarray(), expected, rtol=0, atol=atol)


def test_rotating_frame_shifts_the_diagonal_by_the_frame_times_mz():
    system = mixed_system()
    settings = SpectrometerSettings(400e6)
    rotating = build_hamiltonian(system, settings)
    assert rotating.frame == pytest.approx(H.gamma * settings.field_strength)
    lab = build_hamiltonian(system, settings, frame=0.0)
    shift = rotating.matrix.toarray() - lab.matrix.toarray()
    mz = 0.5 * rotating.basis.two_mz
    assert np.allclose(shift, np.diag(rotating.frame * mz), rtol=1e-9, atol=1e-3)


def test_hamiltonian_is_hermitian_and_conserves_mz():
    hamiltonian = build_hamiltonian(mixed_system(), SpectrometerSettings(400e6))
    dense = hamiltonian.matrix.toarray()
    assert np.allclose(dense, dense.conj().T)
    rows, cols = np.nonzero(dense)
    assert np.all(hamiltonian.basis.two_mz[rows] == hamiltonian.basis.two_mz[cols])


def test_hamiltonian_subset_drops_outside_couplings():
    system = mixed_system()
    settings = SpectrometerSettings(400e6)
    sub = build_hamiltonian(system, settings, subset=[2, 0])
    assert sub.sites == (2, 0)
    direct = build_hamiltonian(system.subsystem([2, 0]), settings)
    assert np.allclose(sub.matrix.toarray(), direct.matrix.toarray())
    with pytest.raises(ValueError, match="basis"):
        build_hamiltonian(system, settings, basis=ProductBasis([1, 1]))


def test_hamiltonian_respects_dimension_cap():
    system = SpinSystem([Nucleus(H, 0.0) for _ in range(5)])
    with pytest.raises(DimensionCapError):
        build_hamiltonian(system, SpectrometerSettings(400e6, max_dimension=16))


def test_ladder_matches_kronecker_oracle():
    system = mixed_system()
    settings = SpectrometerSettings(400e6)
    raising, lowering = collective_ladder(system, settings)
    two_spins = system.two_spins.tolist()
    weights = detection_weights(system, settings)
    expected = sum(weights[i] * embed(spin_operators(t)[1], i, two_spins) for i, t in enumerate(two_spins))
    order = build_hamiltonian(system, settings).basis.natural_index
    expected = expected[np.ix_(order, order)]
    assert np.allclose(raising.toarray(), expected)
    assert np.allclose(lowering.toarray(), expected.T)


def test_ladder_raises_mz_by_one():
    system = mixed_system()
    settings = SpectrometerSettings(400e6, detect_isotope="1H")
    raising, _ = collective_ladder(system, settings)
    basis = build_hamiltonian(system, settings).basis
    rows, cols = raising.nonzero()
    assert np.all(basis.two_mz[rows] == basis.two_mz[cols] + 2)


def test_ladder_weights_and_zero_operator():
    system = SpinSystem([Nucleus(H, 0.0), Nucleus(H, 1e-6)])
    settings = SpectrometerSettings(400e6)
    raising, _ = collective_ladder(system, settings, weights=[1.0, 0.0])
    assert raising.nnz == 2
    empty, _ = collective_ladder(system, settings, weights=[0.0, 0.0])
    assert empty.nnz == 0
    with pytest.raises(ValueError, match="ladder weights"):
        collective_ladder(system, settings, weights=[1.0])

import numpy as np
import pytest

from ccmths.errors import DimensionOverflow, InvalidSpec
from ccmths.models import (
    BUNDLED_MODELS,
    ModelSpec,
    build_model,
    position_power,
    tensor_compose,
)
from ccmths.oracle import exact_eigensystem

# dense eigh of the assembled 40-level matrix; also agrees with the published
# anharmonic-oscillator value 1.0652855095437 for p^2 + x^2 + 0.1 x^4
E0_QUARTIC_01_D40 = 1.0652855095437177


def test_harmonic_oscillator_levels():
    m = build_model(ModelSpec.oscillator(0.0, 20))
    w = np.linalg.eigvalsh(m.hamiltonian)
    assert list(w[:3]) == [1.0, 3.0, 5.0]
    np.testing.assert_array_equal(w, 2 * np.arange(20) + 1)


def test_quartic_ground_energy_regression():
    m = build_model(ModelSpec.oscillator(0.1, 40))
    assert np.linalg.eigvalsh(m.hamiltonian)[0] == pytest.approx(E0_QUARTIC_01_D40, abs=1e-12)


def test_position_power_matches_exact_matrix_elements():
    x2 = position_power(6, 2)
    # <n|x^2|n> = n + 1/2, <n+2|x^2|n> = sqrt((n+1)(n+2))/2
    np.testing.assert_allclose(np.diag(x2).real, np.arange(6) + 0.5)
    np.testing.assert_allclose(np.diag(x2, -2).real, np.sqrt((np.arange(4) + 1) * (np.arange(4) + 2)) / 2)


def test_spin_chain_reference_energy():
    m = build_model(ModelSpec.spin_chain(3, 0.0, exchange=1.5))
    assert m.hamiltonian[0, 0].real == pytest.approx(-1.5 * 2)
    assert np.linalg.eigvalsh(m.hamiltonian)[0] == pytest.approx(-3.0)


def test_transverse_field_couples_single_flips():
    m = build_model(ModelSpec.spin_chain(2, 0.7))
    b = m.basis
    assert m.hamiltonian[b.index_of((0,)), 0] == pytest.approx(-0.7)
    assert m.hamiltonian[b.index_of((0, 1)), 0] == 0


def test_composite_of_free_oscillators_ground_energy():
    spec = ModelSpec.composite(ModelSpec.oscillator(0.0, 5), ModelSpec.oscillator(0.0, 5))
    m = build_model(spec)
    assert m.dimension == 25
    assert np.linalg.eigvalsh(m.hamiltonian)[0] == pytest.approx(2.0)


def test_composite_spectrum_is_pairwise_sums():
    a = build_model(ModelSpec.oscillator(0.3, 5))
    b = build_model(ModelSpec.spin_chain(2, 0.4))
    c = tensor_compose(a, b)
    wa, wb = np.linalg.eigvalsh(a.hamiltonian), np.linalg.eigvalsh(b.hamiltonian)
    sums = np.sort((wa[:, None] + wb[None, :]).ravel())
    wc = exact_eigensystem(c.hamiltonian).eigenvalues
    np.testing.assert_allclose(wc, sums, rtol=1e-10, atol=1e-10 * np.abs(sums).max())


def test_two_level_composite_counting_and_annihilation():
    a = build_model(ModelSpec.oscillator(0.0, 2))
    c = tensor_compose(a, a)
    assert c.dimension == 4
    assert sum(1 for lv in c.basis.levels if lv >= 1) == 3
    for j in range(1, 4):
        assert np.abs(c.ops.annihilation(j) @ c.basis.reference).max() == 0
    assert max(c.ops.defects().values()) == 0.0


def test_dimension_cap():
    a = build_model(ModelSpec.oscillator(0.0, 70))
    with pytest.raises(DimensionOverflow):
        tensor_compose(a, a)
    with pytest.raises(DimensionOverflow):
        build_model(ModelSpec.spin_chain(13, 0.1))


@pytest.mark.parametrize("bad", [
    dict(kind="oscillator", levels=1),
    dict(kind="oscillator", coupling=-0.1),
    dict(kind="spin_chain", sites=1),
    dict(kind="composite"),
    dict(kind="ladder"),
])
def test_invalid_specs(bad):
    with pytest.raises(InvalidSpec):
        ModelSpec(**bad)


@pytest.mark.parametrize("name", sorted(BUNDLED_MODELS))
def test_bundled_hamiltonians_hermitian(name):
    m = build_model(BUNDLED_MODELS[name])
    h = m.hamiltonian
    assert np.abs(h - h.conj().T).max() <= 1e-12 * np.abs(h).max()
    assert m.dimension == BUNDLED_MODELS[name].dimension

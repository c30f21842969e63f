import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgate.errors import DuplicateMode, ModeMismatch, OccupationAboveCap, UnknownMode, ZeroNormState
from qpgate.fock import (
    FockVector,
    apply_annihilation,
    apply_creation,
    inner_product,
    make_basis_state,
    normalize,
    project_mode,
    reduced_density,
    resize,
    single_mode,
    tensor,
    vacuum,
)


def random_state(seed, modes=("A", "B"), caps=(3, 2)):
    rng = np.random.default_rng(seed)
    shape = tuple(c + 1 for c in caps)
    amps = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return FockVector(modes, caps, amps / np.linalg.norm(amps))


def test_basis_state_examples():
    v = make_basis_state({"S": 0}, {"S": 4})
    assert np.array_equal(v.amps, [1, 0, 0, 0, 0])
    v = make_basis_state({"S": 2, "H1": 0}, {"S": 3, "H1": 2})
    assert v.amps[2, 0] == 1 and v.norm_sq == 1
    with pytest.raises(OccupationAboveCap):
        make_basis_state({"S": 5}, {"S": 4})


def test_creation_examples():
    assert np.allclose(apply_creation(vacuum("S", 3), "S").amps, [0, 1, 0, 0])
    out = apply_creation(make_basis_state({"S": 3}, {"S": 10}), "S")
    assert out.amps[4] == pytest.approx(2.0)
    top = apply_creation(make_basis_state({"S": 5}, {"S": 5}), "S")
    assert top.norm_sq == 0 and top.truncation_leak == pytest.approx(6.0)
    with pytest.raises(UnknownMode):
        apply_creation(vacuum("S", 3), "X")


def test_annihilation_examples():
    assert np.allclose(apply_annihilation(make_basis_state({"S": 1}, {"S": 2}), "S").amps, [1, 0, 0])
    assert apply_annihilation(vacuum("S", 2), "S").norm_sq == 0
    out = apply_annihilation(single_mode("S", [1 / math.sqrt(2), 0, 1 / math.sqrt(2)]), "S")
    assert np.allclose(out.amps, [0, 1, 0])


def test_inner_product_examples():
    assert inner_product(vacuum("S", 2), vacuum("S", 2)) == 1
    assert inner_product(make_basis_state({"S": 1}, {"S": 2}), vacuum("S", 2)) == 0
    coh = np.exp(-0.5) / np.sqrt([float(math.factorial(k)) for k in range(31)])
    v = single_mode("S", coh)
    assert abs(inner_product(v, v) - 1) < 1e-12
    with pytest.raises(ModeMismatch):
        inner_product(vacuum("S", 2), vacuum("S", 3))


def test_project_examples():
    ket = make_basis_state({"S": 1, "H1": 1}, {"S": 2, "H1": 2})
    assert project_mode(ket, "H1", 1).norm_sq == 1
    assert project_mode(ket, "H1", 0).norm_sq == 0
    with pytest.raises(OccupationAboveCap):
        project_mode(ket, "H1", 3)
    g = 0.3
    amps = np.zeros((11, 11))
    for k in range(11):
        amps[k, k] = math.tanh(g) ** k / math.cosh(g)
    tmsv = FockVector(("A", "B"), (10, 10), amps)
    assert project_mode(tmsv, "B", 0).norm_sq == pytest.approx(1 / math.cosh(g) ** 2, abs=1e-14)


def test_tensor_and_normalize():
    a = single_mode("S", [1, 1]).with_amps(np.array([1, 1]) / math.sqrt(2))
    t = tensor(a, vacuum("H1", 1))
    assert np.allclose(t.amps, [[1 / math.sqrt(2), 0], [1 / math.sqrt(2), 0]])
    with pytest.raises(DuplicateMode):
        tensor(vacuum("S", 1), vacuum("S", 1))
    v, n = normalize(single_mode("S", [2, 0]))
    assert n == 2 and np.allclose(v.amps, [1, 0])
    with pytest.raises(ZeroNormState):
        normalize(single_mode("S", [0, 0]))


def test_ladder_commutator():
    cap = 12
    for n in range(cap - 1):
        ket = make_basis_state({"S": n}, {"S": cap})
        lhs = apply_annihilation(apply_creation(ket, "S"), "S").amps
        rhs = apply_creation(apply_annihilation(ket, "S"), "S").amps
        assert np.abs(lhs - rhs - ket.amps).max() < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_inner_product_hermitian(s1, s2):
    a, b = random_state(s1), random_state(s2)
    assert abs(inner_product(a, b) - inner_product(b, a).conjugate()) < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["A", "B"]))
def test_projection_completeness(seed, mode):
    s = random_state(seed).with_amps(random_state(seed).amps * 1.7)
    total = sum(project_mode(s, mode, n).norm_sq for n in range(s.cap(mode) + 1))
    assert abs(total - s.norm_sq) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_tensor_norm_and_factor_recovery(s1, s2):
    a = random_state(s1, ("A",), (3,))
    b = random_state(s2, ("B",), (2,))
    ab = tensor(a, b)
    assert abs(ab.norm - a.norm * b.norm) < 1e-12
    # projecting B onto |k> leaves b_k * a
    k = int(np.argmax(np.abs(b.amps)))
    rec = project_mode(ab, "B", k)
    assert np.allclose(rec.amps, b.amps[k] * a.amps)


def test_resize_accounting():
    s = single_mode("S", [0.6, 0, 0.8])
    up = resize(s, "S", 5)
    assert up.truncation_leak == 0 and up.norm_sq == pytest.approx(1)
    down = resize(s, "S", 1)
    assert down.truncation_leak == pytest.approx(0.64)


def test_reduced_density_of_product():
    a = random_state(3, ("A",), (2,))
    rho = reduced_density(tensor(a, vacuum("B", 2)), ["A"])
    assert np.allclose(rho, np.outer(a.amps, a.amps.conj()))


def test_values_are_immutable():
    v = vacuum("S", 2)
    with pytest.raises(ValueError):
        v.amps[0] = 2

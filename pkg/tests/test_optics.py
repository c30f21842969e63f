import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qpgate.errors import LossModeNotVacuum
from qpgate.fock import FockVector, make_basis_state, project_mode, reduced_density, tensor, vacuum
from qpgate.optics import (
    BsParams,
    SqueezeParams,
    beamsplitter,
    loss_channel,
    tmsv_reference_amplitude,
    two_mode_squeeze,
)


def ladder(cap):
    return np.diag(np.sqrt(np.arange(1, cap + 1)), 1)


def dense_two_mode(generator_fn, cap):
    """exp of a two-mode generator built from truncated ladder matrices (independent oracle)."""
    a = ladder(cap)
    eye = np.eye(cap + 1)
    A, B = np.kron(a, eye), np.kron(eye, a)
    return expm(generator_fn(A, B))


def as_vec(state):
    return state.amps.ravel()


def test_bs_examples():
    s = make_basis_state({"a": 1, "b": 0}, {"a": 1, "b": 1})
    out = beamsplitter(s, BsParams(0.95), "a", "b")
    assert out.amps[1, 0] == pytest.approx(0.95, abs=1e-15)
    assert out.amps[0, 1] == pytest.approx(math.sqrt(1 - 0.95**2), abs=1e-15)
    assert abs(out.amps[0, 1] - 0.312250) < 1e-6
    same = beamsplitter(make_basis_state({"a": 2, "b": 1}, {"a": 3, "b": 3}), BsParams(1.0), "a", "b")
    assert same.amps[2, 1] == pytest.approx(1)


def test_hong_ou_mandel():
    s = make_basis_state({"a": 1, "b": 1}, {"a": 2, "b": 2})
    out = beamsplitter(s, None, "a", "b", "symmetric")
    assert abs(out.amps[1, 1]) < 1e-15
    # (a^+ + b^+)(b^+ - a^+)/2 |00> = (|0,2> - |2,0>)/sqrt2
    assert out.amps[0, 2] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.amps[2, 0] == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


def test_symmetric_twice_is_signed_swap():
    for occ, target, sign in (((1, 0), (0, 1), 1.0), ((0, 1), (1, 0), -1.0)):
        s = make_basis_state({"a": occ[0], "b": occ[1]}, {"a": 1, "b": 1})
        out = beamsplitter(beamsplitter(s, None, "a", "b", "symmetric"), None, "a", "b", "symmetric")
        assert out.amps[target] == pytest.approx(sign, abs=1e-15)


@pytest.mark.parametrize("t", [0.6, 0.95])
def test_bs_matches_dense_expm(t):
    cap = 6
    theta = math.atan2(math.sqrt(1 - t * t), t)
    u = dense_two_mode(lambda A, B: theta * (A @ B.T - A.T @ B), cap)
    rng = np.random.default_rng(1)
    amps = np.zeros((cap + 1, cap + 1), complex)
    amps[:3, :3] = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    s = FockVector(("a", "b"), (cap, cap), amps)
    out = beamsplitter(s, BsParams(t), "a", "b")
    assert np.abs(as_vec(out) - u @ as_vec(s)).max() < 1e-12


def test_squeezer_matches_dense_expm():
    cap, g = 40, 0.2
    u = dense_two_mode(lambda A, B: g * (A.T @ B.T - A @ B), cap)
    s = make_basis_state({"s": 1, "i": 0}, {"s": cap, "i": cap})
    out = two_mode_squeeze(s, SqueezeParams(g), "s", "i")
    ref = (u @ as_vec(s)).reshape(cap + 1, cap + 1)
    assert np.abs(out.amps[:10, :10] - ref[:10, :10]).max() < 1e-12


def test_squeezer_examples():
    g = 0.3
    assert two_mode_squeeze(make_basis_state({"s": 2, "i": 1}, {"s": 4, "i": 4}),
                            SqueezeParams(0.0), "s", "i").amps[2, 1] == 1
    out = two_mode_squeeze(make_basis_state({"s": 0, "i": 0}, {"s": 10, "i": 10}), SqueezeParams(g), "s", "i")
    for n in range(9):
        assert abs(out.amps[n, n] - tmsv_reference_amplitude(n, g)) < 1e-10
    # |1>|0> -> amplitude of |1+j, j> is C^-2 G^j sqrt((1+j)!/(1! j!))
    g2 = 0.2
    out = two_mode_squeeze(make_basis_state({"s": 1, "i": 0}, {"s": 10, "i": 10}), SqueezeParams(g2), "s", "i")
    G, C = math.tanh(g2), math.cosh(g2)
    assert abs(out.amps[3, 2] - C**-2 * G**2 * math.sqrt(3)) < 1e-14


def test_squeezer_accounting():
    s = make_basis_state({"s": 2, "i": 0}, {"s": 6, "i": 6})
    out = two_mode_squeeze(s, SqueezeParams(0.5), "s", "i")
    assert out.truncation_leak > 0
    assert abs(out.norm_sq + out.truncation_leak - 1) < 1e-10


def test_tmsv_reference():
    assert tmsv_reference_amplitude(0, 0) == 1
    assert tmsv_reference_amplitude(1, 0.3) == pytest.approx(math.tanh(0.3) / math.cosh(0.3))
    for n in range(5):
        r = tmsv_reference_amplitude(n + 1, 0.7) / tmsv_reference_amplitude(n, 0.7)
        assert r == pytest.approx(math.tanh(0.7))


def test_param_validation():
    with pytest.raises(ValueError):
        BsParams(1.2)
    with pytest.raises(ValueError):
        BsParams(0.8, 0.8)
    with pytest.raises(ValueError):
        SqueezeParams(-0.1)
    with pytest.raises(ValueError):
        SqueezeParams(0.1, j_max=0)


def _with_ancilla(state, cap):
    return tensor(state, vacuum("L", cap))


def test_loss_examples():
    one = _with_ancilla(make_basis_state({"S": 1}, {"S": 1}), 1)
    assert np.allclose(loss_channel(one, 1.0, "S", "L").amps, one.amps)
    gone = loss_channel(one, 0.0, "S", "L")
    assert abs(gone.amps[0, 1]) == pytest.approx(1)
    part = loss_channel(one, 0.9, "S", "L")
    assert part.amps[1, 0] == pytest.approx(math.sqrt(0.9))
    assert part.amps[0, 1] == pytest.approx(math.sqrt(0.1))
    with pytest.raises(LossModeNotVacuum):
        loss_channel(part, 0.9, "S", "L")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_bs_unitary_and_loss_trace(t, eta, seed):
    rng = np.random.default_rng(seed)
    amps = np.zeros((7, 7), complex)
    amps[:4, :3] = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    amps /= np.linalg.norm(amps)
    s = FockVector(("a", "b"), (6, 6), amps)
    assert abs(beamsplitter(s, BsParams(t), "a", "b").norm_sq - 1) < 1e-12
    single = FockVector(("S",), (4,), amps[:5, 0] / np.linalg.norm(amps[:5, 0]))
    lost = loss_channel(_with_ancilla(single, 4), eta, "S", "L")
    assert abs(sum(project_mode(lost, "L", k).norm_sq for k in range(5)) - 1) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
def test_loss_composition(e1, e2, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=5) + 1j * rng.normal(size=5)
    s = FockVector(("S",), (4,), amps / np.linalg.norm(amps))
    two = tensor(tensor(s, vacuum("L1", 4)), vacuum("L2", 4))
    two = loss_channel(loss_channel(two, e1, "S", "L1"), e2, "S", "L2")
    one = loss_channel(_with_ancilla(s, 4), e1 * e2, "S", "L")
    assert np.abs(reduced_density(two, ["S"]) - reduced_density(one, ["S"])).max() < 1e-10


def test_reflected_port_phase_irrelevant_for_vacuum_input():
    s = tensor(make_basis_state({"S": 3}, {"S": 3}), vacuum("H", 3))
    a = beamsplitter(s, BsParams(0.9), "S", "H", b_phase=0.0)
    b = beamsplitter(s, BsParams(0.9), "S", "H", b_phase=math.pi)
    assert np.abs(a.amps - b.amps).max() < 1e-15

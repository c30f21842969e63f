import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgate.errors import CapTooSmall, NoSolution
from qpgate.fock import COMPANION, SIGNAL, make_basis_state, project_mode
from qpgate.states import (
    FAMILIES,
    InputFamily,
    make_input,
    mean_photon_number,
    nbar_of_parameter,
    parameter_for_nbar,
    required_cap,
)


def test_coherent_vacuum():
    s = make_input(InputFamily("coherent", 0.0, cap=4))
    assert np.allclose(s.amps, [1, 0, 0, 0, 0])


def test_cat_parity_and_norm():
    s = make_input(InputFamily("cat_plus", 1.0, cap=20))
    assert np.all(s.amps[1::2] == 0)
    assert s.norm_sq == pytest.approx(1, abs=1e-12)


def test_cat_matches_coherent_superposition():
    x = 0.8
    n = np.arange(25)
    coh = np.exp(-x * x / 2) * x**n / np.sqrt([float(math.factorial(k)) for k in n])
    ref = coh + coh * (-1.0) ** n
    ref /= np.linalg.norm(ref)
    s = make_input(InputFamily("cat_plus", x, cap=24))
    assert np.abs(s.amps - ref).max() < 1e-12


def test_squeezed_vacuum_amplitudes():
    r = 0.5
    s = make_input(InputFamily("squeezed_vacuum", r, cap=60))
    # standard closed form for the even amplitudes
    for m in range(5):
        c = (-math.tanh(r)) ** m * math.sqrt(math.factorial(2 * m)) / (2**m * math.factorial(m)) / math.sqrt(math.cosh(r))
        assert s.amps[2 * m] == pytest.approx(c, abs=1e-12)
    assert np.all(s.amps[1::2] == 0)


def test_tmsv_ratio_and_marginals():
    s = make_input(InputFamily("tmsv_half", 0.4, cap=12))
    d = np.diag(s.amps)
    assert np.allclose(d[1:] / d[:-1], math.tanh(0.4), atol=0, rtol=1e-12)
    big = make_input(InputFamily("tmsv_half", 0.4))
    for mode in (SIGNAL, COMPANION):
        assert mean_photon_number(big, mode) == pytest.approx(math.sinh(0.4) ** 2, abs=1e-8)


def test_mean_photon_number_examples():
    assert mean_photon_number(make_basis_state({SIGNAL: 0}, {SIGNAL: 3})) == 0
    assert mean_photon_number(make_input(InputFamily("coherent", 1.0, cap=30))) == pytest.approx(1, abs=1e-10)


def test_cap_too_small():
    with pytest.raises(CapTooSmall):
        make_input(InputFamily("coherent", 2.0, cap=5))
    with pytest.raises(ValueError):
        InputFamily("thermal", 1.0)


def test_parameter_for_nbar_examples():
    assert parameter_for_nbar("coherent", 1.0) == 1.0
    assert parameter_for_nbar("tmsv_half", 1.0) == pytest.approx(0.881373587, abs=1e-9)
    assert parameter_for_nbar("cat_plus", 0.0) == 0.0
    with pytest.raises(NoSolution):
        parameter_for_nbar("squeezed_vacuum", 3.0, cap=24)
    with pytest.raises(NoSolution):
        parameter_for_nbar("coherent", -1.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.05, 3.0))
def test_parameter_round_trip(kind, nbar):
    x = parameter_for_nbar(kind, nbar)
    s = make_input(InputFamily(kind, x))
    assert s.norm_sq == pytest.approx(1, abs=1e-10)
    assert mean_photon_number(s) == pytest.approx(nbar, abs=1e-8)
    assert nbar_of_parameter(kind, x) == pytest.approx(nbar, rel=1e-12)


def _tail_mass_and_moment(kind, x, cap):
    full = make_input(InputFamily(kind, x, cap=cap + 400))
    pop = np.abs(full.amps) ** 2
    if pop.ndim == 2:
        pop = np.diag(pop)
    n = np.arange(pop.size)
    return pop[cap + 1:].sum(), (n * pop)[cap + 1:].sum()


@pytest.mark.parametrize("kind", FAMILIES)
def test_required_cap_is_minimal(kind):
    x = parameter_for_nbar(kind, 1.5)
    cap = required_cap(kind, x)
    mass, moment = _tail_mass_and_moment(kind, x, cap)
    assert mass < 1e-10 and moment < 1e-10
    mass, moment = _tail_mass_and_moment(kind, x, cap - 1)
    assert mass >= 1e-10 or moment >= 1e-10


def test_momentum_squeezing_phase():
    s = make_input(InputFamily("squeezed_vacuum", 0.3, phase=math.pi))
    assert s.amps[2].real > 0  # sign flips relative to position squeezing
    t = make_input(InputFamily("squeezed_vacuum", 0.3))
    assert t.amps[2].real < 0
    assert project_mode(s, SIGNAL, 0).norm_sq == pytest.approx(project_mode(t, SIGNAL, 0).norm_sq)

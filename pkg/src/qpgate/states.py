"""Input-state families on the signal mode, parameterized by mean photon number."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import CapTooSmall, NoSolution
from .fock import COMPANION, SIGNAL, FockVector, marginal

TAIL_TOLERANCE = 1e-10
FAMILIES = ("coherent", "cat_plus", "squeezed_vacuum", "tmsv_half")
_SEARCH_MAX = 4000  # largest Fock level ever examined for tails


@dataclass(frozen=True)
class InputFamily:
    """One input state.

    ``parameter`` is the coherent amplitude |alpha| for ``coherent`` and
    ``cat_plus`` and the squeezing s for the squeezed families. ``phase`` is the
    coherent-amplitude phase, or the squeezing angle (0 squeezes the position
    quadrature). ``cap=None`` picks the smallest cap meeting the tail tolerance.
    """

    kind: str
    parameter: float
    cap: int | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown input family {self.kind!r}; expected one of {FAMILIES}")
        if not math.isfinite(self.parameter) or self.parameter < 0:
            raise ValueError(f"family parameter must be finite and >= 0, got {self.parameter}")


def _amplitudes(kind: str, x: float, phase: float, n_max: int) -> np.ndarray:
    """Exact (untruncated, analytically normalized) amplitudes for n = 0..n_max.

    For ``tmsv_half`` this returns the Schmidt coefficients of |n, n>.
    """
    n = np.arange(n_max + 1, dtype=float)
    out = np.zeros(n_max + 1, dtype=np.complex128)
    if x == 0:
        out[0] = 1.0
        return out
    if kind in ("coherent", "cat_plus"):
        logmag = -0.5 * x * x + n * math.log(x) - 0.5 * gammaln(n + 1)
        out = np.exp(logmag) * np.exp(1j * phase * n)
        if kind == "cat_plus":
            norm = 1.0 / math.sqrt(2.0 * (1.0 + math.exp(-2.0 * x * x)))
            out = np.where(n % 2 == 0, 2.0 * norm * out, 0.0)
        return out
    if kind == "squeezed_vacuum":
        m = n[::2] / 2
        logmag = (
            -0.5 * math.log(math.cosh(x)) + m * math.log(math.tanh(x))
            + 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1)
        )
        out[::2] = np.exp(logmag) * (-np.exp(1j * phase)) ** m
        return out
    if kind == "tmsv_half":
        return (math.tanh(x) ** n / math.cosh(x)).astype(np.complex128)
    raise ValueError(kind)


def _tail(pop: np.ndarray, cap: int) -> float:
    return float(pop[cap + 1:].sum())


def _populations(kind: str, x: float, phase: float) -> np.ndarray:
    return np.abs(_amplitudes(kind, x, phase, _SEARCH_MAX)) ** 2


def required_cap(kind: str, parameter: float, phase: float = 0.0) -> int:
    """Smallest cap whose truncated tail holds less than the tolerance in both
    population and mean photon number."""
    pop = _populations(kind, parameter, phase)
    tails = np.cumsum(pop[::-1])[::-1]  # tails[k] = sum_{n >= k}
    moments = np.cumsum((np.arange(pop.size) * pop)[::-1])[::-1]
    ok = np.nonzero((tails[1:] < TAIL_TOLERANCE) & (moments[1:] < TAIL_TOLERANCE))[0]
    if ok.size == 0:
        raise CapTooSmall(f"{kind} with parameter {parameter} needs more than {_SEARCH_MAX} levels")
    return int(ok[0])


def make_input(f: InputFamily) -> FockVector:
    cap = required_cap(f.kind, f.parameter, f.phase) if f.cap is None else f.cap
    amps = _amplitudes(f.kind, f.parameter, f.phase, max(cap, 0) + _SEARCH_MAX)
    tail = _tail(np.abs(amps) ** 2, cap)
    if tail >= TAIL_TOLERANCE:
        raise CapTooSmall(
            f"{f.kind}(parameter={f.parameter}) leaves tail population {tail:.3g} above cap {cap}"
        )
    amps = amps[: cap + 1]
    amps = amps / np.sqrt(np.sum(np.abs(amps) ** 2))
    if f.kind == "tmsv_half":
        return FockVector((SIGNAL, COMPANION), (cap, cap), np.diag(amps))
    return FockVector((SIGNAL,), (cap,), amps)


def mean_photon_number(state: FockVector, mode: str = SIGNAL) -> float:
    """Mean occupation of ``mode``, with the state's norm divided out."""
    pop = marginal(state, mode)
    total = pop.sum()
    return float(np.dot(np.arange(pop.size), pop) / total)


def nbar_of_parameter(kind: str, parameter: float) -> float:
    """Analytic mean photon number of the (untruncated) family member."""
    x = parameter
    if kind == "coherent":
        return x * x
    if kind == "cat_plus":
        return x * x * math.tanh(x * x)
    if kind in ("squeezed_vacuum", "tmsv_half"):
        return math.sinh(x) ** 2
    raise ValueError(f"unknown input family {kind!r}")


def parameter_for_nbar(kind: str, nbar: float, cap: int | None = None) -> float:
    """Family parameter whose mean photon number equals ``nbar``.

    With ``cap`` given, raises :class:`NoSolution` when that cap cannot hold the
    resulting state to the tail tolerance.
    """
    if not nbar >= 0:
        raise NoSolution(f"mean photon number must be >= 0, got {nbar}")
    if kind == "coherent":
        x = math.sqrt(nbar)
    elif kind in ("squeezed_vacuum", "tmsv_half"):
        x = math.asinh(math.sqrt(nbar))
    elif kind == "cat_plus":
        if nbar == 0:
            x = 0.0
        else:
            # |alpha|^2 tanh |alpha|^2 = nbar, bracketed by nbar <= |alpha|^2 <= nbar + 1
            y = brentq(lambda y: y * math.tanh(y) - nbar, nbar, nbar + 1.0, xtol=1e-15, rtol=1e-15)
            x = math.sqrt(y)
    else:
        raise ValueError(f"unknown input family {kind!r}")
    if cap is not None:
        try:
            needed = required_cap(kind, x)
        except CapTooSmall as exc:
            raise NoSolution(str(exc)) from None
        if needed > cap:
            raise NoSolution(f"nbar={nbar} for {kind} needs cap {needed} > {cap}")
    return x

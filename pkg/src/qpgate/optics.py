"""Two-mode squeezer, beamsplitter and detector-loss channel on FockVectors.

Conventions (Heisenberg action on creation operators):

* beamsplitter, ``subtraction``: a_a^+ -> t a_a^+ + r a_b^+,
  a_b^+ -> e^{i phi} (t a_b^+ - r a_a^+)   (phi = 0 by default)
* beamsplitter, ``symmetric``: the same map with t = r = 1/sqrt(2), i.e.
  a_a^+ -> (a_a^+ + a_b^+)/sqrt(2), a_b^+ -> (a_b^+ - a_a^+)/sqrt(2)
* two-mode squeezer: the unitary exp(g (a_s^+ a_i^+ - a_s a_i)), evaluated in
  its normally ordered (disentangled) form
  exp(G a_s^+ a_i^+) C^{-(n_s + n_i + 1)} exp(-G a_s a_i)
  with G = tanh g and C = cosh g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import LossModeNotVacuum
from .fock import FockVector, apply_two_mode, marginal


@dataclass(frozen=True)
class SqueezeParams:
    g: float
    j_max: int | None = None  # None: sum the raising series as far as the caps can hold

    def __post_init__(self):
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ValueError(f"squeezing parameter must be finite and >= 0, got {self.g}")
        if self.j_max is not None and self.j_max < 1:
            raise ValueError("j_max must be >= 1")

    @classmethod
    def from_gamma(cls, gamma: float, j_max: int | None = None) -> "SqueezeParams":
        if not 0 <= gamma < 1:
            raise ValueError(f"tanh(g) must lie in [0, 1), got {gamma}")
        return cls(math.atanh(gamma), j_max)

    @property
    def gamma(self) -> float:
        return math.tanh(self.g)

    @property
    def C(self) -> float:
        return math.cosh(self.g)


@dataclass(frozen=True)
class BsParams:
    t: float
    r: float | None = None

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise ValueError(f"transmissivity must lie in (0, 1], got {self.t}")
        r = math.sqrt(max(1.0 - self.t**2, 0.0)) if self.r is None else float(self.r)
        if not 0 <= r < 1 or abs(self.t**2 + r**2 - 1) > 1e-12:
            raise ValueError(f"t={self.t}, r={r} violate t^2 + r^2 = 1")
        object.__setattr__(self, "r", r)

    @property
    def theta(self) -> float:
        return math.atan2(self.r, self.t)


def _box(state: FockVector, a: str, b: str) -> tuple[int, int]:
    """Output grid for a photon-number-moving two-mode operation.

    A non-sector mode paired with a sector mode is extended so that its own
    overflow is measured explicitly; everything else is recovered from the
    norm deficit (see :func:`qpgate.fock.apply_two_mode`).
    """
    ca, cb = state.cap(a), state.cap(b)
    sa, sb = a in state.sector_modes, b in state.sector_modes
    if sb and not sa:
        return ca + cb, cb
    if sa and not sb:
        return ca, cb + ca
    return ca, cb


def _log_falling(n: np.ndarray, k: int) -> np.ndarray:
    """log sqrt(n! / (n-k)!) elementwise, for n >= k."""
    return 0.5 * (gammaln(n + 1) - gammaln(n - k + 1))


@lru_cache(maxsize=256)
def _squeeze_matrix(g: float, j_max, ca: int, cb: int, ba: int, bb: int) -> np.ndarray:
    gamma, C = math.tanh(g), math.cosh(g)
    ns_in, ni_in = np.meshgrid(np.arange(ca + 1), np.arange(cb + 1), indexing="ij")
    ns_in, ni_in = ns_in.ravel(), ni_in.ravel()
    n_in = ns_in.size

    # exp(-G a_s a_i): lowers both modes by l
    lower = np.zeros((n_in, n_in))
    lower[np.arange(n_in), np.arange(n_in)] = 1.0
    if gamma > 0:
        for l in range(1, min(ca, cb) + 1):
            ok = (ns_in >= l) & (ni_in >= l)
            src = np.nonzero(ok)[0]
            dst = (ns_in[src] - l) * (cb + 1) + (ni_in[src] - l)
            logc = (
                l * math.log(gamma) - gammaln(l + 1)
                + _log_falling(ns_in[src], l) + _log_falling(ni_in[src], l)
            )
            lower[dst, src] = (-1) ** l * np.exp(logc)

    diag = C ** (-(ns_in + ni_in + 1.0))

    # exp(G a_s^+ a_i^+): raises both modes by j, landing inside the box
    n_out = (ba + 1) * (bb + 1)
    raise_ = np.zeros((n_out, n_in))
    raise_[ns_in * (bb + 1) + ni_in, np.arange(n_in)] = 1.0
    j_top = min(ba, bb) if j_max is None else min(j_max, ba, bb)
    if gamma > 0:
        for j in range(1, j_top + 1):
            ok = (ns_in + j <= ba) & (ni_in + j <= bb)
            src = np.nonzero(ok)[0]
            dst = (ns_in[src] + j) * (bb + 1) + (ni_in[src] + j)
            logc = (
                j * math.log(gamma) - gammaln(j + 1)
                + _log_falling(ns_in[src] + j, j) + _log_falling(ni_in[src] + j, j)
            )
            raise_[dst, src] = np.exp(logc)

    out = raise_ @ (diag[:, None] * lower)
    out.flags.writeable = False
    return out


def two_mode_squeeze(state: FockVector, p: SqueezeParams, signal: str, idler: str) -> FockVector:
    """Apply the two-mode squeezer to ``signal`` and ``idler``.

    The three normally ordered factors are applied right to left. The raising
    series is summed up to ``p.j_max`` terms, or as far as the output grid can
    represent when ``j_max`` is None; whatever does not fit is charged as
    overflow.
    """
    box = _box(state, signal, idler)
    mat = _squeeze_matrix(p.g, p.j_max, state.cap(signal), state.cap(idler), *box)
    return apply_two_mode(state, signal, idler, mat, box)


@lru_cache(maxsize=4096)
def _rotation_block(theta: float, total: int) -> np.ndarray:
    """exp(theta (a b^+ - a^+ b)) restricted to n_a + n_b = total, basis |m, total-m>."""
    m = np.arange(total + 1, dtype=float)
    gen = np.zeros((total + 1, total + 1))
    # a b^+ |m, N-m> = sqrt(m (N-m+1)) |m-1, N-m+1>
    up = np.sqrt(m[1:] * (total - m[1:] + 1))
    gen[np.arange(total), np.arange(1, total + 1)] += up
    # a^+ b |m, N-m> = sqrt((m+1)(N-m)) |m+1, N-m-1>
    gen[np.arange(1, total + 1), np.arange(total)] -= up
    block = expm(theta * gen)
    block.flags.writeable = False
    return block


@lru_cache(maxsize=256)
def _bs_matrix(theta: float, phase: float, ca: int, cb: int, ba: int, bb: int) -> np.ndarray:
    n_in = (ca + 1) * (cb + 1)
    out = np.zeros(((ba + 1) * (bb + 1), n_in), dtype=np.complex128)
    for na in range(ca + 1):
        for nb in range(cb + 1):
            total = na + nb
            column = _rotation_block(theta, total)[:, na]
            if phase:
                column = column * np.exp(1j * phase * nb)
            m = np.arange(total + 1)
            ok = (m <= ba) & (total - m <= bb)
            out[m[ok] * (bb + 1) + (total - m[ok]), na * (cb + 1) + nb] = column[ok]
    out.flags.writeable = False
    return out


def _rotate(state: FockVector, a: str, b: str, theta: float, phase: float = 0.0) -> FockVector:
    box = _box(state, a, b)
    mat = _bs_matrix(float(theta), float(phase), state.cap(a), state.cap(b), *box)
    return apply_two_mode(state, a, b, mat, box)


def beamsplitter(
    state: FockVector,
    p: BsParams | None,
    a: str,
    b: str,
    convention: str = "subtraction",
    b_phase: float = 0.0,
) -> FockVector:
    """Beamsplitter between modes ``a`` and ``b``.

    ``b_phase`` multiplies the second row of the mode map by exp(i b_phase); a
    vacuum input on ``b`` makes every output independent of it.
    """
    if convention == "symmetric":
        theta = math.pi / 4
    elif convention == "subtraction":
        if p is None:
            raise ValueError("subtraction convention needs BsParams")
        theta = p.theta
    else:
        raise ValueError(f"unknown beamsplitter convention {convention!r}")
    return _rotate(state, a, b, theta, b_phase)


def loss_channel(state: FockVector, eta: float, mode: str, loss_mode: str) -> FockVector:
    """Couple ``mode`` to the vacuum ancilla ``loss_mode`` with transmissivity sqrt(eta).

    The channel itself is realised by projecting (or tracing) the ancilla
    afterwards; the Kraus operators are the projections onto each ancilla
    occupation.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f"efficiency must lie in [0, 1], got {eta}")
    state.axis(mode)
    pop = marginal(state, loss_mode)
    if pop[1:].sum() > 1e-28 * max(pop.sum(), 1.0):
        raise LossModeNotVacuum(f"loss mode {loss_mode} is not in vacuum")
    return _rotate(state, mode, loss_mode, math.atan2(math.sqrt(1 - eta), math.sqrt(eta)))


def tmsv_reference_amplitude(n: int, g: float) -> float:
    """Closed-form amplitude of |n, n> in the two-mode squeezed vacuum."""
    if g < 0:
        raise ValueError("g must be >= 0")
    return math.tanh(g) ** n / math.cosh(g)

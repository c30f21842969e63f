"""Analytic expressions for the heralded map and its first-order loss corrections.

Everything here is written out by hand from the derivation, with no call into
the numerical pipeline, so the two can be checked against each other.

The one-photon-excess corrections are available in two forms. By default
they are transcribed as derived in closed form, where the interference
expansion omits the binomial weights C(k, y) and C(j, x). That omission halves
the (1,1,0,1) and (1,0,1,1) terms (each picks up a weight 2 from expanding a
squared creation operator). ``binomial_weights=True`` restores the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidPattern
from .fock import SIGNAL, FockVector
from .gate import GateParams, Qubit

_SQRT2 = math.sqrt(2.0)


class ExcessPattern(NamedTuple):
    """Detected-before-loss photon counts on (H1, H2, V1, V2)."""

    alpha: int
    beta: int
    gamma: int
    delta: int


EXCESS_PATTERNS = (
    ExcessPattern(2, 0, 0, 1),
    ExcessPattern(1, 1, 0, 1),
    ExcessPattern(1, 0, 1, 1),
    ExcessPattern(1, 0, 0, 2),
)
LEADING_PATTERN = ExcessPattern(1, 0, 0, 1)

# which herald mode lost the extra photon, as a loss-ancilla tuple (LH1, LV1, LH2, LV2)
LOSS_KEY = {
    LEADING_PATTERN: (0, 0, 0, 0),
    ExcessPattern(2, 0, 0, 1): (1, 0, 0, 0),
    ExcessPattern(1, 1, 0, 1): (0, 0, 1, 0),
    ExcessPattern(1, 0, 1, 1): (0, 1, 0, 0),
    ExcessPattern(1, 0, 0, 2): (0, 0, 0, 1),
}


@dataclass(frozen=True)
class IndexSet:
    branch: int
    k: int
    y: int
    j: int
    x: int
    physical: bool


def _factors(p: GateParams):
    sq = p.squeeze
    return p.t, p.r, sq.gamma, sq.C


def conditional_map_matrix(p: GateParams, q: Qubit, dim: int, out_dim: int | None = None) -> np.ndarray:
    """Matrix of C^{-(n+1)} t^{n-1}/2 (v r a - h G t^2 a^+) on levels 0..dim.

    Rows run over output levels 0..out_dim (default ``dim``, i.e. square).
    """
    t, r, gamma, C = _factors(p)
    out_dim = dim if out_dim is None else out_dim
    m = np.zeros((out_dim + 1, dim + 1), dtype=np.complex128)
    for n in range(dim + 1):
        pref = C ** (-(n + 1)) * t ** (n - 1) / 2
        if n >= 1 and n - 1 <= out_dim:
            m[n - 1, n] = pref * q.v * r * math.sqrt(n)
        if n + 1 <= out_dim:
            m[n + 1, n] = -pref * q.h * gamma * t**2 * math.sqrt(n + 1)
    return m


def _ket(n: int, cap: int) -> np.ndarray:
    v = np.zeros(cap + 1, dtype=np.complex128)
    if n <= cap:
        v[n] = 1.0
    return v


def _correction_vectors(n: int, p: GateParams, q: Qubit, eta: float, binomial_weights: bool):
    t, r, gamma, C = _factors(p)
    cap = n + 2
    ket = _ket(n, cap)
    lower2 = math.sqrt(n * (n - 1)) * _ket(n - 2, cap) if n >= 2 else np.zeros(cap + 1, complex)
    raise2 = math.sqrt((n + 1) * (n + 2)) * _ket(n + 2, cap)
    number1 = (n + 1) * ket
    base = eta * math.sqrt(1 - eta) * C ** (-(n + 1))
    w = 2.0 if binomial_weights else 1.0

    yield ExcessPattern(2, 0, 0, 1), (
        base / _SQRT2 * t ** (n - 2) * r * (-q.h * t**2 * gamma * number1 + q.v * r / 2 * lower2)
    )
    yield ExcessPattern(1, 1, 0, 1), w * base / (4 * _SQRT2) * t ** (n - 2) * r**2 * q.v * lower2
    yield ExcessPattern(1, 0, 1, 1), -w * base / (4 * _SQRT2) * t ** (n + 2) * gamma**2 * q.h * raise2
    yield ExcessPattern(1, 0, 0, 2), (
        base / _SQRT2 * t**n * gamma * (q.v * r * number1 - q.h * t**2 * gamma / 2 * raise2)
    )


def correction_states(
    n: int, p: GateParams, q: Qubit, eta: float, binomial_weights: bool = False
) -> list[tuple[ExcessPattern, FockVector]]:
    """The four one-lost-photon conditional states for input |n> (unnormalized)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return [
        (pat, FockVector((SIGNAL,), (n + 2,), vec))
        for pat, vec in _correction_vectors(n, p, q, eta, binomial_weights)
    ]


def first_order_map(
    p: GateParams,
    q: Qubit,
    eta: float,
    dim: int,
    out_dim: int | None = None,
    binomial_weights: bool = False,
) -> dict[ExcessPattern, np.ndarray]:
    """Kraus matrices: the leading term scaled by eta plus the four corrections."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    out_dim = dim if out_dim is None else out_dim
    kraus = {LEADING_PATTERN: eta * conditional_map_matrix(p, q, dim, out_dim)}
    if eta == 1:
        return kraus
    for pat in EXCESS_PATTERNS:
        kraus[pat] = np.zeros((out_dim + 1, dim + 1), dtype=np.complex128)
    for n in range(dim + 1):
        for pat, vec in _correction_vectors(n, p, q, eta, binomial_weights):
            rows = min(out_dim, vec.size - 1) + 1
            kraus[pat][:rows, n] = vec[:rows]
    return kraus


def _solve_branch(branch: int, e: ExcessPattern) -> tuple[int, int, int, int]:
    a, b, c, d = e
    if branch == 1:  # h b_H1^y b_H2^(k-y+1) b_V1^x b_V2^(j-x)
        y, x = a, c
        k, j = b + y - 1, d + x
    elif branch == 2:  # -h b_H1^(y+1) b_H2^(k-y) b_V1^x b_V2^(j-x)
        y, x = a - 1, c
        k, j = b + y, d + x
    elif branch == 3:  # -v b_H1^y b_H2^(k-y) b_V1^(x+1) b_V2^(j-x)
        y, x = a, c - 1
        k, j = b + y, d + x
    elif branch == 4:  # v b_H1^y b_H2^(k-y) b_V1^x b_V2^(j-x+1)
        y, x = a, c
        k, j = b + y, d + x - 1
    else:
        raise ValueError(f"branch must be 1..4, got {branch}")
    return k, y, j, x


def enumerate_index_sets(e: ExcessPattern) -> list[IndexSet]:
    """Solve each interference branch for (k, y, j, x) and flag physical solutions.

    A solution is physical when every index is non-negative and the binomial
    splits are possible (y <= k, x <= j).
    """
    e = ExcessPattern(*e)
    out = []
    for branch in (1, 2, 3, 4):
        k, y, j, x = _solve_branch(branch, e)
        physical = min(k, y, j, x) >= 0 and y <= k and x <= j
        out.append(IndexSet(branch, k, y, j, x, physical))
    return out


def loss_prefactor(e: ExcessPattern, eta: float) -> float:
    """alpha delta eta (1-eta)^((sum-2)/2) sqrt((alpha-1)! beta! gamma! (delta-1)!)."""
    a, b, c, d = e
    if a < 1 or d < 1:
        raise InvalidPattern(f"pattern {tuple(e)} needs a photon on both H1 and V2")
    total = a + b + c + d
    fact = math.factorial(a - 1) * math.factorial(b) * math.factorial(c) * math.factorial(d - 1)
    return a * d * eta * (1 - eta) ** ((total - 2) / 2) * math.sqrt(fact)

"""Truncated multi-mode Fock-space vectors.

A :class:`FockVector` is a dense complex array indexed by per-mode occupation
numbers, one axis per mode, in C (row-major) order. Every operation is a pure
function returning a new vector.

Population that an operation pushes above a cap is never dropped silently. It
is added to one of two accumulators:

* ``truncation_leak`` -- overflow on an ordinary mode. This is genuine
  truncation error and callers gate results on it.
* ``discarded`` -- overflow on a *sector mode*. Sector modes are herald or loss
  modes whose cap was chosen as a photon budget: components above the budget
  provably cannot reach any recorded detection outcome, so removing them is
  deliberate rather than an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateMode,
    ModeMismatch,
    OccupationAboveCap,
    UnknownMode,
    ZeroNormState,
)

SIGNAL = "S"
COMPANION = "R"
H1, V1, H2, V2 = "H1", "V1", "H2", "V2"
HERALD_MODES = (H1, V1, H2, V2)
LOSS_MODE = {H1: "LH1", V1: "LV1", H2: "LH2", V2: "LV2", SIGNAL: "LS"}

ZERO_NORM_THRESHOLD = 1e-14  # on the squared norm


@dataclass(frozen=True, eq=False)
class FockVector:
    modes: tuple[str, ...]
    caps: tuple[int, ...]
    amps: np.ndarray
    truncation_leak: float = 0.0
    discarded: float = 0.0
    sector_modes: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        modes = tuple(self.modes)
        caps = tuple(int(c) for c in self.caps)
        if len(set(modes)) != len(modes):
            raise DuplicateMode(f"duplicate mode labels in {modes}")
        if len(caps) != len(modes):
            raise ModeMismatch("one cap per mode is required")
        if any(c < 0 for c in caps):
            raise ValueError("caps must be non-negative")
        amps = np.array(self.amps, dtype=np.complex128)
        shape = tuple(c + 1 for c in caps)
        if amps.shape != shape:
            raise ModeMismatch(f"amplitude shape {amps.shape} does not match caps {shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.flags.writeable = False
        sector = frozenset(self.sector_modes) & frozenset(modes)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "sector_modes", sector)

    def axis(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise UnknownMode(f"mode {mode!r} not in {self.modes}") from None

    def cap(self, mode: str) -> int:
        return self.caps[self.axis(mode)]

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))

    def with_amps(self, amps: np.ndarray, **changes) -> "FockVector":
        """Same layout and accounting, new amplitudes (and optional field changes)."""
        return replace(self, amps=amps, **changes)

    def __repr__(self):
        layout = ", ".join(f"{m}<={c}" for m, c in zip(self.modes, self.caps))
        return f"FockVector([{layout}], norm={self.norm:.6g}, leak={self.truncation_leak:.3g})"


def _charge(state: FockVector, overflow: float, modes: Iterable[str]) -> dict:
    """Accumulator updates for ``overflow`` population written above the caps of ``modes``."""
    overflow = max(float(overflow), 0.0)
    if any(m in state.sector_modes for m in modes):
        return {"discarded": state.discarded + overflow}
    return {"truncation_leak": state.truncation_leak + overflow}


def make_basis_state(
    occupations: Mapping[str, int],
    caps: Mapping[str, int],
    sector_modes: Iterable[str] = (),
) -> FockVector:
    """Unit vector on a single occupation tuple. Mode order follows ``occupations``."""
    modes = tuple(occupations)
    missing = [m for m in modes if m not in caps]
    if missing:
        raise UnknownMode(f"no cap given for {missing}")
    cap_t = tuple(int(caps[m]) for m in modes)
    occ = tuple(int(occupations[m]) for m in modes)
    for m, n, c in zip(modes, occ, cap_t):
        if n < 0:
            raise ValueError(f"negative occupation on {m}")
        if n > c:
            raise OccupationAboveCap(f"occupation {n} on {m} exceeds cap {c}")
    amps = np.zeros(tuple(c + 1 for c in cap_t), dtype=np.complex128)
    amps[occ] = 1.0
    return FockVector(modes, cap_t, amps, sector_modes=frozenset(sector_modes))


def vacuum(mode: str, cap: int, sector: bool = False) -> FockVector:
    return make_basis_state({mode: 0}, {mode: cap}, (mode,) if sector else ())


def single_mode(mode: str, amplitudes: Sequence[complex]) -> FockVector:
    amps = np.asarray(amplitudes, dtype=np.complex128)
    return FockVector((mode,), (amps.size - 1,), amps)


def apply_creation(state: FockVector, mode: str) -> FockVector:
    ax = state.axis(mode)
    a = np.moveaxis(state.amps, ax, 0)
    cap = state.caps[ax]
    out = np.zeros_like(a)
    sq = np.sqrt(np.arange(1, cap + 1, dtype=float)).reshape((-1,) + (1,) * (a.ndim - 1))
    out[1:] = sq * a[:-1]
    overflow = (cap + 1) * float(np.sum(np.abs(a[-1]) ** 2))
    return state.with_amps(np.moveaxis(out, 0, ax), **_charge(state, overflow, (mode,)))


def apply_annihilation(state: FockVector, mode: str) -> FockVector:
    ax = state.axis(mode)
    a = np.moveaxis(state.amps, ax, 0)
    cap = state.caps[ax]
    out = np.zeros_like(a)
    sq = np.sqrt(np.arange(1, cap + 1, dtype=float)).reshape((-1,) + (1,) * (a.ndim - 1))
    out[:-1] = sq * a[1:]
    return state.with_amps(np.moveaxis(out, 0, ax))


def apply_number(state: FockVector, mode: str) -> FockVector:
    ax = state.axis(mode)
    shape = [1] * state.amps.ndim
    shape[ax] = -1
    n = np.arange(state.caps[ax] + 1, dtype=float).reshape(shape)
    return state.with_amps(n * state.amps)


def _check_same_layout(a: FockVector, b: FockVector) -> None:
    if a.modes != b.modes or a.caps != b.caps:
        raise ModeMismatch(
            f"layouts differ: {list(zip(a.modes, a.caps))} vs {list(zip(b.modes, b.caps))}"
        )


def inner_product(a: FockVector, b: FockVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_same_layout(a, b)
    return complex(np.vdot(a.amps, b.amps))


def project_mode(state: FockVector, mode: str, n: int) -> FockVector:
    """Contract ``mode`` with <n|. The result is unnormalized; its squared norm is the
    outcome probability when the input has unit norm."""
    ax = state.axis(mode)
    if n < 0 or n > state.caps[ax]:
        raise OccupationAboveCap(f"outcome {n} on {mode} outside [0, {state.caps[ax]}]")
    amps = np.take(state.amps, n, axis=ax)
    modes = state.modes[:ax] + state.modes[ax + 1:]
    caps = state.caps[:ax] + state.caps[ax + 1:]
    return FockVector(
        modes, caps, amps,
        truncation_leak=state.truncation_leak,
        discarded=state.discarded,
        sector_modes=state.sector_modes,
    )


def project_modes(state: FockVector, outcome: Mapping[str, int]) -> FockVector:
    for mode, n in outcome.items():
        state = project_mode(state, mode, n)
    return state


def tensor(a: FockVector, b: FockVector) -> FockVector:
    clash = set(a.modes) & set(b.modes)
    if clash:
        raise DuplicateMode(f"modes {sorted(clash)} appear in both factors")
    amps = np.multiply.outer(a.amps, b.amps)
    na, nb = a.norm_sq, b.norm_sq
    return FockVector(
        a.modes + b.modes,
        a.caps + b.caps,
        amps,
        truncation_leak=a.truncation_leak * nb + b.truncation_leak * na,
        discarded=a.discarded * nb + b.discarded * na,
        sector_modes=a.sector_modes | b.sector_modes,
    )


def normalize(state: FockVector) -> tuple[FockVector, float]:
    nsq = state.norm_sq
    if nsq < ZERO_NORM_THRESHOLD:
        raise ZeroNormState(f"squared norm {nsq:.3g} below threshold {ZERO_NORM_THRESHOLD}")
    norm = float(np.sqrt(nsq))
    return state.with_amps(state.amps / norm), norm


def resize(state: FockVector, mode: str, cap: int) -> FockVector:
    """Change the cap of ``mode``: zero-padding is exact, cropping is charged as overflow."""
    ax = state.axis(mode)
    old = state.caps[ax]
    if cap == old:
        return state
    shape = list(state.amps.shape)
    shape[ax] = cap + 1
    out = np.zeros(shape, dtype=np.complex128)
    keep = min(cap, old) + 1
    sl = [slice(None)] * len(shape)
    sl[ax] = slice(0, keep)
    out[tuple(sl)] = state.amps[tuple(sl)]
    changes = {}
    if cap < old:
        sl[ax] = slice(keep, None)
        changes = _charge(state, float(np.sum(np.abs(state.amps[tuple(sl)]) ** 2)), (mode,))
    caps = state.caps[:ax] + (cap,) + state.caps[ax + 1:]
    return replace(state, caps=caps, amps=out, **changes)


def align(a: FockVector, b: FockVector) -> tuple[FockVector, FockVector]:
    """Zero-pad both vectors to the per-mode maximum caps (same mode set required)."""
    if set(a.modes) != set(b.modes):
        raise ModeMismatch(f"mode sets differ: {a.modes} vs {b.modes}")
    b = reorder(b, a.modes)
    for m in a.modes:
        cap = max(a.cap(m), b.cap(m))
        a, b = resize(a, m, cap), resize(b, m, cap)
    return a, b


def reorder(state: FockVector, modes: Sequence[str]) -> FockVector:
    modes = tuple(modes)
    if modes == state.modes:
        return state
    if sorted(modes) != sorted(state.modes):
        raise ModeMismatch(f"cannot reorder {state.modes} into {modes}")
    perm = [state.axis(m) for m in modes]
    return replace(
        state,
        modes=modes,
        caps=tuple(state.caps[p] for p in perm),
        amps=np.transpose(state.amps, perm),
    )


def marginal(state: FockVector, mode: str) -> np.ndarray:
    """Photon-number distribution of ``mode`` (unnormalized if the state is)."""
    ax = state.axis(mode)
    pop = np.abs(state.amps) ** 2
    other = tuple(i for i in range(pop.ndim) if i != ax)
    return pop.sum(axis=other)


def reduced_density(state: FockVector, keep: Sequence[str]) -> np.ndarray:
    """Partial trace onto ``keep`` (in that order), as a square matrix."""
    keep = tuple(keep)
    rest = tuple(m for m in state.modes if m not in keep)
    psi = reorder(state, keep + rest).amps
    dk = int(np.prod([state.cap(m) + 1 for m in keep]))
    psi = psi.reshape(dk, -1)
    return psi @ psi.conj().T


def apply_two_mode(
    state: FockVector,
    mode_a: str,
    mode_b: str,
    matrix: np.ndarray,
    box: tuple[int, int],
) -> FockVector:
    """Apply a two-mode operator given as a dense matrix.

    ``matrix`` maps the flattened in-cap grid of (mode_a, mode_b) onto the
    flattened output grid ``(box[0]+1) x (box[1]+1)``, where ``box`` may exceed
    the caps. Population landing in the box above the caps is charged as
    overflow of whichever modes overflowed. Population the box cannot hold at
    all is recovered as a norm deficit, which is exact when the underlying
    operator is unitary; it is charged to the sector modes when one is present
    (callers only extend the box of a non-sector mode whose partner is a
    sector mode, so missing population always overflowed the sector mode).
    """
    ia, ib = state.axis(mode_a), state.axis(mode_b)
    if ia == ib:
        raise DuplicateMode("two-mode operator needs two distinct modes")
    ca, cb = state.caps[ia], state.caps[ib]
    ba, bb = box
    if ba < ca or bb < cb:
        raise ValueError("output box must contain the caps")
    if matrix.shape != ((ba + 1) * (bb + 1), (ca + 1) * (cb + 1)):
        raise ValueError(f"matrix shape {matrix.shape} does not match caps/box")

    moved = np.moveaxis(state.amps, (ia, ib), (0, 1))
    rest_shape = moved.shape[2:]
    flat = moved.reshape((ca + 1) * (cb + 1), -1)
    out = (matrix @ flat).reshape((ba + 1, bb + 1) + rest_shape)

    pop = np.abs(out) ** 2
    over_a_only = float(pop[ca + 1:, : cb + 1].sum())
    over_b_only = float(pop[: ca + 1, cb + 1:].sum())
    over_both = float(pop[ca + 1:, cb + 1:].sum())
    deficit = max(state.norm_sq - float(pop.sum()), 0.0)

    sector = state.sector_modes
    leak, disc = 0.0, 0.0
    for amount, modes in (
        (over_a_only, (mode_a,)),
        (over_b_only, (mode_b,)),
        (over_both, (mode_a, mode_b)),
        (deficit, (mode_a, mode_b)),
    ):
        if any(m in sector for m in modes):
            disc += amount
        else:
            leak += amount

    kept = np.moveaxis(out[: ca + 1, : cb + 1], (0, 1), (ia, ib))
    return state.with_amps(
        np.ascontiguousarray(kept),
        truncation_leak=state.truncation_leak + leak,
        discarded=state.discarded + disc,
    )

"""End-to-end simulation of the qubit-programmed gate.

Mode bookkeeping: the OPA idler is V1 and the photon reflected by the
subtraction beamsplitter is H1; they share spatial mode 1 in orthogonal
polarizations. The dual-rail programme qubit occupies H2/V2 and is mixed with
mode 1 on a symmetric beamsplitter, polarization by polarization, before
photon-number-resolving detection of all four herald modes.

Herald modes are sector modes (see :mod:`qpgate.fock`). Every element after the
OPA conserves the photon number of each polarization across the herald and
loss modes, so a detection pattern with ``d`` photons of one polarization only
sees the sectors holding at most ``d`` (lossless) or ``d`` + lost photons of
that polarization. The pipeline sizes the herald modes to that budget and
books everything above it as ``discarded``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CapTooSmall, ConfigError, ZeroNormState
from .fock import (
    COMPANION,
    H1,
    H2,
    HERALD_MODES,
    LOSS_MODE,
    SIGNAL,
    V1,
    V2,
    ZERO_NORM_THRESHOLD,
    FockVector,
    apply_annihilation,
    apply_creation,
    make_basis_state,
    normalize,
    project_mode,
    project_modes,
    resize,
    tensor,
    vacuum,
)
from .optics import BsParams, SqueezeParams, beamsplitter, loss_channel, two_mode_squeeze

_SQRT_HALF = 1.0 / math.sqrt(2.0)

OUTCOME_A = (1, 0, 0, 1)  # (H1, V1, H2, V2)
OUTCOME_B = (0, 1, 1, 0)


@dataclass(frozen=True)
class Qubit:
    h: complex
    v: complex

    def __post_init__(self):
        object.__setattr__(self, "h", complex(self.h))
        object.__setattr__(self, "v", complex(self.v))
        norm = abs(self.h) ** 2 + abs(self.v) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"qubit amplitudes must satisfy |h|^2+|v|^2=1, got {norm}")

    @classmethod
    def normalized(cls, h: complex, v: complex) -> "Qubit":
        norm = math.sqrt(abs(h) ** 2 + abs(v) ** 2)
        if norm == 0:
            raise ValueError("qubit amplitudes are both zero")
        return cls(h / norm, v / norm)


# U(p) = v a - h a^+ for p = h|H> + v|V>
PROGRAMMES = {
    "a": Qubit(0, 1),
    "adag": Qubit(-1, 0),
    "x": Qubit(-_SQRT_HALF, _SQRT_HALF),
    "p": Qubit(1j * _SQRT_HALF, 1j * _SQRT_HALF),
}


@dataclass(frozen=True)
class GateParams:
    """Physical and numerical settings of one gate run.

    With ``tune_gain`` the OPA gain is fixed by tanh(g) = r / t^2 and ``g`` is
    ignored. Caps are given in (H1, V1, H2, V2) order.
    """

    t: float = 0.95
    g: float = 0.0
    tune_gain: bool = True
    eta: float = 1.0
    herald: tuple[int, int, int, int] = OUTCOME_A
    signal_cap: int = 20
    herald_caps: tuple[int, int, int, int] = (4, 4, 4, 4)
    loss_caps: tuple[int, int, int, int] = (4, 4, 4, 4)
    j_max: int | None = None
    leak_tolerance: float = 1e-8
    both_outcomes: bool = False
    reflect_phase: float = 0.0
    signal_eta: float = 1.0

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise ConfigError(f"t must lie in (0, 1], got {self.t}")
        if not 0 <= self.eta <= 1 or not 0 <= self.signal_eta <= 1:
            raise ConfigError("detector and signal efficiencies must lie in [0, 1]")
        for name in ("herald", "herald_caps", "loss_caps"):
            val = tuple(int(x) for x in getattr(self, name))
            if len(val) != 4 or min(val) < 0:
                raise ConfigError(f"{name} needs four non-negative integers")
            object.__setattr__(self, name, val)
        if self.tune_gain and self.r / self.t**2 >= 1:
            raise ConfigError(f"gain tuning needs r/t^2 < 1 (t={self.t})")
        if not self.tune_gain and self.g < 0:
            raise ConfigError("g must be >= 0")

    @property
    def bs(self) -> BsParams:
        return BsParams(self.t)

    @property
    def r(self) -> float:
        return math.sqrt(max(1.0 - self.t**2, 0.0))

    @property
    def squeeze(self) -> SqueezeParams:
        if self.tune_gain:
            return SqueezeParams.from_gamma(self.r / self.t**2, self.j_max)
        return SqueezeParams(self.g, self.j_max)

    @property
    def outcome(self) -> dict[str, int]:
        return dict(zip(HERALD_MODES, self.herald))


@dataclass(frozen=True)
class GateResult:
    conditional_state: FockVector
    success_probability: float
    truncation_leak: float
    discarded: float = 0.0


@dataclass(frozen=True)
class LossyGateResult:
    """Ensemble of unnormalized conditional states, one per loss-ancilla tuple.

    Keys are ancilla occupations in (LH1, LV1, LH2, LV2) order, extended by the
    signal-loss ancilla when signal loss is switched on. Members whose photon
    budget the herald caps cannot represent completely are left out and their
    probability is reported as ``incomplete_probability``.
    """

    members: dict[tuple[int, ...], FockVector]
    success_probability: float
    truncation_leak: float
    discarded: float = 0.0
    incomplete_probability: float = 0.0

    def density_matrix(self) -> np.ndarray:
        """Unnormalized conditional density matrix over the flattened output modes."""
        vecs = np.array([psi.amps.ravel() for psi in self.members.values()])
        return vecs.T @ vecs.conj()

    def member(self, key) -> FockVector:
        return self.members[tuple(key)]


def dual_rail(q: Qubit, cap_h: int = 1, cap_v: int = 1) -> FockVector:
    """h a^+_H2 |0> + v a^+_V2 |0> on modes (H2, V2)."""
    if cap_h < 1 or cap_v < 1:
        raise CapTooSmall("the qubit modes need caps >= 1")
    amps = np.zeros((cap_h + 1, cap_v + 1), dtype=np.complex128)
    amps[1, 0] = q.h
    amps[0, 1] = q.v
    return FockVector((H2, V2), (cap_h, cap_v), amps, sector_modes=frozenset((H2, V2)))


def _budgets(p: GateParams, lossy: bool) -> tuple[int, int]:
    """Per-polarization photon budgets (H, V) for the herald modes."""
    dh1, dv1, dh2, dv2 = p.herald
    ch1, cv1, ch2, cv2 = p.herald_caps
    d_h, d_v = dh1 + dh2, dv1 + dv2
    if lossy:
        lh1, lv1, lh2, lv2 = p.loss_caps
        b_h = min(min(ch1, ch2), d_h + lh1 + lh2)
        b_v = min(min(cv1, cv2), d_v + lv1 + lv2)
    else:
        b_h, b_v = d_h, d_v
    if max(dh1, dh2) > min(ch1, ch2) or max(dv1, dv2) > min(cv1, cv2) or b_h < d_h or b_v < d_v:
        raise CapTooSmall(f"herald caps {p.herald_caps} cannot hold the outcome {p.herald}")
    return b_h, b_v


def herald_state(inp: FockVector, q: Qubit, p: GateParams, budgets: tuple[int, int]) -> FockVector:
    """Full pre-detection state on (signal, spectators..., H1, V1, H2, V2)."""
    b_h, b_v = budgets
    inp.axis(SIGNAL)
    state = resize(inp, SIGNAL, inp.cap(SIGNAL) + b_v)
    state = tensor(state, vacuum(V1, b_v, sector=True))
    state = two_mode_squeeze(state, p.squeeze, SIGNAL, V1)
    state = tensor(state, vacuum(H1, b_h, sector=True))
    state = beamsplitter(state, p.bs, SIGNAL, H1, "subtraction", b_phase=p.reflect_phase)
    state = tensor(state, dual_rail(q, max(b_h, 1), max(b_v, 1)))
    state = beamsplitter(state, None, H1, H2, "symmetric")
    state = beamsplitter(state, None, V1, V2, "symmetric")
    return state


def _check_leak(leak: float, inp: FockVector, p: GateParams) -> None:
    if leak > p.leak_tolerance * inp.norm_sq:
        raise CapTooSmall(
            f"truncation leak {leak:.3g} exceeds tolerance {p.leak_tolerance:.1e}; raise the signal cap"
        )


def conditional_output(inp: FockVector, q: Qubit, p: GateParams) -> FockVector:
    """Lossless post-selected state without zero-norm or leak checks."""
    state = herald_state(inp, q, p, _budgets(p, lossy=False))
    return project_modes(state, p.outcome)


def run_gate(inp: FockVector, q: Qubit, p: GateParams) -> GateResult:
    if p.eta != 1 or p.signal_eta != 1:
        raise ConfigError("run_gate is the lossless pipeline; use run_gate_lossy for eta < 1")
    out = conditional_output(inp, q, p)
    _check_leak(out.truncation_leak, inp, p)
    prob = out.norm_sq
    if prob < ZERO_NORM_THRESHOLD * max(inp.norm_sq, 1.0):
        raise ZeroNormState(f"herald {p.herald} is impossible for this input and programme")
    return GateResult(out, prob, out.truncation_leak, out.discarded)


def lossy_ensemble(inp: FockVector, q: Qubit, p: GateParams) -> LossyGateResult:
    """Lossy post-selected ensemble without zero-norm or leak checks."""
    budgets = _budgets(p, lossy=True)
    state = herald_state(inp, q, p, budgets)
    outcome = p.outcome
    loss_modes = []
    for mode, lcap in zip(HERALD_MODES, p.loss_caps):
        lmode = LOSS_MODE[mode]
        cap = min(lcap, state.cap(mode) - outcome[mode])
        state = tensor(state, vacuum(lmode, cap, sector=True))
        state = loss_channel(state, p.eta, mode, lmode)
        state = project_mode(state, mode, outcome[mode])
        loss_modes.append(lmode)
    if p.signal_eta < 1:
        lmode = LOSS_MODE[SIGNAL]
        state = tensor(state, vacuum(lmode, state.cap(SIGNAL)))
        state = loss_channel(state, p.signal_eta, SIGNAL, lmode)
        loss_modes.append(lmode)

    out_modes = tuple(m for m in state.modes if m not in loss_modes)
    axes = [state.axis(m) for m in loss_modes]
    arr = np.moveaxis(state.amps, axes, list(range(len(axes))))
    out_caps = tuple(state.cap(m) for m in out_modes)

    d_h = outcome[H1] + outcome[H2]
    d_v = outcome[V1] + outcome[V2]
    b_h, b_v = budgets
    members: dict[tuple[int, ...], FockVector] = {}
    total = incomplete = 0.0
    for key in np.ndindex(*arr.shape[: len(axes)]):
        amps = arr[key]
        pop = float(np.vdot(amps, amps).real)
        if pop == 0.0:
            continue
        if d_h + key[0] + key[2] > b_h or d_v + key[1] + key[3] > b_v:
            incomplete += pop
            continue
        total += pop
        members[tuple(int(k) for k in key)] = FockVector(
            out_modes, out_caps, amps,
            truncation_leak=state.truncation_leak,
            discarded=state.discarded,
        )
    return LossyGateResult(members, total, state.truncation_leak, state.discarded, incomplete)


def run_gate_lossy(inp: FockVector, q: Qubit, p: GateParams) -> LossyGateResult:
    res = lossy_ensemble(inp, q, p)
    _check_leak(res.truncation_leak, inp, p)
    if res.success_probability < ZERO_NORM_THRESHOLD * max(inp.norm_sq, 1.0):
        raise ZeroNormState(f"herald {p.herald} is impossible for this input and programme")
    return res


def ideal_apply(q: Qubit, inp: FockVector) -> tuple[FockVector, float]:
    """Normalized (v a - h a^+)|input> on the signal mode, and its norm before normalization."""
    state = resize(inp, SIGNAL, inp.cap(SIGNAL) + 1)
    lowered = apply_annihilation(state, SIGNAL)
    raised = apply_creation(state, SIGNAL)
    out = state.with_amps(q.v * lowered.amps - q.h * raised.amps)
    return normalize(out)


def herald_success_probability(inp: FockVector, q: Qubit, p: GateParams) -> float:
    outcomes = [p.herald]
    if p.both_outcomes:
        other = OUTCOME_B if p.herald == OUTCOME_A else OUTCOME_A
        outcomes.append(other)
    total = 0.0
    for herald in outcomes:
        pp = replace(p, herald=herald)
        try:
            if p.eta == 1 and p.signal_eta == 1:
                total += run_gate(inp, q, pp).success_probability
            else:
                total += run_gate_lossy(inp, q, pp).success_probability
        except ZeroNormState:
            pass
    return total


def choi_input(dim: int) -> FockVector:
    """Unnormalized sum_n |n>_S |n>_R; pushing it through a linear map yields the map's matrix."""
    return FockVector((SIGNAL, COMPANION), (dim, dim), np.eye(dim + 1))


def gate_matrix(q: Qubit, p: GateParams, dim: int) -> np.ndarray:
    """Lossless conditional map restricted to input levels 0..dim, output levels 0..dim+1."""
    out = conditional_output(choi_input(dim), q, p)
    return np.array(out.amps[:, :])


def gate_kraus(q: Qubit, p: GateParams, dim: int) -> dict[tuple[int, ...], np.ndarray]:
    """Kraus matrices of the lossy conditional map, keyed by loss-ancilla tuple."""
    res = lossy_ensemble(choi_input(dim), q, p)
    return {k: np.array(v.amps) for k, v in res.members.items()}


def basis_input(n: int, cap: int) -> FockVector:
    return make_basis_state({SIGNAL: n}, {SIGNAL: cap})

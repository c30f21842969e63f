"""Fidelities, process tensors and the parameter sweeps built on them."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import sqrtm

from .errors import CapTooSmall, ZeroNormState
from .fock import SIGNAL, ZERO_NORM_THRESHOLD, FockVector, align, reduced_density
from .gate import (
    PROGRAMMES,
    GateParams,
    LossyGateResult,
    Qubit,
    ideal_apply,
    run_gate,
    run_gate_lossy,
)
from .states import FAMILIES, InputFamily, make_input, parameter_for_nbar, required_cap

OPERATORS = ("a", "adag", "x", "p")
DEFAULT_NBARS = tuple(round(0.05 * k, 10) for k in range(1, 61))


def fidelity_pure(out: FockVector, ideal: FockVector) -> float:
    """|<ideal|out>|^2 / (<ideal|ideal><out|out>) over the joint mode layout."""
    out, ideal = align(out, ideal)
    n_out, n_ideal = out.norm_sq, ideal.norm_sq
    if n_out < ZERO_NORM_THRESHOLD or n_ideal < ZERO_NORM_THRESHOLD:
        raise ZeroNormState("fidelity of a zero-norm state")
    overlap = np.vdot(ideal.amps, out.amps)
    return float(abs(overlap) ** 2 / (n_out * n_ideal))


def _members(ensemble) -> list[FockVector]:
    if isinstance(ensemble, LossyGateResult):
        return list(ensemble.members.values())
    if isinstance(ensemble, Mapping):
        return list(ensemble.values())
    return list(ensemble)


def fidelity_mixed(ensemble, ideal: FockVector) -> float:
    """<ideal|rho|ideal> for rho the normalized incoherent sum of the ensemble members.

    ``ensemble`` is a :class:`LossyGateResult`, a mapping of members or a plain
    iterable of unnormalized FockVectors.
    """
    members = _members(ensemble)
    total = sum(m.norm_sq for m in members)
    if total < ZERO_NORM_THRESHOLD or ideal.norm_sq < ZERO_NORM_THRESHOLD:
        raise ZeroNormState("fidelity of a zero-norm ensemble")
    acc = 0.0
    for m in members:
        mm, ii = align(m, ideal)
        acc += abs(np.vdot(ii.amps, mm.amps)) ** 2
    return float(acc / (total * ideal.norm_sq))


def fidelity_reduced(out, ideal: FockVector, keep: Sequence[str] = (SIGNAL,)) -> float:
    """Uhlmann fidelity of the reduced states on ``keep``.

    ``out`` may be a single FockVector or an ensemble as for :func:`fidelity_mixed`.
    """
    members = [out] if isinstance(out, FockVector) else _members(out)
    rho = None
    sigma = None
    for m in members:
        mm, ii = align(m, ideal)
        r = reduced_density(mm, keep)
        rho = r if rho is None else rho + r
        sigma = reduced_density(ii, keep)
    tr_rho, tr_sigma = np.trace(rho).real, np.trace(sigma).real
    if tr_rho < ZERO_NORM_THRESHOLD or tr_sigma < ZERO_NORM_THRESHOLD:
        raise ZeroNormState("fidelity of a zero-norm state")
    root = sqrtm(rho / tr_rho)
    inner = sqrtm(root @ (sigma / tr_sigma) @ root)
    return float(min(np.trace(inner).real ** 2, 1.0))


@dataclass(frozen=True)
class ProcessTensor:
    """E[n, m, l, k]: amplitude with which |n><m| is carried to |l><k|."""

    dim: int
    entries: np.ndarray

    def hermiticity_error(self) -> float:
        swapped = np.transpose(self.entries, (1, 0, 3, 2)).conj()
        return float(np.abs(self.entries - swapped).max())

    def scaled(self, factor: float) -> "ProcessTensor":
        return ProcessTensor(self.dim, self.entries * factor)


def process_tensor(kraus, dim: int) -> ProcessTensor:
    """Sum over Kraus matrices A of A[l, n] conj(A[k, m]).

    Matrices larger than (dim+1) x (dim+1) are restricted to levels 0..dim on
    both sides; smaller ones are zero padded.
    """
    mats = list(kraus.values()) if isinstance(kraus, Mapping) else list(kraus)
    e = np.zeros((dim + 1,) * 4, dtype=np.complex128)
    for a in mats:
        a = np.asarray(a, dtype=np.complex128)
        sq = np.zeros((dim + 1, dim + 1), dtype=np.complex128)
        rows, cols = min(a.shape[0], dim + 1), min(a.shape[1], dim + 1)
        sq[:rows, :cols] = a[:rows, :cols]
        e += np.einsum("ln,km->nmlk", sq, sq.conj())
    return ProcessTensor(dim, e)


def tensor_slices(pt: ProcessTensor) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal slice diag[n, l] = E[n, n, l, l] and coherence[n, m] = E[n, m, n-1, m+1].

    Coherence entries outside 1 <= n, m <= dim-1 are NaN.
    """
    d = pt.dim
    idx = np.arange(d + 1)
    diag = pt.entries[idx[:, None], idx[:, None], idx[None, :], idx[None, :]].real.copy()
    coh = np.full((d + 1, d + 1), np.nan + 0j)
    for n in range(1, d + 1):
        for m in range(d):
            coh[n, m] = pt.entries[n, m, n - 1, m + 1]
    return diag, coh


def ideal_kraus(q: Qubit, dim: int) -> np.ndarray:
    """Matrix of v a - h a^+ on levels 0..dim."""
    m = np.zeros((dim + 1, dim + 1), dtype=np.complex128)
    for n in range(dim + 1):
        if n >= 1:
            m[n - 1, n] = q.v * math.sqrt(n)
        if n + 1 <= dim:
            m[n + 1, n] = -q.h * math.sqrt(n + 1)
    return m


@dataclass(frozen=True)
class SweepRecord:
    family: str
    operator: str
    nbar: float
    t: float
    eta: float
    fidelity: float
    success_probability: float
    truncation_leak: float
    parameter: float = float("nan")
    incomplete_probability: float = 0.0
    reason: str = ""


def sweep_input(kind: str, nbar: float, min_cap: int, phase: float = 0.0) -> tuple[FockVector, float]:
    """Family member at mean photon number ``nbar`` with cap at least ``min_cap``.

    The cap is raised to whatever the family needs to meet the tail tolerance.
    """
    x = parameter_for_nbar(kind, nbar)
    cap = max(min_cap, required_cap(kind, x, phase))
    return make_input(InputFamily(kind, x, cap=cap, phase=phase)), x


def _point(job) -> SweepRecord:
    kind, op, nbar, p, phase, reduced = job
    q = PROGRAMMES[op]
    base = dict(family=kind, operator=op, nbar=nbar, t=p.t, eta=p.eta)
    try:
        inp, x = sweep_input(kind, nbar, p.signal_cap, phase)
        ideal, _ = ideal_apply(q, inp)
        if p.eta == 1 and p.signal_eta == 1:
            res = run_gate(inp, q, p)
            out = res.conditional_state
            fid = fidelity_reduced(out, ideal) if reduced else fidelity_pure(out, ideal)
            incomplete = 0.0
        else:
            res = run_gate_lossy(inp, q, p)
            fid = fidelity_reduced(res, ideal) if reduced else fidelity_mixed(res, ideal)
            incomplete = res.incomplete_probability
    except (ZeroNormState, CapTooSmall) as exc:
        return SweepRecord(**base, fidelity=float("nan"), success_probability=0.0,
                           truncation_leak=float("nan"), reason=f"{type(exc).__name__}: {exc}")
    return SweepRecord(**base, fidelity=fid, success_probability=res.success_probability,
                       truncation_leak=res.truncation_leak, parameter=x,
                       incomplete_probability=incomplete)


def _run(jobs: list, workers: int) -> list[SweepRecord]:
    if workers <= 1:
        return [_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output order is the grid order
        return list(pool.map(_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def fidelity_sweep(
    p: GateParams,
    families: Iterable[str] = FAMILIES,
    operators: Iterable[str] = OPERATORS,
    nbars: Iterable[float] = DEFAULT_NBARS,
    squeezed_phase: float = 0.0,
    reduced: bool = False,
    workers: int = 1,
) -> list[SweepRecord]:
    """Lossless fidelity for every (family, operator, nbar), in that nesting order.

    ``reduced`` switches the tmsv_half family from joint to reduced-state fidelity.
    """
    jobs = []
    for kind in families:
        phase = squeezed_phase if kind == "squeezed_vacuum" else 0.0
        for op in operators:
            for nbar in nbars:
                jobs.append((kind, op, float(nbar), p, phase, reduced and kind == "tmsv_half"))
    return _run(jobs, workers)


def efficiency_grid(
    alpha: float,
    ts: Iterable[float],
    etas: Iterable[float],
    p: GateParams,
    operators: Iterable[str] = ("x", "p"),
    workers: int = 1,
) -> list[SweepRecord]:
    """Fidelity of the coherent input |alpha> over a (t, eta) grid, per operator."""
    nbar = alpha * alpha
    jobs = []
    for op in operators:
        for t in ts:
            for eta in etas:
                jobs.append(("coherent", op, nbar, replace(p, t=float(t), eta=float(eta)), 0.0, False))
    return _run(jobs, workers)

"""Command-line front end: ``qpgate {verify,gate,fig2,fig3,fig4,fig5}``.

Settings come from built-in defaults, then an optional flat JSON ``--config``
file, then command-line flags (later wins). The merged configuration is echoed
into JSON output, and feeding that block back as ``--config`` reproduces
the run.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import io
import json
import math
import subprocess
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analysis as an
from . import checks
from .errors import CapTooSmall, ConfigError, NoSolution, ZeroNormState
from .fock import SIGNAL, FockVector, make_basis_state
from .gate import (
    PROGRAMMES,
    GateParams,
    Qubit,
    gate_kraus,
    gate_matrix,
    ideal_apply,
    run_gate,
    run_gate_lossy,
)
from .states import InputFamily, make_input, required_cap

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "t": 0.95,
    "g": 0.0,
    "tune_gain": True,
    "eta": 1.0,
    "signal_eta": 1.0,
    "herald": [1, 0, 0, 1],
    "signal_cap": 24,
    "herald_caps": [4, 4, 4, 4],
    "loss_caps": [4, 4, 4, 4],
    "j_max": None,
    "leak_tolerance": 1e-8,
    "both_outcomes": False,
    "programme": None,
    "h": None,
    "v": None,
    "renormalize": False,
    "input": "fock:1",
    "nbars": list(an.DEFAULT_NBARS),
    "squeezed_phase": 0.0,
    "reduced": False,
    "alpha": 1.0,
    "ts": list(checks.FIG5_TS),
    "etas": list(checks.FIG5_ETAS),
    "fig4_etas": [0.9, 1.0],
    "dim": 8,
    "workers": 1,
    "format": None,
    "out": None,
}

_PARAM_KEYS = (
    "t", "g", "tune_gain", "eta", "signal_eta", "herald", "signal_cap", "herald_caps",
    "loss_caps", "j_max", "leak_tolerance", "both_outcomes",
)


# parsing helpers

def _floats(text: str) -> list[float]:
    """'0.1,0.2' or 'start:stop:step' (inclusive)."""
    if text.count(":") == 2:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _complex(text: str) -> complex:
    """'re,im' or a single real."""
    parts = [float(x) for x in str(text).split(",")]
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) == 2:
        return complex(parts[0], parts[1])
    raise ConfigError(f"expected 're,im', got {text!r}")


def _add_common(sp: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    sp.add_argument("--config", help="flat JSON file of settings")
    sp.add_argument("--out", default=S, help="output path (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default=S)
    sp.add_argument("--t", type=float, default=S, help="subtraction beamsplitter transmissivity")
    sp.add_argument("--g", type=float, default=S, help="OPA gain, used with --no-tune-gain")
    sp.add_argument("--tune-gain", dest="tune_gain", action="store_true", default=S)
    sp.add_argument("--no-tune-gain", dest="tune_gain", action="store_false", default=S)
    sp.add_argument("--eta", type=float, default=S, help="detector efficiency")
    sp.add_argument("--signal-eta", dest="signal_eta", type=float, default=S)
    sp.add_argument("--herald", type=_ints, default=S, help="H1,V1,H2,V2 counts")
    sp.add_argument("--signal-cap", dest="signal_cap", type=int, default=S)
    sp.add_argument("--herald-caps", dest="herald_caps", type=_ints, default=S)
    sp.add_argument("--loss-caps", dest="loss_caps", type=_ints, default=S)
    sp.add_argument("--j-max", dest="j_max", type=int, default=S)
    sp.add_argument("--leak-tolerance", dest="leak_tolerance", type=float, default=S)
    sp.add_argument("--both-outcomes", dest="both_outcomes", action="store_true", default=S)
    sp.add_argument("--programme", choices=sorted(PROGRAMMES), default=S)
    sp.add_argument("--h", default=S, help="programme amplitude h as 're,im'")
    sp.add_argument("--v", default=S, help="programme amplitude v as 're,im'")
    sp.add_argument("--renormalize", action="store_true", default=S)
    sp.add_argument("--workers", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    sp = sub.add_parser("verify", help="run the verification suite")
    _add_common(sp)

    sp = sub.add_parser("gate", help="single gate run")
    _add_common(sp)
    sp.add_argument("--input", default=S,
                    help="fock:N | coherent:A | cat:A | squeezed:S | tmsv:S (append @phase)")

    sp = sub.add_parser("fig2", help="fidelity against mean photon number")
    _add_common(sp)
    sp.add_argument("--nbars", type=_floats, default=S, help="list or start:stop:step")
    sp.add_argument("--squeezed-phase", dest="squeezed_phase", type=float, default=S)
    sp.add_argument("--reduced", action="store_true", default=S,
                    help="reduced-state fidelity for the two-mode family")

    for name, text in (("fig3", "diagonal process-tensor slice"), ("fig4", "lossy process-tensor slices")):
        sp = sub.add_parser(name, help=text)
        _add_common(sp)
        sp.add_argument("--dim", type=int, default=S)
        if name == "fig4":
            sp.add_argument("--etas", dest="fig4_etas", type=_floats, default=S)

    sp = sub.add_parser("fig5", help="fidelity over transmissivity and efficiency")
    _add_common(sp)
    sp.add_argument("--alpha", type=float, default=S)
    sp.add_argument("--ts", type=_floats, default=S)
    sp.add_argument("--etas", type=_floats, default=S)
    return parser


def load_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    given = vars(args).copy()
    cfg_path = given.pop("config", None)
    command = given.pop("command")
    if cfg_path:
        try:
            data = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold one flat JSON object")
        data.pop("command", None)
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    cfg.update(given)
    cfg["command"] = command
    return cfg


def gate_params(cfg: dict[str, Any]) -> GateParams:
    try:
        return GateParams(**{k: (tuple(cfg[k]) if isinstance(cfg[k], list) else cfg[k]) for k in _PARAM_KEYS})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def qubit_from(cfg: dict[str, Any], default: str | None = None) -> Qubit:
    if cfg.get("h") is not None or cfg.get("v") is not None:
        h, v = _complex(cfg.get("h") or 0), _complex(cfg.get("v") or 0)
        norm = abs(h) ** 2 + abs(v) ** 2
        if norm == 0:
            raise ConfigError("programme amplitudes are both zero")
        if abs(norm - 1) > 1e-9 and not cfg.get("renormalize"):
            raise ConfigError(f"|h|^2+|v|^2 = {norm:.12g}; pass --renormalize to accept")
        return Qubit.normalized(h, v)
    name = cfg.get("programme") or default
    if name is None:
        raise ConfigError("give --programme or --h/--v")
    return PROGRAMMES[name]


def input_from(text: str, min_cap: int) -> FockVector:
    kind, _, rest = text.partition(":")
    value, _, phase = rest.partition("@")
    try:
        phase_v = float(phase) if phase else 0.0
        if kind == "fock":
            n = int(value)
            if n < 0:
                raise ValueError
            return make_basis_state({SIGNAL: n}, {SIGNAL: max(min_cap, n)})
        family = {"coherent": "coherent", "cat": "cat_plus", "squeezed": "squeezed_vacuum",
                  "tmsv": "tmsv_half"}[kind]
        x = float(value)
    except (KeyError, ValueError):
        raise ConfigError(f"bad --input {text!r}") from None
    cap = max(min_cap, required_cap(family, x, phase_v))
    return make_input(InputFamily(family, x, cap=cap, phase=phase_v))


# output

def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _flatten(row: dict[str, Any]) -> dict[str, Any]:
    flat = {}
    for k, v in row.items():
        if isinstance(v, complex):
            flat[f"{k}_re"], flat[f"{k}_im"] = v.real, v.imag
        else:
            flat[k] = v
    return flat


def render_csv(records: Sequence[dict[str, Any]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        flat = _flatten(rec)
        writer.writerow([_fmt(flat.get(h, "")) for h in header])
    return buf.getvalue()


def _json_ready(x: Any) -> Any:
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_ready(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_ready(v) for v in x]
    if isinstance(x, np.generic):
        return _json_ready(x.item())
    return x


def _header(records: Sequence[dict[str, Any]], header: Sequence[str] | None) -> list[str]:
    if header is not None:
        return list(header)
    if not records:
        return []
    return list(_flatten(records[0]))


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).resolve().parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() or "unknown"


def emit(records: Sequence[dict[str, Any]], fmt: str, path: str | None, cfg: dict[str, Any],
         header: Sequence[str] | None = None) -> str:
    """Write records as CSV or JSON; returns the sha256 of the data payload.

    The hash covers only the data (never the timestamp) and is written next to
    ``path`` as ``<path>.hash``.
    """
    if fmt == "csv":
        payload = render_csv(records, _header(records, header))
        text = payload
    else:
        data = _json_ready(list(records))
        payload = json.dumps(data, sort_keys=True, separators=(",", ":"))
        meta = {
            "git_describe": git_describe(),
            "config": _json_ready({k: v for k, v in cfg.items() if k not in ("out", "command")}),
            "command": cfg.get("command"),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        text = json.dumps({"metadata": meta, "data": data}, indent=1, sort_keys=True) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text, encoding="utf-8")
            Path(f"{path}.hash").write_text(digest + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return digest


# commands

FIG2_HEADER = ("family", "operator", "nbar", "fidelity", "success_prob", "leak")
FIG5_HEADER = ("operator", "t", "eta", "fidelity", "success_prob", "leak", "incomplete_prob")


def _sweep_rows(records: Sequence[an.SweepRecord]) -> list[dict[str, Any]]:
    rows = []
    for r in records:
        if r.reason:
            print(f"warning: {r.family}/{r.operator}/nbar={r.nbar}: {r.reason}", file=sys.stderr)
        rows.append({
            "family": r.family, "operator": r.operator, "nbar": r.nbar, "t": r.t, "eta": r.eta,
            "parameter": r.parameter, "fidelity": r.fidelity, "success_prob": r.success_probability,
            "leak": r.truncation_leak, "incomplete_prob": r.incomplete_probability, "reason": r.reason,
        })
    return rows


def cmd_verify(cfg):
    results = checks.run_all()
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_gate(cfg):
    p = gate_params(cfg)
    q = qubit_from(cfg, default="a")
    inp = input_from(cfg["input"], p.signal_cap)
    ideal, _ = ideal_apply(q, inp)
    if p.eta == 1 and p.signal_eta == 1:
        res = run_gate(inp, q, p)
        state = res.conditional_state
        members = {(0, 0, 0, 0): state}
        fid = an.fidelity_pure(state, ideal)
        extra = {}
    else:
        res = run_gate_lossy(inp, q, p)
        members = res.members
        fid = an.fidelity_mixed(res, ideal)
        extra = {"incomplete_probability": res.incomplete_probability}
    summary = {
        "success_probability": res.success_probability,
        "truncation_leak": res.truncation_leak,
        "discarded": res.discarded,
        "fidelity": fid,
        "programme": {"h": q.h, "v": q.v},
        **extra,
    }
    norm = math.sqrt(res.success_probability)
    rows = []
    for key, psi in members.items():
        for idx in np.ndindex(psi.amps.shape):
            amp = complex(psi.amps[idx])
            if amp != 0:
                row = {"loss": ",".join(map(str, key))}
                row.update({m: int(i) for m, i in zip(psi.modes, idx)})
                row["amplitude"] = amp / norm
                rows.append(row)
    if (cfg["format"] or "json") == "csv":
        modes = list(next(iter(members.values())).modes) if members else []
        emit(rows, "csv", cfg["out"], cfg, ["loss", *modes, "amplitude_re", "amplitude_im"])
        print(json.dumps(_json_ready(summary)), file=sys.stderr)
    else:
        emit([{"summary": summary, "amplitudes": rows}], "json", cfg["out"], cfg)
    return EXIT_OK


def cmd_fig2(cfg):
    p = gate_params(cfg)
    recs = an.fidelity_sweep(p, nbars=cfg["nbars"], squeezed_phase=cfg["squeezed_phase"],
                             reduced=cfg["reduced"], workers=cfg["workers"])
    emit(_sweep_rows(recs), cfg["format"] or "csv", cfg["out"], cfg, FIG2_HEADER)
    return EXIT_OK


def cmd_fig3(cfg):
    p = gate_params(cfg)
    q = qubit_from(cfg, default="x")
    dim = cfg["dim"]
    p = dataclasses.replace(p, eta=1.0)
    pt = an.process_tensor([gate_matrix(q, p, dim)], dim)
    # the x and p programmes realise (a + a^+)/sqrt2 and i(a - a^+)/sqrt2
    ideal_scale = 2.0 if q in (PROGRAMMES["x"], PROGRAMMES["p"]) else 1.0
    ideal_pt = an.process_tensor([an.ideal_kraus(q, dim)], dim).scaled(ideal_scale)
    diag, _ = an.tensor_slices(pt)
    ideal, _ = an.tensor_slices(ideal_pt)
    rescale = 2 / p.r**2
    rows = []
    for kind, block in (("raw", diag), ("rescaled", rescale * diag), ("ideal", ideal)):
        for n in range(dim + 1):
            row = {"kind": kind, "n": n}
            row.update({f"l{l}": float(block[n, l]) for l in range(dim + 1)})
            row["rescale"] = rescale
            rows.append(row)
    header = ["kind", "n"] + [f"l{l}" for l in range(dim + 1)] + ["rescale"]
    emit(rows, cfg["format"] or "csv", cfg["out"], cfg, header)
    return EXIT_OK


def cmd_fig4(cfg):
    base = gate_params(cfg)
    q = qubit_from(cfg, default="x")
    dim = cfg["dim"]
    rows = []
    for eta in cfg["fig4_etas"]:
        p = dataclasses.replace(base, eta=float(eta))
        kraus = [gate_matrix(q, p, dim)] if eta == 1 else list(gate_kraus(q, p, dim).values())
        pt = an.process_tensor(kraus, dim)
        diag, coh = an.tensor_slices(pt)
        rescale = 4 / p.r**2
        for n in range(dim + 1):
            for m in range(dim + 1):
                c = complex(coh[n, m])
                rows.append({
                    "eta": float(eta), "n": n, "m": m,
                    "diag": float(diag[n, m]), "diag_rescaled": float(rescale * diag[n, m]),
                    "coherence": c, "coherence_rescaled": rescale * c, "rescale": rescale,
                })
    header = ["eta", "n", "m", "diag", "diag_rescaled", "coherence_re", "coherence_im",
              "coherence_rescaled_re", "coherence_rescaled_im", "rescale"]
    emit(rows, cfg["format"] or "csv", cfg["out"], cfg, header)
    return EXIT_OK


def cmd_fig5(cfg):
    p = gate_params(cfg)
    recs = an.efficiency_grid(cfg["alpha"], cfg["ts"], cfg["etas"], p, workers=cfg["workers"])
    emit(_sweep_rows(recs), cfg["format"] or "csv", cfg["out"], cfg, FIG5_HEADER)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "gate": cmd_gate, "fig2": cmd_fig2, "fig3": cmd_fig3,
            "fig4": cmd_fig4, "fig5": cmd_fig5}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[cfg["command"]](cfg)
    except (CapTooSmall, ZeroNormState, NoSolution) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

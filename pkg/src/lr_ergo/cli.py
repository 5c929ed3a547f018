"""Command-line runner: ``lr-ergo <command> --config FILE``.

Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
3 numerical guard, 4 Lieb-Robinson certificate violation.  Failures print a
single JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .algebra import AlgebraError, random_operator
from .certify import CertificateViolation, certify_lr, localization_curve
from .config import COMMANDS, ConfigError, ExperimentConfig, parse_config
from .dynamics import EvolutionEngine, NumericalGuardError, build_engine
from .ergodic import (
    ErgodicError,
    RaySpec,
    SweepMode,
    convergence_sweep,
    euler_scale_average,
    multi_ray_average,
    spacelike_probe,
)
from .lattice import LatticeError, RationalDirection
from .model import ModelError, build_interaction, hamiltonian
from .states import State, StateError, gibbs_state, invariance_check, kms_residual, product_state, tracial_state

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD, EXIT_CERT = 0, 1, 2, 3, 4
SWEEP_COLUMNS = [
    "mode", "v", "T", "value_re", "value_im", "reference_re", "reference_im", "abs_deviation", "quad_error",
]


@dataclass
class RunManifest:
    command: str
    config_sha256: str
    version: str
    wall_time_s: float
    workers: int
    files: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass
class Context:
    cfg: ExperimentConfig
    eng: EvolutionEngine
    state: State
    phi: Any
    workers: int


def build_context(cfg: ExperimentConfig, workers: int = 1) -> Context:
    torus = cfg.lattice.torus()
    phi = build_interaction(
        cfg.model.kind, torus, cfg.model.couplings, cfg.model.decay_lambda,
        list(cfg.model.terms) or None, cfg.lattice.site_dim,
    )
    eng = build_engine(hamiltonian(phi), torus)
    st = cfg.state
    if st.kind == "gibbs":
        state = gibbs_state(eng, st.beta)
    elif st.kind == "product":
        state = product_state(eng.volume, [list(v) for v in st.vectors], cfg.lattice.site_dim)
    else:
        state = tracial_state(eng.volume, cfg.lattice.site_dim)
    return Context(cfg, eng, state, phi, workers)


# --- per-command computations; each returns (rows, columns, extra files, summary) ---

def _sweep_rows(rows, timing: bool) -> list[dict]:
    out = []
    for r in rows:
        d = {
            "mode": r.mode, "v": r.v, "T": r.T,
            "value_re": r.value.real, "value_im": r.value.imag,
            "reference_re": r.reference.real, "reference_im": r.reference.imag,
            "abs_deviation": r.abs_deviation, "quad_error": r.quad_error,
        }
        if timing:
            d["wall_ms"] = r.wall_ms
        out.append(d)
    return out


def _sweep(ctx: Context, A, B, mode: SweepMode, timing: bool):
    p = ctx.cfg.command.params
    q = RationalDirection(tuple(p["q"]))
    rows = convergence_sweep(
        ctx.state, A, B, q, p["v"], p["T"], mode, ctx.eng, ctx.cfg.command.quadrature, ctx.workers
    )
    cols = SWEEP_COLUMNS + (["wall_ms"] if timing else [])
    worst = max(r.abs_deviation for r in rows)
    return _sweep_rows(rows, timing), cols, {"max_abs_deviation": worst, "cells": len(rows)}


def run_lr_certify(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    pairs = [(a, ctx.cfg.operator(a), b, ctx.cfg.operator(b)) for a, b in p["pairs"]]
    cert = certify_lr(ctx.eng, ctx.phi, pairs, p["times"], p.get("lambda"), ctx.workers)
    rows = [
        {
            "A": r.a_id, "B": r.b_id, "dist": r.dist, "t": r.t, "empirical_norm": r.empirical_norm,
            "bound_rhs": r.bound_rhs, "satisfied": r.satisfied, "margin": r.margin,
            "boundary_affected": r.boundary_affected,
        }
        for r in cert.rows
    ]
    cols = list(rows[0]) if rows else []
    summary = {
        "passed": cert.passed, "violations": len(cert.violations), "interaction_norm": cert.interaction_norm,
        "v_lr": cert.v_lr, "lambda": cert.lam, "boundary_affected_rows": sum(r.boundary_affected for r in cert.rows),
    }
    extra = {
        "certificate.json": json.dumps(cert.to_dict(), indent=2, sort_keys=True) + "\n",
        "certificate.txt": cert.to_text() + "\n",
    }
    return rows, cols, summary, extra, cert


def run_localize(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    A = ctx.cfg.operator(p["A"])
    rows, monotone = [], True
    for t in p["t"]:
        rep = localization_curve(ctx.eng, A, t, p["radii"], ctx.phi, p["C"])
        monotone &= rep.monotone
        rows += [
            {"r": r.r, "t": r.t, "empirical_error": r.empirical_error, "theoretical": r.theoretical, "C": r.C}
            for r in rep.rows
        ]
    return rows, ["r", "t", "empirical_error", "theoretical", "C"], {"monotone": monotone}


def run_multi_point(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    q = RationalDirection(tuple(p["q"]))
    As = [ctx.cfg.operator(a) for a in p["A"]]
    Bs = [ctx.cfg.operator(b) for b in p["B"]]
    res = multi_ray_average(ctx.state, As, Bs, RaySpec(q, p["v"]), p["T"], ctx.eng, ctx.cfg.command.quadrature)
    row = {"v": p["v"], "value_re": res.value.real, "value_im": res.value.imag, "quad_error": res.estimated_quadrature_error}
    return [row], list(row), {"value_re": res.value.real, "value_im": res.value.imag}


def run_spacelike(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    A, B = ctx.cfg.operator(p["A"]), ctx.cfg.operator(p["B"])
    pr = spacelike_probe(ctx.state, A, B, p["n"], p["v"], p["m_max"], ctx.eng, p.get("k"), p.get("f"))
    rows = [
        {
            "M": m + 1, "term_re": pr.terms[m].real, "term_im": pr.terms[m].imag,
            "mean_re": pr.means[m].real, "mean_im": pr.means[m].imag,
            "connected_re": pr.connected_means[m].real, "connected_im": pr.connected_means[m].imag,
        }
        for m in range(len(pr.terms))
    ]
    return rows, list(rows[0]), {"final_connected_abs": float(abs(pr.connected_means[-1]))}


def run_kms(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    beta = p.get("beta")
    if beta is None:
        beta = ctx.state.beta if ctx.state.beta is not None else 0.0
    names = list(ctx.cfg.observables)
    pairs = p.get("pairs") or [[a, b] for a in names for b in names]
    rows = []
    for a, b in pairs:
        res = kms_residual(ctx.state, ctx.cfg.operator(a), ctx.cfg.operator(b), beta, ctx.eng)
        rows.append({"A": a, "B": b, "beta": beta, "residual": res})
    rng = np.random.default_rng(p["seed"])
    for i in range(p["random_pairs"]):
        A = random_operator(rng, ctx.eng.volume, ctx.eng.site_dim)
        B = random_operator(rng, ctx.eng.volume, ctx.eng.site_dim)
        rows.append({"A": f"random{i}a", "B": f"random{i}b", "beta": beta,
                     "residual": kms_residual(ctx.state, A, B, beta, ctx.eng)})
    summary = {"max_residual": max((r["residual"] for r in rows), default=0.0), "beta": beta}
    if names:
        ops = [ctx.cfg.operator(n) for n in names]
        times = p.get("times") or [0.5, 1.0]
        torus = ctx.eng.torus
        periodic = torus is not None and torus.periodic
        shifts = [tuple(1 if i == 0 else 0 for i in range(torus.dim))] if periodic else []
        inv = invariance_check(ctx.state, ctx.eng, ops, times, shifts)
        summary["time_invariance"] = inv["time"]
        if periodic:
            summary["space_invariance"] = inv["space"]
    return rows, ["A", "B", "beta", "residual"], summary


def run_hydro(ctx: Context, timing: bool):
    p = ctx.cfg.command.params
    A, B = ctx.cfg.operator(p["A"]), ctx.cfg.operator(p["B"])
    rows = []
    for kappa in p["kappa"]:
        r = euler_scale_average(ctx.state, A, B, kappa, p["T"], ctx.eng, p["t_min"])
        rows.append({
            "kappa": " ".join(repr(float(k)) for k in r.kappa), "T": r.T, "t_min": r.t_min,
            "value_re": r.value.real, "value_im": r.value.imag, "estimated_error": r.estimated_error,
        })
    return rows, list(rows[0]), {"t_min": p["t_min"], "rows": len(rows)}


def _dispatch(ctx: Context, timing: bool):
    name = ctx.cfg.command.name
    p = ctx.cfg.command.params
    if name == "ergodic-sweep":
        A, B = ctx.cfg.operator(p["A"]), ctx.cfg.operator(p["B"])
        mode = SweepMode(p["mode"], n=p.get("n"))
        return _sweep(ctx, A, B, mode, timing)
    if name == "oscillatory":
        A, B = ctx.cfg.operator(p["A"]), ctx.cfg.operator(p["B"])
        return _sweep(ctx, A, B, SweepMode("oscillatory", tuple(p["k"]), p["f"]), timing)
    if name == "mean-square":
        A, B = ctx.cfg.operator(p["A"]), ctx.cfg.operator(p["B"])
        return _sweep(ctx, A, B, SweepMode("mean_square"), timing)
    if name == "moments":
        A = ctx.cfg.operator(p["A"])
        rows, cols, worst = [], None, 0.0
        for n in p["n"]:
            r, cols, s = _sweep(ctx, A, A, SweepMode("moment", n=n), timing)
            rows += r
            worst = max(worst, s["max_abs_deviation"])
        return rows, cols, {"max_abs_deviation": worst, "cells": len(rows)}
    table = {
        "localize": run_localize, "multi-point": run_multi_point,
        "spacelike-probe": run_spacelike, "kms-check": run_kms, "hydro": run_hydro,
    }
    return table[name](ctx, timing)


# --- output --------------------------------------------------------------------

def _cell(x) -> Any:
    if isinstance(x, (bool, str, int)) or x is None:
        return x
    return float(x)


def render_csv(rows: list[dict], cols: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(_cell(r[c])) if isinstance(_cell(r[c]), float) else _cell(r[c]) for c in cols])
    return buf.getvalue()


def render_json(rows: list[dict], cols: list[str]) -> str:
    return json.dumps([{c: _cell(r[c]) for c in cols} for r in rows], indent=2) + "\n"


def run(
    cfg: ExperimentConfig, out_dir: Path, workers: int = 1, fmt: str = "csv",
    timing: bool = False, config_text: str | None = None,
) -> tuple[RunManifest, int]:
    """Execute the configured command, write outputs, return the manifest and exit code."""
    start = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = build_context(cfg, workers)
    cert = None
    extra: dict[str, str] = {}
    if cfg.command.name == "lr-certify":
        rows, cols, summary, extra, cert = run_lr_certify(ctx, timing)
    else:
        rows, cols, summary = _dispatch(ctx, timing)
    stem = cfg.command.name.replace("-", "_")
    body = render_csv(rows, cols) if fmt == "csv" else render_json(rows, cols)
    files = {f"{stem}.{fmt}": body, "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n", **extra}
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8")
    digest = hashlib.sha256((config_text or "").encode()).hexdigest()
    manifest = RunManifest(
        cfg.command.name, digest, __version__, time.perf_counter() - start, workers, sorted(files), summary
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    code = EXIT_OK
    if cert is not None and not cert.passed:
        code = EXIT_CERT
    return manifest, code


def _error(kind: str, exc: BaseException, code: int, command: str | None, **extra) -> int:
    payload = {"error": kind, "message": getattr(exc, "message", str(exc)), "exit_code": code, "command": command}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="lr-ergo", description="Lieb-Robinson and ergodic-average experiments.")
    ap.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    ap.add_argument("--config", required=True, help="TOML experiment file")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--timing", action="store_true", help="add wall_ms to sweep rows (breaks byte-identical reruns)")
    args = ap.parse_args(argv)

    command = args.command
    if command not in COMMANDS:
        err = ConfigError(f"unknown command {command!r}; valid commands: {', '.join(COMMANDS)}")
        return _error("ConfigError", err, EXIT_CONFIG, command)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _error("ConfigError", exc, EXIT_CONFIG, command)
    try:
        cfg = parse_config(text)
        if cfg.command.name != command:
            raise ConfigError(f"command line asks for {command!r} but the config's [command] name is {cfg.command.name!r}")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        manifest, code = run(cfg, Path(args.out), args.workers, args.format, args.timing, text)
    except ConfigError as exc:
        return _error("ConfigError", exc, EXIT_CONFIG, command, line=exc.line, key=exc.key)
    except NumericalGuardError as exc:
        return _error("NumericalGuardError", exc, EXIT_GUARD, command)
    except CertificateViolation as exc:
        return _error("CertificateViolation", exc, EXIT_CERT, command)
    except (ErgodicError, LatticeError, ModelError, AlgebraError, StateError) as exc:
        return _error(type(exc).__name__, exc, EXIT_CONFIG, command)
    except Exception as exc:  # noqa: BLE001 - last-resort reporting as JSON
        return _error(type(exc).__name__, exc, EXIT_FAIL, command)
    if code == EXIT_CERT:
        s = manifest.summary
        return _error(
            "CertificateViolation",
            CertificateViolation(f"{s['violations']} non-boundary row(s) exceed the Lieb-Robinson bound"),
            EXIT_CERT, command, out=str(args.out),
        )
    print(json.dumps({"command": command, "out": str(args.out), "files": manifest.files}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: parse a problem file, run it, emit artifacts.

Config files are JSON; unknown keys are rejected so typos fail loudly.
Exit codes: 0 SAFE (or standalone computation done), 1 UNSAFE, 2 UNKNOWN,
3 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ReachguardError
from .geometry import Box, HalfspaceSet
from .isdf import build_input_reachtube, compute_is_ldf
from .ldf import Reachtube, build_reachtube, compute_ldf, compute_ldf_ct
from .models import (
    DynamicalSystem,
    VerificationProblem,
    get_model,
    make_user_model,
    model_names,
    validate_model,
)
from .simulate import simulate_trace
from .verify import SAFE, UNKNOWN, UNSAFE, Verdict, verify_safety

log = logging.getLogger("reachguard")

_MODES = ("verify", "ldf", "isldf")
_KNOWN_KEYS = {
    "model", "theta_center", "delta", "unsafe", "T", "tau", "epsilon0",
    "ct", "max_refinements", "mode", "output", "workers", "seed",
    "emit_tube", "input_box",
}
_SHORTHAND = re.compile(r"^\s*x(\d+)\s*>\s*([-+0-9.eE]+)\s*$")


@dataclass
class RunConfig:
    """Validated run description; mirrors VerificationProblem plus run
    plumbing (mode, output location, workers, seed)."""

    system: DynamicalSystem
    model_entry: object
    theta_center: np.ndarray
    delta: float
    unsafe: HalfspaceSet | None
    T: float
    tau: float
    epsilon0: float
    ct_enabled: bool
    ct_step: int
    max_refinements: int
    mode: str
    output_dir: str
    emit_tube: bool
    workers: int
    seed: int
    input_box: Box | None


def _parse_halfspace(entry, dim: int, field: str) -> tuple[np.ndarray, float]:
    if isinstance(entry, str):
        m = _SHORTHAND.match(entry)
        if not m:
            raise ConfigError(f"bad unsafe shorthand {entry!r}", field=field)
        axis = int(m.group(1))
        if not 1 <= axis <= dim:
            raise ConfigError(f"unsafe coordinate x{axis} beyond dimension {dim}", field=field)
        normal = np.zeros(dim)
        normal[axis - 1] = 1.0
        return normal, float(m.group(2))
    if isinstance(entry, dict):
        extra = set(entry) - {"normal", "offset"}
        if extra:
            raise ConfigError(f"unknown halfspace keys {sorted(extra)}", field=field)
        normal = np.asarray(entry.get("normal"), dtype=float)
        if normal.ndim != 1 or normal.size != dim:
            raise ConfigError("halfspace normal has wrong dimension", field=field)
        return normal, float(entry.get("offset"))
    raise ConfigError("unsafe entries must be strings or {normal, offset}", field=field)


def _parse_unsafe(raw, dim: int) -> HalfspaceSet:
    entries = [raw] if isinstance(raw, (str, dict)) else raw
    if not isinstance(entries, list) or not entries:
        raise ConfigError("unsafe must be a nonempty list", field="unsafe")
    normals, offsets = [], []
    for entry in entries:
        normal, offset = _parse_halfspace(entry, dim, "unsafe")
        normals.append(normal)
        offsets.append(offset)
    return HalfspaceSet(np.array(normals), np.array(offsets))


def _parse_box(raw, field: str) -> Box:
    if not isinstance(raw, dict) or set(raw) != {"lo", "hi"}:
        raise ConfigError("box must be {lo: [...], hi: [...]}", field=field)
    try:
        return Box(raw["lo"], raw["hi"])
    except ValueError as exc:
        raise ConfigError(str(exc), field=field) from exc


def _resolve_model(entry) -> DynamicalSystem:
    if isinstance(entry, str):
        try:
            return get_model(entry)
        except KeyError as exc:
            raise ConfigError(f"unknown model {entry!r}", field="model") from exc
    if not isinstance(entry, dict):
        raise ConfigError("model must be a name or a definition object", field="model")
    known = {"name", "f", "jac", "lipschitz", "domain", "center", "inputs", "f_u", "jac_u"}
    extra = set(entry) - known
    if extra:
        raise ConfigError(f"unknown model keys {sorted(extra)}", field="model")
    for key in ("name", "f", "jac", "lipschitz", "domain"):
        if key not in entry:
            raise ConfigError(f"user model missing {key!r}", field="model")
    try:
        system = make_user_model(
            name=entry["name"],
            f_exprs=entry["f"],
            jac_expr_rows=entry["jac"],
            lipschitz=entry["lipschitz"],
            domain=_parse_box(entry["domain"], "model.domain"),
            default_center=entry.get("center"),
            n_inputs=int(entry.get("inputs", 0)),
            f_u_exprs=entry.get("f_u"),
            jac_u_expr_rows=entry.get("jac_u"),
        )
        validate_model(system)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid user model: {exc}", field="model") from exc
    return system


def parse_config(text: str, mode_override: str | None = None) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    for key in ("model", "delta", "T"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", field=key)

    system = _resolve_model(raw["model"])
    mode = mode_override or raw.get("mode", "verify")
    if mode not in _MODES:
        raise ConfigError(f"mode must be one of {_MODES}", field="mode")

    theta_center = np.asarray(
        raw.get("theta_center", system.default_center), dtype=float
    )
    if theta_center.ndim != 1 or theta_center.size != system.n:
        raise ConfigError("theta_center has wrong dimension", field="theta_center")

    delta = float(raw["delta"])
    T = float(raw["T"])
    if delta <= 0:
        raise ConfigError("delta must be positive", field="delta")
    if T <= 0:
        raise ConfigError("T must be positive", field="T")
    tau = float(raw.get("tau", 0.01 * T))
    epsilon0 = float(raw.get("epsilon0", 1e-4 * delta))
    if not 0 < tau < T:
        raise ConfigError("tau must satisfy 0 < tau < T", field="tau")
    if epsilon0 <= 0:
        raise ConfigError("epsilon0 must be positive", field="epsilon0")

    ct = raw.get("ct", {})
    if not isinstance(ct, dict) or set(ct) - {"enabled", "step"}:
        raise ConfigError("ct must be {enabled, step}", field="ct")
    ct_enabled = bool(ct.get("enabled", False))
    ct_step = int(ct.get("step", 10))
    if ct_step < 1:
        raise ConfigError("ct.step must be >= 1", field="ct")

    max_refinements = int(raw.get("max_refinements", 12))
    if max_refinements < 1:
        raise ConfigError("max_refinements must be >= 1", field="max_refinements")
    workers = int(raw.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1", field="workers")
    seed = int(raw.get("seed", 0))

    unsafe = None
    if "unsafe" in raw:
        unsafe = _parse_unsafe(raw["unsafe"], system.n)
    elif mode == "verify":
        raise ConfigError("verify mode needs an unsafe set", field="unsafe")

    input_box = None
    if "input_box" in raw:
        input_box = _parse_box(raw["input_box"], "input_box")
    if mode == "isldf":
        if not system.has_inputs:
            raise ConfigError("isldf mode needs a model with inputs", field="model")
        if input_box is None:
            raise ConfigError("isldf mode needs input_box", field="input_box")
        if input_box.dim != system.p:
            raise ConfigError("input_box has wrong dimension", field="input_box")

    return RunConfig(
        system=system,
        model_entry=raw["model"],
        theta_center=theta_center,
        delta=delta,
        unsafe=unsafe,
        T=T,
        tau=tau,
        epsilon0=epsilon0,
        ct_enabled=ct_enabled,
        ct_step=ct_step,
        max_refinements=max_refinements,
        mode=mode,
        output_dir=str(raw.get("output", ".")),
        emit_tube=bool(raw.get("emit_tube", True)),
        workers=workers,
        seed=seed,
        input_box=input_box,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON for a RunConfig; parse(serialize(cfg)) reproduces cfg."""
    doc: dict = {
        "model": cfg.model_entry,
        "theta_center": cfg.theta_center.tolist(),
        "delta": cfg.delta,
        "T": cfg.T,
        "tau": cfg.tau,
        "epsilon0": cfg.epsilon0,
        "ct": {"enabled": cfg.ct_enabled, "step": cfg.ct_step},
        "max_refinements": cfg.max_refinements,
        "mode": cfg.mode,
        "output": cfg.output_dir,
        "emit_tube": cfg.emit_tube,
        "workers": cfg.workers,
        "seed": cfg.seed,
    }
    if cfg.unsafe is not None:
        doc["unsafe"] = [
            {"normal": n.tolist(), "offset": float(o)}
            for n, o in zip(cfg.unsafe.normals, cfg.unsafe.offsets)
        ]
    if cfg.input_box is not None:
        doc["input_box"] = {"lo": cfg.input_box.lo.tolist(), "hi": cfg.input_box.hi.tolist()}
    return json.dumps(doc, indent=2, sort_keys=True)


def _write_tube_file(path: str, tubes: list[Reachtube], n: int, model_name: str) -> int:
    rows = []
    for tube_idx, tube in enumerate(tubes):
        for seg_idx, (box, (t0, t1)) in enumerate(tube.segments):
            rows.append((t0, tube_idx, seg_idx, t1, box))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(path, "w") as fh:
        fh.write(f"# n={n} model={model_name}\n")
        for t0, _, _, t1, box in rows:
            fields = [t0, t1]
            for lo, hi in zip(box.lo, box.hi):
                fields.extend((lo, hi))
            fh.write(" ".join(f"{v:.17g}" for v in fields) + "\n")
    return len(rows)


def run(cfg: RunConfig) -> int:
    """Execute the configured mode; write report (and tube) artifacts."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    report: dict = {"config_echo": json.loads(serialize_config(cfg))}
    tubes: list[Reachtube] = []
    start = time.perf_counter()

    if cfg.mode == "verify":
        problem = VerificationProblem(
            system=cfg.system,
            theta_center=cfg.theta_center,
            delta=cfg.delta,
            unsafe=cfg.unsafe,
            T=cfg.T,
            tau=cfg.tau,
            epsilon0=cfg.epsilon0,
            ct_enabled=cfg.ct_enabled,
            ct_step=cfg.ct_step,
            max_refinements=cfg.max_refinements,
        )
        verdict = verify_safety(problem, workers=cfg.workers)
        report.update(
            status=verdict.status,
            num_sims=verdict.num_sims,
            num_refinements=verdict.num_refinements,
            wall_seconds=verdict.wall_seconds,
        )
        if verdict.witness is not None:
            report["witness"] = {
                "time": verdict.witness.time,
                "step_index": verdict.witness.step_index,
                "theta": verdict.witness.cover.theta.tolist(),
                "delta": verdict.witness.cover.delta,
            }
        if verdict.exhausted is not None:
            report["exhausted"] = verdict.exhausted
        if verdict.reachtube_union is not None:
            tubes = list(verdict.reachtube_union)
        exit_code = {SAFE: 0, UNSAFE: 1, UNKNOWN: 2}[verdict.status]
        log.info("verdict %s after %d simulations", verdict.status, verdict.num_sims)
    elif cfg.mode == "ldf":
        trace = simulate_trace(cfg.system, cfg.theta_center, cfg.tau, cfg.epsilon0, cfg.T)
        if cfg.ct_enabled:
            coeffs = compute_ldf_ct(trace, cfg.system, cfg.delta, cfg.epsilon0, cfg.ct_step)
        else:
            coeffs = compute_ldf(trace, cfg.system, cfg.delta, cfg.epsilon0)
        tube = build_reachtube(trace, coeffs)
        tubes = [tube]
        report.update(
            status="LDF",
            num_sims=1,
            num_refinements=0,
            wall_seconds=time.perf_counter() - start,
            exponents={"min": float(coeffs.b.min()), "max": float(coeffs.b.max())},
            terminal_radius=float(tube.prime_deltas[-1]),
        )
        exit_code = 0
    else:  # isldf
        nominal = cfg.input_box.center()
        closed = cfg.system.with_constant_input(nominal)
        trace = simulate_trace(closed, cfg.theta_center, cfg.tau, cfg.epsilon0, cfg.T)
        coeffs = compute_is_ldf(
            trace, cfg.system, cfg.delta, cfg.epsilon0, cfg.input_box
        )
        tube = build_input_reachtube(trace, coeffs)
        tubes = [tube]
        report.update(
            status="ISLDF",
            num_sims=1,
            num_refinements=0,
            wall_seconds=time.perf_counter() - start,
            rates={"min": float(coeffs.a.min()), "max": float(coeffs.a.max())},
            gains={"min": float(coeffs.M.min()), "max": float(coeffs.M.max())},
            terminal_radius=float(tube.prime_deltas[-1]),
        )
        exit_code = 0

    if cfg.emit_tube and tubes:
        tube_path = os.path.join(cfg.output_dir, "tube.txt")
        count = _write_tube_file(tube_path, tubes, cfg.system.n, cfg.system.name)
        report["tube_file"] = {"path": tube_path, "rows": count}

    with open(os.path.join(cfg.output_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return exit_code


def _setup_logging() -> None:
    level = os.environ.get("REACHGUARD_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR))


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="reachguard",
        description="Simulation-driven reach-tube computation and safety verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("verify", "run the full safety verification loop"),
        ("ldf", "compute discrepancy coefficients and a single tube"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON problem file")
        p.add_argument("--output", help="output directory (overrides config)")
        p.add_argument("--workers", type=int, help="worker count (overrides config)")
        p.add_argument("--seed", type=int, help="seed for self-checks (overrides config)")
    sub.add_parser("models", help="list builtin models")

    args = parser.parse_args(argv)
    if args.command == "models":
        for name in model_names():
            print(name)
        return 0

    try:
        with open(args.config) as fh:
            text = fh.read()
        override = "verify" if args.command == "verify" else None
        cfg = parse_config(text, mode_override=override)
        if args.command == "ldf" and cfg.mode == "verify":
            cfg.mode = "ldf"
        if args.output is not None:
            cfg.output_dir = args.output
        if args.workers is not None:
            cfg.workers = max(1, args.workers)
        if args.seed is not None:
            cfg.seed = args.seed
        code = run(cfg)
    except (ReachguardError, OSError, ValueError) as exc:
        print(f"reachguard: error: {exc}", file=sys.stderr)
        return 3
    status = {0: "SAFE", 1: "UNSAFE", 2: "UNKNOWN"}.get(code, "DONE")
    if cfg.mode != "verify":
        status = "DONE"
    print(f"{status}: report written to {os.path.join(cfg.output_dir, 'report.json')}")
    return code


if __name__ == "__main__":
    sys.exit(main())

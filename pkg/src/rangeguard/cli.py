"""Command-line entry point: ``run``, ``verify`` and ``sweep``.

Failures print one JSON object ``{"error": <category>, "message": ...}`` to
stderr and exit with the category's code.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config, tomllib
from .estimator import GateError
from .runner import NumericalError, export, run_scenario
from .verify import verify_run

EXIT_CODES = {
    "config_error": 2,
    "gate_error": 3,
    "numerical_error": 4,
    "verification_failed": 5,
    "io_error": 6,
    "sweep_failed": 7,
}


class CliError(Exception):
    def __init__(self, category: str, message: str, detail: dict | None = None):
        super().__init__(message)
        self.category = category
        self.detail = detail or {}


def _load(path) -> ScenarioConfig:
    return load_config(path) if path else ScenarioConfig()


def _classify(exc: Exception) -> CliError:
    if isinstance(exc, CliError):
        return exc
    if isinstance(exc, GateError):
        return CliError("gate_error", str(exc))
    if isinstance(exc, ConfigError):
        return CliError("config_error", str(exc))
    if isinstance(exc, NumericalError):
        return CliError("numerical_error", str(exc), {"step": exc.step, "quantity": exc.quantity})
    if isinstance(exc, OSError):
        return CliError("io_error", str(exc))
    raise exc


def _report(cfg: ScenarioConfig, log):
    return verify_run(log, cfg.estimator.gamma1, cfg.controller.alpha, cfg.t,
                      cfg.estimator.vmax2, cfg.vmax1)


def _summary(cfg, log) -> dict:
    return {"seed": cfg.seed, "steps_run": len(log), "zones": log.zone_sequence(),
            "takedown_step": log.takedown_step}


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    log = run_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = export(log, args.format, out / f"run_seed{cfg.seed}.{args.format}")
    print(json.dumps({**_summary(cfg, log), "log": str(path)}))
    return 0


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    log = run_scenario(cfg)
    rep = _report(cfg, log)
    doc = {**_summary(cfg, log), **rep.to_dict()}
    print(json.dumps(doc, indent=None if args.jsonl else 2, default=float))
    if not rep.ok:
        kinds = sorted({v.inequality for v in rep.violations})
        raise CliError("verification_failed", f"{len(rep.violations)} violations",
                       {"inequalities": kinds})
    return 0


def parse_value(text: str):
    """Read a sweep value as a TOML literal, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _sweep_one(job):
    cfg_path, param, value, out, fmt = job
    try:
        cfg = _load(cfg_path).with_overrides(**{param: value})
        log = run_scenario(cfg)
        rep = _report(cfg, log)
        row = {param: value, **_summary(cfg, log), "violations": len(rep.violations),
               "steady": rep.steady}
        if out:
            row["log"] = str(export(log, fmt, Path(out) / f"{param}_{value}.{fmt}"))
        return row
    except Exception as exc:  # recorded per value, surfaced in the exit code
        err = _classify(exc)
        return {param: value, "error": err.category, "message": str(err)}


def cmd_sweep(args) -> int:
    values = [parse_value(v) for v in args.values]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    jobs = [(args.config, args.param, v, args.out, args.format) for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    for row in rows:
        print(json.dumps(row, default=float))
    failed = [r for r in rows if "error" in r]
    if failed:
        cats = sorted({r["error"] for r in failed})
        raise CliError(cats[0] if len(cats) == 1 else "sweep_failed",
                       f"{len(failed)} of {len(rows)} sweep points failed", {"categories": cats})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rangeguard", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write its log")
    p.add_argument("--config", help="flat TOML scenario file (defaults if omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="runs")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="simulate and check the analysis inequalities")
    p.add_argument("--config")
    p.add_argument("--jsonl", action="store_true", help="single-line JSON output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run one scenario per parameter value")
    p.add_argument("--config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", nargs="+", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        err = _classify(exc)
        print(json.dumps({"error": err.category, "message": str(err), **err.detail}),
              file=sys.stderr)
        return EXIT_CODES.get(err.category, 1)


if __name__ == "__main__":
    sys.exit(main())

"""Batch front end: configuration, check selection, report emission."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .fields.contractions import tail_bound
from .qcalc import Deformation
from .verify.core import CheckResult, Settings, run_check, select

VARIANT_FLAGS = {"printed": ("as_printed",), "rederived": ("rederived",), "both": ("rederived", "as_printed")}
FORMATS = ("json", "md", "csv")
SCHEMA_VERSION = 1
RUNTIME_KEYS = ("runtime_ms", "total_runtime_ms")


class ConfigError(ValueError):
    """Invalid flag or config-file value (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    epsilon: Tuple[float, ...] = (0.15,)
    D: int = 8
    K: int = 40
    M: int = 2
    checks: Tuple[str, ...] = ("*",)
    variant: str = "rederived"
    samples: int = 5
    tolerance: Optional[float] = None
    format: str = "json"
    seed: int = 7
    ratio: float = 0.5
    jobs: int = 1
    out: Optional[str] = None
    list_only: bool = False

    def settings(self, epsilon: float) -> Settings:
        return Settings(epsilon=epsilon, D=self.D, K=self.K, M=self.M, samples=self.samples, seed=self.seed,
                        tolerance=self.tolerance, ratio=self.ratio)


# config-file key -> (RunConfig field, parser)
def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _patterns(text: str) -> Tuple[str, ...]:
    return tuple(t for t in text.replace(",", " ").split())


FILE_KEYS = {
    "epsilon": ("epsilon", _floats),
    "degree": ("D", int),
    "mode-cutoff": ("K", int),
    "momentum": ("M", int),
    "checks": ("checks", _patterns),
    "variant": ("variant", str),
    "samples": ("samples", int),
    "tolerance": ("tolerance", float),
    "format": ("format", str),
    "seed": ("seed", int),
    "ratio": ("ratio", float),
    "jobs": ("jobs", int),
    "out": ("out", str),
}


def read_config_file(path: str) -> Dict[str, object]:
    """Parse a key=value file; '#' starts a comment; keys use the long flag names."""
    values: Dict[str, object] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in FILE_KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        name, conv = FILE_KEYS[key]
        try:
            values[name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {value!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsugawara", description="Verify q-deformed current-algebra identities on "
                                "truncated Fock spaces and report per-identity errors.")
    p.add_argument("--epsilon", type=float, nargs="+", help="deformation parameter(s), q = exp(i eps) [0.15]")
    p.add_argument("--degree", type=int, help="Fock degree cutoff D [8]")
    p.add_argument("--mode-cutoff", type=int, help="oscillator mode cutoff K in the exponentials [40]")
    p.add_argument("--momentum", type=int, help="zero-mode momentum cutoff M [2]")
    p.add_argument("--checks", nargs="+", help="check id glob(s) [*]")
    p.add_argument("--variant", choices=sorted(VARIANT_FLAGS), help="display variant [rederived]")
    p.add_argument("--samples", type=int, help="spectral sample points per check [5]")
    p.add_argument("--tolerance", type=float, help="override every check tolerance")
    p.add_argument("--ratio", type=float, help="|w/z| for radially ordered samples [0.5]")
    p.add_argument("--format", choices=FORMATS, help="report format [json]")
    p.add_argument("--seed", type=int, help="sampling seed [7]")
    p.add_argument("--jobs", type=int, help="worker processes [1]")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--config", help="key=value file; flags override its values")
    p.add_argument("--list", action="store_true", help="list the registry and exit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Flags over config file over defaults. Raises ConfigError on invalid values."""
    parser = build_parser()
    args = parser.parse_args(argv)
    values: Dict[str, object] = read_config_file(args.config) if args.config else {}
    flags = {"epsilon": args.epsilon, "D": args.degree, "K": args.mode_cutoff, "M": args.momentum,
             "checks": args.checks, "variant": args.variant, "samples": args.samples,
             "tolerance": args.tolerance, "format": args.format, "seed": args.seed, "ratio": args.ratio,
             "jobs": args.jobs, "out": args.out}
    values.update({k: (tuple(v) if isinstance(v, list) else v) for k, v in flags.items() if v is not None})
    cfg = replace(RunConfig(), list_only=args.list, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    for name in ("D", "K", "M", "samples", "jobs"):
        if getattr(cfg, name) < 1 and not (name == "M" and cfg.M == 0):
            raise ConfigError(f"{name} must be positive")
    if cfg.variant not in VARIANT_FLAGS:
        raise ConfigError(f"variant must be one of {sorted(VARIANT_FLAGS)}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    if not cfg.epsilon or any(not math.isfinite(e) or abs(e) >= math.pi / 2 for e in cfg.epsilon):
        raise ConfigError("epsilon values must be finite with |eps| < pi/2")
    if not 0 < cfg.ratio < 1 / 1.4:
        raise ConfigError("ratio must lie in (0, 1/1.4) so samples avoid the poles")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError("tolerance must be positive")
    if not select(cfg.checks):
        raise ConfigError(f"no check matches {list(cfg.checks)}")
    if 0.0 in cfg.epsilon:
        deformed = [s.id for s in select(cfg.checks) if s.deformed]
        if deformed:
            raise ConfigError(f"epsilon = 0 is undefined for deformed checks: {', '.join(deformed[:5])}"
                              + (" ..." if len(deformed) > 5 else ""))


def list_checks() -> List[Dict[str, object]]:
    rows = []
    for spec in select():
        rows.append({"id": spec.id, "anchor": spec.anchor, "kind": spec.kind, "tolerance": spec.tolerance,
                     "differs": spec.differs, "params": spec.params})
    return rows


def plan(cfg: RunConfig) -> List[Tuple[str, str, float]]:
    """(check id, variant, epsilon) in report order. as_printed runs only where the variants differ under 'both'."""
    jobs = []
    for eps in cfg.epsilon:
        for spec in select(cfg.checks):
            for variant in VARIANT_FLAGS[cfg.variant]:
                if cfg.variant == "both" and variant == "as_printed" and not spec.differs:
                    continue
                jobs.append((spec.id, variant, eps))
    return jobs


def _run_one(job: Tuple[str, str, float, RunConfig]) -> CheckResult:
    cid, variant, eps, cfg = job
    return run_check(cid, variant, cfg.settings(eps))


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings, complex to [re, im]."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(x.real), _clean(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def run_suite(cfg: RunConfig) -> Dict[str, object]:
    t0 = time.perf_counter()
    jobs = plan(cfg)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_one, [(*j, cfg) for j in jobs]))
    else:
        results = [_run_one((*j, cfg)) for j in jobs]
    checks = []
    for r in results:
        d = r.to_dict()
        d["pass"] = d.pop("passed")
        checks.append(d)
    tails = {repr(e): tail_bound(Deformation(e, max(64, cfg.K + 8)), cfg.ratio, cfg.K) for e in cfg.epsilon if e}
    meta = {"tool": "qsugawara", "version": __version__, "schema": SCHEMA_VERSION,
            "config": {"epsilon": list(cfg.epsilon), "D": cfg.D, "K": cfg.K, "M": cfg.M, "checks": list(cfg.checks),
                       "variant": cfg.variant, "samples": cfg.samples, "tolerance": cfg.tolerance,
                       "seed": cfg.seed, "ratio": cfg.ratio},
            "tail_bound": tails, "total": len(checks), "passed": sum(c["pass"] for c in checks),
            "failed": [f"{c['id']} [{c['variant']}]" for c in checks if not c["pass"]],
            "total_runtime_ms": (time.perf_counter() - t0) * 1e3}
    return _clean({"run": meta, "checks": checks})


REQUIRED_CHECK_KEYS = {"id": str, "variant": str, "params": dict, "max_error": (float, int, str),
                       "tolerance": (float, int), "pass": bool, "runtime_ms": (float, int)}


def validate_report(report: object) -> List[str]:
    """Schema problems in a report (empty when valid)."""
    problems = []
    if not isinstance(report, dict) or set(report) != {"run", "checks"}:
        return ["top level must be {run, checks}"]
    run = report["run"]
    for key in ("tool", "version", "schema", "config", "total", "passed", "failed", "total_runtime_ms"):
        if key not in run:
            problems.append(f"run.{key} missing")
    if not isinstance(report["checks"], list):
        return problems + ["checks must be a list"]
    for i, c in enumerate(report["checks"]):
        for key, typ in REQUIRED_CHECK_KEYS.items():
            if key not in c:
                problems.append(f"checks[{i}].{key} missing")
            elif not isinstance(c[key], typ):
                problems.append(f"checks[{i}].{key} has type {type(c[key]).__name__}")
    if not problems and run["total"] != len(report["checks"]):
        problems.append("run.total does not match the number of checks")
    return problems


def strip_runtime(report: Dict[str, object]) -> Dict[str, object]:
    """Copy without wall-clock fields, for determinism comparisons."""
    run = {k: v for k, v in report["run"].items() if k not in RUNTIME_KEYS}
    checks = [{k: v for k, v in c.items() if k not in RUNTIME_KEYS} for c in report["checks"]]
    return {"run": run, "checks": checks}


def _fmt(x) -> str:
    return f"{x:.3e}" if isinstance(x, float) else str(x)


def render(report: Dict[str, object], fmt: str) -> str:
    checks = report["checks"]
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    cols = ["id", "variant", "epsilon", "max_error", "tolerance", "pass", "observed_order", "runtime_ms"]
    rows = [[c["id"], c["variant"], c["params"].get("epsilon"), c["max_error"], c["tolerance"], c["pass"],
             c["params"].get("observed_order", ""), c["runtime_ms"]] for c in checks]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows([[json.dumps(v) if isinstance(v, dict) else v for v in r] for r in rows])
        return buf.getvalue()
    run = report["run"]
    lines = [f"# qsugawara report: {run['passed']}/{run['total']} passed", "",
             "| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        r = list(r)
        r[5] = "pass" if r[5] else "**FAIL**"
        r[7] = f"{r[7]:.0f}"
        lines.append("| " + " | ".join(_fmt(v) if not isinstance(v, dict) else json.dumps(v) for v in r) + " |")
    if run["failed"]:
        lines += ["", "Failures:"]
        lines += [f"- {c['id']} [{c['variant']}]: {c['notes']}" for c in checks if not c["pass"]]
    return "\n".join(lines) + "\n"


def render_list(rows: List[Dict[str, object]]) -> str:
    width = max(len(r["id"]) for r in rows)
    out = [f"{'id':{width}s}  {'kind':8s} {'tol':8s} anchor"]
    for r in rows:
        flag = " (as_printed differs)" if r["differs"] else ""
        out.append(f"{r['id']:{width}s}  {r['kind']:8s} {r['tolerance']:<8.0e} {r['anchor']}{flag}")
    out.append(f"{len(rows)} checks")
    return "\n".join(out) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 0 if exc.code == 0 else 2
    except ConfigError as exc:
        build_parser().print_usage(sys.stderr)
        print(f"qsugawara: error: {exc}", file=sys.stderr)
        return 2
    if cfg.list_only:
        sys.stdout.write(render_list(list_checks()))
        return 0
    report = run_suite(cfg)
    text = render(report, cfg.format)
    try:
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"qsugawara: error: cannot write report: {exc}", file=sys.stderr)
        return 2
    return 0 if not report["run"]["failed"] else 1


if __name__ == "__main__":
    sys.exit(main())

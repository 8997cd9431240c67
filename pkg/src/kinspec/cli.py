"""Command line entry point: `kinspec run <config>` and `kinspec validate <config>`."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import yaml

SCHEMA_VERSION = 1
THREAD_ENV = "KINSPEC_THREADS"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class ConfigError(Exception):
    pass


def _node_position(root, loc) -> tuple[int, int] | None:
    """Line/column of the YAML node at a pydantic error location."""
    node = root
    pos = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    pos = (k.start_mark.line + 1, k.start_mark.column + 1)
                    nxt = v
                    break
            if nxt is None:
                return pos
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            pos = (node.start_mark.line + 1, node.start_mark.column + 1)
        else:
            return pos
    return pos


def load_config(path):
    """Parse and validate a YAML config; errors carry line/column positions."""
    from pydantic import ValidationError

    from .experiments import ExperimentConfig

    text = Path(path).read_text()
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1:1: top level must be a mapping")
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            pos = _node_position(root, err["loc"])
            where = f"{path}:{pos[0]}:{pos[1]}" if pos else f"{path}"
            field = ".".join(str(x) for x in err["loc"]) or "<root>"
            lines.append(f"{where}: {field}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None
    return cfg


def config_hash(cfg) -> str:
    canon = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if hasattr(v, "item"):
        return _fmt(v.item())
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return str(v)


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    cols = list(rows[0].keys())
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])


def write_svg(path: Path, rows: list[dict], x: str, ys: list[str], logx: bool, logy: bool) -> None:
    """Minimal line chart drawn from the same rows that go to CSV."""
    W, H, pad = 640, 420, 50
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]

    def tr(v, log):
        return math.log10(v) if log else v

    pts = {}
    for y in ys:
        seq = [(tr(float(r[x]), logx), tr(float(r[y]), logy)) for r in rows
               if (not logx or float(r[x]) > 0) and (not logy or float(r[y]) > 0)]
        pts[y] = seq
    allp = [p for s in pts.values() for p in s]
    if not allp:
        return
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (W - 2 * pad)

    def sy(v):
        return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" fill="none" stroke="#888"/>',
             f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle">{"log10 " if logx else ""}{x}</text>']
    for i, (y, seq) in enumerate(pts.items()):
        c = colors[i % len(colors)]
        poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in seq)
        parts.append(f'<polyline fill="none" stroke="{c}" points="{poly}"/>')
        parts.append(f'<text x="{pad + 5}" y="{pad + 15 + 15 * i}" fill="{c}">{"log10 " if logy else ""}{y}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _version() -> str:
    from . import __version__
    return __version__


def run(cfg, out_dir: Path, plots: bool = True) -> int:
    from .experiments import RUNNERS

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
    except Exception as exc:  # surface downstream errors with context
        raise RuntimeError(f"experiment {cfg.experiment!r} failed: {type(exc).__name__}: {exc}") from exc
    for name, rows in outcome.tables.items():
        write_csv(out_dir / f"{name}.csv", rows)
    if plots:
        for table, x, ys, lx, ly in outcome.plots:
            write_svg(out_dir / f"{table}.svg", outcome.tables[table], x, ys, lx, ly)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "statement": outcome.statement,
        "status": "pass" if outcome.passed else "flagged",
        "checks": outcome.checks,
        "values": outcome.values,
        "config": cfg.model_dump(mode="json"),
        "config_hash": config_hash(cfg),
        "version": _version(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, default=str) + "\n")
    for c in outcome.checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['value']} (tol {c['tol']})")
    return 0 if outcome.passed else 1


def _set_threads(k: int | None) -> None:
    k = k or (int(os.environ[THREAD_ENV]) if os.environ.get(THREAD_ENV) else None)
    if k:
        for var in THREAD_VARS:
            os.environ[var] = str(k)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kinspec", description="Hydrodynamic-limit experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (overrides the config)")
    p_run.add_argument("--threads", type=int, default=None, help=f"thread count (env {THREAD_ENV})")
    p_run.add_argument("--no-plots", action="store_true")
    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command == "run":
        _set_threads(args.threads)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"ok: {cfg.experiment} ({config_hash(cfg)[:12]})")
        return 0
    out = Path(args.out or cfg.output)
    try:
        return run(cfg, out, plots=not args.no_plots)
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

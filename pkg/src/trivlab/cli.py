"""Command line: ``trivlab run <config>``, ``trivlab report <manifest...>``, ``trivlab selfcheck``.

Exit status: 0 success, 1 selfcheck failure, 2 invalid config or
parameters, 3 runtime or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .artifacts import StagedRun, read_csv, write_json
from .config import ConfigError, Experiment, load_config
from .lattice_phi4.collapse import CollapsePoint, IncomparableRunsError, fit_collapse
from .runners import POINT_HEADER, RUNNERS
from .selfcheck import run_selfcheck

EXIT_OK, EXIT_CHECK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_ROOT = "runs"
MANIFEST = "manifest.json"


class ReportError(ValueError):
    pass


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def _err(*msg):
    print("error:", *msg, file=sys.stderr)


def _output_root(args) -> Path:
    return Path(args.output_root or DEFAULT_ROOT)


def _check_writable(root: Path) -> None:
    root.mkdir(parents=True, exist_ok=True)
    if not os.access(root, os.W_OK | os.X_OK):
        raise PermissionError(f"output root {root} is not writable")


def execute(exp: Experiment, output_root: Path) -> Path:
    """Run a validated experiment; returns the committed manifest path."""
    digest = exp.digest()
    _check_writable(output_root)
    run = StagedRun(output_root / f"{exp.name}-{digest[:12]}")
    t0 = time.perf_counter()
    try:
        summary = RUNNERS[exp.kind](exp, run)
        manifest = {
            "toolkit_version": __version__,
            "kind": exp.kind,
            "name": exp.name,
            "seed": exp.seed,
            "config_digest": digest,
            "config": exp.canonical(),
            "tolerances": exp.tolerances,
            "wall_clock_s": time.perf_counter() - t0,
            "timings_s": dict(run.timings),
            "files": {k: run.files[k] for k in sorted(run.files)},
            "summary": summary,
        }
        write_json(run.stage / MANIFEST, manifest)
        final = run.commit()
    except BaseException:
        run.abort()
        raise
    return final / MANIFEST


def cmd_run(args) -> int:
    try:
        exp = load_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        _err(f"invalid config {args.config}: {exc}")
        return EXIT_VALIDATION
    try:
        path = execute(exp, _output_root(args))
    except ValueError as exc:
        _err(f"invalid parameters: {exc}")
        return EXIT_VALIDATION
    except Exception as exc:
        _err(f"{exp.kind} run failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    _say(args, str(path))
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _load_manifest(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            m = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read manifest {path}: {exc}") from None
    for key in ("kind", "config_digest", "files", "summary"):
        if key not in m:
            raise ReportError(f"manifest {path} lacks {key!r}")
    m["_dir"] = path.parent
    return m


def _artifact(m: dict, stem: str) -> Optional[Path]:
    name = m["files"].get(stem)
    return None if name is None else m["_dir"] / name


def _run_id(m: dict) -> str:
    return f"{m.get('name', m['kind'])}-{m['config_digest'][:12]}"


def _cross_reference(flows: list[dict], gauges: list[dict]) -> list[dict]:
    """Express each flow's coupling window as a spacing window a/xi through
    g0^2 = exp(k2 a / (4 xi)) / 3 and mark the gauge run's a/xi values inside it."""
    out = []
    for f in flows:
        lo, hi = f["summary"]["u_window"]
        for g in gauges:
            k2 = g["summary"].get("k2", 1.0)
            to_axi = lambda u: 4.0 * math.log(3.0 * u) / k2 if 3.0 * u > 1.0 else 0.0  # noqa: E731
            window = [to_axi(lo), to_axi(hi) if math.isfinite(hi) else math.inf]
            inside = [x for x in g["summary"].get("a_over_xi", []) if window[0] <= x <= window[1]]
            out.append({"flow": _run_id(f), "gauge": _run_id(g), "u_window": [lo, hi], "a_over_xi_window": window, "a_over_xi_inside": inside})
    return out


def build_report(manifests: Sequence[dict], run: StagedRun) -> dict:
    versions = sorted({m.get("toolkit_version", "?") for m in manifests})
    if len(versions) > 1:
        warnings.warn(f"manifests come from different toolkit versions: {versions}", stacklevel=2)
    by_kind: dict[str, list[dict]] = {}
    for m in sorted(manifests, key=lambda m: (m["kind"], _run_id(m))):
        by_kind.setdefault(m["kind"], []).append(m)
    sections = {k: [{"run": _run_id(m), "seed": m.get("seed"), **m["summary"]} for m in ms] for k, ms in by_kind.items()}
    summary = {"n_runs": len(manifests), "toolkit_versions": versions, "sections": sections}

    flows = by_kind.get("flow", [])
    if flows:
        rows = []
        for m in flows:
            path = _artifact(m, "flow")
            if path is not None:
                rows.extend([_run_id(m), *r] for r in read_csv(path)[1])
        run.csv("flow_panels.csv", ["run", "lnL", "u"], rows)

    curves = []
    for m in by_kind.get("massgap", []):
        path = _artifact(m, "ratio_curve")
        if path is not None:
            curves.extend([_run_id(m), "massgap", *r] for r in read_csv(path)[1])
    for m in by_kind.get("gauge", []):
        path = _artifact(m, "ratio_table")
        if path is not None:
            curves.extend([_run_id(m), "strong_coupling", r[0], r[3]] for r in read_csv(path)[1])
    if curves:
        run.csv("ratio_curves.csv", ["run", "source", "coupling", "sigma_over_m2"], curves)

    collapses = by_kind.get("collapse", [])
    if collapses:
        pts = []
        for m in collapses:
            for r in read_csv(_artifact(m, "points"))[1]:
                pts.append(CollapsePoint(r[0], int(r[1]), *map(float, r[2:])))
        run.csv("collapse_points.csv", POINT_HEADER, [p.to_row() for p in pts])
        threshold = collapses[0].get("tolerances", {}).get("threshold", 2.0)
        try:
            merged = fit_collapse(pts, threshold=threshold).to_dict()
            merged.pop("points")
        except (IncomparableRunsError, ValueError) as exc:
            merged = {"error": str(exc)}
        summary["collapse"] = {"runs": [_run_id(m) for m in collapses], "merged": merged}

    gaps = by_kind.get("massgap", [])
    if gaps:
        summary["massgap"] = {_run_id(m): m["summary"]["verdicts"] for m in gaps}
    if flows and by_kind.get("gauge"):
        summary["cross_reference"] = _cross_reference(flows, by_kind["gauge"])
    run.json("summary.json", summary)
    return summary


def cmd_report(args) -> int:
    try:
        manifests = [_load_manifest(Path(p)) for p in args.manifests]
    except ReportError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    out = Path(args.out) if args.out else _output_root(args) / "report"
    try:
        _check_writable(out.parent)
        run = StagedRun(out)
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                build_report(manifests, run)
            for w in caught:
                print("warning:", w.message, file=sys.stderr)
            final = run.commit()
        except BaseException:
            run.abort()
            raise
    except Exception as exc:
        _err(f"report failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    _say(args, str(final / "summary.json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# selfcheck


def _parse_overrides(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} is not key=value")
        out[key.strip()] = float(val)
    return out


def cmd_selfcheck(args) -> int:
    try:
        rep = run_selfcheck(_parse_overrides(args.set or []))
    except ValueError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    for line in rep.lines():
        _say(args, line)
    if rep.passed:
        _say(args, "selfcheck passed")
        return EXIT_OK
    print(f"selfcheck failed at {rep.first_failure.name}", file=sys.stderr)
    return EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-root", default=argparse.SUPPRESS, help=f"directory for run outputs (default ./{DEFAULT_ROOT})")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="print nothing on success")
    p = argparse.ArgumentParser(prog="trivlab", parents=[common], description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(fn=cmd_run)
    rep = sub.add_parser("report", parents=[common], help="merge run manifests into one summary")
    rep.add_argument("manifests", nargs="*")
    rep.add_argument("--out", default=None, help="report directory (default <output-root>/report)")
    rep.set_defaults(fn=cmd_report)
    s = sub.add_parser("selfcheck", parents=[common], help="run the embedded oracle suite")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="flow tolerance override, e.g. u_max=10")
    s.set_defaults(fn=cmd_selfcheck)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    args.output_root = getattr(args, "output_root", None)
    args.quiet = getattr(args, "quiet", False)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

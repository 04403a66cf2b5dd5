"""
Command line entry point: ``conelab list | run | sweep``.

Exit codes: 0 pass, 1 fail, 2 inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile

from .errors import ConelabError
from .experiments import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    REGISTRY,
    SWEEP_PARAMS,
    ExperimentBudget,
    list_experiments,
    make_spec,
    run,
    sweep,
    sweep_csv,
)
from .geometry import TruncationRegion, default_region
from .cone import get_backend

EXIT = {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}
EX_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _kv(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        k, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {item!r}")
        out[k.strip()] = v.strip()
    return out


def read_config(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            k, sep, v = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{n}: expected 'key = value'")
            cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _interval(text: str):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"expected lo:hi, got {text!r}")
    return float(lo), float(hi)


def parse_region(text: str, backend, delta: float) -> tuple:
    """``x=lo:hi,det=lo:hi,aniso=F,scale=F`` -> (region or None, scale)."""
    kv = _kv(text)
    unknown = set(kv) - {"x", "det", "aniso", "scale"}
    if unknown:
        raise UsageError(f"unknown region keys: {', '.join(sorted(unknown))}")
    scale = float(kv.get("scale", 1.0))
    if not ({"x", "det", "aniso"} & set(kv)):
        return None, scale
    base = default_region(backend, delta)
    xb = (_interval(kv["x"]),) * backend.n if "x" in kv else base.x_box
    det = _interval(kv["det"]) if "det" in kv else base.det_range
    aniso = float(kv.get("aniso", base.anisotropy_bound))
    return TruncationRegion(xb, det, aniso), scale


def _budget(text: str) -> ExperimentBudget:
    kv = _kv(text)
    unknown = set(kv) - {"max_nodes", "max_quadrature_cells", "max_seconds"}
    if unknown:
        raise UsageError(f"unknown budget keys: {', '.join(sorted(unknown))}")
    return ExperimentBudget(
        max_nodes=int(float(kv.get("max_nodes", ExperimentBudget.max_nodes))),
        max_quadrature_cells=int(float(kv.get("max_quadrature_cells", ExperimentBudget.max_quadrature_cells))),
        max_seconds=float(kv.get("max_seconds", ExperimentBudget.max_seconds)),
    )


def _option_value(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def _add_common(p):
    p.add_argument("name", help="experiment name (see `conelab list`)")
    p.add_argument("--config", help="file of `key = value` lines; command-line flags win")
    p.add_argument("--cone", help="halfplane or lorentz3")
    p.add_argument("--nu", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--region", help="x=lo:hi,det=lo:hi,aniso=F,scale=F")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", help="max_nodes=N,max_quadrature_cells=N,max_seconds=F")
    p.add_argument("--set", dest="options", help="experiment options, e.g. A=0.4,count=20,symbol=power:1")
    p.add_argument("--out", help="write the report here (atomically) instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--traces", help="directory for two-column CSV files, one per doubling trace")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conelab", description="Numerical checks for Toeplitz operators on tube-domain Bergman spaces.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("list", help="list registered experiments")
    _add_common(sub.add_parser("run", help="run one experiment"))
    sw = sub.add_parser("sweep", help="run one experiment over a list of parameter values")
    _add_common(sw)
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--values", required=True, help="comma-separated values (may be empty)")
    return parser


def _settings(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    for key in ("cone", "nu", "p", "delta", "m", "region", "seed", "budget", "options", "out", "format", "traces"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if "set" in cfg:
        cfg["options"] = cfg.pop("set")
    return cfg


def _spec_from(args):
    cfg = _settings(args)
    backend = get_backend(cfg.get("cone", "halfplane"))
    num = {k: float(cfg[k]) for k in ("nu", "p", "delta") if k in cfg}
    if "m" in cfg:
        num["m"] = int(cfg["m"])
    opts = {k: _option_value(v) for k, v in _kv(cfg.get("options", "")).items()}
    region, scale = parse_region(cfg.get("region", ""), backend, num.get("delta", 0.5))
    if scale != 1.0:
        opts["scale"] = scale
    spec = make_spec(
        args.name,
        backend,
        region=region,
        seed=int(cfg.get("seed", 0)),
        budget=_budget(cfg.get("budget", "")),
        **num,
        **opts,
    )
    return spec, cfg


def _write(text: str, path: str | None):
    if not path:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".conelab-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")
    os.replace(tmp, path)


def _metrics_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    w.writerow(["verdict", report.verdict])
    for k, v in report.to_dict()["metrics"].items():
        w.writerow([k, v])
    return buf.getvalue()


def _write_traces(report, directory):
    os.makedirs(directory, exist_ok=True)
    for name in report.doubling_traces:
        _write(report.trace_csv(name), os.path.join(directory, f"{report.spec.name}_{name}.csv"))


def _cmd_list(_args) -> int:
    for name, statement in list_experiments():
        print(f"{name:24s} {statement}")
    return 0


def _cmd_run(args) -> int:
    spec, cfg = _spec_from(args)
    report = run(spec)
    fmt = cfg.get("format", "json")
    _write(report.to_json() if fmt == "json" else _metrics_csv(report), cfg.get("out"))
    if cfg.get("traces"):
        _write_traces(report, cfg["traces"])
    return EXIT[report.verdict]


def _cmd_sweep(args) -> int:
    spec, cfg = _spec_from(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    reports = sweep(spec, args.param, values)
    if cfg.get("format", "csv") == "json":
        import json

        text = json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2)
    else:
        text = sweep_csv(spec.name, args.param, values, reports)
    _write(text, cfg.get("out"))
    if cfg.get("traces"):
        for r in reports:
            _write_traces(r, cfg["traces"])
    verdicts = {r.verdict for r in reports}
    return EXIT[FAIL] if FAIL in verdicts else EXIT[INCONCLUSIVE] if INCONCLUSIVE in verdicts else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list(args)
        if args.name not in REGISTRY:
            print(f"conelab: unknown experiment {args.name!r}; valid names: {', '.join(REGISTRY)}", file=sys.stderr)
            return EX_USAGE
        return _cmd_run(args) if args.command == "run" else _cmd_sweep(args)
    except (UsageError, ConelabError, ValueError, OSError) as exc:
        print(f"conelab: error: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())

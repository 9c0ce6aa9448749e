"""Command-line front end.

Results go to stdout as JSON, diagnostics to stderr.  Exit codes: 0 success,
1 I/O error, 2 usage or precondition error, 3 numerical failure.  Node ids
on the command line and in edge lists are 1-based.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, crt, ggm, gof_stats, gof_test
from .graph import Graph, NotPositiveDefiniteError, read_edge_list
from .pvalue import PvalueMode
from .result import TestResult
from .sampler import SamplerConfig, exchangeable_copies

EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 1, 2, 3

GOF_STATS = {
    "prc": "PRC",
    "erc": "ERC",
    "prc-w": "PRC_W",
    "erc-w": "ERC_W",
    "fsum": "F_SUM",
    "fmax": "F_MAX",
    "glr-l1": "GLR_L1",
}
CRT_STATS = {k.value.lower().replace("_", "-"): k for k in crt.CrtKind if k is not crt.CrtKind.CUSTOM}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# input parsing


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_csv_matrix(path: str | Path) -> tuple[np.ndarray, list[str] | None]:
    """Comma-separated numbers; a first row with any non-numeric field is a header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if not rows:
        raise UsageError(f"{path}: no data")
    header = None
    if not all(_is_number(f) for f in rows[0]):
        header, rows = [f.strip() for f in rows[0]], rows[1:]
    width = len(rows[0]) if rows else 0
    try:
        data = np.array([[float(f) for f in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric entry ({exc})") from exc
    if any(len(r) != width for r in rows) or data.ndim != 2 or data.size == 0:
        raise UsageError(f"{path}: rows have unequal length or no data rows")
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: non-finite entries")
    return data, header


def parse_tspec(spec: str, p: int) -> tuple[int, ...]:
    """``"1-8,12"`` -> 0-based ids ``(0, ..., 7, 11)``."""
    ids = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                if lo > hi:
                    raise UsageError(f"empty range {part!r}")
                ids.update(range(lo, hi + 1))
            else:
                ids.add(int(part))
        except ValueError as exc:
            raise UsageError(f"bad index spec {spec!r}") from exc
    if not ids:
        raise UsageError(f"index spec {spec!r} selects nothing")
    if min(ids) < 1 or max(ids) > p:
        raise UsageError(f"index spec {spec!r} leaves the range 1..{p}")
    return tuple(sorted(i - 1 for i in ids))


def parse_order(spec: str, p: int) -> tuple[int, ...]:
    """Like :func:`parse_tspec` but keeps the given order."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            out.extend(range(lo, hi + 1) if lo <= hi else range(lo, hi - 1, -1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1 or max(out) > p or len(set(out)) != len(out):
        raise UsageError(f"order {spec!r} must list distinct ids in 1..{p}")
    return tuple(i - 1 for i in out)


def _load_graph(path: str, p: int) -> Graph:
    g = read_edge_list(path, p)
    if g.p != p:
        raise UsageError(f"graph has {g.p} nodes, data has {p} columns")
    return g


def _sampler(args, order=None) -> SamplerConfig:
    return SamplerConfig(num_copies=args.copies, iterations=args.iters, order=order, seed=args.seed)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _psi_checksum(x: np.ndarray, g: Graph) -> str:
    v = ggm.sufficient_statistic(x, g).as_vector()
    return hashlib.sha256(np.array2string(v, precision=8, floatmode="fixed").encode()).hexdigest()[:16]


def cmd_sample(args) -> int:
    x, header = read_csv_matrix(args.data)
    g = _load_graph(args.graph, x.shape[1])
    order = parse_order(args.order, g.p) if args.order else None
    copies = exchangeable_copies(x, g, _sampler(args, order))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ref = ggm.sufficient_statistic(x, g)
    files, match = [], True
    width = len(str(len(copies)))
    for m, c in enumerate(copies, 1):
        name = f"copy_{m:0{width}d}.csv"
        np.savetxt(out / name, c, delimiter=",", fmt="%.17g",
                   header=",".join(header) if header else "", comments="")
        match &= ggm.stats_close(ref, ggm.sufficient_statistic(c, g))
        files.append(name)
    manifest = {
        "M": args.copies,
        "L": args.iters,
        "seed": args.seed,
        "order": [i + 1 for i in (order or range(g.p))],
        "psi_checksum": _psi_checksum(x, g),
        "psi_match": bool(match),
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    _emit(manifest)
    return 0


def cmd_gof(args) -> int:
    x, _ = read_csv_matrix(args.data)
    g = _load_graph(args.graph, x.shape[1])
    kind = GOF_STATS[args.stat]
    weights = None
    if kind in ("PRC_W", "ERC_W"):
        if not args.weights:
            raise UsageError(f"--stat {args.stat} needs --weights")
        weights, _ = read_csv_matrix(args.weights)
        if weights.shape != (g.p, g.p):
            raise UsageError(f"weights must be {g.p} x {g.p}")
    local = parse_tspec(args.local, g.p) if args.local else None
    if local is not None and kind == "F_SUM":
        kind = "F_SUM_LOCAL"
    stat = gof_stats.GofStatistic(kind, delta=args.delta, weights=weights, local_set=local
                                  if kind == "F_SUM_LOCAL" else None, glasso_lambda=args.glasso_lambda)
    spec = gof_test.GofTestSpec(g, stat, _sampler(args), PvalueMode.parse(args.mode), local)
    res = gof_test.run_gof(x, spec)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(res.to_dict())
    return 0


def cmd_crt(args) -> int:
    x, _ = read_csv_matrix(args.data)
    y, _ = read_csv_matrix(args.response)
    if y.shape[1] != 1:
        raise UsageError("response file must have one column")
    g = _load_graph(args.graph, x.shape[1])
    target = parse_tspec(args.target, g.p)
    prob = crt.CrtProblem(y[:, 0], x, target, g, crt.CrtStatistic(CRT_STATS[args.stat]),
                          _sampler(args), PvalueMode.parse(args.mode))
    if args.bonferroni_per_variable:
        res = crt.run_crt_per_variable(prob)
        res.extra["per_variable"] = {str(i + 1): p for i, p in res.extra["per_variable"].items()}
        res.extra["procedure"] = "bonferroni_per_variable"
    else:
        res = crt.run_crt(prob)
        res.extra["procedure"] = "joint"
    res.extra["target"] = [i + 1 for i in target]
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(res.to_dict())
    return 0


def cmd_bench(args) -> int:
    scenarios = bench.load_config(args.config)
    reports = []
    for cfg, methods, n_jobs in scenarios:
        rep = bench.run_power_study(cfg, methods, n_jobs=args.jobs or n_jobs)
        print(rep.table(), file=sys.stderr)
        reports.append(rep)
    lines = []
    for rep in reports:
        for rec in rep.records():
            if args.no_timing:
                rec.pop("runtime")
            lines.append(json.dumps(rec, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    raw = sys.stdin.read() if args.result == "-" else Path(args.result).read_text(encoding="utf-8")
    try:
        res = TestResult.from_dict(json.loads(raw))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid result: {exc}") from exc
    _emit(res.to_dict())
    return 0


# ---------------------------------------------------------------------------


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--copies", type=int, default=100, help="number of copies M (default 100)")
    p.add_argument("--iters", type=int, default=3, help="rotation sweeps L (default 3)")
    p.add_argument("--seed", type=int, required=True, help="master seed (required)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ggmtest", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="write exchangeable copies of a data matrix")
    sp.add_argument("data")
    sp.add_argument("graph")
    sp.add_argument("--order", help="rotation order, e.g. 3,1,2 (default 1..p)")
    sp.add_argument("--out", required=True, help="output directory")
    _add_sampler_args(sp)
    sp.set_defaults(func=cmd_sample)

    gp = sub.add_parser("gof", help="goodness-of-fit test of a graph")
    gp.add_argument("data")
    gp.add_argument("graph")
    gp.add_argument("--stat", choices=sorted(GOF_STATS), default="fsum")
    gp.add_argument("--weights", help="p x p weight CSV for prc-w / erc-w")
    gp.add_argument("--local", help="local node set, e.g. 1-5,9")
    gp.add_argument("--mode", choices=["cons", "rand", "two"], default="cons")
    gp.add_argument("--delta", type=float, default=0.05, help="truncation level for prc/erc")
    gp.add_argument("--glasso-lambda", type=float, help="penalty for glr-l1 (default sqrt(log p / n))")
    _add_sampler_args(gp)
    gp.set_defaults(func=cmd_gof)

    cp = sub.add_parser("crt", help="conditional randomization test")
    cp.add_argument("data")
    cp.add_argument("response")
    cp.add_argument("graph")
    cp.add_argument("--target", required=True, help="target columns, e.g. 1-8")
    cp.add_argument("--stat", choices=sorted(CRT_STATS), default="lm-sst")
    cp.add_argument("--mode", choices=["cons", "rand", "two"], default="cons")
    cp.add_argument("--bonferroni-per-variable", action="store_true")
    _add_sampler_args(cp)
    cp.set_defaults(func=cmd_crt)

    bp = sub.add_parser("bench", help="run size/power simulations from a config file")
    bp.add_argument("config")
    bp.add_argument("--out", help="JSONL report path (default stdout)")
    bp.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    bp.add_argument("--no-timing", action="store_true", help="omit runtimes for byte-identical reports")
    bp.set_defaults(func=cmd_bench)

    vp = sub.add_parser("validate", help="check a JSON test result ('-' for stdin)")
    vp.add_argument("result")
    vp.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, NotPositiveDefiniteError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

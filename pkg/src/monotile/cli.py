"""Command-line entry point: ``monotile {gen,tile,verify,oracle,bench,plot-data}``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
When ``--out`` is omitted, artifacts go to ``$MONOTILE_OUT_DIR/<default name>``
if that variable is set and to stdout otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import graph as graph_mod
from .errors import MonotileError
from .oracle import exact_min_tiling, exact_sweep, rows_to_csv
from .params import MODES, PipelineParams
from .pipeline import tile
from .ramsey import cover_bound
from .rng import derive_seed
from .sequence import FAMILIES, parse_spec
from .tiling import Tiling, verify_tiling

OUT_DIR_ENV = "MONOTILE_OUT_DIR"
BENCH_FIELDS = ["n", "r", "delta", "spec", "seeds", "min_size", "mean_size", "max_size",
                "greedy_bound", "exp_fit"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def resolve_spec(text: str, delta: int | None):
    """Spec string with ``D=delta`` filled in for families whose degree is a parameter."""
    family = text.split(":", 1)[0]
    if delta is not None and family in FAMILIES and family not in ("path", "matching") \
            and "d=" not in text.lower():
        text = f"{text}:D={delta}"
    return parse_spec(text)


def parse_int_list(text: str) -> list[int]:
    """``5``, ``1,2,3``, ``50..400`` (step = start) or ``50..400:25``."""
    out: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo_s, hi_s = chunk.split("..", 1)
            step_s = None
            if ":" in hi_s:
                hi_s, step_s = hi_s.split(":", 1)
            lo, hi = int(lo_s), int(hi_s)
            step = int(step_s) if step_s else max(lo, 1)
            if step < 1 or hi < lo:
                raise ValueError(f"bad range {chunk!r}")
            out.extend(range(lo, hi + 1, step))
        elif chunk:
            out.append(int(chunk))
    if not out:
        raise ValueError(f"empty list {text!r}")
    return out


def _emit(text: str, out: str | None, default_name: str) -> str | None:
    if out is None and os.environ.get(OUT_DIR_ENV):
        out = str(Path(os.environ[OUT_DIR_ENV]) / default_name)
    if out is None or out == "-":
        sys.stdout.write(text)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


def _params(args, g_r: int, spec) -> PipelineParams:
    return PipelineParams(mode=args.mode, r=g_r, delta_max=spec.delta, seed=args.seed,
                          budget=args.budget)


def _instance(args):
    if getattr(args, "input", None):
        return graph_mod.load(args.input)
    if args.n is None:
        raise UsageError("need --input or --n")
    return graph_mod.generate(args.kind, args.n, args.r, seed=args.seed)


def cmd_gen(args) -> int:
    if args.n is None:
        raise UsageError("gen needs --n")
    g = graph_mod.generate(args.kind, args.n, args.r, seed=args.seed)
    if args.format == "json":
        text = json.dumps(g.to_json(), separators=(",", ":")) + "\n"
    else:
        text = g.to_text()
    name = f"colouring-n{args.n}-r{args.r}-s{args.seed}.{'json' if args.format == 'json' else 'txt'}"
    args.outputs.append(_emit(text, args.out, name))
    return 0


def cmd_tile(args) -> int:
    g = _instance(args)
    spec = resolve_spec(args.spec, args.delta)
    params = _params(args, g.r, spec)
    tiling, metrics = tile(g, spec, params)
    args.metrics = metrics
    args.params_digest = params.digest()
    text = tiling.dumps(g.r, spec, metrics)
    args.outputs.append(_emit(text, args.out, f"tiling-n{g.n}-r{g.r}-s{args.seed}.json"))
    return 0


def cmd_verify(args) -> int:
    g = graph_mod.load(args.colouring)
    data = json.loads(Path(args.tiling).read_text())
    tiling, spec = Tiling.from_json(data)
    problems = []
    if int(data.get("n", g.n)) != g.n:
        problems.append(f"tiling is for n={data['n']} but the colouring has n={g.n}")
    if not problems:
        problems = verify_tiling(g, spec, tiling).violations
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return 1
    print(f"ok {tiling.size} tiles")
    return 0


def cmd_oracle(args) -> int:
    spec = resolve_spec(args.spec, args.delta)
    if args.input:
        g = graph_mod.load(args.input)
        res = exact_min_tiling(g, spec, budget=args.budget)
        rows = [{"digest": res.digest, "n": g.n, "r": g.r, "spec": str(spec),
                 "min_size": res.min_size, "optimal": res.optimal}]
    else:
        if args.n is None:
            raise UsageError("oracle needs --input or --n")
        rows = exact_sweep(args.n, args.r, spec, args.enumerator, samples=args.samples,
                           seed=args.seed, budget=args.budget)
    args.outputs.append(_emit(rows_to_csv(rows), args.out, f"oracle-n{args.n}-r{args.r}.csv"))
    return 0


def _bench_one(job):
    n, r, spec_text, seed, mode, budget = job
    spec = parse_spec(spec_text)
    g = graph_mod.generate("uniform-random", n, r, seed=seed)
    params = PipelineParams(mode=mode, r=r, delta_max=spec.delta, seed=seed, budget=budget)
    tiling, _ = tile(g, spec, params)
    return tiling.size


def exp_fit(rows: list[dict]) -> None:
    """Fill ``exp_fit`` with exp(a + b*delta), least squares on log(max_size) per r."""
    for r in sorted({row["r"] for row in rows}):
        group = [row for row in rows if row["r"] == r]
        xs = np.array([row["delta"] for row in group], dtype=float)
        ys = np.log(np.array([max(row["max_size"], 1) for row in group], dtype=float))
        deg = 1 if len(set(xs.tolist())) > 1 else 0
        coef = np.polyfit(xs, ys, deg)
        for row in group:
            row["exp_fit"] = round(float(np.exp(np.polyval(coef, row["delta"]))), 6)


def cmd_bench(args) -> int:
    ns = parse_int_list(args.n or "50..400")
    rs = parse_int_list(args.r_list)
    deltas = parse_int_list(args.delta_list)
    specs = []
    for text in args.spec.split(","):
        for d in deltas:
            s = resolve_spec(text.strip(), d)
            if s not in specs:
                specs.append(s)
    keys, jobs = [], []
    for n in ns:
        for r in rs:
            for s in specs:
                keys.append((n, r, s))
                for i in range(args.seeds):
                    seed = derive_seed(args.seed, "bench", n, r, str(s), i)
                    jobs.append((n, r, str(s), seed, args.mode, args.budget))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            sizes = list(pool.map(_bench_one, jobs, chunksize=4))
    else:
        sizes = [_bench_one(j) for j in jobs]
    rows = []
    for idx, (n, r, s) in enumerate(keys):
        chunk = sizes[idx * args.seeds:(idx + 1) * args.seeds]
        rows.append({"n": n, "r": r, "delta": s.delta, "spec": str(s), "seeds": args.seeds,
                     "min_size": min(chunk), "mean_size": round(sum(chunk) / len(chunk), 6),
                     "max_size": max(chunk),
                     "greedy_bound": round(cover_bound(s.delta, r, n), 6)})
    exp_fit(rows)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    args.outputs.append(_emit(buf.getvalue(), args.out, f"bench-s{args.seed}.csv"))
    return 0


def plot_series(rows: list[dict]) -> dict:
    """One series per (r, spec), x = n, y columns as floats."""
    series: dict[tuple, dict] = {}
    for row in rows:
        key = (int(row["r"]), row["spec"])
        s = series.setdefault(key, {"r": key[0], "spec": key[1], "delta": int(row["delta"]),
                                    "n": [], "mean_size": [], "max_size": [],
                                    "greedy_bound": [], "exp_fit": []})
        s["n"].append(int(row["n"]))
        for col in ("mean_size", "max_size", "greedy_bound", "exp_fit"):
            s[col].append(float(row[col]))
    return {"series": [series[k] for k in sorted(series)]}


def cmd_plot_data(args) -> int:
    rows = list(csv.DictReader(io.StringIO(Path(args.bench_csv).read_text())))
    missing = set(BENCH_FIELDS) - set(rows[0] if rows else BENCH_FIELDS)
    if missing:
        raise UsageError(f"not a bench CSV, missing columns {sorted(missing)}")
    text = json.dumps(plot_series(rows), sort_keys=True, indent=1) + "\n"
    args.outputs.append(_emit(text, args.out, "plot-data.json"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monotile", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, n=True, r=True, spec=True):
        if n:
            sp.add_argument("--n", type=int)
        if r:
            sp.add_argument("--r", type=int, default=2)
        if spec:
            sp.add_argument("--spec", default="path")
            sp.add_argument("--delta", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget", type=int, default=10**6)
        sp.add_argument("--out", default=None)
        sp.add_argument("--mode", choices=MODES, default="practical")
        sp.add_argument("--record", default=None, help="write a run record JSON here")

    kinds = [k for k in graph_mod.GENERATOR_KINDS if k not in ("blocks", "from-file")]
    sp = sub.add_parser("gen", help="emit a colouring file")
    common(sp, spec=False)
    sp.add_argument("--kind", choices=kinds, default="uniform-random")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("tile", help="tile a colouring and emit Tiling JSON")
    common(sp)
    sp.add_argument("--input", default=None)
    sp.add_argument("--kind", choices=kinds, default="uniform-random")
    sp.set_defaults(func=cmd_tile)

    sp = sub.add_parser("verify", help="check a tiling against a colouring")
    sp.add_argument("colouring")
    sp.add_argument("tiling")
    sp.set_defaults(func=cmd_verify, record=None)

    sp = sub.add_parser("oracle", help="exact minimum tiling sizes as CSV")
    common(sp)
    sp.add_argument("--input", default=None)
    sp.add_argument("--enumerator", choices=("all", "single-colour", "sampled"), default="all")
    sp.add_argument("--samples", type=int, default=20)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="tile sizes against the greedy bound as CSV")
    sp.add_argument("--n", default="50..400")
    sp.add_argument("--r", dest="r_list", default="2")
    sp.add_argument("--delta", dest="delta_list", default="2")
    sp.add_argument("--spec", default="path")
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=10**6)
    sp.add_argument("--mode", choices=MODES, default="practical")
    sp.add_argument("--out", default=None)
    sp.add_argument("--record", default=None)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("plot-data", help="reshape a bench CSV into plot series JSON")
    sp.add_argument("bench_csv")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_plot_data, record=None)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"monotile: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    args.outputs, args.metrics, args.params_digest = [], None, None
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (UsageError, ValueError, OSError, graph_mod.GraphFormatError, KeyError) as exc:
        print(f"monotile: error: {exc}", file=sys.stderr)
        return 2
    except MonotileError as exc:
        print(f"monotile: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "record", None):
        record = {"command": args.command, "argv": list(argv if argv is not None else sys.argv[1:]),
                  "params_digest": args.params_digest, "seed": getattr(args, "seed", None),
                  "wall_time": round(time.perf_counter() - start, 6),
                  "outputs": [o for o in args.outputs if o], "metrics": args.metrics}
        Path(args.record).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

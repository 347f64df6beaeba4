"""Command-line front end: ``generate``, ``solve``, ``verify`` and ``bench``.

Exit codes for ``solve``: 0 equilibrium, 1 malformed input, 2 no
equilibrium, 3 time or budget limit, 4 numeric failure. ``verify`` exits 0
when the stored profile is an equilibrium within the stored eps, 1 on
malformed input or an instance hash mismatch, and 2 when it rejects.
"""
import argparse
import csv
import glob
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from cutplay import __version__
from cutplay.baselines import EnumerationCapError, oracle_verify
from cutplay.cnp import (
    EQUILIBRIUM,
    NO_EQUILIBRIUM,
    NUMERIC_FAILURE,
    TIME_LIMIT,
    CnpConfig,
    CnpError,
    CnpResult,
    cut_and_play,
)
from cutplay.game import Game, GameError, MixedStrategy, Profile, verify_equilibrium
from cutplay.instances import (
    FIXTURES,
    InstanceError,
    canonical_dumps,
    content_hash,
    fixture_doc,
    generate_knapsack,
    load_instance,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_EQUILIBRIUM = 2
EXIT_REJECTED = 2
EXIT_TIME_LIMIT = 3
EXIT_NUMERIC = 4

OUTCOME_EXIT = {EQUILIBRIUM: EXIT_OK, NO_EQUILIBRIUM: EXIT_NO_EQUILIBRIUM,
                TIME_LIMIT: EXIT_TIME_LIMIT, NUMERIC_FAILURE: EXIT_NUMERIC}

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}
SGM_SHIFT = 10.0
BENCH_FIELDS = ["instance", "config", "outcome", "time", "iterations", "cuts", "eso_cuts",
                "value_cuts", "cover_cuts", "branches", "welfare"]

logger = logging.getLogger("cutplay")


def configure_logging(log_file: Optional[str] = None):
    level = LOG_LEVELS.get(os.environ.get("CUTPLAY_LOG", "quiet").lower(), logging.WARNING)
    logger.setLevel(min(level, logging.INFO) if log_file else level)
    logger.handlers.clear()
    h = logging.StreamHandler(sys.stderr)
    h.setLevel(level)
    h.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(h)
    if log_file:
        fh = logging.FileHandler(log_file, mode="w")
        fh.setLevel(min(level, logging.INFO))
        fh.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(fh)
    logger.propagate = False


def _read(path):
    with open(path) as fh:
        return fh.read()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --- result documents -----------------------------------------------------

def result_to_doc(res: CnpResult, g: Game, instance_hash: str) -> dict:
    stats = dict(res.stats)
    wall = stats.pop("time", 0.0)
    doc = {
        "version": 1,
        "instance_sha256": instance_hash,
        "solver": f"cutplay {__version__}",
        "config": res.config.to_dict(),
        "outcome": res.outcome,
        "message": res.message,
        "eps": res.config.eps,
        "tolerance": "absolute",
        "stats": {
            "iterations": stats["iterations"],
            "cuts": {"total": stats["cuts"], "eso-cut": stats["eso_cuts"], "value-cut": stats["value_cuts"],
                     "cover-cut": stats["cover_cuts"]},
            "branches": stats["branches"],
            "oracle_iterations": stats["oracle_iterations"],
            "max_oracle_iterations": stats["max_oracle_iterations"],
            "lcp_pivots": stats["lcp_pivots"],
            "repairs": stats["repairs"],
        },
        "wall_time": wall,
        "welfare": res.welfare,
        "refutation": list(res.refutation),
        "profile": None,
    }
    if res.profile is not None:
        players = []
        for i, s in enumerate(res.profile.strategies):
            cert = res.certificates[i] if res.certificates else None
            players.append({
                "support": [{"point": x.tolist(), "prob": float(w)} for x, w in zip(s.points, s.probs)],
                "witness": list(s.witness) if s.witness else [],
                "expected_payoff": float(g.to_native(res.report.expected[i])),
                "regret": float(res.report.regrets[i]),
                "certificate_offset": float(cert.offset) if cert is not None else 0.0,
            })
        doc["profile"] = players
    return doc


def profile_from_doc(doc, g: Game) -> Profile:
    prof = doc.get("profile")
    if not isinstance(prof, list) or len(prof) != g.n:
        raise InstanceError("$.profile: expected one entry per player")
    strategies = []
    for i, entry in enumerate(prof):
        try:
            pts = [np.asarray(s["point"], dtype=float) for s in entry["support"]]
            probs = np.asarray([s["prob"] for s in entry["support"]], dtype=float)
            strategies.append(MixedStrategy(tuple(pts), probs))
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"$.profile[{i}]: {exc}") from None
    return Profile(tuple(strategies))


# --- subcommands ----------------------------------------------------------

def cmd_generate(args) -> int:
    if args.family == "knapsack":
        if args.n < 2 or args.m < 1:
            print("error: knapsack games need --n >= 2 and --m >= 1", file=sys.stderr)
            return EXIT_INPUT
        doc = generate_knapsack(args.n, args.m, args.seed)
    else:
        if args.name not in FIXTURES:
            print(f"error: unknown fixture {args.name!r}; choose from {sorted(FIXTURES)}", file=sys.stderr)
            return EXIT_INPUT
        doc = fixture_doc(args.name)
    _write(args.out, canonical_dumps(doc))
    return EXIT_OK


def _load(path):
    try:
        doc, g = load_instance(_read(path))
    except OSError as exc:
        raise InstanceError(f"{path}: {exc.strerror}") from None
    return doc, g


def _config(args) -> CnpConfig:
    backend = {"enum": "enumerate"}.get(args.backend, args.backend)
    return CnpConfig(eps=args.eps, time_limit=args.time_limit, objective=args.objective, cuts=args.cuts,
                     backend=backend, seed=args.seed)


def cmd_solve(args) -> int:
    try:
        doc, g = _load(args.instance)
    except (InstanceError, GameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = _config(args)
    try:
        res = cut_and_play(g, cfg)
    except CnpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = result_to_doc(res, g, content_hash(doc))
    _write(args.out, canonical_dumps(out))
    line = f"{res.outcome}: iterations={res.stats['iterations']} cuts={res.stats['cuts']}"
    if res.found:
        line += f" max_regret={res.report.max_regret:.3g} welfare={res.welfare:.17g}"
    if res.message:
        line += f" ({res.message})"
    print(line, file=sys.stderr)
    return OUTCOME_EXIT[res.outcome]


def cmd_verify(args) -> int:
    try:
        doc, g = _load(args.instance)
        try:
            rdoc = json.loads(_read(args.result))
        except (OSError, json.JSONDecodeError) as exc:
            raise InstanceError(f"{args.result}: {exc}") from None
        if not isinstance(rdoc, dict):
            raise InstanceError("$: result must be a JSON object")
        if rdoc.get("instance_sha256") != content_hash(doc):
            print("error: result was produced for a different instance (hash mismatch)", file=sys.stderr)
            return EXIT_INPUT
        if rdoc.get("outcome") != EQUILIBRIUM or rdoc.get("profile") is None:
            print(f"rejected: result outcome is {rdoc.get('outcome')!r}, no equilibrium to verify", file=sys.stderr)
            return EXIT_REJECTED
        eps = float(rdoc.get("eps", (rdoc.get("config") or {}).get("eps")))
        profile = profile_from_doc(rdoc, g)
    except (InstanceError, GameError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = oracle_verify(g, profile, eps) if args.oracle else verify_equilibrium(g, profile, eps)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    mode = "enumeration" if args.oracle else "optimization"
    if report.rejection:
        print(f"rejected ({mode}): {report.rejection}")
        return EXIT_REJECTED
    regrets = " ".join(f"{r:.3g}" for r in report.regrets)
    print(f"max_regret={report.max_regret:.17g} eps={eps:.17g} mode={mode} regrets=[{regrets}]")
    return EXIT_OK if report.is_equilibrium else EXIT_REJECTED


def shifted_geomean(times, shift: float = SGM_SHIFT) -> float:
    times = list(times)
    if not times:
        return float("nan")
    return math.exp(sum(math.log(t + shift) for t in times) / len(times)) - shift


def parse_config_spec(spec: str) -> CnpConfig:
    """``"F,0,lemke"`` style: objective mode, cut aggressiveness, backend."""
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 3:
        raise ValueError(f"config {spec!r}: expected OBJECTIVE,CUTS,BACKEND")
    backend = {"enum": "enumerate"}.get(parts[2], parts[2])
    return CnpConfig(objective=parts[0], cuts=int(parts[1]), backend=backend)


def _bench_one(task):
    path, label, cfg = task
    try:
        _, g = load_instance(_read(path))
        res = cut_and_play(g, cfg)
        return {"instance": os.path.basename(path), "config": label, "outcome": res.outcome,
                "time": res.stats["time"], "iterations": res.stats["iterations"], "cuts": res.stats["cuts"],
                "eso_cuts": res.stats["eso_cuts"], "value_cuts": res.stats["value_cuts"],
                "cover_cuts": res.stats["cover_cuts"], "branches": res.stats["branches"],
                "welfare": "" if res.welfare is None else res.welfare}
    except Exception as exc:  # recorded per instance; the batch continues
        return {"instance": os.path.basename(path), "config": label, "outcome": f"error: {exc}",
                "time": "", "iterations": "", "cuts": "", "eso_cuts": "", "value_cuts": "",
                "cover_cuts": "", "branches": "", "welfare": ""}


def run_bench(instance_dir: str, specs: List[str], time_limit: float = 300.0, jobs: int = 1):
    configs = []
    for spec in specs:
        cfg = parse_config_spec(spec)
        cfg.time_limit = time_limit
        configs.append((spec, cfg))
    paths = sorted(glob.glob(os.path.join(instance_dir, "*.json")))
    tasks = [(p, label, cfg) for p in paths for label, cfg in configs]
    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]
    summary = []
    if rows:
        for label, _ in configs:
            mine = [r for r in rows if r["config"] == label]
            times = [r["time"] for r in mine if r["time"] != ""]
            tl = sum(1 for r in mine if r["outcome"] == TIME_LIMIT)
            summary.append({"instance": "SGM", "config": label, "outcome": f"#TL={tl}",
                            "time": shifted_geomean(times), "iterations": "", "cuts": "", "eso_cuts": "",
                            "value_cuts": "", "cover_cuts": "", "branches": "", "welfare": ""})
    return rows, summary


def cmd_bench(args) -> int:
    if not os.path.isdir(args.instance_dir):
        print(f"error: {args.instance_dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    try:
        rows, summary = run_bench(args.instance_dir, args.config or ["F,0,lemke"], args.time_limit, args.jobs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    fh = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows + summary:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cutplay", description="Mixed equilibria of integer programming games.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an instance file")
    g.add_argument("--family", choices=["knapsack", "fixture"], default="knapsack")
    g.add_argument("--n", type=int, default=2, help="players")
    g.add_argument("--m", type=int, default=3, help="items per player")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", default="example4", help=f"fixture name: {', '.join(sorted(FIXTURES))}")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run Cut-and-Play on an instance")
    s.add_argument("instance")
    s.add_argument("--objective", choices=["F", "Q"], default="F")
    s.add_argument("--cuts", type=int, choices=[-1, 0, 1], default=0)
    s.add_argument("--backend", choices=["lemke", "enum", "enumerate"], default="lemke")
    s.add_argument("--eps", type=float, default=CnpConfig.eps)
    s.add_argument("--time-limit", type=float, default=CnpConfig.time_limit)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.add_argument("--log", default=None, help="also write the JSON-lines run log to this file")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a result against its instance")
    v.add_argument("instance")
    v.add_argument("result")
    v.add_argument("--oracle", action="store_true", help="use exhaustive enumeration instead of MILP")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="solve every instance in a directory under several configs")
    b.add_argument("instance_dir")
    b.add_argument("--config", action="append", help="OBJECTIVE,CUTS,BACKEND (repeatable), e.g. F,0,lemke")
    b.add_argument("--time-limit", type=float, default=CnpConfig.time_limit)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(getattr(args, "log", None))
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_TIME_LIMIT


if __name__ == "__main__":
    sys.exit(main())

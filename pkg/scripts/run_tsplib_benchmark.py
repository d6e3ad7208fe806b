"""Mini-max table on TSPLIB instances: greedy vs greedy with mini-max refinement.

    python3 scripts/run_tsplib_benchmark.py                    # every instance that is present
    python3 scripts/run_tsplib_benchmark.py --file tests/data/pcb442.tsp --ks 10,20,40

Reference means (benchmark.PUBLISHED_MINIMAX) are shown with a 3-sigma envelope; "!" marks a miss.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

from coldstart.benchmark import PUBLISHED_MINIMAX, envelope, run_benchmark
from coldstart.tsplib import find_instance, load_tsplib

DEFAULT_KS = {
    "u1060": (20, 40, 60, 80, 100),
    "sw24978": (25, 50, 75, 100),
    "bm33708": (25, 50, 75),
    "ch71009": (25, 50, 75, 100),
}


@dataclass
class Config:
    runs: int = 10
    seed: int = 0
    sigmas: float = 3.0


def table(inst, ks, cfg: Config) -> int:
    t0 = time.perf_counter()
    greedy = run_benchmark(inst, "greedy", ks, cfg.runs, cfg.seed)
    refined = run_benchmark(inst, "greedy-minimax", ks, cfg.runs, cfg.seed)
    outside = 0
    print(f"{inst.name} (N={inst.dimension}, {cfg.runs} runs, {time.perf_counter() - t0:.1f}s)")
    print(f"{'k':>5} {'greedy':>16} {'reference':>12} {'refined':>16} {'reference':>12}")
    for g, m in zip(greedy, refined):
        ref = PUBLISHED_MINIMAX.get((inst.name, g.k))
        cols = []
        for rep, (mean, std) in ((g, ref[1:3] if ref else (None, None)), (m, ref[3:5] if ref else (None, None))):
            cols.append(f"{rep.mean:9.1f}±{rep.std:<6.1f}")
            if mean is None:
                cols.append(f"{'-':>12}")
                continue
            lo, hi = envelope(mean, std, cfg.sigmas)
            ok = lo <= rep.mean <= hi
            outside += not ok
            cols.append(f"{mean:>6}±{std:<3}{'' if ok else '!':1}")
        print(f"{g.k:>5} " + " ".join(cols))
    return outside


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--file", help="a single .tsp file instead of the named instances")
    ap.add_argument("--ks", help="comma-separated k values")
    ap.add_argument("--runs", type=int, default=Config.runs)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args(argv)
    cfg = Config(args.runs, args.seed)
    ks = [int(k) for k in args.ks.split(",")] if args.ks else None
    if args.file:
        inst = load_tsplib(args.file)
        table(inst, ks or DEFAULT_KS.get(inst.name, (10, 20, 40)), cfg)
        return 0
    outside, found = 0, 0
    for name, default in DEFAULT_KS.items():
        try:
            inst = load_tsplib(find_instance(name))
        except FileNotFoundError as exc:
            print(f"skipping {name}: {exc}", file=sys.stderr)
            continue
        found += 1
        outside += table(inst, ks or default, cfg)
        print()
    if not found:
        return 1
    print(f"{outside} mean(s) outside the {cfg.sigmas:g}-sigma envelope")
    return int(outside > 0)


if __name__ == "__main__":
    sys.exit(main())

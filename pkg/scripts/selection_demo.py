"""Greedy, refined and k-medoids selections on a bundled TSPLIB instance.

Writes a scatter plot when matplotlib is available, otherwise prints objectives only.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from coldstart.metricspace import evaluate
from coldstart.selectors import select
from coldstart.tsplib import instance_to_pointset, load_tsplib

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--file", default=str(ROOT / "tests" / "data" / "pcb442.tsp"))
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plot", help="output image path, e.g. selection.png")
    args = ap.parse_args(argv)
    P = instance_to_pointset(load_tsplib(args.file))
    picks = {}
    for method in ("greedy", "greedy-minimax", "greedy-maximin", "kmedoids", "random"):
        sel = select(P, method, args.n, "euclidean", args.seed)
        obj = evaluate(P, sel.indices)
        picks[method] = sel.indices
        print(f"{method:<16} mini-max {obj.phi_mM:10.2f}  maxi-min {obj.phi_Mm:10.2f}  k-medoids {obj.phi_kmedoids:12.1f}")
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, len(picks), figsize=(4 * len(picks), 4), sharex=True, sharey=True)
        for ax, (method, idx) in zip(axes, picks.items()):
            ax.scatter(*P.points.T, s=3, c="0.7")
            ax.scatter(*P.points[list(idx)].T, s=20, c="C3")
            ax.set_title(method)
            ax.set_aspect("equal")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()

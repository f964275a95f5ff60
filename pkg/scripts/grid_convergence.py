"""Trace differences between successive grid refinements for each preset.

For one point source on the measurement circle, prints the relative
2-norm change of the scattered trace when n doubles.
"""

import argparse

import numpy as np

from nearfield_dsm.forward import ScatteringProblem, SolverOptions
from nearfield_dsm.media import preset_medium
from nearfield_dsm.specfun import WaveContext
from nearfield_dsm.synth import build_circle


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    p.add_argument("--contrast", default="Q1q1")
    p.add_argument("--source", type=int, default=0, help="index of the source node")
    args = p.parse_args()

    ctx = WaveContext(8.0)
    circle = build_circle(3.0, 100)
    y = circle.nodes[args.source]
    for variant in ("one_scatterer", "two_scatterers", "three_scatterers"):
        medium = preset_medium(variant, args.contrast)
        traces = []
        for n in args.sizes:
            problem = ScatteringProblem(medium, ctx, SolverOptions(n=n))
            inc, _ = problem.point_source(y)
            sol = problem.solve(inc)
            traces.append(problem.cauchy_from_density(sol.density, circle).us)
        ref = np.linalg.norm(traces[-1])
        steps = [np.linalg.norm(b - a) / ref for a, b in zip(traces, traces[1:])]
        print(variant, " ".join(f"{n}->{2 * n}: {s:.2e}" for n, s in zip(args.sizes, steps)))


if __name__ == "__main__":
    main()

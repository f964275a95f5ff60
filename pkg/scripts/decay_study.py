"""Indicator profiles along a ray leaving a small disk at the origin.

Prints the log-log slope of the local maxima of I_FF and I_CD over
t in [t_fit, t_max] and optionally writes the profiles as CSV.
"""

import argparse

import numpy as np
from scipy.signal import argrelmax

from nearfield_dsm.forward import SolverOptions
from nearfield_dsm.imaging import build_fft, i_cd, i_ff
from nearfield_dsm.media import Component, Medium, Shape
from nearfield_dsm.specfun import WaveContext
from nearfield_dsm.synth import build_circle, generate_data


def envelope_slope(t, values, t_fit):
    peaks = argrelmax(values)[0]
    peaks = peaks[t[peaks] >= t_fit]
    return np.polyfit(np.log(t[peaks]), np.log(values[peaks]), 1)[0], t[peaks]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--radius", type=float, nargs="+", default=[0.1, 0.2, 0.3])
    p.add_argument("--q", type=float, default=0.3)
    p.add_argument("--k", type=float, default=8.0)
    p.add_argument("--rho", type=float, default=2.0)
    p.add_argument("--t-fit", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=2.5)
    p.add_argument("--csv", help="write t, I_FF, I_CD per radius to this prefix")
    args = p.parse_args()

    ctx = WaveContext(args.k)
    circle = build_circle(3.0, 100)
    fft = build_fft(ctx, 3.0, 20, 100)
    t = np.linspace(0.75, args.t_max, 701)
    z = np.stack([t, np.zeros_like(t)], axis=1)
    print("radius slope_ff slope_cd")
    for r in args.radius:
        medium = Medium([Component(Shape.disk((0.0, 0.0), r), args.q, np.zeros((2, 2)))])
        data = generate_data(medium, ctx, circle, SolverOptions())
        ff, cd = i_ff(z, data, fft), i_cd(z, data, args.rho)
        s_ff, _ = envelope_slope(t, ff, args.t_fit)
        s_cd, _ = envelope_slope(t, cd, args.t_fit)
        print(f"{r:.3f} {s_ff:.3f} {s_cd:.3f}")
        if args.csv:
            np.savetxt(f"{args.csv}_r{r:g}.csv", np.column_stack([t, ff, cd]), delimiter=",",
                       header="t,i_ff,i_cd", comments="")


if __name__ == "__main__":
    main()

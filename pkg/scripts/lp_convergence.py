"""LP objective for the homological mechanical problem over grid size and velocity count.

Writes lp_convergence.csv (N, velocities, K, objective, residuals, atoms, seconds).
"""

import argparse
import time

from holonomic import io
from holonomic.lagrangians import Mechanical
from holonomic.optimize import assemble, solve, unit_velocities


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="lp_convergence.csv")
    ap.add_argument("--grids", default="4,6,8,12")
    ap.add_argument("--velocities", default="8,16,32")
    ap.add_argument("--K", type=int, default=2)
    args = ap.parse_args()
    rows = []
    for N in map(int, args.grids.split(",")):
        for count in map(int, args.velocities.split(",")):
            t0 = time.perf_counter()
            lp = assemble(2, 1, N, unit_velocities(count), Mechanical(), args.K, homology_target=(1.0, 0.0))
            sol = solve(lp)
            dt = time.perf_counter() - t0
            rows.append([N, count, args.K, sol.objective, sol.holonomy_residual, sol.probability_residual, len(sol.measure), dt])
            print(f"N={N:3d} V={count:3d} objective {sol.objective:.10f} atoms {len(sol.measure)} ({dt:.2f} s)")
    header = ["N", "velocities", "K", "objective", "holonomy_residual", "probability_residual", "atoms", "seconds"]
    io.write_csv(args.out, header, rows)


if __name__ == "__main__":
    main()

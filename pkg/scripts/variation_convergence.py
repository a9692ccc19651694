"""Difference-quotient error against step size for the three variation kinds on the corner measure.

Writes variation_convergence.csv (kind, family, function, step, error, order).
"""

import argparse

import numpy as np

from holonomic import io
from holonomic.functions import GaussianBump
from holonomic.measures import corner_measure
from holonomic.variations import TrigVectorField, derivative_check, horizontal, project_out, transpositional, vertical


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="variation_convergence.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--families", type=int, default=5)
    ap.add_argument("--one-sided", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    mu = corner_measure(64)
    steps = np.geomspace(0.02, 1e-4, 9)
    tests = [GaussianBump(rng.random(2), rng.standard_normal((1, 2)), 0.8) for _ in range(3)]
    rows = []
    for k in range(args.families):
        fams = {
            "horizontal": horizontal(mu, TrigVectorField.random(2, 1, rng)),
            "vertical": vertical(mu, project_out(mu, rng.standard_normal(mu.v.shape), 3)),
            "transpositional": transpositional(mu, TrigVectorField.random(2, 2, rng).components[0].coefficient((), mu.x)),
        }
        for kind, fam in fams.items():
            for j, f in enumerate(tests):
                rep = derivative_check(fam, f, steps, args.one_sided)
                rows += [[kind, k, j, float(t), float(e), rep.order] for t, e in zip(rep.steps, rep.errors)]
                print(f"{kind:16s} family {k} function {j}: order {rep.order:.3f}")
    io.write_csv(args.out, ["kind", "family", "function", "step", "error", "order"], rows, seed=args.seed)


if __name__ == "__main__":
    main()

"""Regenerate the Gauss rules for the weight psi(x) = exp(-1/(1-x^2)) / mass.

Moments are computed in 120-digit arithmetic and turned into nodes/weights by
Cholesky of the Hankel matrix (Golub-Welsch). Output: src/holonomic/data/mollifier_rules.json
"""

import json
from pathlib import Path

import mpmath

mpmath.mp.dps = 120
MAX_Q = 32


def psi(x):
    return mpmath.exp(-1 / (1 - x * x))


def main():
    mass = mpmath.quad(psi, [-1, -0.5, 0, 0.5, 1])
    moments = [
        mpmath.quad(lambda x, k=k: x**k * psi(x), [-1, -0.5, 0, 0.5, 1]) / mass
        for k in range(2 * MAX_Q + 1)
    ]
    rules = {"mass": mpmath.nstr(mass, 25), "rules": {}}
    for q in range(1, MAX_Q + 1):
        H = mpmath.matrix(q + 1, q + 1)
        for i in range(q + 1):
            for j in range(q + 1):
                H[i, j] = moments[i + j]
        R = mpmath.cholesky(H).T
        a = [R[j, j + 1] / R[j, j] - (R[j - 1, j] / R[j - 1, j - 1] if j else 0) for j in range(q)]
        b = [R[j + 1, j + 1] / R[j, j] for j in range(q - 1)]
        J = mpmath.matrix(q, q)
        for j in range(q):
            J[j, j] = a[j]
            if j < q - 1:
                J[j, j + 1] = J[j + 1, j] = b[j]
        E, Q = mpmath.eigsy(J)
        pairs = sorted((E[i], Q[0, i] ** 2) for i in range(q))
        rules["rules"][str(q)] = {
            "nodes": [float(p[0]) for p in pairs],
            "weights": [float(p[1]) for p in pairs],
        }
    out = Path(__file__).resolve().parents[1] / "src" / "holonomic" / "data" / "mollifier_rules.json"
    out.write_text(json.dumps(rules, indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

"""Command-line front end: ``holonomic <command> [--config PATH] [--out DIR] [--seed N] [--tol X]``.

Exit status 0 on success, 1 when a verification fails, 2 on input or config
errors (a JSON error record goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io
from .analysis import component_constants, hj_residual, weak_kam_fit
from .distributions import check_hol, check_prob, pair
from .functions import GaussianBump
from .lagrangians import Length, NonDifferentiableError, energy_defect
from .measures import corner_measure, line_measure
from .optimize import Generator, LPError, assemble, criticality_scan, generator_battery, solve
from .scenarios import lagrangian_from_config, transport_recovery, velocity_set
from .stencils import StencilError, stencil
from .variations import (
    TrigVectorField,
    corner_distribution,
    derivative_check,
    horizontal,
    project_out,
    transpositional,
    vertical,
)

DEFAULTS = {
    "seed": 0,
    "tol": 1e-6,
    "lagrangian": {"name": "mechanical"},
    "grid": {"d": 2, "n": 1, "N": 8, "K": 2, "velocities": {"unit": 16}, "homology": [1.0, 0.0], "method": "highs"},
    "measure": {"fixture": "line", "N": 64},
    "battery": {"count": 20, "field_K": 1, "homological": True, "corner": False},
    "variation": {"kind": "horizontal", "field_K": 1, "steps": [0.001, 0.0005, 0.00025, 0.000125], "functions": 10, "min_order": 1.9, "min_order_one_sided": 0.9},
    "weak_kam": {"K": 2, "mode": "closed"},
    "energy": {"radius": None, "slot": 0},
    "transport": {"m": 16, "direction": [1.0, 0.0], "degree": 2},
}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        user = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a mapping")
    for k, val in user.items():
        if isinstance(val, dict) and isinstance(cfg.get(k), dict):
            cfg[k].update(val)
        else:
            cfg[k] = val
    return cfg


def load_measure(spec: dict, base: Path | None = None):
    if "file" in spec:
        p = Path(spec["file"])
        if base is not None and not p.is_absolute():
            p = base / p
        if not p.exists():
            raise ConfigError(f"measure file not found: {p}")
        obj = io.read_json(p)
        return io.measure_from_json(obj), int(obj.get("K", 0))
    kind = spec.get("fixture")
    if kind == "corner":
        return corner_measure(int(spec.get("N", 64))), 3
    if kind == "line":
        return line_measure(int(spec.get("N", 64)), float(spec.get("offset", 0.0)), float(spec.get("speed", 1.0))), 3
    raise ConfigError(f"measure needs 'file' or fixture corner|line, got {spec!r}")


def _out(args) -> Path:
    out = Path(args.out or args.default_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------- commands


def cmd_minimize(args, cfg) -> int:
    g = cfg["grid"]
    d, n = int(g["d"]), int(g["n"])
    L = lagrangian_from_config(cfg["lagrangian"], d)
    lp = assemble(d, n, int(g["N"]), velocity_set(g["velocities"], d, n), L, int(g["K"]), g.get("homology"))
    sol = solve(lp, g.get("method", "highs"))
    out = _out(args)
    io.write_json(out / "measure.json", io.measure_to_json(sol.measure, K=lp.K, seed=args.seed))
    io.write_measure_csv(out / "measure.csv", sol.measure, seed=args.seed)
    if g.get("dump_tableau"):
        (out / "lp_tableau.txt").write_text(lp.tableau())
    io.write_csv(
        out / "summary.csv",
        ["objective", "holonomy_residual", "probability_residual", "homology_residual", "iterations", "atoms"],
        [[sol.objective, sol.holonomy_residual, sol.probability_residual, sol.homology_residual, sol.iterations, len(sol.measure)]],
        seed=args.seed,
    )
    print(f"objective {sol.objective:.12g}")
    print(f"holonomy residual {sol.holonomy_residual:.3e}, probability residual {sol.probability_residual:.3e}")
    ok = sol.holonomy_residual <= 1e-8 and sol.probability_residual <= 1e-10 and sol.homology_residual <= 1e-8
    return 0 if ok else 1


def cmd_check_critical(args, cfg) -> int:
    mu, K = load_measure(cfg["measure"], Path(args.config).parent if args.config else None)
    L = lagrangian_from_config(cfg["lagrangian"], mu.d)
    b = cfg["battery"]
    rng = np.random.default_rng(args.seed)
    K = int(b.get("K", K))
    field_K = int(b.get("field_K", 1))
    gens = generator_battery(mu, rng, int(b["count"]), K, bool(b["homological"]), field_K)
    if b.get("corner"):
        gens.append(Generator(corner_distribution(), False, "corner"))
    report = criticality_scan(mu, L, gens, tau=args.tol, K=max(K - field_K, 0), homological=bool(b["homological"]))
    io.write_json(_out(args) / "criticality.json", {"seed": args.seed, **report.to_json()})
    print("critical" if report.critical else f"not critical, witness {report.witness[0]} value {report.witness[1]:.12g}")
    return 0 if report.critical else 1


def _test_battery(mu, rng, count: int):
    out = []
    for _ in range(count):
        X = TrigVectorField.random(mu.d, 2, rng)
        v0 = rng.standard_normal((mu.n, mu.d))
        out.append(X.components[0] + GaussianBump(rng.random(mu.d), v0, 1.0))
    return out


def cmd_variation(args, cfg) -> int:
    mu, K = load_measure(cfg["measure"], Path(args.config).parent if args.config else None)
    vc = cfg["variation"]
    rng = np.random.default_rng(args.seed)
    kind = vc["kind"]
    one_sided = bool(vc.get("one_sided", False))
    if kind == "horizontal":
        fam = horizontal(mu, TrigVectorField.random(mu.d, int(vc.get("field_K", 1)), rng))
    elif kind == "vertical":
        fam = vertical(mu, project_out(mu, rng.standard_normal(mu.v.shape), K))
    elif kind == "transpositional":
        X = TrigVectorField.random(mu.d, 2, rng)
        fam = transpositional(mu, X.components[0].coefficient((), mu.x), int(vc.get("slot", 0)))
    else:
        raise ConfigError(f"unknown variation kind {kind!r}")
    tests = _test_battery(mu, rng, int(vc["functions"]))
    rows, ok = [], True
    min_order = float(vc["min_order_one_sided"] if one_sided else vc["min_order"])
    for k, f in enumerate(tests):
        rep = derivative_check(fam, f, vc["steps"], one_sided)
        ok &= rep.converged(min_order)
        for t, est, err in zip(rep.steps, rep.estimates, rep.errors):
            rows.append([k, float(t), float(est), float(rep.target), float(err), float(rep.order)])
    io.write_csv(_out(args) / "convergence.csv", ["function", "step", "estimate", "target", "error", "order"], rows, seed=args.seed)
    hol = check_hol(fam.distribution, max(K - 1, 0) if kind == "horizontal" else K)
    prob = check_prob(fam.distribution)
    print(f"{kind}: prob {prob.value:.2e}, hol {hol.value:.2e}, converged {ok}")
    return 0 if ok and hol and prob else 1


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_stencil(args, cfg) -> int:
    if args.index is None or args.nodes is None:
        raise ConfigError("stencil needs --index and --nodes")
    index = [int(t) for t in args.index.split(",")]
    if len(index) == 1:
        nodes = np.array(_floats(args.nodes))[:, None]
    else:
        nodes = np.array([_floats(p) for p in args.nodes.split(";")])
    weights = stencil(index, nodes, h=args.h)
    print(",".join(f"{w:.12g}" for w in weights))
    if args.out:
        io.write_csv(_out(args) / "stencil.csv", ["node", "weight"], [[";".join(map(repr, p)), float(w)] for p, w in zip(nodes.tolist(), weights)])
    return 0


def cmd_energy(args, cfg) -> int:
    mu, _ = load_measure(cfg["measure"], Path(args.config).parent if args.config else None)
    L = lagrangian_from_config(cfg["lagrangian"], mu.d)
    e = cfg["energy"]
    slot = int(e.get("slot", 0))
    defect = energy_defect(L, mu, slot)
    comps = component_constants(mu, L, e.get("radius"))
    io.write_csv(
        _out(args) / "energy.csv",
        ["atom", "defect", "component", "constant", "variance"],
        [[a, float(defect[a]), int(c), float(comps.constants[c, slot]), float(comps.variances[c, slot])] for a, c in enumerate(comps.labels)],
        seed=args.seed,
    )
    for c, (const, var) in enumerate(zip(comps.constants[:, slot], comps.variances[:, slot])):
        print(f"component {c}: constant {const:.12g} variance {var:.3e}")
    return 0 if comps.passed(args.tol) else 1


def cmd_weak_kam(args, cfg) -> int:
    mu, _ = load_measure(cfg["measure"], Path(args.config).parent if args.config else None)
    L = lagrangian_from_config(cfg["lagrangian"], mu.d)
    w = cfg["weak_kam"]
    fit = weak_kam_fit(mu, L, int(w["K"]), w["mode"])
    hj = hj_residual(mu, L, fit)
    out = _out(args)
    io.write_csv(out / "fit.csv", ["basis", "coefficient"], fit.rows(), seed=args.seed)
    io.write_csv(out / "hj.csv", ["atom", "residual"], [[a, float(r)] for a, r in enumerate(hj.values)], seed=args.seed)
    io.write_json(out / "fit.json", {"seed": args.seed, "mode": fit.mode, "K": fit.K, "residual": fit.residual, "hj_mean": hj.mean, "hj_variance": hj.variance})
    print(f"fit residual {fit.residual:.3e}, hj variance {hj.variance:.3e}")
    return 0 if hj.variance <= args.tol else 1


def cmd_transport(args, cfg) -> int:
    t = cfg["transport"]
    mu, tf = transport_recovery(int(t["m"]), t["direction"], int(t["degree"]), args.tol)
    io.write_csv(
        _out(args) / "transport.csv",
        [f"x{k}" for k in range(mu.d)] + [f"u{k}" for k in range(tf.field.shape[1])],
        [list(map(float, x)) + list(map(float, u)) for x, u in zip(mu.x, tf.field)],
        seed=args.seed,
    )
    err = float(np.max(np.abs(tf.field[:, : mu.d] - np.asarray(t["direction"], dtype=float))))
    print(f"max deviation from the translation field {err:.3e}, residual {tf.residual:.3e}")
    return 0 if tf.passed and err <= args.tol else 1


def cmd_corner_demo(args, cfg) -> int:
    mu = corner_measure(64)
    eta = corner_distribution()
    value = pair(eta, Length())
    report = criticality_scan(mu, Length(), [Generator(eta, False, "corner")], tau=args.tol)
    print(f"pairing {value:g}")
    print("critical" if report.critical else "not critical")
    if args.out:
        io.write_json(_out(args) / "corner.json", {"seed": args.seed, "pairing": value, **report.to_json()})
    return 0 if not report.critical and abs(value + 2.0) <= 1e-12 else 1


COMMANDS = {
    "minimize": cmd_minimize,
    "check-critical": cmd_check_critical,
    "variation": cmd_variation,
    "stencil": cmd_stencil,
    "energy": cmd_energy,
    "weak-kam": cmd_weak_kam,
    "transport": cmd_transport,
    "corner-demo": cmd_corner_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    common.add_argument("--tol", type=float, default=None, help="verification tolerance (overrides config)")
    parser = argparse.ArgumentParser(prog="holonomic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "stencil":
            p.add_argument("--index", help="derivative multi-index, comma separated")
            p.add_argument("--nodes", help="1-D: comma separated; n-D: points separated by ';'")
            p.add_argument("--h", type=float, default=1.0, help="node spacing")
    return parser


def _fail(kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = int(cfg["seed"])
        if args.tol is None:
            args.tol = float(cfg["tol"])
        args.default_out = cfg.get("out", "out")
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, io.ValidationError, StencilError, NonDifferentiableError, KeyError, TypeError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc))
    except LPError as exc:
        cert = None if exc.certificate is None else exc.certificate.tolist()
        print(json.dumps({"error": "LPError", "status": exc.status, "certificate": cert}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

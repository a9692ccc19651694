import numpy as np
import pytest

from holonomic import lp as simplex_backend
from holonomic.distributions import MildDistribution
from holonomic.lagrangians import Length, Mechanical
from holonomic.measures import Cell, corner_measure, line_measure
from holonomic.geometry import FourierForm
from holonomic.optimize import (
    Generator,
    LPError,
    assemble,
    criticality_scan,
    el_residual,
    generator_battery,
    solve,
    unit_velocities,
)
from holonomic.scenarios import homological_mechanical, sinusoid_cell, straight_cell
from holonomic.variations import corner_distribution


def test_unit_velocities():
    v = unit_velocities(16)
    assert v.shape == (16, 1, 2)
    assert np.allclose(np.linalg.norm(v[:, 0], axis=1), 1.0)
    assert np.array_equal(v[0, 0], [1.0, 0.0])


def test_assemble_shapes():
    lp = assemble(2, 1, 4, unit_velocities(16), Mechanical(), 1)
    assert len(lp) == 256
    assert lp.labels == ("prob",) + tuple(f"hol{b}" for b in range(8))
    assert lp.A.shape == (9, 256)
    assert assemble(2, 1, 4, unit_velocities(16), Mechanical(), 0).A.shape == (1, 256)
    lp = assemble(2, 1, 4, unit_velocities(16), Mechanical(), 1, homology_target=(1.0, 0.0))
    assert lp.labels[-2:] == ("hom0", "hom1")


def test_assemble_rejects_bad_input():
    with pytest.raises(ValueError):
        assemble(2, 1, 4, unit_velocities(16)[:3], Mechanical(), 1)
    with pytest.raises(ValueError):
        assemble(2, 1, 4, unit_velocities(4), Mechanical(), -1)
    with pytest.raises(ValueError):
        assemble(2, 1, 4, unit_velocities(4), Mechanical(), 1, homology_target=(1.0,))


def test_one_dimensional_lps():
    vel = [[1.0], [-1.0]]
    assert solve(assemble(1, 1, 6, vel, Mechanical(), 2, homology_target=(1.0,))).objective == pytest.approx(0.5)
    assert solve(assemble(1, 1, 6, vel, Mechanical(), 2, homology_target=(0.0,))).objective == pytest.approx(0.5)
    assert solve(assemble(1, 1, 6, vel, Length(), 2)).objective == pytest.approx(1.0)


def test_reference_simplex_agrees_with_highs():
    lp = assemble(2, 1, 4, unit_velocities(8), Mechanical(), 1, homology_target=(1.0, 0.0))
    a, b = solve(lp, "highs"), solve(lp, "bland")
    assert a.objective == pytest.approx(b.objective, abs=1e-9)
    assert b.holonomy_residual <= 1e-9 and b.probability_residual <= 1e-10


def test_objective_nonincreasing_as_constraints_drop():
    objs = [
        solve(assemble(2, 1, 4, unit_velocities(8), Mechanical(), K, homology_target=(0.5, 0.5))).objective
        for K in (0, 1, 2, 3)
    ]
    assert all(a <= b + 1e-10 for a, b in zip(objs, objs[1:]))


def test_homological_reference_problem():
    _, sol = homological_mechanical()
    assert sol.objective == pytest.approx(0.5, rel=0.05)
    assert sol.holonomy_residual <= 1e-8
    assert sol.probability_residual <= 1e-10
    assert sol.homology_residual <= 1e-8


def test_infeasible_certificate():
    lp = assemble(2, 1, 4, unit_velocities(8), Mechanical(), 1, homology_target=(2.0, 0.0))
    with pytest.raises(LPError) as info:
        solve(lp)
    y = info.value.certificate
    assert info.value.status == "infeasible"
    assert np.max(lp.A.T @ y) <= 1e-9
    assert lp.b @ y > 0.5


def test_unbounded_ray():
    c, A, b = np.array([-1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0])
    res = simplex_backend.simplex(c, A, b)
    assert res.status == "unbounded"
    r = res.certificate
    assert np.all(r >= 0) and np.allclose(A @ r, 0) and c @ r < 0


def test_tableau_dump():
    lp = assemble(1, 1, 2, [[1.0], [-1.0]], Mechanical(), 1)
    text = lp.tableau().splitlines()
    assert text[0] == "# variables 4 rows 3 K 1"
    assert text[1] == "obj 0.5 0.5 0.5 0.5"
    assert text[2] == "prob 1 1 1 1 = 1"
    assert len(text) == 5


def test_corner_is_not_critical():
    report = criticality_scan(corner_measure(64), Length(), [Generator(corner_distribution(), False, "corner")])
    assert not report.critical
    label, value = report.witness
    assert label == "corner" and value == pytest.approx(-2.0, abs=1e-12)


def test_zero_generator_pairs_to_zero():
    report = criticality_scan(line_measure(16), Mechanical(), [Generator(MildDistribution.zero(2, 1))])
    assert report.values.tolist() == [0.0]
    assert report.critical


def test_line_is_critical_for_the_battery(rng):
    mu = line_measure(64, 0.3)
    gens = generator_battery(mu, rng, count=20, K=3, homological=True)
    report = criticality_scan(mu, Mechanical(), gens, tau=1e-6, K=3, homological=True)
    assert report.critical
    assert len(report.labels) >= 40


def test_one_sided_generator_uses_sign():
    eta = corner_distribution()
    report = criticality_scan(corner_measure(64), Length(), [Generator(eta.scale(-1.0), True, "flip")])
    assert report.values[0] == pytest.approx(2.0)
    assert report.critical


def test_el_residual_straight_line():
    assert el_residual(straight_cell(50, 0.3, 0.25), Mechanical()).sup <= 1e-8


def test_el_residual_sinusoid():
    a = 0.1
    res = el_residual(sinusoid_cell(a, 400), Mechanical())
    assert res.sup == pytest.approx(a * (2 * np.pi) ** 2, rel=0.02)


def test_el_residual_potential_force():
    eps = 0.01
    V = FourierForm(2, 0, {((), (1, 0), "cos"): eps})
    res = el_residual(straight_cell(200, 0.3), Mechanical(V))
    assert res.sup == pytest.approx(2 * np.pi * eps, rel=0.01)


def test_el_residual_needs_three_samples():
    with pytest.raises(ValueError):
        el_residual(Cell(np.zeros((2, 2))), Mechanical())


def test_lp_output_critical_at_ten_times_solver_tolerance(rng):
    _, sol = homological_mechanical()
    gens = generator_battery(sol.measure, rng, count=10, K=2, homological=True)
    report = criticality_scan(sol.measure, Mechanical(), gens, tau=1e-9, K=1, homological=True)
    assert report.critical and not report.excluded

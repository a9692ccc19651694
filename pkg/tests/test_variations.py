import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomic.distributions import MildDistribution, check_hol, check_hom, check_prob, pair
from holonomic.functions import Constant, FunctionOf, GaussianBump
from holonomic.geometry import FourierForm, exterior_derivative, trig_basis
from holonomic.lagrangians import Length, Mechanical
from holonomic.measures import AtomicMeasure, corner_measure, homology_class, integrate, line_measure
from holonomic.variations import (
    TrigVectorField,
    corner_distribution,
    derivative_check,
    fiber_gradient_basis,
    horizontal,
    point_variation,
    project_out,
    transpositional,
    vertical,
)


def random_zero_form(rng, d=2, K=2):
    return FourierForm(d, 0, {((), m, p): rng.standard_normal() for m, p in trig_basis(d, K)})


def test_battery(rng, count):
    """Mixed smooth test functions: forms, bumps and Lagrangian-like terms."""
    out = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            out.append(exterior_derivative(random_zero_form(rng)) + FourierForm.monomial(2, (0,), (1, 1), "cos", rng.standard_normal()))
        elif kind == 1:
            out.append(GaussianBump(rng.random(2), rng.standard_normal((1, 2)), 0.8))
        else:
            out.append(random_zero_form(rng, K=1) + Mechanical(random_zero_form(rng, K=1)))
    return out


test_battery.__test__ = False


# ---------------------------------------------------------------- horizontal


def test_horizontal_zero_field():
    mu = corner_measure(16)
    fam = horizontal(mu, TrigVectorField.constant([0.0, 0.0]))
    assert fam.distribution.terms == ()
    assert np.allclose(fam(0.3).x, mu.x) and np.allclose(fam(0.3).v, mu.v)


def test_horizontal_single_atom_fiber_independent_f(rng):
    mu = AtomicMeasure.dirac([0.2, 0.7], [[0.5, -1.0]])
    X = TrigVectorField.random(2, 1, rng)
    f = random_zero_form(rng)
    expected = f.base_gradient(mu.x)[0] @ X(mu.x)[0]
    assert pair(horizontal(mu, X).distribution, f) == pytest.approx(expected, abs=1e-12)


def test_horizontal_constant_field_is_translation(rng):
    mu = AtomicMeasure.dirac([0.2, 0.7], [[0.5, -1.0]])
    fam = horizontal(mu, TrigVectorField.constant([0.3, -0.1]))
    assert np.allclose(fam(0.5).x, [[0.35, 0.65]])
    assert np.allclose(fam(0.5).v, mu.v)


def test_horizontal_corner_sine_field():
    mu = corner_measure(64)
    X = TrigVectorField((FourierForm.monomial(2, (), (0, 1), "sin"), FourierForm.constant(2, (), 0.0)))
    fam = horizontal(mu, X)
    assert check_hol(fam.distribution, K=3, tol=1e-10)
    # oracle: the family, integrated against a smooth form, by central differences
    f = GaussianBump(np.array([0.1, 0.3]), np.array([[1.0, 0.2]]), 0.6)
    rep = derivative_check(fam, f)
    assert np.max(rep.errors) > 1e-10
    assert rep.order >= 1.9


def test_horizontal_flow_preserves_homology(rng):
    mu = corner_measure(32)
    fam = horizontal(mu, TrigVectorField.random(2, 1, rng))
    for t in (0.05, -0.1, 0.2):
        assert np.allclose(homology_class(fam(t)), homology_class(mu), atol=1e-8)


def test_horizontal_flow_against_scipy(rng):
    from scipy.integrate import solve_ivp

    mu = AtomicMeasure.dirac([0.3, 0.1], [[1.0, 0.5]])
    X = TrigVectorField.random(2, 1, rng)

    def rhs(t, y):
        x, J = y[:2], y[2:].reshape(2, 2)
        return np.concatenate([X(x[None])[0], (X.jacobian(x[None])[0] @ J).ravel()])

    sol = solve_ivp(rhs, (0, 0.2), np.concatenate([mu.x[0], np.eye(2).ravel()]), rtol=1e-12, atol=1e-12)
    x, J = sol.y[:2, -1], sol.y[2:, -1].reshape(2, 2)
    out = horizontal(mu, X)(0.2)
    assert np.allclose(out.x[0], x % 1.0, atol=1e-10)
    assert np.allclose(out.v[0, 0], J @ mu.v[0, 0], atol=1e-10)


# ------------------------------------------------------------------ vertical


def test_vertical_zero():
    mu = corner_measure(8)
    assert vertical(mu, np.zeros(2)).distribution.terms == ()


def test_vertical_reproduces_corner_distribution():
    mu = corner_measure(64)
    origin = np.all(mu.x == 0.0, axis=1)
    u = np.zeros(mu.v.shape)
    first = origin & (mu.v[:, 0, 0] == 1.0)
    second = origin & (mu.v[:, 0, 1] == 1.0)
    u[first, 0] = [-1.0, 1.0]
    u[second, 0] = [1.0, -1.0]
    eta = vertical(mu, u).distribution
    # each origin atom has weight 1/128 in a probability of total weight 1
    assert pair(eta, Length()) == pytest.approx(-2.0 / 128, abs=1e-14)
    pair_only = mu.restrict(origin).with_weights([1.0, 1.0])
    eta2 = vertical(pair_only, u[origin]).distribution
    assert pair(eta2, Length()) == pytest.approx(-2.0, abs=1e-12)
    assert pair(eta2, Length()) == pytest.approx(pair(corner_distribution(), Length()), abs=1e-12)


def test_vertical_along_exact_gradient(rng):
    mu = corner_measure(32)
    w = random_zero_form(rng)
    dw = exterior_derivative(w)
    g = dw.fiber_gradient(mu.x, mu.v)
    eta = vertical(mu, g).distribution
    oracle = float(np.sum(mu.w * np.sum(g**2, axis=(1, 2))))
    assert pair(eta, dw) == pytest.approx(oracle, rel=1e-12)
    assert oracle > 0


def test_vertical_hol_iff_projection_small(rng):
    mu = corner_measure(32)
    u = rng.standard_normal(mu.v.shape)
    assert not check_hol(vertical(mu, u).distribution, K=2)
    assert check_hol(vertical(mu, project_out(mu, u, 2)).distribution, K=2, tol=1e-10)
    # and the projected part is orthogonal to every basis gradient
    up = project_out(mu, u, 2)
    for b in fiber_gradient_basis(mu, 2):
        assert abs(np.sum(mu.w[:, None, None] * b * up)) <= 1e-12


def test_vertical_homological_projection(rng):
    mu = corner_measure(32)
    up = project_out(mu, rng.standard_normal(mu.v.shape), 2, homological=True)
    assert check_hom(vertical(mu, up).distribution, tol=1e-10)


def test_vertical_affine_case_exact(rng):
    mu = corner_measure(16)
    fam = vertical(mu, np.array([[0.3, -0.2]]))
    f = FunctionOf(lambda x, v: 2.0 * v[:, 0, 0] - v[:, 0, 1] + np.cos(2 * np.pi * x[:, 0]))
    rep = derivative_check(fam, f, steps=(0.5, 0.1, 0.01))
    assert np.max(rep.errors) <= 1e-12


# ----------------------------------------------------------- transpositional


def test_transpositional_constant_sigma(rng):
    mu = corner_measure(16)
    eta = transpositional(mu, 0.7).distribution
    assert pair(eta, random_zero_form(rng)) == pytest.approx(0.0, abs=1e-12)
    # 1-homogeneous f: the sigma f and Euler terms cancel, leaving -c int f
    assert pair(eta, Length()) == pytest.approx(-0.7 * integrate(mu, Length()), abs=1e-12)
    # the family itself: int |v| dmu_t = int |v| / (1 + 0.7 t)
    fam = transpositional(mu, 0.7)
    assert integrate(fam(0.01), Length()) == pytest.approx(1.0 / 1.007, abs=1e-14)


def test_transpositional_bump_on_unit_loop():
    mu = line_measure(32)
    sigma = np.zeros(len(mu))
    sigma[5] = 1.0
    L = Mechanical()
    value = pair(transpositional(mu, sigma).distribution, L)
    # single-atom expansion: w * sigma * (L - |v|^2) - A_L * w * sigma with L = 1/2, |v| = 1, A_L = 1/2
    w = mu.w[5]
    assert value == pytest.approx(w * (0.5 - 1.0) - 0.5 * w, abs=1e-14)


def test_transpositional_validity_interval():
    mu = corner_measure(8)
    fam = transpositional(mu, 2.0 * np.ones(len(mu)))
    assert fam.validity == pytest.approx(0.45)
    with pytest.raises(ValueError):
        fam(0.46)


def test_transpositional_bump_derivative_small_error(rng):
    mu = line_measure(64)
    sigma = np.exp(-((mu.x[:, 0] - 0.5) ** 2) / 0.01)
    fam = transpositional(mu, sigma)
    rep = derivative_check(fam, Mechanical(), steps=(1e-3,))
    assert rep.errors[0] < 1e-5


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_transpositional_hol_and_prob(seed):
    r = np.random.default_rng(seed)
    mu = corner_measure(16)
    eta = transpositional(mu, random_zero_form(r).coefficient((), mu.x)).distribution
    assert check_hol(eta, K=3, tol=1e-10)
    assert check_prob(eta, tol=1e-12)


# --------------------------------------------------------------------- point


def test_point_variation_examples():
    assert pair(corner_distribution(), Length()) == pytest.approx(-2.0, abs=1e-12)
    assert point_variation([(((0.1, 0.2), ((1.0, 0.0),)), ((0.0, 0.0),))]).terms == ()
    p = ((0.1, 0.2), ((1.0, 0.5),))
    eta = point_variation([(p, ((0.3, -0.7),)), (p, ((-0.3, 0.7),))])
    assert pair(eta, GaussianBump(np.array([0.0, 0.0]), np.array([[1.0, 1.0]]), 0.5)) == pytest.approx(0.0, abs=1e-12)
    assert check_prob(eta).value == 0.0


# ----------------------------------------------------------------- families


def test_family_invariants(rng):
    mu = corner_measure(16)
    fams = [
        horizontal(mu, TrigVectorField.random(2, 1, rng)),
        vertical(mu, project_out(mu, rng.standard_normal(mu.v.shape), 2)),
        transpositional(mu, random_zero_form(rng).coefficient((), mu.x) * 0.3),
    ]
    for fam in fams:
        assert fam(0.0) is mu
        for t in (0.01, -0.05):
            assert fam(t).total_weight == pytest.approx(1.0, abs=1e-12)
        assert check_prob(fam.distribution).value == pytest.approx(0.0, abs=1e-15)


def test_derivative_check_battery_second_order(rng):
    mu = corner_measure(32)
    fams = [
        horizontal(mu, TrigVectorField.random(2, 1, rng)),
        vertical(mu, project_out(mu, rng.standard_normal(mu.v.shape), 2)),
        transpositional(mu, 0.5 * random_zero_form(rng).coefficient((), mu.x)),
    ]
    battery = test_battery(rng, 50)
    for fam in fams:
        for f in battery:
            assert derivative_check(fam, f).converged(1.9)


def test_derivative_check_one_sided_first_order(rng):
    mu = corner_measure(32)
    fam = transpositional(mu, 0.5 * random_zero_form(rng).coefficient((), mu.x))
    for f in test_battery(rng, 6):
        assert derivative_check(fam, f, one_sided=True).converged(0.9)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslyap import functions as fn
from nslyap import geometry as geo
from nslyap.errors import DomainViolation, NotConvex, NotNonnegative, UnboundedBelow

K = fn.SubdiffKind
absx = fn.MaxOf([fn.Affine([1.0]), fn.Affine([-1.0])])
neg_absx = fn.MinOf([fn.Affine([1.0]), fn.Affine([-1.0])])


def grid_envelope(V, delta, y, lo=-5.0, hi=5.0):
    """Scalar oracle: minimise V(z) + (y - z)^2 / delta on a fine grid, then refine."""
    z = np.linspace(lo, hi, 200_001)
    vals = np.array([V.value([t]) for t in z[::100]])
    k = int(np.argmin(vals + (y - z[::100]) ** 2 / delta))
    zz = np.linspace(z[::100][max(k - 1, 0)], z[::100][min(k + 1, len(vals) - 1)], 20_001)
    v2 = np.array([V.value([t]) for t in zz]) + (y - zz) ** 2 / delta
    j = int(np.argmin(v2))
    return v2[j], zz[j]


def test_evaluate_examples():
    assert fn.evaluate(fn.Quadratic(np.eye(1)), [3.0]) == 4.5
    assert fn.evaluate(absx, [-2.0]) == 2.0
    assert fn.evaluate(fn.indicator(geo.Box([0.0], [1.0])), [2.0]) == np.inf


def test_subdifferential_examples():
    D = fn.subdifferential(absx, [0.0], K.PROXIMAL)
    assert geo.support(D, [1.0]) == pytest.approx(1.0) and geo.support(D, [-1.0]) == pytest.approx(1.0)
    assert fn.subdifferential(neg_absx, [0.0], K.PROXIMAL) is fn.EMPTY
    D = fn.subdifferential(fn.PlusIndicator(fn.Quadratic(np.eye(1)), geo.nonneg_orthant(1)), [0.0], K.PROXIMAL)
    assert D.contains([-7.0]) and D.contains([0.0]) and not D.contains([0.1])
    D = fn.subdifferential(absx, [0.0], K.HORIZONTAL)
    assert isinstance(D, geo.Singleton) and np.allclose(D.point, 0)
    with pytest.raises(DomainViolation):
        fn.subdifferential(fn.indicator(geo.Box([0.0], [1.0])), [2.0])


def test_dini_examples():
    assert fn.dini_derivative(absx, [0.0], [1.0]) == pytest.approx(1.0)
    assert fn.dini_derivative(absx, [0.0], [-1.0]) == pytest.approx(1.0)
    assert fn.dini_derivative(neg_absx, [0.0], [1.0]) == pytest.approx(-1.0)
    assert fn.dini_derivative(fn.Quadratic(np.eye(1)), [2.0], [-1.0]) == pytest.approx(-2.0)
    assert fn.dini_derivative(fn.indicator(geo.Box([0.0], [1.0])), [1.0], [1.0]) == np.inf


@pytest.mark.parametrize("V", [neg_absx, fn.MinOf([fn.Quadratic(np.eye(2), [1.0, 0.0]), fn.Affine([0.0, 1.0])])])
def test_dini_matches_numeric_liminf(V):
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = np.zeros(V.dim)
        v = rng.standard_normal(V.dim)
        assert fn.dini_derivative(V, x, v) == pytest.approx(fn.dini_numeric(V, x, v), abs=1e-4)


def random_convex(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    kind = draw(st.sampled_from(["quad", "max", "norm1", "norm2", "plus"]))
    if kind == "quad":
        R = rng.standard_normal((2, 2))
        return fn.Quadratic(R @ R.T, rng.standard_normal(2))
    if kind == "max":
        return fn.MaxOf([fn.Affine(rng.standard_normal(2), rng.standard_normal()) for _ in range(3)])
    if kind == "norm1":
        return fn.ScaledNorm(rng.uniform(0.1, 2), 1, 2)
    if kind == "norm2":
        return fn.ScaledNorm(rng.uniform(0.1, 2), 2, 2)
    return fn.PlusIndicator(fn.Quadratic(np.eye(2)), geo.Box([-1, -1], [1, 1]))


convex_fns = st.composite(lambda draw: random_convex(draw))()


@settings(max_examples=60, deadline=None)
@given(convex_fns, st.integers(0, 1000))
def test_convex_dini_is_support_of_subdifferential(V, seed):
    rng = np.random.default_rng(seed)
    # sample kinks too: snap to zero sometimes
    x = rng.uniform(-1, 1, 2) * (seed % 3 != 0)
    D = fn.subdifferential(V, x, K.PROXIMAL)
    for v in rng.standard_normal((5, 2)):
        if not geo.tangent_cone_contains(V.domain, x, v):
            continue
        assert fn.dini_derivative(V, x, v) == pytest.approx(geo.support(D, v), abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(convex_fns, st.integers(0, 1000))
def test_proximal_inside_clarke(V, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, 2) * (seed % 2)
    P = fn.subdifferential(V, x, K.PROXIMAL)
    C = fn.subdifferential(V, x, K.CLARKE)
    for d in rng.standard_normal((8, 2)):
        assert geo.support(P, d) <= geo.support(C, d) + 1e-9


def test_nonconvex_nesting():
    for x in ([0.0], [0.3]):
        P = fn.subdifferential(neg_absx, x, K.PROXIMAL)
        C = fn.subdifferential(neg_absx, x, K.CLARKE)
        if P is not fn.EMPTY:
            for d in ([1.0], [-1.0]):
                assert geo.support(P, d) <= geo.support(C, d) + 1e-12


def test_smooth_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(20):
        R = rng.standard_normal((3, 3))
        V = fn.Quadratic(R + R.T, rng.standard_normal(3), 1.0)
        x = rng.standard_normal(3)
        D = fn.subdifferential(V, x, K.FRECHET)
        e = 1e-6
        fd = np.array([(V.value(x + e * u) - V.value(x - e * u)) / (2 * e) for u in np.eye(3)])
        assert np.allclose(D.point, fd, atol=1e-5)


@pytest.mark.parametrize("V,delta,y,value,z", [
    (fn.ScaledNorm(1.0, 1, 1), 1.0, 1.0, 0.75, 0.5),
    (fn.ScaledNorm(1.0, 1, 1), 1.0, 0.0, 0.0, 0.0),
    (fn.Quadratic(np.eye(1)), 2.0, 2.0, 1.0, 1.0),
])
def test_envelope_examples_against_grid(V, delta, y, value, z):
    g_val, g_z = grid_envelope(V, delta, y)
    E = fn.moreau_envelope(V, delta)
    assert E.value([y]) == pytest.approx(value, abs=1e-9)
    assert fn.prox_point(V, delta, [y])[0] == pytest.approx(z, abs=1e-9)
    assert E.value([y]) == pytest.approx(g_val, abs=1e-6)
    assert fn.prox_point(V, delta, [y])[0] == pytest.approx(g_z, abs=1e-3)


def test_envelope_preconditions():
    with pytest.raises(NotConvex):
        fn.moreau_envelope(neg_absx, 1.0)
    with pytest.raises(UnboundedBelow):
        fn.moreau_envelope(fn.Affine([1.0]), 1.0)
    with pytest.raises(NotNonnegative):
        fn.regularize_W(fn.Quadratic(np.eye(1), c=-1.0), 1)


def test_regularize_W_examples():
    W = fn.ScaledNorm(1.0, 1, 1)
    assert fn.regularize_W(W, 1).value([1.0]) == pytest.approx(0.75)
    for k in (1, 3, 10):
        assert fn.regularize_W(W, k).value([0.0]) == 0.0
    W = fn.Quadratic(np.eye(1))
    ys = np.linspace(-3, 3, 100)
    for k in range(1, 6):
        a, b = fn.regularize_W(W, k), fn.regularize_W(W, k + 1)
        for y in ys:
            assert a.value([y]) <= b.value([y]) + 1e-12 <= W.value([y]) + 2e-12


@pytest.mark.parametrize("V", [
    fn.ScaledNorm(1.0, 2, 2),
    fn.MaxOf([fn.Affine([1.0, 0.0]), fn.Affine([0.0, 1.0]), fn.Quadratic(np.eye(2))]),
    fn.PlusIndicator(fn.Quadratic(np.eye(2), [1.0, -1.0]), geo.Box([0, 0], [1, 1])),
])
def test_envelope_properties(V):
    rng = np.random.default_rng(5)
    ys = rng.uniform(-2, 2, (20, 2))
    for y in ys:
        vals = [fn.moreau_envelope(V, d).value(y) for d in (0.25, 0.5, 1.0, 2.0)]
        assert vals[0] <= V.value(y) + 1e-9
        assert all(a >= b - 1e-7 for a, b in zip(vals, vals[1:]))
        z = fn.prox_point(V, 0.5, y)
        assert fn.prox_residual(V, 0.5, y, z) <= 1e-6

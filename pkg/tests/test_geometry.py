import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nslyap import geometry as geo
from nslyap.errors import DimensionMismatch, EmptySetError, PointNotInSet, Unbounded, UnsupportedVariant


def zoom_grid_min(objective, lo, hi, inside, levels=12, n=41):
    """Minimise over a box grid restricted by ``inside``, zooming in around the best point."""
    lo, hi = np.array(lo, float), np.array(hi, float)
    best = None
    for _ in range(levels):
        axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
        pts = np.array(list(itertools.product(*axes)))
        pts = pts[[inside(p) for p in pts]]
        vals = np.array([objective(p) for p in pts])
        k = int(np.argmin(vals))
        if best is None or vals[k] <= best[0]:
            best = (vals[k], pts[k])
        width = (hi - lo) / (n - 1) * 4
        lo, hi = best[1] - width, best[1] + width
    return best


def test_halfspace_projection():
    S = geo.halfspace([1.0, 1.0], 2.0)
    assert np.allclose(geo.project(S, [2.0, 2.0]), [1.0, 1.0])
    assert geo.distance(S, [2.0, 2.0]) == pytest.approx(np.sqrt(2))
    assert geo.distance(S, [0.3, -4.0]) == 0.0


def test_ball_projection():
    assert np.allclose(geo.project(geo.Ball([0.0, 0.0], 1.0), [3.0, 0.0]), [1.0, 0.0])


def test_intersection_projection_matches_grid():
    S = geo.Intersection([geo.Box([0, 0], [1, 1]), geo.halfspace([1, 1], 1.0)])
    x = np.array([1.0, 1.0])
    d_oracle, p_oracle = zoom_grid_min(lambda p: np.linalg.norm(p - x), [0, 0], [1, 1],
                                       lambda p: S.contains(p, 1e-12))
    p = geo.project(S, x)
    assert np.allclose(p, [0.5, 0.5], atol=1e-6)
    assert abs(geo.distance(S, x) - d_oracle) <= 1e-6
    assert np.linalg.norm(p - p_oracle) <= 1e-5


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        geo.project(geo.Box([0, 0], [1, 1]), [1.0, 2.0, 3.0])


def test_empty_intersection_rejected():
    with pytest.raises(EmptySetError):
        geo.Intersection([geo.Box([0, 0], [1, 1]), geo.halfspace([1, 1], -1.0)])


def test_normal_cone_examples():
    box = geo.Box([0, 0], [1, 1])
    gens = geo.normal_generators(box, [1.0, 1.0])
    assert sorted(map(tuple, np.round(gens, 12))) == [(0.0, 1.0), (1.0, 0.0)]
    N = geo.normal_cone(box, [0.5, 0.5])
    assert isinstance(N, geo.Singleton) and np.allclose(N.point, 0)
    g = np.array([1.0, 2.0])
    gens = geo.normal_generators(geo.halfspace(g, 1.0), [1.0, 0.0])
    assert len(gens) == 1 and np.allclose(gens[0], g / np.linalg.norm(g))
    with pytest.raises(PointNotInSet):
        geo.normal_cone(box, [2.0, 0.0])


def test_tangent_cone_examples():
    seg = geo.Box([0.0], [1.0])
    assert geo.tangent_cone_contains(seg, [1.0], [-1.0])
    assert not geo.tangent_cone_contains(seg, [1.0], [1.0])
    assert geo.tangent_cone_contains(seg, [0.4], [123.0])
    orth = geo.nonneg_orthant(2)
    assert geo.tangent_cone_contains(orth, [0.0, 0.0], [1.0, 1.0])
    assert not geo.tangent_cone_contains(orth, [0.0, 0.0], [-1.0, 0.0])
    ball = geo.Ball([0.0, 0.0], 1.0)
    assert geo.tangent_cone_contains(ball, [1.0, 0.0], [0.0, 1.0])
    assert not geo.tangent_cone_contains(ball, [1.0, 0.0], [0.1, 1.0])


def test_linear_minimize_examples():
    val, arg = geo.linear_minimize([1.0, -1.0], geo.Box([0, 0], [1, 1]))
    assert val == -1.0 and np.allclose(arg, [0, 1])
    m, r, c = np.array([1.0, 2.0]), 0.5, np.array([3.0, -4.0])
    val, arg = geo.linear_minimize(c, geo.Ball(m, r))
    assert val == pytest.approx(c @ m - r * np.linalg.norm(c))
    with pytest.raises(Unbounded):
        geo.linear_minimize([1.0, 0.0], geo.halfspace([1.0, 0.0], 0.0))


def test_linear_minimize_tie_break_is_lexicographic():
    # every point of the top edge is optimal; the smallest is (0, 1)
    _, arg = geo.linear_minimize([0.0, -1.0], geo.Polyhedron([[0, 1], [0, -1], [1, 0], [-1, 0]], [1, 0, 1, 0]))
    assert np.allclose(arg, [0.0, 1.0])


def vertices(G, h):
    m, n = G.shape
    out = []
    for rows in itertools.combinations(range(m), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        v = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ v <= h + 1e-9):
            out.append(v)
    return np.array(out)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_linear_minimize_matches_vertex_enumeration(n, seed):
    rng = np.random.default_rng(seed)
    m = min(8, 2 * n + 2)
    G = rng.standard_normal((m, n))
    h = rng.uniform(0.5, 2.0, m)
    V = vertices(G, h)
    c = rng.standard_normal(n)
    # bounded iff the LP is bounded along every signed axis; use the enumeration to decide
    try:
        val, arg = geo.linear_minimize(c, geo.Polyhedron(G, h))
    except Unbounded:
        from scipy.optimize import linprog

        res = linprog(c, A_ub=G, b_ub=h, bounds=[(None, None)] * n)
        assert res.status == 3
        return
    assume(len(V))
    assert val == pytest.approx(float(np.min(V @ c)), rel=1e-8, abs=1e-7)
    assert np.all(G @ arg <= h + 1e-7)


def test_recession_and_polar():
    R = geo.recession_cone(geo.Box([0, 0], [1, 1]))
    assert isinstance(R, geo.Singleton) and np.allclose(R.point, 0)
    R = geo.recession_cone(geo.halfspace([1.0, 2.0], 3.0))
    assert R.contains([-2.0, 1.0]) and R.contains([-1.0, 0.0]) and not R.contains([1.0, 0.0])
    orth = geo.nonneg_orthant(2)
    R = geo.recession_cone(orth)
    assert R.contains([1.0, 3.0]) and not R.contains([-1.0, 0.0])
    P = geo.polar(orth)
    assert P.contains([-1.0, -2.0]) and not P.contains([1.0, -2.0])
    B = geo.polar(geo.Ball([0.0, 0.0], 2.0))
    assert isinstance(B, geo.Ball) and B.radius == pytest.approx(0.5)
    with pytest.raises(UnsupportedVariant):
        geo.recession_cone(geo.Intersection([geo.Box([0, 0], [1, 1]), geo.Ball([0, 0], 1.0)]))


def test_polar_of_cone_matches_sampled_definition():
    gens = np.array([[1.0, 0.0], [1.0, 1.0]])
    P = geo.polar(geo.PolyhedralCone(gens))
    rng = np.random.default_rng(1)
    scale = 10.0 ** rng.uniform(-2, 6, size=(1000, 1))
    cone_pts = scale * (rng.dirichlet([0.3, 0.3], size=1000) @ gens)
    for y in rng.uniform(-3, 3, size=(300, 2)):
        in_def = np.all(cone_pts @ y <= 1.0)
        assert P.contains(y) == in_def


def random_set(draw):
    kind = draw(st.sampled_from(["box", "ball", "halfspace", "polyhedron", "intersection", "cone", "hull"]))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    n = 2
    if kind == "box":
        lo = rng.uniform(-2, 0, n)
        return geo.Box(lo, lo + rng.uniform(0.1, 2, n))
    if kind == "ball":
        return geo.Ball(rng.uniform(-1, 1, n), rng.uniform(0.1, 2))
    if kind == "halfspace":
        return geo.halfspace(rng.standard_normal(n), rng.uniform(-1, 1))
    if kind == "polyhedron":
        return geo.Polyhedron(rng.standard_normal((4, n)), rng.uniform(0.2, 1.5, 4))
    if kind == "cone":
        return geo.PolyhedralCone(rng.standard_normal((2, n)))
    if kind == "hull":
        return geo.Hull(rng.standard_normal((4, n)))
    return geo.Intersection([geo.Ball([0, 0], 1.5), geo.halfspace(rng.standard_normal(n), rng.uniform(0.1, 1))])


sets = st.composite(lambda draw: random_set(draw))()
points = st.lists(st.floats(-5, 5), min_size=2, max_size=2).map(np.array)


@settings(max_examples=80, deadline=None)
@given(sets, points)
def test_projection_properties(S, x):
    p = geo.project(S, x)
    assert S.contains(p, 1e-7)
    assert np.allclose(geo.project(S, p), p, atol=1e-8)
    assert (geo.distance(S, x) <= 1e-9) == S.contains(x, 1e-9) or abs(geo.distance(S, x)) < 1e-7
    probes = geo.quasi_random_points(geo.Intersection([S, geo.Box([-6, -6], [6, 6])]), 30, seed=3)
    for z in probes:
        assert (x - p) @ (z - p) <= 1e-6 * (1 + np.linalg.norm(x - p))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_polarity_between_tangent_and_normal(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((5, 2))
    h = rng.uniform(0.2, 1.0, 5)
    S = geo.Polyhedron(G, h)
    # a boundary point: project a far point
    y = geo.project(S, rng.standard_normal(2) * 5)
    gens = geo.normal_generators(S, y)
    for d in rng.standard_normal((50, 2)):
        if geo.tangent_cone_contains(S, y, d):
            assert all(g @ d <= 1e-8 * max(1, np.linalg.norm(d)) for g in gens)


def test_support_and_interior():
    box = geo.Box([0, 0], [1, 2])
    assert geo.support(box, [1.0, 1.0]) == pytest.approx(3.0)
    assert geo.support(geo.halfspace([1, 0], 0.0), [-1.0, 0.0]) == np.inf
    assert geo.in_interior(box, [0.5, 1.0]) and not geo.in_interior(box, [0.0, 1.0])
    assert geo.has_interior(box) and not geo.has_interior(geo.Singleton([0.0, 0.0]))
    assert geo.depth(box, [0.5, 1.0]) == pytest.approx(0.5)


def test_quasi_random_points_deterministic():
    S = geo.Ball([0.0, 0.0], 1.0)
    a = geo.quasi_random_points(S, 20, seed=7)
    b = geo.quasi_random_points(S, 20, seed=7)
    assert np.array_equal(a, b) and len(a) == 20
    assert all(S.contains(p) for p in a)

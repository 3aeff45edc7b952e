"""Property tests over seeded random instances."""

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from qcmod import (
    Curve,
    RemetrizedMap,
    analytic_K,
    ball,
    build_grid,
    build_path,
    check_condition_III,
    compute_modulus,
    conductance_oracle,
    connect_family,
    displacement_family,
    esssup_HO,
    explicit_family,
    graph_distance,
    greedy_5r_cover,
    identity_map,
    line_integral,
    minimal_upper_gradient,
    modgrad_scan,
    random_remetrization,
    random_space,
    scaling_map,
    shortest_violating_curve,
    upper_gradient_check,
)
from qcmod.maps import GradientField
from qcmod.space import geodesic

from oracles import dual_modulus, simple_paths, weighted_length

settings.register_profile("qcmod", max_examples=25, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qcmod")

seeds = st.integers(0, 10_000)


@st.composite
def spaces(draw, n_min=3, n_max=10, extra_min=0, extra_max=8):
    n = draw(st.integers(n_min, n_max))
    extra = draw(st.integers(extra_min, extra_max))
    return random_space(n, extra_edges=extra, seed=draw(seeds))


@st.composite
def small_spaces(draw):
    # small enough for exhaustive path enumeration
    return draw(spaces(n_min=4, n_max=8, extra_max=5))


# --- space ------------------------------------------------------------------------


@given(spaces())
def test_metric_axioms(X):
    D = X.distance_matrix
    assert np.allclose(D, D.T, rtol=1e-14, atol=0)
    assert np.all(np.diag(D) == 0) and np.all(D[~np.eye(X.n_nodes, dtype=bool)] > 0)
    n = X.n_nodes
    for u, v, w in itertools.product(range(n), repeat=3):
        assert D[u, w] <= D[u, v] + D[v, w] + 1e-12


@given(spaces(), st.floats(0, 3), st.floats(0, 3))
def test_ball_monotone(X, r, s):
    r, s = sorted((r, s))
    for y in range(X.n_nodes):
        a, b = ball(X, y, r), ball(X, y, s)
        assert y in a.members and a.members <= b.members and a.measure <= b.measure


@given(spaces(), st.floats(0.2, 3), st.data())
def test_greedy_cover(X, r_max, data):
    subset = data.draw(st.sets(st.integers(0, X.n_nodes - 1), min_size=1))
    radii = {y: data.draw(st.floats(0.1, 3)) for y in subset}
    balls = greedy_5r_cover(X, subset, r_max, radius=radii)
    assert set(subset) <= set().union(*(b.members for b in balls))
    for a, b in itertools.combinations(balls, 2):
        assert graph_distance(X, a.center, b.center) > (a.radius + b.radius) / 5


def test_grid_total_measure():
    for n in (2, 5, 16, 40):
        assert build_grid(n, 1, 1).total_measure == pytest.approx((n + 1) ** 2 / n ** 2)


# --- curves -------------------------------------------------------------------------


@st.composite
def space_with_curve(draw):
    X = draw(spaces())
    u = draw(st.integers(0, X.n_nodes - 1))
    v = draw(st.integers(0, X.n_nodes - 1).filter(lambda w: w != u))
    return X, Curve(tuple(geodesic(X, u, v)))


@given(space_with_curve(), seeds, st.floats(0, 10))
def test_line_integral_linear(Xc, seed, c):
    X, curve = Xc
    rng = np.random.default_rng(seed)
    r1, r2 = rng.uniform(0, 2, X.n_edges), rng.uniform(0, 2, X.n_edges)
    a, b = line_integral(X, r1, curve), line_integral(X, r2, curve)
    assert line_integral(X, r1 + r2, curve) == pytest.approx(a + b, rel=1e-12)
    assert line_integral(X, c * r1, curve) == pytest.approx(c * a, rel=1e-12, abs=1e-300)


@given(small_spaces(), seeds)
def test_separation_oracle_exact(X, seed):
    rng = np.random.default_rng(seed)
    A, B = [0], [X.n_nodes - 1]
    paths = simple_paths(X, A, B)
    for _ in range(3):
        rho = rng.uniform(0, 2, X.n_edges)
        best = min(weighted_length(X, rho, ids) for ids in paths)
        res = shortest_violating_curve(X, connect_family(A, B), rho)
        assert res.min_weighted_length == pytest.approx(best, rel=1e-12, abs=1e-12)


@given(spaces())
def test_fine_displacement_contains_geodesics(X):
    D = X.distance_matrix
    fam = displacement_family(identity_map(X), float(D[D > 0].min()))
    for u, v in itertools.combinations(range(X.n_nodes), 2):
        assert fam.contains(Curve(tuple(geodesic(X, u, v))))


# --- modulus --------------------------------------------------------------------------


@st.composite
def path_families(draw):
    X = draw(spaces(n_min=4, n_max=8, extra_min=2, extra_max=5))
    paths = simple_paths(X, [0], [X.n_nodes - 1])
    assume(len(paths) >= 2)
    curves = [Curve(tuple(_nodes(X, ids))) for ids in paths]
    picks = draw(st.lists(st.sampled_from(range(len(curves))), min_size=2, unique=True))
    return X, [curves[i] for i in picks]


def _nodes(X, ids):
    # rebuild a node sequence from an edge set that forms a path from node 0
    adj = {}
    for k in ids:
        u, v = X.edges[k].tolist()
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seq, prev = [0], None
    while len(seq) <= len(ids):
        nxt = [w for w in adj[seq[-1]] if w != prev][0]
        prev = seq[-1]
        seq.append(nxt)
    return seq


@given(path_families(), st.sampled_from([1.5, 2.0, 3.0]), st.data())
def test_monotone_and_subadditive(Xc, p, data):
    X, curves = Xc
    k = data.draw(st.integers(1, len(curves) - 1))
    sub, rest = curves[:k], curves[k:]
    whole = compute_modulus(X, explicit_family(curves), p)
    part = compute_modulus(X, explicit_family(sub), p)
    other = compute_modulus(X, explicit_family(rest), p)
    assert part.lower <= whole.upper * (1 + 1e-9)
    assert whole.lower <= (part.upper + other.upper) * (1 + 1e-9)


@given(small_spaces(), st.sampled_from([1.5, 2.0, 3.0]))
def test_bracket_soundness(X, p):
    lo, up = dual_modulus(X, simple_paths(X, [0], [X.n_nodes - 1]), p)
    res = compute_modulus(X, connect_family([0], [X.n_nodes - 1]), p)
    assert res.lower <= res.value <= res.upper
    assert max(lo, res.lower) <= min(up, res.upper) * (1 + 1e-12)


@given(spaces(n_min=4, n_max=20, extra_max=15))
def test_conductance_equality(X):
    val = compute_modulus(X, connect_family([0], [X.n_nodes - 1]), 2).value
    assert abs(val - conductance_oracle(X, [0], [X.n_nodes - 1])) <= 1e-6 * max(1, val)


@given(st.integers(1, 8), st.floats(0.25, 4), st.sampled_from([1.5, 2.0, 3.0]))
def test_scaling_law(n, c, p):
    res = compute_modulus(build_path(n, length=c), connect_family([0], [n]), p)
    assert res.value == pytest.approx(n ** (1 - p) * c ** -p, rel=1e-8)


# --- maps -------------------------------------------------------------------------------


@st.composite
def maps(draw):
    X = draw(spaces())
    return random_remetrization(X, seed=draw(seeds))


@given(maps(), seeds)
def test_inverse_and_chain(f, seed):
    h = RemetrizedMap(f.Y, random_remetrization(f.Y, seed=seed).Y)
    gf = minimal_upper_gradient(f).g
    assert np.array_equal(minimal_upper_gradient(f.inverse()).g, f.X.length / f.Y.length)
    assert np.allclose(minimal_upper_gradient(f.compose(h)).g,
                       minimal_upper_gradient(h).g * gf, rtol=1e-14)


@given(maps(), seeds)
def test_lattice(f, seed):
    g = minimal_upper_gradient(f).g
    rng = np.random.default_rng(seed)
    g1 = GradientField(g * (1 + rng.uniform(0, 1, f.n_edges)))
    g2 = GradientField(g * (1 + rng.uniform(0, 1, f.n_edges)))
    assert upper_gradient_check(f, g1.minimum(g2), samples=30)


@given(maps())
def test_minimality(f):
    g = minimal_upper_gradient(f).g
    e = int(np.argmax(g))
    smaller = g.copy()
    smaller[e] *= 1 - 1e-9
    assert not upper_gradient_check(f, smaller, samples=0)


@given(spaces(), st.floats(0.2, 5), st.sampled_from([1.5, 2.0, 3.0]))
def test_normalization(X, c, Q):
    for f in (identity_map(X), scaling_map(X, c, Q=Q)):
        assert analytic_K(f, Q) == pytest.approx(1, rel=1e-9)
        assert esssup_HO(f, Q) == pytest.approx(1, rel=1e-9)


@settings(max_examples=8)
@given(seeds, st.sampled_from([1.5, 2.0, 3.0]))
def test_scan_upper_bound(seed, p):
    f = random_remetrization(build_grid(6, 1, 1), seed=seed, spread=1.5)
    res = modgrad_scan(f, p)
    assert res.bound_holds(1e-6)


@settings(max_examples=5)
@given(st.floats(0.3, 3))
def test_condition_III_conformal_invariance(c):
    Q = 2.0
    f = random_remetrization(build_grid(6, 1, 1), seed=2, spread=1.5)
    Y2 = f.Y.with_lengths(c * f.Y.length, mu=c ** Q * f.Y.mu)
    g = RemetrizedMap(f.X, Y2)
    kw = dict(centers=[24], radii=[0.5])
    a = check_condition_III(f, Q, **kw).rows
    b = check_condition_III(g, Q, centers=[24], radii=[0.5 * c]).rows
    assert [r.quantity for r in b] == pytest.approx([r.quantity for r in a], rel=1e-5)

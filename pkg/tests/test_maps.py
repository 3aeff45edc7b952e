import json

import numpy as np
import pytest

from qcmod import (
    RemetrizedMap,
    SpaceError,
    build_grid,
    build_path,
    build_rug,
    build_snowflake,
    identity_map,
    load_map,
    minimal_upper_gradient,
    modgrad_scan,
    pointwise_HO,
    pointwise_lip,
    random_remetrization,
    random_space,
    save_map,
    scaling_map,
    snowflake_to_rug,
    sobolev_energy,
    upper_gradient_check,
    volume_derivative,
)
from qcmod.maps import (
    GradientField,
    default_eps_grid,
    dilatation_report,
    edge_jacobian,
    map_to_dict,
)


def euclid_to(Y_builder, n):
    return RemetrizedMap(build_grid(n, 1, 1), Y_builder(n))


def interior(n):
    return (n // 2) * (n + 1) + n // 2


# --- minimal upper gradient ---------------------------------------------------


def test_gradient_identity_and_scaling():
    X = build_grid(3, 1, 1)
    assert np.all(minimal_upper_gradient(identity_map(X)).g == 1)
    assert np.allclose(minimal_upper_gradient(scaling_map(X, 2.5)).g, 2.5)


def test_gradient_snowflake_to_euclid():
    f = RemetrizedMap(build_snowflake(4), build_grid(4, 1, 1))
    g = minimal_upper_gradient(f).g
    assert np.allclose(g, 0.25 ** (1 / 3))
    assert g[0] == pytest.approx(0.6300, abs=5e-5)


def test_minimal_gradient_passes():
    f = random_remetrization(build_grid(4, 1, 1), seed=3)
    rep = upper_gradient_check(f, minimal_upper_gradient(f))
    assert rep and rep.checked > 0


def test_zero_gradient_fails_on_one_edge():
    f = random_remetrization(build_grid(3, 1, 1), seed=1)
    rep = upper_gradient_check(f, np.zeros(f.n_edges))
    assert not rep and len(rep.witness) == 1 and rep.deficit > 0


def test_discrete_minimality():
    f = random_remetrization(random_space(10, extra_edges=4, seed=2), seed=2)
    g = minimal_upper_gradient(f).g
    for e in range(f.n_edges):
        smaller = g.copy()
        smaller[e] *= 1 - 1e-6
        rep = upper_gradient_check(f, smaller, samples=0)
        assert not rep and rep.witness.nodes == tuple(f.edges[e])


def test_lattice_min_of_two_fields():
    f = random_remetrization(build_grid(3, 1, 1), seed=5)
    g = minimal_upper_gradient(f).g
    rng = np.random.default_rng(0)
    g1 = GradientField(g * (1 + rng.uniform(0, 2, f.n_edges)))
    g2 = GradientField(g * (1 + rng.uniform(0, 2, f.n_edges)))
    assert upper_gradient_check(f, g1) and upper_gradient_check(f, g2)
    assert upper_gradient_check(f, g1.minimum(g2))


def test_inverse_and_chain():
    X = build_grid(3, 1, 1)
    f = random_remetrization(X, seed=1)
    h = RemetrizedMap(f.Y, random_remetrization(f.Y, seed=2).Y)
    gf = minimal_upper_gradient(f).g
    assert np.array_equal(minimal_upper_gradient(f.inverse()).g, f.X.length / f.Y.length)
    assert np.allclose(minimal_upper_gradient(f.inverse()).g * gf, 1, rtol=1e-15)
    assert np.allclose(minimal_upper_gradient(f.compose(h)).g,
                       minimal_upper_gradient(h).g * gf, rtol=1e-14)


def test_gradient_field_rejects_negative():
    with pytest.raises(ValueError):
        GradientField([1.0, -0.1])


# --- Jacobians ----------------------------------------------------------------


def test_volume_derivative_examples():
    X = build_grid(3, 1, 1)
    assert np.all(volume_derivative(identity_map(X)) == 1)
    assert np.allclose(volume_derivative(scaling_map(X, 2, Q=3)), 8)
    f = RemetrizedMap(build_snowflake(4), build_grid(4, 1, 1))
    assert np.allclose(volume_derivative(f), 1)


def test_edge_jacobian_is_sigma_ratio():
    f = random_remetrization(build_grid(3, 1, 1), seed=8)
    assert np.allclose(edge_jacobian(f), f.Y.sigma / f.X.sigma)


# --- lip and H_O --------------------------------------------------------------


def test_lip_examples():
    X = build_grid(4, 1, 1)
    assert pointwise_lip(identity_map(X), 12) == 1
    assert pointwise_lip(scaling_map(X, 3.0), 12) == pytest.approx(3.0)
    f = euclid_to(build_rug, 16)
    assert pointwise_lip(f, interior(16)) == pytest.approx(4.0)


def test_HO_examples():
    X = build_grid(4, 1, 1)
    assert pointwise_HO(identity_map(X), 12, 2) == (1.0, 1.0)
    ball_based, lip_based = pointwise_HO(scaling_map(X, 1.7, Q=2), 12, 2)
    assert lip_based == pytest.approx(1.0) and ball_based == pytest.approx(1.0)
    h = 1 / 16
    _, lip_based = pointwise_HO(euclid_to(build_rug, 16), interior(16), 3)
    assert lip_based == pytest.approx(h ** -1.5)


def test_HO_variants_agree_on_grid_maps():
    X = build_grid(6, 1, 1)
    for f in (identity_map(X), scaling_map(X, 0.4, Q=2)):
        for v in range(X.n_nodes):
            b, l = pointwise_HO(f, v, 2)
            assert b == pytest.approx(l, rel=1e-12)


def test_HO_with_radii_dominates_neighbours():
    f = random_remetrization(build_grid(4, 1, 1), seed=3)
    for v in (0, 6, 12):
        near = pointwise_HO(f, v, 2)[0]
        wide = pointwise_HO(f, v, 2, radii=[0.5])[0]
        assert wide >= near


def test_dilatation_report_fields():
    f = random_remetrization(build_grid(3, 1, 1), seed=2)
    rep = dilatation_report(f, 2.0)
    assert np.allclose(rep.HO_lip, rep.lip ** 2 / rep.J)
    assert rep.esssup_HO == pytest.approx(rep.HO_lip.max())
    assert all(np.all(a >= 0) for a in (rep.g, rep.J, rep.lip, rep.HO_ball, rep.HO_lip))
    json.dumps(rep.to_dict())


# --- Sobolev energy -----------------------------------------------------------


def test_energy_examples():
    X = build_grid(2, 1, 1)
    f = identity_map(X)
    expected = sum((X.mu[u] + X.mu[v]) / 2 for u, v in X.edges.tolist())
    assert sobolev_energy(f, 2) == pytest.approx(expected)
    assert sobolev_energy(scaling_map(X, 3.0), 2.5) == pytest.approx(3.0 ** 2.5 * expected)
    one = RemetrizedMap(build_path(1), build_path(1, length=2.0))
    assert sobolev_energy(one, 2) == pytest.approx(4.0)


# --- the epsilon scan ---------------------------------------------------------


def line_identity(n):
    h = 1 / n
    return identity_map(build_path(n, length=h, mu=h))


def test_scan_1d_identity():
    f = line_identity(16)
    res = modgrad_scan(f, 2)
    assert res.energy == pytest.approx(1.0)
    assert res.bound_holds(1e-6) and res.converged
    assert all(row.admissible for row in res.rows)
    assert abs(res.rows[-1].value - 1) <= 0.1


def test_scan_scaling_homogeneity():
    X = build_path(16, length=1 / 16, mu=1 / 16)
    eps = [0.5, 0.25]
    base = modgrad_scan(identity_map(X), 2, eps)
    scaled = modgrad_scan(scaling_map(X, 2.0), 2, [2 * e for e in eps])
    assert scaled.energy == pytest.approx(4 * base.energy)
    for a, b in zip(base.rows, scaled.rows):
        assert b.value == pytest.approx(4 * a.value, rel=1e-6)


def test_scan_drops_sub_edge_eps():
    f = line_identity(8)
    res = modgrad_scan(f, 2, [0.5, 0.1])
    assert [r.eps for r in res.rows] == [0.5]
    assert res.dropped == [0.1]


def test_scan_bound_on_random_maps():
    for seed in range(3):
        f = random_remetrization(build_grid(8, 1, 1), seed=seed, spread=1.5)
        res = modgrad_scan(f, 2.5)
        assert res.rows and res.bound_holds(1e-6)


def test_default_eps_grid_floor():
    f = line_identity(16)
    grid = default_eps_grid(f)
    assert grid == sorted(grid, reverse=True)
    assert min(grid) >= 2 / 16


# --- maps: construction and I/O ------------------------------------------------


def test_map_requires_shared_graph():
    with pytest.raises(SpaceError):
        RemetrizedMap(build_grid(2, 1, 1), build_grid(3, 1, 1))


def test_inverse_swaps_sides():
    f = snowflake_to_rug(4)
    assert f.inverse().X == f.Y and f.inverse().inverse() == f
    assert identity_map(f.X).is_identity() and not f.is_identity()


def test_map_round_trip(tmp_path):
    f = random_remetrization(build_grid(3, 1, 1), seed=9)
    save_map(f, tmp_path / "m.json")
    g = load_map(tmp_path / "m.json")
    assert g == f and g.X.labels == f.X.labels


def test_map_json_schema():
    d = map_to_dict(snowflake_to_rug(2))
    assert set(d) == {"graph", "X", "Y"}
    assert set(d["X"]) == {"len", "mu"} and set(d["Y"]) == {"len", "nu"}
    assert "len" not in d["graph"]["edges"][0]


def test_map_load_errors(tmp_path):
    d = map_to_dict(identity_map(build_path(2)))
    d["Y"]["len"] = d["Y"]["len"][:1]
    (tmp_path / "bad.json").write_text(json.dumps(d))
    with pytest.raises(SpaceError):
        load_map(tmp_path / "bad.json")
    d = map_to_dict(identity_map(build_path(2)))
    d["Y"]["nu"][0] = -1
    (tmp_path / "neg.json").write_text(json.dumps(d))
    with pytest.raises(SpaceError, match="positive"):
        load_map(tmp_path / "neg.json")

import json
import math

import numpy as np
import pytest

from qcmod import (
    Curve,
    ModulusError,
    ModulusProblem,
    ScaleTooFine,
    admissibility_check,
    annular_family,
    annulus_density,
    build_grid,
    build_path,
    compute_modulus,
    conductance_oracle,
    connect_family,
    displacement_family,
    explicit_family,
    minimal_upper_gradient,
    random_remetrization,
    random_space,
    solve_restricted,
)
from qcmod.modulus import energy, single_curve_modulus
from qcmod.space import MeasureSpace

from oracles import conductance_nx, dual_modulus, simple_paths


def two_path_space(a, b):
    """Nodes 0 and 1 joined by disjoint paths with ``a`` and ``b`` unit edges."""
    edges, n = [], 2
    for k in (a, b):
        chain = [0] + list(range(n, n + k - 1)) + [1]
        edges += list(zip(chain, chain[1:]))
        n += k - 1
    return MeasureSpace(np.ones(n), edges, np.ones(len(edges)))


def triangle():
    return MeasureSpace(np.ones(3), [[0, 1], [1, 2], [0, 2]], np.ones(3))


# --- compute_modulus examples -----------------------------------------------


def test_path_closed_form():
    res = compute_modulus(build_path(4), connect_family([0], [4]), 2)
    assert res.value == pytest.approx(0.25, rel=1e-9)
    assert np.allclose(res.density, 0.25)
    assert res.converged and res.lower <= res.value <= res.upper


def test_disjoint_parallel_paths_add():
    X = two_path_space(3, 5)
    curves = [Curve((0, 2, 3, 1)), Curve((0, 4, 5, 6, 7, 1))]
    res = compute_modulus(X, explicit_family(curves), 2)
    assert res.value == pytest.approx(1 / 3 + 1 / 5, rel=1e-9)
    lo, up = dual_modulus(X, [list(c.edge_ids(X)) for c in curves], 2)
    assert lo <= res.upper * (1 + 1e-9) and res.lower <= up * (1 + 1e-9)


def test_empty_family_is_zero():
    X = build_grid(2, 1, 1)
    res = compute_modulus(X, explicit_family([]), 2)
    assert res.value == 0 and res.converged and not res.density.any()


def test_trivial_curve_is_infinite():
    res = compute_modulus(build_path(2), explicit_family([[1], [0, 1]]), 2)
    assert res.infinite and res.value is None
    assert res.to_dict(build_path(2))["infinite"] is True


def test_triangle_is_conductance():
    X = triangle()
    res = compute_modulus(X, connect_family([0], [2]), 2)
    assert res.value == pytest.approx(1.5, rel=1e-9)
    assert conductance_oracle(X, [0], [2]) == pytest.approx(1.5)


def test_rejects_p_one():
    with pytest.raises(ModulusError, match="unsupported exponent"):
        compute_modulus(build_path(2), connect_family([0], [2]), 1)
    with pytest.raises(ModulusError):
        ModulusProblem(build_path(2), connect_family([0], [2]), 0.5)


def test_max_iterations_gives_unconverged_bracket():
    X = build_grid(6, 1, 1)
    res = compute_modulus(X, displacement_family(X, 0.5), 2, max_iterations=1,
                          cuts_per_iteration=1, seed=False)
    assert not res.converged
    assert res.lower <= res.value <= res.upper


def test_problem_wrapper():
    prob = ModulusProblem(build_path(4), connect_family([0], [4]), 3)
    assert prob.solve().value == pytest.approx(4.0 ** -2, rel=1e-9)


def test_result_json_schema():
    X = build_path(2)
    d = compute_modulus(X, connect_family([0], [2]), 2).to_dict(X)
    json.dumps(d, allow_nan=False)
    assert set(d) >= {"value", "lower", "upper", "converged", "iterations", "density",
                      "active_curves"}
    assert d["density"][0] == {"u": 0, "v": 1, "rho": pytest.approx(0.5)}
    assert d["active_curves"] == [[0, 1, 2]]


# --- solve_restricted ---------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_single_constraint(p):
    P = build_path(5)
    sol = solve_restricted(P, [Curve(tuple(range(6)))], p)
    assert np.allclose(sol.density, 0.2)
    assert sol.value == pytest.approx(5.0 ** (1 - p), rel=1e-12)


def test_duplicate_constraints():
    P = build_path(3)
    c = Curve((0, 1, 2, 3))
    assert solve_restricted(P, [c, c], 2).value == pytest.approx(
        solve_restricted(P, [c], 2).value, rel=1e-12)


def test_restricted_triangle_system():
    X = triangle()
    sol = solve_restricted(X, [Curve((0, 2)), Curve((0, 1, 2))], 2)
    assert sol.value == pytest.approx(conductance_oracle(X, [0], [2]), rel=1e-9)


def test_restricted_lower_bound():
    X = random_space(9, extra_edges=5, seed=3)
    curves = [Curve(tuple(c)) for c in ([0, 1], [2, 0, 1])
              if all((min(a, b), max(a, b)) in X.edge_index for a, b in zip(c, c[1:]))]
    curves = curves or [Curve((int(X.edges[0, 0]), int(X.edges[0, 1])))]
    sol = solve_restricted(X, curves, 2.5)
    assert sol.lower <= sol.value * (1 + 1e-12)


def test_restricted_rejects_empty():
    with pytest.raises(ModulusError):
        solve_restricted(build_path(2), [], 2)


def test_single_curve_closed_form():
    X = random_space(8, extra_edges=2, seed=5)
    c = Curve(tuple(int(v) for v in [X.edges[0, 0], X.edges[0, 1]]))
    for p in (1.5, 2, 4):
        assert solve_restricted(X, [c], p).value == pytest.approx(
            single_curve_modulus(X, c, p), rel=1e-12)


# --- admissibility and explicit densities ------------------------------------


def test_gradient_over_eps_is_admissible():
    f = random_remetrization(build_grid(4, 1, 1), seed=6)
    g = minimal_upper_gradient(f).g
    for eps in (0.3, 0.6, 1.0):
        assert admissibility_check(f.X, displacement_family(f, eps), g / eps).admissible


def test_solver_density_is_admissible():
    X = build_grid(5, 1, 1)
    fam = annular_family(X, 18, 0.2, 0.5)
    res = compute_modulus(X, fam, 2)
    assert admissibility_check(X, fam, res.density, tol=2e-6).admissible


def test_zero_density_not_admissible():
    X = build_grid(2, 1, 1)
    assert not admissibility_check(X, connect_family([0], [8]), np.zeros(12)).admissible


def test_annulus_density_grid_example():
    X = build_grid(32, 1, 1)
    c = 16 * 33 + 16
    rho, bound = annulus_density(X, c, 0.125, 2.0)
    fam = annular_family(X, c, 0.125, 0.25)
    assert admissibility_check(X, fam, rho).admissible
    assert bound >= compute_modulus(X, fam, 2).upper


def test_annulus_density_whole_space():
    X = build_grid(4, 1, 1)
    r, lam = 10.0, 2.0
    rho, bound = annulus_density(X, 0, r, lam, p=3)
    width = (lam - 1) * r - 2 * X.max_edge_length
    assert np.allclose(rho, 1 / width)
    assert bound == pytest.approx(X.sigma.sum() / width ** 3)


def test_annulus_density_too_fine():
    X = build_grid(8, 1, 1)
    with pytest.raises(ScaleTooFine, match="scale too fine"):
        annulus_density(X, 40, 0.2, 2.0)
    with pytest.raises(ModulusError):
        annulus_density(X, 40, 0.5, 1.0)


# --- conductance oracle -------------------------------------------------------


def test_conductance_examples():
    assert conductance_oracle(build_path(1), [0], [1]) == pytest.approx(1.0)
    assert conductance_oracle(triangle(), [0], [2]) == pytest.approx(1.5)
    square = MeasureSpace(np.ones(4), [[0, 1], [1, 2], [0, 3], [3, 2]], np.ones(4))
    assert conductance_oracle(square, [0], [2]) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_conductance_matches_networkx(seed):
    X = random_space(14, extra_edges=8, seed=seed)
    assert conductance_oracle(X, [0], [13]) == pytest.approx(conductance_nx(X, 0, 13),
                                                            rel=1e-10)


def test_conductance_rejects_overlap():
    with pytest.raises(ValueError):
        conductance_oracle(build_path(2), [0, 1], [1])


# --- structural properties on concrete instances -----------------------------


def test_scaling_law_on_paths():
    # lengths times c with sigma fixed: rho scales by 1/c, so Mod by c^-p
    for c in (0.5, 2.0, 3.0):
        for p in (1.5, 2.0, 3.0):
            P = build_path(4, length=c)
            res = compute_modulus(P, connect_family([0], [4]), p)
            assert res.value == pytest.approx(4.0 ** (1 - p) * c ** -p, rel=1e-9)


def test_sigma_scaling():
    # sigma scales the energy linearly
    P = build_path(3, mu=5.0)
    res = compute_modulus(P, connect_family([0], [3]), 2)
    assert res.value == pytest.approx(5.0 / 3, rel=1e-9)


def test_minorization_inequality_on_nested_annuli():
    X = build_grid(8, 1, 1)
    c = 40
    big = compute_modulus(X, annular_family(X, c, 0.125, 0.5), 2).value
    small = compute_modulus(X, annular_family(X, c, 0.25, 0.375), 2).value
    assert small >= big * (1 - 1e-6)


def test_bracket_contains_brute_force_optimum():
    X = random_space(8, extra_edges=6, seed=9)
    paths = simple_paths(X, [0], [7])
    for p in (1.5, 2, 3):
        lo, up = dual_modulus(X, paths, p)
        res = compute_modulus(X, connect_family([0], [7]), p)
        assert max(lo, res.lower) <= min(up, res.upper) * (1 + 1e-12)


def test_seed_off_matches():
    X = build_grid(6, 1, 1)
    fam = connect_family(range(0, 49, 7), range(6, 49, 7))
    a = compute_modulus(X, fam, 3).value
    b = compute_modulus(X, fam, 3, seed=False, prune=False).value
    assert a == pytest.approx(b, rel=1e-6)


def test_energy_of_density():
    X = build_path(2, mu=[1, 3, 1])
    assert energy(X, [1.0, 2.0], 2) == pytest.approx(2 * 1 + 2 * 4)
    assert math.isclose(energy(X, [0.0, 0.0], 3), 0.0)

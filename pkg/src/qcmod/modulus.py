"""p-modulus of curve families by constraint generation.

The modulus ``Mod_p(G) = inf { sum_e sigma(e) rho(e)^p : rho admissible }``
is computed by alternating two steps:

* solve the problem restricted to a finite set of collected curves, via its
  smooth concave dual in the curve multipliers (projected Newton);
* ask the separation oracle for the least-weighted family member and add
  it (and a few runners-up) when it violates admissibility.

Every iterate yields a certified bracket.  The dual value of the restricted
problem is a lower bound, since the restricted family is a subfamily.  The
restricted density rescaled by the oracle minimum is admissible, so its
energy is an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import spsolve

from .curves import (
    AnnularFamily,
    ConnectFamily,
    Curve,
    ExplicitFamily,
    ImageFamily,
    SeparationResult,
    line_integral,
    shortest_violating_curve,
)
from .space import MeasureSpace, SpaceError, ball

__all__ = [
    "ModulusError",
    "ScaleTooFine",
    "ModulusProblem",
    "ModulusResult",
    "RestrictedSolution",
    "compute_modulus",
    "solve_restricted",
    "admissibility_check",
    "annulus_density",
    "conductance_oracle",
    "single_curve_modulus",
    "energy",
]

STALL_RESIDUAL = 1e-9
IP_RESIDUAL = 1e-11
EPS = np.finfo(float).eps


class ModulusError(ValueError):
    """Raised for unsupported modulus requests."""


class ScaleTooFine(ModulusError):
    """The requested radius is below the grid resolution."""


def _check_exponent(p: float) -> float:
    p = float(p)
    if not p > 1:
        raise ModulusError(
            f"unsupported exponent p={p:g}: modulus is only computed for p > 1 "
            "(the limit characterization of the gradient norm fails at p = 1)")
    return p


def energy(space: MeasureSpace, rho, p: float) -> float:
    """``sum_e sigma(e) * rho(e)**p``."""
    rho = np.asarray(rho, dtype=float)
    return float(np.dot(space.sigma, rho ** p))


# ---------------------------------------------------------------------------
# restricted problem


class RestrictedSolution(NamedTuple):
    density: np.ndarray
    value: float
    lower: float
    multipliers: np.ndarray


def _constraint_matrix(space: MeasureSpace, curves: Sequence[Curve]) -> sparse.csr_matrix:
    rows, cols = [], []
    for i, c in enumerate(curves):
        e = c.edge_ids(space)
        rows.append(np.full(len(e), i))
        cols.append(e)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    # duplicates are summed: multiplicity times length
    A = sparse.coo_matrix((space.length[cols], (rows, cols)),
                          shape=(len(curves), space.n_edges))
    return A.tocsr()


def solve_restricted(space: MeasureSpace, curves: Sequence[Curve], p: float,
                     tol: float = 1e-12, multipliers=None,
                     max_newton: int = 200) -> RestrictedSolution:
    """Minimize ``sum sigma rho^p`` subject to ``int_gamma rho >= 1`` for ``curves``.

    Maximizes the dual ``D(lam) = sum lam - (1/q) sum_e kappa_e a_e^q`` over
    ``lam >= 0``, where ``a = A^T lam``, ``q = p / (p - 1)`` and
    ``kappa_e = (p sigma_e)^(-1/(p-1))``; the primal density is recovered as
    ``rho_e = kappa_e a_e^(q-1)``.  ``tol`` bounds the projected dual
    gradient, i.e. the constraint residual in units of weighted length.

    Returns the density, its energy, the dual value (a lower bound on the
    restricted optimum) and the multipliers.
    """
    p = _check_exponent(p)
    if not curves:
        raise ModulusError("solve_restricted needs at least one curve")
    if any(c.trivial for c in curves):
        raise ModulusError("trivial curves have no admissible density")
    A = _constraint_matrix(space, curves)
    k = A.shape[0]
    q = p / (p - 1)
    sigma = np.asarray(space.sigma)
    kappa = (p * sigma) ** (-1.0 / (p - 1))

    lam = np.zeros(k)
    if multipliers is not None:
        m0 = np.asarray(multipliers, dtype=float)[:k]
        lam[:len(m0)] = np.maximum(m0, 0)
    if not lam.any():
        # single-constraint optimum of each curve, a scale-correct cold start
        s = np.asarray(A.power(q) @ kappa).ravel()
        lam = s ** (-1.0 / (q - 1)) / k

    AT = A.T.tocsr()

    def evaluate(lam):
        a = AT @ lam
        rho = kappa * a ** (q - 1)
        F = float(np.dot(kappa, a ** q) / q - lam.sum())
        return a, rho, F

    evaluate.kappa, evaluate.q = kappa, q

    a, rho, F = evaluate(lam)
    stalls = 0
    for _ in range(max_newton):
        g = A @ rho - 1.0
        pg = lam - np.maximum(lam - g, 0.0)
        pg_norm = float(np.max(np.abs(pg)))
        if pg_norm <= tol or stalls >= 3:
            break
        # binding set of two-metric projection
        eps_b = min(1e-6 * max(float(lam.max()), EPS), pg_norm)
        free = ~((lam <= eps_b) & (g > 0))
        noise = 8 * EPS * (abs(F) + float(lam.sum()))
        step = None
        for d in _directions(A, g, lam, a, kappa, q, free):
            step = _armijo(evaluate, lam, d, g, F, noise)
            if step is not None:
                break
        if step is None:
            break
        lam_t, a_t, rho_t, F_t = step
        stalls = stalls + 1 if F_t > F - noise else 0
        lam, a, rho, F = lam_t, a_t, rho_t, F_t

    g = A @ rho - 1.0
    if float(np.max(np.abs(lam - np.maximum(lam - g, 0.0)))) > STALL_RESIDUAL:
        # flat dual but a sizeable residual: degenerate multipliers make the
        # projected method zigzag, an interior path does not
        lam_ip = _interior_point(A, evaluate, lam, tol)
        a_i, rho_i, F_i = evaluate(lam_ip)
        if F_i <= F + 8 * EPS * (abs(F) + float(lam.sum())) or \
                _pg(A, rho_i, lam_ip) < _pg(A, rho, lam):
            lam, a, rho, F = lam_ip, a_i, rho_i, F_i

    return RestrictedSolution(rho, energy(space, rho, p), -F, lam)


def _pg(A, rho, lam) -> float:
    g = A @ rho - 1.0
    return float(np.max(np.abs(lam - np.maximum(lam - g, 0.0))))


def _interior_point(A, evaluate, lam0, tol, max_iter: int = 200):
    """Primal-dual path following for ``min F(lam)`` over ``lam >= 0``."""
    k = len(lam0)
    scale = max(float(lam0.max()), EPS)
    lam = np.maximum(lam0, 1e-8 * scale)
    a, rho, F = evaluate(lam)
    g = A @ rho - 1.0
    z = np.maximum(g, 1e-8)
    best, best_pg = lam.copy(), _pg(A, rho, lam)
    stale = 0
    for _ in range(max_iter):
        mu = float(lam @ z) / k
        sigma = 0.1
        floor = 1e-14 * max(float(a.max()), EPS)
        w = evaluate.kappa * (evaluate.q - 1) * np.maximum(a, floor) ** (evaluate.q - 2)
        H = (A.multiply(w) @ A.T).toarray()
        H[np.diag_indices_from(H)] += z / lam
        rhs = -g + sigma * mu / lam
        dl = _spd_solve(H, rhs)
        if dl is None:
            break
        dz = (sigma * mu - lam * z - z * dl) / lam
        alpha = 1.0
        with np.errstate(over="ignore", divide="ignore"):
            for v, dv in ((lam, dl), (z, dz)):
                neg = dv < 0
                if neg.any():
                    alpha = min(alpha, 0.99 * float(np.min(v[neg] / -dv[neg])))
        phi = F - sigma * mu * float(np.sum(np.log(lam)))
        slope = float(np.dot(g - sigma * mu / lam, dl))
        for _ in range(60):
            lam_t = lam + alpha * dl
            a_t, rho_t, F_t = evaluate(lam_t)
            phi_t = F_t - sigma * mu * float(np.sum(np.log(lam_t)))
            if phi_t <= phi + 1e-4 * alpha * slope + 8 * EPS * (abs(phi) + 1):
                break
            alpha *= 0.5
        lam, a, rho, F = lam_t, a_t, rho_t, F_t
        z = np.maximum(z + alpha * dz, 1e-300)
        g = A @ rho - 1.0
        pg = _pg(A, rho, lam)
        if pg < 0.5 * best_pg:
            stale = 0
        else:
            stale += 1
        if pg < best_pg:
            best, best_pg = lam.copy(), pg
        if pg <= max(tol, IP_RESIDUAL) or stale >= 8:
            break
    # snap multipliers that the path drove to the boundary
    best = np.where(best <= 1e-14 * max(float(best.max()), EPS), 0.0, best)
    return best


def _spd_solve(H, rhs):
    """Solve ``H x = rhs`` for symmetric positive semidefinite ``H``.

    Jacobi scaling first, then Cholesky with growing ridge terms; returns
    ``None`` if every attempt fails.
    """
    d = np.sqrt(np.maximum(np.diag(H), EPS * max(float(np.max(np.diag(H))), EPS)))
    Hs = H / d[:, None] / d[None, :]
    bs = rhs / d
    for ridge in (0.0, 1e-12, 1e-8, 1e-4):
        try:
            cf = linalg.cho_factor(Hs + ridge * np.eye(len(Hs)), check_finite=False)
        except (linalg.LinAlgError, ValueError):
            continue
        x = linalg.cho_solve(cf, bs, check_finite=False) / d
        if np.all(np.isfinite(x)):
            return x
    return None


def _directions(A, g, lam, a, kappa, q, free):
    """Projected Newton directions with growing regularization, then a
    diagonally scaled gradient.  Only descent directions are yielded."""
    floor = 1e-10 * max(float(a.max()), EPS)
    w = kappa * (q - 1) * np.maximum(a, floor) ** (q - 2)
    gF = g[free]
    AF = A[free]
    H = (AF.multiply(w) @ AF.T).toarray() if free.any() else np.zeros((0, 0))
    diag = np.diag(H).copy() if len(H) else np.zeros(0)
    scale = max(float(diag.mean()), EPS) if len(H) else 1.0
    d = -lam.copy()
    if not free.any():
        yield d
        return
    for reg in (1e-12, 1e-8, 1e-4, 1.0):
        Hr = H.copy()
        Hr[np.diag_indices_from(Hr)] += reg * scale
        dF = _spd_solve(Hr, -gF)
        if dF is not None and float(np.dot(gF, dF)) < 0:
            d[free] = dF
            yield d.copy()
    d[free] = -gF / np.maximum(diag, 1e-12 * scale)
    yield d


def _armijo(evaluate, lam, d, g, F, noise, halvings: int = 60):
    t = 1.0
    for _ in range(halvings):
        lam_t = np.maximum(lam + t * d, 0.0)
        a_t, rho_t, F_t = evaluate(lam_t)
        if F_t <= F + 1e-4 * float(np.dot(g, lam_t - lam)) + noise:
            return lam_t, a_t, rho_t, F_t
        t *= 0.5
    return None


# ---------------------------------------------------------------------------
# full problem


@dataclass
class ModulusResult:
    """Modulus estimate with certified bracket ``lower <= value <= upper``.

    ``infinite`` marks the sentinel for families containing a constant curve;
    then ``value``, ``lower`` and ``upper`` are ``None``.
    """

    value: float | None
    lower: float | None
    upper: float | None
    density: np.ndarray
    active_curves: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    infinite: bool = False

    @property
    def relative_gap(self) -> float:
        if self.infinite:
            return 0.0
        return (self.upper - self.lower) / max(self.lower, EPS)

    def to_dict(self, space: MeasureSpace) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "converged": bool(self.converged),
            "infinite": bool(self.infinite),
            "iterations": int(self.iterations),
            "density": [{"u": int(u), "v": int(v), "rho": float(r)}
                        for (u, v), r in zip(space.edges.tolist(), self.density)],
            "active_curves": [list(c.nodes) for c in self.active_curves],
        }


def compute_modulus(space: MeasureSpace, family, p: float, *, tol_sep: float = 1e-6,
                    tol_gap: float = 1e-6, max_iterations: int | None = None,
                    cuts_per_iteration: int = 128, inner_tol: float = 1e-12,
                    prune: bool = True, seed: bool = True) -> ModulusResult:
    """Compute ``Mod_p(family)`` on ``space`` by constraint generation.

    Parameters
    ----------
    space : MeasureSpace
        Space whose lengths and edge masses define the modulus.
    family
        Any curve family from :mod:`qcmod.curves`.
    p : float
        Exponent, strictly greater than 1.
    tol_sep : float
        Admissibility slack: stop once every member has weighted length
        at least ``1 - tol_sep``.
    tol_gap : float
        Stop once ``(upper - lower) / lower <= tol_gap``.
    max_iterations : int, optional
        Defaults to ``10 * n_edges``.  Exhausting it is not an error; the
        result has ``converged=False``.
    cuts_per_iteration : int
        Violated curves added per oracle call.

    Returns
    -------
    ModulusResult
    """
    p = _check_exponent(p)
    m = space.n_edges
    if max_iterations is None:
        max_iterations = 10 * max(m, 1)
    zero = np.zeros(m)
    if isinstance(family, ExplicitFamily) and family.has_trivial:
        return ModulusResult(None, None, None, zero, [], 0, True, infinite=True)

    sep = shortest_violating_curve(space, family, zero, tol_sep, cuts_per_iteration)
    if sep.witness is None:
        return ModulusResult(0.0, 0.0, 0.0, zero, [], 0, True)

    curves: list[Curve] = []
    keys: set = set()
    _add_cuts(sep, curves, keys)
    lam = None
    if seed:
        extra, weights = _seed(space, family, p)
        if extra:
            lam = np.zeros(len(curves))
            for c, w in zip(extra, weights):
                if c.canonical() not in keys:
                    keys.add(c.canonical())
                    curves.append(c)
                    lam = np.append(lam, w)
    lower, upper = 0.0, math.inf
    rho, value = zero, 0.0
    converged = False
    it = 0
    while it < max_iterations:
        it += 1
        sol = solve_restricted(space, curves, p, tol=inner_tol, multipliers=lam)
        lam = sol.multipliers
        rho = sol.density
        lower = max(lower, sol.lower)
        sep = shortest_violating_curve(space, family, rho, tol_sep, cuts_per_iteration)
        mw = sep.min_weighted_length
        if mw >= 1:
            upper = min(upper, sol.value)
        elif mw > 0:
            upper = min(upper, sol.value / mw ** p)
        value = sol.value
        gap = (upper - lower) / max(lower, EPS)
        if sep.admissible or gap <= tol_gap:
            converged = True
            break
        if not _add_cuts(sep, curves, keys):
            converged = gap <= tol_gap
            break
        if prune:
            lam = _prune(space, curves, keys, lam, rho)
    # both are certified bounds; a crossing is rounding noise
    lower = min(lower, upper)
    value = min(max(value, lower), upper)
    return ModulusResult(value, lower, upper, rho, list(curves), it, converged)


def _prune(space, curves, keys, lam, rho):
    """Drop collected curves with zero multiplier and slack >= 1e-3, in place."""
    k = len(lam)
    keep = np.ones(len(curves), dtype=bool)
    slack = np.array([line_integral(space, rho, c) for c in curves[:k]]) - 1.0
    keep[:k] = (lam > 0) | (slack < 1e-3)
    if keep.all():
        return lam
    for c in (c for c, kp in zip(curves, keep) if not kp):
        keys.discard(c.canonical())
    curves[:] = [c for c, kp in zip(curves, keep) if kp]
    return lam[keep[:k]]


def _add_cuts(sep: SeparationResult, curves: list, keys: set) -> bool:
    added = False
    for c in sep.witnesses:
        key = c.canonical()
        if key not in keys:
            keys.add(key)
            curves.append(c)
            added = True
    return added


# ---------------------------------------------------------------------------
# warm start for connecting families


def _incidence(space: MeasureSpace) -> sparse.csr_matrix:
    m = space.n_edges
    rows = np.repeat(np.arange(m), 2)
    cols = space.edges.ravel()
    vals = np.tile([1.0, -1.0], m)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(m, space.n_nodes))


def capacity_potential(space: MeasureSpace, A, B, p: float, tol: float = 1e-11,
                       max_newton: int = 100) -> np.ndarray:
    """Minimize ``sum_e sigma_e |du_e / len_e|^p`` with ``u = 0`` on A, 1 on B.

    Damped Newton on the free nodes, started from the ``p = 2`` solution.
    """
    A = sorted(set(A))
    B = sorted(set(B))
    n = space.n_nodes
    D = _incidence(space)
    c = np.asarray(space.sigma) / np.asarray(space.length) ** p
    fixed = np.zeros(n, dtype=bool)
    fixed[A] = True
    fixed[B] = True
    free = np.flatnonzero(~fixed)
    u = np.zeros(n)
    u[B] = 1.0
    if not len(free):
        return u
    Df = D[:, free].tocsc()

    def phi(u):
        return float(np.dot(c, np.abs(D @ u) ** p))

    def newton_step(u, p_eff):
        t = D @ u
        scale = max(float(np.abs(t).max()), EPS)
        w = c * p_eff * (p_eff - 1) * (t * t + (1e-9 * scale) ** 2) ** ((p_eff - 2) / 2)
        g = Df.T @ (c * p_eff * np.abs(t) ** (p_eff - 1) * np.sign(t))
        H = (Df.T @ sparse.diags(w) @ Df).tocsc()
        H = H + sparse.identity(len(free), format="csc") * (1e-14 * float(H.diagonal().mean()))
        return g, spsolve(H, -g)

    # quadratic start: one linear solve
    c2 = np.asarray(space.sigma) / np.asarray(space.length) ** 2
    L = (Df.T @ sparse.diags(c2) @ Df).tocsc()
    u[free] = spsolve(L, -(Df.T @ (c2 * (D @ u))))
    if p == 2:
        return u
    f = phi(u)
    for _ in range(max_newton):
        g, du = newton_step(u, p)
        if float(np.abs(g).max()) <= tol * max(f, EPS):
            break
        step = 1.0
        while step > 1e-12:
            trial = u.copy()
            trial[free] += step * du
            ft = phi(trial)
            if ft <= f:
                break
            step *= 0.5
        else:
            break
        if f - ft <= 1e-15 * f:
            u, f = trial, ft
            break
        u, f = trial, ft
    return u


def _flow_paths(space: MeasureSpace, u: np.ndarray, A, B, p: float, max_paths: int):
    """Decompose the optimal flow of potential ``u`` into A-to-B paths.

    Edge flow is ``p sigma |du|^(p-1) / len^p``, oriented toward increasing
    potential.  Returns ``(curves, weights)``; weights are path flows.
    """
    t = u[space.edges[:, 1]] - u[space.edges[:, 0]]
    flow = p * np.asarray(space.sigma) * np.abs(t) ** (p - 1) / np.asarray(space.length) ** p
    total = flow.sum()
    if total <= 0:
        return [], []
    out_edges: list[list[int]] = [[] for _ in range(space.n_nodes)]
    for k, ((a, b), tk) in enumerate(zip(space.edges.tolist(), t.tolist())):
        if tk > 0:
            out_edges[a].append(k)
        elif tk < 0:
            out_edges[b].append(k)
    heads = np.where(t > 0, space.edges[:, 1], space.edges[:, 0])
    Bset = set(B)
    resid = flow.copy()
    thresh = 1e-9 * resid.max()
    curves, weights, seen = [], [], set()
    for _ in range(max_paths):
        best = None
        for a in A:
            for k in out_edges[a]:
                if resid[k] > thresh and (best is None or resid[k] > resid[best]):
                    best = k
        if best is None:
            break
        a0 = int(space.edges[best, 0] if t[best] > 0 else space.edges[best, 1])
        nodes, used = [a0], [best]
        v = int(heads[best])
        nodes.append(v)
        while v not in Bset:
            nxt = [k for k in out_edges[v] if resid[k] > thresh]
            if not nxt:
                break
            k = max(nxt, key=lambda k: resid[k])
            used.append(k)
            v = int(heads[k])
            nodes.append(v)
        bottleneck = float(resid[used].min())
        resid[used] -= bottleneck
        if v not in Bset:
            continue
        c = Curve(tuple(nodes))
        if c.canonical() in seen:
            continue
        seen.add(c.canonical())
        curves.append(c)
        weights.append(bottleneck)
    return curves, weights


def _connect_sets(family):
    while isinstance(family, ImageFamily):
        family = family.inner
    if isinstance(family, ConnectFamily):
        A, B = family.A, family.B
    elif isinstance(family, AnnularFamily):
        A, B = family.inner, family.outer
    else:
        return None
    if not B or A & B:
        return None
    return sorted(A), sorted(B)


def _seed(space: MeasureSpace, family, p: float):
    sets = _connect_sets(family)
    if sets is None:
        return [], None
    A, B = sets
    u = capacity_potential(space, A, B, p)
    curves, weights = _flow_paths(space, u, A, B, p, max_paths=4 * space.n_edges)
    if not curves:
        return [], None
    return curves, np.array(weights)



@dataclass
class ModulusProblem:
    """Bundled modulus request; ``solve()`` runs :func:`compute_modulus`."""

    space: MeasureSpace
    family: object
    p: float
    tol_sep: float = 1e-6
    tol_gap: float = 1e-6
    max_iterations: int | None = None

    def __post_init__(self):
        self.p = _check_exponent(self.p)

    def solve(self, **kw) -> ModulusResult:
        return compute_modulus(self.space, self.family, self.p, tol_sep=self.tol_sep,
                               tol_gap=self.tol_gap, max_iterations=self.max_iterations,
                               **kw)


def admissibility_check(space: MeasureSpace, family, rho, tol: float = 1e-6
                        ) -> SeparationResult:
    """Is ``rho`` admissible for ``family`` (up to ``tol``)?"""
    return shortest_violating_curve(space, family, rho, tol)


# ---------------------------------------------------------------------------
# explicit densities and independent oracles


def annulus_density(space: MeasureSpace, center: int, r: float, lam: float,
                    p: float = 2.0) -> tuple[np.ndarray, float]:
    """Constant density on the edges touching ``B(center, lam * r)``.

    The value is ``1 / ((lam - 1) r - 2 l_max)``, with ``l_max`` the longest
    edge, which is admissible for the annular family
    ``annular_family(space, center, r, lam * r)``.  Returns the density and
    its energy, an upper bound for that family's modulus.
    """
    p = _check_exponent(p)
    if not lam > 1:
        raise ModulusError("lambda must exceed 1")
    if not r > 0:
        raise ModulusError("r must be positive")
    width = (lam - 1) * r - 2 * space.max_edge_length
    if width <= 0:
        raise ScaleTooFine(
            f"scale too fine: (lambda-1)*r = {(lam - 1) * r:g} does not exceed "
            f"twice the longest edge {2 * space.max_edge_length:g}")
    inside = np.zeros(space.n_nodes, dtype=bool)
    inside[list(ball(space, center, lam * r).members)] = True
    touched = inside[space.edges[:, 0]] | inside[space.edges[:, 1]]
    rho = np.where(touched, 1.0 / width, 0.0)
    return rho, energy(space, rho, p)


def conductance_oracle(space: MeasureSpace, A, B) -> float:
    """Effective conductance between ``A`` and ``B`` with ``c = sigma / len^2``.

    Solves the Dirichlet problem (potential 0 on ``A``, 1 on ``B``) and
    returns the dissipated energy, which equals the 2-modulus of the
    connecting family.
    """
    A = sorted(set(int(a) for a in A))
    B = sorted(set(int(b) for b in B))
    if not A or not B:
        raise SpaceError("A and B must be nonempty")
    if set(A) & set(B):
        raise SpaceError("A and B must be disjoint")
    n = space.n_nodes
    u, v = space.edges[:, 0], space.edges[:, 1]
    c = np.asarray(space.sigma) / np.asarray(space.length) ** 2
    W = sparse.coo_matrix((np.concatenate([c, c]), (np.concatenate([u, v]),
                                                     np.concatenate([v, u]))),
                          shape=(n, n)).tocsr()
    L = sparse.diags(np.asarray(W.sum(axis=1)).ravel()) - W
    phi = np.zeros(n)
    phi[B] = 1.0
    interior = np.setdiff1d(np.arange(n), np.array(A + B))
    if len(interior):
        L = L.tocsr()
        rhs = -L[interior][:, B] @ np.ones(len(B))
        sol = spsolve(L[interior][:, interior].tocsc(), rhs)
        phi[interior] = np.atleast_1d(sol)
    return float(np.dot(c, (phi[u] - phi[v]) ** 2))


def single_curve_modulus(space: MeasureSpace, curve: Curve, p: float) -> float:
    """Closed-form ``Mod_p`` of a one-curve family (Hoelder equality case).

    ``Mod_p = S^(1-p)`` with ``S = sum_e (n_e len_e)^q sigma_e^(1-q)``, where
    ``n_e`` is the multiplicity of ``e`` on the curve and ``q = p/(p-1)``.
    """
    p = _check_exponent(p)
    if curve.trivial:
        return math.inf
    q = p / (p - 1)
    e, counts = np.unique(curve.edge_ids(space), return_counts=True)
    S = np.sum((counts * space.length[e]) ** q * np.asarray(space.sigma)[e] ** (1 - q))
    return float(S ** (1 - p))

"""Homeomorphisms as remetrizations and their analytic data.

A :class:`RemetrizedMap` is the identity on one combinatorial graph that
carries two metric measure structures, the source side ``X`` and the target
side ``Y``.  Curves keep their node sequence under the map, so images and
preimages of curve families are exact.

Edges are treated as metric segments that the map stretches linearly.  The
upper-gradient inequality on short subcurves inside an edge then forces
``g(e) >= lenY(e) / lenX(e)``, which is why that ratio is the minimal field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .curves import Curve, FamilyError, displacement_family
from .modulus import admissibility_check, compute_modulus, _check_exponent
from .space import MeasureSpace, SpaceError, ball

__all__ = [
    "RemetrizedMap",
    "GradientField",
    "UpperGradientReport",
    "DilatationReport",
    "ScanRow",
    "ScanResult",
    "identity_map",
    "scaling_map",
    "random_remetrization",
    "snowflake_to_rug",
    "map_to_dict",
    "map_from_dict",
    "save_map",
    "load_map",
    "minimal_upper_gradient",
    "upper_gradient_check",
    "volume_derivative",
    "edge_jacobian",
    "pointwise_lip",
    "pointwise_HO",
    "sobolev_energy",
    "dilatation_report",
    "default_eps_grid",
    "modgrad_scan",
]


class RemetrizedMap:
    """Node-identity map ``f: X -> Y`` between two structures on one graph.

    Parameters
    ----------
    X, Y : MeasureSpace
        Source and target.  They must share the node count and the edge list
        (same order); lengths and measures are free.
    """

    def __init__(self, X: MeasureSpace, Y: MeasureSpace):
        if X.n_nodes != Y.n_nodes or not np.array_equal(X.edges, Y.edges):
            raise SpaceError("X and Y must share the same graph (nodes and edge order)")
        self.X = X
        self.Y = Y

    @classmethod
    def from_arrays(cls, edges, lenX, muX, lenY, nuY, labels=None) -> "RemetrizedMap":
        X = MeasureSpace(muX, edges, lenX, labels)
        Y = MeasureSpace(nuY, edges, lenY, labels)
        return cls(X, Y)

    @property
    def n_nodes(self) -> int:
        return self.X.n_nodes

    @property
    def n_edges(self) -> int:
        return self.X.n_edges

    @property
    def edges(self) -> np.ndarray:
        return self.X.edges

    def inverse(self) -> "RemetrizedMap":
        return RemetrizedMap(self.Y, self.X)

    def compose(self, other: "RemetrizedMap") -> "RemetrizedMap":
        """``other o self``; requires ``other.X`` to match ``self.Y`` as a space."""
        if not _same_structure(self.Y, other.X):
            raise SpaceError("composition needs other.X == self.Y")
        return RemetrizedMap(self.X, other.Y)

    def is_identity(self) -> bool:
        return _same_structure(self.X, self.Y)

    def __eq__(self, other):
        if not isinstance(other, RemetrizedMap):
            return NotImplemented
        return _same_structure(self.X, other.X) and _same_structure(self.Y, other.Y)

    __hash__ = None

    def __repr__(self):
        return f"RemetrizedMap(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _same_structure(a: MeasureSpace, b: MeasureSpace) -> bool:
    return (np.array_equal(a.mu, b.mu) and np.array_equal(a.edges, b.edges)
            and np.array_equal(a.length, b.length))


# ---------------------------------------------------------------------------
# constructors


def identity_map(space: MeasureSpace) -> RemetrizedMap:
    return RemetrizedMap(space, space)


def scaling_map(space: MeasureSpace, c: float, Q: float | None = None) -> RemetrizedMap:
    """Conformal scaling: lengths times ``c``, measures times ``c**Q``.

    With ``Q=None`` the measures are left unchanged.
    """
    if not c > 0:
        raise SpaceError("scale factor must be positive")
    nu = space.mu if Q is None else space.mu * c ** Q
    return RemetrizedMap(space, space.with_lengths(space.length * c, nu))


def random_remetrization(space: MeasureSpace, seed=0, spread: float = 4.0
                         ) -> RemetrizedMap:
    """Target with log-uniform random lengths and measures in ``[1/spread, spread]``
    times the source values."""
    rng = np.random.default_rng(seed)
    s = np.log(spread)
    lenY = space.length * np.exp(rng.uniform(-s, s, space.n_edges))
    nuY = space.mu * np.exp(rng.uniform(-s, s, space.n_nodes))
    return RemetrizedMap(space, space.with_lengths(lenY, nuY))


def snowflake_to_rug(n: int, side: float = 1.0) -> RemetrizedMap:
    """Identity from the snowflaked grid to the rug grid (both ``h**2`` measures)."""
    from .space import build_rug, build_snowflake
    return RemetrizedMap(build_snowflake(n, side), build_rug(n, side))


# ---------------------------------------------------------------------------
# serialization


def map_to_dict(f: RemetrizedMap) -> dict:
    nodes = [{"id": i} for i in range(f.n_nodes)]
    if f.X.labels is not None:
        for rec, lab in zip(nodes, f.X.labels):
            rec["label"] = list(lab)
    return {
        "graph": {"nodes": nodes,
                  "edges": [{"u": int(u), "v": int(v)} for u, v in f.edges.tolist()]},
        "X": {"len": f.X.length.tolist(), "mu": f.X.mu.tolist()},
        "Y": {"len": f.Y.length.tolist(), "nu": f.Y.mu.tolist()},
    }


def map_from_dict(data: dict) -> RemetrizedMap:
    try:
        graph = data["graph"]
        edges = [(int(e["u"]), int(e["v"])) for e in graph["edges"]]
        X, Y = data["X"], data["Y"]
        lenX, muX = X["len"], X["mu"]
        lenY, nuY = Y["len"], Y["nu"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpaceError(f"malformed map JSON: missing or bad field {exc}") from None
    if not (len(lenX) == len(lenY) == len(edges)):
        raise SpaceError("X.len and Y.len need one entry per edge")
    if len(muX) != len(nuY):
        raise SpaceError("X.mu and Y.nu need one entry per node")
    labels = None
    nodes = graph.get("nodes")
    if nodes and all("label" in rec for rec in nodes):
        by_id = {int(rec["id"]): rec["label"] for rec in nodes}
        labels = [by_id[i] for i in range(len(muX))]
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return RemetrizedMap.from_arrays(edges, lenX, muX, lenY, nuY, labels)


def save_map(f: RemetrizedMap, path) -> None:
    Path(path).write_text(json.dumps(map_to_dict(f), indent=1, allow_nan=False))


def load_map(path) -> RemetrizedMap:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpaceError(f"malformed JSON in {path}: {exc}") from None
    return map_from_dict(data)


# ---------------------------------------------------------------------------
# gradients and Jacobians


@dataclass(frozen=True)
class GradientField:
    """Per-edge gradient values ``g``."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if np.any(g < 0):
            raise ValueError("gradient field must be nonnegative")
        object.__setattr__(self, "g", g)

    def minimum(self, other: "GradientField") -> "GradientField":
        return GradientField(np.minimum(self.g, other.g))


def minimal_upper_gradient(f: RemetrizedMap) -> GradientField:
    """Minimal upper gradient ``g(e) = lenY(e) / lenX(e)``."""
    return GradientField(f.Y.length / f.X.length)


@dataclass
class UpperGradientReport:
    passed: bool
    witness: Curve | None = None
    deficit: float = 0.0
    checked: int = 0

    def __bool__(self):
        return self.passed


def _random_walk(space: MeasureSpace, rng, steps: int) -> Curve:
    v = int(rng.integers(space.n_nodes))
    nodes = [v]
    adj = space.adjacency
    for _ in range(steps):
        nbrs = adj[v]
        v = nbrs[int(rng.integers(len(nbrs)))][0]
        nodes.append(v)
    return Curve(tuple(nodes))


def upper_gradient_check(f: RemetrizedMap, g, samples: int = 200, seed=0,
                         rtol: float = 1e-12) -> UpperGradientReport:
    """Check ``sum_{e in gamma} g(e) lenX(e) >= d_Y(f(v_0), f(v_k))``.

    Every edge is checked first as a segment (the inequality on its short
    subcurves reads ``g(e) lenX(e) >= lenY(e)``), then ``samples`` random
    walks and ``samples`` X-geodesics between random pairs.  The first
    failure is returned as the witness.
    """
    from .space import geodesic
    g = np.asarray(getattr(g, "g", g), dtype=float)
    if g.shape != (f.n_edges,):
        raise ValueError("g must have one entry per edge")
    X, Y = f.X, f.Y
    checked = 0
    lhs = g * X.length
    for e in range(f.n_edges):
        checked += 1
        if lhs[e] < Y.length[e] * (1 - rtol):
            u, v = f.edges[e].tolist()
            return UpperGradientReport(False, Curve((u, v)), Y.length[e] - lhs[e], checked)
    if f.n_nodes < 2:
        return UpperGradientReport(True, checked=checked)
    rng = np.random.default_rng(seed)
    curves = []
    for _ in range(samples):
        curves.append(_random_walk(X, rng, int(rng.integers(1, 2 * f.n_nodes + 1))))
    for _ in range(samples):
        u, v = rng.choice(f.n_nodes, 2, replace=False).tolist()
        curves.append(Curve(tuple(geodesic(X, u, v))))
    for c in curves:
        checked += 1
        ids = c.edge_ids(X)
        integral = float(np.sum(lhs[ids]))
        disp = Y.distances_from(c.nodes[0])[c.nodes[-1]]
        if integral < disp * (1 - rtol):
            return UpperGradientReport(False, c, disp - integral, checked)
    return UpperGradientReport(True, checked=checked)


def volume_derivative(f: RemetrizedMap) -> np.ndarray:
    """Node Jacobian ``J(v) = nu(v) / mu(v)``."""
    return f.Y.mu / f.X.mu


def edge_jacobian(f: RemetrizedMap) -> np.ndarray:
    """Edge-averaged Jacobian ``(nu(u)+nu(v)) / (mu(u)+mu(v))``, equal to ``sigma_Y / sigma_X``."""
    u, v = f.edges[:, 0], f.edges[:, 1]
    return (f.Y.mu[u] + f.Y.mu[v]) / (f.X.mu[u] + f.X.mu[v])


def _neighbor_ratios(f: RemetrizedMap, v: int):
    dX = f.X.distances_from(v)
    dY = f.Y.distances_from(v)
    nb = np.array([u for u, _ in f.X.adjacency[v]], dtype=np.int64)
    return nb, dX[nb], dY[nb]


def pointwise_lip(f: RemetrizedMap, v: int) -> float:
    """Max over neighbours ``u`` of ``d_Y(u, v) / d_X(u, v)``; 0 at an isolated node."""
    f.X._check_node(v)
    nb, dx, dy = _neighbor_ratios(f, int(v))
    if nb.size == 0:
        return 0.0
    return float(np.max(dy / dx))


def pointwise_HO(f: RemetrizedMap, v: int, Q: float, radii: Sequence[float] | None = None
                 ) -> tuple[float, float]:
    """Pointwise outer dilatation at ``v``, two ways.

    Returns ``(ball_based, lip_based)``.  The ball-based value maximizes
    ``d_Y(u,v)^Q mu(B_r(v)) / (r^Q nu(B_r(v)))`` with ``r = d_X(u,v)`` over
    the neighbours ``u`` of ``v`` or, when ``radii`` is given, over all nodes
    with ``0 < d_X(u,v) <= max(radii)``.  The ball is the X-metric ball, whose
    image is the same node set.  ``lip_based = lip(v)^Q / J(v)``.
    """
    f.X._check_node(v)
    v = int(v)
    J = f.Y.mu[v] / f.X.mu[v]
    lip_based = pointwise_lip(f, v) ** Q / J
    dX = f.X.distances_from(v)
    dY = f.Y.distances_from(v)
    if radii is None:
        cand, _, _ = _neighbor_ratios(f, v)
    else:
        rmax = max(radii)
        cand = np.flatnonzero((dX > 0) & (dX <= rmax))
    best = 0.0
    for u in cand.tolist():
        r = dX[u]
        members = np.flatnonzero(dX <= r * (1 + 1e-12))
        ratio = f.X.mu[members].sum() / f.Y.mu[members].sum()
        best = max(best, (dY[u] / r) ** Q * ratio)
    return float(best), float(lip_based)


def sobolev_energy(f: RemetrizedMap, p: float) -> float:
    """``sum_e sigma_X(e) g(e)^p`` for the minimal upper gradient ``g``."""
    _check_exponent(p)
    g = minimal_upper_gradient(f).g
    return float(np.sum(f.X.sigma * g ** p))


@dataclass
class DilatationReport:
    """Per-edge and per-node analytic data of a map at exponent ``Q``."""

    Q: float
    g: np.ndarray
    J: np.ndarray
    J_edge: np.ndarray
    lip: np.ndarray
    HO_ball: np.ndarray
    HO_lip: np.ndarray
    esssup_HO: float
    energy: float

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "edges": {"g": self.g.tolist(), "J_edge": self.J_edge.tolist()},
            "nodes": {"J": self.J.tolist(), "lip": self.lip.tolist(),
                      "HO_ball": self.HO_ball.tolist(), "HO_lip": self.HO_lip.tolist()},
            "esssup_HO": self.esssup_HO,
            "sobolev_energy": self.energy,
        }


def dilatation_report(f: RemetrizedMap, Q: float, p: float | None = None
                      ) -> DilatationReport:
    """Collect gradient, Jacobian, lip and ``H_O`` fields; energy uses ``p`` (default ``Q``)."""
    _check_exponent(Q)
    p = Q if p is None else p
    lip = np.array([pointwise_lip(f, v) for v in range(f.n_nodes)])
    ho = np.array([pointwise_HO(f, v, Q) for v in range(f.n_nodes)]).reshape(-1, 2)
    return DilatationReport(
        Q=float(Q),
        g=minimal_upper_gradient(f).g,
        J=volume_derivative(f),
        J_edge=edge_jacobian(f),
        lip=lip,
        HO_ball=ho[:, 0],
        HO_lip=ho[:, 1],
        esssup_HO=float(ho[:, 1].max()),
        energy=sobolev_energy(f, p),
    )


# ---------------------------------------------------------------------------
# the epsilon scan of the modulus of preimages of displacement families


@dataclass
class ScanRow:
    eps: float
    value: float        # eps^p * Mod_p
    lower: float
    upper: float
    converged: bool
    admissible: bool    # whether g / eps passed the oracle


@dataclass
class ScanResult:
    p: float
    energy: float
    rows: list[ScanRow] = field(default_factory=list)
    dropped: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def bound_holds(self, rtol: float = 1e-6) -> bool:
        return all(r.value <= self.energy * (1 + rtol) for r in self.rows)

    def to_dict(self) -> dict:
        return {"p": self.p, "energy": self.energy,
                "rows": [vars(r) for r in self.rows], "dropped": self.dropped}


def default_eps_grid(f: RemetrizedMap, quantiles=(0.5, 0.25, 0.1, 0.05)) -> list[float]:
    """Quantiles of the positive Y-displacements, kept only when ``>= 2 max lenY``."""
    D = f.Y.distance_matrix
    d = D[np.triu_indices(f.n_nodes, 1)]
    d = d[d > 0]
    if d.size == 0:
        return []
    floor = 2 * f.Y.max_edge_length
    eps = sorted({float(np.quantile(d, q)) for q in quantiles}, reverse=True)
    return [e for e in eps if e >= floor]


def modgrad_scan(f: RemetrizedMap, p: float, eps_list: Sequence[float] | None = None,
                 **solver_kw) -> ScanResult:
    """``eps^p Mod_p(f^{-1}(Gamma_eps))`` over ``eps_list``, plus the energy.

    ``Gamma_eps`` collects the curves whose image endpoints are at least
    ``eps`` apart in Y.  Its preimage is solved on X.  Each row also records
    whether ``g / eps`` is admissible, which is what makes
    ``value <= energy`` hold.  Values of ``eps`` below ``2 max lenY`` are
    moved to ``dropped``.
    """
    _check_exponent(p)
    E = sobolev_energy(f, p)
    g = minimal_upper_gradient(f).g
    if eps_list is None:
        eps_list = default_eps_grid(f)
    floor = 2 * f.Y.max_edge_length
    out = ScanResult(float(p), E)
    for eps in sorted((float(e) for e in eps_list), reverse=True):
        if not eps > 0:
            raise FamilyError("eps must be positive")
        if eps < floor * (1 - 1e-12):
            out.dropped.append(eps)
            continue
        fam = displacement_family(f.Y, eps)
        res = compute_modulus(f.X, fam, p, **solver_kw)
        adm = admissibility_check(f.X, fam, g / eps).admissible
        s = eps ** p
        out.rows.append(ScanRow(eps, s * res.value, s * res.lower, s * res.upper,
                                res.converged, adm))
    return out

"""Discrete metric measure spaces.

A :class:`MeasureSpace` is a finite, connected, undirected graph whose nodes
carry a positive measure ``mu`` and whose edges carry a positive length.  The
metric is the length-weighted graph distance.  Node ids are the contiguous
integers ``0 .. n-1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

__all__ = [
    "SpaceError",
    "MeasureSpace",
    "Ball",
    "build_grid",
    "build_snowflake",
    "build_rug",
    "build_path",
    "build_product_with_interval",
    "random_space",
    "graph_distance",
    "geodesic",
    "ball",
    "doubling_constant",
    "greedy_5r_cover",
    "regularity_constants",
    "space_to_dict",
    "space_from_dict",
    "save_space",
    "load_space",
]

# relative slack for closed-ball membership; absorbs summation-order noise only
BALL_RTOL = 1e-12


class SpaceError(ValueError):
    """Raised for malformed or invalid space data."""


class MeasureSpace:
    """Weighted graph with node measures and edge lengths.

    Parameters
    ----------
    mu : array_like, shape (n,)
        Positive node measures.
    edges : array_like, shape (m, 2)
        Node-id pairs, no self-loops, no repeated pairs.
    length : array_like, shape (m,)
        Positive edge lengths.
    labels : sequence of tuples, optional
        Per-node labels, e.g. grid coordinates.
    meta : mapping, optional
        Free-form metadata (builder name, nominal dimension ``Q`` ...).
    """

    def __init__(self, mu, edges, length, labels=None, meta=None):
        mu = np.array(mu, dtype=float).reshape(-1)
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        length = np.array(length, dtype=float).reshape(-1)
        _validate(mu, edges, length)
        if labels is not None:
            labels = [tuple(int(c) for c in lab) for lab in labels]
            if len(labels) != len(mu):
                raise SpaceError("labels must have one entry per node")
        for arr in (mu, edges, length):
            arr.setflags(write=False)
        self.mu = mu
        self.edges = edges
        self.length = length
        self.labels = labels
        self.meta = dict(meta or {})
        if self.n_nodes > 1 and not self._connected():
            raise SpaceError("graph is not connected")

    # -- basic structure -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.mu)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def sigma(self) -> np.ndarray:
        """Edge masses ``(mu(u) + mu(v)) / 2``."""
        s = 0.5 * (self.mu[self.edges[:, 0]] + self.mu[self.edges[:, 1]])
        s.setflags(write=False)
        return s

    @property
    def total_measure(self) -> float:
        return float(self.mu.sum())

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per node, sorted ``(neighbor, edge index)`` pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for k, (u, v) in enumerate(self.edges.tolist()):
            adj[u].append((v, k))
            adj[v].append((u, k))
        for row in adj:
            row.sort()
        return adj

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        idx = {}
        for k, (u, v) in enumerate(self.edges.tolist()):
            idx[(u, v)] = k
            idx[(v, u)] = k
        return idx

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self.edge_index[(u, v)]
        except KeyError:
            raise SpaceError(f"no edge between {u} and {v}") from None

    @cached_property
    def _matrix(self) -> sparse.csr_matrix:
        n = self.n_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        m = sparse.coo_matrix(
            (np.concatenate([self.length, self.length]),
             (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n, n),
        )
        return m.tocsr()

    def _connected(self) -> bool:
        ncomp, _ = csgraph.connected_components(self._matrix, directed=False)
        return ncomp == 1

    # -- distances ---------------------------------------------------------

    @cached_property
    def _dist_cache(self) -> dict[int, np.ndarray]:
        return {}

    def distances_from(self, u: int) -> np.ndarray:
        """Graph distances from node ``u`` to every node."""
        self._check_node(u)
        d = self._dist_cache.get(u)
        if d is None:
            if "distance_matrix" in self.__dict__:
                d = self.distance_matrix[u]
            else:
                d = csgraph.dijkstra(self._matrix, directed=False, indices=u)
                d.setflags(write=False)
            self._dist_cache[u] = d
        return d

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs graph distances; O(n^2) memory."""
        d = csgraph.dijkstra(self._matrix, directed=False)
        d.setflags(write=False)
        return d

    @cached_property
    def diameter(self) -> float:
        if self.n_nodes <= 1:
            return 0.0
        return float(self.distance_matrix.max())

    @property
    def max_edge_length(self) -> float:
        return float(self.length.max()) if self.n_edges else 0.0

    def _check_node(self, u: int) -> None:
        if not 0 <= int(u) < self.n_nodes:
            raise SpaceError(f"unknown node id {u}")

    # -- comparison ----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return (
            np.array_equal(self.mu, other.mu)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.length, other.length)
            and self.labels == other.labels
            and self.meta == other.meta
        )

    __hash__ = None

    def __repr__(self):
        return (f"MeasureSpace(n_nodes={self.n_nodes}, n_edges={self.n_edges}, "
                f"total_measure={self.total_measure:.6g})")

    def with_lengths(self, length, mu=None, meta=None) -> "MeasureSpace":
        """Same graph, new lengths (and optionally new measures)."""
        return MeasureSpace(self.mu if mu is None else mu, self.edges, length,
                            self.labels, self.meta if meta is None else meta)


def _validate(mu, edges, length):
    if mu.size == 0:
        raise SpaceError("space must have at least one node")
    for i, m in enumerate(mu):
        if not math.isfinite(m):
            raise SpaceError(f"node {i}: node measure must be finite")
        if m <= 0:
            raise SpaceError(f"node {i}: node measure must be positive")
    if len(length) != len(edges):
        raise SpaceError("edges and lengths differ in size")
    n = len(mu)
    seen = set()
    for k, ((u, v), ell) in enumerate(zip(edges.tolist(), length.tolist())):
        if not (0 <= u < n and 0 <= v < n):
            raise SpaceError(f"edge {k} ({u},{v}): unknown node id")
        if u == v:
            raise SpaceError(f"edge {k} ({u},{v}): self-loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise SpaceError(f"edge {k} ({u},{v}): repeated edge")
        seen.add(key)
        if not math.isfinite(ell) or ell <= 0:
            raise SpaceError(f"edge {k} ({u},{v}): edge length must be positive")


# ---------------------------------------------------------------------------
# builders


def _grid_edges(n: int):
    """Edges of the (n+1) x (n+1) grid; returns (edges, is_horizontal)."""
    side = n + 1
    edges, horiz = [], []
    for y in range(side):
        for x in range(side):
            i = y * side + x
            if x < n:
                edges.append((i, i + 1))
                horiz.append(True)
            if y < n:
                edges.append((i, i + side))
                horiz.append(False)
    labels = [(x, y) for y in range(side) for x in range(side)]
    return np.array(edges, dtype=np.int64), np.array(horiz), labels


def build_grid(n: int, side: float = 1.0, alpha: float = 1.0) -> MeasureSpace:
    """Square grid of ``(n+1)^2`` nodes with spacing ``h = side / n``.

    Every edge has length ``h**alpha`` and every node measure ``h**2``; for
    ``alpha < 1`` this is the snowflaked plane with nominal dimension
    ``Q = 2 / alpha``.  Node ``(x, y)`` has id ``y * (n + 1) + x``.
    """
    if int(n) != n or n < 1:
        raise SpaceError("n must be a positive integer")
    if not (0 < alpha <= 1):
        raise SpaceError("alpha must be in (0,1]")
    if side <= 0:
        raise SpaceError("side must be positive")
    n = int(n)
    h = side / n
    edges, _, labels = _grid_edges(n)
    length = np.full(len(edges), h ** alpha)
    mu = np.full((n + 1) ** 2, h * h)
    meta = {"builder": "grid", "n": n, "side": float(side),
            "alpha": float(alpha), "Q": 2.0 / alpha}
    return MeasureSpace(mu, edges, length, labels, meta)


def build_snowflake(n: int, side: float = 1.0) -> MeasureSpace:
    """``build_grid`` with ``alpha = 2/3`` (nominal dimension 3)."""
    return build_grid(n, side, 2.0 / 3.0)


def build_rug(n: int, side: float = 1.0) -> MeasureSpace:
    """Rickman's rug on a grid: horizontal edges ``h``, vertical ``sqrt(h)``."""
    if int(n) != n or n < 1:
        raise SpaceError("n must be a positive integer")
    if side <= 0:
        raise SpaceError("side must be positive")
    n = int(n)
    h = side / n
    edges, horiz, labels = _grid_edges(n)
    length = np.where(horiz, h, math.sqrt(h))
    mu = np.full((n + 1) ** 2, h * h)
    meta = {"builder": "rug", "n": n, "side": float(side), "Q": 3.0}
    return MeasureSpace(mu, edges, length, labels, meta)


def build_path(n_edges: int, length=1.0, mu=1.0) -> MeasureSpace:
    """Path graph ``0 - 1 - ... - n_edges``.

    ``length`` and ``mu`` may be scalars or per-edge / per-node arrays.
    """
    if int(n_edges) != n_edges or n_edges < 1:
        raise SpaceError("n_edges must be a positive integer")
    k = int(n_edges)
    edges = np.column_stack([np.arange(k), np.arange(1, k + 1)])
    length = np.broadcast_to(np.asarray(length, dtype=float), (k,))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (k + 1,))
    return MeasureSpace(mu, edges, length, [(i,) for i in range(k + 1)],
                        {"builder": "path"})


def build_product_with_interval(base: MeasureSpace, m: int, length: float = 1.0,
                                q_exponent: float | None = None) -> MeasureSpace:
    """Product of ``base`` with ``[0, length]`` cut into ``m`` pieces.

    Node ``(v, i)`` has id ``i * base.n_nodes + v``.  In-layer edges copy the
    base lengths, inter-layer edges have length ``length / m`` and the node
    measure is ``mu_base(v) * length / m``; the graph metric is the l1 product
    metric.  ``q_exponent`` is the nominal dimension recorded in ``meta``.
    """
    if int(m) != m or m < 1:
        raise SpaceError("m must be a positive integer")
    if length <= 0:
        raise SpaceError("length must be positive")
    if q_exponent is not None and q_exponent <= 0:
        raise SpaceError("q_exponent must be positive")
    m = int(m)
    nb = base.n_nodes
    dt = length / m
    edges, lens = [], []
    for i in range(m + 1):
        off = i * nb
        edges.append(base.edges + off)
        lens.append(base.length)
        if i < m:
            vs = np.arange(nb)
            edges.append(np.column_stack([vs + off, vs + off + nb]))
            lens.append(np.full(nb, dt))
    mu = np.tile(base.mu * dt, m + 1)
    if base.labels is not None:
        labels = [lab + (i,) for i in range(m + 1) for lab in base.labels]
    else:
        labels = [(v, i) for i in range(m + 1) for v in range(nb)]
    meta = {"builder": "product", "m": m, "length": float(length),
            "base": dict(base.meta)}
    if q_exponent is not None:
        meta["Q"] = float(q_exponent)
    return MeasureSpace(mu, np.concatenate(edges), np.concatenate(lens), labels, meta)


def random_space(n: int, extra_edges: int = 0, seed=0, length_range=(0.3, 1.5),
                 mu_range=(0.5, 2.0)) -> MeasureSpace:
    """Seeded random connected graph: a random tree plus ``extra_edges`` chords,
    with uniform random lengths and measures."""
    rng = np.random.default_rng(seed)
    pairs = {(int(rng.integers(v)), v) for v in range(1, n)}
    budget = min(extra_edges, n * (n - 1) // 2 - len(pairs))
    while budget > 0:
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        if (a, b) not in pairs:
            pairs.add((a, b))
            budget -= 1
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return MeasureSpace(rng.uniform(*mu_range, n), edges,
                        rng.uniform(*length_range, len(edges)), meta={"builder": "random"})


# ---------------------------------------------------------------------------
# metric queries


def graph_distance(space: MeasureSpace, u: int, v: int) -> float:
    """Length of the shortest path between ``u`` and ``v``."""
    space._check_node(v)
    d = float(space.distances_from(u)[v])
    if not math.isfinite(d):
        raise SpaceError(f"node {v} unreachable from {u}")
    return d


def geodesic(space: MeasureSpace, u: int, v: int) -> list[int]:
    """Shortest path from ``u`` to ``v`` as a node list.

    Among all shortest paths the lexicographically smallest node sequence is
    returned.
    """
    space._check_node(u)
    space._check_node(v)
    to_v = space.distances_from(v)
    path = [u]
    cur = u
    while cur != v:
        target = to_v[cur]
        tol = BALL_RTOL * max(1.0, target)
        for w, k in space.adjacency[cur]:
            if abs(space.length[k] + to_v[w] - target) <= tol and to_v[w] < target:
                cur = w
                break
        else:  # pragma: no cover - distances are consistent
            raise SpaceError("geodesic reconstruction failed")
        path.append(cur)
    return path


@dataclass(frozen=True)
class Ball:
    """Closed ball ``{u : d(center, u) <= radius}``."""

    center: int
    radius: float
    members: frozenset
    measure: float

    def to_dict(self) -> dict:
        return {"center": int(self.center), "r": float(self.radius),
                "members": sorted(int(u) for u in self.members)}


def _ball_mask(space: MeasureSpace, center: int, r: float) -> np.ndarray:
    d = space.distances_from(center)
    return d <= r + BALL_RTOL * max(1.0, r)


def ball(space: MeasureSpace, center: int, r: float) -> Ball:
    """Closed ball of radius ``r`` around ``center``."""
    if r < 0:
        raise SpaceError("radius must be nonnegative")
    mask = _ball_mask(space, center, r)
    members = frozenset(np.flatnonzero(mask).tolist())
    return Ball(int(center), float(r), members, float(space.mu[mask].sum()))


def doubling_constant(space: MeasureSpace, radii: Sequence[float]) -> float:
    """Largest ratio ``mu(B(y, 2r)) / mu(B(y, r))`` over all nodes and radii."""
    radii = list(radii)
    if not radii or min(radii) <= 0:
        raise SpaceError("radii must be nonempty and positive")
    d = space.distance_matrix
    best = 1.0
    for r in radii:
        small = (d <= r + BALL_RTOL * max(1.0, r)) @ space.mu
        big = (d <= 2 * r + BALL_RTOL * max(1.0, 2 * r)) @ space.mu
        best = max(best, float((big / small).max()))
    return best


def regularity_constants(space: MeasureSpace, Q: float, radii: Sequence[float],
                         centers: Iterable[int]) -> tuple[float, float]:
    """Empirical ``(c, C)`` with ``c r^Q <= mu(B_r(y)) <= C r^Q`` on the scan."""
    ratios = [ball(space, y, r).measure / r ** Q for y in centers for r in radii]
    return min(ratios), max(ratios)


def greedy_5r_cover(space: MeasureSpace, subset: Iterable[int], r_max: float,
                    radius: Callable[[int], float] | Mapping[int, float] | None = None
                    ) -> list[Ball]:
    """Cover ``subset`` by balls whose fifth-radius shrinks are disjoint.

    Candidates are the balls ``B(y, r(y))`` for ``y`` in ``subset`` with
    ``r(y) = min(radius(y), r_max)`` (default ``r_max``).  They are scanned
    by decreasing radius, then node id, and a ball is kept when its center
    lies farther than ``(r_i + r_j) / 5`` from every kept center and is not
    already covered.  Every other rejected point lies within ``2 r_j / 5`` of
    a kept center with ``r_j >= r_i``, hence inside that ball.
    """
    pts = sorted(set(int(u) for u in subset))
    if not pts:
        raise SpaceError("subset must be nonempty")
    if r_max <= 0:
        raise SpaceError("r_max must be positive")

    def rad(y):
        if radius is None:
            return r_max
        r = radius(y) if callable(radius) else radius[y]
        return min(float(r), r_max)

    cand = sorted(((rad(y), y) for y in pts), key=lambda t: (-t[0], t[1]))
    chosen: list[tuple[float, int]] = []
    covered = np.zeros(space.n_nodes, dtype=bool)
    for r, y in cand:
        if covered[y]:
            # already inside a kept ball; skipping keeps the cover lean
            continue
        dy = space.distances_from(y)
        if all(dy[c] > (r + rc) / 5 for rc, c in chosen):
            chosen.append((r, y))
            covered |= _ball_mask(space, y, r)
    return [ball(space, y, r) for r, y in chosen]


# ---------------------------------------------------------------------------
# serialization


def space_to_dict(space: MeasureSpace) -> dict:
    nodes = []
    for i, m in enumerate(space.mu.tolist()):
        rec = {"id": i, "mu": m}
        if space.labels is not None:
            rec["label"] = list(space.labels[i])
        nodes.append(rec)
    edges = [{"u": int(u), "v": int(v), "len": float(ell)}
             for (u, v), ell in zip(space.edges.tolist(), space.length.tolist())]
    out = {"nodes": nodes, "edges": edges}
    if space.meta:
        out["meta"] = space.meta
    return out


def space_from_dict(data: dict) -> MeasureSpace:
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise SpaceError("space JSON needs 'nodes' and 'edges'")
    nodes = data["nodes"]
    try:
        ids = [int(rec["id"]) for rec in nodes]
        mu_by_id = {int(rec["id"]): float(rec["mu"]) for rec in nodes}
    except (KeyError, TypeError, ValueError) as exc:
        raise SpaceError(f"malformed node record: {exc}") from None
    if sorted(ids) != list(range(len(ids))):
        raise SpaceError("node ids must be the integers 0..n-1, each once")
    mu = [mu_by_id[i] for i in range(len(ids))]
    labels = None
    if nodes and all("label" in rec for rec in nodes):
        by_id = {int(rec["id"]): rec["label"] for rec in nodes}
        labels = [by_id[i] for i in range(len(ids))]
    try:
        edges = [(int(e["u"]), int(e["v"])) for e in data["edges"]]
        length = [float(e["len"]) for e in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpaceError(f"malformed edge record: {exc}") from None
    return MeasureSpace(mu, np.array(edges, dtype=np.int64).reshape(-1, 2),
                        length, labels, data.get("meta"))


def save_space(space: MeasureSpace, path) -> None:
    Path(path).write_text(json.dumps(space_to_dict(space), indent=1, allow_nan=False))


def load_space(path) -> MeasureSpace:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpaceError(f"malformed JSON in {path}: {exc}") from None
    return space_from_dict(data)

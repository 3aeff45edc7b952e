"""Curves, curve families and the separation oracle.

Curves are edge walks given by their node sequence.  Families are either
explicit lists or implicit descriptions (connecting, annular, displacement,
image) whose members are searched with weighted shortest-path sweeps.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .space import BALL_RTOL, MeasureSpace, SpaceError, ball

__all__ = [
    "FamilyError",
    "Curve",
    "ExplicitFamily",
    "ConnectFamily",
    "AnnularFamily",
    "DisplacementFamily",
    "ImageFamily",
    "SeparationResult",
    "MinorizationReport",
    "explicit_family",
    "connect_family",
    "annular_family",
    "displacement_family",
    "pushforward_family",
    "preimage_family",
    "line_integral",
    "curve_length",
    "shortest_violating_curve",
    "family_minimizers",
    "minorization_check",
    "curves_from_lists",
]

INF = math.inf


class FamilyError(ValueError):
    """Raised for invalid curve or family specifications."""


@dataclass(frozen=True)
class Curve:
    """Edge walk ``v_0, ..., v_k``; ``k >= 1`` unless ``trivial``."""

    nodes: tuple
    trivial: bool = False

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if self.trivial:
            if len(nodes) != 1:
                raise FamilyError("a trivial curve is a single node")
        elif len(nodes) < 2:
            raise FamilyError("a curve needs at least one edge")

    def __len__(self):
        return len(self.nodes) - 1

    def edge_ids(self, space: MeasureSpace) -> np.ndarray:
        return np.array([space.edge_id(u, v) for u, v in zip(self.nodes, self.nodes[1:])],
                        dtype=np.int64)

    def cumulative_length(self, space: MeasureSpace) -> np.ndarray:
        """Discrete variation function ``s_0 = 0 <= s_1 <= ... <= s_k``."""
        return np.concatenate([[0.0], np.cumsum(space.length[self.edge_ids(space)])])

    def canonical(self) -> tuple:
        rev = self.nodes[::-1]
        return min(self.nodes, rev)

    def reversed(self) -> "Curve":
        return Curve(self.nodes[::-1], self.trivial)

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes)}


def line_integral(space: MeasureSpace, rho, curve: Curve) -> float:
    """``sum rho(e) * len(e)`` over the edges of ``curve``, with multiplicity."""
    if curve.trivial:
        return 0.0
    e = curve.edge_ids(space)
    rho = np.asarray(rho, dtype=float)
    return float(np.dot(rho[e], space.length[e]))


def curve_length(space: MeasureSpace, curve: Curve) -> float:
    return line_integral(space, np.ones(space.n_edges), curve)


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True, eq=False)
class ExplicitFamily:
    curves: tuple

    @property
    def has_trivial(self) -> bool:
        return any(c.trivial for c in self.curves)

    def contains(self, curve: Curve) -> bool:
        key = curve.canonical()
        return any(c.canonical() == key for c in self.curves)

    def __eq__(self, other):
        if not isinstance(other, ExplicitFamily):
            return NotImplemented
        return ({c.canonical() for c in self.curves}
                == {c.canonical() for c in other.curves})


@dataclass(frozen=True)
class ConnectFamily:
    """Walks with one endpoint in ``A`` and the other in ``B``."""

    A: frozenset
    B: frozenset

    def contains(self, curve: Curve) -> bool:
        if curve.trivial:
            return False
        a, b = curve.nodes[0], curve.nodes[-1]
        return (a in self.A and b in self.B) or (a in self.B and b in self.A)


@dataclass(frozen=True, eq=False)
class AnnularFamily:
    """Walks meeting the closed ball ``B_r(center)`` and the outside of ``B_s``.

    Balls are taken in ``metric``, which shares the node set of the space in
    which the modulus is evaluated.
    """

    metric: MeasureSpace
    center: int
    r: float
    s: float

    @property
    def inner(self) -> frozenset:
        return ball(self.metric, self.center, self.r).members

    @property
    def outer(self) -> frozenset:
        kept = ball(self.metric, self.center, self.s).members
        return frozenset(range(self.metric.n_nodes)) - kept

    def as_connect(self) -> ConnectFamily:
        return ConnectFamily(self.inner, self.outer)

    def contains(self, curve: Curve) -> bool:
        if curve.trivial:
            return False
        nodes = set(curve.nodes)
        return bool(nodes & self.inner) and bool(nodes & self.outer)

    def __eq__(self, other):
        if not isinstance(other, AnnularFamily):
            return NotImplemented
        return (self.center == other.center and self.r == other.r
                and self.s == other.s and self.metric == other.metric)


@dataclass(frozen=True, eq=False)
class DisplacementFamily:
    """Walks inside ``domain`` whose endpoints are ``>= eps`` apart in ``metric``."""

    metric: MeasureSpace
    eps: float
    domain: frozenset | None = None

    def _domain_mask(self) -> np.ndarray:
        mask = np.zeros(self.metric.n_nodes, dtype=bool)
        if self.domain is None:
            mask[:] = True
        else:
            mask[list(self.domain)] = True
        return mask

    def far(self, u: int, w: int) -> bool:
        d = self.metric.distances_from(u)[w]
        return d >= self.eps - BALL_RTOL * max(1.0, self.eps)

    def contains(self, curve: Curve) -> bool:
        if curve.trivial:
            return False
        if self.domain is not None and not set(curve.nodes) <= self.domain:
            return False
        return self.far(curve.nodes[0], curve.nodes[-1])

    def __eq__(self, other):
        if not isinstance(other, DisplacementFamily):
            return NotImplemented
        return (self.eps == other.eps and self.domain == other.domain
                and self.metric == other.metric)


@dataclass(frozen=True, eq=False)
class ImageFamily:
    """The image of ``inner`` under a node-identity remetrization ``map``."""

    map: object
    inner: object

    def contains(self, curve: Curve) -> bool:
        return self.inner.contains(curve)

    def __eq__(self, other):
        if not isinstance(other, ImageFamily):
            return NotImplemented
        return self.map == other.map and self.inner == other.inner


def explicit_family(curves: Iterable) -> ExplicitFamily:
    out = []
    for c in curves:
        if not isinstance(c, Curve):
            c = Curve(tuple(c), trivial=len(tuple(c)) == 1)
        out.append(c)
    return ExplicitFamily(tuple(out))


def connect_family(A: Iterable[int], B: Iterable[int]) -> ConnectFamily:
    A, B = frozenset(int(a) for a in A), frozenset(int(b) for b in B)
    if not A or not B:
        raise FamilyError("connect family needs nonempty A and B")
    return ConnectFamily(A, B)


def annular_family(metric: MeasureSpace, center: int, r: float, s: float) -> AnnularFamily:
    if not s > r >= 0:
        raise FamilyError("annular family needs s > r >= 0")
    metric._check_node(center)
    return AnnularFamily(metric, int(center), float(r), float(s))


def displacement_family(metric, eps: float, domain: Iterable[int] | None = None
                        ) -> DisplacementFamily:
    """Displacement family; ``metric`` is a space or a map (its Y side is used)."""
    if not eps > 0:
        raise FamilyError("displacement family needs eps > 0")
    if not isinstance(metric, MeasureSpace):
        metric = metric.Y
    if domain is not None:
        domain = frozenset(int(v) for v in domain)
        if not domain:
            raise FamilyError("displacement domain must be nonempty")
    return DisplacementFamily(metric, float(eps), domain)


def pushforward_family(map, family):
    """``f(family)`` for a remetrization ``f``: same node walks, Y-side lengths."""
    if _node_count(family) not in (None, map.n_nodes):
        raise FamilyError("family and map live on different node sets")
    if isinstance(family, ImageFamily) and family.map == map.inverse():
        return family.inner
    if map.is_identity():
        return family
    return ImageFamily(map, family)


def preimage_family(map, family):
    """``f^{-1}(family)`` for a family of curves in the target."""
    return pushforward_family(map.inverse(), family)


def _node_count(family):
    if isinstance(family, (AnnularFamily, DisplacementFamily)):
        return family.metric.n_nodes
    if isinstance(family, ImageFamily):
        return family.map.n_nodes
    return None


# ---------------------------------------------------------------------------
# weighted sweeps


def _sweep(space: MeasureSpace, weight: np.ndarray, start, *, leave_start=False,
           allowed: np.ndarray | None = None, targets=None, stop_after=None,
           cutoff=INF):
    """Dijkstra on ``weight`` with ``(weight, length, node, pred)`` keys.

    With ``leave_start`` the walk must take at least one edge: every start
    node is a virtual source, and start nodes themselves may be reached
    again (out-and-back walks).  Returns ``(dist, pred, from_src, hits)``
    where ``hits`` lists finalized target nodes in pop order.
    """
    n = space.n_nodes
    adj = space.adjacency
    length = space.length
    dist = np.full(n, INF)
    pred = np.full(n, -1, dtype=np.int64)
    from_src = np.zeros(n, dtype=bool)
    done = np.zeros(n, dtype=bool)
    heap = []
    if leave_start:
        for a in sorted(start):
            for w, k in adj[a]:
                if allowed is None or allowed[w]:
                    heap.append((weight[k], length[k], w, a, True))
    else:
        heap.append((0.0, 0.0, int(start), -1, False))
    heapq.heapify(heap)
    hits = []
    while heap:
        wv, lv, v, p, src = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        dist[v] = wv
        pred[v] = p
        from_src[v] = src
        if targets is not None and targets[v]:
            hits.append(v)
            if stop_after is not None and len(hits) >= stop_after:
                break
            if wv >= cutoff:
                break
        for w, k in adj[v]:
            if not done[w] and (allowed is None or allowed[w]):
                heapq.heappush(heap, (wv + weight[k], lv + length[k], w, v, False))
    return dist, pred, from_src, hits


def _walk(pred, from_src, end, start=None) -> Curve:
    nodes = [int(end)]
    v = int(end)
    if start is None:
        while not from_src[v]:
            v = int(pred[v])
            nodes.append(v)
        nodes.append(int(pred[v]))
    else:
        while v != start:
            v = int(pred[v])
            nodes.append(v)
    return Curve(tuple(reversed(nodes)))


def _connect_minimizers(space, weight, A, B, k, cutoff):
    targets = np.zeros(space.n_nodes, dtype=bool)
    targets[list(B)] = True
    dist, pred, from_src, hits = _sweep(space, weight, A, leave_start=True,
                                        targets=targets, stop_after=k, cutoff=cutoff)
    return [_walk(pred, from_src, b) for b in hits]


def _displacement_minimizers(space, weight, fam: DisplacementFamily, k, cutoff):
    mask = fam._domain_mask()
    dY = fam.metric
    thr = fam.eps - BALL_RTOL * max(1.0, fam.eps)
    found = []
    for u in np.flatnonzero(mask).tolist():
        targets = mask & (dY.distances_from(u) >= thr)
        if not targets.any():
            continue
        dist, pred, _, hits = _sweep(space, weight, u, allowed=mask,
                                     targets=targets, stop_after=1)
        if hits:
            w = hits[0]
            found.append((dist[w], u, w, pred))
    found.sort(key=lambda t: (t[0], t[1], t[2]))
    out, seen = [], set()
    for wv, u, w, pred in found:
        if len(out) >= k or (wv >= cutoff and out):
            break
        c = _walk(pred, None, w, start=u)
        key = c.canonical()
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def family_minimizers(space: MeasureSpace, family, rho, k: int = 1,
                      cutoff: float = INF) -> list[Curve]:
    """Up to ``k`` family members of smallest ``rho``-weighted length.

    Members are returned in nondecreasing weighted length; the scan may stop
    early once weighted length reaches ``cutoff`` (after one member).  An
    empty list means the family is empty.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (space.n_edges,):
        raise FamilyError("rho must have one entry per edge")
    if np.any(rho < 0):
        raise FamilyError("rho must be nonnegative")
    weight = (rho * space.length).tolist()
    if isinstance(family, ImageFamily):
        return family_minimizers(space, family.inner, rho, k, cutoff)
    if isinstance(family, ExplicitFamily):
        scored = sorted(((line_integral(space, rho, c), i, c)
                         for i, c in enumerate(family.curves)),
                        key=lambda t: (t[0], t[1]))
        return [c for _, _, c in scored[:k]]
    if isinstance(family, ConnectFamily):
        return _connect_minimizers(space, weight, family.A, family.B, k, cutoff)
    if isinstance(family, AnnularFamily):
        if family.metric.n_nodes != space.n_nodes:
            raise FamilyError("family and space live on different node sets")
        outer = family.outer
        if not outer:
            return []
        return _connect_minimizers(space, weight, family.inner, outer, k, cutoff)
    if isinstance(family, DisplacementFamily):
        if family.metric.n_nodes != space.n_nodes:
            raise FamilyError("family and space live on different node sets")
        return _displacement_minimizers(space, weight, family, k, cutoff)
    raise FamilyError(f"unsupported family type {type(family).__name__}")


@dataclass(frozen=True)
class SeparationResult:
    """Outcome of an admissibility query.

    ``witness`` is the minimizing member (``None`` for an empty family) and
    ``witnesses`` the violated members found, most violated first.
    """

    status: str
    witness: Curve | None
    min_weighted_length: float
    witnesses: tuple = field(default=(), repr=False)

    @property
    def admissible(self) -> bool:
        return self.status == "admissible"


def shortest_violating_curve(space: MeasureSpace, family, rho, tol: float = 1e-6,
                             max_witnesses: int = 1) -> SeparationResult:
    """Decide whether ``rho`` is admissible for ``family`` up to ``tol``.

    The family member of least weighted length is located; the result is
    ``violated`` iff that length is below ``1 - tol``.  Up to
    ``max_witnesses`` violated members are reported.  An empty family is
    vacuously admissible with an infinite minimum.
    """
    if not 0 < tol < 1:
        raise FamilyError("tol must lie in (0, 1)")
    cands = family_minimizers(space, family, rho, max(1, max_witnesses), cutoff=1 - tol)
    if not cands:
        return SeparationResult("admissible", None, INF)
    vals = [line_integral(space, rho, c) for c in cands]
    best = min(range(len(cands)), key=lambda i: (vals[i], i))
    viol = tuple(c for c, v in sorted(zip(cands, vals), key=lambda t: t[1]) if v < 1 - tol)
    status = "violated" if vals[best] < 1 - tol else "admissible"
    return SeparationResult(status, cands[best], vals[best], viol)


# ---------------------------------------------------------------------------
# minorization


@dataclass(frozen=True)
class MinorizationReport:
    minorized: bool
    checked: int
    counterexample: Curve | None = None

    def __bool__(self):
        return self.minorized


def _has_member_subcurve(curve: Curve, family) -> bool:
    nodes = curve.nodes
    k = len(nodes)
    for i in range(k - 1):
        for j in range(i + 1, k):
            if family.contains(Curve(nodes[i:j + 1])):
                return True
    return False


def minorization_check(space: MeasureSpace, family_big, family_small,
                       samples: int = 20, seed: int = 0) -> MinorizationReport:
    """Test on sampled members of ``family_big`` for subcurves in ``family_small``.

    Members are drawn as oracle minimizers for random densities, so a
    ``True`` answer is evidence, not proof; a ``False`` answer comes with a
    genuine counterexample.
    """
    rng = np.random.default_rng(seed)
    checked = 0
    seen = set()
    for _ in range(samples):
        rho = rng.exponential(size=space.n_edges)
        for c in family_minimizers(space, family_big, rho, k=3):
            key = c.canonical()
            if key in seen:
                continue
            seen.add(key)
            checked += 1
            if not _has_member_subcurve(c, family_small):
                return MinorizationReport(False, checked, c)
    return MinorizationReport(True, checked)


def curves_from_lists(lists: Sequence[Sequence[int]]) -> list[Curve]:
    return [Curve(tuple(n), trivial=len(n) == 1) for n in lists]

"""Theorem-level checks for remetrized maps.

The checks compare the modular side (moduli of curve families and their
images) with the analytic side (gradient, Jacobian, pointwise dilatation).
"ess sup" over a finite space is a plain max, since there are no null sets.

The implication (I) => (II) is exact in the discrete setting.  If
``g^Q <= K Jbar`` on every edge and ``rho`` is admissible for ``f(G)``, then
``rho * g`` is admissible for ``G`` with energy at most ``K`` times that of
``rho``.  So every battery ratio must sit below ``analytic_K`` up to the
solver brackets.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .curves import (
    ConnectFamily,
    Curve,
    annular_family,
    connect_family,
    displacement_family,
    explicit_family,
    pushforward_family,
)
from .maps import (
    RemetrizedMap,
    edge_jacobian,
    minimal_upper_gradient,
    modgrad_scan,
    pointwise_HO,
    snowflake_to_rug,
)
from .modulus import (
    ModulusResult,
    ScaleTooFine,
    _check_exponent,
    annulus_density,
    compute_modulus,
    single_curve_modulus,
)
from .space import (
    MeasureSpace,
    ball,
    build_product_with_interval,
    build_rug,
    build_snowflake,
)

__all__ = [
    "Battery",
    "FamilyRatio",
    "KOResult",
    "Theorem1Verdict",
    "ConditionIIIResult",
    "ConditionIVResult",
    "EtaTable",
    "QCReport",
    "analytic_K",
    "ko_lower_bound",
    "check_theorem1",
    "check_condition_III",
    "check_condition_IV",
    "quasisymmetry_eta",
    "esssup_HO",
    "qc_report",
    "crossing_family",
    "snowflake_rug_study",
    "product_4regular_study",
    "scan_csv",
]

UNBOUNDED_CAP = 10.0


def analytic_K(f: RemetrizedMap, Q: float) -> float:
    """Smallest ``K`` with ``g(e)^Q <= K Jbar(e)`` on every edge."""
    _check_exponent(Q)
    g = minimal_upper_gradient(f).g
    return float(np.max(g ** Q / edge_jacobian(f)))


def esssup_HO(f: RemetrizedMap, Q: float) -> float:
    """Max over nodes of ``lip(v)^Q / J(v)``."""
    _check_exponent(Q)
    return max(pointwise_HO(f, v, Q)[1] for v in range(f.n_nodes))


# ---------------------------------------------------------------------------
# batteries and the modular dilatation


def crossing_family(space: MeasureSpace, axis: int = 0) -> ConnectFamily:
    """Connect the two grid faces orthogonal to label coordinate ``axis``."""
    if space.labels is None:
        raise ValueError("crossing family needs coordinate labels")
    coord = np.array([lab[axis] for lab in space.labels])
    return connect_family(np.flatnonzero(coord == coord.min()),
                          np.flatnonzero(coord == coord.max()))


@dataclass
class Battery:
    """A finite list of labelled X-side curve families, the surrogate for
    "every family" in the modular condition."""

    families: list
    Q: float
    seed: int = 0
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.families:
            raise ValueError("battery must contain at least one family")
        _check_exponent(self.Q)

    @classmethod
    def default(cls, f: RemetrizedMap, Q: float, seed=0, n_connect: int = 8,
                n_centers: int = 4, radius_fractions=(0.125, 0.25, 0.375), lam: float = 2.0,
                eps_quantiles=(0.5, 0.25, 0.1), **solver) -> "Battery":
        """Seeded random node pairs, annuli at sampled centers and radii, and
        displacement families at quantiles of the X distances.

        Spaces carrying grid labels also get one face-to-face crossing family
        per coordinate axis.
        """
        X = f.X
        rng = np.random.default_rng(seed)
        fams = []
        n = X.n_nodes
        if X.labels is not None and n >= 2:
            for axis in range(len(X.labels[0])):
                fam = crossing_family(X, axis)
                if not set(fam.A) & set(fam.B):
                    fams.append((f"crossing:{axis}", fam))
        if n >= 2:
            for _ in range(n_connect):
                a, b = rng.choice(n, 2, replace=False).tolist()
                fams.append((f"connect:{a}-{b}", connect_family([a], [b])))
        diam = X.diameter
        centers = sorted(rng.choice(n, min(n_centers, n), replace=False).tolist())
        for c in centers:
            for frac in radius_fractions:
                r = frac * diam
                if r > 0:
                    fams.append((f"annulus:{c}:{r:.6g}", annular_family(X, c, r, lam * r)))
        D = X.distance_matrix[np.triu_indices(n, 1)]
        D = D[D > 0]
        if D.size:
            for q in eps_quantiles:
                eps = float(np.quantile(D, q))
                fams.append((f"disp:{eps:.6g}", displacement_family(X, eps)))
        return cls(fams, float(Q), seed, solver)


@dataclass
class FamilyRatio:
    label: str
    mod_X: float
    lower_X: float
    upper_X: float
    mod_Y: float
    lower_Y: float
    upper_Y: float
    converged: bool
    status: str                 # ok | undefined
    ratio: float | None = None
    ratio_interval: tuple | None = None
    unbounded_candidate: bool = False

    @property
    def inverse_ratio(self) -> float | None:
        if self.status != "ok" or self.mod_X == 0:
            return None
        return self.mod_Y / self.mod_X

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio_interval"] = list(self.ratio_interval) if self.ratio_interval else None
        d["inverse_ratio"] = self.inverse_ratio
        return d


def _fmod(res: ModulusResult):
    if res.infinite:
        return math.inf, math.inf, math.inf
    return res.value, res.lower, res.upper


def _ratio_row(label, rx: ModulusResult, ry: ModulusResult, cap) -> FamilyRatio:
    vx, lx, ux = _fmod(rx)
    vy, ly, uy = _fmod(ry)
    row = FamilyRatio(label, vx, lx, ux, vy, ly, uy, rx.converged and ry.converged, "ok")
    if uy == 0 or not math.isfinite(vy) or not math.isfinite(vx):
        # 0/0 for empty families; a positive X-side over zero is the one-sided mechanism
        row.status = "undefined"
        row.unbounded_candidate = uy == 0 and vx > 0
        return row
    row.ratio = vx / vy
    lo = lx / uy
    hi = ux / ly if ly > 0 else math.inf
    row.ratio_interval = (lo, hi)
    row.unbounded_candidate = hi >= cap
    return row


def _solve_pair(args):
    f, label, fam, Q, solver = args
    rx = compute_modulus(f.X, fam, Q, **solver)
    ry = compute_modulus(f.Y, pushforward_family(f, fam), Q, **solver)
    return label, rx, ry


@dataclass
class KOResult:
    rows: list[FamilyRatio]
    K_O_lower: float
    undefined: int
    unbounded_candidates: int
    inverse_K_O_lower: float

    def to_dict(self) -> dict:
        return {"K_O_lower": self.K_O_lower, "inverse_K_O_lower": self.inverse_K_O_lower,
                "undefined": self.undefined, "unbounded_candidates": self.unbounded_candidates,
                "families": [r.to_dict() for r in self.rows]}


def _run(tasks, jobs):
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_solve_pair, tasks))
    return [_solve_pair(t) for t in tasks]


def ko_lower_bound(f: RemetrizedMap, battery: Battery, jobs: int = 1,
                   cap: float = UNBOUNDED_CAP) -> KOResult:
    """Moduli of each battery family and of its image; ``K_O_lower`` is the
    max well-defined ratio ``Mod_X / Mod_Y``.

    The inverse map's ratios on the image families are the reciprocals, so
    ``inverse_K_O_lower`` costs nothing extra.
    """
    tasks = [(f, label, fam, battery.Q, battery.solver) for label, fam in battery.families]
    rows = [_ratio_row(label, rx, ry, cap) for label, rx, ry in _run(tasks, jobs)]
    ok = [r for r in rows if r.status == "ok"]
    inv = [r.inverse_ratio for r in ok if r.inverse_ratio is not None]
    for r in ok:
        if r.inverse_ratio is not None and r.inverse_ratio >= cap:
            r.unbounded_candidate = True
    return KOResult(
        rows=rows,
        K_O_lower=max((r.ratio for r in ok), default=0.0),
        undefined=len(rows) - len(ok),
        unbounded_candidates=sum(r.unbounded_candidate for r in rows),
        inverse_K_O_lower=max(inv, default=0.0),
    )


@dataclass
class Theorem1Verdict:
    passed: bool
    analytic_K: float
    K_O_lower: float
    margins: dict
    witness: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def check_theorem1(f: RemetrizedMap, battery: Battery, Q: float | None = None,
                   ko: KOResult | None = None, rtol: float = 1e-9) -> Theorem1Verdict:
    """Check ``Mod_X(G) <= analytic_K * Mod_Y(f(G))`` on the battery.

    A family fails only if even the low end of its certified ratio interval
    exceeds ``analytic_K (1 + rtol)``.  The margin reported per family is
    ``analytic_K - ratio``.
    """
    Q = battery.Q if Q is None else Q
    K = analytic_K(f, Q)
    if ko is None:
        ko = ko_lower_bound(f, battery)
    margins, witness = {}, None
    for r in ko.rows:
        if r.status != "ok":
            continue
        margins[r.label] = K - r.ratio
        if r.ratio_interval[0] > K * (1 + rtol) and witness is None:
            witness = r.label
    return Theorem1Verdict(witness is None, K, ko.K_O_lower, margins, witness)


# ---------------------------------------------------------------------------
# condition (III): annuli in the target


@dataclass
class ConditionIIIRow:
    center: int
    r: float
    mod: float
    lower: float
    upper: float
    nu_ball: float
    quantity: float         # r^Q Mod(f^-1(annulus)) / nu(B_r)
    density_bound: float    # K * annulus_density bound, scaled like quantity
    converged: bool


@dataclass
class ConditionIIIResult:
    lam: float
    floor: float
    rows: list[ConditionIIIRow]
    proxies: dict            # center -> min over scanned r
    K_prime: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "radius_floor": self.floor,
                "rows": [asdict(r) for r in self.rows],
                "proxies": {str(k): v for k, v in self.proxies.items()},
                "K_prime": self.K_prime, "notes": self.notes}

    def scan(self) -> list[tuple[float, float]]:
        return [(r.r, r.quantity) for r in self.rows]


def _default_centers(space: MeasureSpace, k: int, seed) -> list[int]:
    rng = np.random.default_rng(seed)
    return sorted(rng.choice(space.n_nodes, min(k, space.n_nodes), replace=False).tolist())


def check_condition_III(f: RemetrizedMap, Q: float, lam: float = 2.0,
                        centers: Sequence[int] | None = None,
                        radii: Sequence[float] | None = None, n_radii: int = 4,
                        seed=0, **solver) -> ConditionIIIResult:
    """Scan ``r^Q Mod_Q(f^{-1}(G(y, r, lam r))) / nu(B_r(y))`` with Y-metric annuli.

    The liminf over ``r -> 0`` is approximated by the minimum over a
    logarithmic radius scan from a quarter of the Y diameter down to the
    floor ``2 lam max lenY``.  Radii under the floor are dropped with a note.
    Each row also carries ``K * bound``, scaled like the quantity, where
    ``bound`` comes from the proof density on Y.  The X-side modulus can
    never exceed it.
    """
    _check_exponent(Q)
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    Y = f.Y
    K = analytic_K(f, Q)
    floor = 2 * lam * Y.max_edge_length
    notes = []
    if centers is None:
        centers = _default_centers(Y, 4, seed)
    if radii is None:
        top = Y.diameter / 4
        if top <= floor:
            radii = []
            notes.append(f"quarter diameter {top:.6g} is below the radius floor {floor:.6g}")
        else:
            radii = np.geomspace(top, floor * 1.0001, n_radii).tolist()
    radii = sorted((float(r) for r in radii), reverse=True)
    kept = []
    for r in radii:
        if r < floor:
            notes.append(f"radius {r:.6g} dropped: below floor {floor:.6g}")
        else:
            kept.append(r)
    rows, proxies = [], {}
    for y in centers:
        for r in kept:
            fam = annular_family(Y, y, r, lam * r)
            res = compute_modulus(f.X, fam, Q, **solver)
            nu = ball(Y, y, r).measure
            try:
                bound = annulus_density(Y, y, r, lam, Q)[1]
            except ScaleTooFine:
                bound = math.inf
            s = r ** Q / nu
            rows.append(ConditionIIIRow(int(y), r, res.value, res.lower, res.upper, nu,
                                        s * res.value, s * K * bound, res.converged))
            proxies[int(y)] = min(proxies.get(int(y), math.inf), s * res.value)
    return ConditionIIIResult(float(lam), floor, rows, proxies,
                              max(proxies.values(), default=math.nan), notes)


# ---------------------------------------------------------------------------
# condition (IV): displacement families inside target sets


@dataclass
class ConditionIVRow:
    set_index: int
    size: int
    eps: float
    mod: float
    lower: float
    bound: float        # eps^-Q K sigma_Y(edges inside V)
    bound_nu: float     # eps^-Q K nu(V)
    holds: bool
    holds_nu: bool
    converged: bool


@dataclass
class ConditionIVResult:
    K: float
    rows: list[ConditionIVRow]

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.rows)

    def to_dict(self) -> dict:
        return {"K": self.K, "passed": self.passed, "rows": [asdict(r) for r in self.rows]}


def _inside_edge_mass(space: MeasureSpace, V) -> float:
    mask = np.zeros(space.n_nodes, dtype=bool)
    mask[list(V)] = True
    inside = mask[space.edges[:, 0]] & mask[space.edges[:, 1]]
    return float(space.sigma[inside].sum())


def check_condition_IV(f: RemetrizedMap, Q: float, open_sets=None, eps_list=None,
                       K: float | None = None, seed=0, rtol: float = 1e-9,
                       **solver) -> ConditionIVResult:
    """Compare ``Mod_Q(f^{-1}(G_eps(V)))`` with ``eps^-Q K nu(V)``.

    Walks inside ``V`` use only edges with both ends in ``V``, so the
    verdict uses the Y edge mass of those edges in place of ``nu(V)``.  The
    ``nu(V)`` version is reported next to it; the two differ by at most the
    max degree over two.  ``K`` defaults to ``analytic_K``.
    """
    _check_exponent(Q)
    Y = f.Y
    K = analytic_K(f, Q) if K is None else float(K)
    if open_sets is None:
        open_sets = [range(f.n_nodes)]
        for c in _default_centers(Y, 2, seed):
            open_sets.append(ball(Y, c, Y.diameter / 3).members)
    rows = []
    for i, V in enumerate(open_sets):
        V = sorted(int(v) for v in V)
        if not V:
            raise ValueError("open sets must be nonempty")
        eps_V = eps_list
        if eps_V is None:
            D = Y.distance_matrix[np.ix_(V, V)]
            d = D[np.triu_indices(len(V), 1)]
            d = d[d > 0]
            eps_V = sorted({float(np.quantile(d, q)) for q in (0.5, 0.25)}, reverse=True) \
                if d.size else [Y.diameter + 1.0]
        mass = _inside_edge_mass(Y, V)
        nu = float(Y.mu[V].sum())
        for eps in eps_V:
            fam = displacement_family(Y, eps, V)
            res = compute_modulus(f.X, fam, Q, **solver)
            b = eps ** (-Q) * K * mass
            bn = eps ** (-Q) * K * nu
            rows.append(ConditionIVRow(i, len(V), float(eps), res.value, res.lower, b, bn,
                                       res.lower <= b * (1 + rtol),
                                       res.lower <= bn * (1 + rtol), res.converged))
    return ConditionIVResult(K, rows)


# ---------------------------------------------------------------------------
# quasisymmetry


@dataclass
class EtaTable:
    t: np.ndarray
    eta: np.ndarray          # max Y-ratio over triples with X-ratio <= t
    attained: np.ndarray     # max X-ratio <= t actually seen (the bucket's diagonal)
    triples: int

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "eta": self.eta.tolist(),
                "attained": self.attained.tolist(), "triples": self.triples}


def quasisymmetry_eta(f: RemetrizedMap, t_grid: Sequence[float], dX=None, dY=None,
                      max_exhaustive: int = 60, samples: int = 100_000, seed=0) -> EtaTable:
    """Empirical distortion envelope over triples ``(x1, x2, x3)``.

    For each ``t`` the envelope is the largest ``d_Y(x3,x2)/d_Y(x3,x1)`` over
    triples with ``d_X(x3,x2)/d_X(x3,x1) <= t``, so it is nondecreasing in
    ``t``.  All triples are used up to ``max_exhaustive`` nodes, otherwise
    ``samples`` seeded random triples.  ``dX``/``dY`` override the graph
    distance matrices.
    """
    DX = f.X.distance_matrix if dX is None else np.asarray(dX, dtype=float)
    DY = f.Y.distance_matrix if dY is None else np.asarray(dY, dtype=float)
    n = f.n_nodes
    if n <= max_exhaustive:
        x3, x2, x1 = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        x1, x2, x3 = x1.ravel(), x2.ravel(), x3.ravel()
        keep = (x1 != x2) & (x2 != x3) & (x1 != x3)
        x1, x2, x3 = x1[keep], x2[keep], x3[keep]
    else:
        rng = np.random.default_rng(seed)
        x1, x2, x3 = (rng.integers(n, size=samples) for _ in range(3))
        keep = (x1 != x2) & (x2 != x3) & (x1 != x3)
        x1, x2, x3 = x1[keep], x2[keep], x3[keep]
    tX = DX[x3, x2] / DX[x3, x1]
    tY = DY[x3, x2] / DY[x3, x1]
    order = np.argsort(tX, kind="stable")
    tX, tY = tX[order], np.maximum.accumulate(tY[order])
    t = np.asarray(sorted(float(v) for v in t_grid))
    idx = np.searchsorted(tX, t * (1 + 1e-12), side="right") - 1
    eta = np.where(idx >= 0, tY[np.maximum(idx, 0)], 0.0)
    att = np.where(idx >= 0, tX[np.maximum(idx, 0)], 0.0)
    return EtaTable(t, eta, att, int(tX.size))


# ---------------------------------------------------------------------------
# full report


@dataclass
class QCReport:
    Q: float
    analytic_K: float
    analytic_K_inverse: float
    esssup_HO: float
    ko: KOResult
    theorem1: Theorem1Verdict
    condition_III: ConditionIIIResult | None = None
    condition_IV: ConditionIVResult | None = None
    scan: object = None
    verdicts: dict = field(default_factory=dict)

    @property
    def K_O_lower(self) -> float:
        return self.ko.K_O_lower

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "analytic_K": self.analytic_K,
            "analytic_K_inverse": self.analytic_K_inverse,
            "K_O_lower": self.ko.K_O_lower,
            "esssup_HO": self.esssup_HO,
            "modular": self.ko.to_dict(),
            "theorem1": self.theorem1.to_dict(),
            "condition_III": self.condition_III.to_dict() if self.condition_III else None,
            "condition_IV": self.condition_IV.to_dict() if self.condition_IV else None,
            "modgrad_scan": self.scan.to_dict() if self.scan is not None else None,
            "verdicts": self.verdicts,
        }


def qc_report(f: RemetrizedMap, Q: float, battery: Battery | None = None, lam: float = 2.0,
              seed=0, jobs: int = 1, conditions: bool = True, scan: bool = False,
              cap: float = UNBOUNDED_CAP, **solver) -> QCReport:
    """Dilatations, battery ratios, the (I)=>(II) verdict and condition tables."""
    _check_exponent(Q)
    if battery is None:
        battery = Battery.default(f, Q, seed=seed, lam=lam, **solver)
    ko = ko_lower_bound(f, battery, jobs=jobs, cap=cap)
    t1 = check_theorem1(f, battery, Q, ko=ko)
    rep = QCReport(
        Q=float(Q),
        analytic_K=t1.analytic_K,
        analytic_K_inverse=analytic_K(f.inverse(), Q),
        esssup_HO=esssup_HO(f, Q),
        ko=ko,
        theorem1=t1,
    )
    if conditions:
        rep.condition_III = check_condition_III(f, Q, lam, seed=seed, **solver)
        rep.condition_IV = check_condition_IV(f, Q, seed=seed, **solver)
    if scan:
        rep.scan = modgrad_scan(f, Q, **solver)
    inverse_flag = ko.inverse_K_O_lower >= cap or any(
        r.unbounded_candidate for r in ko.rows)
    rep.verdicts = {
        "forward": "passes (I)/(II)" if t1.passed else f"fails on {t1.witness}",
        "inverse": "unbounded-candidate" if inverse_flag else "bounded on battery",
        "converged": all(r.converged for r in ko.rows),
    }
    if rep.condition_IV is not None:
        rep.verdicts["condition_IV"] = "holds" if rep.condition_IV.passed else "fails"
    rep.verdicts["summary"] = (f"forward {rep.verdicts['forward']}; inverse "
                               + ("flagged unbounded-candidate" if inverse_flag
                                  else "bounded on battery"))
    return rep


def scan_csv(pairs, header=("x", "y")) -> str:
    """Two-column CSV with a header row and 12 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, b in pairs:
        w.writerow([f"{a:.12g}", f"{b:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# the one-sidedness counterexamples


def _trend(values, factor):
    ratios = [b / a for a, b in zip(values, values[1:])]
    return ratios, all(q >= factor for q in ratios)


def snowflake_rug_study(ns: Sequence[int] = (8, 16, 32), Q: float = 3.0, **solver) -> dict:
    """Horizontal crossing moduli for the snowflake-to-rug identity across resolutions.

    The forward ratio ``Mod_X / Mod_Y`` should stay bounded while the
    inverse ratio ``Mod_Y / Mod_X`` grows at least 1.5x per doubling.
    """
    rows = []
    for n in ns:
        f = snowflake_to_rug(int(n))
        fam = crossing_family(f.X)
        rx = compute_modulus(f.X, fam, Q, **solver)
        ry = compute_modulus(f.Y, pushforward_family(f, fam), Q, **solver)
        rows.append({
            "n": int(n), "mod_X": rx.value, "mod_X_bracket": [rx.lower, rx.upper],
            "mod_Y": ry.value, "mod_Y_bracket": [ry.lower, ry.upper],
            "forward_ratio": rx.value / ry.value, "inverse_ratio": ry.value / rx.value,
            "analytic_K": analytic_K(f, Q), "analytic_K_inverse": analytic_K(f.inverse(), Q),
            "converged": rx.converged and ry.converged,
        })
    out = {"variant": "snowflake-rug", "Q": Q, "rows": rows, "verdict": None}
    if len(rows) >= 2:
        fwd = [r["forward_ratio"] for r in rows]
        growth, grows = _trend([r["inverse_ratio"] for r in rows], 1.5)
        bounded = max(fwd) <= 2 * fwd[0]
        out["inverse_growth"] = growth
        out["forward_bounded"] = bounded
        out["inverse_unbounded"] = grows
        out["verdict"] = ("forward bounded, inverse unbounded" if bounded and grows
                          else "trend not established")
    return out


def _line_family(base_n: int, layers: int) -> list[Curve]:
    """Lines along the rug's horizontal axis, one per (row, layer)."""
    nb = (base_n + 1) ** 2
    curves = []
    for i in range(layers + 1):
        for y in range(base_n + 1):
            start = i * nb + y * (base_n + 1)
            curves.append(Curve(tuple(range(start, start + base_n + 1))))
    return curves


def product_4regular_study(ns: Sequence[int] = (8, 16), Q: float = 4.0, **solver) -> dict:
    """Products of snowflake and rug grids with an interval, and a family of
    disjoint lines along the rug's rectifiable axis.

    The lines are edge-disjoint, so the family modulus equals the sum of the
    single-line moduli; that Fubini-style sum is computed in closed form and
    compared with the solver on both sides.
    """
    rows = []
    for n in ns:
        n = int(n)
        X = build_product_with_interval(build_snowflake(n), n, 1.0, Q)
        Y = build_product_with_interval(build_rug(n), n, 1.0, Q)
        f = RemetrizedMap(X, Y)
        curves = _line_family(n, n)
        fam = explicit_family(curves)
        rx = compute_modulus(X, fam, Q, **solver)
        ry = compute_modulus(Y, fam, Q, **solver)
        rows.append({
            "n": n, "lines": len(curves),
            "mod_X": rx.value, "mod_Y": ry.value,
            "fubini_X": sum(single_curve_modulus(X, c, Q) for c in curves),
            "fubini_Y": sum(single_curve_modulus(Y, c, Q) for c in curves),
            "jacobian": float(np.max(edge_jacobian(f))),
            "inverse_ratio": ry.value / rx.value,
            "converged": rx.converged and ry.converged,
        })
    out = {"variant": "product-4regular", "Q": Q, "rows": rows, "verdict": None}
    if len(rows) >= 2:
        mx = [r["mod_X"] for r in rows]
        decreasing = all(b < a for a, b in zip(mx, mx[1:]))
        positive = all(r["mod_Y"] > 0 for r in rows)
        out["verdict"] = ("Y-side lines keep positive modulus, X-side modulus tends to 0"
                          if decreasing and positive else "trend not established")
    return out

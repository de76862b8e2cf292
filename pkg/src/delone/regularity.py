"""Regularity: cluster counting, the Tower Bound, the Local Regularity
Criterion, an independent space-group oracle, symmetry drops and the
quantitative inequality battery.

Radii are :class:`~delone.core.Radius` values so that sums such as
rho0 + 2R stay exact.  Logarithms are binary.
"""

from __future__ import annotations

import enum
import math
from contextlib import contextmanager
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Optional, Sequence

import mpmath

from . import linalg
from .cluster import cluster_group, equivalent, get_cluster, omega
from .core import (
    DeloneError,
    GramMatrix,
    MetricParameters,
    PeriodicSet,
    Radius,
    RadiusLike,
    RationalLike,
    Site,
    as_fraction,
    ball_with_distances,
    exact_sqrt,
    gram_automorphisms,
)
from .metrics import metric_parameters
from .reachability import reachable_set


class InconsistentParametersError(DeloneError):
    """The 2R-cluster is not full-dimensional, so the declared R is wrong."""


class NotRegularError(DeloneError, ValueError):
    """An operation defined only for regular systems got a non-regular set."""


class Method(str, enum.Enum):
    TOWER = "TOWER"
    LOCAL_CRITERION = "LOCAL_CRITERION"
    ORACLE = "ORACLE"


class Verdict(str, enum.Enum):
    REGULAR = "REGULAR"
    NOT_REGULAR = "NOT_REGULAR"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class RegularityVerdict:
    method: Method
    verdict: Verdict
    certificate: dict = field(default_factory=dict)

    @property
    def regular(self) -> bool:
        return self.verdict is Verdict.REGULAR


# -- cluster counting --------------------------------------------------------


@dataclass(frozen=True)
class NRhoReport:
    radius: Radius
    class_count: int
    class_representatives: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]

    @property
    def rho_sq(self) -> Fraction:
        return self.radius.sq


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def n_rho(X: PeriodicSet, rho: RadiusLike, workers: int = 1) -> NRhoReport:
    """N(rho): number of equivalence classes of rho-clusters.

    Lattice translates have identical clusters, so comparing the motif
    points' clusters is enough.
    """
    rad = Radius.of(rho)
    return _n_rho(X, rad, workers)


@lru_cache(maxsize=512)
def _n_rho(X: PeriodicSet, rad: Radius, workers: int) -> NRhoReport:
    if len(X.motif) == 1:
        return NRhoReport(rad, 1, (0,), ((0,),))
    clusters = _map(lambda i: get_cluster(X, i, rad), range(len(X.motif)), workers)
    classes: list[list[int]] = []
    for i, C in enumerate(clusters):
        for cls in classes:
            if equivalent(clusters[cls[0]], C)[0]:
                cls.append(i)
                break
        else:
            classes.append([i])
    return NRhoReport(rad, len(classes), tuple(c[0] for c in classes),
                      tuple(tuple(c) for c in classes))


def is_isometric(X: PeriodicSet, rho: RadiusLike, workers: int = 1) -> bool:
    return n_rho(X, rho, workers).class_count == 1


def breakpoints(X: PeriodicSet, rho_sq_max: RationalLike) -> list[Fraction]:
    """Distinct positive squared distances realized from motif points, up to the bound.

    Cluster data is constant between consecutive breakpoints.
    """
    rho_sq_max = as_fraction(rho_sq_max)
    if rho_sq_max < 0:
        raise ValueError("rho_sq_max must be nonnegative")
    found = set()
    for i in range(len(X.motif)):
        for q, _ in ball_with_distances(X, Site(i, (0,) * X.d), rho_sq_max):
            if q > 0:
                found.add(q)
    return sorted(found)


def _params(X: PeriodicSet, params: MetricParameters | None) -> MetricParameters:
    return params if params is not None else metric_parameters(X)


# -- Tower Bound -------------------------------------------------------------


def tower_check(X: PeriodicSet, params: MetricParameters | None = None,
                workers: int = 1) -> RegularityVerdict:
    """2R-isometric and 2(Omega+2)R-isometric implies regular (one-directional)."""
    P = _params(X, params)
    two_R = P.two_R
    first = n_rho(X, two_R, workers)
    if first.class_count != 1:
        return RegularityVerdict(Method.TOWER, Verdict.INCONCLUSIVE, {
            "stage": "a", "reason": "not 2R-isometric", "n_rho_2R": first.class_count})
    C = get_cluster(X, 0, two_R)
    if C.rank != X.d:
        raise InconsistentParametersError(
            f"2R-cluster has rank {C.rank} < {X.d}; R^2 = {P.R_sq} cannot be the covering radius")
    group = cluster_group(C)
    om = group.omega
    coef = 2 * (om + 2)
    big = P.multiple_of_R(coef)
    second = n_rho(X, big, workers)
    cert = {
        "R_sq": P.R_sq,
        "group_order_2R": group.euclidean_order,
        "omega_2R": om,
        "radius_over_R": coef,
        "radius_sq": big.sq,
        "n_rho_2R": 1,
        "n_rho_radius": second.class_count,
    }
    if second.class_count != 1:
        cert.update(stage="d", reason=f"not {coef}R-isometric")
        return RegularityVerdict(Method.TOWER, Verdict.INCONCLUSIVE, cert)
    return RegularityVerdict(Method.TOWER, Verdict.REGULAR, cert)


# -- Local Regularity Criterion ----------------------------------------------


def local_criterion_scan(X: PeriodicSet, rho_sq_max: RationalLike | None = None,
                         params: MetricParameters | None = None,
                         workers: int = 1) -> RegularityVerdict:
    """Find the smallest rho0 with (rho0 + 2R)-isometry and S(rho0) = S(rho0 + 2R).

    rho0 ranges over 0 and the breakpoints up to ``rho_sq_max`` (default
    (2R)^2).  Group equality is order equality, valid because the larger
    radius gives a subgroup and both groups are finite (rank >= d - 1).
    """
    P = _params(X, params)
    limit = 4 * P.R_sq if rho_sq_max is None else as_fraction(rho_sq_max)
    scanned = []
    for q in [Fraction(0)] + breakpoints(X, limit):
        C0 = get_cluster(X, 0, q)
        if C0.rank < X.d - 1:
            scanned.append({"rho0_sq": q, "skipped": f"rank {C0.rank}"})
            continue
        big = Radius(q, 4 * P.R_sq)
        if not is_isometric(X, big, workers):
            # N is non-decreasing, so no larger rho0 can pass either
            scanned.append({"rho0_sq": q, "isometric": False})
            return RegularityVerdict(Method.LOCAL_CRITERION, Verdict.INCONCLUSIVE, {
                "reason": "not (rho0+2R)-isometric", "rho_sq_max": limit, "scan": scanned})
        g0 = cluster_group(C0).euclidean_order
        g1 = cluster_group(get_cluster(X, 0, big)).euclidean_order
        scanned.append({"rho0_sq": q, "isometric": True, "order_rho0": g0, "order_rho0_2R": g1})
        if g0 == g1:
            return RegularityVerdict(Method.LOCAL_CRITERION, Verdict.REGULAR, {
                "R_sq": P.R_sq, "rho0_sq": q, "radius": big, "group_order": g0,
                "scan": scanned})
    return RegularityVerdict(Method.LOCAL_CRITERION, Verdict.INCONCLUSIVE, {
        "reason": "groups did not stabilize within the scan", "rho_sq_max": limit,
        "scan": scanned})


# -- space-group oracle --------------------------------------------------------


def _frac(v):
    return tuple(x - math.floor(x) for x in v)


@dataclass(frozen=True)
class PrimitiveCell:
    """X re-expressed over its full translation lattice."""

    basis: tuple[tuple[Fraction, ...], ...]  # columns, in the original coordinates
    reduced: PeriodicSet
    index_map: tuple[int, ...]  # original motif index -> reduced motif index


def primitive_cell(X: PeriodicSet) -> PrimitiveCell:
    d = X.d
    motif_set = set(X.motif)
    p0 = X.motif[0]
    taus = []
    for p in X.motif[1:]:
        tau = _frac(a - b for a, b in zip(p, p0))
        if {_frac(a + b for a, b in zip(q, tau)) for q in X.motif} == motif_set:
            taus.append(tau)
    L = linalg.common_denominator(x for t in taus for x in t) if taus else 1
    gens = [tuple(L * int(i == j) for i in range(d)) for j in range(d)]
    gens += [tuple(int(x * L) for x in t) for t in taus]
    cols = linalg.hnf_columns(gens, d)
    B = [[Fraction(cols[j][i], L) for j in range(d)] for i in range(d)]
    Binv = linalg.inverse(B)
    G = [list(r) for r in X.gram.entries]
    Gp = linalg.mat_mul(linalg.transpose(B), linalg.mat_mul(G, B))
    new_pts = [_frac(linalg.mat_vec(Binv, p)) for p in X.motif]
    reduced_motif = sorted(set(new_pts))
    index = {p: k for k, p in enumerate(reduced_motif)}
    reduced = PeriodicSet(GramMatrix(tuple(tuple(r) for r in Gp)), tuple(reduced_motif),
                          name=X.name)
    return PrimitiveCell(tuple(tuple(col) for col in zip(*B)), reduced,
                         tuple(index[p] for p in new_pts))


def space_group_operations(P: PeriodicSet):
    """All (U, t) with U in Aut(Gram) mapping the motif onto itself mod Z^d.

    ``P`` should already be primitive (Z^d is its full translation lattice),
    so this is the whole symmetry group modulo translations.  Returns a list
    of (U, t, permutation of motif indices).
    """
    motif = P.motif
    index = {p: k for k, p in enumerate(motif)}
    ops = []
    for U in gram_automorphisms(P.gram).elements:
        images = [tuple(sum(U[r][c] * p[c] for c in range(P.d)) for r in range(P.d))
                  for p in motif]
        for target in motif:
            t = _frac(a - b for a, b in zip(target, images[0]))
            perm = []
            for im in images:
                k = index.get(_frac(a + b for a, b in zip(im, t)))
                if k is None:
                    break
                perm.append(k)
            else:
                ops.append((U, t, tuple(perm)))
    return ops


def _orbits(n: int, perms) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for perm in perms:
        for a, b in enumerate(perm):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    return sorted(groups.values())


def _separating_radius(X: PeriodicSet, i: int, j: int, limit: Fraction) -> Optional[Fraction]:
    """Smallest squared radius where the two points' distance multisets differ."""
    a = [q for q, _ in ball_with_distances(X, Site(i, (0,) * X.d), limit)]
    b = [q for q, _ in ball_with_distances(X, Site(j, (0,) * X.d), limit)]
    for x, y in zip(a, b):
        if x != y:
            return min(x, y)
    if len(a) != len(b):
        return min(a[len(b)] if len(a) > len(b) else b[len(a)], limit)
    return None


def oracle_is_regular(X: PeriodicSet) -> RegularityVerdict:
    """Decide regularity directly from the symmetry group of the periodic set.

    The linear part of any symmetry preserves the full translation lattice,
    so after passing to the primitive cell every symmetry is (U, t) with U a
    lattice automorphism.  X is regular iff these act transitively on the
    reduced motif.  Uses no cluster machinery.
    """
    cell = primitive_cell(X)
    P = cell.reduced
    ops = space_group_operations(P)
    orbits = _orbits(len(P.motif), [perm for _, _, perm in ops])
    if len(orbits) == 1:
        witnesses = {}
        for U, t, perm in ops:
            witnesses.setdefault(perm[0], (U, t))
        return RegularityVerdict(Method.ORACLE, Verdict.REGULAR, {
            "primitive_basis": cell.basis,
            "reduced_motif_size": len(P.motif),
            "point_group_order": len({U for U, _, _ in ops}),
            "operations_mod_translations": len(ops),
            "transitive_witnesses": [witnesses[k] for k in sorted(witnesses)],
        })
    original = [[i for i, k in enumerate(cell.index_map) if k in orb] for orb in orbits]
    limit = 4 * max(X.gram.entries[i][i] for i in range(X.d))
    sep = _separating_radius(X, original[0][0], original[1][0], limit)
    return RegularityVerdict(Method.ORACLE, Verdict.NOT_REGULAR, {
        "orbits": original,
        "operations_mod_translations": len(ops),
        "separating_rho_sq": sep,
        "separated_points": (original[0][0], original[1][0]),
    })


# -- drop of symmetries ---------------------------------------------------------


@dataclass(frozen=True)
class DropReport:
    orders: tuple[int, ...]  # |S_x(2kR)| for k = 1..K
    drop_count: int

    @property
    def divisibility_chain(self) -> bool:
        return all(a % b == 0 for a, b in zip(self.orders, self.orders[1:]))


def drop_sequence(X: PeriodicSet, K: int, params: MetricParameters | None = None) -> DropReport:
    """Orders of S_x(2R), S_x(4R), ..., S_x(2KR) and the number of strict drops."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if not oracle_is_regular(X).regular:
        raise NotRegularError("the drop is only defined for regular systems")
    P = _params(X, params)
    orders = []
    for k in range(1, K + 1):
        g = cluster_group(get_cluster(X, 0, P.multiple_of_R(2 * k)))
        orders.append(g.euclidean_order)
    drops = sum(1 for a, b in zip(orders, orders[1:]) if b < a)
    return DropReport(tuple(orders), drops)


# -- inequality battery ----------------------------------------------------------

# Proven kissing numbers only; other dimensions have upper bounds at best.
KISSING_NUMBERS = {1: 2, 2: 6, 3: 12, 4: 24, 8: 240, 24: 196560}

PASS, FAIL, NON_CERTIFIED, NOT_APPLICABLE = "PASS", "FAIL", "NON_CERTIFIED", "NOT_APPLICABLE"

_PREC_BITS = 200


@contextmanager
def _precision(bits: int = _PREC_BITS):
    old = mpmath.iv.prec
    mpmath.iv.prec = bits
    try:
        yield
    finally:
        mpmath.iv.prec = old


def _iv(q: Fraction):
    return mpmath.iv.mpf(q.numerator) / q.denominator


def _iv_sqrt(q: Fraction):
    return mpmath.iv.sqrt(_iv(q))


def regularity_radius_bound(d: int, r_sq: RationalLike, R_sq: RationalLike):
    """2R(d^2+1) log2(2R/r + 2) as a certified interval (mpmath ``iv``)."""
    r_sq, R_sq = as_fraction(r_sq), as_fraction(R_sq)
    with _precision():
        R = _iv_sqrt(R_sq)
        ratio = _iv_sqrt(R_sq / r_sq)
        log_term = _exact_log2_term(r_sq, R_sq)
        if log_term is None:
            log_term = mpmath.iv.log(2 * ratio + 2) / mpmath.iv.log(2)
        return 2 * R * (d * d + 1) * log_term


def _exact_log2_term(r_sq: Fraction, R_sq: Fraction) -> Optional[int]:
    """log2(2R/r + 2) when it is an integer."""
    ratio = exact_sqrt(R_sq / r_sq)
    if ratio is None:
        return None
    arg = 2 * ratio + 2
    if arg.denominator != 1:
        return None
    n = arg.numerator
    return n.bit_length() - 1 if n & (n - 1) == 0 else None


def regularity_radius_bound_over_R(d: int, r_sq: RationalLike, R_sq: RationalLike) -> Optional[Fraction]:
    """Exact value of the bound in units of R whenever the logarithm is an integer."""
    k = _exact_log2_term(as_fraction(r_sq), as_fraction(R_sq))
    return None if k is None else Fraction(2 * (d * d + 1) * k)


def _radius_iv(rad: Radius):
    with _precision():
        return _iv_sqrt(rad.a) + _iv_sqrt(rad.b)


def _certified_le(lhs, rhs) -> Optional[bool]:
    """lhs <= rhs for intervals; None when the intervals overlap undecidably."""
    if lhs.b <= rhs.a:
        return True
    if lhs.a > rhs.b:
        return False
    return None


@dataclass(frozen=True)
class BoundCheck:
    name: str
    subject: str
    lhs: Any
    rhs: Any
    status: str


def omega_check(order: int) -> tuple[int, int, bool]:
    """Omega(G) + 1 <= log2(2|G|), decided exactly as 2^Omega <= |G|."""
    om = omega(order)
    return om, order, (1 << om) <= order


def _fmt_iv(x) -> str:
    return mpmath.nstr(mpmath.mpf(x.mid), 12)


@dataclass(frozen=True)
class BoundsReport:
    rows: tuple[BoundCheck, ...]
    radius_bound: str  # decimal rendering, absolute length units
    radius_bound_over_R: Optional[Fraction]
    kissing_table_used: dict
    m1_full_dimensional: tuple[bool, ...]
    mu: tuple[int, ...]

    def _named(self, *names: str) -> tuple[BoundCheck, ...]:
        return tuple(r for r in self.rows if r.name in names)

    @property
    def radius_rows(self):
        return self._named("radius_bound")

    @property
    def omega_bound(self):
        return self._named("omega_log")

    @property
    def kissing_bound(self):
        return self._named("kissing_chain", "kissing_product", "kissing_omega")

    @property
    def mu_bound(self):
        return self._named("mu_packing")

    @property
    def failures(self) -> list[BoundCheck]:
        return [r for r in self.rows if r.status == FAIL]


def bounds_report(X: PeriodicSet, params: MetricParameters | None = None,
                  certificates: Sequence[RegularityVerdict] | None = None) -> BoundsReport:
    """Evaluate every quantitative inequality on X.

    ``certificates`` are regularity verdicts whose certified radii are
    compared with the regularity-radius bound; by default a local-criterion scan up to
    (2R)^2 supplies one.
    """
    P = _params(X, params)
    d = X.d
    rows: list[BoundCheck] = []
    if certificates is None:
        certificates = [local_criterion_scan(X, params=P)]

    bound_iv = regularity_radius_bound(d, P.r_sq, P.R_sq)
    for cert in certificates:
        if not cert.regular or cert.method is Method.ORACLE:
            continue
        if cert.method is Method.TOWER:
            rad = Radius(cert.certificate["radius_sq"])
        else:
            rad = cert.certificate["radius"]
        ok = _certified_le(_radius_iv(rad), bound_iv)
        status = NON_CERTIFIED if ok is None else (PASS if ok else FAIL)
        rows.append(BoundCheck("radius_bound", cert.method.value, str(rad), _fmt_iv(bound_iv), status))

    two_r = Radius(P.two_r_sq)
    m1_full = []
    for i in range(len(X.motif)):
        C2R = get_cluster(X, i, P.two_R)
        g2R = cluster_group(C2R)
        C2r = get_cluster(X, i, two_r)
        g2r = cluster_group(C2r)
        m1_full.append(C2r.rank == d)
        for label, g in (("S(2R)", g2R), ("S(2r)", g2r)):
            if g.finite:
                om, n, ok = omega_check(g.euclidean_order)
                rows.append(BoundCheck("omega_log", f"x{i} {label}", om + 1,
                                       f"log2({2 * n})", PASS if ok else FAIL))
        if C2r.rank == d:
            if all(k in KISSING_NUMBERS for k in range(1, d + 1)):
                prod = math.prod(KISSING_NUMBERS[k] for k in range(1, d + 1))
                o2R, o2r = g2R.euclidean_order, g2r.euclidean_order
                rows.append(BoundCheck("kissing_chain", f"x{i}", o2R, o2r,
                                       PASS if o2R <= o2r and o2r % o2R == 0 else FAIL))
                rows.append(BoundCheck("kissing_product", f"x{i}", o2r, prod,
                                       PASS if o2r <= prod else FAIL))
                tau = KISSING_NUMBERS[d]
                om = omega(o2r)
                rows.append(BoundCheck("kissing_omega", f"x{i}", om, f"{d}*log2({tau})",
                                       PASS if (1 << om) <= tau ** d else FAIL))
            else:
                rows.append(BoundCheck("kissing_product", f"x{i}", g2r.euclidean_order,
                                       "unknown kissing numbers", NON_CERTIFIED))
        else:
            rows.append(BoundCheck("kissing_product", f"x{i}", "M_x(1) rank", C2r.rank,
                                   NOT_APPLICABLE))
    mus = []
    cap = (2 * d + 1) ** d
    for i in range(len(X.motif)):
        mu = reachable_set(X, Site(i, (0,) * d), P.two_r_sq, d).mu
        mus.append(mu)
        rows.append(BoundCheck("mu_packing", f"x{i}", mu, cap, PASS if mu <= cap else FAIL))
    kissing = {k: {"value": KISSING_NUMBERS[k], "provenance": "literature constant (proven)"}
               for k in range(1, d + 1) if k in KISSING_NUMBERS}
    return BoundsReport(
        rows=tuple(rows),
        radius_bound=_fmt_iv(bound_iv),
        radius_bound_over_R=regularity_radius_bound_over_R(d, P.r_sq, P.R_sq),
        kissing_table_used=kissing,
        m1_full_dimensional=tuple(m1_full),
        mu=tuple(mus),
    )

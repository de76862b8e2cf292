"""t-reachability, t-bondedness and the full-dimensionality family tests.

The infinite closure M_x is encoded by the quotient graph on motif indices:
the connected component of x's motif point, a lattice potential for every
node of the component (the translation of the copy reached by a spanning
tree), and the sublattice generated by the cycle vectors.  A site (j, u) is
t-reachable from (i, u0) iff j is in the component and
u - u0 - potential[j] lies in that sublattice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from . import linalg
from .core import (
    MetricParameters,
    PeriodicSet,
    RationalLike,
    Site,
    as_fraction,
    ball_with_distances,
    shortest_nonzero_sq_dist,
    sq_dist,
)
from .metrics import UnsupportedDimensionError, metric_parameters


@dataclass(frozen=True)
class QuotientGraph:
    t_sq: Fraction
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, tuple[int, ...]], ...]  # (i, j, v): p_i -> p_j + v

    def adjacency(self) -> dict[int, list[tuple[int, tuple[int, ...]]]]:
        adj: dict[int, list] = {i: [] for i in self.nodes}
        for i, j, v in self.edges:
            adj[i].append((j, v))
        return adj


def quotient_graph(X: PeriodicSet, t_sq: RationalLike) -> QuotientGraph:
    return _quotient_graph(X, as_fraction(t_sq))


@lru_cache(maxsize=128)
def _quotient_graph(X: PeriodicSet, t_sq: Fraction) -> QuotientGraph:
    edges = []
    for i in range(len(X.motif)):
        for q, s in ball_with_distances(X, Site(i, (0,) * X.d), t_sq):
            if q > 0:
                edges.append((i, s.motif_index, s.translation))
    return QuotientGraph(t_sq, tuple(range(len(X.motif))), tuple(edges))


@dataclass(frozen=True)
class ReachableSet:
    origin: Site
    t_sq: Fraction
    k: Optional[int]  # None: the unbounded closure M_x
    rank: int
    sites: Optional[tuple[Site, ...]] = None
    component: tuple[int, ...] = ()
    potentials: tuple[tuple[int, ...], ...] = ()  # aligned with ``component``
    sublattice: tuple[tuple[int, ...], ...] = ()  # HNF basis of the cycle lattice

    @property
    def mu(self) -> Optional[int]:
        return None if self.sites is None else len(self.sites)

    @property
    def is_whole_lattice(self) -> bool:
        d = len(self.origin.translation)
        return len(self.sublattice) == d and linalg.invariant_factors(self.sublattice, d) == [1] * d

    def contains(self, s: Site) -> bool:
        if self.sites is not None:
            return s in set(self.sites)
        if s.motif_index not in self.component:
            return False
        pot = self.potentials[self.component.index(s.motif_index)]
        delta = [a - b - c for a, b, c in zip(s.translation, self.origin.translation, pot)]
        if not any(delta):
            return True
        if not self.sublattice:
            return False
        coeffs = linalg.solve_in_span(self.sublattice, delta)
        return coeffs is not None and all(c.denominator == 1 for c in coeffs)


def _affine_rank(X: PeriodicSet, sites) -> int:
    sites = list(sites)
    base = X.scaled_position(sites[0])
    rows = [[a - b for a, b in zip(X.scaled_position(s), base)] for s in sites[1:]]
    rows = [r for r in rows if any(r)]
    return linalg.rank(rows) if rows else 0


def reachable_set(X: PeriodicSet, origin: Site, t_sq: RationalLike, k: int) -> ReachableSet:
    """M_x(k): sites reachable from ``origin`` in at most k steps of squared length <= t_sq."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    X.check_site(origin)
    t_sq = as_fraction(t_sq)
    adj = quotient_graph(X, t_sq).adjacency()
    seen = {origin}
    frontier = [origin]
    for _ in range(k):
        nxt = []
        for s in frontier:
            for j, v in adj[s.motif_index]:
                y = Site(j, tuple(a + b for a, b in zip(s.translation, v)))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    ordered = sorted(seen, key=lambda s: (sq_dist(X, origin, s), s.motif_index, s.translation))
    return ReachableSet(origin, t_sq, k, _affine_rank(X, ordered), tuple(ordered))


def reachability_closure(X: PeriodicSet, motif_index: int, t_sq: RationalLike) -> ReachableSet:
    """M_x for x = motif point ``motif_index``, as component + HNF sublattice."""
    if not 0 <= motif_index < len(X.motif):
        raise IndexError(f"motif index {motif_index} out of range")
    return _closure(X, motif_index, as_fraction(t_sq))


@lru_cache(maxsize=256)
def _closure(X: PeriodicSet, motif_index: int, t_sq: Fraction) -> ReachableSet:
    d = X.d
    adj = quotient_graph(X, t_sq).adjacency()
    potential = {motif_index: (0,) * d}
    queue = deque([motif_index])
    cycles = []
    while queue:
        i = queue.popleft()
        for j, v in adj[i]:
            reach = tuple(a + b for a, b in zip(potential[i], v))
            if j not in potential:
                potential[j] = reach
                queue.append(j)
            else:
                cyc = tuple(a - b for a, b in zip(reach, potential[j]))
                if any(cyc):
                    cycles.append(cyc)
    component = tuple(sorted(potential))
    basis = tuple(linalg.hnf_columns(cycles, d))
    # affine hull: generated lattice directions plus offsets of the other nodes
    L = X.coord_denominator
    p0 = X.motif[motif_index]
    dirs = [[L * x for x in b] for b in basis]
    for j in component:
        off = [(X.motif[j][c] - p0[c] + potential[j][c]) * L for c in range(d)]
        if any(off):
            dirs.append([int(x) for x in off])
    rank = linalg.rank(dirs) if dirs else 0
    return ReachableSet(
        origin=Site(motif_index, (0,) * d),
        t_sq=t_sq,
        k=None,
        rank=rank,
        component=component,
        potentials=tuple(potential[j] for j in component),
        sublattice=basis,
    )


def is_t_bonded(X: PeriodicSet, t_sq: RationalLike) -> bool:
    """True iff every point reaches every other by steps of length <= t."""
    closure = reachability_closure(X, 0, t_sq)
    return len(closure.component) == len(X.motif) and closure.is_whole_lattice


@dataclass(frozen=True)
class FamilyReport:
    a_sq: Fraction
    t_sq: Fraction
    ranks: tuple[int, ...]
    in_family: bool
    beyond_R_over_r: bool  # a > R/r: the closure is all of X, membership is automatic
    warnings: tuple[str, ...] = ()


def family_membership(X: PeriodicSet, a: RationalLike | None = None, *,
                      a_sq: RationalLike | None = None,
                      params: MetricParameters | None = None) -> FamilyReport:
    """Is the 2ar-reachable closure full-dimensional at every point?

    Give either ``a`` or ``a_sq`` (the latter allows a = R/r when that ratio
    is irrational).  ``a = 1`` is the t = 2r case.  Without ``params`` the
    covering radius is computed when possible; it only feeds the a > R/r
    warning.
    """
    if (a is None) == (a_sq is None):
        raise ValueError("pass exactly one of a and a_sq")
    a_sq = as_fraction(a) ** 2 if a is not None else as_fraction(a_sq)
    if a_sq < 1 or (a is not None and as_fraction(a) < 0):
        raise ValueError("a must be at least 1")
    if params is None:
        try:
            params = metric_parameters(X)
        except UnsupportedDimensionError:
            params = None
    t_sq = a_sq * shortest_nonzero_sq_dist(X)
    ranks = tuple(reachability_closure(X, i, t_sq).rank for i in range(len(X.motif)))
    beyond = params is not None and a_sq * params.r_sq > params.R_sq
    warnings = ()
    if beyond:
        warnings = ("a exceeds R/r; every point is reachable, membership is automatic",)
    return FamilyReport(a_sq, t_sq, ranks, all(r == X.d for r in ranks), beyond, warnings)

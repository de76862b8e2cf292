"""Packing and covering radii of periodic sets.

The covering radius is found exactly as the largest distance from a motif
point to a vertex of its Voronoi cell.  Each Voronoi cell is built by a
double-description cut loop over bisector half-spaces with a combinatorial
adjacency test, so degenerate (cospherical) configurations such as Z^d need
no perturbation.  Every Voronoi vertex is the circumcenter of a Delaunay
cell; the deepest one is reported together with a simplex of its vertices.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import linalg, profiling
from .core import (
    DeloneError,
    MetricParameters,
    PeriodicSet,
    RationalLike,
    Site,
    as_fraction,
    enumerate_around_point,
    shortest_nonzero_sq_dist,
)

MAX_EXACT_DIM = 4


class UnsupportedDimensionError(DeloneError):
    """Exact covering radius requested for d > 4."""


@dataclass(frozen=True)
class DelaunayCell:
    vertices: tuple[Site, ...]
    circumcenter: tuple[Fraction, ...]
    circumradius_sq: Fraction


@dataclass(frozen=True)
class VoronoiCell:
    """Voronoi cell of one motif point, vertices relative to that point."""

    motif_index: int
    vertices: tuple[tuple[Fraction, ...], ...]
    # vertex -> indices into ``normals`` of the tight bisectors
    tight: tuple[frozenset, ...]
    neighbors: tuple[tuple[Fraction, ...], ...]


def packing_radius_sq(X: PeriodicSet) -> Fraction:
    return shortest_nonzero_sq_dist(X) / 4


def _initial_box(X: PeriodicSet):
    """Cell cut out by the bisectors of the 2d lattice neighbors +-e_k."""
    d = X.d
    g = X.gram.entries
    neighbors = []
    for k in range(d):
        for sign in (1, -1):
            neighbors.append(tuple(Fraction(sign * int(i == k)) for i in range(d)))
    vertices, tight = [], []
    for signs in range(1 << d):
        rhs, ts = [], set()
        for k in range(d):
            s = -1 if signs >> k & 1 else 1
            rhs.append(s * g[k][k] / 2)
            ts.add(2 * k + (0 if s == 1 else 1))
        vertices.append(tuple(linalg.solve(g, rhs)))
        tight.append(frozenset(ts))
    return neighbors, vertices, tight


def voronoi_cell(X: PeriodicSet, motif_index: int) -> VoronoiCell:
    return _voronoi_cell(X, motif_index)


@lru_cache(maxsize=64)
def _voronoi_cell(X: PeriodicSet, motif_index: int) -> VoronoiCell:
    d = X.d
    gram = X.gram
    g = gram.entries
    neighbors, vertices, tight = _initial_box(X)
    normals = [tuple(2 * x for x in linalg.mat_vec(g, w)) for w in neighbors]
    offsets = [gram.quad(w) for w in neighbors]
    max_sq = max(gram.quad(u) for u in vertices)
    origin = X.motif[motif_index]
    # relevant neighbors of a point lie within twice the largest vertex distance
    candidates = enumerate_around_point(X, origin, 4 * max_sq)
    for q, site in candidates:
        if q == 0:
            continue
        if q > 4 * max_sq:
            break
        w = tuple(a - b for a, b in zip(X.position(site), origin))
        if w in neighbors:
            continue
        normal = tuple(2 * x for x in linalg.mat_vec(g, w))
        h = len(normals)
        normals.append(normal)
        offsets.append(q)
        neighbors.append(w)
        vals = [sum(a * b for a, b in zip(normal, u)) - q for u in vertices]
        if all(v <= 0 for v in vals):
            tight = [t | {h} if v == 0 else t for t, v in zip(tight, vals)]
            continue
        profiling.bump("voronoi_cuts")
        keep_v, keep_t = [], []
        inside = [i for i, v in enumerate(vals) if v < 0]
        outside = [i for i, v in enumerate(vals) if v > 0]
        for i, v in enumerate(vals):
            if v < 0:
                keep_v.append(vertices[i])
                keep_t.append(tight[i])
            elif v == 0:
                keep_v.append(vertices[i])
                keep_t.append(tight[i] | {h})
        for i in outside:
            for j in inside:
                common = tight[i] & tight[j]
                if len(common) < d - 1:
                    continue
                if any(k != i and k != j and common <= tight[k] for k in range(len(vertices))):
                    continue
                lam = vals[i] / (vals[i] - vals[j])
                ui, uj = vertices[i], vertices[j]
                keep_v.append(tuple(a + lam * (b - a) for a, b in zip(ui, uj)))
                keep_t.append(common | {h})
        vertices, tight = keep_v, keep_t
        max_sq = max(gram.quad(u) for u in vertices)
    order = sorted(range(len(vertices)), key=lambda i: vertices[i])
    return VoronoiCell(
        motif_index,
        tuple(vertices[i] for i in order),
        tuple(frozenset(tight[i]) for i in order),
        tuple(neighbors),
    )


def in_sphere(X: PeriodicSet, simplex: Sequence[Sequence[Fraction]], y: Sequence[Fraction]) -> int:
    """+1 if y is strictly inside the circumsphere of ``simplex``, 0 on it, -1 outside.

    Lifted determinant: rows (1, v, q(v)) for the d+1 vertices and y, divided
    by the orientation of the simplex.  Points are lattice coordinates and q
    is the Gram quadratic form, so the sign is exact.
    """
    q = lambda v: linalg.quad(X.gram.entries, v)
    rows = [[Fraction(1), *v, q(v)] for v in simplex]
    orient = linalg.det([r[:-1] for r in rows])
    if orient == 0:
        raise ValueError("degenerate simplex")
    lifted = linalg.det(rows + [[Fraction(1), *y, q(y)]])
    s = (lifted > 0) - (lifted < 0)
    o = (orient > 0) - (orient < 0)
    return -s * o


def _select_simplex(X: PeriodicSet, sites: Sequence[Site]) -> tuple[Site, ...]:
    base = sites[0]
    p0 = X.position(base)
    chosen, rows = [base], []
    for s in sites[1:]:
        row = [a - b for a, b in zip(X.position(s), p0)]
        if linalg.rank(rows + [row]) > len(rows):
            rows.append(row)
            chosen.append(s)
            if len(rows) == X.d:
                break
    return tuple(chosen)


def deepest_hole(X: PeriodicSet, *, max_dim: int = MAX_EXACT_DIM) -> DelaunayCell:
    """A Delaunay cell of maximal circumradius (its circumcenter is a deep hole)."""
    if X.d > max_dim:
        raise UnsupportedDimensionError(
            f"exact covering radius supports d <= {max_dim} (got d={X.d}); "
            "declare R^2 explicitly (--declared-R-sq) and screen it by sampling"
        )
    return _deepest_hole(X)


@lru_cache(maxsize=64)
def _deepest_hole(X: PeriodicSet) -> DelaunayCell:
    best = None
    for i in range(len(X.motif)):
        cell = _voronoi_cell(X, i)
        for u in cell.vertices:
            q = X.gram.quad(u)
            if best is None or q > best[0]:
                best = (q, i, u)
    q, i, u = best
    center = tuple(a + b for a, b in zip(X.motif[i], u))
    sphere = [s for dist, s in enumerate_around_point(X, center, q) if dist == q]
    return DelaunayCell(_select_simplex(X, sphere), center, q)


def covering_radius_sq(X: PeriodicSet, *, max_dim: int = MAX_EXACT_DIM) -> Fraction:
    """Exact R^2 for d <= 4."""
    return deepest_hole(X, max_dim=max_dim).circumradius_sq


def metric_parameters(X: PeriodicSet, declared_R_sq: RationalLike | None = None) -> MetricParameters:
    """(2r)^2 and R^2, exact for d <= 4 or taken from ``declared_R_sq``."""
    two_r_sq = shortest_nonzero_sq_dist(X)
    if declared_R_sq is not None:
        return MetricParameters(two_r_sq, as_fraction(declared_R_sq), declared=True)
    return MetricParameters(two_r_sq, covering_radius_sq(X))


@dataclass(frozen=True)
class DeclaredRadiusCheck:
    declared_R_sq: Fraction
    samples: int
    seed: int
    max_observed_sq: Fraction
    worst_point: tuple[Fraction, ...]
    status: str  # "PASS (non-conclusive)" or "FAIL"

    @property
    def passed(self) -> bool:
        return self.status.startswith("PASS")


def nearest_sq_dist(X: PeriodicSet, point: Sequence[Fraction], hint: Fraction | None = None) -> Fraction:
    """Exact squared distance from a rational point to the nearest site."""
    if hint is not None:
        close = enumerate_around_point(X, point, hint)
        if close:
            return close[0][0]
    return enumerate_around_point(X, point, X.gram.babai_covering_sq)[0][0]


def verify_declared_R(X: PeriodicSet, R_sq: RationalLike, sample_count: int = 10_000,
                      seed: int = 0, resolution_bits: int = 16) -> DeclaredRadiusCheck:
    """Seeded random screening of a declared covering radius.

    PASS only means no sample was farther than sqrt(R_sq) from the set; it is
    statistical evidence, never a proof.  FAIL is conclusive.
    """
    R_sq = as_fraction(R_sq)
    if R_sq <= 0:
        raise ValueError("R_sq must be positive")
    rng = random.Random(seed)
    den = 1 << resolution_bits
    worst_q, worst_p = Fraction(-1), None
    for _ in range(sample_count):
        p = tuple(Fraction(rng.randrange(den), den) for _ in range(X.d))
        q = nearest_sq_dist(X, p, R_sq)
        if q > worst_q:
            worst_q, worst_p = q, p
    status = "FAIL" if worst_q > R_sq else "PASS (non-conclusive)"
    return DeclaredRadiusCheck(R_sq, sample_count, seed, worst_q, worst_p, status)

"""Clusters, cluster equivalence and cluster groups.

A distance-preserving bijection between finite point sets extends to an
isometry of the ambient space, so equivalence and stabilizers are decided
purely combinatorially.  An isometry fixing the center is determined by the
images of a spanning base of members; the search assigns base images one at
a time (pruned by norm and inner products with earlier images) and then
identifies every other member by its inner-product profile against the base.
The stabilizer chain along the base gives the group order as a product of
orbit lengths, with the transversal elements as strong generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import permutations
from math import gcd
from typing import Iterator, Optional, Sequence

from sympy import factorint

from . import linalg, profiling
from .core import (
    PeriodicSet,
    Radius,
    RadiusLike,
    Site,
    ball_with_distances,
)


class _Infinite:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    __str__ = __repr__

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()


class ContractViolation(ValueError):
    pass


def omega(n: int) -> int:
    """Number of prime factors of n counted with multiplicity."""
    if n < 1:
        raise ValueError("omega needs a positive integer")
    return sum(factorint(n).values())


@dataclass(frozen=True)
class Cluster:
    """C_x(rho): the sites of X in the closed ball of radius rho about x."""

    X: PeriodicSet
    center: Site
    radius: Radius
    members: tuple[Site, ...] = field(compare=False)
    sq_to_center: tuple[Fraction, ...] = field(compare=False, repr=False)

    @property
    def rho_sq(self) -> Fraction:
        return self.radius.sq

    def __len__(self):
        return len(self.members)

    @cached_property
    def vectors(self) -> tuple[tuple[int, ...], ...]:
        """Member positions relative to the center, scaled to integers."""
        c = self.X.scaled_position(self.center)
        return tuple(tuple(a - b for a, b in zip(self.X.scaled_position(s), c))
                     for s in self.members)

    def pair_sq_dist(self, i: int, j: int) -> Fraction:
        gi = self.X.gram.integer_entries
        diff = [a - b for a, b in zip(self.vectors[i], self.vectors[j])]
        return Fraction(linalg.quad(gi, diff), self.X.distance_scale)

    @cached_property
    def pair_sq_dists(self) -> tuple[tuple[Fraction, ...], ...]:
        n = len(self.members)
        return tuple(tuple(self.pair_sq_dist(i, j) for j in range(n)) for i in range(n))

    @cached_property
    def rank(self) -> int:
        return _rank_of(self.vectors)


def _rank_of(vectors) -> int:
    rows = [v for v in vectors if any(v)]
    if not rows:
        return 0
    # reduce cheaply: keep an echelon set and only test new vectors against it
    basis: list = []
    for v in rows:
        if linalg.rank(basis + [v]) > len(basis):
            basis.append(v)
            if len(basis) == len(v):
                break
    return len(basis)


def cluster_at(X: PeriodicSet, center: Site, rho: RadiusLike) -> Cluster:
    rad = Radius.of(rho)
    entries = ball_with_distances(X, center, rad)
    return Cluster(X, center, rad, tuple(s for _, s in entries), tuple(q for q, _ in entries))


def get_cluster(X: PeriodicSet, motif_index: int, rho: RadiusLike) -> Cluster:
    """The rho-cluster at motif point ``motif_index`` (zero translation).

    ``rho`` is a squared radius, or a :class:`Radius`.
    """
    if not 0 <= motif_index < len(X.motif):
        raise IndexError(f"motif index {motif_index} out of range")
    return _get_cluster(X, motif_index, Radius.of(rho))


@lru_cache(maxsize=512)
def _get_cluster(X: PeriodicSet, motif_index: int, rad: Radius) -> Cluster:
    return cluster_at(X, Site(motif_index, (0,) * X.d), rad)


def cluster_rank(C: Cluster) -> int:
    """Dimension of the affine hull of the cluster."""
    return C.rank


class _Frame:
    """Integer inner-product view of a cluster on a chosen common scale."""

    def __init__(self, C: Cluster, factor: int):
        gi = C.X.gram.integer_entries
        d = C.X.d
        self.C = C
        self.vecs = C.vectors
        self.gv = [tuple(sum(gi[r][c] * v[c] for c in range(d)) for r in range(d))
                   for v in self.vecs]
        self.factor = factor
        self.norms = [factor * sum(a * b for a, b in zip(v, w)) for v, w in zip(self.vecs, self.gv)]
        self.shells: dict[int, list[int]] = {}
        for i, n in enumerate(self.norms):
            self.shells.setdefault(n, []).append(i)

    def ip(self, i: int, j: int) -> int:
        return self.factor * sum(a * b for a, b in zip(self.vecs[i], self.gv[j]))

    def base(self) -> list[int]:
        """Spanning members, preferring small shells to keep branching low."""
        order = sorted((i for i in range(len(self.vecs)) if self.norms[i]),
                       key=lambda i: (len(self.shells[self.norms[i]]), self.norms[i], i))
        target = self.C.rank
        chosen: list[int] = []
        rows: list = []
        for i in order:
            if len(chosen) == target:
                break
            if linalg.rank(rows + [self.vecs[i]]) > len(rows):
                rows.append(self.vecs[i])
                chosen.append(i)
        return chosen


def _common_frames(C1: Cluster, C2: Cluster) -> tuple[_Frame, _Frame]:
    s1, s2 = C1.X.distance_scale, C2.X.distance_scale
    g = gcd(s1, s2)
    return _Frame(C1, s2 // g), _Frame(C2, s1 // g)


class _Search:
    """Backtracking over base images from ``src`` into ``dst``."""

    def __init__(self, src: _Frame, dst: _Frame, base: Sequence[int]):
        self.src, self.dst, self.base = src, dst, list(base)
        self.base_ips = [[src.ip(b, c) for c in self.base] for b in self.base]
        self.profiles = [(src.norms[y], *(src.ip(y, b) for b in self.base))
                         for y in range(len(src.vecs))]

    def candidates(self, level: int, images: Sequence[int]) -> list[int]:
        b = self.base[level]
        want = self.base_ips[level]
        dst = self.dst
        out = []
        for z in dst.shells.get(self.src.norms[b], ()):
            if z in images:
                continue
            if all(dst.ip(z, images[k]) == want[k] for k in range(len(images))):
                out.append(z)
        return out

    def complete(self, images: Sequence[int]) -> Optional[tuple[int, ...]]:
        profiling.bump("backtrack_leaves")
        dst = self.dst
        lookup = {}
        for z in range(len(dst.vecs)):
            lookup[(dst.norms[z], *(dst.ip(z, c) for c in images))] = z
        perm = []
        for prof in self.profiles:
            z = lookup.get(prof)
            if z is None:
                return None
            perm.append(z)
        return tuple(perm)

    def extensions(self, images: list[int]) -> Iterator[tuple[int, ...]]:
        profiling.bump("backtrack_nodes")
        level = len(images)
        if level == len(self.base):
            perm = self.complete(images)
            if perm is not None:
                yield perm
            return
        for z in self.candidates(level, images):
            images.append(z)
            yield from self.extensions(images)
            images.pop()

    def first(self, prefix: Sequence[int]) -> Optional[tuple[int, ...]]:
        return next(self.extensions(list(prefix)), None)


@dataclass(frozen=True)
class EquivalenceWitness:
    """Center-preserving, distance-preserving bijection C1 -> C2."""

    mapping: tuple[int, ...]  # member index in C1 -> member index in C2
    source: Cluster
    target: Cluster

    def as_sites(self) -> dict[Site, Site]:
        return {self.source.members[i]: self.target.members[j] for i, j in enumerate(self.mapping)}

    def inverse(self) -> "EquivalenceWitness":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return EquivalenceWitness(tuple(inv), self.target, self.source)

    def compose(self, other: "EquivalenceWitness") -> "EquivalenceWitness":
        """self followed by other."""
        return EquivalenceWitness(tuple(other.mapping[j] for j in self.mapping), self.source,
                                  other.target)

    def verify(self) -> bool:
        a, b = self.source, self.target
        if len(a) != len(b) or sorted(self.mapping) != list(range(len(b))):
            return False
        if b.members[self.mapping[0]] != b.center:
            return False
        n = len(a)
        return all(a.pair_sq_dist(i, j) == b.pair_sq_dist(self.mapping[i], self.mapping[j])
                   for i in range(n) for j in range(i + 1, n))


def _sign_match(C1: Cluster, C2: Cluster) -> Optional[tuple[int, ...]]:
    """Try the isometries +I and -I, which settle translated clusters at once."""
    if C1.X.gram != C2.X.gram or C1.X.coord_denominator != C2.X.coord_denominator:
        return None
    index = {v: k for k, v in enumerate(C2.vectors)}
    for sign in (1, -1):
        perm = []
        for v in C1.vectors:
            k = index.get(tuple(sign * x for x in v))
            if k is None:
                break
            perm.append(k)
        else:
            return tuple(perm)
    return None


def equivalent(C1: Cluster, C2: Cluster) -> tuple[bool, Optional[EquivalenceWitness]]:
    """Decide whether an isometry maps C1 onto C2 carrying center to center."""
    if C1.X.d != C2.X.d:
        raise ContractViolation("clusters live in different dimensions")
    if C1.radius != C2.radius:
        raise ContractViolation(f"cluster radii differ: {C1.radius} vs {C2.radius}")
    if len(C1) != len(C2) or C1.rank != C2.rank:
        return False, None
    if C1.sq_to_center != C2.sq_to_center:
        return False, None
    perm = _sign_match(C1, C2)
    if perm is not None:
        return True, EquivalenceWitness(perm, C1, C2)
    src, dst = _common_frames(C1, C2)
    search = _Search(src, dst, src.base())
    perm = search.first([])
    if perm is None:
        return False, None
    return True, EquivalenceWitness(perm, C1, C2)


@dataclass(frozen=True)
class ClusterGroupReport:
    perm_order: int
    generators: tuple[tuple[int, ...], ...]
    cluster_rank: int
    euclidean_order: object  # int or INFINITE
    omega: Optional[int]  # None when the group is infinite
    orbit_lengths: tuple[int, ...] = ()

    @property
    def finite(self) -> bool:
        return self.euclidean_order is not INFINITE


def euclidean_order_for(perm_order: int, rank: int, d: int):
    if rank == d:
        return perm_order
    if rank == d - 1:
        # the reflection in the hyperplane spanned by the cluster fixes it pointwise
        return 2 * perm_order
    return INFINITE


def cluster_group(C: Cluster) -> ClusterGroupReport:
    """Center stabilizer of the cluster's symmetry group, as permutations of members."""
    return _cluster_group(C)


@lru_cache(maxsize=512)
def _cluster_group(C: Cluster) -> ClusterGroupReport:
    frame = _Frame(C, 1)
    base = frame.base()
    search = _Search(frame, frame, base)
    gens: list[tuple[int, ...]] = []
    orbit_lengths = []
    for level in range(len(base)):
        prefix = base[:level]
        count = 0
        for z in search.candidates(level, prefix):
            if z == base[level]:
                count += 1
                continue
            perm = search.first(prefix + [z])
            if perm is not None:
                count += 1
                gens.append(perm)
        orbit_lengths.append(count)
    perm_order = 1
    for n in orbit_lengths:
        perm_order *= n
    eo = euclidean_order_for(perm_order, C.rank, C.X.d)
    return ClusterGroupReport(
        perm_order=perm_order,
        generators=tuple(gens),
        cluster_rank=C.rank,
        euclidean_order=eo,
        omega=None if eo is INFINITE else omega(eo),
        orbit_lengths=tuple(orbit_lengths),
    )


def brute_force_automorphisms(C: Cluster) -> list[tuple[int, ...]]:
    """Every center-fixing distance-preserving permutation, by exhaustive search.

    Independent of the base-image search; only sensible for small clusters.
    """
    n = len(C.members)
    dist = C.pair_sq_dists
    found = []
    perm = [0] + [None] * (n - 1)
    used = [True] + [False] * (n - 1)

    def place(i):
        if i == n:
            found.append(tuple(perm))
            return
        for z in range(1, n):
            if used[z]:
                continue
            if all(dist[i][k] == dist[z][perm[k]] for k in range(i)):
                used[z] = True
                perm[i] = z
                place(i + 1)
                used[z] = False

    place(1) if n > 1 else found.append((0,))
    return found


def permutation_closure(generators: Sequence[tuple[int, ...]], n: int) -> set[tuple[int, ...]]:
    identity = tuple(range(n))
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for g in frontier:
            for h in generators:
                p = tuple(h[g[i]] for i in range(n))
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
        frontier = nxt
    return seen


def isometry_matrix(witness: EquivalenceWitness) -> list[list[Fraction]]:
    """Linear part, in lattice coordinates, of the isometry realizing a witness.

    Only defined for full-rank clusters.
    """
    a, b = witness.source, witness.target
    d = a.X.d
    if a.rank != d:
        raise ValueError("isometry reconstruction needs a full-rank cluster")
    frame = _Frame(a, 1)
    base = frame.base()
    La, Lb = a.X.coord_denominator, b.X.coord_denominator
    src = [[Fraction(a.vectors[i][r], La) for i in base] for r in range(d)]
    dst = [[Fraction(b.vectors[witness.mapping[i]][r], Lb) for i in base] for r in range(d)]
    return linalg.mat_mul(dst, linalg.inverse(src))


def brute_force_equivalent(C1: Cluster, C2: Cluster) -> bool:
    """Exhaustive check over all center-fixing bijections (tiny clusters only)."""
    if len(C1) != len(C2):
        return False
    n = len(C1)
    d1, d2 = C1.pair_sq_dists, C2.pair_sq_dists
    for rest in permutations(range(1, n)):
        perm = (0,) + rest
        if all(d1[i][j] == d2[perm[i]][perm[j]] for i in range(n) for j in range(i + 1, n)):
            return True
    return False

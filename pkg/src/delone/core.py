"""Periodic point sets over a rational quadratic form.

A periodic set is a finite motif of rational points (lattice coordinates in
[0, 1)^d) repeated by the integer lattice Z^d, with the Euclidean metric given
by a rational Gram matrix.  All squared distances are exact ``Fraction``s.
"""

from __future__ import annotations

import math
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, NamedTuple, Sequence, Union

from . import linalg, profiling

Rational = Fraction
RationalLike = Union[Fraction, int, str]


class DeloneError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSetError(DeloneError, ValueError):
    """Input does not describe a valid periodic set."""


def as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a Fraction or 'p/q' string")
    return Fraction(value)


def exact_sqrt(q: Fraction) -> Fraction | None:
    """Square root of ``q`` if it is a rational square, else ``None``."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _sign_lin_sqrt(r: Fraction, s: Fraction, u: Fraction) -> int:
    """Sign of ``r + s*sqrt(u)`` for ``u >= 0``."""
    if u == 0 or s == 0:
        return (r > 0) - (r < 0)
    if r >= 0 and s > 0:
        return 1
    if r <= 0 and s < 0:
        return -1
    # opposite signs: compare r^2 with s^2 u
    lhs, rhs = r * r, s * s * u
    if lhs == rhs:
        return 0
    if r > 0:
        return 1 if lhs > rhs else -1
    return -1 if lhs > rhs else 1


@dataclass(frozen=True, order=False)
class Radius:
    """A nonnegative radius of the form sqrt(a) + sqrt(b) with rational a, b.

    This is exactly the shape of every radius the regularity criteria need
    (rho0 + 2R, 2kR, ...), and it admits exact comparison with squared
    distances.  The representation is canonical, so ``==`` is exact equality.
    """

    a: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self):
        a, b = as_fraction(self.a), as_fraction(self.b)
        if a < 0 or b < 0:
            raise ValueError("radius terms must be nonnegative")
        if a < b:
            a, b = b, a
        if b:
            root = exact_sqrt(a * b)
            if root is not None:
                a, b = a + b + 2 * root, Fraction(0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def of(cls, value: "RadiusLike") -> "Radius":
        if isinstance(value, Radius):
            return value
        return cls(as_fraction(value))

    @property
    def is_rational_sq(self) -> bool:
        return self.b == 0

    @property
    def sq(self) -> Fraction:
        """Squared radius; only defined when it is rational."""
        if self.b:
            raise ValueError(f"{self} has an irrational square")
        return self.a

    def contains_sq(self, q: Fraction) -> bool:
        """True iff sqrt(q) <= self."""
        u = q - self.a - self.b
        if u <= 0:
            return True
        return u * u <= 4 * self.a * self.b

    def upper_sq(self) -> Fraction:
        """A rational upper bound on the squared radius (exact when possible)."""
        if not self.b:
            return self.a
        prod = self.a * self.b
        scale = 1 << 20
        root_up = Fraction(math.isqrt(math.floor(prod * scale * scale)) + 1, scale)
        return self.a + self.b + 2 * root_up

    def compare(self, other: "Radius") -> int:
        p = self.a + self.b - other.a - other.b
        u, v = self.a * self.b, other.a * other.b
        # sign of p + 2 sqrt(u) - 2 sqrt(v)
        x_sign = _sign_lin_sqrt(p, Fraction(2), u)
        if x_sign < 0:
            return -1
        if v == 0:
            return x_sign
        return _sign_lin_sqrt(p * p + 4 * u - 4 * v, 4 * p, u)

    def __lt__(self, other):
        return self.compare(Radius.of(other)) < 0

    def __le__(self, other):
        return self.compare(Radius.of(other)) <= 0

    def __gt__(self, other):
        return self.compare(Radius.of(other)) > 0

    def __ge__(self, other):
        return self.compare(Radius.of(other)) >= 0

    def __float__(self):
        return math.sqrt(self.a) + math.sqrt(self.b)

    def __str__(self):
        if not self.b:
            root = exact_sqrt(self.a)
            return str(root) if root is not None else f"sqrt({self.a})"
        return f"sqrt({self.a})+sqrt({self.b})"


RadiusLike = Union[Radius, Fraction, int, str]


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric positive definite rational matrix of basis inner products."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(x) for x in row) for row in self.entries)
        d = len(rows)
        if d < 1 or any(len(row) != d for row in rows):
            raise InvalidSetError("Gram matrix must be square with d >= 1")
        for i in range(d):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise InvalidSetError(f"Gram matrix not symmetric at ({i},{j})")
        for k in range(1, d + 1):
            if linalg.det([row[:k] for row in rows[:k]]) <= 0:
                raise InvalidSetError(f"Gram matrix not positive definite (minor {k})")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def identity(cls, d: int) -> "GramMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)))

    @property
    def d(self) -> int:
        return len(self.entries)

    def quad(self, v: Sequence) -> Fraction:
        return linalg.quad(self.entries, v)

    def inner(self, u: Sequence, v: Sequence) -> Fraction:
        return sum(u[i] * sum(self.entries[i][j] * v[j] for j in range(self.d))
                   for i in range(self.d))

    @cached_property
    def ldl(self):
        return linalg.ldl(self.entries)

    @cached_property
    def denominator(self) -> int:
        return linalg.common_denominator(x for row in self.entries for x in row)

    @cached_property
    def integer_entries(self) -> tuple[tuple[int, ...], ...]:
        """``denominator * G`` as integers."""
        den = self.denominator
        return tuple(tuple(int(x * den) for x in row) for row in self.entries)

    @cached_property
    def babai_covering_sq(self) -> Fraction:
        """Upper bound on the squared covering radius of the lattice Z^d itself."""
        diag, _ = self.ldl
        return sum(diag) / 4


class Site(NamedTuple):
    """The point ``motif[motif_index] + translation`` of a periodic set."""

    motif_index: int
    translation: tuple[int, ...]


@dataclass(frozen=True)
class MetricParameters:
    """Squared packing diameter (2r)^2 and squared covering radius R^2."""

    two_r_sq: Fraction
    R_sq: Fraction
    declared: bool = False

    def __post_init__(self):
        if self.two_r_sq <= 0:
            raise ValueError("two_r_sq must be positive")
        if self.R_sq * 4 < self.two_r_sq:
            raise ValueError("inconsistent parameters: R < r")

    @property
    def r_sq(self) -> Fraction:
        return self.two_r_sq / 4

    @property
    def two_R(self) -> Radius:
        return Radius(4 * self.R_sq)

    def multiple_of_R(self, c: RationalLike) -> Radius:
        c = as_fraction(c)
        return Radius(c * c * self.R_sq)


@dataclass(frozen=True)
class PeriodicSet:
    """A Delone set given as ``motif + Z^d`` under the metric ``gram``."""

    gram: GramMatrix
    motif: tuple[tuple[Fraction, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        gram = self.gram if isinstance(self.gram, GramMatrix) else GramMatrix(self.gram)
        motif = tuple(tuple(as_fraction(x) for x in p) for p in self.motif)
        if not motif:
            raise InvalidSetError("motif must be nonempty")
        for k, p in enumerate(motif):
            if len(p) != gram.d:
                raise InvalidSetError(f"motif point {k} has wrong dimension")
            if any(not (0 <= x < 1) for x in p):
                raise InvalidSetError(f"motif point {k} not in [0,1)^d")
        if len(set(motif)) != len(motif):
            raise InvalidSetError("motif points must be distinct")
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "motif", motif)

    @property
    def d(self) -> int:
        return self.gram.d

    def __len__(self) -> int:
        return len(self.motif)

    def site(self, motif_index: int, translation: Sequence[int] | None = None) -> Site:
        self.check_site(Site(motif_index, tuple(translation or (0,) * self.d)))
        return Site(motif_index, tuple(translation or (0,) * self.d))

    def check_site(self, s: Site) -> None:
        if not 0 <= s.motif_index < len(self.motif):
            raise IndexError(f"motif index {s.motif_index} out of range")
        if len(s.translation) != self.d:
            raise IndexError("translation has wrong dimension")

    def position(self, s: Site) -> tuple[Fraction, ...]:
        p = self.motif[s.motif_index]
        return tuple(p[i] + s.translation[i] for i in range(self.d))

    @cached_property
    def coord_denominator(self) -> int:
        return linalg.common_denominator(x for p in self.motif for x in p)

    @cached_property
    def distance_scale(self) -> int:
        """True squared distance = integer form value / distance_scale."""
        return self.coord_denominator ** 2 * self.gram.denominator

    def scaled_position(self, s: Site) -> tuple[int, ...]:
        """``coord_denominator * position(s)`` as integers."""
        L = self.coord_denominator
        p = self.motif[s.motif_index]
        return tuple(int(p[i] * L) + L * s.translation[i] for i in range(self.d))


def sq_dist(X: PeriodicSet, a: Site, b: Site) -> Fraction:
    """Exact squared Euclidean distance between two sites."""
    X.check_site(a)
    X.check_site(b)
    pa, pb = X.scaled_position(a), X.scaled_position(b)
    diff = [x - y for x, y in zip(pa, pb)]
    return Fraction(linalg.quad(X.gram.integer_entries, diff), X.distance_scale)


def _fincke_pohst_scaled(gram: GramMatrix, offset: Sequence[Fraction], bound: Fraction,
                         M: int) -> list[tuple[int, tuple[int, ...]]]:
    """All integer t with q(t + offset) <= bound, as ``(scaled q, t)`` pairs.

    ``M`` must clear the denominators of ``offset``; the returned integer is
    ``M^2 * gram.denominator * q(t + offset)``.  The outer levels narrow the
    range of each coordinate exactly with rational completion of squares;
    the innermost level evaluates the form in integers.
    """
    d = gram.d
    diag, mu = gram.ldl
    gi = gram.integer_entries
    g00 = gi[0][0]
    w = [int(o * M) for o in offset]
    x = [Fraction(0)] * d
    t = [0] * d
    v = [0] * d  # M * (t + offset)
    out = []

    def span(i: int, rem: Fraction) -> tuple[Fraction, int, int]:
        center = offset[i] + sum((mu[i][j] * x[j] for j in range(i + 1, d)), Fraction(0))
        # integers u = m (t_i + center) with u^2 <= m^2 rem / D_i, solved exactly
        n, m = center.numerator, center.denominator
        umax = math.isqrt(math.floor(rem * m * m / diag[i]))
        return center, -((umax + n) // m), (umax - n) // m

    def level(i: int, rem: Fraction):
        profiling.bump("enumeration_nodes")
        center, lo, hi = span(i, rem)
        if i == 0:
            s = sum(gi[0][j] * v[j] for j in range(1, d))
            rest_q = sum(gi[a][b] * v[a] * v[b] for a in range(1, d) for b in range(1, d))
            rest = tuple(t[1:])
            for t0 in range(lo, hi + 1):
                v0 = M * t0 + w[0]
                out.append((v0 * (g00 * v0 + 2 * s) + rest_q, (t0,) + rest))
            return
        di = diag[i]
        for ti in range(lo, hi + 1):
            xi = ti + center
            t[i] = ti
            x[i] = ti + offset[i]
            v[i] = M * ti + w[i]
            level(i - 1, rem - di * xi * xi)

    if bound >= 0:
        level(d - 1, bound)
    return out


def _fincke_pohst(gram: GramMatrix, offset: Sequence[Fraction], bound: Fraction):
    """``(q(t + offset), t)`` for all integer t with q(t + offset) <= bound."""
    M = linalg.common_denominator(offset)
    scale = M * M * gram.denominator
    return [(Fraction(q, scale), t) for q, t in _fincke_pohst_scaled(gram, offset, bound, M)]


_UNSET = object()


def enumerate_around_point(X: PeriodicSet, point: Sequence[Fraction],
                           radius: RadiusLike) -> list[tuple[Fraction, Site]]:
    """All sites within ``radius`` of an arbitrary rational point.

    Returns ``(squared distance, site)`` pairs in the deterministic site
    order: by squared distance, then motif index, then translation.
    """
    rad = Radius.of(radius)
    bound = rad.upper_sq()
    offsets = [[p[i] - point[i] for i in range(X.d)] for p in X.motif]
    M = linalg.common_denominator(x for o in offsets for x in o)
    scale = M * M * X.gram.denominator
    raw = []
    for j, offset in enumerate(offsets):
        raw.extend((q, j, t) for q, t in _fincke_pohst_scaled(X.gram, offset, bound, M))
    raw.sort()
    values: dict[int, Fraction | None] = {}
    found = []
    for q, j, t in raw:
        f = values.get(q, _UNSET)
        if f is _UNSET:
            f = Fraction(q, scale)
            if not (rad.is_rational_sq or rad.contains_sq(f)):
                f = None
            values[q] = f
        if f is not None:
            found.append((f, Site(j, t)))
    return found


class _BallCache:
    """Largest ball enumerated so far per (set, motif index); smaller balls are prefixes."""

    def __init__(self, maxsize: int = 256):
        self._lock = threading.Lock()
        self._data: dict = {}
        self._maxsize = maxsize

    def get(self, X: PeriodicSet, index: int, rad: Radius):
        key = (X, index)
        with self._lock:
            hit = self._data.get(key)
        if hit is not None and rad <= hit[0]:
            radius, entries, dists = hit
            if rad.is_rational_sq:
                return entries[:bisect_right(dists, rad.a)]
            return [e for e in entries if rad.contains_sq(e[0])]
        origin = X.position(Site(index, (0,) * X.d))
        entries = enumerate_around_point(X, origin, rad)
        with self._lock:
            if len(self._data) >= self._maxsize:
                self._data.pop(next(iter(self._data)))
            self._data[key] = (rad, entries, [e[0] for e in entries])
        return entries


_ball_cache = _BallCache()


def ball_with_distances(X: PeriodicSet, center: Site,
                        radius: RadiusLike) -> list[tuple[Fraction, Site]]:
    """``(squared distance, site)`` pairs of the closed ball about ``center``."""
    X.check_site(center)
    rad = Radius.of(radius)
    entries = _ball_cache.get(X, center.motif_index, rad)
    shift = center.translation
    if any(shift):
        entries = [(q, Site(s.motif_index, tuple(a + b for a, b in zip(s.translation, shift))))
                   for q, s in entries]
    return entries


def enumerate_in_ball(X: PeriodicSet, center: Site, rho_sq: RadiusLike) -> list[Site]:
    """Sites y with sq_dist(center, y) <= rho_sq, in deterministic order.

    ``rho_sq`` is a squared radius; a :class:`Radius` may be passed instead
    for radii whose square is irrational.
    """
    if not isinstance(rho_sq, Radius):
        rho_sq = as_fraction(rho_sq)
        if rho_sq < 0:
            raise ValueError("rho_sq must be nonnegative")
    return [s for _, s in ball_with_distances(X, center, rho_sq)]


def shortest_nonzero_sq_dist(X: PeriodicSet) -> Fraction:
    """(2r)^2, the minimum squared distance between distinct points."""
    return _shortest(X)


@lru_cache(maxsize=128)
def _shortest(X: PeriodicSet) -> Fraction:
    # a lattice translate sits at squared distance G_ii, so this bound is attained
    bound = min(X.gram.entries[i][i] for i in range(X.d))
    best = bound
    for i in range(len(X.motif)):
        for q, _ in ball_with_distances(X, Site(i, (0,) * X.d), bound)[1:2]:
            best = min(best, q)
    return best


@dataclass(frozen=True)
class LatticeAutomorphismGroup:
    """Integer matrices U with U^T G U = G."""

    elements: tuple[tuple[tuple[int, ...], ...], ...]
    generators: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def order(self) -> int:
        return len(self.elements)


def _int_mat_mul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
                 for i in range(len(a)))


def _closure(gens, identity):
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                p = _int_mat_mul(g, h)
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
        frontier = nxt
    return seen


def gram_automorphisms(G: GramMatrix) -> LatticeAutomorphismGroup:
    """Full automorphism group of the lattice with Gram matrix G."""
    return _gram_automorphisms(G)


@lru_cache(maxsize=64)
def _gram_automorphisms(G: GramMatrix) -> LatticeAutomorphismGroup:
    d = G.d
    gi = G.integer_entries
    target_norms = {gi[i][i] for i in range(d)}
    zero = [Fraction(0)] * d
    short = _fincke_pohst(G, zero, Fraction(max(target_norms), G.denominator))
    by_norm: dict[int, list[tuple[int, ...]]] = {}
    for q, v in short:
        n = int(q * G.denominator)
        if n in target_norms:
            by_norm.setdefault(n, []).append(v)
    gv_cache = {}

    def gv(v):
        out = gv_cache.get(v)
        if out is None:
            out = gv_cache[v] = tuple(sum(gi[r][c] * v[c] for c in range(d)) for r in range(d))
        return out

    def ip(u, v):
        w = gv(v)
        return sum(a * b for a, b in zip(u, w))

    columns = []
    found = []

    def extend(i):
        profiling.bump("lattice_aut_nodes")
        if i == d:
            found.append(tuple(tuple(columns[c][r] for c in range(d)) for r in range(d)))
            return
        for v in by_norm[gi[i][i]]:
            if all(ip(v, columns[j]) == gi[i][j] for j in range(i)):
                columns.append(v)
                extend(i + 1)
                columns.pop()

    extend(0)
    found.sort()
    identity = tuple(tuple(int(r == c) for c in range(d)) for r in range(d))
    gens: list = []
    group = {identity}
    for U in found:
        if U not in group:
            gens.append(U)
            group = _closure(gens, identity)
    assert len(group) == len(found)
    return LatticeAutomorphismGroup(tuple(found), tuple(gens))


def translation_box_scan(X: PeriodicSet, center: Site, rho_sq: Fraction,
                         extent: int) -> list[Site]:
    """Brute-force ball enumeration over translations in [-extent, extent]^d.

    Independent of the Fincke-Pohst path; used to check it.
    """
    res = []
    for j in range(len(X.motif)):
        for t in product(range(-extent, extent + 1), repeat=X.d):
            tt = tuple(a + b for a, b in zip(t, center.translation))
            s = Site(j, tt)
            q = sq_dist(X, center, s)
            if q <= rho_sq:
                res.append((q, s))
    res.sort(key=lambda e: (e[0], e[1].motif_index, e[1].translation))
    return [s for _, s in res]


def box_extent(X: PeriodicSet, rho_sq: Fraction) -> int:
    """Translation box half-width that provably covers a ball of squared radius rho_sq."""
    lam = min(q for q, _ in _fincke_pohst(X.gram, [Fraction(0)] * X.d,
                                          max(X.gram.entries[i][i] for i in range(X.d)))
              if q > 0)
    # coordinate bound |x_i| <= sqrt(rho_sq * Ginv_ii); use a crude safe integer cover
    ginv = linalg.inverse(X.gram.entries)
    worst = max(ginv[i][i] for i in range(X.d))
    rho_over = math.isqrt(math.ceil(rho_sq * worst)) + 1
    lam_term = math.isqrt(math.ceil(rho_sq / lam)) + 1
    return max(rho_over, lam_term) + 1


def iter_sites(X: PeriodicSet, translations: Iterable[Sequence[int]]):
    for t in translations:
        for j in range(len(X.motif)):
            yield Site(j, tuple(t))

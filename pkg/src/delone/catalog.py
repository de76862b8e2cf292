"""Generators for the standard test corpus and a table of named entries.

Each named entry records facts known independently of the pipeline, with a
short note on where the value comes from.  The test suite re-derives every
one of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from .core import GramMatrix, PeriodicSet, RationalLike, as_fraction
from . import setfile

HEXAGONAL_GRAM = ((Fraction(1), Fraction(1, 2)), (Fraction(1, 2), Fraction(1)))
OBLIQUE_GRAM = ((Fraction(1), Fraction(1, 5)), (Fraction(1, 5), Fraction(3, 2)))


class UnknownEntryError(KeyError):
    pass


def _frac_part(v):
    return tuple(x - math.floor(x) for x in v)


def integer_lattice(d: int) -> PeriodicSet:
    if d < 1:
        raise ValueError("d must be positive")
    return PeriodicSet(GramMatrix.identity(d), ((Fraction(0),) * d,), name=f"integer_lattice({d})")


def d_plus(d: int) -> PeriodicSet:
    """Z^d together with its translate by (1/2, ..., 1/2)."""
    if d < 1:
        raise ValueError("d must be positive")
    half = (Fraction(1, 2),) * d
    return PeriodicSet(GramMatrix.identity(d), ((Fraction(0),) * d, half), name=f"d_plus({d})")


def hexagonal() -> PeriodicSet:
    return PeriodicSet(GramMatrix(HEXAGONAL_GRAM), ((Fraction(0), Fraction(0)),), name="hexagonal")


def two_orbit_shift(d: int = 2, shift: Sequence[RationalLike] | None = None) -> PeriodicSet:
    """Z^d together with Z^d + shift."""
    if d < 1:
        raise ValueError("d must be positive")
    if shift is None:
        shift = (Fraction(1, 3),) + (Fraction(0),) * (d - 1)
    shift = tuple(as_fraction(x) for x in shift)
    if len(shift) != d:
        raise ValueError(f"shift must have {d} coordinates")
    s = _frac_part(shift)
    if not any(s):
        raise ValueError("shift must not be an integer vector")
    return PeriodicSet(GramMatrix.identity(d), ((Fraction(0),) * d, s),
                       name=f"two_orbit_shift({d})")


def collinear_triple() -> PeriodicSet:
    """Z^2 plus the points (1/4, 0) and (1/2, 0).

    The points 0 and 1/2 have mirror-image neighbourhoods along the first
    axis while 1/4 sits in the middle, so the set has two orbits.
    """
    motif = ((Fraction(0), Fraction(0)), (Fraction(1, 4), Fraction(0)), (Fraction(1, 2), Fraction(0)))
    return PeriodicSet(GramMatrix.identity(2), motif, name="collinear_triple")


def layered(d: int = 3, ratio: RationalLike = 2) -> PeriodicSet:
    """Z^d with the last axis stretched by ``ratio``."""
    ratio = as_fraction(ratio)
    if d < 1 or ratio <= 0:
        raise ValueError("need d >= 1 and ratio > 0")
    rows = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    rows[-1][-1] = ratio * ratio
    return PeriodicSet(GramMatrix(tuple(map(tuple, rows))), ((Fraction(0),) * d,),
                       name=f"layered({d},{ratio})")


# point parts of the wallpaper groups, each in a basis where it is integral
_ROT90 = ((0, -1), (1, 0))
_MIRROR = ((1, 0), (0, -1))
_ROT60 = ((0, -1), (1, 1))  # rotation by 60 degrees in the hexagonal basis


def _mul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def _generate(gens):
    ident = ((1, 0), (0, 1))
    group, frontier = {ident}, [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                k = _mul(g, h)
                if k not in group:
                    group.add(k)
                    nxt.append(k)
        frontier = nxt
    return sorted(group)


WALLPAPER_GROUPS: dict[str, tuple[tuple, tuple]] = {
    "p1": (OBLIQUE_GRAM, ()),
    "p2": (OBLIQUE_GRAM, (((-1, 0), (0, -1)),)),
    "p4": (((1, 0), (0, 1)), (_ROT90,)),
    "p4m": (((1, 0), (0, 1)), (_ROT90, _MIRROR)),
    "p6": (HEXAGONAL_GRAM, (_ROT60,)),
}


def wallpaper_orbit(group: str = "p1", seed: Sequence[RationalLike] = ("1/7", "2/9")) -> PeriodicSet:
    """Orbit of a rational seed point under a symmorphic wallpaper group."""
    if group not in WALLPAPER_GROUPS:
        raise ValueError(f"unknown wallpaper group {group!r}; choose from {sorted(WALLPAPER_GROUPS)}")
    gram, gens = WALLPAPER_GROUPS[group]
    seed = tuple(as_fraction(x) for x in seed)
    if len(seed) != 2:
        raise ValueError("seed must be a 2D point")
    motif = sorted({
        _frac_part(tuple(U[i][0] * seed[0] + U[i][1] * seed[1] for i in range(2)))
        for U in _generate(gens)
    })
    return PeriodicSet(GramMatrix(gram), tuple(motif), name=f"wallpaper_orbit({group})")


def from_file(path) -> PeriodicSet:
    return setfile.load(path)[0]


GENERATORS: dict[str, Callable[..., PeriodicSet]] = {
    "integer_lattice": integer_lattice,
    "d_plus": d_plus,
    "hexagonal": hexagonal,
    "wallpaper_orbit": wallpaper_orbit,
    "two_orbit_shift": two_orbit_shift,
    "collinear_triple": collinear_triple,
    "layered": layered,
    "from_file": from_file,
}


@dataclass(frozen=True)
class Fact:
    value: Any
    source: str  # "analytic", "literature", "oracle" or "brute force"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    generator: str
    params: dict = field(default_factory=dict)
    expected_facts: dict = field(default_factory=dict)
    declared_R_sq: Fraction | None = None  # supplied when exact R is unavailable (d > 4)

    def build(self) -> PeriodicSet:
        X = GENERATORS[self.generator](**self.params)
        return PeriodicSet(X.gram, X.motif, name=self.name)


F = Fraction
_A, _L, _O, _B = "analytic", "literature", "oracle", "brute force"


def _entries() -> list[CatalogEntry]:
    out = []
    cube_orders = {1: 2, 2: 8, 3: 48, 4: 384, 5: 3840}
    for d in range(1, 6):
        facts = {
            "two_r_sq": Fact(F(1), _A),
            "R_sq": Fact(F(d, 4), _A),
            "regular": Fact(True, _A),
            "order_2R": Fact(cube_orders[d], _L),
            "bonded_2r": Fact(True, _A),
        }
        out.append(CatalogEntry(f"z{d}", "integer_lattice", {"d": d}, facts,
                                F(d, 4) if d > 4 else None))
    out.append(CatalogEntry("hexagonal", "hexagonal", {}, {
        "two_r_sq": Fact(F(1), _A), "R_sq": Fact(F(1, 3), _A), "regular": Fact(True, _A),
        "order_2R": Fact(12, _L), "bonded_2r": Fact(True, _A),
    }))
    out.append(CatalogEntry("d3_plus", "d_plus", {"d": 3}, {
        "two_r_sq": Fact(F(3, 4), _A), "R_sq": Fact(F(5, 16), _A), "regular": Fact(True, _A),
        "order_2R": Fact(48, _B), "bonded_2r": Fact(True, _L),
    }))
    out.append(CatalogEntry("d4_plus", "d_plus", {"d": 4}, {
        "two_r_sq": Fact(F(1), _A), "R_sq": Fact(F(1, 2), _A), "regular": Fact(True, _A),
        "order_2R": Fact(1152, _L), "bonded_2r": Fact(True, _L),
    }))
    out.append(CatalogEntry("d5_plus", "d_plus", {"d": 5}, {
        "two_r_sq": Fact(F(1), _A), "R_sq": Fact(F(9, 16), _A), "regular": Fact(True, _A),
        "bonded_2r": Fact(False, _L), "closure_rank_2r": Fact(5, _A),
    }, F(9, 16)))
    out.append(CatalogEntry("two_orbit_shift_2", "two_orbit_shift", {"d": 2}, {
        "two_r_sq": Fact(F(1, 9), _A), "R_sq": Fact(F(13, 36), _B),
        "regular": Fact(True, _O),
    }))
    out.append(CatalogEntry("collinear_triple", "collinear_triple", {}, {
        "two_r_sq": Fact(F(1, 16), _A), "regular": Fact(False, _O),
    }))
    out.append(CatalogEntry("layered_3", "layered", {"d": 3, "ratio": 2}, {
        "two_r_sq": Fact(F(1), _A), "R_sq": Fact(F(3, 2), _A), "regular": Fact(True, _A),
        "closure_rank_2r": Fact(2, _A), "order_2R": Fact(16, _A),
    }))
    for g, size in (("p1", 1), ("p2", 2), ("p4", 4), ("p4m", 8), ("p6", 6)):
        out.append(CatalogEntry(f"{g}_orbit", "wallpaper_orbit", {"group": g}, {
            "motif_size": Fact(size, _A), "regular": Fact(True, _A),
        }))
    return out


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in _entries()}


def entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownEntryError(f"unknown catalog entry {name!r}") from None


def make(name: str, **params) -> PeriodicSet:
    """Build a set by generator name (with parameters) or by catalog entry name."""
    if name in GENERATORS:
        return GENERATORS[name](**params)
    if name in CATALOG:
        if params:
            raise ValueError(f"catalog entry {name!r} takes no parameters")
        return CATALOG[name].build()
    raise UnknownEntryError(f"unknown set {name!r}")


def names() -> list[str]:
    return sorted(CATALOG)

import itertools

import mpmath
import pytest
from hypothesis import given, strategies as st

from delone import catalog
from delone.core import (
    GramMatrix,
    InvalidSetError,
    MetricParameters,
    PeriodicSet,
    Radius,
    Site,
    as_fraction,
    box_extent,
    enumerate_in_ball,
    exact_sqrt,
    gram_automorphisms,
    shortest_nonzero_sq_dist,
    sq_dist,
    translation_box_scan,
)

from conftest import SMALL, F

ORIGIN2 = Site(0, (0, 0))


# -- scalars and radii ---------------------------------------------------------

def test_fractions_are_reduced():
    q = as_fraction("6/8")
    assert (q.numerator, q.denominator) == (3, 4)
    assert as_fraction("-3/6") == F(-1, 2)


def test_floats_rejected():
    with pytest.raises(TypeError):
        as_fraction(0.5)


def test_exact_sqrt():
    assert exact_sqrt(F(9, 16)) == F(3, 4)
    assert exact_sqrt(F(2)) is None
    assert exact_sqrt(F(-1)) is None


def test_radius_canonical_form():
    # sqrt(2) + sqrt(8) = sqrt(18)
    assert Radius(2, 8) == Radius(18)
    assert Radius(1, 4) == Radius(9)
    assert Radius(3, 5) == Radius(5, 3)
    assert not Radius(2, 1).is_rational_sq
    with pytest.raises(ValueError):
        Radius(-1)


def _mp(r: Radius):
    with mpmath.workdps(60):
        return mpmath.sqrt(mpmath.mpf(r.a.numerator) / r.a.denominator) + \
            mpmath.sqrt(mpmath.mpf(r.b.numerator) / r.b.denominator)


rationals = st.fractions(min_value=0, max_value=40, max_denominator=12)


@given(rationals, rationals, rationals, rationals)
def test_radius_compare_matches_high_precision(a, b, c, d):
    r, s = Radius(a, b), Radius(c, d)
    with mpmath.workdps(60):
        diff = _mp(r) - _mp(s)
    expected = 0 if abs(diff) < mpmath.mpf(10) ** -40 else (1 if diff > 0 else -1)
    assert r.compare(s) == expected
    assert s.compare(r) == -expected


@given(rationals, rationals, st.fractions(min_value=0, max_value=200, max_denominator=12))
def test_contains_sq_matches_high_precision(a, b, q):
    r = Radius(a, b)
    with mpmath.workdps(60):
        gap = _mp(r) - mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)
    if abs(gap) > mpmath.mpf(10) ** -40:
        assert r.contains_sq(q) == (gap > 0)
    else:
        assert r.contains_sq(q)
    assert r.contains_sq(F(0))


@given(rationals, rationals)
def test_upper_sq_is_an_upper_bound(a, b):
    r = Radius(a, b)
    up = r.upper_sq()
    # exact for rational squares, strictly above otherwise
    assert r.contains_sq(up) == r.is_rational_sq
    with mpmath.workdps(60):
        assert mpmath.mpf(up.numerator) / up.denominator >= _mp(r) ** 2 - mpmath.mpf(10) ** -40


# -- Gram matrices and sets ------------------------------------------------------

def test_gram_validation():
    with pytest.raises(InvalidSetError):
        GramMatrix(((F(1), F(1, 2)), (F(0), F(1))))  # not symmetric
    with pytest.raises(InvalidSetError):
        GramMatrix(((F(1), F(1)), (F(1), F(1))))  # singular
    with pytest.raises(InvalidSetError):
        GramMatrix(((F(-1),),))
    g = GramMatrix((("1", "1/2"), ("1/2", "1")))
    assert g.entries[0][1] == F(1, 2)


def test_positive_definiteness_by_minors():
    # leading minors 1, -3: indefinite although the diagonal is positive
    with pytest.raises(InvalidSetError):
        GramMatrix(((F(1), F(2)), (F(2), F(1))))


def test_periodic_set_validation():
    g = GramMatrix.identity(2)
    with pytest.raises(InvalidSetError):
        PeriodicSet(g, ())
    with pytest.raises(InvalidSetError):
        PeriodicSet(g, ((F(1), F(0)),))  # coordinate outside [0, 1)
    with pytest.raises(InvalidSetError):
        PeriodicSet(g, ((F(0), F(0)), (F(0), F(0))))
    with pytest.raises(InvalidSetError):
        PeriodicSet(g, ((F(0),),))


def test_metric_parameters_invariants():
    with pytest.raises(ValueError):
        MetricParameters(F(0), F(1))
    with pytest.raises(ValueError):
        MetricParameters(F(4), F(1, 2))  # R < r
    P = MetricParameters(F(1), F(1, 2))
    assert P.r_sq == F(1, 4)
    assert P.two_R == Radius(2)
    assert P.multiple_of_R(10) == Radius(50)


# -- distances ---------------------------------------------------------------------

def test_sq_dist_examples(hexagonal, d5_plus):
    z2 = catalog.make("z2")
    assert sq_dist(z2, ORIGIN2, Site(0, (1, 0))) == 1
    assert sq_dist(hexagonal, ORIGIN2, Site(0, (1, -1))) == 1
    assert sq_dist(d5_plus, Site(0, (0,) * 5), Site(1, (0,) * 5)) == F(5, 4)


def test_sq_dist_rejects_bad_sites(z2):
    with pytest.raises(IndexError):
        sq_dist(z2, ORIGIN2, Site(1, (0, 0)))
    with pytest.raises(IndexError):
        sq_dist(z2, ORIGIN2, Site(0, (0,)))


@pytest.mark.parametrize("name", SMALL)
def test_sq_dist_symmetric_and_translation_invariant(name):
    X = catalog.make(name)
    d = X.d
    sites = [Site(i, t) for i in range(len(X.motif))
             for t in itertools.product(range(-1, 2), repeat=d)][:40]
    shift = tuple(range(1, d + 1))
    for a in sites[:8]:
        for b in sites:
            q = sq_dist(X, a, b)
            assert q == sq_dist(X, b, a)
            assert (q == 0) == (a == b)
            a2 = Site(a.motif_index, tuple(x + y for x, y in zip(a.translation, shift)))
            b2 = Site(b.motif_index, tuple(x + y for x, y in zip(b.translation, shift)))
            assert sq_dist(X, a2, b2) == q


# -- enumeration --------------------------------------------------------------------

def test_enumeration_examples(z2, hexagonal):
    assert len(enumerate_in_ball(z2, ORIGIN2, 1)) == 5
    assert len(enumerate_in_ball(z2, ORIGIN2, 2)) == 9
    assert len(enumerate_in_ball(hexagonal, ORIGIN2, 1)) == 7
    assert enumerate_in_ball(z2, ORIGIN2, 0) == [ORIGIN2]


def test_enumeration_order_is_deterministic(z2):
    sites = enumerate_in_ball(z2, ORIGIN2, 2)
    assert sites[0] == ORIGIN2
    assert sites[1:5] == [Site(0, (-1, 0)), Site(0, (0, -1)), Site(0, (0, 1)), Site(0, (1, 0))]
    keys = [(sq_dist(z2, ORIGIN2, s), s.motif_index, s.translation) for s in sites]
    assert keys == sorted(keys)


def test_enumeration_rejects_negative_radius(z2):
    with pytest.raises(ValueError):
        enumerate_in_ball(z2, ORIGIN2, -1)


def test_irrational_radius_enumeration(z2):
    # sqrt(1) + sqrt(2) ~ 2.414: norms 4 and 5 are inside, 8 is not
    sites = enumerate_in_ball(z2, ORIGIN2, Radius(1, 2))
    norms = {sq_dist(z2, ORIGIN2, s) for s in sites}
    assert norms == {0, 1, 2, 4, 5}


@pytest.mark.parametrize("name", SMALL)
def test_enumeration_matches_box_scan_up_to_25(name):
    X = catalog.make(name)
    for i in range(len(X.motif)):
        c = Site(i, (0,) * X.d)
        rho_sq = F(25)
        assert enumerate_in_ball(X, c, rho_sq) == translation_box_scan(X, c, rho_sq, box_extent(X, rho_sq))


def random_sets():
    """Random small periodic sets in dimensions 1 to 3."""
    @st.composite
    def build(draw):
        d = draw(st.integers(1, 3))
        den = draw(st.integers(1, 6))
        # diagonally dominant integer-ish matrices are positive definite
        diag = [draw(st.integers(2, 6)) for _ in range(d)]
        g = [[F(0)] * d for _ in range(d)]
        for i in range(d):
            g[i][i] = F(diag[i])
            for j in range(i):
                v = F(draw(st.integers(-2, 2)), 2)
                g[i][j] = g[j][i] = v
        n = draw(st.integers(1, 3))
        pts = draw(st.lists(st.tuples(*[st.integers(0, den - 1)] * d), min_size=n, max_size=n,
                            unique=True))
        motif = tuple(tuple(F(x, den) for x in p) for p in pts)
        X = PeriodicSet(GramMatrix(tuple(map(tuple, g))), motif)
        rho_sq = F(draw(st.integers(0, 40)), draw(st.integers(1, 4)))
        i = draw(st.integers(0, n - 1))
        shift = tuple(draw(st.integers(-2, 2)) for _ in range(d))
        return X, Site(i, shift), rho_sq
    return build()


@given(random_sets())
def test_enumeration_matches_box_scan_on_random_sets(case):
    X, c, rho_sq = case
    assert enumerate_in_ball(X, c, rho_sq) == translation_box_scan(X, c, rho_sq, box_extent(X, rho_sq))


@given(random_sets(), st.fractions(min_value=0, max_value=10, max_denominator=4))
def test_enumeration_monotone(case, extra):
    X, c, rho_sq = case
    small = set(enumerate_in_ball(X, c, rho_sq))
    assert small <= set(enumerate_in_ball(X, c, rho_sq + extra))
    assert c in small


# -- shortest distance ------------------------------------------------------------------

def test_shortest_nonzero_examples(d5_plus, d3_plus):
    for d in range(1, 6):
        assert shortest_nonzero_sq_dist(catalog.make(f"z{d}")) == 1
    assert shortest_nonzero_sq_dist(d5_plus) == 1
    assert shortest_nonzero_sq_dist(d3_plus) == F(3, 4)


@pytest.mark.parametrize("name", SMALL)
def test_shortest_nonzero_against_box(name):
    X = catalog.make(name)
    best = None
    for i in range(len(X.motif)):
        for s in translation_box_scan(X, Site(i, (0,) * X.d), F(9), 3):
            q = sq_dist(X, Site(i, (0,) * X.d), s)
            if q > 0 and (best is None or q < best):
                best = q
    assert shortest_nonzero_sq_dist(X) == best


# -- lattice automorphisms ----------------------------------------------------------------

def brute_force_automorphisms(gram, bound=2):
    """All integer matrices with entries in [-bound, bound] preserving the Gram matrix."""
    d = len(gram)
    out = []
    for flat in itertools.product(range(-bound, bound + 1), repeat=d * d):
        U = [flat[i * d:(i + 1) * d] for i in range(d)]
        ok = all(sum(U[k][i] * gram[k][l] * U[l][j] for k in range(d) for l in range(d)) == gram[i][j]
                 for i in range(d) for j in range(d))
        if ok:
            out.append(tuple(map(tuple, U)))
    return sorted(out)


@pytest.mark.parametrize("gram,order", [
    (((1, 0), (0, 1)), 8),
    ((("1", "1/2"), ("1/2", "1")), 12),
    (((1, 0), (0, 2)), 4),
    ((("1", "1/5"), ("1/5", "3/2")), 2),
])
def test_gram_automorphisms_2d_against_brute_force(gram, order):
    G = GramMatrix(gram)
    grp = gram_automorphisms(G)
    assert grp.order == order
    assert sorted(grp.elements) == brute_force_automorphisms(G.entries)


def test_gram_automorphisms_z3_and_z4():
    assert gram_automorphisms(GramMatrix.identity(3)).order == 48
    assert gram_automorphisms(GramMatrix.identity(4)).order == 384


def _mul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


@pytest.mark.parametrize("gram", [GramMatrix.identity(3), GramMatrix((("1", "1/2"), ("1/2", "1"))),
                                  GramMatrix((("2", "1", "0"), ("1", "2", "1"), ("0", "1", "2")))])
def test_gram_automorphisms_form_a_group(gram):
    grp = gram_automorphisms(gram)
    elements = set(grp.elements)
    g = gram.entries
    d = gram.d
    for U in grp.elements:
        for i in range(d):
            for j in range(d):
                assert sum(U[k][i] * g[k][l] * U[l][j] for k in range(d) for l in range(d)) == g[i][j]
    for a in grp.generators:
        for b in grp.generators:
            assert _mul(a, b) in elements
    neg = tuple(tuple(-int(i == j) for j in range(d)) for i in range(d))
    assert neg in elements
    # inverse of each generator is in the group
    ident = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    for a in grp.generators:
        assert any(_mul(a, b) == ident for b in elements)

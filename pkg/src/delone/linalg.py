"""Small exact linear-algebra kernels over ``Fraction`` and ``int``.

Matrices are plain lists of rows.  Everything here is fraction-exact; the
dimensions involved are tiny (d <= 6), so no attempt is made at speed beyond
avoiding needless copies.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_form

Vector = Sequence[Fraction]


def to_fraction_matrix(rows) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in rows]


def det(rows) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = to_fraction_matrix(rows)
    n = len(a)
    sign = 1
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            sign = -sign
        p = a[col][col]
        result *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                row_r, row_c = a[r], a[col]
                for c in range(col, n):
                    row_r[c] -= f * row_c[c]
    return sign * result


def rank(rows) -> int:
    """Rank of a (possibly non-square) rational matrix."""
    a = to_fraction_matrix(rows)
    if not a:
        return 0
    m, n = len(a), len(a[0])
    r = 0
    for col in range(n):
        pivot = next((i for i in range(r, m) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][col]
        for i in range(r + 1, m):
            f = a[i][col] / p
            if f:
                for c in range(col, n):
                    a[i][c] -= f * a[r][c]
        r += 1
        if r == m:
            break
    return r


def solve(rows, rhs) -> list[Fraction]:
    """Solve the square system ``rows @ x = rhs``; raises on singular input."""
    n = len(rows)
    a = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular system")
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col] / p
                for c in range(col, n + 1):
                    a[r][c] -= f * a[col][c]
    return [a[i][n] / a[i][i] for i in range(n)]


def inverse(rows) -> list[list[Fraction]]:
    n = len(rows)
    cols = [solve(rows, [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def mat_vec(rows, v) -> list:
    return [sum(a * b for a, b in zip(row, v)) for row in rows]


def mat_mul(a, b) -> list[list]:
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def transpose(a) -> list[list]:
    return [list(col) for col in zip(*a)]


def quad(g, v) -> Fraction:
    """``v^T g v``."""
    n = len(v)
    total = 0
    for i in range(n):
        vi = v[i]
        if vi:
            row = g[i]
            total += vi * sum(row[j] * v[j] for j in range(n))
    return total


def ldl(g) -> tuple[list[Fraction], list[list[Fraction]]]:
    """Completion of squares: q(x) = sum_i D[i] (x_i + sum_{j>i} M[i][j] x_j)^2."""
    n = len(g)
    a = to_fraction_matrix(g)
    diag = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        d = a[i][i]
        if d <= 0:
            raise ValueError("matrix is not positive definite")
        diag[i] = d
        for j in range(i + 1, n):
            mu[i][j] = a[i][j] / d
        for j in range(i + 1, n):
            for k in range(i + 1, n):
                a[j][k] -= a[i][j] * a[i][k] / d
    return diag, mu


def lcm(*values: int) -> int:
    out = 1
    for v in values:
        out = out * v // gcd(out, v)
    return out


def common_denominator(values) -> int:
    return lcm(*(Fraction(v).denominator for v in values))


def hnf_columns(vectors: Sequence[Sequence[int]], dim: int) -> list[tuple[int, ...]]:
    """Hermite normal form basis of the Z-span of integer ``vectors``.

    Returns the nonzero basis vectors (as tuples) of the column HNF.
    """
    vecs = [list(map(int, v)) for v in vectors if any(v)]
    if not vecs:
        return []
    h = hermite_normal_form(Matrix(dim, len(vecs), lambda i, j: vecs[j][i]))
    basis = []
    for j in range(h.shape[1]):
        col = tuple(int(h[i, j]) for i in range(dim))
        if any(col):
            basis.append(col)
    return basis


def invariant_factors(vectors: Sequence[Sequence[int]], dim: int) -> list[int]:
    """Nonzero Smith invariants of the integer matrix with the given columns."""
    vecs = [list(map(int, v)) for v in vectors if any(v)]
    if not vecs:
        return []
    s = smith_normal_form(Matrix(dim, len(vecs), lambda i, j: vecs[j][i]))
    return [abs(int(s[i, i])) for i in range(min(s.shape)) if s[i, i] != 0]


def solve_in_span(basis: Sequence[Sequence], v: Sequence) -> list[Fraction] | None:
    """Coefficients c with sum_k c_k basis[k] = v, or None if v is outside the span.

    ``basis`` must be linearly independent.
    """
    m = len(basis)
    n = len(v)
    # augmented n x (m+1) system, columns are basis vectors
    a = [[Fraction(basis[k][i]) for k in range(m)] + [Fraction(v[i])] for i in range(n)]
    r = 0
    for col in range(m):
        pivot = next((i for i in range(r, n) if a[i][col] != 0), None)
        if pivot is None:
            raise ValueError("basis vectors are linearly dependent")
        a[r], a[pivot] = a[pivot], a[r]
        p = a[r][col]
        for i in range(n):
            if i != r and a[i][col]:
                f = a[i][col] / p
                for c in range(col, m + 1):
                    a[i][c] -= f * a[r][c]
        r += 1
    if any(a[i][m] != 0 for i in range(r, n)):
        return None
    return [a[k][m] / a[k][k] for k in range(m)]

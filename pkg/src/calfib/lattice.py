"""Exact integer and rational linear algebra.

Everything here works on plain Python ``int`` / ``Fraction`` lists so results
are exact. Matrices are lists of rows.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

IntMatrix = list[list[int]]


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def as_int_matrix(a: Sequence[Sequence[int]]) -> IntMatrix:
    rows = [[int(x) for x in row] for row in a]
    for row, orig in zip(rows, a):
        if any(x != y for x, y in zip(row, orig)):
            raise ValueError("matrix entries must be integers")
    return rows


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def matvec(a, v):
    return [sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a))]


def transpose(a):
    return [list(col) for col in zip(*a)]


def det(a) -> Fraction:
    """Determinant by fraction-valued Gaussian elimination."""
    n = len(a)
    m = [[Fraction(x) for x in row] for row in a]
    sign = 1
    out = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        out *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return sign * out


def inverse(a) -> list[list[Fraction]]:
    """Exact inverse over the rationals (Gauss-Jordan)."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        m[c], m[piv] = m[piv], m[c]
        p = m[c][c]
        m[c] = [x / p for x in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [row[n:] for row in m]


def unimodular_inverse(a) -> IntMatrix:
    """Inverse of an integer matrix with determinant +-1, as integers."""
    d = det(a)
    if abs(d) != 1:
        raise ValueError(f"matrix is not unimodular (det = {d})")
    return [[int(x) for x in row] for row in inverse(a)]


def smith_normal_form(a: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(S, U, V)`` with ``S = U @ A @ V`` diagonal, ``U``, ``V`` unimodular.

    The diagonal entries are nonnegative and each divides the next.
    """
    s = as_int_matrix(a)
    m = len(s)
    n = len(s[0]) if m else 0
    u = identity(m)
    v = identity(n)

    def swap_rows(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in s:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        s[dst] = [x + f * y for x, y in zip(s[dst], s[src])]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, f):
        for row in s:
            row[dst] += f * row[src]
        for row in v:
            row[dst] += f * row[src]

    for t in range(min(m, n)):
        while True:
            nonzero = [(abs(s[i][j]), i, j) for i in range(t, m) for j in range(t, n) if s[i][j]]
            if not nonzero:
                return _finish(s, u, v)
            _, pi, pj = min(nonzero)
            swap_rows(t, pi)
            swap_cols(t, pj)
            done = True
            for i in range(t + 1, m):
                q = s[i][t] // s[t][t]
                if q:
                    add_row(i, t, -q)
                if s[i][t]:
                    done = False
            for j in range(t + 1, n):
                q = s[t][j] // s[t][t]
                if q:
                    add_col(j, t, -q)
                if s[t][j]:
                    done = False
            if not done:
                continue
            # divisibility: every remaining entry must be a multiple of the pivot
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if s[i][j] % s[t][t]), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]
    return _finish(s, u, v)


def _finish(s, u, v):
    for t in range(min(len(s), len(s[0]) if s else 0)):
        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]
    return s, u, v


def rank(a) -> int:
    s, _, _ = smith_normal_form(a)
    return sum(1 for i in range(min(len(s), len(s[0]))) if s[i][i])


def integer_kernel(a: Sequence[Sequence[int]]) -> IntMatrix:
    """Z-basis (as rows) of ``{x in Z^n : A x = 0}``."""
    s, _, v = smith_normal_form(a)
    n = len(v)
    r = sum(1 for i in range(min(len(s), n)) if s[i][i])
    return [[v[i][j] for i in range(n)] for j in range(r, n)]


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """Row-style Hermite normal form of the lattice spanned by ``rows``.

    Zero rows are dropped; pivots are positive and entries above a pivot are
    reduced into ``[0, pivot)``.
    """
    h = [list(r) for r in as_int_matrix(rows)]
    if not h:
        return []
    n = len(h[0])
    out_row = 0
    for c in range(n):
        while True:
            cand = [i for i in range(out_row, len(h)) if h[i][c]]
            if not cand:
                break
            p = min(cand, key=lambda i: abs(h[i][c]))
            h[out_row], h[p] = h[p], h[out_row]
            reduced = True
            for i in range(out_row + 1, len(h)):
                if h[i][c]:
                    q = h[i][c] // h[out_row][c]
                    h[i] = [x - q * y for x, y in zip(h[i], h[out_row])]
                    if h[i][c]:
                        reduced = False
            if reduced:
                break
        if out_row < len(h) and h[out_row][c]:
            if h[out_row][c] < 0:
                h[out_row] = [-x for x in h[out_row]]
            for i in range(out_row):
                q = h[i][c] // h[out_row][c]
                if q:
                    h[i] = [x - q * y for x, y in zip(h[i], h[out_row])]
            out_row += 1
    return [r for r in h[:out_row] if any(r)]


def frac_mod1(x) -> Fraction:
    x = Fraction(x)
    return x - (x.numerator // x.denominator)

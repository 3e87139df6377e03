"""Finite affine group actions on flat tori ``R^n / Z^n``.

Maps are ``x -> D x + b`` with integer ``D`` (det +-1) and rational ``b``.
All arithmetic is exact: points are tuples of ``Fraction`` reduced into
``[0, 1)``. Fixed loci come from the Smith normal form of ``I - D``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import lattice as la

Point = tuple[Fraction, ...]


def _reduce(v) -> Point:
    return tuple(la.frac_mod1(x) for x in v)


@dataclass(frozen=True)
class AffineTorusMap:
    linear: tuple[tuple[int, ...], ...]
    translation: Point
    name: str = ""

    def __post_init__(self):
        D = tuple(tuple(int(x) for x in row) for row in self.linear)
        n = len(D)
        if any(len(row) != n for row in D):
            raise ValueError("linear part must be square")
        if len(self.translation) != n:
            raise ValueError(f"translation has length {len(self.translation)}, expected {n}")
        if abs(la.det(D)) != 1:
            raise ValueError("linear part must have determinant +-1")
        object.__setattr__(self, "linear", D)
        object.__setattr__(self, "translation", _reduce(Fraction(x) for x in self.translation))

    @classmethod
    def identity(cls, n: int) -> "AffineTorusMap":
        return cls(tuple(map(tuple, la.identity(n))), (0,) * n, "id")

    @classmethod
    def signed_permutation(cls, images: Sequence[tuple[int, int]], translation=None,
                           name: str = "") -> "AffineTorusMap":
        """``images[i] = (sign, j)`` means output coordinate ``i`` is ``sign * x_j``."""
        n = len(images)
        D = [[0] * n for _ in range(n)]
        for i, (s, j) in enumerate(images):
            D[i][j] = s
        return cls(tuple(map(tuple, D)), translation if translation is not None else (0,) * n, name)

    @property
    def dim(self) -> int:
        return len(self.linear)

    def __call__(self, x) -> tuple:
        if all(isinstance(c, (int, Fraction)) for c in x):
            return _reduce(Fraction(v) + self.translation[i] for i, v in enumerate(la.matvec(self.linear, list(x))))
        y = np.asarray(self.linear, dtype=float) @ np.asarray(x, dtype=float)
        return tuple(np.mod(y + np.array([float(b) for b in self.translation]), 1.0))

    def compose(self, g: "AffineTorusMap") -> "AffineTorusMap":
        """``self o g``."""
        if g.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {g.dim}")
        D = la.matmul(self.linear, g.linear)
        b = [x + y for x, y in zip(la.matvec(self.linear, list(g.translation)), self.translation)]
        name = f"{self.name}*{g.name}" if self.name and g.name else ""
        return AffineTorusMap(tuple(map(tuple, D)), tuple(b), name)

    def __matmul__(self, g):
        return self.compose(g)

    def inverse(self) -> "AffineTorusMap":
        Dinv = la.unimodular_inverse(self.linear)
        b = [-x for x in la.matvec(Dinv, list(self.translation))]
        return AffineTorusMap(tuple(map(tuple, Dinv)), tuple(b), f"{self.name}^-1" if self.name else "")

    def is_identity(self) -> bool:
        return self.same_as(AffineTorusMap.identity(self.dim))

    def same_as(self, other: "AffineTorusMap") -> bool:
        return self.linear == other.linear and self.translation == other.translation

    def key(self):
        return (self.linear, self.translation)


@dataclass(frozen=True)
class AffineSubtorus:
    base_point: Point
    directions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "base_point", _reduce(Fraction(x) for x in self.base_point))
        dirs = tuple(tuple(int(x) for x in d) for d in self.directions)
        if dirs and la.rank(dirs) != len(dirs):
            raise ValueError("direction vectors must be linearly independent")
        object.__setattr__(self, "directions", dirs)

    @property
    def dim(self) -> int:
        return len(self.directions)

    @property
    def ambient_dim(self) -> int:
        return len(self.base_point)

    def contains(self, x) -> bool:
        return _in_span_mod_lattice([Fraction(a) - b for a, b in zip(x, self.base_point)], self.directions)

    def sample(self, params) -> Point:
        """Point ``base + sum params[j] * directions[j]`` reduced mod 1."""
        out = list(self.base_point)
        for t, d in zip(params, self.directions):
            out = [o + Fraction(t) * di for o, di in zip(out, d)]
        return _reduce(out)


@functools.lru_cache(maxsize=256)
def _span_snf(directions, n):
    """SNF data of the ``n x d`` direction matrix (columns = directions)."""
    if not directions:
        return [], la.identity(n), [], 0
    M = la.transpose([list(d) for d in directions])
    S, U, V = la.smith_normal_form(M)
    r = sum(1 for i in range(min(len(S), len(S[0]))) if S[i][i])
    return S, U, V, r


def _in_span_mod_lattice(v, directions) -> bool:
    """Is ``v`` in ``span_R(directions) + Z^n``?"""
    n = len(v)
    _, U, _, r = _span_snf(directions, n)
    c = la.matvec(U, v)
    return all(Fraction(x).denominator == 1 for x in c[r:])


def fixed_locus(f: AffineTorusMap) -> list[AffineSubtorus]:
    """Connected components of ``{x : f(x) = x}``, sorted by base point."""
    n = f.dim
    A = [[int(i == j) - f.linear[i][j] for j in range(n)] for i in range(n)]
    S, U, V = la.smith_normal_form(A)
    c = la.matvec(U, list(f.translation))
    diag = [S[i][i] for i in range(n)]
    r = sum(1 for s in diag if s)
    if any(Fraction(ci).denominator != 1 for ci in c[r:]):
        return []
    choices = [[(Fraction(c[i]) + k) / diag[i] for k in range(diag[i])] for i in range(r)]
    directions = tuple(tuple(V[row][j] for row in range(n)) for j in range(r, n))
    out = []
    for ys in itertools.product(*choices):
        y = list(ys) + [Fraction(0)] * (n - r)
        out.append(AffineSubtorus(_reduce(la.matvec(V, y)), directions))
    return sorted(out, key=lambda s: s.base_point)


def is_free(f: AffineTorusMap) -> bool:
    return not fixed_locus(f)


def intersection_witness(s: AffineSubtorus, t: AffineSubtorus) -> Point | None:
    """A common point of two affine subtori, or ``None`` if they are disjoint."""
    n = s.ambient_dim
    dirs = tuple(s.directions) + tuple(t.directions)
    diff = [b - a for a, b in zip(s.base_point, t.base_point)]
    if not dirs:
        return s.base_point if all(x == 0 for x in diff) else None
    S, U, V, r = _span_snf(dirs, n)
    c = la.matvec(U, diff)
    if any(Fraction(x).denominator != 1 for x in c[r:]):
        return None
    tprime = [Fraction(c[i]) / S[i][i] for i in range(r)] + [Fraction(0)] * (len(dirs) - r)
    coeffs = la.matvec(V, tprime)
    witness = s.sample(coeffs[: s.dim])
    if not (s.contains(witness) and t.contains(witness)):
        raise AssertionError("intersection witness failed verification")
    return witness


@dataclass(frozen=True)
class DisjointnessReport:
    disjoint: bool
    witnesses: tuple  # (map index i, component, map index j, component, point)


def loci_pairwise_disjoint(maps: Sequence[AffineTorusMap]) -> DisjointnessReport:
    if len({m.dim for m in maps}) > 1:
        raise ValueError("all maps must act on the same torus")
    loci = [fixed_locus(m) for m in maps]
    found = []
    for i, j in itertools.combinations(range(len(maps)), 2):
        for a in loci[i]:
            for b in loci[j]:
                w = intersection_witness(a, b)
                if w is not None:
                    found.append((i, a, j, b, w))
    return DisjointnessReport(not found, tuple(found))


# -- groups ------------------------------------------------------------------

class NonFiniteGroupError(RuntimeError):
    pass


@dataclass(frozen=True)
class FiniteGroupAction:
    generators: tuple[AffineTorusMap, ...]
    elements: tuple[AffineTorusMap, ...]
    dim: int

    @property
    def order(self) -> int:
        return len(self.elements)

    def is_abelian(self) -> bool:
        return all(a.compose(b).same_as(b.compose(a)) for a, b in itertools.combinations(self.generators, 2))

    def generators_are_involutions(self) -> bool:
        return all(g.compose(g).is_identity() for g in self.generators)

    def non_identity(self) -> list[AffineTorusMap]:
        return [g for g in self.elements if not g.is_identity()]


def group_closure(generators: Sequence[AffineTorusMap], dim: int | None = None,
                  cap: int = 1024) -> FiniteGroupAction:
    gens = tuple(generators)
    if not gens and dim is None:
        dim = 0
    n = gens[0].dim if gens else dim
    if any(g.dim != n for g in gens):
        raise ValueError("generators act on tori of different dimension")
    ident = AffineTorusMap.identity(n)
    seen = {ident.key(): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                e = g.compose(h)
                if e.key() not in seen:
                    seen[e.key()] = e
                    nxt.append(e)
                    if len(seen) > cap:
                        raise NonFiniteGroupError(f"closure exceeds {cap} elements")
        frontier = nxt
    elems = sorted(seen.values(), key=lambda e: (not e.is_identity(), e.key()))
    return FiniteGroupAction(gens, tuple(elems), n)


def _torus_dist(a, b) -> float:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return float(np.max(np.minimum(d, 1.0 - d))) if len(d) else 0.0


def orbit(p, G: FiniteGroupAction, modulo: FiniteGroupAction | None = None,
          tol: float = 1e-9) -> list[tuple]:
    """Orbit of ``p`` under ``G``; points equal mod 1 (within ``tol``) merge.

    With ``modulo``, points in the same ``modulo``-orbit are identified, which
    models the orbit on the quotient torus.
    """
    exact = all(isinstance(c, (int, Fraction)) for c in p)
    pts = [g(p) for g in G.elements]
    reps: list[tuple] = []
    classes: list[list[tuple]] = []
    for q in pts:
        cls = [h(q) for h in modulo.elements] if modulo is not None else [q]
        if exact:
            hit = any(c in other for other in classes for c in cls)
        else:
            hit = any(_torus_dist(c, o) <= tol for other in classes for c in cls for o in other)
        if not hit:
            reps.append(q)
            classes.append(cls)
    return reps


# -- text format ------------------------------------------------------------
#
#   name: r11 r12 ...; r21 r22 ...; ... | b1 b2 ...
#
# Blank lines and lines starting with '#' are ignored. Other ``key:`` lines
# whose key is ``relation`` are kept verbatim for callers (see mirror.py).

def format_map(f: AffineTorusMap) -> str:
    rows = "; ".join(" ".join(str(x) for x in row) for row in f.linear)
    trans = " ".join(str(x) for x in f.translation)
    return f"{f.name or 'map'}: {rows} | {trans}"


def parse_map(line: str, lineno: int | None = None) -> AffineTorusMap:
    where = f"line {lineno}: " if lineno is not None else ""
    try:
        name, body = line.split(":", 1)
        mat, trans = body.split("|")
        rows = [[int(x) for x in r.split()] for r in mat.split(";")]
        b = [Fraction(x) for x in trans.split()]
        return AffineTorusMap(tuple(map(tuple, rows)), tuple(b), name.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{where}cannot parse map {line!r}: {exc}") from exc


def dumps(maps: Iterable[AffineTorusMap], relations: Iterable[str] = ()) -> str:
    lines = [format_map(m) for m in maps] + [f"relation: {r}" for r in relations]
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[list[AffineTorusMap], list[str]]:
    maps, relations = [], []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("relation:"):
            relations.append(line.split(":", 1)[1].strip())
        else:
            maps.append(parse_map(line, i))
    return maps, relations


# -- the concrete actions ----------------------------------------------------

H = Fraction(1, 2)


def _diag_map(signs, trans, name):
    return AffineTorusMap.signed_permutation([(s, i) for i, s in enumerate(signs)], trans, name)


def cy3_alpha(convention: str = "literal") -> AffineTorusMap:
    """``z1 -> -z1 + 1/2, z2 -> -z2 + 1/2, z3 -> z3`` on T^6 (x1,y1,x2,y2,x3,y3).

    ``convention="fixed-set"`` uses translation ``(1+i)/2`` in z1, z2, the
    translation for which the fixed set is the set ``A`` with real and
    imaginary parts in ``{1/4, 3/4}``.
    """
    if convention == "literal":
        b = (H, 0, H, 0, 0, 0)
    elif convention == "fixed-set":
        b = (H, H, H, H, 0, 0)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return _diag_map((-1, -1, -1, -1, 1, 1), b, "alpha")


def cy3_beta() -> AffineTorusMap:
    """``z1 -> -z1, z2 -> z2, z3 -> -z3``."""
    return _diag_map((-1, -1, 1, 1, -1, -1), (0,) * 6, "beta")


def g2_alpha() -> AffineTorusMap:
    return _diag_map((-1, -1, -1, -1, 1, 1, 1), (0,) * 7, "alpha")


def g2_beta() -> AffineTorusMap:
    return _diag_map((-1, -1, 1, 1, -1, -1, 1), (H, H, 0, 0, 0, 0, 0), "beta")


def g2_gamma() -> AffineTorusMap:
    return _diag_map((-1, 1, -1, 1, -1, 1, -1), (0, 0, H, 0, 0, 0, 0), "gamma")


def k3_alpha() -> AffineTorusMap:
    """``z -> -z + 1/2`` on T^4 = C^2 / Z[i]^2."""
    return _diag_map((-1, -1, -1, -1), (H, 0, H, 0), "alpha'")


def k3_gamma1() -> AffineTorusMap:
    return _diag_map((1, 1, 1, 1), (0, H, 0, 0), "gamma1")


def k3_gamma2() -> AffineTorusMap:
    return _diag_map((1, 1, 1, 1), (0, 0, 0, H), "gamma2")


def cy3_group(convention: str = "literal") -> FiniteGroupAction:
    return group_closure([cy3_alpha(convention), cy3_beta()])


def g2_group() -> FiniteGroupAction:
    return group_closure([g2_alpha(), g2_beta(), g2_gamma()])


def brute_force_fixed_points(f: AffineTorusMap, denominator: int) -> set[Point]:
    """All fixed points on the grid ``(1/denominator) Z^n / Z^n``.

    Works on integer numerators: ``x = k / d`` is fixed iff
    ``D k + d b - k`` is divisible by ``d``. Translations not on the grid
    fix no grid point.
    """
    d = denominator
    db = [x * d for x in f.translation]
    if any(x.denominator != 1 for x in db):
        return set()
    D = np.array(f.linear, dtype=np.int64)
    k = np.stack(np.meshgrid(*([np.arange(d)] * f.dim), indexing="ij"), axis=-1).reshape(-1, f.dim)
    resid = (k @ D.T + np.array([int(x) for x in db], dtype=np.int64) - k) % d
    hits = k[np.all(resid == 0, axis=1)]
    return {tuple(Fraction(int(v), d) for v in row) for row in hits}

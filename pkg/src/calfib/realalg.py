"""Real polynomials, the Viro perturbation and cubical level-set topology."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Callable, Mapping

import numpy as np
from scipy import ndimage

Exponent = tuple[int, ...]


def _coerce(c):
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    return float(c)


@dataclass(frozen=True)
class RealPolynomial:
    """Polynomial in ``nvars`` variables; exact when all coefficients are rational."""
    nvars: int
    terms: Mapping[Exponent, Real]

    def __post_init__(self):
        clean = {}
        for e, c in dict(self.terms).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars or any(k < 0 for k in e):
                raise ValueError(f"bad exponent {e} for {self.nvars} variables")
            c = _coerce(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c != 0})

    # construction
    @classmethod
    def constant(cls, nvars: int, c) -> "RealPolynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "RealPolynomial":
        return cls(nvars, {tuple(int(k == i) for k in range(nvars)): 1})

    @classmethod
    def variables(cls, nvars: int) -> tuple["RealPolynomial", ...]:
        return tuple(cls.variable(nvars, i) for i in range(nvars))

    # arithmetic
    def _lift(self, other) -> "RealPolynomial":
        if isinstance(other, RealPolynomial):
            if other.nvars != self.nvars:
                raise ValueError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        return RealPolynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return RealPolynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return RealPolynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return RealPolynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = RealPolynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, RealPolynomial) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def used_variables(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.nvars) if any(e[i] for e in self.terms))

    def __call__(self, *x):
        """Evaluate at scalars or broadcastable arrays, one argument per variable."""
        if len(x) != self.nvars:
            raise ValueError(f"expected {self.nvars} arguments")
        x = [np.asarray(v, dtype=float) for v in x]
        out = np.zeros(np.broadcast(*x).shape) if x else np.zeros(())
        for e, c in self.terms.items():
            term = np.full(out.shape, float(c))
            for v, k in zip(x, e):
                if k:
                    term = term * v ** k
            out = out + term
        return out if out.ndim else float(out)

    def gradient(self) -> tuple["RealPolynomial", ...]:
        grads = []
        for i in range(self.nvars):
            d = {}
            for e, c in self.terms.items():
                if e[i]:
                    e2 = list(e)
                    e2[i] -= 1
                    d[tuple(e2)] = c * e[i]
            grads.append(RealPolynomial(self.nvars, d))
        return tuple(grads)

    def linear_substitution(self, R) -> "RealPolynomial":
        """``x -> R x``: the polynomial ``h(R x)``."""
        R = np.asarray(R, dtype=float)
        if R.shape != (self.nvars, self.nvars):
            raise ValueError("substitution matrix must be square of size nvars")
        xs = self.variables(self.nvars)
        images = [sum((xs[j] * float(R[i, j]) for j in range(self.nvars)), RealPolynomial(self.nvars, {}))
                  for i in range(self.nvars)]
        out = RealPolynomial(self.nvars, {})
        for e, c in self.terms.items():
            term = RealPolynomial.constant(self.nvars, float(c))
            for img, k in zip(images, e):
                term = term * img ** k
            out = out + term
        return out

    # text format: "coefficient e1 e2 ... en" per line
    def dumps(self) -> str:
        lines = [f"# variables {self.nvars}"]
        for e, c in sorted(self.terms.items()):
            lines.append(f"{c} " + " ".join(map(str, e)))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RealPolynomial":
        nvars, terms = None, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if line.startswith("# variables"):
                nvars = int(line.split()[-1])
                continue
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                c = Fraction(parts[0]) if "." not in parts[0] and "e" not in parts[0].lower() else float(parts[0])
                e = tuple(int(k) for k in parts[1:])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}") from exc
            if nvars is None:
                nvars = len(e)
            if len(e) != nvars:
                raise ValueError(f"line {lineno}: expected {nvars} exponents")
            terms[e] = terms.get(e, 0) + c
        if nvars is None:
            raise ValueError("empty polynomial file without a variable count")
        return cls(nvars, terms)


# -- the quartic torus -----------------------------------------------------------

def quartic_torus_eval(x, y, z):
    """``(3/4 + x^2 + y^2 + z^2)^2 - 4 (x^2 + y^2)``: torus with radii 1 and 1/2."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    out = (0.75 + x * x + y * y + z * z) ** 2 - 4.0 * (x * x + y * y)
    return out if out.ndim else float(out)


def quartic_torus_factored(x, y, z):
    """``((r-1)^2 + z^2 - 1/4)((r+1)^2 + z^2 - 1/4)`` with ``r = sqrt(x^2 + y^2)``."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    r = np.hypot(x, y)
    out = ((r - 1) ** 2 + z * z - 0.25) * ((r + 1) ** 2 + z * z - 0.25)
    return out if out.ndim else float(out)


def quartic_torus_polynomial() -> RealPolynomial:
    x, y, z = RealPolynomial.variables(3)
    return (Fraction(3, 4) + x * x + y * y + z * z) ** 2 - 4 * (x * x + y * y)


# -- the Viro perturbation ----------------------------------------------------------

def viro_perturb(p: RealPolynomial, q: RealPolynomial, h: RealPolynomial, eps) -> RealPolynomial:
    """``p q - eps h`` in exact arithmetic when the inputs are rational."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if not (p.nvars == q.nvars == h.nvars):
        raise ValueError("variable count mismatch")
    return p * q - h * eps


def sphere_hyperplane_pair(nvars: int) -> tuple[RealPolynomial, RealPolynomial]:
    """``p = |x|^2 - 1`` and ``q = x_n``."""
    xs = RealPolynomial.variables(nvars)
    p = sum((v * v for v in xs), RealPolynomial.constant(nvars, -1))
    return p, xs[-1]


def two_disc_h(nvars: int, centre=Fraction(1, 3), radius_sq=Fraction(1, 16)) -> RealPolynomial:
    """Product of two disc equations in the first two variables, centred at ``+-(c, c)``."""
    xs = RealPolynomial.variables(nvars)
    x1, x2 = xs[0], xs[1]
    a = (x1 - centre) ** 2 + (x2 - centre) ** 2 - radius_sq
    b = (x1 + centre) ** 2 + (x2 + centre) ** 2 - radius_sq
    return a * b


# -- cubical level sets ------------------------------------------------------------

@dataclass
class CubicalLevelSet:
    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]   # vertices per axis
    signs: np.ndarray             # sign of f on vertices, in {-1, 0, 1}

    def __post_init__(self):
        if any(r < 2 for r in self.resolution):
            raise ValueError("resolution must be >= 2 per axis")
        if self.signs.shape != tuple(self.resolution):
            raise ValueError("sign array does not match the resolution")

    @classmethod
    def sample(cls, f: Callable, box, resolution) -> "CubicalLevelSet":
        box = tuple((float(a), float(b)) for a, b in box)
        if isinstance(resolution, int):
            resolution = (resolution,) * len(box)
        axes = [np.linspace(a, b, n) for (a, b), n in zip(box, resolution)]
        grids = np.meshgrid(*axes, indexing="ij")
        return cls(box, tuple(resolution), np.sign(np.asarray(f(*grids), dtype=float)).astype(np.int8))

    def marked_cells(self) -> np.ndarray:
        """Cells whose corner signs are not all equal and nonzero."""
        d = self.signs.ndim
        corners = []
        for offs in np.ndindex(*(2,) * d):
            sl = tuple(slice(o, o + n - 1) for o, n in zip(offs, self.signs.shape))
            corners.append(self.signs[sl])
        stack = np.stack(corners)
        return (stack.max(axis=0) > 0) & (stack.min(axis=0) < 0) | np.any(stack == 0, axis=0)

    def marked_cell_centres(self) -> np.ndarray:
        idx = np.argwhere(self.marked_cells())
        lo = np.array([a for a, _ in self.box])
        step = np.array([(b - a) / (n - 1) for (a, b), n in zip(self.box, self.resolution)])
        return lo + (idx + 0.5) * step


@dataclass
class ComponentReport:
    count: int
    sizes: list[int]
    resolution: tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps({"count": self.count, "sizes": self.sizes, "resolution": list(self.resolution)})


def component_count(f, box, resolution) -> ComponentReport:
    """Face-connected components of the sign-change cells of ``f`` on a grid."""
    res = (resolution,) * len(box) if isinstance(resolution, int) else tuple(resolution)
    if min(res) < 16:
        raise ValueError("resolution must be >= 16")
    if isinstance(f, RealPolynomial) and f.nvars != len(box):
        raise ValueError("box dimension does not match the polynomial")
    ls = CubicalLevelSet.sample(f, box, res)
    labels, n = ndimage.label(ls.marked_cells())
    sizes = sorted(np.bincount(labels.ravel())[1:].tolist(), reverse=True) if n else []
    return ComponentReport(int(n), sizes, res)


def stable_eps(p, q, h, box, resolution, eps_values) -> dict[float, int]:
    """Component counts of ``p q - eps h`` across a range of ``eps``."""
    return {float(e): component_count(viro_perturb(p, q, h, e), box, resolution).count for e in eps_values}


# -- circles on the unit sphere -------------------------------------------------------

@dataclass
class CircleCount:
    count: int
    transversal: bool
    min_gradient: float   # smallest tangential gradient on the sampled zero set, relative


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _sphere_grid(n_theta: int, n_phi: int):
    theta = np.linspace(0.0, np.pi, n_theta + 1)
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)


def sphere_circle_count(h: RealPolynomial, n_theta: int = 400, n_phi: int = 800,
                        transversality_tol: float | None = None) -> CircleCount:
    """Number of closed curves in ``{h = 0}`` on the unit sphere in R^3.

    Sign-change cells of a latitude-longitude grid are joined across faces,
    across the longitude seam and around each pole. A near-zero tangential
    gradient on the sampled zero set flags a non-transversal intersection.
    """
    used = h.used_variables()
    if h.nvars > 3 and any(i >= 3 for i in used):
        raise ValueError("h must depend on at most 3 variables")
    if h.nvars < 3:
        h = RealPolynomial(3, {e + (0,) * (3 - h.nvars): c for e, c in h.terms.items()})
    elif h.nvars > 3:
        h = RealPolynomial(3, {e[:3]: c for e, c in h.terms.items()})
    X = _sphere_grid(n_theta, n_phi)
    vals = h(X[..., 0], X[..., 1], X[..., 2])
    s = np.sign(vals)
    # cells (i, j) span theta rows i, i+1 and phi columns j, j+1 (periodic)
    c = np.stack([s[:-1], s[1:], np.roll(s[:-1], -1, axis=1), np.roll(s[1:], -1, axis=1)])
    marked = ((c.max(axis=0) > 0) & (c.min(axis=0) < 0)) | np.any(c == 0, axis=0)
    labels, n = ndimage.label(marked)
    if n == 0:
        return CircleCount(0, True, float("inf"))
    uf = _UnionFind(n + 1)
    for i in range(n_theta):
        a, b = labels[i, -1], labels[i, 0]
        if a and b:
            uf.union(a, b)
    for row in (0, n_theta - 1):
        present = [x for x in np.unique(labels[row]) if x]
        for x in present[1:]:
            uf.union(present[0], x)
    count = len({uf.find(x) for x in range(1, n + 1)})

    # transversality: tangential gradient at interpolated zeros on grid edges
    grads = h.gradient()
    pts = []
    for shift in ((1, 0), (0, 1)):
        nxt = np.roll(vals, (-shift[0], -shift[1]), axis=(0, 1))[: n_theta]
        cur = vals[: n_theta]
        i, j = np.nonzero(np.sign(cur) * np.sign(nxt) < 0)
        t = cur[i, j] / (cur[i, j] - nxt[i, j])
        a, b = X[i, j], X[(i + shift[0]) % (n_theta + 1), (j + shift[1]) % n_phi]
        pts.append(a * (1 - t)[:, None] + b * t[:, None])
    pts = np.concatenate(pts)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    G = np.stack([g(pts[:, 0], pts[:, 1], pts[:, 2]) for g in grads], axis=-1)
    G_tan = G - np.sum(G * pts, axis=1, keepdims=True) * pts
    gnorm = np.linalg.norm(G_tan, axis=1)
    ref = np.max(np.abs(np.stack([g(X[..., 0], X[..., 1], X[..., 2]) for g in grads], axis=-1)))
    rel = float(gnorm.min() / ref) if len(gnorm) and ref > 0 else 0.0
    tol = transversality_tol if transversality_tol is not None else 4 * np.pi / n_theta
    return CircleCount(count, rel > tol, rel)

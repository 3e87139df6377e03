"""Exterior algebra on flat charts.

A :class:`DifferentialForm` stores one coefficient per strictly increasing
multi-index. A coefficient is either a number (the constant fast path) or a
callable ``p -> float`` of the position. Operations that only combine
coefficients linearly or multiplicatively keep constant inputs constant.

Complex coordinates ``z_j = x_j + i y_j`` use the interleaved real ordering
``(x_1, y_1, x_2, y_2, ...)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from numbers import Number
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

Coefficient = float | Callable[[np.ndarray], float]


class DegenerateMetricError(ValueError):
    """Raised for metrics that are not symmetric positive definite."""

    def __init__(self, eigenvalues):
        self.eigenvalues = np.asarray(eigenvalues)
        super().__init__(f"metric is not positive definite; eigenvalues {self.eigenvalues}")


# -- coefficient algebra -----------------------------------------------------

def _is_const(c) -> bool:
    return isinstance(c, Number)


def _ev(c, p):
    return c if _is_const(c) else c(p)


def _cmul(a, b):
    if _is_const(a) and _is_const(b):
        return a * b
    return lambda p: _ev(a, p) * _ev(b, p)


def _clin(terms):
    """Linear combination ``sum(w * c)`` of ``(weight, coefficient)`` pairs."""
    terms = [(w, c) for w, c in terms if w != 0]
    if all(_is_const(c) for _, c in terms):
        return sum(w * c for w, c in terms)
    return lambda p: sum(w * _ev(c, p) for w, c in terms)


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if entries repeat)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


# -- forms -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DifferentialForm:
    degree: int
    dim: int
    coeffs: Mapping[tuple[int, ...], Coefficient] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.degree <= self.dim:
            raise ValueError(f"degree {self.degree} out of range for dimension {self.dim}")
        clean = {}
        for key, c in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.degree:
                raise ValueError(f"multi-index {key} has wrong length for degree {self.degree}")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"multi-index {key} is not strictly increasing")
            if key and not (0 <= key[0] and key[-1] < self.dim):
                raise ValueError(f"multi-index {key} out of range for dimension {self.dim}")
            if _is_const(c):
                if c == 0:
                    continue
                c = complex(c).real if isinstance(c, complex) else float(c)
            clean[key] = c
        object.__setattr__(self, "coeffs", MappingProxyType(clean))

    # construction helpers
    @classmethod
    def zero(cls, degree: int, dim: int) -> "DifferentialForm":
        return cls(degree, dim, {})

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[Sequence[int], Coefficient]) -> "DifferentialForm":
        """Build from possibly unsorted index tuples; signs follow reordering."""
        acc: dict[tuple[int, ...], list] = {}
        degree = None
        for idx, c in terms.items():
            idx = tuple(idx)
            degree = len(idx) if degree is None else degree
            if len(idx) != degree:
                raise ValueError("all terms must have the same degree")
            s = _perm_sign(idx)
            if s == 0:
                continue
            acc.setdefault(tuple(sorted(idx)), []).append((s, c))
        if degree is None:
            raise ValueError("cannot infer degree from an empty term map; use zero()")
        return cls(degree, dim, {k: _clin(v) for k, v in acc.items()})

    @property
    def is_constant(self) -> bool:
        return all(_is_const(c) for c in self.coeffs.values())

    def at(self, p) -> "DifferentialForm":
        """Freeze position-dependent coefficients at the point ``p``."""
        if self.is_constant:
            return self
        p = np.asarray(p, dtype=float)
        return DifferentialForm(self.degree, self.dim, {k: float(_ev(c, p)) for k, c in self.coeffs.items()})

    def components(self, p=None) -> np.ndarray:
        """Coefficient vector over all increasing multi-indices (lexicographic)."""
        form = self.at(p) if p is not None else self
        if not form.is_constant:
            raise ValueError("position-dependent form; pass a point")
        return np.array([form.coeffs.get(I, 0.0) for I in multi_indices(self.dim, self.degree)])

    # arithmetic
    def _check(self, other: "DifferentialForm"):
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"ambient dimension mismatch: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        keys = set(self.coeffs) | set(other.coeffs)
        return DifferentialForm(self.degree, self.dim, {
            k: _clin([(1, self.coeffs.get(k, 0.0)), (1, other.coeffs.get(k, 0.0))]) for k in keys})

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, DifferentialForm):
            return NotImplemented
        return DifferentialForm(self.degree, self.dim, {k: _cmul(s, c) for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def allclose(self, other: "DifferentialForm", atol: float = 1e-12, p=None) -> bool:
        if (self.degree, self.dim) != (other.degree, other.dim):
            return False
        return bool(np.allclose(self.components(p), other.components(p), rtol=0, atol=atol))

    def __repr__(self):
        if not self.coeffs:
            return f"DifferentialForm(0, degree={self.degree}, dim={self.dim})"
        parts = []
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            name = "^".join(f"dx{i}" for i in k) or "1"
            parts.append(f"{c:+g}*{name}" if _is_const(c) else f"f(p)*{name}")
        return "DifferentialForm(" + " ".join(parts) + ")"


def multi_indices(n: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), k))


def dx(dim: int, *idx: int) -> DifferentialForm:
    """Basis form ``dx_{i1} ^ ... ^ dx_{ik}`` (indices in any order)."""
    if not idx:
        return DifferentialForm(0, dim, {(): 1.0})
    return DifferentialForm.from_terms(dim, {idx: 1.0})


def constant(dim: int, value: Coefficient = 1.0) -> DifferentialForm:
    return DifferentialForm(0, dim, {(): value})


# -- core operations -----------------------------------------------------------

def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    if a.dim != b.dim:
        raise ValueError(f"ambient dimension mismatch: {a.dim} vs {b.dim}")
    if a.degree + b.degree > a.dim:
        raise ValueError(f"degree {a.degree}+{b.degree} exceeds dimension {a.dim}")
    acc: dict[tuple[int, ...], list] = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            if set(I) & set(J):
                continue
            # sign of merging I and J into sorted order = parity of cross inversions
            inv = sum(1 for i in I for j in J if i > j)
            key = tuple(sorted(I + J))
            acc.setdefault(key, []).append((-1 if inv % 2 else 1, _cmul(ca, cb)))
    return DifferentialForm(a.degree + b.degree, a.dim, {k: _clin(v) for k, v in acc.items()})


def interior_product(v, a: DifferentialForm) -> DifferentialForm:
    """Contraction of ``v`` into the first slot of ``a``."""
    if a.degree == 0:
        raise ValueError("interior product of a 0-form is undefined")
    v = np.asarray(v, dtype=float)
    if v.shape != (a.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match dimension {a.dim}")
    acc: dict[tuple[int, ...], list] = {}
    for I, c in a.coeffs.items():
        for s, i in enumerate(I):
            if v[i] != 0:
                acc.setdefault(I[:s] + I[s + 1:], []).append(((-1) ** s * v[i], c))
    return DifferentialForm(a.degree - 1, a.dim, {k: _clin(t) for k, t in acc.items()})


def pullback(J, a: DifferentialForm, translation=None) -> DifferentialForm:
    """Pull ``a`` back along the affine map ``x' -> J x' + translation``.

    ``J`` has shape ``(a.dim, n')``; the result lives in dimension ``n'``.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != a.dim:
        raise ValueError(f"map of shape {J.shape} cannot pull back a form in dimension {a.dim}")
    n_src = J.shape[1]
    k = a.degree
    if k > n_src:
        raise ValueError(f"cannot pull a {k}-form back to dimension {n_src}")
    b = np.zeros(a.dim) if translation is None else np.asarray(translation, dtype=float)

    def compose(c):
        if _is_const(c):
            return c
        return lambda p: c(J @ np.asarray(p, dtype=float) + b)

    if k == 0:
        return DifferentialForm(0, n_src, {(): compose(a.coeffs.get((), 0.0))})
    acc: dict[tuple[int, ...], list] = {}
    targets = multi_indices(n_src, k)
    for I, c in a.coeffs.items():
        sub = J[list(I), :]
        cc = compose(c)
        for K in targets:
            d = float(np.linalg.det(sub[:, list(K)]))
            if abs(d) > 1e-15:
                acc.setdefault(K, []).append((d, cc))
    return DifferentialForm(k, n_src, {K: _clin(t) for K, t in acc.items()})


# -- metrics and frames --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricAtPoint:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("metric must be a square matrix")
        if not np.array_equal(m, m.T):
            if np.allclose(m, m.T, rtol=0, atol=1e-12):
                m = 0.5 * (m + m.T)
            else:
                raise ValueError("metric must be symmetric")
        eig = np.linalg.eigvalsh(m)
        if eig[0] <= 0:
            raise DegenerateMetricError(eig)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def euclidean(cls, n: int) -> "MetricAtPoint":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def coframe(self) -> np.ndarray:
        """``P`` with ``g = P^T P``; the rows of ``P`` give an orthonormal coframe."""
        return np.linalg.cholesky(self.matrix).T


def as_metric(g, n: int) -> MetricAtPoint:
    if g is None:
        return MetricAtPoint.euclidean(n)
    if isinstance(g, MetricAtPoint):
        return g
    return MetricAtPoint(np.asarray(g, dtype=float))


@dataclass(frozen=True, eq=False)
class TangentFrame:
    vectors: np.ndarray  # shape (n, k): one column per vector
    orthonormal: bool = False

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if self.orthonormal:
            gram = v.T @ v
            if not np.allclose(gram, np.eye(v.shape[1]), rtol=0, atol=1e-12):
                raise ValueError("frame flagged orthonormal but Gram matrix is not the identity")

    @classmethod
    def from_vectors(cls, vectors: Iterable, orthonormal: bool = False) -> "TangentFrame":
        return cls(np.column_stack([np.asarray(v, dtype=float) for v in vectors]), orthonormal)

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    def volume(self, g=None) -> float:
        g = as_metric(g, self.vectors.shape[0])
        gram = self.vectors.T @ g.matrix @ self.vectors
        return float(math.sqrt(max(np.linalg.det(gram), 0.0)))


def _frame_array(frame) -> np.ndarray:
    if isinstance(frame, TangentFrame):
        return frame.vectors
    f = np.asarray(frame, dtype=float)
    return f[:, None] if f.ndim == 1 else f


def evaluate_on_frame(a: DifferentialForm, frame, p=None) -> float:
    V = _frame_array(frame)
    if V.shape[0] != a.dim:
        raise ValueError(f"frame vectors live in dimension {V.shape[0]}, form in {a.dim}")
    if V.shape[1] != a.degree:
        raise ValueError(f"frame has {V.shape[1]} vectors, form has degree {a.degree}")
    if a.degree == 0:
        return float(_ev(a.coeffs.get((), 0.0), p))
    total = 0.0
    for I, c in a.coeffs.items():
        total += _ev(c, p) * np.linalg.det(V[list(I), :])
    return float(total)


def evaluate_batch(a: DifferentialForm, frames: np.ndarray) -> np.ndarray:
    """Evaluate a constant form on a stack of frames of shape ``(m, n, k)``."""
    if not a.is_constant:
        raise ValueError("batch evaluation needs constant coefficients")
    frames = np.asarray(frames, dtype=float)
    if frames.shape[1:] != (a.dim, a.degree):
        raise ValueError(f"frames of shape {frames.shape[1:]} do not match ({a.dim}, {a.degree})")
    out = np.zeros(frames.shape[0])
    for I, c in a.coeffs.items():
        out += c * np.linalg.det(frames[:, list(I), :])
    return out


def hodge_star(a: DifferentialForm, g=None, orientation: int = 1) -> DifferentialForm:
    """Hodge star of a constant form for a Riemannian metric ``g``."""
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    g = as_metric(g, a.dim)
    P = g.coframe()
    Pinv = np.linalg.inv(P)
    # y = P x are orthonormal coordinates with vol_g = dy_1 ^ ... ^ dy_n
    in_y = pullback(Pinv, a)
    n, k = a.dim, a.degree
    starred = {}
    for I, c in in_y.coeffs.items():
        comp = tuple(i for i in range(n) if i not in I)
        starred[comp] = _cmul(c, orientation * _perm_sign(I + comp))
    return pullback(P, DifferentialForm(n - k, n, starred))


def norm(a: DifferentialForm, g=None, p=None) -> float:
    """Pointwise norm: root sum of squared coefficients in an orthonormal coframe."""
    g = as_metric(g, a.dim)
    in_y = pullback(np.linalg.inv(g.coframe()), a.at(p) if p is not None else a)
    return float(np.linalg.norm(in_y.components()))


# -- complex forms -------------------------------------------------------------

class ComplexForm(NamedTuple):
    re: DifferentialForm
    im: DifferentialForm

    def __xor__(self, other):
        return complex_wedge(self, other)

    def __mul__(self, s):
        s = complex(s)
        return ComplexForm(self.re * s.real - self.im * s.imag, self.im * s.real + self.re * s.imag)

    __rmul__ = __mul__

    def conj(self) -> "ComplexForm":
        return ComplexForm(self.re, -self.im)

    def pullback(self, J, translation=None) -> "ComplexForm":
        return ComplexForm(pullback(J, self.re, translation), pullback(J, self.im, translation))

    def norm(self, g=None, p=None) -> float:
        """Norm normalized so that ``dz_1 ^ dz_2`` has length sqrt(2) on flat C^2."""
        return math.sqrt(0.5 * (norm(self.re, g, p) ** 2 + norm(self.im, g, p) ** 2))


def complex_wedge(a: ComplexForm, b: ComplexForm) -> ComplexForm:
    return ComplexForm(wedge(a.re, b.re) - wedge(a.im, b.im), wedge(a.re, b.im) + wedge(a.im, b.re))


def dz(n_complex: int, j: int) -> ComplexForm:
    """``dz_j = dx_j + i dy_j`` (0-based ``j``) on C^n in interleaved real coordinates."""
    dim = 2 * n_complex
    return ComplexForm(dx(dim, 2 * j), dx(dim, 2 * j + 1))


def holomorphic_volume(n_complex: int) -> ComplexForm:
    out = dz(n_complex, 0)
    for j in range(1, n_complex):
        out = complex_wedge(out, dz(n_complex, j))
    return out


def standard_symplectic(n_complex: int) -> DifferentialForm:
    """``sum_j dx_j ^ dy_j`` in interleaved coordinates."""
    dim = 2 * n_complex
    out = DifferentialForm.zero(2, dim)
    for j in range(n_complex):
        out = out + dx(dim, 2 * j, 2 * j + 1)
    return out


# -- comass ----------------------------------------------------------------

@dataclass(frozen=True)
class ComassResult:
    value: float
    frame: np.ndarray  # (n, k), g-orthonormal
    sample_max: float
    samples: int


def _orthonormalize(frames: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(frames)
    # fix column signs so the factorization is unique
    s = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    s[s == 0] = 1
    return q * s[..., None, :]


def _gradient(a: DifferentialForm, Q: np.ndarray) -> np.ndarray:
    """Euclidean gradient of ``Q -> a(Q)``; the form is linear in each column."""
    n, k = Q.shape
    batch = np.repeat(Q[None], n * k, axis=0)
    for j in range(k):
        batch[j * n:(j + 1) * n, :, j] = np.eye(n)
    vals = evaluate_batch(a, batch)
    return vals.reshape(k, n).T


def comass_estimate(a: DifferentialForm, g=None, samples: int = 10_000, refine_steps: int = 200,
                    starts: int = 8, seed: int | None = 0, batch: int = 50_000) -> ComassResult:
    """Lower bound on the comass of a constant form.

    Random Gaussian frames are orthonormalized and evaluated; the best
    ``starts`` frames are then refined by projected gradient ascent on the
    Stiefel manifold. The returned ``value`` is an attained evaluation, so it
    never overestimates the comass.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not a.is_constant:
        raise ValueError("comass is estimated for constant forms; freeze with .at(p)")
    n, k = a.dim, a.degree
    g = as_metric(g, n)
    P = g.coframe()
    Pinv = np.linalg.inv(P)
    b = pullback(Pinv, a)  # a in g-orthonormal coordinates
    if k == 0:
        v = abs(float(b.coeffs.get((), 0.0)))
        return ComassResult(v, np.zeros((n, 0)), v, 1)

    rng = np.random.default_rng(seed)
    best_vals = np.empty(0)
    best_frames = np.empty((0, n, k))
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        Q = _orthonormalize(rng.standard_normal((m, n, k)))
        vals = np.abs(evaluate_batch(b, Q))
        keep = np.argsort(vals)[-starts:]
        best_vals = np.concatenate([best_vals, vals[keep]])
        best_frames = np.concatenate([best_frames, Q[keep]])
        order = np.argsort(best_vals)[-starts:]
        best_vals, best_frames = best_vals[order], best_frames[order]
        done += m
    sample_max = float(best_vals.max())

    best_val, best_Q = sample_max, best_frames[-1]
    for Q in best_frames:
        sign = 1.0 if evaluate_batch(b, Q[None])[0] >= 0 else -1.0
        f = sign * evaluate_batch(b, Q[None])[0]
        step = 0.5
        for _ in range(refine_steps):
            G = sign * _gradient(b, Q)
            R = G - Q @ (0.5 * (Q.T @ G + G.T @ Q))  # Riemannian gradient on the Stiefel manifold
            if np.linalg.norm(R) < 1e-13:
                break
            while step > 1e-12:
                Qn = _orthonormalize((Q + step * R)[None])[0]
                fn = sign * evaluate_batch(b, Qn[None])[0]
                if fn > f:
                    Q, f = Qn, fn
                    step = min(step * 2.0, 1.0)
                    break
                step *= 0.5
            else:
                break
        if f > best_val:
            best_val, best_Q = float(f), Q
    return ComassResult(float(best_val), Pinv @ best_Q, sample_max, samples)

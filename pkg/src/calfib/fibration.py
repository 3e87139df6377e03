"""Calibration packages, torus fibers and their defect functionals.

Two ambient settings are covered:

* CY3: the flat six-torus with coordinates ``(x1, y1, x2, y2, x3, y3)``,
  Kahler form ``sum dx_j ^ dy_j`` and holomorphic 3-form ``i eta ^ dz3`` with
  ``eta = dz1 ^ dz2``. Fibers fix ``Re z_j`` and are special Lagrangian.
* G2: the flat seven-torus with the 3-form
  ``w1 ^ d1 + w2 ^ d2 + w3 ^ d3 + d1 ^ d2 ^ d3`` where ``d_i = dx_{8-i}``.
  Fibers fix ``x1, x3, x6`` and are coassociative.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lattice as la
from .forms import (ComplexForm, DifferentialForm, MetricAtPoint, as_metric, complex_wedge, dx, dz,
                    evaluate_batch, hodge_star, interior_product, standard_symplectic, wedge)
from .orbifold import AffineSubtorus


class RankDeficientFrame(ValueError):
    def __init__(self, index: int, detail: str = ""):
        self.index = index
        super().__init__(f"frame at grid point {index} is rank deficient{': ' + detail if detail else ''}")


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ImmersedGrid:
    """Sampled k-dimensional submanifold: positions, tangent frames, quadrature weights."""
    points: np.ndarray   # (m, n)
    frames: np.ndarray   # (m, n, k)
    weights: np.ndarray  # (m,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim == 2:
            frames = np.broadcast_to(frames, (len(pts),) + frames.shape)
        w = np.asarray(self.weights, dtype=float)
        if frames.shape[:2] != pts.shape:
            raise ValueError(f"frames of shape {frames.shape} do not match points {pts.shape}")
        if w.shape != (len(pts),) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "weights", w)

    @property
    def param_dim(self) -> int:
        return self.frames.shape[2]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @property
    def constant_frame(self) -> bool:
        return self.frames.strides[0] == 0 or bool(np.all(self.frames == self.frames[0]))


# -- packages ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CalibrationPackage:
    mode: str  # "cy" or "g2"
    omega: DifferentialForm | None = None
    re_phi: DifferentialForm | None = None
    im_phi: DifferentialForm | None = None
    phi3: DifferentialForm | None = None
    star_phi: DifferentialForm | None = None
    metric: MetricAtPoint | None = None

    def __post_init__(self):
        if self.mode == "cy":
            if self.omega is None or self.re_phi is None or self.im_phi is None:
                raise ValueError("CY mode needs omega, re_phi and im_phi")
            if self.omega.degree != 2 or self.re_phi.dim != 2 * self.re_phi.degree:
                raise ValueError("inconsistent degrees for a CY package")
        elif self.mode == "g2":
            if self.phi3 is None or self.phi3.degree != 3 or self.phi3.dim != 7:
                raise ValueError("G2 mode needs a 3-form on R^7")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")


def cy3_eta() -> ComplexForm:
    return complex_wedge(dz(3, 0), dz(3, 1))


def cy3_package() -> CalibrationPackage:
    """Flat package with ``phi = i eta ^ dz3``."""
    phi = (cy3_eta() ^ dz(3, 2)) * 1j
    return CalibrationPackage("cy", omega=standard_symplectic(3), re_phi=phi.re, im_phi=phi.im)


def g2_triple(convention: str = "definite") -> tuple[DifferentialForm, ...]:
    """Hyperkahler triple on the first four coordinates of R^7.

    ``"definite"`` uses ``w3 = -(dx1 dx4 + dx2 dx3)``, which makes the assembled
    3-form a positive G2 form; ``"pinned"`` uses ``+(dx1 dx4 + dx2 dx3)``, for
    which the 3-form has split signature (kept for comparison).
    """
    w1 = dx(7, 0, 1) + dx(7, 2, 3)
    w2 = dx(7, 0, 2) - dx(7, 1, 3)
    w3 = dx(7, 0, 3) + dx(7, 1, 2)
    if convention == "definite":
        w3 = -w3
    elif convention != "pinned":
        raise ValueError(f"unknown convention {convention!r}")
    return w1, w2, w3


def g2_deltas() -> tuple[DifferentialForm, ...]:
    """``d_i = dx_{8-i}`` (1-based), so ``d1, d2, d3 = dx7, dx6, dx5``."""
    return dx(7, 6), dx(7, 5), dx(7, 4)


def g2_phi(triple=None) -> DifferentialForm:
    w1, w2, w3 = triple if triple is not None else g2_triple()
    d1, d2, d3 = g2_deltas()
    return wedge(w1, d1) + wedge(w2, d2) + wedge(w3, d3) + wedge(wedge(d1, d2), d3)


def g2_mirror_phi(triple=None) -> DifferentialForm:
    """``w3 ^ d1 + w2 ^ d2 - w1 ^ d3 + d1 ^ d2 ^ d3``."""
    w1, w2, w3 = triple if triple is not None else g2_triple()
    d1, d2, d3 = g2_deltas()
    return wedge(w3, d1) + wedge(w2, d2) - wedge(w1, d3) + wedge(wedge(d1, d2), d3)


def g2_package(phi: DifferentialForm | None = None) -> CalibrationPackage:
    phi = g2_phi() if phi is None else phi
    res = g2_orbit_test(phi)
    if not res.is_g2:
        raise ValueError("3-form is not of G2 type")
    metric = MetricAtPoint(res.metric)
    return CalibrationPackage("g2", phi3=phi, star_phi=hodge_star(phi, metric, res.orientation), metric=metric)


# -- G2 orbit test -----------------------------------------------------------

@dataclass(frozen=True)
class G2Result:
    is_g2: bool
    induced_bilinear: np.ndarray
    orientation: int  # sign of definiteness; 0 when indefinite
    metric: np.ndarray | None


def g2_orbit_test(phi: DifferentialForm, tol: float = 1e-9) -> G2Result:
    """Decide whether a constant 3-form on R^7 lies in the open G2 orbit.

    ``B_ij`` is the coefficient of ``i_{e_i} phi ^ i_{e_j} phi ^ phi`` on
    ``dx1 ^ ... ^ dx7``. The form is of G2 type iff ``B`` is definite; then the
    induced metric is ``g = B / (6 sqrt(det g))`` with
    ``det g = (det B / 6^7)^(2/9)`` (computed for ``sign * B``).
    """
    if (phi.degree, phi.dim) != (3, 7):
        raise ValueError("expected a 3-form on R^7")
    phi = phi.at(np.zeros(7))
    E = np.eye(7)
    contracted = [interior_product(E[i], phi) for i in range(7)]
    full = tuple(range(7))
    B = np.zeros((7, 7))
    for i in range(7):
        for j in range(i, 7):
            B[i, j] = B[j, i] = wedge(wedge(contracted[i], contracted[j]), phi).coeffs.get(full, 0.0)
    eig = np.linalg.eigvalsh(B)
    scale = max(np.max(np.abs(eig)), 1e-300)
    if eig[0] > tol * scale:
        sign = 1
    elif eig[-1] < -tol * scale:
        sign = -1
    else:
        return G2Result(False, B, 0, None)
    Bs = sign * B
    det_g = (np.linalg.det(Bs) / 6.0 ** 7) ** (2.0 / 9.0)
    return G2Result(True, B, sign, Bs / (6.0 * math.sqrt(det_g)))


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(n)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# -- fibers ------------------------------------------------------------------

FAMILIES = {
    # fixed coordinate indices, free coordinate indices (0-based)
    "cy3": ((0, 2, 4), (1, 3, 5)),
    "g2": ((0, 2, 5), (1, 3, 4, 6)),
}


@dataclass(frozen=True)
class AffineFiber:
    family: str
    params: tuple[float, float, float]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown fiber family {self.family!r}")

    @property
    def ambient_dim(self) -> int:
        return 6 if self.family == "cy3" else 7

    @property
    def fixed(self) -> tuple[int, ...]:
        return FAMILIES[self.family][0]

    @property
    def free(self) -> tuple[int, ...]:
        return FAMILIES[self.family][1]

    @property
    def base_point(self) -> np.ndarray:
        p = np.zeros(self.ambient_dim)
        p[list(self.fixed)] = self.params
        return p

    @property
    def directions(self) -> tuple[tuple[int, ...], ...]:
        n = self.ambient_dim
        return tuple(tuple(int(i == j) for i in range(n)) for j in self.free)


def _fiber_frame(family: str) -> np.ndarray:
    return _cached_frame(family).copy()


@functools.lru_cache(maxsize=None)
def _cached_frame(family: str) -> np.ndarray:
    n = 6 if family == "cy3" else 7
    frame = np.eye(n)[:, list(FAMILIES[family][1])]
    if family == "g2":
        # orient so that the calibrating 4-form is positive on the frame
        if evaluate_batch(g2_package().star_phi, frame[None])[0] < 0:
            frame[:, [-2, -1]] = frame[:, [-1, -2]]
    return frame


def make_fiber(family: str, a: float, b: float, c: float, resolution: int) -> ImmersedGrid:
    """Uniform periodic sample of the affine fiber through the given parameters."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    fib = AffineFiber(family, (a, b, c))
    k = len(fib.free)
    ticks = np.arange(resolution) / resolution
    mesh = np.stack(np.meshgrid(*([ticks] * k), indexing="ij"), axis=-1).reshape(-1, k)
    pts = np.tile(fib.base_point, (len(mesh), 1))
    pts[:, list(fib.free)] = mesh
    weights = np.full(len(pts), 1.0 / len(pts))
    return ImmersedGrid(pts, _fiber_frame(family), weights)


# -- defects -----------------------------------------------------------------

def _metric_at(g, p, n) -> MetricAtPoint:
    return as_metric(g(p) if callable(g) else g, n)


def _frame_volumes(frames: np.ndarray, gmats: np.ndarray) -> np.ndarray:
    gram = np.einsum("mik,mij,mjl->mkl", frames, gmats, frames)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None))


def _gmats(L: ImmersedGrid, g) -> np.ndarray:
    n = L.ambient_dim
    if callable(g):
        return np.array([_metric_at(g, p, n).matrix for p in L.points])
    return np.broadcast_to(as_metric(g, n).matrix, (len(L), n, n))


def _form_values(form: DifferentialForm, frames: np.ndarray, points: np.ndarray) -> np.ndarray:
    if form.is_constant:
        return evaluate_batch(form, frames)
    return np.array([evaluate_batch(form.at(p), f[None])[0] for p, f in zip(points, frames)])


def _check_rank(vol: np.ndarray, frames: np.ndarray, gmats: np.ndarray, tol: float = 1e-12):
    lengths = np.sqrt(np.einsum("mik,mij,mjk->mk", frames, gmats, frames)).prod(axis=1)
    bad = np.nonzero(vol <= tol * np.maximum(lengths, 1e-300))[0]
    if len(bad):
        raise RankDeficientFrame(int(bad[0]))


def _sub_defect(form: DifferentialForm, L: ImmersedGrid, g, gm) -> tuple[float, int]:
    """Worst normalized value of ``form`` over all sub-frames of matching size."""
    best, where = 0.0, 0
    for sub in itertools.combinations(range(L.param_dim), form.degree):
        fr = L.frames[:, :, list(sub)]
        vol = _frame_volumes(fr, gm)
        _check_rank(vol, fr, gm)
        vals = np.abs(_form_values(form, fr, L.points)) / vol
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), i
    return best, where


@dataclass(frozen=True)
class SlagDefect:
    max_omega: float
    max_im_phi: float
    worst_omega_index: int
    worst_im_phi_index: int


def slag_defect(L: ImmersedGrid, pkg: CalibrationPackage, g=None) -> SlagDefect:
    """Largest normalized restrictions of ``omega`` and ``Im phi`` to the frames."""
    if pkg.mode != "cy":
        raise ValueError("slag_defect needs a CY package")
    if 2 * L.param_dim != L.ambient_dim:
        raise ValueError("a special Lagrangian grid has half the ambient dimension")
    g = g if g is not None else pkg.metric
    gm = _gmats(L, g)
    w, iw = _sub_defect(pkg.omega, L, g, gm)
    p, ip = _sub_defect(pkg.im_phi, L, g, gm)
    return SlagDefect(w, p, iw, ip)


def coassoc_defect(L: ImmersedGrid, phi3: DifferentialForm, g=None) -> float:
    if L.param_dim != 4 or L.ambient_dim != 7:
        raise ValueError("coassociative grids are 4-dimensional in R^7")
    return _sub_defect(phi3, L, g, _gmats(L, g))[0]


@dataclass(frozen=True)
class RatioReport:
    min_ratio: float
    max_ratio: float
    ratios: np.ndarray


def calibration_ratio(L: ImmersedGrid, form: DifferentialForm, g=None) -> RatioReport:
    """Per-point ratio of ``form`` on the frame to the frame's Riemannian volume."""
    if form.degree != L.param_dim:
        raise ValueError(f"form of degree {form.degree} cannot calibrate a {L.param_dim}-dimensional grid")
    gm = _gmats(L, g)
    vol = _frame_volumes(L.frames, gm)
    zero = np.nonzero(vol == 0)[0]
    if len(zero):
        raise RankDeficientFrame(int(zero[0]), "zero frame volume")
    r = _form_values(form, L.frames, L.points) / vol
    return RatioReport(float(r.min()), float(r.max()), r)


# -- distances to fixed loci ---------------------------------------------------

def subtorus_distance(base1, dirs1, base2, dirs2) -> float:
    """Euclidean distance between ``base1 + span(dirs1)`` and ``base2 + span(dirs2)`` mod Z^n."""
    base1 = np.array([float(x) for x in base1])
    base2 = np.array([float(x) for x in base2])
    n = len(base1)
    dirs = [list(d) for d in dirs1] + [list(d) for d in dirs2]
    N = np.array(la.integer_kernel(dirs) if dirs else la.identity(n), dtype=float)
    if N.size == 0:
        return 0.0
    G = np.linalg.inv(N @ N.T)
    y = N @ (base2 - base1)
    r = len(y)
    span = 2 if r <= 5 else 1
    offs = np.array(list(itertools.product(range(-span, span + 1), repeat=r)), dtype=float)
    cand = (y - np.round(y))[None, :] + offs
    d2 = np.einsum("mi,ij,mj->m", cand, G, cand)
    return float(math.sqrt(max(d2.min(), 0.0)))


@dataclass(frozen=True)
class Hit:
    index: int
    component: AffineSubtorus
    distance: float


def fiber_meets_neighborhood(fiber: AffineFiber, loci: Sequence[AffineSubtorus], radius: float) -> list[Hit]:
    if radius <= 0:
        raise ValueError("radius must be positive")
    hits = []
    for i, comp in enumerate(loci):
        d = subtorus_distance(fiber.base_point, fiber.directions, comp.base_point, comp.directions)
        if d <= radius:
            hits.append(Hit(i, comp, d))
    return hits


def min_locus_separation(loci: Sequence[AffineSubtorus]) -> float:
    best = math.inf
    for a, b in itertools.combinations(loci, 2):
        best = min(best, subtorus_distance(a.base_point, a.directions, b.base_point, b.directions))
    return best


def assert_tubes_disjoint(loci: Sequence[AffineSubtorus], radius: float) -> float:
    sep = min_locus_separation(loci)
    if sep < 2 * radius:
        raise ValueError(f"tubes of radius {radius} overlap: loci only {sep} apart")
    return sep


def random_fiber_outside(family: str, loci, radius: float, rng: np.random.Generator,
                         max_tries: int = 10_000) -> AffineFiber:
    for _ in range(max_tries):
        fib = AffineFiber(family, tuple(float(x) for x in rng.random(3)))
        if not fiber_meets_neighborhood(fib, loci, radius):
            return fib
    raise RuntimeError("no fiber outside the tubes found")


# -- product structure inside a tube -------------------------------------------

@dataclass(frozen=True, eq=False)
class ProductSplit:
    component: AffineSubtorus
    chart_coords: tuple[int, ...]     # ambient indices of the resolution chart (normal to the locus)
    l_directions: tuple[int, ...]     # fiber directions inside the chart
    torus_directions: tuple[int, ...]  # fiber directions along the locus
    fixed_torus_coords: tuple[int, ...]  # locus directions the fiber keeps fixed
    l_factor: ImmersedGrid            # L sampled in chart coordinates centred on the locus


def _axis(d) -> int:
    nz = [i for i, x in enumerate(d) if x]
    if len(nz) != 1 or abs(d[nz[0]]) != 1:
        raise ValueError("product splitting needs coordinate-aligned fixed loci")
    return nz[0]


def product_split(fiber: AffineFiber, hits: Sequence[Hit], which: int = 0,
                  resolution: int = 16) -> ProductSplit:
    """Split the piece of a fiber near ``hits[which]`` into ``L x (torus factor)``.

    A fiber close to one fixed torus is also close to its translates along the
    fiber's free chart directions, so several hits of the same generator are
    expected; each gives one connected piece. Hits on loci with different
    tangent directions (tubes of different generators) are rejected.
    """
    if not hits:
        raise ValueError("fiber meets no tube")
    if len({h.component.directions for h in hits}) != 1:
        raise ValueError("fiber meets tubes around loci of different generators")
    comp = hits[which].component
    along = sorted(_axis(d) for d in comp.directions)
    chart = tuple(i for i in range(fiber.ambient_dim) if i not in along)
    l_dirs = tuple(i for i in fiber.free if i in chart)
    t_dirs = tuple(i for i in fiber.free if i in along)
    fixed = tuple(i for i in along if i not in fiber.free)

    centre = np.array([float(comp.base_point[i]) for i in chart])
    base = fiber.base_point[list(chart)]
    ticks = (np.arange(resolution) + 0.5) / resolution - 0.5
    k = len(l_dirs)
    mesh = np.stack(np.meshgrid(*([ticks] * k), indexing="ij"), axis=-1).reshape(-1, k)
    rel = base - centre
    rel = rel - np.round(rel)
    pts = np.tile(rel, (len(mesh), 1))
    local = [chart.index(i) for i in l_dirs]
    pts[:, local] = mesh
    frame = np.eye(len(chart))[:, local]
    grid = ImmersedGrid(pts, frame, np.full(len(pts), 1.0 / len(pts)))
    return ProductSplit(comp, chart, l_dirs, t_dirs, fixed, grid)


@dataclass(frozen=True)
class TubeCheck:
    max_omega: float
    max_im_eta: float
    points_used: int
    points_excluded: int


def tube_slag_check(split: ProductSplit, omega_field: DifferentialForm, im_eta: DifferentialForm,
                    metric_field=None, u_min: float = 1e-3, radius: float | None = None) -> TubeCheck:
    """Restrictions of the glued Kahler form and ``Im eta`` to the L factor.

    Points with ``u = |z|^2 < u_min`` (and, if ``radius`` is given, outside
    the tube) are skipped.
    """
    L = split.l_factor
    u = np.einsum("ij,ij->i", L.points, L.points)
    keep = u >= u_min
    if radius is not None:
        keep &= np.sqrt(u) <= radius
    sub = ImmersedGrid(L.points[keep], L.frames[keep], L.weights[keep])
    gm = _gmats(sub, metric_field)
    w, _ = _sub_defect(omega_field, sub, metric_field, gm)
    e, _ = _sub_defect(im_eta, sub, metric_field, gm)
    return TubeCheck(w, e, int(keep.sum()), int((~keep).sum()))

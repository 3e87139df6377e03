"""Eguchi-Hanson potentials on C^2 minus the origin and their gluing to flat space.

Everything is radial: a potential ``F(z) = phi(u)`` with ``u = |z1|^2 + |z2|^2``
has complex Hessian ``phi' delta_ij + phi'' conj(z_i) z_j`` whose eigenvalues
are ``phi'`` (orthogonal to z) and ``(u phi')'`` (along z).

Two forms of the potential are offered:

* ``"consistent"`` (default): ``sqrt(u^2+t^2) + t log u - t log(sqrt(u^2+t^2) + t)``,
  whose derivative is ``sqrt(u^2+t^2)/u`` so the Hessian has determinant 1.
* ``"verbatim"``: the same expression with ``t^2`` in place of ``t`` in front of
  the logarithms. Its Hessian determinant is not 1 unless ``t = 1``; it is kept
  for comparison.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .forms import ComplexForm, DifferentialForm, MetricAtPoint, dx, norm, wedge

CONVENTIONS = ("consistent", "verbatim")


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("u must be positive (log singularity at u = 0)")
    return u


@dataclass(frozen=True)
class EguchiHansonPotential:
    t: float
    convention: str = "consistent"

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")

    @property
    def _c(self) -> float:
        return self.t if self.convention == "consistent" else self.t ** 2

    def value(self, u):
        u = _check_u(u)
        t, c = self.t, self._c
        if t == 0:
            return u
        s = np.sqrt(u * u + t * t)
        return s + c * np.log(u) - c * np.log(s + c)

    def d1(self, u):
        u = _check_u(u)
        t, c = self.t, self._c
        s = np.sqrt(u * u + t * t)
        if self.convention == "consistent":
            return s / u
        return u / s + c / u - c * (u / s) / (s + c)

    def d2(self, u):
        u = _check_u(u)
        t = self.t
        s = np.sqrt(u * u + t * t)
        if self.convention == "consistent":
            return -t * t / (s * u * u)
        h = 1e-6 * u
        return (self.d1(u + h) - self.d1(u - h)) / (2 * h)


def eh_potential(u, t: float, convention: str = "consistent"):
    return EguchiHansonPotential(t, convention).value(u)


def radial_hessian(z, d1: float, d2: float) -> np.ndarray:
    """``phi' delta_ij + phi'' conj(z_i) z_j`` at ``z`` in C^2."""
    z = np.asarray(z, dtype=complex)
    return d1 * np.eye(len(z)) + d2 * np.outer(np.conj(z), z)


def eh_kahler_form(z, t: float, convention: str = "consistent") -> np.ndarray:
    """Hermitian matrix ``g_{i jbar}`` of the Eguchi-Hanson metric at ``z``."""
    z = np.asarray(z, dtype=complex)
    u = float(np.vdot(z, z).real)
    if u == 0:
        raise ValueError("z = 0 is outside the chart (the exceptional sphere is not covered)")
    pot = EguchiHansonPotential(t, convention)
    return radial_hessian(z, float(pot.d1(u)), float(pot.d2(u)))


def _complex_basis(n: int) -> np.ndarray:
    """Complex vectors for the interleaved real basis (x1, y1, x2, y2, ...)."""
    basis = np.zeros((2 * n, n), dtype=complex)
    for j in range(n):
        basis[2 * j, j] = 1.0
        basis[2 * j + 1, j] = 1j
    return basis


def real_metric(h: np.ndarray) -> np.ndarray:
    """Riemannian metric ``Re sum h_ij v_i conj(w_j)`` in interleaved coordinates."""
    E = _complex_basis(h.shape[0])
    return np.real(E @ h @ E.conj().T)


def kahler_matrix(h: np.ndarray) -> np.ndarray:
    """``omega(v, w) = g(J v, w)`` in interleaved coordinates."""
    E = _complex_basis(h.shape[0])
    return np.real((1j * E) @ h @ E.conj().T)


# -- cutoff and gluing ------------------------------------------------------

def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m])
    return out


def _psi_derivs(x):
    x = np.asarray(x, dtype=float)
    p = _psi(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(x > 0, p / x ** 2, 0.0)
        d2 = np.where(x > 0, p * (1 / x ** 4 - 2 / x ** 3), 0.0)
    return p, d1, d2


def smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, smooth and monotone in between; returns (S, S', S'')."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 2.0)
    a, a1, a2 = _psi_derivs(x)
    b, b1, b2 = _psi_derivs(1.0 - x)
    b1, b2 = -b1, b2
    D, D1, D2 = a + b, a1 + b1, a2 + b2
    S = a / D
    S1 = (a1 * D - a * D1) / D ** 2
    S2 = (a2 * D - a * D2) / D ** 2 - 2 * D1 * S1 / D
    return S, S1, S2


@dataclass(frozen=True)
class GluedKahlerData:
    t: float
    r_inner: float = 0.25
    r_outer: float = 0.5
    convention: str = "consistent"

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")
        EguchiHansonPotential(self.t, self.convention)

    @property
    def potential(self) -> EguchiHansonPotential:
        return EguchiHansonPotential(self.t, self.convention)

    def cutoff(self, u):
        """Returns (chi, chi', chi''): 1 inside r_inner, 0 outside r_outer."""
        w = self.r_outer - self.r_inner
        S, S1, S2 = smooth_step((np.asarray(u, dtype=float) - self.r_inner) / w)
        return 1.0 - S, -S1 / w, -S2 / w ** 2

    def value(self, u):
        u = _check_u(u)
        chi = self.cutoff(u)[0]
        return chi * self.potential.value(u) + (1 - chi) * u

    def d1(self, u):
        u = _check_u(u)
        chi, c1, _ = self.cutoff(u)
        p = self.potential
        return 1.0 + c1 * (p.value(u) - u) + chi * (p.d1(u) - 1.0)

    def d2(self, u):
        u = _check_u(u)
        chi, c1, c2 = self.cutoff(u)
        p = self.potential
        return c2 * (p.value(u) - u) + 2 * c1 * (p.d1(u) - 1.0) + chi * p.d2(u)

    def hermitian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        u = float(np.vdot(z, z).real)
        return radial_hessian(z, float(self.d1(u)), float(self.d2(u)))

    def metric(self, p) -> MetricAtPoint:
        """Real metric at a point ``p = (x1, y1, x2, y2)``."""
        p = np.asarray(p, dtype=float)
        return MetricAtPoint(real_metric(self.hermitian(p[0::2] + 1j * p[1::2])))

    def kahler_form(self) -> DifferentialForm:
        """The glued Kahler form as a position-dependent 2-form on R^4."""
        def coeff(k, l):
            def c(p):
                p = np.asarray(p, dtype=float)
                return float(kahler_matrix(self.hermitian(p[0::2] + 1j * p[1::2]))[k, l])
            return c
        return DifferentialForm(2, 4, {(k, l): coeff(k, l) for k in range(4) for l in range(k + 1, 4)})


def glued_potential(u, data: GluedKahlerData):
    return data.value(u)


# -- positivity scan -----------------------------------------------------------

def sphere_directions(count: int, seed: int = 0) -> np.ndarray:
    """``count`` unit vectors in R^4: coordinate axes plus seeded random points."""
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(4), np.ones((1, 4)) / 2])
    extra = rng.standard_normal((max(count - len(axes), 0), 4))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([axes, extra])[:count]


def numeric_complex_hessian(F, points: np.ndarray, h) -> np.ndarray:
    """Complex Hessians of ``F: R^4 -> R`` at ``points`` (m, 4) by central differences."""
    points = np.asarray(points, dtype=float)
    m = len(points)
    h = np.broadcast_to(np.asarray(h, dtype=float), (m,))[:, None]
    E = np.eye(4)
    f0 = F(points)
    R = np.zeros((m, 4, 4))
    for i in range(4):
        fp = F(points + h * E[i])
        fm = F(points - h * E[i])
        R[:, i, i] = (fp - 2 * f0 + fm) / h[:, 0] ** 2
        for j in range(i + 1, 4):
            d = (F(points + h * (E[i] + E[j])) - F(points + h * (E[i] - E[j]))
                 - F(points - h * (E[i] - E[j])) + F(points - h * (E[i] + E[j])))
            R[:, i, j] = R[:, j, i] = d / (4 * h[:, 0] ** 2)
    xs, ys = [0, 2], [1, 3]
    Rxx = R[:, xs][:, :, xs]
    Ryy = R[:, ys][:, :, ys]
    Rxy = R[:, xs][:, :, ys]
    Ryx = R[:, ys][:, :, xs]
    return 0.25 * ((Rxx + Ryy) + 1j * (Rxy - Ryx))


@dataclass
class ScanReport:
    t: float
    min_eigenvalue: float
    worst_point: np.ndarray
    worst_u: float
    passed: bool
    u_grid: np.ndarray
    min_by_u: np.ndarray = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u [chart units]", "min_eigenvalue [dimensionless]"])
        for u, e in zip(self.u_grid, self.min_by_u):
            w.writerow([repr(float(u)), repr(float(e))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"t": self.t, "min_eigenvalue": self.min_eigenvalue, "worst_u": self.worst_u,
                "worst_point": [float(x) for x in self.worst_point], "pass": self.passed}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def positivity_scan(data: GluedKahlerData, n_u: int = 64, n_dir: int = 32, step: float = 1e-5,
                    seed: int = 0) -> ScanReport:
    """Minimum eigenvalue of the numeric complex Hessian of the glued potential.

    The grid covers ``u`` in ``[r_inner/2, 2 r_outer]`` and ``n_dir`` directions on
    the unit 3-sphere; the finite-difference step is ``step * max(1, sqrt(u))``.
    """
    u_grid = np.linspace(data.r_inner / 2, 2 * data.r_outer, n_u)
    dirs = sphere_directions(n_dir, seed)
    pts = (np.sqrt(u_grid)[:, None, None] * dirs[None]).reshape(-1, 4)
    uu = np.repeat(u_grid, len(dirs))

    def F(p):
        return data.value(np.einsum("ij,ij->i", p, p))

    H = numeric_complex_hessian(F, pts, step * np.maximum(1.0, np.sqrt(uu)))
    eig = np.linalg.eigvalsh(H)[:, 0]
    k = int(np.argmin(eig))
    by_u = eig.reshape(n_u, len(dirs)).min(axis=1)
    return ScanReport(data.t, float(eig[k]), pts[k], float(uu[k]), bool(eig[k] > 0), u_grid, by_u)


def largest_passing_t(r_inner: float = 0.25, r_outer: float = 0.5, t_lo: float = 0.05,
                      t_hi: float = 10.0, iterations: int = 30, **scan_kw) -> tuple[float, float]:
    """Bisection (on log t) for the positivity threshold; returns ``(t_pass, t_fail)``."""
    def ok(t):
        return positivity_scan(GluedKahlerData(t, r_inner, r_outer), **scan_kw).passed

    if not ok(t_lo):
        raise ValueError(f"scan already fails at t = {t_lo}")
    if ok(t_hi):
        return t_hi, math.inf
    lo, hi = math.log(t_lo), math.log(t_hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if ok(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    return math.exp(lo), math.exp(hi)


def convergence_table(ts=(0.2, 0.1, 0.05, 0.025), u_range=(0.5, 2.0), n: int = 201,
                      convention: str = "consistent") -> list[dict]:
    """``max |f_t - u|`` over a u-interval, scaled by ``t^2 |log t|``, with observed orders."""
    u = np.linspace(*u_range, n)
    rows = []
    for t in ts:
        err = float(np.max(np.abs(eh_potential(u, t, convention) - u)))
        rows.append({"t": t, "max_abs_diff": err, "ratio_to_t2logt": err / (t * t * abs(math.log(t)))})
    for a, b in zip(rows, rows[1:]):
        b["observed_order"] = math.log(a["max_abs_diff"] / b["max_abs_diff"]) / math.log(a["t"] / b["t"])
    return rows


# -- conformal normalization ---------------------------------------------------

@dataclass
class NormalizationResult:
    factors: np.ndarray  # nan at degenerate points
    degenerate: list[int]


def normalize_to_sqrt2(metric_field, eta, points) -> NormalizationResult:
    """Conformal factors ``c(p) = |eta|_{g'}(p) / sqrt 2`` so that ``|eta|_{c g'} = sqrt 2``.

    ``metric_field`` maps a point to a metric (or is a constant metric). For a
    complex form the norm is ``sqrt((|Re|^2 + |Im|^2) / 2)``.
    """
    out, bad = [], []
    for i, p in enumerate(np.atleast_2d(np.asarray(points, dtype=float))):
        g = metric_field(p) if callable(metric_field) else metric_field
        n = eta.norm(g, p) if isinstance(eta, ComplexForm) else norm(eta, g, p)
        if n == 0:
            out.append(math.nan)
            bad.append(i)
        else:
            out.append(n / math.sqrt(2))
    return NormalizationResult(np.array(out), bad)


# -- hyperkahler triples -------------------------------------------------------

@dataclass(frozen=True)
class HyperkahlerTriple:
    omega1: DifferentialForm
    omega2: DifferentialForm
    omega3: DifferentialForm

    def forms(self):
        return (self.omega1, self.omega2, self.omega3)

    def relations(self) -> np.ndarray:
        """Matrix of ``omega_i ^ omega_j`` as multiples of ``dx0 ^ dx1 ^ dx2 ^ dx3``."""
        f = self.forms()
        return np.array([[wedge(a, b).coeffs.get((0, 1, 2, 3), 0.0) for b in f] for a in f])

    def is_valid(self) -> bool:
        return bool(np.array_equal(self.relations(), 2.0 * np.eye(3)))


def standard_triple() -> HyperkahlerTriple:
    """``dx1dx2 + dx3dx4, dx1dx3 - dx2dx4, dx1dx4 + dx2dx3`` (0-based indices)."""
    return HyperkahlerTriple(dx(4, 0, 1) + dx(4, 2, 3), dx(4, 0, 2) - dx(4, 1, 3), dx(4, 0, 3) + dx(4, 1, 2))


def complex_package() -> HyperkahlerTriple:
    """``(omega, Re eta, Im eta)`` on C^2 with ``eta = dz1 ^ dz2``, interleaved coordinates.

    Under ``(x1, y1, x2, y2) = (x1, x2, x3, x4)`` this is the standard triple.
    """
    return standard_triple()

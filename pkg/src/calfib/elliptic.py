"""Weierstrass p on the torus C/(Z + tau Z) and loop integrals along horizontal circles."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class PoleError(ValueError):
    pass


def _divisor_sums(n: int, power: int) -> np.ndarray:
    out = np.zeros(n + 1)
    for d in range(1, n + 1):
        out[d::d] += float(d) ** power
    return out


def eisenstein_series(tau: complex, terms: int = 60) -> tuple[complex, complex, complex]:
    """Normalized ``E2, E4, E6`` by their q-expansions."""
    q = np.exp(2j * np.pi * tau)
    n = np.arange(1, terms + 1)
    qn = q ** n
    e2 = 1 - 24 * np.sum(_divisor_sums(terms, 1)[1:] * qn)
    e4 = 1 + 240 * np.sum(_divisor_sums(terms, 3)[1:] * qn)
    e6 = 1 - 504 * np.sum(_divisor_sums(terms, 5)[1:] * qn)
    return complex(e2), complex(e4), complex(e6)


@dataclass(frozen=True)
class EllipticData:
    """Lattice ``Z + tau Z`` and the truncation radius ``N`` of the lattice sums."""
    tau: complex = 1j
    N: int = 40

    def __post_init__(self):
        if complex(self.tau).imag <= 0:
            raise ValueError("Im tau must be positive")
        if self.N < 2:
            raise ValueError("N must be >= 2")

    @cached_property
    def lattice(self) -> np.ndarray:
        """Nonzero lattice points with ``|w| <= N``."""
        tau = complex(self.tau)
        m_max = int(np.ceil(self.N / tau.imag)) + 1
        n_max = int(np.ceil(self.N + abs(tau.real) * m_max)) + 1
        n, m = np.meshgrid(np.arange(-n_max, n_max + 1), np.arange(-m_max, m_max + 1), indexing="ij")
        w = (n + m * tau).ravel()
        return w[(np.abs(w) <= self.N) & (w != 0)]

    @cached_property
    def G(self) -> tuple[complex, complex, complex]:
        """Eisenstein sums ``G2`` (Eisenstein summation), ``G4``, ``G6``."""
        e2, e4, e6 = eisenstein_series(complex(self.tau))
        pi = np.pi
        return (pi ** 2 / 3) * e2, (pi ** 4 / 45) * e4, (2 * pi ** 6 / 945) * e6

    @cached_property
    def tails(self) -> tuple[complex, complex]:
        """``G4 - S4_N`` and ``G6 - S6_N``: the part of the Eisenstein sums outside the disk."""
        w = self.lattice
        return self.G[1] - np.sum(w ** -4.0), self.G[2] - np.sum(w ** -6.0)

    @property
    def invariants(self) -> tuple[complex, complex]:
        """``g2 = 60 G4``, ``g3 = 140 G6``."""
        return 60 * self.G[1], 140 * self.G[2]

    def doubled(self) -> "EllipticData":
        return EllipticData(self.tau, 2 * self.N)


def reduce_to_cell(z, tau: complex) -> np.ndarray:
    """Translate ``z`` by a lattice vector into the cell centred at 0."""
    z = np.asarray(z, dtype=complex)
    m = np.round(z.imag / tau.imag)
    z = z - m * tau
    return z - np.round(z.real)


def _check_pole(z, data: EllipticData, tol: float = 1e-8):
    r = reduce_to_cell(z, complex(data.tau))
    # the nearest lattice point to a centred point is 0 or one of its neighbours
    tau = complex(data.tau)
    d = np.min(np.abs(np.stack([r - (a + b * tau) for a in (-1, 0, 1) for b in (-1, 0, 1)])), axis=0)
    if np.any(d < tol):
        raise PoleError("z is within 1e-8 of a lattice point")


def weierstrass_p(z, data: EllipticData = EllipticData(), reduce: bool = True):
    """Truncated lattice sum for ``p(z)`` plus the Eisenstein tail correction.

    For ``|w| > N`` the summand expands as ``sum_k (k+1) z^k / w^(k+2)``; odd
    terms cancel in the symmetric sum, leaving the tail
    ``3 z^2 (G4 - S4_N) + 5 z^4 (G6 - S6_N)`` up to ``O(z^6 / N^6)``. With
    ``reduce`` the argument is first moved into the centred cell, which keeps
    ``|z|`` small in the tail expansion.
    """
    z = np.asarray(z, dtype=complex)
    _check_pole(z, data)
    if reduce:
        z = reduce_to_cell(z, complex(data.tau))
    w = data.lattice
    zz = z[..., None]
    body = 1 / z ** 2 + np.sum(1 / (zz - w) ** 2 - 1 / w ** 2, axis=-1)
    t4, t6 = data.tails
    out = body + 3 * z ** 2 * t4 + 5 * z ** 4 * t6
    return out if out.ndim else complex(out)


def weierstrass_p_prime(z, data: EllipticData = EllipticData(), reduce: bool = True):
    """``p'(z) = -2 sum_w (z - w)^-3`` with the derivative of the tail correction."""
    z = np.asarray(z, dtype=complex)
    _check_pole(z, data)
    if reduce:
        z = reduce_to_cell(z, complex(data.tau))
    w = data.lattice
    body = -2 / z ** 3 - 2 * np.sum(1 / (z[..., None] - w) ** 3, axis=-1)
    t4, t6 = data.tails
    out = body + 6 * z * t4 + 20 * z ** 3 * t6
    return out if out.ndim else complex(out)


def self_convergence(z, data: EllipticData = EllipticData()) -> float:
    """``max |p_N(z) - p_2N(z)|`` without cell reduction."""
    a = weierstrass_p(z, data, reduce=False)
    b = weierstrass_p(z, data.doubled(), reduce=False)
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def loop_integral(t: float, c: complex = 0.0, data: EllipticData = EllipticData(), points: int = 512,
                  include_p: bool = True) -> complex:
    """``integral over x in [0, 1] of (p + c)(x + t tau) dx`` by the periodic trapezoid rule."""
    if not 0.05 <= t <= 0.95:
        raise PoleError("t must lie in [0.05, 0.95] to stay away from the lattice")
    x = np.arange(points) / points
    vals = np.full(points, complex(c))
    if include_p:
        vals = vals + weierstrass_p(x + t * complex(data.tau), data)
    return complex(np.mean(vals))


@dataclass
class LoopReport:
    values: dict[float, complex]
    deviation: float
    expected: complex  # c - G2, the closed form of the loop integral

    @property
    def max_error(self) -> float:
        return max(abs(v - self.expected) for v in self.values.values())


def loop_integral_constancy(c: complex, t_values, data: EllipticData = EllipticData(), points: int = 512,
                            include_p: bool = True) -> LoopReport:
    """Loop integrals along ``y = t`` and their largest pairwise difference."""
    vals = {float(t): loop_integral(t, c, data, points, include_p) for t in t_values}
    v = np.array(list(vals.values()))
    dev = float(np.max(np.abs(v[:, None] - v[None, :]))) if len(v) else 0.0
    expected = complex(c) - (data.G[0] if include_p else 0)
    return LoopReport(vals, dev, expected)


def truncation_table(c: complex, t_values, tau: complex = 1j, Ns=(10, 20, 40, 80), points: int = 512):
    """Deviation and distance to the closed form as the truncation radius doubles."""
    rows = []
    for N in Ns:
        rep = loop_integral_constancy(c, t_values, EllipticData(tau, N), points)
        rows.append((N, rep.deviation, rep.max_error))
    return rows

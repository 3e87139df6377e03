"""Integer monodromy data, intertwiners and the mirror gluing identities."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lattice as la
from .fibration import CalibrationPackage, ImmersedGrid, cy3_eta, g2_triple
from .forms import DifferentialForm, dx, evaluate_batch, interior_product, pullback, wedge
from .orbifold import AffineTorusMap

# -- representations -----------------------------------------------------------


def dual_rep(A) -> list[list[int]]:
    """Inverse transpose of a unimodular integer matrix."""
    return la.transpose(la.unimodular_inverse(A))


@dataclass(frozen=True)
class IntegerRep:
    matrices: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        mats = tuple(tuple(tuple(int(x) for x in row) for row in m) for m in self.matrices)
        if not mats:
            raise ValueError("a representation needs at least one matrix")
        n = len(mats[0])
        for m in mats:
            if len(m) != n or any(len(r) != n for r in m):
                raise ValueError("all matrices must be square of the same size")
            if abs(la.det(m)) != 1:
                raise ValueError(f"matrix {m} is not unimodular")
        object.__setattr__(self, "matrices", mats)

    @property
    def rank(self) -> int:
        return len(self.matrices[0])

    def dual(self) -> "IntegerRep":
        return IntegerRep(tuple(tuple(map(tuple, dual_rep(m))) for m in self.matrices))


def intertwines(K, rep: IntegerRep) -> bool:
    """``K == A^T K A`` for every generator ``A``."""
    K = [list(r) for r in K]
    return all(la.matmul(la.matmul(la.transpose(A), K), A) == K for A in rep.matrices)


@dataclass(frozen=True)
class Intertwiner:
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if la.det(self.matrix) == 0:
            raise ValueError("intertwiner must be invertible")


def _equation_matrix(rep: IntegerRep) -> list[list[int]]:
    """Integer matrix of ``vec(K) -> vec(K - A^T K A)`` stacked over generators."""
    n = rep.rank
    rows = []
    for A in rep.matrices:
        for i in range(n):
            for j in range(n):
                # (A^T K A)_ij = sum_{p,q} A_pi K_pq A_qj
                row = [-A[p][i] * A[q][j] for p in range(n) for q in range(n)]
                row[i * n + j] += 1
                rows.append(row)
    return rows


def _enumerate_lattice_box(H: list[list[int]], bound: int):
    """Integer combinations of the echelon rows ``H`` with all entries in ``[-bound, bound]``."""
    if not H:
        yield [0] * 0
        return
    dim = len(H[0])
    pivots = [next(c for c, x in enumerate(row) if x) for row in H]

    def rec(i, acc, coeffs):
        if i == len(H):
            if all(abs(x) <= bound for x in acc):
                yield acc
            return
        piv, h = pivots[i], H[i][pivots[i]]
        # later rows vanish at this pivot column, so this entry is final
        lo = -((bound + acc[piv]) // h)
        hi = (bound - acc[piv]) // h
        for c in range(lo, hi + 1):
            new = [a + c * x for a, x in zip(acc, H[i])]
            # entries left of the next pivot are final too
            stop = pivots[i + 1] if i + 1 < len(H) else dim
            if all(abs(new[k]) <= bound for k in range(piv, stop)):
                yield from rec(i + 1, new, coeffs + [c])

    yield from rec(0, [0] * dim, [])


def solve_intertwiner(rep: IntegerRep, entry_bound: int) -> list[Intertwiner]:
    """All invertible integer ``K`` with entries in ``[-b, b]`` and ``K = A^T K A``."""
    if entry_bound < 1:
        raise ValueError("entry_bound must be >= 1")
    n = rep.rank
    kernel = la.integer_kernel(_equation_matrix(rep))
    if not kernel:
        return []  # only K = 0 solves the system
    H = la.hermite_normal_form(kernel)
    out = []
    for vec in _enumerate_lattice_box(H, entry_bound):
        K = [vec[i * n:(i + 1) * n] for i in range(n)]
        if la.det(K) != 0:
            if not intertwines(K, rep):
                raise AssertionError("kernel enumeration produced a non-solution")
            out.append(Intertwiner(tuple(map(tuple, K))))
    return sorted(out, key=lambda k: k.matrix)


def block_structure_check(A) -> bool:
    """True iff ``A`` has the form [[*, *, 0], [*, *, 0], [0, 0, 1]]."""
    if len(A) != 3 or any(len(r) != 3 for r in A):
        raise ValueError("block structure is defined for 3x3 matrices")
    return A[0][2] == 0 and A[1][2] == 0 and A[2][0] == 0 and A[2][1] == 0 and A[2][2] == 1


SL2_S = ((0, -1), (1, 0))
SL2_T = ((1, 1), (0, 1))


def embed_block(B) -> tuple[tuple[int, ...], ...]:
    return ((B[0][0], B[0][1], 0), (B[1][0], B[1][1], 0), (0, 0, 1))


def block_family() -> IntegerRep:
    """Generic monodromy with block form: SL(2, Z) generators on the 2-block."""
    return IntegerRep((embed_block(SL2_S), embed_block(SL2_T)))


# -- gluing maps ---------------------------------------------------------------

def mirror_glue_map(context: str) -> AffineTorusMap:
    """``mu`` on T^6 (interleaved coordinates) or ``eta`` on T^7."""
    if context == "cy3":
        # (x1, y1, x2, y2, x3, y3) -> (x1, -y2, x2, y1, x3, y3)
        return AffineTorusMap.signed_permutation([(1, 0), (-1, 3), (1, 2), (1, 1), (1, 4), (1, 5)], name="mu")
    if context == "g2-alpha":
        # (x1, ..., x7) -> (x1, -x4, x3, x2, x5, x6, x7)
        return AffineTorusMap.signed_permutation(
            [(1, 0), (-1, 3), (1, 2), (1, 1), (1, 4), (1, 5), (1, 6)], name="eta")
    raise ValueError(f"unknown context {context!r}")


def commutes(f: AffineTorusMap, g: AffineTorusMap) -> bool:
    return f.compose(g).same_as(g.compose(f))


# -- pullback relations ----------------------------------------------------------

@dataclass(frozen=True)
class Relation:
    source: str
    sign: int
    target: str

    def __str__(self):
        return f"{self.source} -> {'+' if self.sign > 0 else '-'}{self.target}"


def parse_relation(text: str) -> Relation:
    """``"omega -> -im_eta"`` style relation."""
    try:
        src, tgt = (s.strip() for s in text.split("->"))
        sign = -1 if tgt.startswith("-") else 1
        tgt = tgt.lstrip("+-").strip()
        if not src or not tgt:
            raise ValueError("empty form name")
    except ValueError as exc:
        raise ValueError(f"cannot parse relation {text!r}") from exc
    return Relation(src, sign, tgt)


def named_forms(context: str) -> dict[str, DifferentialForm]:
    if context == "cy3":
        eta = cy3_eta()
        return {"omega'": dx(6, 0, 1) + dx(6, 2, 3), "re_eta": eta.re, "im_eta": eta.im}
    if context == "g2-alpha":
        w1, w2, w3 = g2_triple()
        return {"w1": w1, "w2": w2, "w3": w3}
    raise ValueError(f"unknown context {context!r}")


def relation_set(context: str) -> list[Relation]:
    """The relations claimed for the gluing maps, as printed."""
    if context == "cy3":
        return [parse_relation(s) for s in ("omega' -> +im_eta", "im_eta -> -omega'", "re_eta -> +re_eta")]
    if context == "g2-alpha":
        return [parse_relation(s) for s in ("w1 -> +w3", "w3 -> -w1", "w2 -> +w2")]
    raise ValueError(f"unknown context {context!r}")


@dataclass
class RelationReport:
    verbatim: dict[str, bool]            # each relation with the forms as given
    convention: tuple[str, ...] | None   # forms whose sign is flipped; None if no convention works
    residues: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.convention is not None

    def describe(self) -> str:
        if self.convention is None:
            return "no global sign convention reconciles the relations"
        if not self.convention:
            return "all relations hold with the forms as given"
        return "all relations hold after replacing " + ", ".join(f"{n} by -{n}" for n in self.convention)


def pullback_relations_check(m: AffineTorusMap, relations: Sequence[Relation],
                             forms: dict[str, DifferentialForm], tol: float = 1e-12) -> RelationReport:
    """Check ``m^* source = sign * target`` for each relation.

    A convention flips the sign of a fixed set of named forms everywhere; the
    smallest set under which every relation holds is reported. Per-relation
    sign choices are not allowed.
    """
    J = np.asarray(m.linear, dtype=float)
    names = sorted({r.source for r in relations} | {r.target for r in relations})
    missing = [n for n in names if n not in forms]
    if missing:
        raise KeyError(f"unknown forms {missing}")

    def residue(r: Relation, flip: set) -> float:
        s_src = -1.0 if r.source in flip else 1.0
        s_tgt = -1.0 if r.target in flip else 1.0
        diff = pullback(J, forms[r.source]) * s_src - forms[r.target] * (r.sign * s_tgt)
        return float(np.max(np.abs(diff.components()))) if diff.coeffs else 0.0

    verbatim = {str(r): residue(r, set()) <= tol for r in relations}
    residues = {str(r): residue(r, set()) for r in relations}
    for size in range(len(names) + 1):
        for flip in itertools.combinations(names, size):
            if all(residue(r, set(flip)) <= tol for r in relations):
                return RelationReport(verbatim, tuple(flip), residues)
    return RelationReport(verbatim, None, residues)


# -- period map --------------------------------------------------------------------

def _check_fiber_volume(fiber: ImmersedGrid):
    vol = np.sqrt(np.abs(np.linalg.det(np.einsum("mik,mil->mkl", fiber.frames, fiber.frames))))
    if float(fiber.weights @ vol) <= 0:
        raise ValueError("fiber has zero volume")


def period_map_alpha(u: DifferentialForm, v, pkg: CalibrationPackage, fiber: ImmersedGrid) -> float:
    """``alpha(u)(v) = integral over the fiber of (i_v Im phi) ^ u``."""
    if pkg.mode != "cy":
        raise ValueError("period map needs a CY package")
    if u.degree != 1 or pkg.im_phi.degree - 1 + u.degree != fiber.param_dim:
        raise ValueError("degree mismatch between the class, Im phi and the fiber")
    _check_fiber_volume(fiber)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    integrand = wedge(interior_product(v, pkg.im_phi), u)
    if not integrand.coeffs:
        return 0.0
    return float(fiber.weights @ evaluate_batch(integrand, fiber.frames))


@dataclass(frozen=True)
class BasisMap:
    source_labels: tuple[str, ...]
    target_labels: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]  # column i = image of source i

    def __post_init__(self):
        M = np.array(self.matrix)
        n = len(self.source_labels)
        if M.shape != (len(self.target_labels), n):
            raise ValueError("matrix shape does not match the labels")
        if not (np.all(np.abs(M).sum(axis=0) == 1) and np.all(np.abs(M).sum(axis=1) == 1)
                and np.all(np.isin(M, (-1, 0, 1)))):
            raise ValueError("matrix must be a signed permutation")


def paper_rho() -> BasisMap:
    """``beta^1 -> -beta_2, beta^2 -> beta_1, [dy3] -> [S^1]``."""
    return BasisMap(("beta^1", "beta^2", "[dy3]"), ("beta_1", "beta_2", "[S^1]"),
                    ((0, 1, 0), (-1, 0, 0), (0, 0, 1)))


@dataclass
class MirrorCheck:
    equal: bool
    alpha_matrix: np.ndarray  # [i, j] = alpha(u_i)(v_j)
    rho_side: np.ndarray      # [i, j] = (xi' o rho)(u_i)(v_j)
    normals: np.ndarray       # columns v_1, v_2, v_3
    classes: tuple[DifferentialForm, ...]


def _product_oriented(fiber: ImmersedGrid, pkg_eta_re: DifferentialForm, t_axes=(0, 1)) -> ImmersedGrid:
    """Reorder the first two frame vectors so ``Re eta`` is positive on them."""
    fr = np.array(fiber.frames)
    if evaluate_batch(pkg_eta_re, fr[:1, :, list(t_axes)])[0] < 0:
        fr[:, :, list(t_axes)] = fr[:, :, list(t_axes[::-1])]
    return ImmersedGrid(fiber.points, fr, fiber.weights)


def symplectic_mirror_check(rho: BasisMap, pkg: CalibrationPackage, fiber: ImmersedGrid,
                            orientation: str = "product", tol: float = 1e-12) -> MirrorCheck:
    """Compare ``alpha`` with ``xi' o rho`` on a fiber ``T x S^1`` in a tube.

    ``T`` is spanned by the first two frame vectors and the circle by the
    third. With ``orientation="product"`` the fiber is oriented as ``T x S^1``
    with ``T`` oriented by ``Re eta``; ``"calibration"`` keeps the frames as
    given. The classes ``beta^1, beta^2`` are the dual basis of the oriented
    frame of ``T``; the normals ``v_i`` satisfy ``i_{v_i} omega* = beta^i`` on
    the fiber with ``omega* = Im eta + dx3 ^ dy3``.
    """
    if fiber.param_dim != 3 or fiber.ambient_dim != 6:
        raise ValueError("expects a 3-dimensional fiber in R^6")
    _check_fiber_volume(fiber)
    eta = cy3_eta()
    if orientation == "product":
        fiber = _product_oriented(fiber, eta.re)
    elif orientation != "calibration":
        raise ValueError(f"unknown orientation {orientation!r}")
    frame = fiber.frames[0]
    # cohomology classes: dual basis of the frame, as ambient 1-forms
    dual = np.linalg.pinv(frame)  # rows are covectors with dual[i] @ frame[:, j] = delta_ij
    classes = tuple(DifferentialForm(1, 6, {(k,): float(dual[i, k]) for k in range(6)}) for i in range(3))

    omega_star = eta.im + dx(6, 4, 5)
    normal_basis = np.eye(6)[:, [0, 2, 4]]  # x1, x2, x3
    C = np.zeros((3, 3))
    for k in range(3):
        restricted = interior_product(normal_basis[:, k], omega_star)
        C[:, k] = [evaluate_batch(restricted, frame[None, :, [i]])[0] for i in range(3)]
    normals = normal_basis @ np.linalg.inv(C)

    A = np.array([[period_map_alpha(u, normals[:, j], pkg, fiber) for j in range(3)] for u in classes])
    R = np.array(rho.matrix, dtype=float).T
    return MirrorCheck(bool(np.allclose(A, R, rtol=0, atol=tol)), A, R, normals, classes)


# -- text format for representations -------------------------------------------

def dumps_rep(rep: IntegerRep) -> str:
    """One matrix per line (rows separated by ';'), reusing the torus-map layout."""
    lines = []
    for i, m in enumerate(rep.matrices):
        rows = "; ".join(" ".join(str(x) for x in r) for r in m)
        lines.append(f"A{i}: {rows} | " + " ".join("0" for _ in m))
    return "\n".join(lines) + "\n"


def loads_rep(text: str) -> IntegerRep:
    from .orbifold import loads
    maps, _ = loads(text)
    if any(any(x != Fraction(0) for x in m.translation) for m in maps):
        raise ValueError("monodromy matrices carry no translation")
    return IntegerRep(tuple(m.linear for m in maps))

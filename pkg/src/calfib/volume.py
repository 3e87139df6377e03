"""Ball-volume comparison on discretized submanifolds.

The comparison baseline is the ball of radius ``r`` in the k-dimensional
space form of constant curvature ``K``. Measured volumes come from simplicial
meshes: extrinsic balls use ambient distance (optionally on a flat torus),
intrinsic balls use shortest paths in the mesh edge graph.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import csgraph
from scipy.spatial import ConvexHull


def _check_admissible(K: float, t: float, strict: bool = True):
    if K > 0:
        limit = math.pi / math.sqrt(K)
        if t > limit or (strict and t >= limit):
            raise ValueError(f"t = {t} is not admissible for K = {K} (limit pi/sqrt(K) = {limit})")


def sn(K: float, x):
    """The K-sine: ``sin(sqrt K x)/sqrt K``, ``x`` or ``sinh(sqrt(-K) x)/sqrt(-K)``."""
    x = np.asarray(x, dtype=float)
    if K > 0:
        s = math.sqrt(K)
        return np.sin(s * x) / s
    if K < 0:
        s = math.sqrt(-K)
        return np.sinh(s * x) / s
    return x


def comparison_F(K: float, t: float, theta):
    """Solution of ``F'' + K F = 0`` with ``F(0) = 0``, ``F(t) = 1``."""
    if t <= 0:
        raise ValueError("t must be positive")
    _check_admissible(K, t)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta > t):
        raise ValueError("theta must lie in [0, t]")
    return sn(K, theta) / sn(K, t)


def alpha(K: float, k: int, t: float) -> float:
    """``int_0^t F_t(theta)^(k-1) dtheta``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if K == 0:
        return t / k
    val, _ = integrate.quad(lambda th: float(comparison_F(K, t, th)) ** (k - 1), 0.0, t,
                            epsabs=1e-14, epsrel=1e-12)
    return val


def sphere_area(k: int) -> float:
    """Volume of the unit sphere ``S^(k-1)``."""
    return 2 * math.pi ** (k / 2) / math.gamma(k / 2)


def space_form_ball_volume(K: float, k: int, r: float) -> float:
    if r < 0:
        raise ValueError("r must be nonnegative")
    _check_admissible(K, r, strict=False)
    if K == 0:
        return sphere_area(k) * r ** k / k
    val, _ = integrate.quad(lambda x: float(sn(K, x)) ** (k - 1), 0.0, r, epsabs=1e-14, epsrel=1e-12)
    return sphere_area(k) * val


def diameter_bound(v: float, epsilon: float, r: float) -> float:
    """``4 r N`` with ``N = v / epsilon``."""
    if min(v, epsilon, r) <= 0:
        raise ValueError("all arguments must be positive")
    return 4.0 * r * (v / epsilon)


# -- meshes ----------------------------------------------------------------

def _simplex_volumes(edges: np.ndarray) -> np.ndarray:
    """Volumes of simplices given edge vectors of shape (m, n, k)."""
    k = edges.shape[2]
    gram = np.einsum("mik,mil->mkl", edges, edges)
    return np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(k)


@dataclass(frozen=True, eq=False)
class MeshedSubmanifold:
    vertices: np.ndarray         # (V, n)
    faces: np.ndarray            # (F, k+1) vertex indices
    period: float | None = None  # flat-torus period for min-image displacements
    areas: np.ndarray = field(init=False, repr=False)
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        F = np.asarray(self.faces, dtype=np.int64)
        if F.ndim != 2 or F.shape[1] < 2:
            raise ValueError("faces must be simplices given by vertex indices")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "faces", F)
        base = V[F[:, 0]]
        vecs = np.stack([self.displacement(base, V[F[:, j]]) for j in range(1, F.shape[1])], axis=2)
        areas = _simplex_volumes(vecs)
        if np.any(areas <= 0):
            raise ValueError("degenerate face with nonpositive area")
        object.__setattr__(self, "areas", areas)
        pairs = np.vstack([F[:, [i, j]] for i, j in itertools.combinations(range(F.shape[1]), 2)])
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
        object.__setattr__(self, "edges", pairs)
        n_comp, _ = csgraph.connected_components(self._graph(1), directed=False)
        if n_comp != 1:
            raise ValueError(f"mesh is disconnected ({n_comp} components)")

    @property
    def dim(self) -> int:
        return self.faces.shape[1] - 1

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def displacement(self, a, b) -> np.ndarray:
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.period is not None:
            d = d - self.period * np.round(d / self.period)
        return d

    def _graph(self, rings: int = 1) -> sparse.csr_matrix:
        nv = len(self.vertices)
        i, j = self.edges[:, 0], self.edges[:, 1]
        adj = sparse.coo_matrix((np.ones(len(i)), (i, j)), shape=(nv, nv)).tocsr()
        adj = adj + adj.T
        if rings > 1:
            reach = adj.copy()
            for _ in range(rings - 1):
                reach = reach + reach @ adj
            reach = sparse.triu(reach, k=1).tocoo()
            i, j = reach.row, reach.col
        lengths = np.linalg.norm(self.displacement(self.vertices[i], self.vertices[j]), axis=1)
        g = sparse.coo_matrix((lengths, (i, j)), shape=(nv, nv)).tocsr()
        return g.maximum(g.T)

    def graph_distances(self, sources, rings: int = 1) -> np.ndarray:
        """Shortest-path distances in the edge graph (with ``rings``-hop chords)."""
        return csgraph.dijkstra(self._graph(rings), directed=False, indices=sources)

    def ambient_distances(self, p: int) -> np.ndarray:
        return np.linalg.norm(self.displacement(self.vertices[p], self.vertices), axis=1)

    def nearest_vertex(self, x) -> int:
        return int(np.argmin(np.linalg.norm(self.displacement(np.asarray(x, float), self.vertices), axis=1)))

    def fractional_volume(self, dist: np.ndarray, r: float) -> tuple[float, float]:
        """Volume with faces weighted by the fraction of their vertices within ``r``.

        Also returns the total area of faces that straddle the boundary, a
        bound on the counting error.
        """
        inside = (dist <= r)[self.faces]
        frac = inside.mean(axis=1)
        straddle = (frac > 0) & (frac < 1)
        return float(self.areas @ frac), float(self.areas[straddle].sum())

    # ASCII format: "period P", "v x1 x2 ...", "f i j ..." (0-based)
    def dumps(self) -> str:
        lines = [] if self.period is None else [f"period {self.period!r}"]
        lines += ["v " + " ".join(repr(float(x)) for x in v) for v in self.vertices]
        lines += ["f " + " ".join(str(int(i)) for i in f) for f in self.faces]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "MeshedSubmanifold":
        verts, faces, period = [], [], None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:]])
                elif parts[0] == "f":
                    faces.append([int(x) for x in parts[1:]])
                elif parts[0] == "period":
                    period = float(parts[1])
                else:
                    raise ValueError(f"unknown record {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
        return cls(np.array(verts), np.array(faces), period)


def intrinsic_ball_volume(L: MeshedSubmanifold, p: int, r: float, rings: int = 1) -> float:
    if r <= 0:
        raise ValueError("r must be positive")
    return L.fractional_volume(L.graph_distances(p, rings), r)[0]


def extrinsic_ball_volume(L: MeshedSubmanifold, p: int, r: float) -> float:
    if r <= 0:
        raise ValueError("r must be positive")
    return L.fractional_volume(L.ambient_distances(p), r)[0]


def graph_diameter(L: MeshedSubmanifold, rings: int = 1, sources=None) -> float:
    src = np.arange(len(L.vertices)) if sources is None else np.asarray(sources)
    return float(np.max(L.graph_distances(src, rings)))


@dataclass(frozen=True)
class MarginReport:
    r: float
    K: float
    k: int
    mode: str
    measured: float
    space_form: float
    margin: float
    allowance: float
    straddle_area: float
    passed: bool

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_ball_comparison(L: MeshedSubmanifold, p: int, r: float, K: float, mode: str = "extrinsic",
                           allowance: float = 0.0, rings: int = 1) -> MarginReport:
    """``margin = measured - vol(B^K(r))``; passes iff ``margin >= -allowance``."""
    if mode == "extrinsic":
        dist = L.ambient_distances(p)
    elif mode == "intrinsic":
        dist = L.graph_distances(p, rings)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if r <= 0:
        raise ValueError("r must be positive")
    measured, straddle = L.fractional_volume(dist, r)
    ref = space_form_ball_volume(K, L.dim, r)
    margin = measured - ref
    return MarginReport(r, K, L.dim, mode, measured, ref, margin, allowance, straddle, margin >= -allowance)


# -- mesh builders -------------------------------------------------------------

def _grid_triangles(nx: int, ny: int) -> np.ndarray:
    """Triangles of an (nx+1) x (ny+1) vertex grid, alternating diagonals."""
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            if (i + j) % 2 == 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    return np.array(tris)


def square_mesh(n: int, half_width: float = 1.0) -> MeshedSubmanifold:
    """Flat square ``[-w, w]^2`` in R^2 with ``n`` cells per side."""
    t = np.linspace(-half_width, half_width, n + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return MeshedSubmanifold(np.column_stack([X.ravel(), Y.ravel()]), _grid_triangles(n, n))


def holomorphic_graph_mesh(n: int, half_width: float = 1.0) -> MeshedSubmanifold:
    """``{(z, z^2): |z| <= half_width}`` in C^2 = R^4 as (x1, y1, x2, y2)."""
    t = np.linspace(-half_width, half_width, n + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    x, y = X.ravel(), Y.ravel()
    verts = np.column_stack([x, y, x * x - y * y, 2 * x * y])
    tris = _grid_triangles(n, n)
    inside = (x * x + y * y <= half_width ** 2 * (1 + 1e-12))[tris].all(axis=1)
    tris = tris[inside]
    used = np.unique(tris)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return MeshedSubmanifold(verts[used], remap[tris])


def holomorphic_graph_exact(r: float) -> float:
    """Area of ``{(z, z^2)}`` inside the ambient ball of radius ``r`` about 0.

    The ball condition is ``rho^2 + rho^4 <= r^2`` for ``rho = |z|`` and the area
    density is ``1 + 4 rho^2``, giving ``pi rho^2 + 2 pi rho^4``.
    """
    rho2 = (-1.0 + math.sqrt(1.0 + 4.0 * r * r)) / 2.0
    return math.pi * rho2 + 2.0 * math.pi * rho2 ** 2


def _kuhn_simplices(k: int) -> list[np.ndarray]:
    """Corner offsets of the k! simplices of the Kuhn triangulation of a cube."""
    out = []
    for perm in itertools.permutations(range(k)):
        corner = np.zeros(k, dtype=int)
        verts = [corner.copy()]
        for ax in perm:
            corner[ax] = 1
            verts.append(corner.copy())
        out.append(np.array(verts))
    return out


def flat_torus_mesh(n: int, free_axes, ambient_dim: int, base=None) -> MeshedSubmanifold:
    """Affine subtorus of the unit flat torus along coordinate ``free_axes``."""
    k = len(free_axes)
    ticks = np.arange(n)
    grid = np.stack(np.meshgrid(*([ticks] * k), indexing="ij"), axis=-1).reshape(-1, k)
    strides = n ** np.arange(k - 1, -1, -1)
    faces = []
    for offs in _kuhn_simplices(k):
        corners = (grid[:, None, :] + offs[None]) % n
        faces.append(corners @ strides)
    faces = np.vstack(faces)
    verts = np.tile(np.zeros(ambient_dim) if base is None else np.asarray(base, float), (len(grid), 1))
    verts[:, list(free_axes)] = grid / n
    return MeshedSubmanifold(verts, faces, period=1.0)


def sphere_mesh(n_points: int, radius: float = 1.0) -> MeshedSubmanifold:
    """Triangulated round sphere from a Fibonacci point set (convex hull)."""
    i = np.arange(n_points) + 0.5
    phi = np.arccos(1 - 2 * i / n_points)
    theta = math.pi * (1 + 5 ** 0.5) * i
    pts = radius * np.column_stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)])
    return MeshedSubmanifold(pts, ConvexHull(pts).simplices)


def quartic_torus_mesh(n_u: int, n_v: int, major: float = 1.0, minor: float = 0.5) -> MeshedSubmanifold:
    """Torus of revolution; with the defaults this is the zero set of the quartic torus."""
    u = np.arange(n_u) * 2 * math.pi / n_u
    v = np.arange(n_v) * 2 * math.pi / n_v
    U, V = np.meshgrid(u, v, indexing="ij")
    R = major + minor * np.cos(V)
    verts = np.column_stack([(R * np.cos(U)).ravel(), (R * np.sin(U)).ravel(), (minor * np.sin(V)).ravel()])
    idx = np.arange(n_u * n_v).reshape(n_u, n_v)
    tris = []
    for i in range(n_u):
        for j in range(n_v):
            a, b = idx[i, j], idx[(i + 1) % n_u, j]
            c, d = idx[(i + 1) % n_u, (j + 1) % n_v], idx[i, (j + 1) % n_v]
            tris += [(a, b, c), (a, c, d)]
    return MeshedSubmanifold(verts, np.array(tris))


def self_convergence_allowance(measure, coarse: int, fine: int, factor: float = 2.0) -> tuple[float, float, float]:
    """``(value_fine, value_coarse, factor * |value_fine - value_coarse|)`` for ``measure(resolution)``."""
    vf, vc = measure(fine), measure(coarse)
    return vf, vc, factor * abs(vf - vc)

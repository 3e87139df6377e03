"""Verification batteries run by the command-line front end.

Each suite is a list of named cases; a case returns a :class:`Case` with the
measured value, the expected value, the tolerance and optional array data for
plotting. Shared expensive inputs are cached per resolution.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import elliptic, fibration, forms, metrics, mirror, orbifold, realalg, volume

SUITES = ("orbifold", "calibration", "metrics", "volume", "mirror", "realalg")

DEFAULT_RESOLUTIONS = {
    "comass_samples": 100_000,
    "fibers": 100,
    "fiber_grid": 4,
    "scan_u": 64,
    "scan_dir": 32,
    "graph": 256,
    "torus": 32,
    "viro": 64,
    "sphere_theta": 400,
    "quadrature": 512,
    "lattice_N": 40,
}

DEFAULT_TOLERANCES = {
    "exact": 0.0,
    "comass": 1e-9,
    "comass_reach": 1e-4,
    "defect": 1e-12,
    "det": 1e-9,
    "mirror": 1e-12,
    "factorization": 1e-10,
    "loop": 1e-8,
}


@dataclass
class Case:
    id: str
    paper_ref: str  # the operation exercised, as module.operation
    measured: Any
    expected: Any
    tolerance: float
    passed: bool
    data: dict | None = None  # {"columns": [...], "rows": [[...], ...]} for array cases

    def to_dict(self) -> dict:
        return {"id": self.id, "paper_ref": self.paper_ref, "measured": _jsonable(self.measured),
                "expected": _jsonable(self.expected), "tolerance": self.tolerance, "pass": bool(self.passed),
                "data": _jsonable(self.data)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class SuiteContext:
    seed: int = 0
    resolutions: dict = field(default_factory=lambda: dict(DEFAULT_RESOLUTIONS))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def res(self, name: str) -> int:
        return int(self.resolutions[name])

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])


def _exact(id_, ref, measured, expected) -> Case:
    return Case(id_, ref, measured, expected, 0.0, measured == expected)


# -- orbifold -------------------------------------------------------------------

def _locus_cases(prefix, ref, f, count, dim):
    loci = orbifold.fixed_locus(f)
    dims = sorted({c.dim for c in loci})
    return [_exact(f"{prefix}-fixed-locus-count", ref, len(loci), count),
            _exact(f"{prefix}-fixed-locus-dim", ref, dims, [dim])]


def orbifold_cases(ctx: SuiteContext) -> list[Callable[[], list[Case]]]:
    ref = "torus-orbifold.fixed_locus"

    def cy3():
        a, b = orbifold.cy3_alpha(), orbifold.cy3_beta()
        out = _locus_cases("alpha", ref, a, 16, 2) + _locus_cases("beta", ref, b, 16, 2)
        out += _locus_cases("alpha-fixed-set-convention", ref, orbifold.cy3_alpha("fixed-set"), 16, 2)
        out.append(_exact("cy3-loci-disjoint", "torus-orbifold.loci_pairwise_disjoint",
                          orbifold.loci_pairwise_disjoint([a, b]).disjoint, True))
        out.append(_exact("alpha-beta-composition-free", "torus-orbifold.is_free", orbifold.is_free(a @ b), True))
        out.append(_exact("cy3-group-order", "torus-orbifold.group_closure", orbifold.cy3_group().order, 4))
        return out

    def g2():
        maps = [orbifold.g2_alpha(), orbifold.g2_beta(), orbifold.g2_gamma()]
        out = []
        for name, f in zip(("g2-alpha", "g2-beta", "g2-gamma"), maps):
            out += _locus_cases(name, ref, f, 16, 3)
            # a 3-torus along coordinate axes carries 4^3 points of the quarter grid
            out.append(_exact(f"{name}-grid-oracle", "torus-orbifold.fixed_locus",
                              len(orbifold.brute_force_fixed_points(f, 4)), 16 * 4 ** 3))
        out.append(_exact("g2-loci-disjoint", "torus-orbifold.loci_pairwise_disjoint",
                          orbifold.loci_pairwise_disjoint(maps).disjoint, True))
        free = all(orbifold.is_free(f @ g) for f, g in ((maps[0], maps[1]), (maps[0], maps[2]), (maps[1], maps[2])))
        out.append(_exact("g2-compositions-free", "torus-orbifold.is_free", free, True))
        out.append(_exact("g2-group-order", "torus-orbifold.group_closure", orbifold.g2_group().order, 8))
        return out

    return [cy3, g2]


# -- calibration -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _tube_loci(family: str):
    if family == "cy3":
        maps = [orbifold.cy3_alpha(), orbifold.cy3_beta()]
    else:
        maps = [orbifold.g2_alpha(), orbifold.g2_beta(), orbifold.g2_gamma()]
    return tuple(c for f in maps for c in orbifold.fixed_locus(f))


TUBE_RADIUS = 0.125


def random_fibers(family: str, count: int, seed: int):
    rng = np.random.default_rng(seed)
    loci = _tube_loci(family)
    return [fibration.random_fiber_outside(family, loci, TUBE_RADIUS, rng) for _ in range(count)]


def calibration_cases(ctx: SuiteContext):
    def comass():
        re_eta3 = forms.holomorphic_volume(3).re
        res = forms.comass_estimate(re_eta3, samples=ctx.res("comass_samples"), seed=ctx.seed)
        ok = res.value <= 1 + ctx.tol("comass") and res.value >= 1 - ctx.tol("comass_reach")
        return [Case("comass-re-holomorphic-volume", "forms-core.comass_estimate", res.value, 1.0,
                     ctx.tol("comass"), ok),
                Case("comass-sample-max", "forms-core.comass_estimate", res.sample_max, 1.0, ctx.tol("comass"),
                     res.sample_max <= 1 + ctx.tol("comass"))]

    def cy3_fibers():
        pkg = fibration.cy3_package()
        tol = ctx.tol("defect")
        worst_def, worst_ratio = 0.0, 0.0
        for fib in random_fibers("cy3", ctx.res("fibers"), ctx.seed):
            L = fibration.make_fiber("cy3", *fib.params, ctx.res("fiber_grid"))
            d = fibration.slag_defect(L, pkg)
            worst_def = max(worst_def, d.max_omega, d.max_im_phi)
            r = fibration.calibration_ratio(L, pkg.re_phi)
            worst_ratio = max(worst_ratio, abs(r.min_ratio - 1), abs(r.max_ratio - 1))
        return [Case("cy3-fibers-slag-defect", "calibration-fibration.slag_defect", worst_def, 0.0, tol,
                     worst_def <= tol),
                Case("cy3-fibers-calibration-ratio", "calibration-fibration.calibration_ratio", worst_ratio, 0.0,
                     tol, worst_ratio <= tol)]

    def g2_fibers():
        pkg = fibration.g2_package()
        tol = ctx.tol("defect")
        worst, worst_ratio = 0.0, 0.0
        for fib in random_fibers("g2", ctx.res("fibers"), ctx.seed):
            L = fibration.make_fiber("g2", *fib.params, ctx.res("fiber_grid"))
            worst = max(worst, fibration.coassoc_defect(L, pkg.phi3))
            r = fibration.calibration_ratio(L, pkg.star_phi, pkg.metric)
            worst_ratio = max(worst_ratio, abs(r.min_ratio - 1), abs(r.max_ratio - 1))
        return [Case("g2-fibers-coassoc-defect", "calibration-fibration.coassoc_defect", worst, 0.0, tol,
                     worst <= tol),
                Case("g2-fibers-calibration-ratio", "calibration-fibration.calibration_ratio", worst_ratio, 0.0,
                     tol, worst_ratio <= tol)]

    def g2_orbit():
        rng = np.random.default_rng(ctx.seed)
        pts = rng.random((100, 7))
        out = []
        for name, phi in (("phi0", fibration.g2_phi()), ("mirror-phi", fibration.g2_mirror_phi())):
            ok = all(fibration.g2_orbit_test(phi.at(p)).is_g2 for p in pts)
            out.append(_exact(f"g2-orbit-{name}", "calibration-fibration.g2_orbit_test", ok, True))
        pinned = fibration.g2_orbit_test(fibration.g2_phi(fibration.g2_triple("pinned"))).is_g2
        out.append(_exact("g2-orbit-pinned-triple-split", "calibration-fibration.g2_orbit_test", pinned, False))
        return out

    def tubes():
        out = []
        for fam in ("cy3", "g2"):
            sep = fibration.min_locus_separation(_tube_loci(fam))
            out.append(Case(f"{fam}-tube-separation", "calibration-fibration.fiber_meets_neighborhood", sep,
                            2 * TUBE_RADIUS, 1e-12, sep >= 2 * TUBE_RADIUS - 1e-12))
        return out

    return [comass, cy3_fibers, g2_fibers, g2_orbit, tubes]


# -- metrics ---------------------------------------------------------------------

def eh_det_grid(n_u: int = 61, ts=(0.01, 0.1, 1.0)) -> float:
    """``max |det g - 1|`` of the complex Hessian over a u-t grid and random directions."""
    rng = np.random.default_rng(1)
    worst = 0.0
    for t in ts:
        for u in np.geomspace(1e-3, 1e3, n_u):
            d = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            z = math.sqrt(u) * d / np.linalg.norm(d)
            worst = max(worst, abs(np.linalg.det(metrics.eh_kahler_form(z, t)).real - 1))
    return worst


def metrics_cases(ctx: SuiteContext):
    def det():
        w = eh_det_grid()
        return [Case("eh-det-one", "resolution-metrics.eh_potential", w, 0.0, ctx.tol("det"), w <= ctx.tol("det"))]

    def positivity():
        kw = dict(n_u=ctx.res("scan_u"), n_dir=ctx.res("scan_dir"), seed=ctx.seed)
        rep = metrics.positivity_scan(metrics.GluedKahlerData(0.05), **kw)
        rows = [[float(u), float(e)] for u, e in zip(rep.u_grid, rep.min_by_u)]
        lo, hi = metrics.largest_passing_t(iterations=12, **kw)
        return [Case("glued-positivity-t0.05", "resolution-metrics.positivity_scan", rep.min_eigenvalue, 0.0, 0.0,
                     rep.passed, {"columns": ["u [chart units]", "min_eigenvalue [dimensionless]"], "rows": rows}),
                Case("positivity-threshold", "resolution-metrics.positivity_scan", [lo, hi], None, 0.0,
                     0.05 <= lo < hi)]

    def convergence():
        rows = metrics.convergence_table()
        ok = all(r["max_abs_diff"] <= 3 * r["t"] ** 2 * abs(math.log(r["t"])) for r in rows)
        return [Case("eh-convergence-table", "resolution-metrics.eh_potential",
                     [r["max_abs_diff"] for r in rows], None, 0.0, ok,
                     {"columns": ["t [dimensionless]", "max_abs_diff [chart units]", "ratio_to_t2logt [dimensionless]"],
                      "rows": [[r["t"], r["max_abs_diff"], r["ratio_to_t2logt"]] for r in rows]})]

    def triple():
        return [_exact("hyperkahler-triple-valid", "resolution-metrics.complex_package",
                       metrics.complex_package().is_valid(), True)]

    return [det, positivity, convergence, triple]


# -- volume -------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _graph_mesh(n):
    return volume.holomorphic_graph_mesh(n)


@lru_cache(maxsize=None)
def _torus_mesh(n):
    return volume.flat_torus_mesh(n, (1, 3, 5), 6)


def graph_margins(n: int, radii=(0.1, 0.2, 0.3, 0.4)) -> list[volume.MarginReport]:
    """Extrinsic ball margins of the holomorphic graph, allowance from halving the resolution."""
    fine, coarse = _graph_mesh(n), _graph_mesh(n // 2)
    pf, pc = fine.nearest_vertex(np.zeros(4)), coarse.nearest_vertex(np.zeros(4))
    out = []
    for r in radii:
        allow = 2 * abs(volume.extrinsic_ball_volume(fine, pf, r) - volume.extrinsic_ball_volume(coarse, pc, r))
        out.append(volume.verify_ball_comparison(fine, pf, r, 0.0, "extrinsic", allowance=allow))
    return out


def torus_margins(n: int, radii=(0.1, 0.2, 0.25)) -> list[volume.MarginReport]:
    """Extrinsic margins of a flat fiber; the mesh error is the larger of straddle area and self-convergence."""
    fine, coarse = _torus_mesh(n), _torus_mesh(n // 2)
    out = []
    for r in radii:
        conv = 2 * abs(volume.extrinsic_ball_volume(fine, 0, r) - volume.extrinsic_ball_volume(coarse, 0, r))
        rep = volume.verify_ball_comparison(fine, 0, r, 0.0, "extrinsic")
        err = max(conv, rep.straddle_area)
        out.append(volume.MarginReport(r, 0.0, rep.k, rep.mode, rep.measured, rep.space_form, rep.margin, err,
                                       rep.straddle_area, abs(rep.margin) <= err))
    return out


def alpha_monotone(K: float, k: int = 3, samples: int = 50) -> bool:
    upper = math.pi / math.sqrt(K) if K > 0 else 5.0
    ts = np.linspace(upper / (samples + 1), upper * samples / (samples + 1), samples)
    vals = [volume.alpha(K, k, float(t)) for t in ts]
    return bool(np.all(np.diff(vals) > 0))


def volume_cases(ctx: SuiteContext):
    cols = ["r [ambient units]", "measured [area]", "space_form [area]", "margin [area]"]

    def graph():
        reps = graph_margins(ctx.res("graph"))
        out = [Case(f"margin-K0-k2-r{m.r}", "volume-comparison.verify_ball_comparison", m.margin, 0.0,
                    m.allowance, m.passed) for m in reps]
        out.append(Case("holomorphic-graph-margins", "volume-comparison.verify_ball_comparison",
                        [m.margin for m in reps], None, 0.0, all(m.passed for m in reps),
                        {"columns": cols, "rows": [[m.r, m.measured, m.space_form, m.margin] for m in reps]}))
        return out

    def torus():
        reps = torus_margins(ctx.res("torus"))
        out = [Case(f"flat-fiber-equality-K0-k3-r{m.r}", "volume-comparison.verify_ball_comparison", m.margin, 0.0,
                    m.allowance, m.passed) for m in reps]
        out.append(Case("flat-fiber-margins", "volume-comparison.verify_ball_comparison", [m.margin for m in reps],
                        None, 0.0, all(m.passed for m in reps),
                        {"columns": cols, "rows": [[m.r, m.measured, m.space_form, m.margin] for m in reps]}))
        return out

    def monotone():
        return [_exact(f"alpha-increasing-K{K:+d}", "volume-comparison.alpha", alpha_monotone(K), True)
                for K in (1, -1)]

    return [graph, torus, monotone]


# -- mirror ---------------------------------------------------------------------------

def mirror_cases(ctx: SuiteContext):
    tol = ctx.tol("mirror")

    def intertwiner():
        sols = mirror.solve_intertwiner(mirror.block_family(), 1)
        target = [[0, 1], [-1, 0]]
        found = any([list(r[:2]) for r in s.matrix[:2]] == target for s in sols)
        return [_exact("block-family-intertwiner", "monodromy-mirror.solve_intertwiner", found, True),
                _exact("block-family-solution-count", "monodromy-mirror.solve_intertwiner", len(sols), 4)]

    def relations():
        out = []
        for ctx_name, expect in (("cy3", ["im_eta"]), ("g2-alpha", [])):
            rep = mirror.pullback_relations_check(mirror.mirror_glue_map(ctx_name), mirror.relation_set(ctx_name),
                                                  mirror.named_forms(ctx_name), tol)
            conv = None if rep.convention is None else list(rep.convention)
            out.append(Case(f"pullback-relations-{ctx_name}", "monodromy-mirror.pullback_relations_check",
                            conv, expect, tol, rep.passed))
        return out

    def period():
        L = fibration.make_fiber("cy3", 0.3, 0.7, 0.45, ctx.res("fiber_grid"))
        chk = mirror.symplectic_mirror_check(mirror.paper_rho(), fibration.cy3_package(), L, tol=tol)
        return [Case("period-map-equals-rho", "monodromy-mirror.symplectic_mirror_check",
                     chk.alpha_matrix, chk.rho_side, tol, chk.equal)]

    def commutation():
        mu = mirror.mirror_glue_map("cy3")
        return [_exact("mu-commutes-alpha", "monodromy-mirror.mirror_glue_map",
                       mirror.commutes(mu, orbifold.cy3_alpha()), True),
                Case("mu-commutes-beta", "monodromy-mirror.mirror_glue_map",
                     mirror.commutes(mu, orbifold.cy3_beta()), False, 0.0, True)]

    return [intertwiner, relations, period, commutation]


# -- real-algebraic and elliptic -----------------------------------------------------

VIRO_BOX = ((-1.5, 1.5),) * 3
VIRO_EPS = 0.02


def viro_runs() -> dict[str, realalg.RealPolynomial]:
    """Three-variable analogues: sphere and plane meeting in a circle."""
    p, q = realalg.sphere_hyperplane_pair(3)
    one = realalg.RealPolynomial.constant(3, 1)
    crossing = realalg.two_disc_h(3, centre=realalg.Fraction(1, 2), radius_sq=realalg.Fraction(1, 4))
    return {
        "unperturbed": realalg.viro_perturb(p, q, one, 0),
        "positive-h": realalg.viro_perturb(p, q, one, VIRO_EPS),
        "two-disc-h": realalg.viro_perturb(p, q, realalg.two_disc_h(3), VIRO_EPS),
        "crossing-h": realalg.viro_perturb(p, q, crossing, VIRO_EPS),
    }


VIRO_EXPECTED = {"unperturbed": 1, "positive-h": 2, "two-disc-h": 2, "crossing-h": 1}


def realalg_cases(ctx: SuiteContext):
    def factorization():
        rng = np.random.default_rng(ctx.seed)
        P = rng.uniform(-3, 3, (10_000, 3)).T
        err = float(np.max(np.abs(realalg.quartic_torus_eval(*P) - realalg.quartic_torus_factored(*P))))
        return [Case("quartic-torus-factorization", "real-holo-lab.quartic_torus_eval", err, 0.0,
                     ctx.tol("factorization"), err <= ctx.tol("factorization"))]

    def circles():
        res = realalg.sphere_circle_count(realalg.two_disc_h(3), ctx.res("sphere_theta"), 2 * ctx.res("sphere_theta"))
        return [_exact("sphere-circle-count", "real-holo-lab.sphere_circle_count", res.count, 4),
                _exact("sphere-circle-transversal", "real-holo-lab.sphere_circle_count", res.transversal, True)]

    def viro():
        n = ctx.res("viro")
        out = []
        for name, f in viro_runs().items():
            a = realalg.component_count(f, VIRO_BOX, n).count
            b = realalg.component_count(f, VIRO_BOX, 2 * n).count
            out.append(Case(f"viro-{name}-components", "real-holo-lab.component_count", [a, b],
                            [VIRO_EXPECTED[name]] * 2, 0.0, a == b == VIRO_EXPECTED[name]))
        return out

    def loop():
        data = elliptic.EllipticData(1j, ctx.res("lattice_N"))
        rep = elliptic.loop_integral_constancy(0.5, [0.25, 0.4, 0.6], data, ctx.res("quadrature"))
        table = elliptic.truncation_table(0.5, [0.25, 0.4, 0.6], Ns=(10, 20, 40, 80), points=ctx.res("quadrature"))
        return [Case("loop-integral-constancy", "real-holo-lab.loop_integral_constancy", rep.deviation, 0.0,
                     ctx.tol("loop"), rep.deviation < ctx.tol("loop")),
                Case("loop-integral-truncation", "real-holo-lab.loop_integral_constancy",
                     [r[1] for r in table], None, 0.0, all(a[2] > b[2] for a, b in zip(table, table[1:])),
                     {"columns": ["N [lattice units]", "deviation [dimensionless]", "error_vs_closed_form [dimensionless]"],
                      "rows": [list(r) for r in table]})]

    return [factorization, circles, viro, loop]


BUILDERS = {"orbifold": orbifold_cases, "calibration": calibration_cases, "metrics": metrics_cases,
            "volume": volume_cases, "mirror": mirror_cases, "realalg": realalg_cases}


def run_cases(name: str, ctx: SuiteContext, parallel: bool = False) -> list[Case]:
    if name not in BUILDERS:
        raise KeyError(f"unknown suite {name!r}")
    thunks = BUILDERS[name](ctx)
    if parallel:
        with ThreadPoolExecutor() as ex:
            groups = list(ex.map(lambda f: f(), thunks))
    else:
        groups = [f() for f in thunks]
    return [c for g in groups for c in g]

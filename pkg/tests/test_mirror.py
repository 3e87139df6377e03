import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calfib import fibration as Fb
from calfib import forms as F
from calfib import mirror as Mi
from calfib import orbifold as O

unimodular2 = st.sampled_from([Mi.SL2_S, Mi.SL2_T, ((1, 0), (1, 1)), ((2, 1), (1, 1)), ((-1, 0), (0, -1)),
                               ((1, 0), (0, -1))])


def brute_force_intertwiners(rep, bound):
    """Oracle: test every integer matrix in the box."""
    n = rep.rank
    vals = range(-bound, bound + 1)
    As = [np.array(A) for A in rep.matrices]
    out = []
    for entries in itertools.product(vals, repeat=n * n):
        K = np.array(entries).reshape(n, n)
        if round(np.linalg.det(K)) != 0 and all(np.array_equal(A.T @ K @ A, K) for A in As):
            out.append(tuple(map(tuple, K.tolist())))
    return sorted(out)


# -- dual representation --------------------------------------------------------------

def test_dual_identity():
    assert Mi.dual_rep([[1, 0], [0, 1]]) == [[1, 0], [0, 1]]


def test_dual_example():
    assert Mi.dual_rep([[1, 1], [0, 1]]) == [[1, 0], [-1, 1]]


def test_dual_rejects_non_unimodular():
    with pytest.raises(ValueError):
        Mi.dual_rep([[2, 0], [0, 1]])


@given(unimodular2)
def test_dual_involutive(A):
    assert Mi.dual_rep(Mi.dual_rep(A)) == [list(r) for r in A]


@given(st.integers(-5, 5), st.integers(-5, 5))
def test_dual_multiplicative_on_commuting(a, b):
    A = np.array([[1, a], [0, 1]])
    B = np.array([[1, b], [0, 1]])
    got = Mi.dual_rep((A @ B).tolist())
    assert got == (np.array(Mi.dual_rep(A.tolist())) @ np.array(Mi.dual_rep(B.tolist()))).tolist()


def test_rep_validation():
    with pytest.raises(ValueError):
        Mi.IntegerRep((((2, 0), (0, 1)),))
    assert Mi.block_family().rank == 3
    assert Mi.block_family().dual().dual() == Mi.block_family()


# -- intertwiners --------------------------------------------------------------------

def test_block_family_matches_brute_force():
    rep = Mi.block_family()
    got = [k.matrix for k in Mi.solve_intertwiner(rep, 1)]
    assert got == brute_force_intertwiners(rep, 1)
    assert len(got) == 4


def test_block_family_contains_symplectic_block():
    sols = Mi.solve_intertwiner(Mi.block_family(), 1)
    target = ((0, 1, 0), (-1, 0, 0), (0, 0, 1))
    assert target in [k.matrix for k in sols]


def test_rank2_sl2_contains_j():
    sols = Mi.solve_intertwiner(Mi.IntegerRep((Mi.SL2_S, Mi.SL2_T)), 1)
    assert ((0, 1), (-1, 0)) in [k.matrix for k in sols]


def test_trivial_rep_gives_all_invertible():
    rep = Mi.IntegerRep((((1, 0), (0, 1)),))
    sols = Mi.solve_intertwiner(rep, 1)
    assert len(sols) == 48  # 81 sign matrices minus 33 singular ones
    assert [k.matrix for k in sols] == brute_force_intertwiners(rep, 1)


def test_minus_identity_changes_nothing():
    base = Mi.IntegerRep((Mi.SL2_S, Mi.SL2_T))
    with_minus = Mi.IntegerRep((Mi.SL2_S, Mi.SL2_T, ((-1, 0), (0, -1))))
    assert Mi.solve_intertwiner(base, 2) == Mi.solve_intertwiner(with_minus, 2)


@given(st.lists(unimodular2, min_size=1, max_size=3))
def test_solutions_satisfy_equation(mats):
    rep = Mi.IntegerRep(tuple(mats))
    for k in Mi.solve_intertwiner(rep, 1):
        for A in rep.matrices:
            A = np.array(A)
            assert np.array_equal(A.T @ np.array(k.matrix) @ A, np.array(k.matrix))


def test_no_nonzero_solution():
    # an orientation-reversing generator kills the symplectic form
    rep = Mi.IntegerRep((Mi.SL2_S, Mi.SL2_T, ((1, 0), (0, -1))))
    assert Mi.solve_intertwiner(rep, 3) == []


def test_solve_rejects_bad_bound():
    with pytest.raises(ValueError):
        Mi.solve_intertwiner(Mi.block_family(), 0)


def test_intertwiner_must_be_invertible():
    with pytest.raises(ValueError):
        Mi.Intertwiner(((1, 1), (1, 1)))


# -- block structure ---------------------------------------------------------------

@pytest.mark.parametrize("A, expected", [
    (((0, 1, 0), (-1, 0, 0), (0, 0, 1)), True),
    (((1, 0, 0), (0, 1, 0), (0, 0, 1)), True),
    (((1, 0, 1), (0, 1, 0), (0, 0, 1)), False),
])
def test_block_structure(A, expected):
    assert Mi.block_structure_check(A) is expected


def test_block_family_generators_have_block_form():
    assert all(Mi.block_structure_check(A) for A in Mi.block_family().matrices)


# -- gluing maps ------------------------------------------------------------------

def test_mu_squared():
    mu = Mi.mirror_glue_map("cy3")
    expected = O.AffineTorusMap.signed_permutation([(s, i) for i, s in enumerate([1, -1, 1, -1, 1, 1])])
    assert (mu @ mu).same_as(expected)


def test_eta_squared():
    eta = Mi.mirror_glue_map("g2-alpha")
    expected = O.AffineTorusMap.signed_permutation([(s, i) for i, s in enumerate([1, -1, 1, -1, 1, 1, 1])])
    assert (eta @ eta).same_as(expected)


def test_mu_commutes_with_alpha():
    assert Mi.commutes(Mi.mirror_glue_map("cy3"), O.cy3_alpha())


def test_mu_does_not_commute_with_beta():
    # beta negates z1 but not z2, while mu exchanges y1 and y2
    assert not Mi.commutes(Mi.mirror_glue_map("cy3"), O.cy3_beta())


def test_unknown_context():
    with pytest.raises(ValueError):
        Mi.mirror_glue_map("k3")


# -- pullback relations ----------------------------------------------------------------

def test_parse_relation():
    r = Mi.parse_relation("omega' -> -im_eta")
    assert (r.source, r.sign, r.target) == ("omega'", -1, "im_eta")
    assert str(r) == "omega' -> -im_eta"
    with pytest.raises(ValueError):
        Mi.parse_relation("omega")


def test_eta_relations_hold_verbatim():
    rep = Mi.pullback_relations_check(Mi.mirror_glue_map("g2-alpha"), Mi.relation_set("g2-alpha"),
                                      Mi.named_forms("g2-alpha"))
    assert rep.passed and rep.convention == ()
    assert all(rep.verbatim.values())


def test_mu_relations_need_one_global_flip():
    rep = Mi.pullback_relations_check(Mi.mirror_glue_map("cy3"), Mi.relation_set("cy3"), Mi.named_forms("cy3"))
    assert rep.passed and rep.convention == ("im_eta",)
    assert not rep.verbatim["omega' -> +im_eta"]
    assert rep.verbatim["re_eta -> +re_eta"]
    assert "im_eta by -im_eta" in rep.describe()


def test_mu_pullback_direct():
    # direct computation: mu^* omega' = -Im eta
    forms = Mi.named_forms("cy3")
    J = np.asarray(Mi.mirror_glue_map("cy3").linear, dtype=float)
    got = F.pullback(J, forms["omega'"])
    assert np.allclose(got.components(), -forms["im_eta"].components())


@given(st.lists(st.sampled_from(["omega'", "re_eta", "im_eta"]), min_size=1, max_size=3))
def test_identity_passes_any_self_relation(names):
    rels = [Mi.Relation(n, 1, n) for n in names]
    rep = Mi.pullback_relations_check(O.AffineTorusMap.identity(6), rels, Mi.named_forms("cy3"))
    assert rep.passed and rep.convention == ()


def test_unreconcilable_relations_reported():
    rels = [Mi.parse_relation("re_eta -> +re_eta"), Mi.parse_relation("re_eta -> -re_eta")]
    rep = Mi.pullback_relations_check(O.AffineTorusMap.identity(6), rels, Mi.named_forms("cy3"))
    assert not rep.passed and rep.convention is None
    assert rep.residues["re_eta -> -re_eta"] > 0


def test_unknown_form_name():
    with pytest.raises(KeyError):
        Mi.pullback_relations_check(O.AffineTorusMap.identity(6), [Mi.parse_relation("a -> +b")], {})


# -- period map ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def pkg():
    return Fb.cy3_package()


@pytest.fixture(scope="module")
def fiber():
    return Fb.make_fiber("cy3", 0.3, 0.7, 0.45, 4)


def test_period_map_zero_vector(pkg, fiber):
    assert Mi.period_map_alpha(F.dx(6, 1), np.zeros(6), pkg, fiber) == 0.0


def test_period_map_degree_mismatch(pkg, fiber):
    with pytest.raises(ValueError):
        Mi.period_map_alpha(F.dx(6, 0, 1), np.ones(6), pkg, fiber)


@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_period_map_bilinear(c):
    pkg = Fb.cy3_package()
    fiber = Fb.make_fiber("cy3", 0.3, 0.7, 0.45, 2)
    u1, u2 = F.dx(6, 1), F.dx(6, 3) + F.dx(6, 5)
    v1, v2 = np.eye(6)[0], np.eye(6)[2] - np.eye(6)[4]
    u = u1 * c[0] + u2 * c[1]
    v = c[2] * v1 + c[3] * v2
    lhs = Mi.period_map_alpha(u, v, pkg, fiber)
    rhs = sum(a * b * Mi.period_map_alpha(uu, vv, pkg, fiber)
              for a, uu in ((c[0], u1), (c[1], u2)) for b, vv in ((c[2], v1), (c[3], v2)))
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_zero_volume_fiber_rejected(pkg):
    L = Fb.ImmersedGrid(np.zeros((1, 6)), np.zeros((1, 6, 3)) + np.eye(6)[:, [1, 1, 1]], np.ones(1))
    with pytest.raises(ValueError, match="zero volume"):
        Mi.period_map_alpha(F.dx(6, 1), np.eye(6)[0], pkg, L)


def test_basis_map_must_be_signed_permutation():
    with pytest.raises(ValueError):
        Mi.BasisMap(("a", "b"), ("c", "d"), ((1, 1), (0, 1)))


def test_symplectic_mirror_holds(pkg, fiber):
    chk = Mi.symplectic_mirror_check(Mi.paper_rho(), pkg, fiber)
    assert chk.equal
    # alpha(beta^1) = -v^2, alpha(beta^2) = v^1, alpha([dy3]) = the circle class
    assert np.allclose(chk.alpha_matrix, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


@pytest.mark.parametrize("col", [0, 1, 2])
def test_flipped_rho_detected(pkg, fiber, col):
    M = np.array(Mi.paper_rho().matrix)
    M[:, col] *= -1
    bad = Mi.BasisMap(Mi.paper_rho().source_labels, Mi.paper_rho().target_labels, tuple(map(tuple, M.tolist())))
    assert not Mi.symplectic_mirror_check(bad, pkg, fiber).equal


def test_calibration_orientation_flips_circle_entry(pkg, fiber):
    chk = Mi.symplectic_mirror_check(Mi.paper_rho(), pkg, fiber, orientation="calibration")
    assert chk.alpha_matrix[2, 2] == pytest.approx(-1.0, abs=1e-12)


def test_mirror_check_zero_volume(pkg):
    L = Fb.ImmersedGrid(np.zeros((1, 6)), np.zeros((1, 6, 3)), np.ones(1))
    with pytest.raises(ValueError):
        Mi.symplectic_mirror_check(Mi.paper_rho(), pkg, L)


# -- text format -------------------------------------------------------------------------

def test_rep_round_trip():
    rep = Mi.block_family()
    assert Mi.loads_rep(Mi.dumps_rep(rep)) == rep

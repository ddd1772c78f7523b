import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from biortho import (
    ConstructionError,
    Delta,
    DeltaDeriv,
    HermiteBasis,
    PlaneWave,
    RankOneMap,
    Regular,
    TestFunction,
    apply_p0,
    default_battery,
    deformed_action_closed,
    delta_term,
    dual_apply,
    inner,
    make_deformed,
    pair,
    quasi_basis,
)
from biortho.rankone import add2_residual, overlap_by_quadrature

from conftest import ALPHAS, rankone_map

PI_QUARTER = math.pi ** -0.25
E0_FOURIER_AT_1 = 0.45558067201133257  # quad oracle of <e_0, theta_1>

finite = st.floats(-2.0, 2.0, allow_nan=False)
complexes = st.builds(complex, finite, finite)
SIZE = 20


@st.composite
def rankone_inputs(draw):
    """Random (u, v, alpha) with <u, v> = 1 and 1 + alpha bounded away from 0."""
    basis = HermiteBasis(SIZE)
    cu = np.array(draw(st.lists(complexes, min_size=6, max_size=6)) + [0j] * (SIZE - 6))
    cw = np.array(draw(st.lists(complexes, min_size=6, max_size=6)) + [0j] * (SIZE - 6))
    norm2 = np.vdot(cu, cu).real
    assume(norm2 > 0.1)
    cv = cw + (1.0 - np.vdot(cu, cw)) * cu / norm2
    alpha = draw(complexes)
    assume(abs(1.0 + alpha) > 0.2)
    return TestFunction(cu, basis), TestFunction(cv, basis), alpha


def growth(smap):
    """Bound on |T| |T^-1| for the map."""
    uv = smap.u.norm() * smap.v.norm()
    return (1.0 + abs(smap.alpha) * uv) * (1.0 + abs(smap.beta) * uv)


def test_beta_and_constraint():
    smap = rankone_map("symmetric", 1.0)
    assert smap.beta == -0.5
    for alpha in ALPHAS:
        assert rankone_map("asymmetric", alpha).constraint_residual() <= 1e-14


def test_guards(basis64):
    e0 = basis64.element(0)
    with pytest.raises(ConstructionError, match=r"\|1\+alpha\|"):
        RankOneMap(e0, e0, -1.0)
    with pytest.raises(ConstructionError, match="<u,v> = 1"):
        RankOneMap(e0, 2.0 * e0, 1.0)
    with pytest.raises(ConstructionError):
        RankOneMap(e0, basis64.element(1), 1.0)


def test_actions_on_e0():
    smap = rankone_map("asymmetric", 1j)
    e0, e1 = smap.basis.element(0), smap.basis.element(1)
    # T e_0 = e_0 + i (e_0 + e_1)
    np.testing.assert_allclose(smap.apply_T(e0).coeffs, (e0 + 1j * (e0 + e1)).coeffs)
    # T^dag e_1 = e_1 + conj(i) <v, e_1> u = e_1 - i e_0
    np.testing.assert_allclose(smap.apply_Tdag(e1).coeffs, (e1 - 1j * e0).coeffs)


def test_eta_structure(basis64):
    smap = rankone_map("symmetric", 1.0)
    eta = dual_apply(smap, "T", Delta(1.0))
    (w0, d0), (w1, d1) = eta.terms
    assert d0 == Delta(1.0) and w0 == 1.0
    assert isinstance(d1, Regular) and d1.kernel is smap.v
    assert w1 == pytest.approx(PI_QUARTER * math.exp(-0.5), rel=1e-14)


@pytest.mark.parametrize("case", ["symmetric", "asymmetric"])
@pytest.mark.parametrize("alpha", ALPHAS)
def test_dual_atoms_agree_with_duality(case, alpha):
    smap = rankone_map(case, alpha)
    battery = default_battery(smap.basis)
    atoms = [Delta(0.3), DeltaDeriv(-1.0, 2), PlaneWave(1.0), Regular(battery.get("gaussian:1,1"))]
    for F in atoms:
        T_F = dual_apply(smap, "T", F)
        Tinvdag_F = dual_apply(smap, "Tinvdag", F)
        for _, phi in battery:
            assert pair(T_F, phi) == pytest.approx(pair(F, smap.apply_Tdag(phi)), abs=1e-12)
            assert pair(Tinvdag_F, phi) == pytest.approx(pair(F, smap.apply_Tinv(phi)), abs=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_closed_form_matches_composition(alpha):
    smap = rankone_map("asymmetric", alpha)
    ops = make_deformed(smap)
    for _, f in default_battery(smap.basis):
        for which in ("q", "p"):
            diff = deformed_action_closed(smap, which, f) - ops.operator(which)(f)
            assert diff.norm() <= 1e-12 * f.norm()


def test_delta_term_parity_and_value():
    smap = rankone_map("symmetric", 1.0)
    e0 = smap.basis.element(0)
    # beta <e0,e0> q0 e0 + alpha (<q0 e0, e0> + ...) e0 = -1/2 x e0
    dq = delta_term(smap, "q0", e0)
    np.testing.assert_allclose(dq.coeffs[:2], [0.0, -0.5 / math.sqrt(2.0)], atol=1e-15)
    assert dq.parity() == -1
    assert delta_term(smap, "p0", e0).norm() > 1e-3
    with pytest.raises(ValueError):
        delta_term(smap, "x", e0)


def test_quasi_basis_pairs():
    smap = rankone_map("asymmetric", -0.5 + 0.5j)
    phi, psi = quasi_basis(smap, 1)
    assert inner(phi, psi) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(IndexError):
        quasi_basis(smap, smap.basis.size)


def test_overlap_oracle():
    u = HermiteBasis(32).element(0)
    assert overlap_by_quadrature(u, 1.0) == pytest.approx(E0_FOURIER_AT_1, abs=1e-13)


def test_add2_is_diagnostic_only():
    smap = rankone_map("symmetric", 1.0)
    f = default_battery(smap.basis).get("gaussian:1,1")
    assert add2_residual(smap, 0.5, f) > 1e-3
    assert add2_residual(rankone_map("symmetric", 1e-15), 0.5, f) < 1e-13


@settings(max_examples=30, deadline=None)
@given(rankone_inputs())
def test_random_maps_round_trip(inputs):
    u, v, alpha = inputs
    smap = RankOneMap(u, v, alpha)
    assert smap.constraint_residual() < 1e-12
    scale = growth(smap)
    for n in (0, 3, 7):
        f = u.basis.element(n) + 0.5j * u.basis.element(n + 1)
        for a, b in (("T", "Tinv"), ("Tinv", "T"), ("Tdag", "Tinvdag"), ("Tinvdag", "Tdag")):
            back = smap.action(b)(smap.action(a)(f))
            assert (back - f).norm() <= 1e-13 * scale * f.norm()


@settings(max_examples=30, deadline=None)
@given(rankone_inputs())
def test_random_maps_commutator(inputs):
    u, v, alpha = inputs
    smap = RankOneMap(u, v, alpha)
    ops = make_deformed(smap, battery=default_battery(u.basis))
    f = u.basis.element(2) - 0.3 * u.basis.element(5)
    comm = ops.q(ops.p(f)) - ops.p(ops.q(f))
    scale = growth(smap) ** 2
    assert (comm - 1j * f).norm() <= 1e-11 * scale


@settings(max_examples=30, deadline=None)
@given(rankone_inputs(), st.integers(0, SIZE - 3), st.integers(0, SIZE - 3))
def test_random_maps_quasi_biorthonormal(inputs, n, m):
    u, v, alpha = inputs
    smap = RankOneMap(u, v, alpha)
    phi_n, _ = quasi_basis(smap, n)
    _, psi_m = quasi_basis(smap, m)
    scale = growth(smap)
    assert abs(inner(phi_n, psi_m) - (n == m)) <= 1e-12 * scale


def test_p0_fast_path_matches_derivative():
    smap = rankone_map("symmetric", 1.0)
    e0 = smap.basis.element(0)
    # p e_0 = T p0 T^-1 e_0 = T p0 (e_0 / 2) = p0 e_0 / 2, since <e_0, e_1> = 0
    np.testing.assert_allclose(
        deformed_action_closed(smap, "p", e0).coeffs, 0.5 * apply_p0(e0).coeffs, atol=1e-15
    )

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biortho import (
    BoundaryLeakageError,
    Delta,
    DeltaDeriv,
    GreenMap,
    HermiteBasis,
    PlaneWave,
    SpillError,
    TestFunction,
    default_battery,
    dual_apply,
    eigen_q_closed,
    pair,
)
from biortho.green import AMPLITUDE, DECAY, kernel, kernel_mass, multiplier
from biortho.spectral import gaussian

# (G * g)(x) and (conj(G) * g)(x) for g = exp(-x^2/2), by scipy.integrate.quad
CONVOLUTION_ORACLE = {
    0.0: (0.6767627066904134, 0.2682329533846285),
    1.0: (0.5551607668671052, 0.13371438275561592),
    2.5: (0.18996541845913448, -0.1042459673152717),
}

finite = st.floats(-1.0, 1.0, allow_nan=False)
complexes = st.builds(complex, finite, finite)


@pytest.fixture(scope="module")
def gauss(green_map):
    return gaussian(green_map.basis)


def test_kernel_constants():
    assert abs(kernel(0.0)) == pytest.approx(0.5, rel=1e-15)
    assert kernel(0.0) == pytest.approx((1.0 + 1.0j) / (2.0 * math.sqrt(2.0)), rel=1e-15)
    # G'' = (c^2) G away from 0 with c^2 = i, so (1 + i d^2/dx^2) G = (1 - 1) G there
    assert DECAY ** 2 == pytest.approx(1j)
    assert AMPLITUDE * 2.0 / DECAY == pytest.approx(1.0)
    assert kernel(1.5, adjoint=True) == pytest.approx(np.conj(kernel(1.5)))


def test_kernel_mass_is_one():
    assert abs(kernel_mass() - 1.0) < 1e-12
    assert abs(kernel_mass(extent=5.0) - 1.0) < 1e-12


def test_multiplier_values():
    assert multiplier(0.0) == 1.0
    assert multiplier(1.0) == pytest.approx((1.0 + 1.0j) / 2.0)
    assert multiplier(1.0, adjoint=True) == pytest.approx((1.0 - 1.0j) / 2.0)


def test_eta_at_its_own_point():
    for x0 in (-2.0, 0.0, 1.0, 3.0):
        eta = eigen_q_closed(x0)
        assert abs(eta(x0) - (1.0 + 1.0j) / (2.0 * math.sqrt(2.0))) < 1e-15
        assert eta.breakpoints == (x0,)
    # |eta_x0(x0 + 1)| / |eta_x0(x0 + 2)| = exp(1 / sqrt(2))
    eta = eigen_q_closed(0.5)
    ratio = abs(eta(1.5)) / abs(eta(2.5))
    assert ratio == pytest.approx(math.exp(1.0 / math.sqrt(2.0)), rel=1e-14)


@pytest.mark.parametrize("x", sorted(CONVOLUTION_ORACLE))
def test_convolution_oracle(green_map, gauss, x):
    re, im = CONVOLUTION_ORACLE[x]
    assert green_map.apply_T(gauss)(x) == pytest.approx(complex(re, im), abs=1e-9)
    assert green_map.apply_Tdag(gauss)(x) == pytest.approx(complex(re, -im), abs=1e-9)
    assert green_map.apply_T_multiplier(gauss)(x) == pytest.approx(complex(re, im), abs=1e-9)


def test_inverse_is_second_order(green_map, gauss):
    x = np.array([-1.0, 0.0, 0.7, 2.0])
    g = np.exp(-x * x / 2)
    d2 = (x * x - 1.0) * g
    np.testing.assert_allclose(green_map.apply_Tinv(gauss)(x), g + 1j * d2, atol=1e-13)
    np.testing.assert_allclose(green_map.apply_Tinvdag(gauss)(x), g - 1j * d2, atol=1e-13)


def test_routes_agree_on_battery(green_map):
    battery = default_battery(green_map.basis)
    grid = green_map.apply_many("T", battery.functions())
    for f, g in zip(battery.functions(), grid):
        assert (green_map.apply_T_multiplier(f) - g).norm() <= 1e-10 * f.norm()


def test_batched_matches_single(green_map):
    battery = default_battery(green_map.basis)
    fs = battery.functions()[:3]
    for name in ("T", "Tdag"):
        batched = green_map.apply_many(name, fs)
        for f, g in zip(fs, batched):
            np.testing.assert_allclose(g.coeffs, green_map.action(name)(f).coeffs, atol=1e-15)


def test_spill_guard(green_map):
    top = green_map.basis.element(green_map.basis.size - 1)
    with pytest.raises(SpillError) as info:
        green_map.apply_Tinv(top)
    assert info.value.spill > 0.0
    relaxed = GreenMap(green_map.basis, spill_tol=np.inf)
    assert relaxed.apply_Tinv(top).spill > 0.0


def test_boundary_leakage():
    small = GreenMap(HermiteBasis(64), extent=4.0, points=512)
    with pytest.raises(BoundaryLeakageError, match="grid edge"):
        small.apply_T(gaussian(small.basis, center=2.0))


def test_constructor_validation():
    with pytest.raises(ValueError):
        GreenMap(HermiteBasis(16), route="fft")
    with pytest.raises(ValueError):
        GreenMap(HermiteBasis(16), points=1001)


def test_dual_atoms(green_map, gauss):
    mu = dual_apply(green_map, "T", PlaneWave(1.0))
    assert mu.terms[0][0] == pytest.approx((1.0 + 1.0j) / 2.0)
    up = dual_apply(green_map, "Tinvdag", Delta(0.5))
    assert up.terms[1] == (-1j, DeltaDeriv(0.5, 2))
    chained = dual_apply(green_map, "Tinvdag", DeltaDeriv(0.5, 1))
    assert chained.terms[1][1] == DeltaDeriv(0.5, 3)
    mu_up = dual_apply(green_map, "Tinvdag", PlaneWave(2.0))
    assert mu_up.terms[0][0] == pytest.approx(1.0 + 4.0j)
    assert green_map.dual_atom("T", DeltaDeriv(0.0, 1)) is None
    # <T delta_x0, g> = (T^dag g)(x0)
    for x0 in (-2.0, 0.0, 1.0, 3.0):
        eta = dual_apply(green_map, "T", Delta(x0))
        assert pair(eta, gauss) == pytest.approx(green_map.apply_Tdag(gauss)(x0), abs=1e-9)


def test_matrix_routes_agree_on_leading_block(green_map):
    n = green_map.basis.size
    eye = np.eye(n, dtype=complex)[:, :16]
    grid = green_map._convolve_coeffs(eye, adjoint=False)
    mult = green_map._multiplier_coeffs(eye, adjoint=False)
    assert np.abs(grid[:16] - mult[:16]).max() < 1e-10
    # T^dag is the conjugate transpose of T on the truncated space
    dag = green_map._convolve_coeffs(eye, adjoint=True)
    assert np.abs(dag[:16] - grid[:16].conj().T).max() < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.lists(complexes, min_size=8, max_size=8))
def test_random_low_modes_round_trip(green_map, c):
    coeffs = np.zeros(green_map.basis.size, dtype=complex)
    coeffs[:8] = c
    f = TestFunction(coeffs, green_map.basis)
    if f.norm() == 0.0:
        return
    back = green_map.apply_Tinv(green_map.apply_T(f))
    assert (back - f).norm() <= 1e-9 * f.norm()
    back = green_map.apply_T(green_map.apply_Tinv(f))
    assert (back - f).norm() <= 1e-9 * f.norm()

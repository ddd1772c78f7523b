import numpy as np
import pytest

from biortho import HermiteBasis, default_battery, project
from biortho.battery import CENTERS, GUARD_MODES, WIDTHS, gaussian_member

TAIL_LIMIT = 1e-8
# tail mass of the top N/8 modes at N = 64, from quad against scipy Hermite polynomials
WIDE_OFFSET_TAIL = 2.981826574226841e-08
TAIL_OVER_LIMIT = {"gaussian:3,2", "gaussian:-3,2"}

NAMES = default_battery(HermiteBasis(64)).names


def test_membership():
    battery = default_battery(HermiteBasis(64))
    assert len(battery) == 6 + len(CENTERS) * len(WIDTHS) + 1 == 22
    assert battery.names[:6] == tuple(f"hermite:{n}" for n in range(6))
    assert battery.names[-1] == "modulated:2"
    assert "gaussian:-1,0.7" in battery.names
    assert len(battery.pairs()) == 22 * 22


def test_cached_per_basis():
    assert default_battery(HermiteBasis(64)) is default_battery(HermiteBasis(64))
    with pytest.raises(TypeError):
        default_battery(64)


def test_guard_band_is_empty():
    battery = default_battery(HermiteBasis(64))
    for name, f in battery:
        assert np.all(f.coeffs[-GUARD_MODES:] == 0.0), name
        assert f.norm() > 0.1


def test_small_basis_has_only_hermite_members():
    battery = default_battery(HermiteBasis(2))
    assert battery.names == ("hermite:0", "hermite:1")


def test_get_returns_projection():
    basis = HermiteBasis(64)
    f = default_battery(basis).get("gaussian:0,1")
    # exp(-x^2/2) = pi^(1/4) e_0
    assert f.coeffs[0] == pytest.approx(np.pi ** 0.25, rel=1e-13)
    assert np.abs(f.coeffs[1:]).max() < 1e-13


def test_modulated_member_is_mixed_parity():
    f = default_battery(HermiteBasis(64)).get("modulated:2")
    assert f.parity() == 0
    g = gaussian_member(HermiteBasis(64), 0.0, 1.0, frequency=2.0, guard=0)
    np.testing.assert_array_equal(g.coeffs[:-GUARD_MODES], f.coeffs[:-GUARD_MODES])


def test_wide_offset_tail_oracle():
    f = default_battery(HermiteBasis(64)).get("gaussian:3,2")
    assert f.tail_mass() == pytest.approx(WIDE_OFFSET_TAIL, rel=1e-6)


@pytest.mark.parametrize(
    "name",
    [
        pytest.param(
            n,
            marks=pytest.mark.xfail(
                strict=True, reason="wide Gaussian at |a| = 3 carries 2.98e-8 in the top N/8 modes at N = 64"
            ),
        )
        if n in TAIL_OVER_LIMIT
        else n
        for n in NAMES
    ],
)
def test_tail_mass_at_64(name):
    f = default_battery(HermiteBasis(64)).get(name)
    assert f.tail_mass() <= TAIL_LIMIT


def test_tail_shrinks_with_basis():
    # e^{-(x-3)^2} projected at N = 16 and N = 64
    def sampler(x):
        return np.exp(-(x - 3.0) ** 2)

    small = project(sampler, HermiteBasis(16)).tail_mass()
    large = project(sampler, HermiteBasis(64)).tail_mass()
    assert large < small

import math

import numpy as np
import pytest

from biortho import (
    ConstructionError,
    Delta,
    HermiteBasis,
    IdentityMap,
    PlaneWave,
    RankOneMap,
    Regular,
    UnsupportedDistributionError,
    apply_p0,
    apply_q0,
    default_battery,
    dual_apply,
    eigen_p,
    eigen_q,
    inner,
    make_deformed,
    metric_apply,
    smeared_state,
    weak_eigen_residual,
)
from biortho.deformation import DeformedPair, resolution_integrand_values, round_trip_residuals


class LeakyMap(RankOneMap):
    """T^-1 deliberately off by a small multiple of v."""

    def apply_Tinv(self, f):
        return super().apply_Tinv(f) + 1e-6 * inner(self.u, f) * self.v


def test_identity_reduces_to_undeformed(identity_map, basis64):
    ops = make_deformed(identity_map)
    f = default_battery(basis64).get("gaussian:1,0.7")
    np.testing.assert_array_equal(ops.q(f).coeffs, apply_q0(f).coeffs)
    np.testing.assert_array_equal(ops.p_dag(f).coeffs, apply_p0(f).coeffs)
    eta, eta_up = eigen_q(identity_map, 0.5)
    assert eta == Delta(0.5) and eta_up == Delta(0.5)


def test_make_deformed_rejects_bad_round_trip(basis64):
    bad = LeakyMap(basis64.element(0), basis64.element(0), 1.0)
    with pytest.raises(ConstructionError, match="round trip"):
        make_deformed(bad)


def test_round_trip_residual_keys(basis64):
    smap = RankOneMap(basis64.element(0), basis64.element(0), 0.5j)
    worst = round_trip_residuals(smap, default_battery(basis64).functions())
    assert set(worst) == {"Tinv.T", "T.Tinv", "Tinvdag.Tdag", "Tdag.Tinvdag"}
    assert max(worst.values()) < 1e-14


def test_dual_apply_validates_action(identity_map):
    with pytest.raises(ValueError):
        dual_apply(identity_map, "Tinv", Delta(0.0))


def test_dual_apply_falls_back_to_kernel(basis64):
    smap = RankOneMap(basis64.element(0), basis64.element(0), 2.0)

    class NoClosedForm(RankOneMap):
        def dual_atom(self, action, F):
            return None

    plain = NoClosedForm(smap.u, smap.v, smap.alpha)
    g = basis64.element(0) + basis64.element(2)
    image = dual_apply(plain, "T", Regular(g))
    np.testing.assert_allclose(image.kernel.coeffs, smap.apply_T(g).coeffs)
    with pytest.raises(UnsupportedDistributionError):
        dual_apply(plain, "T", Delta(0.0))


def test_weak_eigen_residual_identity(identity_map, basis64):
    ops = DeformedPair(identity_map)
    f = default_battery(basis64).get("gaussian:0,1")
    for x0 in (-2.0, 0.0, 1.0):
        assert weak_eigen_residual(ops, Delta(x0), "q_dag", x0, f) < 1e-13
    _, mu_up = eigen_p(identity_map, 1.0)
    assert weak_eigen_residual(ops, mu_up, "p", 1.0, f) < 1e-12
    # wrong eigenvalue is detected
    assert weak_eigen_residual(ops, Delta(0.0), "q_dag", 0.5, f) > 1e-2


def test_metric_and_smeared_state_names(basis64):
    smap = RankOneMap(basis64.element(0), basis64.element(0), 1.0)
    f = basis64.element(0)
    # T T^dag e_0 = (1 + 1)^2 e_0 for u = v = e_0, alpha = 1
    np.testing.assert_allclose(metric_apply("S_eta", smap, f).coeffs, 4.0 * f.coeffs)
    np.testing.assert_allclose(metric_apply("S_eta_up", smap, f).coeffs, 0.25 * f.coeffs)
    np.testing.assert_allclose(smeared_state(smap, "lower", f).coeffs, 2.0 * f.coeffs)
    with pytest.raises(ValueError):
        metric_apply("S", smap, f)
    with pytest.raises(ValueError):
        smeared_state(smap, "middle", f)


def test_resolution_integrand_orderings(basis64):
    smap = RankOneMap(basis64.element(0), basis64.element(0), 1.0)
    rule = basis64.rule()
    f, g = basis64.element(0), basis64.element(1) + basis64.element(0)
    for ordering in ("lower-upper", "upper-lower"):
        vals = resolution_integrand_values(smap, f, g, rule.nodes, ordering)
        assert rule.integrate(vals) == pytest.approx(inner(f, g), abs=1e-13)
    with pytest.raises(ValueError):
        resolution_integrand_values(smap, f, g, rule.nodes, "sideways")


def test_eigen_p_identity_normalization(identity_map):
    mu, _ = eigen_p(identity_map, 0.0)
    assert mu == PlaneWave(0.0)
    assert mu(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))

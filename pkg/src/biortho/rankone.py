"""
Rank-one perturbation of the identity, ``T = 1 + alpha P_{u,v}``.

``P_{u,v} f = <u, f> v`` with ``<u, v> = 1``. The inverse is
``1 + beta P_{u,v}`` with ``beta = -alpha / (1 + alpha)``, and

    T^dag = 1 + conj(alpha) P_{v,u},   (T^-1)^dag = 1 + conj(beta) P_{v,u}.

All four actions are closed forms; no quadrature enters a composition.
"""
from __future__ import annotations

import numpy as np

from .deformation import SimilarityMap
from .distributions import Delta, DeltaDeriv, LinearComb, PlaneWave, Regular, convolve_with_test, pair
from .errors import ConstructionError
from .spectral import (
    TestFunction,
    apply_p0,
    apply_q0,
    gauss_legendre_panels,
    inner,
    project,
)

NORMALIZATION_TOL = 1e-10
INVERTIBILITY_GUARD = 1e-12


class RankOneMap(SimilarityMap):
    """
    ``T = 1 + alpha P_{u,v}`` on the basis of ``u`` and ``v``.

    Raises
    ------
    ConstructionError
        If ``|<u, v> - 1| > 1e-10`` (inputs are never rescaled) or
        ``|1 + alpha| <= 1e-12``.
    """

    def __init__(self, u, v, alpha, tol=1e-10, labels=("u", "v")):
        alpha = complex(alpha)
        if abs(1.0 + alpha) <= INVERTIBILITY_GUARD:
            raise ConstructionError(
                f"rank-one map is not invertible: |1+alpha| = {abs(1.0 + alpha):.3e} <= {INVERTIBILITY_GUARD:g}"
            )
        overlap = inner(u, v)
        if abs(overlap - 1.0) > NORMALIZATION_TOL:
            raise ConstructionError(
                f"rank-one map needs <u,v> = 1, got {overlap.real:.12g}{overlap.imag:+.12g}j"
            )
        self.u = u
        self.v = v
        self.alpha = alpha
        self.beta = -alpha / (1.0 + alpha)
        self.tol = tol
        self.labels = tuple(labels)
        self.descriptor = f"rankone(alpha={alpha.real:g}{alpha.imag:+g}j)"

    @property
    def basis(self):
        return self.u.basis

    def constraint_residual(self):
        """``|alpha + beta + alpha beta|``; zero up to rounding."""
        a, b = self.alpha, self.beta
        return abs(a + b + a * b)

    def apply_T(self, f):
        return f + (self.alpha * inner(self.u, f)) * self.v

    def apply_Tinv(self, f):
        return f + (self.beta * inner(self.u, f)) * self.v

    def apply_Tdag(self, f):
        return f + (np.conj(self.alpha) * inner(self.v, f)) * self.u

    def apply_Tinvdag(self, f):
        return f + (np.conj(self.beta) * inner(self.v, f)) * self.u

    def dual_atom(self, action, F):
        # T F = F + alpha <u, F> v and (T^-1)^dag F = F + conj(beta) <v, F> u,
        # where <g, F> = conj(pair(F, g)).
        if not isinstance(F, (Delta, DeltaDeriv, PlaneWave, Regular)):
            return None
        if action == "T":
            weight = self.alpha * np.conj(pair(F, self.u))
            return LinearComb.of((1.0, F), (weight, Regular(self.v, label=self.labels[1])))
        weight = np.conj(self.beta) * np.conj(pair(F, self.v))
        return LinearComb.of((1.0, F), (weight, Regular(self.u, label=self.labels[0])))


def _base(theta0):
    if theta0 == "q0":
        return apply_q0
    if theta0 == "p0":
        return apply_p0
    raise ValueError(f"theta0 must be 'q0' or 'p0', got {theta0!r}")


def deformed_action_closed(rmap, which, phi):
    """
    Explicit action of q or p on ``phi`` without composing T, q0, T^-1.

        q phi = x phi + beta<u,phi> x v + alpha<u,x phi> v + alpha beta <u,phi><u,x v> v
        p phi = -i phi' - i(beta<u,phi> v' + alpha<u,phi'> v + alpha beta <u,phi><u,v'> v)
    """
    u, v, a, b = rmap.u, rmap.v, rmap.alpha, rmap.beta
    up = inner(u, phi)
    if which == "q":
        xphi, xv = apply_q0(phi), apply_q0(v)
        return xphi + (b * up) * xv + (a * inner(u, xphi) + a * b * up * inner(u, xv)) * v
    if which == "p":
        # phi', v' as -i d/dx / (-i)
        dphi = 1j * apply_p0(phi)
        dv = 1j * apply_p0(v)
        corr = (b * up) * dv + (a * inner(u, dphi) + a * b * up * inner(u, dv)) * v
        return -1j * dphi - 1j * corr
    raise ValueError(f"which must be 'q' or 'p', got {which!r}")


def delta_term(rmap, theta0, phi):
    """
    ``(T Theta0 T^-1 - Theta0) phi`` in closed form:

        beta<u,phi> Theta0 v + alpha [<Theta0 u, phi> + beta <Theta0 u, v><u, phi>] v
    """
    op = _base(theta0)
    u, v, a, b = rmap.u, rmap.v, rmap.alpha, rmap.beta
    tu = op(u)
    up = inner(u, phi)
    return (b * up) * op(v) + (a * (inner(tu, phi) + b * inner(tu, v) * up)) * v


def quasi_basis(rmap, n):
    """``(phi_n, Psi_n) = (T e_n, (T^-1)^dag e_n)``."""
    size = rmap.basis.size
    if not 0 <= n < size:
        raise IndexError(f"quasi-basis index {n} outside 0..{size - 1}")
    e = rmap.basis.element(n)
    return rmap.apply_T(e), rmap.apply_Tinvdag(e)


def add2_residual(rmap, y0, phi, x=None):
    """
    Diagnostic size of ``((T^-1)^dag delta_y0) * phi - (T^-1)^dag (delta_y0 * phi)``.

    Both sides share phi(x - y0); what is left is
    ``conj(beta) [conj(v(y0)) (u * phi)(x) - <v, phi(. - y0)> u(x)]``, whose
    sup over ``x`` is returned. Recorded only; the identity is not expected
    to hold for this map.
    """
    basis = rmap.basis
    x = np.linspace(-8.0, 8.0, 161) if x is None else np.asarray(x, dtype=float)
    u_conv_phi = convolve_with_test(Regular(rmap.u), phi)(x)
    shifted = project(lambda s: phi(s - y0), basis)
    lhs = np.conj(rmap.v(np.array([y0]))[0]) * u_conv_phi
    rhs = inner(rmap.v, shifted) * rmap.u(x)
    return float(np.max(np.abs(np.conj(rmap.beta) * (lhs - rhs))))


def overlap_by_quadrature(u, p0):
    """Independent quadrature value of ``<u, theta_p0>``."""
    rule = gauss_legendre_panels(u.basis.reach + 12.0)
    vals = np.conj(u(rule.nodes)) * np.exp(1j * p0 * rule.nodes) / np.sqrt(2 * np.pi)
    return complex(rule.integrate(vals))

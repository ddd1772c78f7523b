"""
Similarity-deformed position and momentum operators.

Given an invertible map T whose four actions T, T^-1, T^dag, (T^-1)^dag
preserve the test-function space,

    q = T q0 T^-1,            p = T p0 T^-1,
    q^dag = (T^-1)^dag q0 T^dag,   p^dag = (T^-1)^dag p0 T^dag.

T and (T^-1)^dag extend to distributions by duality,
``<T F, phi> = <F, T^dag phi>`` and ``<(T^-1)^dag F, phi> = <F, T^-1 phi>``,
which yields the eigenfamilies

    eta_x0 = T delta_x0,     eta^x0 = (T^-1)^dag delta_x0,
    mu_p0  = T theta_p0,     mu^p0  = (T^-1)^dag theta_p0.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .distributions import Delta, LinearComb, PlaneWave, Regular, pair
from .errors import ConstructionError, UnsupportedDistributionError
from .spectral import TestFunction, apply_p0, apply_q0, project

ACTIONS = ("T", "Tinvdag")


class SimilarityMap(abc.ABC):
    """
    Contract for an invertible map acting on test functions.

    Subclasses provide the four function-space actions and may provide
    closed-form images of distribution atoms through :meth:`dual_atom`.
    """

    descriptor: str = "map"
    tol: float = 1e-10

    @property
    @abc.abstractmethod
    def basis(self):
        ...

    @abc.abstractmethod
    def apply_T(self, f: TestFunction) -> TestFunction:
        ...

    @abc.abstractmethod
    def apply_Tinv(self, f: TestFunction) -> TestFunction:
        ...

    @abc.abstractmethod
    def apply_Tdag(self, f: TestFunction) -> TestFunction:
        ...

    @abc.abstractmethod
    def apply_Tinvdag(self, f: TestFunction) -> TestFunction:
        ...

    def dual_atom(self, action, F):
        """Closed-form image of a non-combination distribution, or None."""
        return None

    def apply_many(self, name, functions):
        """Apply one of the four actions to a sequence of test functions."""
        act = self.action(name)
        return [act(f) for f in functions]

    def action(self, name):
        return {
            "T": self.apply_T,
            "Tinv": self.apply_Tinv,
            "Tdag": self.apply_Tdag,
            "Tinvdag": self.apply_Tinvdag,
        }[name]


class IdentityMap(SimilarityMap):
    """T = 1; every deformed object reduces to the undeformed one."""

    descriptor = "identity"

    def __init__(self, basis, tol=1e-10):
        self._basis = basis
        self.tol = tol

    @property
    def basis(self):
        return self._basis

    def apply_T(self, f):
        return f

    apply_Tinv = apply_Tdag = apply_Tinvdag = apply_T

    def dual_atom(self, action, F):
        return F


@dataclass(frozen=True)
class DeformedPair:
    """The four operators q, p, q^dag, p^dag built over a similarity map."""

    map: SimilarityMap

    def q(self, f):
        m = self.map
        return m.apply_T(apply_q0(m.apply_Tinv(f)))

    def p(self, f):
        m = self.map
        return m.apply_T(apply_p0(m.apply_Tinv(f)))

    def q_dag(self, f):
        m = self.map
        return m.apply_Tinvdag(apply_q0(m.apply_Tdag(f)))

    def p_dag(self, f):
        m = self.map
        return m.apply_Tinvdag(apply_p0(m.apply_Tdag(f)))

    def operator(self, name):
        return {"q": self.q, "p": self.p, "q_dag": self.q_dag, "p_dag": self.p_dag}[name]


def round_trip_residuals(smap, functions):
    """Worst relative ``T^-1 T f - f``, ``T T^-1 f - f`` and dagger-pair round trips."""
    functions = list(functions)
    images = {
        "Tinv.T": smap.apply_many("Tinv", smap.apply_many("T", functions)),
        "T.Tinv": smap.apply_many("T", smap.apply_many("Tinv", functions)),
        "Tinvdag.Tdag": smap.apply_many("Tinvdag", smap.apply_many("Tdag", functions)),
        "Tdag.Tinvdag": smap.apply_many("Tdag", smap.apply_many("Tinvdag", functions)),
    }
    worst = dict.fromkeys(images, 0.0)
    for key, out in images.items():
        for f, g in zip(functions, out):
            worst[key] = max(worst[key], (g - f).norm() / (f.norm() or 1.0))
    return worst


def make_deformed(smap, battery=None):
    """
    Wire q, p and their adjoints over ``smap`` after checking round trips.

    Raises
    ------
    ConstructionError
        If any round trip on the battery exceeds ``smap.tol``.
    """
    if battery is None:
        from .battery import default_battery

        battery = default_battery(smap.basis)
    worst = round_trip_residuals(smap, battery.functions())
    key, value = max(worst.items(), key=lambda kv: kv[1])
    if value > smap.tol:
        raise ConstructionError(
            f"{smap.descriptor}: round trip {key} residual {value:.3e} exceeds tol {smap.tol:.1e}"
        )
    return DeformedPair(smap)


def dual_apply(smap, action, F):
    """
    Extend ``T`` (action "T") or ``(T^-1)^dag`` (action "Tinvdag") to a distribution.

    Linear combinations are mapped term by term. Atoms use the map's
    closed form when it has one; otherwise a Regular atom is mapped by
    applying the function-space action to its kernel.
    """
    if action not in ACTIONS:
        raise ValueError(f"action must be one of {ACTIONS}, got {action!r}")
    if isinstance(F, LinearComb):
        return LinearComb.of(*((w, dual_apply(smap, action, d)) for w, d in F.terms))
    closed = smap.dual_atom(action, F)
    if closed is not None:
        return closed
    if isinstance(F, Regular):
        kernel = F.kernel
        if not isinstance(kernel, TestFunction):
            kernel = project(F, smap.basis)
        return Regular(smap.action(action)(kernel), label=f"{action}[{F.describe()}]")
    raise UnsupportedDistributionError(
        f"{smap.descriptor} has no closed form for {action} on {type(F).__name__}"
    )


def eigen_q(smap, x0):
    """(eta_x0, eta^x0): generalized eigenstates of q and q^dag for eigenvalue x0."""
    return dual_apply(smap, "T", Delta(x0)), dual_apply(smap, "Tinvdag", Delta(x0))


def eigen_p(smap, p0):
    """(mu_p0, mu^p0): generalized eigenstates of p and p^dag for eigenvalue p0."""
    return dual_apply(smap, "T", PlaneWave(p0)), dual_apply(smap, "Tinvdag", PlaneWave(p0))


def weak_eigen_residual(pair_ops, F, adjoint_op, eigenvalue, phi):
    """
    ``|<F, A^dag phi> - lambda <F, phi>|`` for a real eigenvalue.

    This is the weak form of ``A F = lambda F``; pass ``q_dag`` / ``p_dag``
    for the lower families and ``q`` / ``p`` for the upper ones.
    """
    lhs = pair(F, pair_ops.operator(adjoint_op)(phi))
    return abs(lhs - eigenvalue * pair(F, phi))


def metric_apply(which, smap, f):
    """``S_eta f = T T^dag f`` or ``S^eta f = (T^-1)^dag T^-1 f``."""
    if which == "S_eta":
        return smap.apply_T(smap.apply_Tdag(f))
    if which == "S_eta_up":
        return smap.apply_Tinvdag(smap.apply_Tinv(f))
    raise ValueError(f"unknown metric operator {which!r}")


def smeared_state(smap, side, phi):
    """
    ``integral phi(x0) eta_x0 dx0`` (lower, equals T phi) or the same with
    eta^x0 (upper, equals (T^-1)^dag phi).
    """
    if side == "lower":
        return smap.apply_T(phi)
    if side == "upper":
        return smap.apply_Tinvdag(phi)
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def resolution_integrand_values(smap, phi, psi, nodes, ordering="lower-upper"):
    """
    Integrand of the resolution of identity at the given x0 nodes.

    "lower-upper": conj((T^dag phi)(x0)) (T^-1 psi)(x0)
    "upper-lower": conj((T^-1 phi)(x0)) (T^dag psi)(x0)
    """
    if ordering == "lower-upper":
        a, b = smap.apply_Tdag(phi), smap.apply_Tinv(psi)
    elif ordering == "upper-lower":
        a, b = smap.apply_Tinv(phi), smap.apply_Tdag(psi)
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    return np.conj(a(nodes)) * b(nodes)

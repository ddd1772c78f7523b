"""
Tempered distributions as symbolic values paired against test functions.

The pairing ``pair(F, phi)`` extends the L2 product ``<F, phi>``, so it is
antilinear in ``F``: for a linear combination, the weights enter
conjugated,

    pair(a F + b G, phi) = conj(a) pair(F, phi) + conj(b) pair(G, phi).

Deltas and their derivatives are never sampled; they pair by exact
point evaluation of the Hermite expansion (derivatives through the
ladder relations). Plane waves pair through the Hermite eigenrelation
of the unitary Fourier transform, F[e_n](k) = (-i)^n e_n(k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Union

import numpy as np

from .errors import NonFiniteSampleError, UnsupportedDistributionError
from .spectral import (
    TestFunction,
    gauss_legendre_panels,
    inner,
    point_values,
)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class _Algebra:
    """Mixin giving distributions ``+``, ``-`` and scalar multiplication."""

    def __add__(self, other):
        if not isinstance(other, _Algebra):
            return NotImplemented
        return LinearComb.of((1.0, self), (1.0, other))

    def __sub__(self, other):
        if not isinstance(other, _Algebra):
            return NotImplemented
        return LinearComb.of((1.0, self), (-1.0, other))

    def __rmul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LinearComb.of((complex(scalar), self))

    __mul__ = __rmul__


@dataclass(frozen=True)
class Delta(_Algebra):
    """delta(x - x0)."""

    x0: float

    def describe(self):
        return f"Delta({self.x0:g})"


@dataclass(frozen=True)
class DeltaDeriv(_Algebra):
    """k-th derivative of delta(x - x0)."""

    x0: float
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"derivative order must be >= 1, got {self.order}")

    def describe(self):
        return f"DeltaDeriv({self.x0:g},{self.order})"


@dataclass(frozen=True)
class PlaneWave(_Algebra):
    """exp(i p0 x) / sqrt(2 pi)."""

    p0: float

    def __call__(self, x):
        return _INV_SQRT_2PI * np.exp(1j * self.p0 * np.asarray(x, dtype=float))

    def describe(self):
        return f"PlaneWave({self.p0:g})"


@dataclass(frozen=True, eq=False)
class Regular(_Algebra):
    """
    A locally integrable function of at most polynomial growth.

    ``kernel`` is either a :class:`TestFunction` (paired exactly in
    coefficient space) or a vectorized callable (paired by composite
    Gauss-Legendre quadrature with panel edges at ``breakpoints``).
    """

    kernel: Union[TestFunction, Callable]
    breakpoints: tuple = ()
    label: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.kernel(x), dtype=complex).reshape(x.shape)

    def describe(self):
        return f"Regular({self.label or 'kernel'})"


@dataclass(frozen=True)
class LinearComb(_Algebra):
    """Finite combination ``sum_i w_i F_i``; nested combinations are flattened."""

    terms: tuple

    @classmethod
    def of(cls, *pairs):
        flat = []
        for w, dist in pairs:
            if isinstance(dist, LinearComb):
                flat.extend((complex(w) * wi, di) for wi, di in dist.terms)
            else:
                flat.append((complex(w), dist))
        return cls(tuple(flat))

    def describe(self):
        parts = [f"({w.real:.17g}{w.imag:+.17g}j)*{d.describe()}" for w, d in self.terms]
        return " + ".join(parts)


Distribution = Union[Delta, DeltaDeriv, PlaneWave, Regular, LinearComb]


def _quadrature_extent(basis):
    return basis.reach + 12.0


def _regular_values(F, nodes):
    vals = F(nodes)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise NonFiniteSampleError(
            f"kernel {F.describe()} is not finite at x = {nodes[np.argmax(bad)]!r}"
        )
    return vals


@singledispatch
def pair(F, phi):
    """
    Duality form ``<F, phi>`` between a distribution and a test function.

    - ``Delta(x0)``          -> phi(x0)
    - ``DeltaDeriv(x0, k)``  -> (-1)^k phi^(k)(x0)
    - ``PlaneWave(p0)``      -> (2 pi)^(-1/2) integral exp(-i p0 x) phi(x) dx
    - ``Regular(g)``         -> integral conj(g(x)) phi(x) dx
    - ``LinearComb``         -> conjugate-weighted sum of the above
    """
    raise UnsupportedDistributionError(f"cannot pair {type(F).__name__}")


@pair.register
def _(F: Delta, phi):
    return complex(phi(np.array([F.x0]))[0])


@pair.register
def _(F: DeltaDeriv, phi):
    val = phi.derivative_values(np.array([F.x0]), F.order)[0]
    return complex((-1) ** F.order * val)


@pair.register
def _(F: PlaneWave, phi):
    n = np.arange(phi.basis.size)
    en = point_values(phi.basis.size, float(F.p0))
    return complex(np.sum((-1j) ** n * phi.coeffs * en))


@pair.register
def _(F: Regular, phi):
    if isinstance(F.kernel, TestFunction):
        return inner(F.kernel, phi)
    rule = gauss_legendre_panels(_quadrature_extent(phi.basis), breakpoints=tuple(F.breakpoints))
    g = _regular_values(F, rule.nodes)
    return complex(rule.integrate(np.conj(g) * phi.on_rule(rule)))


@pair.register
def _(F: LinearComb, phi):
    return sum((np.conj(w) * pair(d, phi) for w, d in F.terms), 0j)


def plane_wave_by_quadrature(p0, phi):
    """Independent quadrature value of ``pair(PlaneWave(p0), phi)``."""
    rule = gauss_legendre_panels(_quadrature_extent(phi.basis))
    vals = np.exp(-1j * p0 * rule.nodes) * phi.on_rule(rule)
    return complex(_INV_SQRT_2PI * rule.integrate(vals))


def convolve_with_test(F, phi):
    """
    ``F * phi`` as a vectorized function of x.

    Delta(y0) shifts, DeltaDeriv(y0, k) shifts the k-th derivative,
    Regular(g) integrates ``g(s) phi(x - s)`` with composite Gauss-Legendre
    panels (edges at the kernel's breakpoints). Plane waves are rejected:
    they are not integrable.
    """
    if isinstance(F, Delta):
        return lambda x: phi(np.asarray(x, dtype=float) - F.x0)
    if isinstance(F, DeltaDeriv):
        return lambda x: phi.derivative_values(np.asarray(x, dtype=float) - F.x0, F.order)
    if isinstance(F, Regular):
        rule = gauss_legendre_panels(
            _quadrature_extent(phi.basis) + 20.0, breakpoints=tuple(F.breakpoints)
        )
        g = _regular_values(F, rule.nodes) * rule.weights

        def conv(x):
            x = np.asarray(x, dtype=float)
            shifted = x.reshape(-1, 1) - rule.nodes[None, :]
            vals = phi(shifted)
            return (vals @ g).reshape(x.shape)

        return conv
    if isinstance(F, LinearComb):
        parts = [(w, convolve_with_test(d, phi)) for w, d in F.terms]
        return lambda x: sum(w * c(x) for w, c in parts)
    raise UnsupportedDistributionError(
        f"convolution of {type(F).__name__} with a test function is not supported"
    )


def extended_inner(F, G):
    """
    Extended product ``<F, G> = (conj(F) * G~)(0)`` on the supported table.

    Delta(x0), Delta(y0) gives the symbolic ``Delta(x0 - y0)``; a delta against
    a regular function gives point evaluation; two regular functions give
    their L2 product.
    """
    if isinstance(F, Delta) and isinstance(G, Delta):
        return Delta(F.x0 - G.x0)
    if isinstance(F, Delta) and isinstance(G, Regular):
        return complex(G(np.array([F.x0]))[0])
    if isinstance(F, Regular) and isinstance(G, Delta):
        return complex(np.conj(F(np.array([G.x0]))[0]))
    if isinstance(F, Regular) and isinstance(G, Regular):
        if isinstance(F.kernel, TestFunction) and isinstance(G.kernel, TestFunction):
            return inner(F.kernel, G.kernel)
        basis = next(
            (k.basis for k in (F.kernel, G.kernel) if isinstance(k, TestFunction)), None
        )
        extent = _quadrature_extent(basis) if basis is not None else 40.0
        rule = gauss_legendre_panels(extent, breakpoints=tuple(F.breakpoints) + tuple(G.breakpoints))
        return complex(rule.integrate(np.conj(_regular_values(F, rule.nodes)) * _regular_values(G, rule.nodes)))
    raise UnsupportedDistributionError(
        f"extended product not supported for ({type(F).__name__}, {type(G).__name__})"
    )


def atoms(F):
    """Flatten to ``[(weight, atom), ...]``."""
    if isinstance(F, LinearComb):
        return list(F.terms)
    return [(1.0 + 0j, F)]


def symbolic_terms(F):
    """Weighted Delta / DeltaDeriv atoms, which are never sampled."""
    return [(w, d) for w, d in atoms(F) if isinstance(d, (Delta, DeltaDeriv))]


def sample_regular_part(F, x):
    """Values of the PlaneWave and Regular summands of ``F`` at ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for w, d in atoms(F):
        if isinstance(d, (PlaneWave, Regular)):
            out += w * d(x)
    return out

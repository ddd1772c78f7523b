"""
Hermite-function representation of Schwartz test functions.

A :class:`TestFunction` is a truncated coefficient vector against the
orthonormal harmonic-oscillator functions

    e_n(x) = H_n(x) exp(-x**2 / 2) / sqrt(2**n n! sqrt(pi)),   n = 0..N-1.

Position and momentum act through the ladder relations

    x e_n  = sqrt(n/2) e_{n-1} + sqrt((n+1)/2) e_{n+1}
    e_n'   = sqrt(n/2) e_{n-1} - sqrt((n+1)/2) e_{n+1}

so both are exact on coefficients; the single coefficient pushed past
index N-1 is dropped and accumulated in :attr:`TestFunction.spill`.

Inner products are antilinear in the first argument.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import roots_hermite, roots_legendre

from .errors import BasisMismatchError, NonFiniteSampleError

log = logging.getLogger(__name__)

_PI_QUARTER = math.pi ** -0.25
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


def hermite_functions(n_modes, x):
    """
    Evaluate e_0 .. e_{n_modes-1} at the points ``x``.

    Uses the normalized three-term recurrence with a running log scale,
    so nothing overflows for large n and values underflow to zero only
    where the true value is below the double range.

    Parameters
    ----------
    n_modes : int
        Number of functions.
    x : array_like
        Real evaluation points (any shape; flattened).

    Returns
    -------
    ndarray, shape (n_modes, x.size)
    """
    x = np.asarray(x, dtype=float).ravel()
    out = np.empty((n_modes, x.size))
    if n_modes == 0:
        return out
    log_scale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PI_QUARTER)
    out[0] = cur * np.exp(log_scale)
    for n in range(1, n_modes):
        nxt = math.sqrt(2.0 / n) * x * cur - math.sqrt((n - 1) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur[big] /= _RESCALE
            prev[big] /= _RESCALE
            log_scale[big] += _LOG_RESCALE
        out[n] = cur * np.exp(log_scale)
    return out


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Nodes and weights with ``integral f(x) dx ~= sum(weights * f(nodes))``.

    The Gaussian factor of Gauss-Hermite weights is folded in, so every
    rule integrates plain (unweighted) Schwartz-like integrands.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def integrate(self, values):
        return np.sum(self.weights * np.asarray(values), axis=-1)

    @property
    def order(self):
        return self.nodes.size


@functools.lru_cache(maxsize=8)
def rule_table(n_modes, rule):
    """Cached ``hermite_functions(n_modes, rule.nodes)``; rules compare by identity."""
    values = hermite_functions(n_modes, rule.nodes)
    values.setflags(write=False)
    return values


@functools.lru_cache(maxsize=512)
def point_values(n_modes, x):
    """Cached e_0..e_{n_modes-1} at a single point ``x``."""
    values = hermite_functions(n_modes, np.array([x], dtype=float))[:, 0]
    values.setflags(write=False)
    return values


@functools.lru_cache(maxsize=16)
def gauss_hermite(order):
    """Gauss-Hermite rule with ``order`` nodes and weights exp(x^2)-folded."""
    nodes, _ = roots_hermite(order)
    # Christoffel form: folded weight = 1 / sum_k e_k(x_i)^2, which stays finite
    # where the raw Gauss weights underflow.
    values = hermite_functions(order, nodes)
    weights = 1.0 / np.einsum("ij,ij->j", values, values)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, "gauss-hermite")


@functools.lru_cache(maxsize=16)
def uniform_grid(extent, points):
    """Cell-centred uniform rule on ``[-extent, extent]``; ``points`` must be even."""
    if points % 2 or points <= 0:
        raise ValueError(f"uniform grid needs an even, positive point count, got {points}")
    if extent <= 0:
        raise ValueError(f"grid extent must be positive, got {extent}")
    h = 2.0 * extent / points
    nodes = -extent + h * (np.arange(points) + 0.5)
    weights = np.full(points, h)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, "uniform-grid")


@functools.lru_cache(maxsize=64)
def gauss_legendre_panels(extent, width=0.25, order=16, breakpoints=()):
    """
    Composite Gauss-Legendre rule on ``[-extent, extent]``.

    Panel edges always include every breakpoint inside the interval, so
    integrands with kinks there keep full accuracy.
    """
    n_panels = max(1, int(math.ceil(2.0 * extent / width)))
    edges = np.linspace(-extent, extent, n_panels + 1)
    inner = [b for b in breakpoints if -extent < b < extent]
    if inner:
        edges = np.unique(np.concatenate([edges, inner]))
    t, w = roots_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, "gauss-legendre")


@dataclass(frozen=True)
class HermiteBasis:
    """Truncated harmonic-oscillator basis of ``size`` functions."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"basis size must be a positive integer, got {self.size}")

    def evaluate(self, x, n_modes=None):
        return hermite_functions(self.size if n_modes is None else n_modes, x)

    def rule(self):
        """Default Gauss-Hermite rule, order 2N."""
        return gauss_hermite(2 * self.size)

    @property
    def reach(self):
        """Approximate classical turning point of the highest mode."""
        return math.sqrt(2.0 * self.size + 1.0)

    def element(self, n):
        c = np.zeros(self.size, dtype=complex)
        c[n] = 1.0
        return TestFunction(c, self)

    def zero(self):
        return TestFunction(np.zeros(self.size, dtype=complex), self)


@dataclass(frozen=True, eq=False)
class TestFunction:
    """
    Finite Hermite expansion ``f(x) = sum_n coeffs[n] e_n(x)``.

    ``spill`` is the accumulated norm of coefficients that ladder
    operations pushed past the truncation and dropped.
    """

    __test__ = False  # not a pytest class

    coeffs: np.ndarray
    basis: HermiteBasis
    spill: float = field(default=0.0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.basis.size,):
            raise ValueError(
                f"expected {self.basis.size} coefficients, got shape {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.size == 1:
            # repeated point evaluations (deltas, kernels at x0) hit the cache
            return np.asarray(point_values(self.basis.size, float(x.ravel()[0])) @ self.coeffs).reshape(x.shape)
        vals = rmatmul(self.basis.evaluate(x).T, self.coeffs)
        return vals.reshape(x.shape)

    def on_rule(self, rule):
        """Values at the nodes of ``rule`` through a cached basis table."""
        return rmatmul(rule_table(self.basis.size, rule).T, self.coeffs)

    def derivative(self, order=1):
        """Exact coefficients of the ``order``-th derivative, length N + order."""
        return ladder_derivative(np.asarray(self.coeffs), order)

    def derivative_values(self, x, order=1):
        x = np.asarray(x, dtype=float)
        c = self.derivative(order)
        if x.size == 1:
            return np.asarray(point_values(c.size, float(x.ravel()[0])) @ c).reshape(x.shape)
        return rmatmul(hermite_functions(c.size, x).T, c).reshape(x.shape)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def tail_mass(self):
        c2 = np.abs(self.coeffs) ** 2
        total = c2.sum()
        if total == 0.0:
            return 0.0
        start = self.basis.size - self.basis.size // 8
        return float(c2[start:].sum() / total)

    def parity(self, threshold=1e-12):
        """+1 / -1 for even / odd coefficient support, 0 if mixed."""
        c = np.abs(self.coeffs)
        even = c[0::2].max(initial=0.0) > threshold
        odd = c[1::2].max(initial=0.0) > threshold
        if even and not odd:
            return 1
        if odd and not even:
            return -1
        return 0

    def truncated(self, n_modes):
        """Copy with coefficients from index ``n_modes`` on set to zero."""
        c = np.array(self.coeffs)
        c[n_modes:] = 0.0
        return TestFunction(c, self.basis, self.spill)

    def _check(self, other):
        if other.basis != self.basis:
            raise BasisMismatchError(
                f"basis size {self.basis.size} vs {other.basis.size}"
            )

    def __add__(self, other):
        if not isinstance(other, TestFunction):
            return NotImplemented
        self._check(other)
        return TestFunction(self.coeffs + other.coeffs, self.basis, self.spill + other.spill)

    def __sub__(self, other):
        if not isinstance(other, TestFunction):
            return NotImplemented
        self._check(other)
        return TestFunction(self.coeffs - other.coeffs, self.basis, self.spill + other.spill)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return TestFunction(scalar * self.coeffs, self.basis, abs(scalar) * self.spill)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"TestFunction(N={self.basis.size}, norm={self.norm():.6g}, spill={self.spill:.3g})"


def rmatmul(a, b):
    """``a @ b`` for a real matrix and a complex operand without upcasting ``a``."""
    b = np.asarray(b)
    if np.iscomplexobj(b):
        # strided .real/.imag views would bypass BLAS
        return (a @ np.ascontiguousarray(b.real)) + 1j * (a @ np.ascontiguousarray(b.imag))
    return a @ b


def _ladder(c, sign):
    """x (sign=+1) or d/dx (sign=-1) along axis 0; output has one more row."""
    c = np.asarray(c)
    n = c.shape[0]
    out = np.zeros((n + 1,) + c.shape[1:], dtype=complex)
    k = np.arange(n).reshape((-1,) + (1,) * (c.ndim - 1))
    # component k of the input feeds k-1 with sqrt(k/2) and k+1 with +/-sqrt((k+1)/2)
    out[:-2] += np.sqrt(k[1:] / 2.0) * c[1:]
    out[1:] += sign * np.sqrt((k + 1) / 2.0) * c
    return out


def ladder_derivative(c, order=1):
    """Exact derivative coefficients along axis 0 (``order`` extra rows)."""
    for _ in range(order):
        c = _ladder(c, sign=-1.0)
    return c


def _truncate(f, extended, label):
    n = f.basis.size
    dropped = float(np.linalg.norm(extended[n:]))
    if dropped:
        log.debug("%s dropped spill %.3e at N=%d", label, dropped, n)
    return TestFunction(extended[:n], f.basis, f.spill + dropped)


def project(sampler, basis, rule=None):
    """
    Coordinates ``c_n = <e_n, sampler>`` by quadrature.

    Parameters
    ----------
    sampler : callable
        Vectorized complex function of x.
    basis : HermiteBasis
    rule : QuadratureRule, optional
        Defaults to Gauss-Hermite of order 2N. Gauss-Hermite rules of
        lower order are rejected.
    """
    rule = basis.rule() if rule is None else rule
    if rule.kind == "gauss-hermite" and rule.order < 2 * basis.size:
        raise ValueError(
            f"Gauss-Hermite order {rule.order} is below 2N = {2 * basis.size}"
        )
    values = np.asarray(sampler(rule.nodes), dtype=complex)
    bad = ~np.isfinite(values)
    if bad.any():
        node = rule.nodes[np.argmax(bad)]
        raise NonFiniteSampleError(f"sampler is not finite at node x = {node!r}")
    coeffs = rmatmul(rule_table(basis.size, rule), rule.weights * values)
    return TestFunction(coeffs, basis)


def inner(f, g):
    """L2 product, antilinear in ``f``."""
    if f.basis != g.basis:
        raise BasisMismatchError(f"basis size {f.basis.size} vs {g.basis.size}")
    return complex(np.vdot(f.coeffs, g.coeffs))


def apply_q0(f):
    """Multiplication by x."""
    return _truncate(f, _ladder(np.asarray(f.coeffs), sign=1.0), "q0")


def apply_p0(f):
    """Momentum -i d/dx."""
    return _truncate(f, -1j * _ladder(np.asarray(f.coeffs), sign=-1.0), "p0")


def second_derivative(f):
    """Exact f'' as a length N + 2 coefficient array (nothing dropped)."""
    return f.derivative(2)


class DecayMetric(NamedTuple):
    """Numerical proxy for how well a function is resolved by its basis."""

    tail_ratio: float
    moment_sup: float
    spill: float


def decay_metric(f, rule=None):
    """
    Tail mass ratio over the top N/8 coefficients, ``sup |x|^4 |f(x)|``
    over the rule's nodes, and the accumulated ladder spill.
    """
    rule = f.basis.rule() if rule is None else rule
    vals = np.abs(f.on_rule(rule))
    moment = float(np.max(rule.nodes ** 4 * vals)) if vals.size else 0.0
    return DecayMetric(f.tail_mass(), moment, f.spill)


def operator_matrix(op, basis):
    """Matrix elements ``<e_m, op e_n>`` of a TestFunction -> TestFunction map."""
    cols = [op(basis.element(n)).coeffs for n in range(basis.size)]
    return np.column_stack(cols)


def gaussian(basis, center=0.0, width=1.0, frequency=0.0, normalized=False):
    """Projection of ``exp(i k x) exp(-(x - a)^2 / (2 w^2))``."""

    def sampler(x):
        return np.exp(1j * frequency * x - (x - center) ** 2 / (2.0 * width ** 2))

    f = project(sampler, basis)
    return f / f.norm() if normalized else f


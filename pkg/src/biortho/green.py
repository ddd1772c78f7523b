"""
Green-function similarity map with unbounded inverse.

    T^-1 = 1 - i p0^2  (so T^-1 f = f + i f''),  (T^-1)^dag f = f - i f''

T is convolution with the Green function of T^-1,

    G(x) = i / (sqrt(2) (1 + i)) exp(-|x| c),   c = (1 + i) / sqrt(2),

and T^dag is convolution with conj(G). Equivalently T is the Fourier
multiplier m(k) = 1 / (1 - i k^2). Both routes are implemented and kept
independent:

* grid route: samples on a cell-centred uniform grid, discrete convolution
  by FFT, Euler-Maclaurin correction for the kink of G at 0, re-projection
  onto the Hermite basis;
* multiplier route: Hermite functions are Fourier eigenfunctions,
  F[e_n] = (-i)^n e_n, so T's coefficients follow from a Gauss-Hermite sum
  in k-space with no spatial grid at all.

Images of T f decay only like exp(-|x|/sqrt(2)), which a Hermite basis
resolves slowly; hence the large default basis for this map.
"""
from __future__ import annotations

import functools
import math

import numpy as np
from scipy.signal import fftconvolve

from .deformation import SimilarityMap
from .distributions import Delta, DeltaDeriv, LinearComb, PlaneWave, Regular
from .errors import BoundaryLeakageError, SpillError
from .spectral import (
    HermiteBasis,
    TestFunction,
    gauss_legendre_panels,
    hermite_functions,
    ladder_derivative,
    rmatmul,
    rule_table,
    uniform_grid,
)

DEFAULT_SIZE = 1024
DEFAULT_EXTENT = 56.0
DEFAULT_POINTS = 12288
SPILL_TOL = 1e-8
LEAKAGE_TOL = 1e-10

DECAY = (1.0 + 1.0j) / math.sqrt(2.0)
AMPLITUDE = 1.0j / (math.sqrt(2.0) * (1.0 + 1.0j))


def kernel(x, adjoint=False):
    """G(x), or conj(G(x)) for the adjoint map."""
    x = np.asarray(x, dtype=float)
    a, c = (np.conj(AMPLITUDE), np.conj(DECAY)) if adjoint else (AMPLITUDE, DECAY)
    return a * np.exp(-np.abs(x) * c)


def multiplier(k, adjoint=False):
    """Fourier symbol of T (or T^dag): 1 / (1 -/+ i k^2)."""
    k = np.asarray(k, dtype=float)
    return 1.0 / (1.0 + (1j if adjoint else -1j) * k * k)


def kernel_mass(extent=40.0):
    """
    ``integral G`` by panel quadrature on [-extent, extent] plus the exact
    exponential tail ``2 A exp(-c L) / c`` beyond it.
    """
    rule = gauss_legendre_panels(float(extent), breakpoints=(0.0,))
    body = rule.integrate(kernel(rule.nodes))
    tail = 2.0 * AMPLITUDE * np.exp(-DECAY * extent) / DECAY
    return complex(body + tail)


@functools.lru_cache(maxsize=4)
def _grid_tables(size, extent, points):
    grid = uniform_grid(extent, points)
    # extra two rows give f'' for the O(h^4) kink correction
    values = hermite_functions(size + 2, grid.nodes)
    values.setflags(write=False)
    return grid, values


class GreenMap(SimilarityMap):
    """
    T = (1 - i p0^2)^-1 on a Hermite basis.

    Parameters
    ----------
    basis : HermiteBasis, optional
        Defaults to 1024 modes.
    extent, points : float, int
        Convolution grid ``[-extent, extent]`` with ``points`` cells.
    tol : float
        Map tolerance used by the verifier.
    spill_tol : float
        Largest relative spill accepted by T^-1 and (T^-1)^dag.
    route : {"grid", "multiplier"}
        Which route backs :meth:`apply_T` / :meth:`apply_Tdag`.
    """

    def __init__(self, basis=None, extent=DEFAULT_EXTENT, points=DEFAULT_POINTS,
                 tol=1e-5, spill_tol=SPILL_TOL, route="grid"):
        self._basis = HermiteBasis(DEFAULT_SIZE) if basis is None else basis
        if route not in ("grid", "multiplier"):
            raise ValueError(f"route must be 'grid' or 'multiplier', got {route!r}")
        self.extent = float(extent)
        self.points = int(points)
        uniform_grid(self.extent, self.points)  # validates
        self.tol = tol
        self.spill_tol = spill_tol
        self.route = route
        self.descriptor = "green"

    @property
    def basis(self):
        return self._basis

    @property
    def grid(self):
        return _grid_tables(self.basis.size, self.extent, self.points)[0]

    # -- unbounded side: exact ladder arithmetic -------------------------

    def _second_order(self, f, sign):
        n = self.basis.size
        d2 = f.derivative(2)
        out = np.array(d2, dtype=complex) * (sign * 1j)
        out[:n] += f.coeffs
        spill = float(np.linalg.norm(out[n:]))
        scale = f.norm() or 1.0
        if spill > self.spill_tol * scale:
            raise SpillError(
                f"1 {'+' if sign > 0 else '-'} i d^2/dx^2 spill {spill:.3e} exceeds "
                f"{self.spill_tol:.1e} x |f|; increase the basis size",
                spill,
            )
        return TestFunction(out[:n], self.basis, f.spill + spill)

    def apply_Tinv(self, f):
        return self._second_order(f, +1.0)

    def apply_Tinvdag(self, f):
        return self._second_order(f, -1.0)

    # -- bounded side -----------------------------------------------------

    def apply_T(self, f):
        if self.route == "multiplier":
            return self.apply_T_multiplier(f)
        return self.apply_T_grid(f)

    def apply_Tdag(self, f):
        if self.route == "multiplier":
            return self.apply_Tdag_multiplier(f)
        return self.apply_T_grid(f, adjoint=True)

    def apply_T_grid(self, f, adjoint=False):
        coeffs = self._convolve_coeffs(np.asarray(f.coeffs)[:, None], adjoint)[:, 0]
        return TestFunction(coeffs, self.basis, f.spill)

    def apply_Tdag_grid(self, f):
        return self.apply_T_grid(f, adjoint=True)

    def apply_T_multiplier(self, f, adjoint=False):
        coeffs = self._multiplier_coeffs(np.asarray(f.coeffs)[:, None], adjoint)[:, 0]
        return TestFunction(coeffs, self.basis, f.spill)

    def apply_Tdag_multiplier(self, f):
        return self.apply_T_multiplier(f, adjoint=True)

    def apply_many(self, name, functions):
        """Batched actions: all columns share one FFT and one set of matrix products."""
        functions = list(functions)
        if name not in ("T", "Tdag") or len(functions) < 2:
            return super().apply_many(name, functions)
        coeffs = np.column_stack([f.coeffs for f in functions])
        adjoint = name == "Tdag"
        if self.route == "multiplier":
            out = self._multiplier_coeffs(coeffs, adjoint)
        else:
            out = self._convolve_coeffs(coeffs, adjoint)
        return [TestFunction(out[:, j], self.basis, f.spill) for j, f in enumerate(functions)]

    def matrix(self, adjoint=False, route=None):
        """Truncated matrix ``<e_m, T e_n>`` (or of T^dag) by the chosen route."""
        eye = np.eye(self.basis.size, dtype=complex)
        if (route or self.route) == "multiplier":
            return self._multiplier_coeffs(eye, adjoint)
        return self._convolve_coeffs(eye, adjoint)

    def _convolve_coeffs(self, coeffs, adjoint):
        """Grid route on a stack of coefficient columns, shape (N, m)."""
        n = self.basis.size
        grid, values = _grid_tables(n, self.extent, self.points)
        h = grid.weights[0]
        samples = rmatmul(values[:n].T, coeffs)
        peak = np.abs(samples).max(axis=0)
        edge = np.maximum(np.abs(samples[0]), np.abs(samples[-1]))
        leaking = edge > LEAKAGE_TOL * np.where(peak > 0, peak, 1.0)
        if leaking.any():
            raise BoundaryLeakageError(
                f"function is {edge.max():.2e} at the grid edge |x| = {self.extent:g}; "
                "increase --grid-extent"
            )
        m = self.points
        offsets = h * np.arange(-(m - 1), m)
        kern = kernel(offsets, adjoint)
        conv = fftconvolve(samples, kern[:, None], mode="full", axes=0)[m - 1 : 2 * m - 1]
        amp, c = (np.conj(AMPLITUDE), np.conj(DECAY)) if adjoint else (AMPLITUDE, DECAY)
        ca = c * amp
        # Euler-Maclaurin for the derivative jumps of G(s) f(x - s) at s = 0
        d2_samples = rmatmul(values.T, ladder_derivative(coeffs, 2))
        conv = h * conv - (h * h / 12.0) * (2.0 * ca) * samples
        conv += (h ** 4 / 720.0) * (2.0 * c * c * ca * samples + 6.0 * ca * d2_samples)
        return h * rmatmul(values[:n], conv)

    def _multiplier_coeffs(self, coeffs, adjoint):
        n = self.basis.size
        rule = self.basis.rule()
        e = rule_table(n, rule)
        idx = np.arange(n)
        # hat f(k) = sum_n (-i)^n c_n e_n(k); then T f has coefficients i^m <e_m, m(k) hat f>
        hat = rmatmul(e.T, (-1j) ** idx[:, None] * coeffs)
        weighted = (rule.weights * multiplier(rule.nodes, adjoint))[:, None] * hat
        return (1j) ** idx[:, None] * rmatmul(e, weighted)

    # -- distributions ----------------------------------------------------

    def dual_atom(self, action, F):
        if action == "T":
            if isinstance(F, Delta):
                return eigen_q_closed(F.x0)
            if isinstance(F, PlaneWave):
                return LinearComb.of((complex(multiplier(F.p0)), F))
            return None
        if isinstance(F, Delta):
            return LinearComb.of((1.0, F), (-1j, DeltaDeriv(F.x0, 2)))
        if isinstance(F, DeltaDeriv):
            return LinearComb.of((1.0, F), (-1j, DeltaDeriv(F.x0, F.order + 2)))
        if isinstance(F, PlaneWave):
            return LinearComb.of((1.0 + 1j * F.p0 ** 2, F))
        return None


def eigen_q_closed(x0):
    """``eta_x0(x) = G(x - x0)`` as a Regular distribution with a kink at x0."""
    x0 = float(x0)
    return Regular(lambda x: kernel(np.asarray(x) - x0), breakpoints=(x0,), label=f"G(x-{x0:g})")


def eigen_q_upper_closed(x0):
    """``eta^x0 = delta_x0 - i delta''_x0``."""
    return LinearComb.of((1.0, Delta(x0)), (-1j, DeltaDeriv(x0, 2)))

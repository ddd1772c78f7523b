"""
Fixed family of test functions that stands in for "all of S(R)" in checks.

Members are Hermite functions e_0..e_5, real Gaussians
``exp(-(x - a)^2 / (2 w^2))`` for a in {0, +-1, +-3} and w in {0.7, 1, 2},
and the modulated Gaussian ``exp(2 i x) exp(-x^2 / 2)``.

Gaussians are projected onto the first N - 2 modes only. Two empty top
modes keep q0 p0 - p0 q0 = i exact in the truncated space and leave room
for the second derivative in T^-1 = 1 - i p0^2.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .spectral import HermiteBasis, TestFunction, project

CENTERS = (0.0, 1.0, -1.0, 3.0, -3.0)
WIDTHS = (0.7, 1.0, 2.0)
GUARD_MODES = 2


def _guarded(f, guard=GUARD_MODES):
    c = np.array(f.coeffs)
    if guard:
        c[-guard:] = 0.0
    return TestFunction(c, f.basis)


def gaussian_member(basis, center, width, frequency=0.0, guard=GUARD_MODES):
    """Guard-banded projection of ``exp(i k x) exp(-(x - a)^2 / (2 w^2))``."""

    def sampler(x):
        return np.exp(1j * frequency * x - (x - center) ** 2 / (2.0 * width ** 2))

    return _guarded(project(sampler, basis), guard)


@dataclass(frozen=True)
class Battery:
    """Named, ordered test functions on one basis."""

    names: tuple
    members: tuple

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(zip(self.names, self.members))

    def functions(self):
        return list(self.members)

    def get(self, name):
        return self.members[self.names.index(name)]

    def pairs(self):
        """All ordered pairs ``((name_f, f), (name_g, g))``, including f = g."""
        items = list(self)
        return [(a, b) for a in items for b in items]


@functools.lru_cache(maxsize=4)
def default_battery(basis):
    """
    The standard 22-member battery at ``basis.size``.

    Parameters
    ----------
    basis : HermiteBasis

    Returns
    -------
    Battery
    """
    if not isinstance(basis, HermiteBasis):
        raise TypeError(f"expected a HermiteBasis, got {type(basis).__name__}")
    names, members = [], []
    for n in range(min(6, basis.size)):
        names.append(f"hermite:{n}")
        members.append(basis.element(n))
    if basis.size > GUARD_MODES:
        for a in CENTERS:
            for w in WIDTHS:
                names.append(f"gaussian:{a:g},{w:g}")
                members.append(gaussian_member(basis, a, w))
        names.append("modulated:2")
        members.append(gaussian_member(basis, 0.0, 1.0, frequency=2.0))
    return Battery(tuple(names), tuple(members))

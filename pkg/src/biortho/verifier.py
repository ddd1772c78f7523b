"""
Check suite for a similarity map over the test-function battery.

Every identity becomes one :class:`CheckResult`. A check collects absolute
residuals together with a comparison scale (usually ``|phi| |psi|``) and
passes when every residual satisfies ``residual <= tol * scale``; the
reported residual and scale are those of the worst ratio.

Reports serialize to JSON with a fixed key order and 17-significant-digit
floats, so identical runs give identical bytes.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .battery import default_battery
from .deformation import (
    DeformedPair,
    IdentityMap,
    dual_apply,
    metric_apply,
)
from .distributions import (
    Delta,
    PlaneWave,
    Regular,
    convolve_with_test,
    extended_inner,
    pair,
    sample_regular_part,
)
from .errors import BiorthoError
from .green import GreenMap, kernel_mass
from .rankone import RankOneMap, deformed_action_closed, delta_term
from .spectral import TestFunction, apply_p0, apply_q0, inner, rmatmul, rule_table

X0_GRID = (-2.0, -0.5, 0.0, 1.0, 3.0)
P0_GRID = (0.0, 1.0, 2.0)
TRUNCATIONS = (16, 32, 64)
KERNEL_POINTS = (0.0, 1.0)
RESOLUTION_WINDOW = 12.0
MONOTONE_SLACK = 1e-12
PARITY_FLOOR = 1e-3

BASE_TOL = 1e-10
FIXED_TOLS = {
    "kernel_mass": 1e-8,
    "route_agreement": 1e-6,
    "eta_closed_form": 1e-12,
    "mu_multiplier": 1e-6,
    "constraint_identity": 1e-14,
}
ROUND_TRIP_TOL = {"rankone": 1e-13}

ETA_AT_ORIGIN = (1.0 + 1.0j) / (2.0 * math.sqrt(2.0))


@dataclass
class CheckResult:
    name: str
    anchor: str
    params: dict
    residual: float
    scale: float
    tol: float
    passed: bool
    ms: float | None = None

    def to_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "params": self.params,
            "residual": self.residual,
            "scale": self.scale,
            "tol": self.tol,
            "pass": self.passed,
            "ms": self.ms,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["name"], d["anchor"], d["params"], float(d["residual"]), float(d["scale"]),
            float(d["tol"]), bool(d["pass"]), None if d["ms"] is None else float(d["ms"]),
        )


@dataclass
class VerificationReport:
    map: str
    config: dict
    checks: list = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self):
        return self.error is None and all(c.passed for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        d = {
            "map": self.map,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }
        if self.error is not None:
            d["error"] = self.error
        return d

    def to_json(self):
        return _encode(self.to_dict()) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["map"], d["config"], [CheckResult.from_dict(c) for c in d["checks"]], d.get("error"))


def _float(x):
    x = float(x) + 0.0  # no negative zero
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class _Worst:
    """Tracks the residual with the largest ratio to its scale."""

    def __init__(self):
        self.ratio = -1.0
        self.residual = 0.0
        self.scale = 1.0
        self.where = None

    def add(self, residual, scale=1.0, where=None):
        residual = float(residual)
        scale = float(scale) if scale > 0 else 1.0
        ratio = residual / scale if math.isfinite(residual) else math.inf
        if ratio > self.ratio:
            self.ratio, self.residual, self.scale, self.where = ratio, residual, scale, where


def map_kind(smap):
    if isinstance(smap, IdentityMap):
        return "identity"
    if isinstance(smap, RankOneMap):
        return "rankone"
    if isinstance(smap, GreenMap):
        return "green"
    return "custom"


class QuasiBasisColumns:
    """Lazily built ``phi_n = T e_n`` and ``Psi_n = (T^-1)^dag e_n``."""

    def __init__(self, smap):
        self.smap = smap
        self._phi = {}
        self._psi = {}
        self._points = {}
        self._on_rule = {}

    def ensure(self, m):
        """Build phi_n and Psi_n for every n < m in one batch."""
        missing = [n for n in range(m) if n not in self._phi]
        if missing:
            elements = [self.smap.basis.element(n) for n in missing]
            for n, f in zip(missing, self.smap.apply_many("T", elements)):
                self._phi[n] = f
            for n, f in zip(missing, self.smap.apply_many("Tinvdag", elements)):
                self._psi[n] = f

    def phi(self, n):
        if n not in self._phi:
            self._phi[n] = self.smap.apply_T(self.smap.basis.element(n))
        return self._phi[n]

    def psi(self, n):
        if n not in self._psi:
            self._psi[n] = self.smap.apply_Tinvdag(self.smap.basis.element(n))
        return self._psi[n]

    def phi_at(self, n, x0):
        key = (n, float(x0))
        if key not in self._points:
            self._points[key] = complex(self.phi(n)(np.array([x0], dtype=float))[0])
        return self._points[key]

    def psi_on_rule(self, n, rule):
        key = (n, id(rule))
        if key not in self._on_rule:
            self._on_rule[key] = self.psi(n).on_rule(rule)
        return self._on_rule[key]


def _check_truncation(smap, m):
    if not 1 <= m <= smap.basis.size:
        raise ValueError(f"truncation {m} outside 1..{smap.basis.size}")


def check_quasi_basis(smap, gamma, eta, m, columns=None):
    """
    Largest deviation of the two truncated quasi-basis expansions of ``<gamma, eta>``.

        sum_{n<M} <gamma, phi_n><Psi_n, eta>   and   sum_{n<M} <gamma, Psi_n><phi_n, eta>
    """
    _check_truncation(smap, m)
    cols = columns or QuasiBasisColumns(smap)
    cols.ensure(m)
    target = inner(gamma, eta)
    first = sum((inner(gamma, cols.phi(n)) * inner(cols.psi(n), eta) for n in range(m)), 0j)
    second = sum((inner(gamma, cols.psi(n)) * inner(cols.phi(n), eta) for n in range(m)), 0j)
    return max(abs(first - target), abs(second - target))


def check_delta_kernel(smap, x0, psi, m, columns=None):
    """
    ``|sum_{n<M} phi_n(x0) <Psi_n, psi> - psi(x0)|`` with the overlaps by
    Gauss-Hermite quadrature.
    """
    _check_truncation(smap, m)
    cols = columns or QuasiBasisColumns(smap)
    cols.ensure(m)
    rule = smap.basis.rule()
    w_psi = rule.weights * psi.on_rule(rule)
    total = 0j
    for n in range(m):
        overlap = np.sum(np.conj(cols.psi_on_rule(n, rule)) * w_psi)
        total += cols.phi_at(n, x0) * overlap
    return abs(total - psi(np.array([x0], dtype=float))[0])


class _Workspace:
    """Memoized map actions on all battery members, computed in batches."""

    def __init__(self, smap, battery):
        self.smap = smap
        self.ops = DeformedPair(smap)
        self.names = list(battery.names)
        self.members = battery.functions()
        self._memo = {}

    def __len__(self):
        return len(self.members)

    def get(self, action, i):
        return self.column(action)[i]

    def column(self, action):
        if action not in self._memo:
            self._memo[action] = self._compute(action)
        return self._memo[action]

    def _compute(self, action):
        m = self.smap
        if action in ("T", "Tinv", "Tdag", "Tinvdag"):
            return m.apply_many(action, self.members)
        base = {"q": apply_q0, "p": apply_p0, "q_dag": apply_q0, "p_dag": apply_p0}[action]
        if action in ("q", "p"):
            return m.apply_many("T", [base(g) for g in self.column("Tinv")])
        return m.apply_many("Tinvdag", [base(g) for g in self.column("Tdag")])


class _Suite:
    def __init__(self, smap, battery, tol, timings):
        self.smap = smap
        self.kind = map_kind(smap)
        self.basis = smap.basis
        self.battery = battery
        self.tol = smap.tol if tol is None else float(tol)
        self.timings = timings
        self.ws = _Workspace(smap, battery)
        self.cols = QuasiBasisColumns(smap)
        self.rule = self.basis.rule()
        self.truncations = tuple(m for m in TRUNCATIONS if m <= self.basis.size)
        self.tolerances = tolerances(smap, tol)
        self.round_trip_tol = self.tolerances["round_trip"]

    # -- helpers ---------------------------------------------------------

    def members(self):
        return list(enumerate(self.ws.members))

    def _name(self, i):
        return self.ws.names[i]

    def _result(self, name, anchor, tol, worst, params=None, ok=True):
        params = dict(params or {})
        if worst.where is not None:
            params["worst"] = worst.where
        passed = bool(ok and worst.residual <= tol * worst.scale)
        return CheckResult(name, anchor, params, worst.residual, worst.scale, tol, passed)

    def _coeff_matrix(self, action=None):
        if action is None:
            return np.column_stack([f.coeffs for f in self.ws.members])
        return np.column_stack([self.ws.get(action, i).coeffs for i in range(len(self.ws))])

    def _pairwise(self, left, right, target, name_scale=True):
        """Worst ``|left^H right - target|`` over member pairs, scaled by norms."""
        worst = _Worst()
        norms = np.linalg.norm(self._coeff_matrix(), axis=0)
        diff = np.abs(left.conj().T @ right - target)
        scale = np.outer(norms, norms)
        ratio = diff / scale
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        worst.add(diff[i, j], scale[i, j], f"{self._name(i)} x {self._name(j)}")
        return worst

    def _values_on_rule(self, coeffs):
        return rmatmul(rule_table(self.basis.size, self.rule).T, coeffs)

    # -- undeformed ------------------------------------------------------

    def orthonormality(self):
        e = rule_table(self.basis.size, self.rule)
        gram = (e * self.rule.weights) @ e.T
        worst = _Worst()
        worst.add(np.max(np.abs(gram - np.eye(self.basis.size))))
        return self._result(
            "orthonormality", "<e_m, e_n> = delta_mn by Gauss-Hermite quadrature",
            BASE_TOL, worst, {"order": self.rule.order},
        )

    def ccr_undeformed(self):
        worst = _Worst()
        for i, f in self.members():
            g = apply_q0(apply_p0(f)) - apply_p0(apply_q0(f)) - 1j * f
            worst.add(g.norm(), f.norm(), self._name(i))
        return self._result("ccr_undeformed", "[q0, p0] f = i f", BASE_TOL, worst)

    def resolution_undeformed(self):
        c = self._coeff_matrix()
        vals = self._values_on_rule(c)
        lhs = vals.conj().T @ (self.rule.weights[:, None] * vals)
        worst = self._pairwise(c, c, lhs)
        return self._result(
            "resolution_undeformed",
            "integral conj(phi(x0)) psi(x0) dx0 = <phi, psi>",
            BASE_TOL, worst, {"rule": "gauss-hermite", "order": self.rule.order},
        )

    def delta_orthogonality(self):
        worst = _Worst()
        for x0 in X0_GRID:
            for y0 in X0_GRID:
                out = extended_inner(Delta(x0), Delta(y0))
                r = abs(out.x0 - (x0 - y0)) if isinstance(out, Delta) else math.inf
                worst.add(r, 1.0, f"({x0:g}, {y0:g})")
        return self._result(
            "delta_orthogonality", "<xi_x0, xi_y0> = delta(x0 - y0), symbolic",
            BASE_TOL, worst, {"x0": list(X0_GRID)},
        )

    def extended_product(self):
        worst = _Worst()
        sign = (-1.0) ** np.arange(self.basis.size)
        for i, f in self.members():
            reflected = TestFunction(sign * f.coeffs, self.basis)
            for x0 in X0_GRID:
                direct = extended_inner(Delta(x0), Regular(f))
                via_conv = convolve_with_test(Delta(x0), reflected)(np.array([0.0]))[0]
                worst.add(abs(direct - via_conv), f.norm(), f"{self._name(i)} @ {x0:g}")
        return self._result(
            "extended_product", "<xi_x0, phi> = (conj(xi_x0) * phi~)(0) = phi(x0)",
            BASE_TOL, worst, {"x0": list(X0_GRID)},
        )

    # -- deformation-generic --------------------------------------------

    def round_trip(self):
        worst = _Worst()
        m, ws = self.smap, self.ws
        cases = {
            "Tinv.T": m.apply_many("Tinv", ws.column("T")),
            "T.Tinv": m.apply_many("T", ws.column("Tinv")),
            "Tinvdag.Tdag": m.apply_many("Tinvdag", ws.column("Tdag")),
            "Tdag.Tinvdag": m.apply_many("Tdag", ws.column("Tinvdag")),
        }
        for key, images in cases.items():
            for i, (f, g) in enumerate(zip(ws.members, images)):
                worst.add((g - f).norm(), f.norm(), f"{key} on {self._name(i)}")
        return self._result(
            "round_trip", "T^-1 T = T T^-1 = Id and the same for the adjoint pair",
            self.round_trip_tol, worst,
        )

    def adjoint_consistency(self):
        c = self._coeff_matrix()
        w1 = self._pairwise(self._coeff_matrix("Tdag"), c, c.conj().T @ self._coeff_matrix("T"))
        w2 = self._pairwise(self._coeff_matrix("Tinvdag"), c, c.conj().T @ self._coeff_matrix("Tinv"))
        worst = w1 if w1.ratio >= w2.ratio else w2
        return self._result(
            "adjoint_consistency", "<T^dag f, g> = <f, T g> and <(T^-1)^dag f, g> = <f, T^-1 g>",
            self.tol, worst,
        )

    def deformed_adjoints(self):
        c = self._coeff_matrix()
        worst = _Worst()
        for op in ("q", "p"):
            w = self._pairwise(self._coeff_matrix(op + "_dag"), c, c.conj().T @ self._coeff_matrix(op))
            if w.ratio > worst.ratio:
                worst = w
                worst.where = f"{op}: {w.where}"
        return self._result(
            "deformed_adjoints", "<q^dag f, g> = <f, q g> and <p^dag f, g> = <f, p g>",
            self.tol, worst,
        )

    def duality_coherence(self):
        worst = _Worst()
        atoms = [Delta(x0) for x0 in X0_GRID] + [PlaneWave(p0) for p0 in P0_GRID]
        for F in atoms:
            images = {"T": dual_apply(self.smap, "T", F), "Tinvdag": dual_apply(self.smap, "Tinvdag", F)}
            for i, f in self.members():
                lhs_t = pair(images["T"], f)
                rhs_t = pair(F, self.ws.get("Tdag", i))
                lhs_u = pair(images["Tinvdag"], f)
                rhs_u = pair(F, self.ws.get("Tinv", i))
                worst.add(abs(lhs_t - rhs_t), f.norm(), f"T {F.describe()} vs {self._name(i)}")
                worst.add(abs(lhs_u - rhs_u), f.norm(), f"Tinvdag {F.describe()} vs {self._name(i)}")
        return self._result(
            "duality_coherence", "<T F, phi> = <F, T^dag phi> and <(T^-1)^dag F, phi> = <F, T^-1 phi>",
            self.tol, worst, {"x0": list(X0_GRID), "p0": list(P0_GRID)},
        )

    def smeared_biorthogonality(self):
        c = self._coeff_matrix()
        worst = self._pairwise(self._coeff_matrix("T"), self._coeff_matrix("Tinvdag"), c.conj().T @ c)
        return self._result(
            "smeared_biorthogonality", "<eta_x0, eta^y0> = delta(x0 - y0), smeared: <T phi, (T^-1)^dag psi> = <phi, psi>",
            self.tol, worst,
        )

    def _resolution(self, left_action, right_action, name, anchor):
        c = self._coeff_matrix()
        a = self._values_on_rule(self._coeff_matrix(left_action))
        b = self._values_on_rule(self._coeff_matrix(right_action))
        w = self.rule.weights[:, None]
        full = a.conj().T @ (w * b)
        outside = np.abs(self.rule.nodes) > RESOLUTION_WINDOW
        tail = a[outside].conj().T @ (w[outside] * b[outside])
        worst = self._pairwise(c, c, full)
        worst_tail = float(np.max(np.abs(tail))) if outside.any() else 0.0
        return self._result(
            name, anchor, self.tol, worst,
            {"rule": "gauss-hermite", "order": self.rule.order, "window": RESOLUTION_WINDOW,
             "tail_beyond_window": worst_tail},
        )

    def resolution_lower_upper(self):
        return self._resolution(
            "Tdag", "Tinv", "resolution_lower_upper",
            "integral <phi, eta_x0><eta^x0, psi> dx0 = <phi, psi>",
        )

    def resolution_upper_lower(self):
        return self._resolution(
            "Tinv", "Tdag", "resolution_upper_lower",
            "integral <phi, eta^x0><eta_x0, psi> dx0 = <phi, psi>",
        )

    def resolution_momentum(self):
        # <phi, mu_p0> = conj(F[T^dag phi](p0)), <mu^p0, psi> = F[T^-1 psi](p0)
        phase = ((-1j) ** np.arange(self.basis.size))[:, None]
        c = self._coeff_matrix()
        a = self._values_on_rule(phase * self._coeff_matrix("Tdag"))
        b = self._values_on_rule(phase * self._coeff_matrix("Tinv"))
        full = a.conj().T @ (self.rule.weights[:, None] * b)
        worst = self._pairwise(c, c, full)
        return self._result(
            "resolution_momentum", "integral <phi, mu_p0><mu^p0, psi> dp0 = <phi, psi>",
            self.tol, worst, {"rule": "gauss-hermite", "order": self.rule.order, "remark_derived": True},
        )

    def _weak_eigen(self, name, anchor, action, make, op, grid, label):
        worst = _Worst()
        for lam in grid:
            F = dual_apply(self.smap, action, make(lam))
            for i, f in self.members():
                r = abs(pair(F, self.ws.get(op, i)) - lam * pair(F, f))
                worst.add(r, (1.0 + abs(lam)) * f.norm(), f"{label}={lam:g}, {self._name(i)}")
        return self._result(name, anchor, self.tol, worst, {label: list(grid)})

    def eigen_q_lower(self):
        return self._weak_eigen(
            "eigen_q_lower", "q eta_x0 = x0 eta_x0 (weak form)", "T", Delta, "q_dag", X0_GRID, "x0"
        )

    def eigen_q_upper(self):
        return self._weak_eigen(
            "eigen_q_upper", "q^dag eta^x0 = x0 eta^x0 (weak form)", "Tinvdag", Delta, "q", X0_GRID, "x0"
        )

    def eigen_p_lower(self):
        return self._weak_eigen(
            "eigen_p_lower", "p mu_p0 = p0 mu_p0 (weak form)", "T", PlaneWave, "p_dag", P0_GRID, "p0"
        )

    def eigen_p_upper(self):
        return self._weak_eigen(
            "eigen_p_upper", "p^dag mu^p0 = p0 mu^p0 (weak form)", "Tinvdag", PlaneWave, "p", P0_GRID, "p0"
        )

    def _series_check(self, name, anchor, series_of, full_of, members_params):
        worst = _Worst()
        violations = []
        series_max = [0.0] * len(self.truncations)
        for key, (series, full, scale) in members_params(series_of, full_of):
            for k, r in enumerate(series):
                series_max[k] = max(series_max[k], r / scale)
            if any(b > a + MONOTONE_SLACK * scale for a, b in zip(series, series[1:])):
                violations.append(key)
            worst.add(full, scale, key)
        params = {
            "truncations": list(self.truncations),
            "worst_relative_series": series_max,
            "full_truncation": self.basis.size,
            "monotone_violations": violations,
        }
        return self._result(name, anchor, self.tol, worst, params, ok=not violations)

    def quasi_basis(self):
        def rows(_s, _f):
            for i, f in self.members():
                series = [check_quasi_basis(self.smap, f, f, m, self.cols) for m in self.truncations]
                # all N terms at once: sum_n <f, phi_n><Psi_n, f> = <T^dag f, T^-1 f>
                a, b = self.ws.get("Tdag", i), self.ws.get("Tinv", i)
                target = inner(f, f)
                full = max(abs(inner(a, b) - target), abs(inner(b, a) - target))
                yield self._name(i), (series, full, f.norm() ** 2)

        return self._series_check(
            "quasi_basis", "<gamma, eta> = sum_n <gamma, phi_n><Psi_n, eta> = sum_n <gamma, Psi_n><phi_n, eta>",
            None, None, rows,
        )

    def delta_kernel(self):
        at = np.array(KERNEL_POINTS)

        def rows(_s, _f):
            # sum over all n of phi_n(x0) <Psi_n, psi> = (T T^-1 psi)(x0)
            restored = self.smap.apply_many("T", self.ws.column("Tinv"))
            for i, f in self.members():
                full_vals = restored[i](at) - f(at)
                for k, x0 in enumerate(KERNEL_POINTS):
                    series = [check_delta_kernel(self.smap, x0, f, m, self.cols) for m in self.truncations]
                    yield f"{self._name(i)} @ {x0:g}", (series, abs(full_vals[k]), f.norm())

        result = self._series_check(
            "delta_kernel", "delta(x0 - y0) = sum_n <xi_x0, phi_n><Psi_n, xi_y0>, smeared against psi",
            None, None, rows,
        )
        result.params["x0"] = list(KERNEL_POINTS)
        return result

    def quasi_basis_biorthonormality(self):
        k = min(self.basis.size - 2, max(self.truncations, default=1))
        k = max(k, 1)
        phi = np.column_stack([self.cols.phi(n).coeffs for n in range(k)])
        psi = np.column_stack([self.cols.psi(n).coeffs for n in range(k)])
        gram = phi.conj().T @ psi
        err = np.abs(gram - np.eye(k))
        n, m = np.unravel_index(np.argmax(err), err.shape)
        worst = _Worst()
        worst.add(err[n, m], 1.0, f"({n}, {m})")
        return self._result(
            "quasi_basis_biorthonormality", "<phi_n, Psi_m> = delta_nm", self.tol, worst, {"modes": k}
        )

    def commutator(self):
        worst = _Worst()
        m, ws = self.smap, self.ws
        qp = m.apply_many("T", [apply_q0(m.apply_Tinv(g)) for g in ws.column("p")])
        pq = m.apply_many("T", [apply_p0(m.apply_Tinv(g)) for g in ws.column("q")])
        for i, f in self.members():
            g = qp[i] - pq[i] - 1j * f
            worst.add(g.norm(), f.norm(), self._name(i))
        return self._result("commutator", "[q, p] f = i f", self.tol, worst)

    def metric_inverse(self):
        worst = _Worst()
        m = self.smap
        # S_eta S^eta = T T^dag (T^-1)^dag T^-1, applied right to left
        up = [metric_apply("S_eta_up", m, f) for f in self.ws.members]
        out = m.apply_many("T", m.apply_many("Tdag", up))
        for i, f in self.members():
            worst.add((out[i] - f).norm(), f.norm(), self._name(i))
        return self._result("metric_inverse", "S_eta S^eta = Id", self.tol, worst)

    def metric_positivity(self):
        worst = _Worst()
        s_eta = self.smap.apply_many("T", self.ws.column("Tdag"))
        for i, f in self.members():
            val = inner(f, s_eta[i])
            worst.add(max(abs(val.imag), -val.real, 0.0), f.norm() ** 2, self._name(i))
        return self._result("metric_positivity", "<f, S_eta f> is real and >= 0", self.tol, worst)

    def metric_intertwining(self):
        worst = _Worst()
        m = self.smap
        lhs = m.apply_many("T", m.apply_many("Tdag", self.ws.column("Tinvdag")))
        for i, f in self.members():
            worst.add((lhs[i] - self.ws.get("T", i)).norm(), f.norm(), self._name(i))
        return self._result(
            "metric_intertwining", "S_eta eta^y = eta_y, smeared: T T^dag (T^-1)^dag psi = T psi",
            self.tol, worst,
        )

    # -- rank-one --------------------------------------------------------

    def closed_form_actions(self):
        worst = _Worst()
        for i, f in self.members():
            for which in ("q", "p"):
                d = deformed_action_closed(self.smap, which, f) - self.ws.get(which, i)
                worst.add(d.norm(), f.norm(), f"{which} on {self._name(i)}")
        return self._result(
            "closed_form_actions", "explicit q phi and p phi equal T q0 T^-1 phi and T p0 T^-1 phi",
            self.tol, worst,
        )

    def deformation_term(self):
        worst = _Worst()
        base = {"q0": apply_q0, "p0": apply_p0}
        for i, f in self.members():
            for theta0, op in base.items():
                composed = self.smap.apply_T(op(self.ws.get("Tinv", i)))
                d = composed - op(f) - delta_term(self.smap, theta0, f)
                worst.add(d.norm(), f.norm(), f"{theta0} on {self._name(i)}")
        return self._result(
            "deformation_term", "T Theta0 T^-1 phi = Theta0 phi + delta phi", self.tol, worst
        )

    def deformation_parity(self):
        probes = {"e_0": self.basis.element(0), "u": self.smap.u}
        norms = {}
        for label, phi in probes.items():
            for theta0 in ("q0", "p0"):
                norms[f"{theta0} on {label}"] = delta_term(self.smap, theta0, phi).norm()
        where, smallest = min(norms.items(), key=lambda kv: kv[1])
        worst = _Worst()
        worst.add(max(0.0, PARITY_FLOOR - smallest), 1.0, where)
        params = {
            "floor": PARITY_FLOOR,
            "min_norm": smallest,
            "parity_u": self.smap.u.parity(),
            "parity_v": self.smap.v.parity(),
        }
        return self._result(
            "deformation_parity", "delta phi does not vanish when u, v share a parity or have none",
            0.0, worst, params,
        )

    def constraint_identity(self):
        worst = _Worst()
        worst.add(self.smap.constraint_residual())
        return self._result(
            "constraint_identity", "alpha + beta + alpha beta = 0",
            FIXED_TOLS["constraint_identity"], worst,
            {"alpha": [self.smap.alpha.real, self.smap.alpha.imag],
             "beta": [self.smap.beta.real, self.smap.beta.imag]},
        )

    # -- green -----------------------------------------------------------

    def kernel_mass(self):
        worst = _Worst()
        mass = kernel_mass()
        worst.add(abs(mass - 1.0))
        return self._result(
            "kernel_mass", "integral G = 1", FIXED_TOLS["kernel_mass"], worst,
            {"value": [mass.real, mass.imag]},
        )

    def route_agreement(self):
        worst = _Worst()
        m = self.smap
        c = self._coeff_matrix()
        for adjoint, label in ((False, "T"), (True, "Tdag")):
            diff = m._convolve_coeffs(c, adjoint) - m._multiplier_coeffs(c, adjoint)
            for i, f in self.members():
                worst.add(np.linalg.norm(diff[:, i]), f.norm(), f"{label} on {self._name(i)}")
        return self._result(
            "route_agreement", "kernel convolution T equals Fourier multiplier 1 / (1 - i k^2)",
            FIXED_TOLS["route_agreement"], worst,
        )

    def eta_closed_form(self):
        worst = _Worst()
        for x0 in X0_GRID:
            eta = dual_apply(self.smap, "T", Delta(x0))
            val = sample_regular_part(eta, np.array([x0]))[0]
            worst.add(abs(val - ETA_AT_ORIGIN), 1.0, f"x0={x0:g}")
        return self._result(
            "eta_closed_form", "eta_x0(x0) = i / (sqrt(2) (1 + i)) = (1 + i) / (2 sqrt(2))",
            FIXED_TOLS["eta_closed_form"], worst, {"x0": list(X0_GRID)},
        )

    def mu_multiplier(self):
        worst = _Worst()
        for p0 in P0_GRID:
            mu = dual_apply(self.smap, "T", PlaneWave(p0))
            for i, f in self.members():
                r = abs(pair(mu, f) - pair(PlaneWave(p0), self.ws.get("Tdag", i)))
                worst.add(r, f.norm(), f"p0={p0:g}, {self._name(i)}")
        return self._result(
            "mu_multiplier", "mu_p0 = theta_p0 / (1 - i p0^2)",
            FIXED_TOLS["mu_multiplier"], worst, {"p0": list(P0_GRID)},
        )

    def plan(self):
        base = [
            self.orthonormality, self.ccr_undeformed, self.resolution_undeformed,
            self.delta_orthogonality, self.extended_product,
        ]
        generic = [
            self.round_trip, self.adjoint_consistency, self.deformed_adjoints,
            self.duality_coherence, self.smeared_biorthogonality,
            self.resolution_lower_upper, self.resolution_upper_lower, self.resolution_momentum,
            self.eigen_q_lower, self.eigen_q_upper, self.eigen_p_lower, self.eigen_p_upper,
            self.quasi_basis, self.delta_kernel, self.quasi_basis_biorthonormality,
            self.commutator, self.metric_inverse, self.metric_positivity, self.metric_intertwining,
        ]
        specific = []
        if self.kind == "rankone":
            specific = [self.closed_form_actions, self.deformation_term,
                        self.deformation_parity, self.constraint_identity]
        elif self.kind == "green":
            specific = [self.kernel_mass, self.route_agreement, self.eta_closed_form, self.mu_multiplier]
        return base + generic + specific


def tolerances(smap, tol=None):
    """Tolerance of every check family for ``smap``; ``tol`` overrides the map's."""
    kind = map_kind(smap)
    base = smap.tol if tol is None else float(tol)
    round_trip = ROUND_TRIP_TOL.get(kind, base) if tol is None else base
    out = {"map": base, "round_trip": round_trip, "base": BASE_TOL}
    if kind == "rankone":
        out["constraint_identity"] = FIXED_TOLS["constraint_identity"]
    elif kind == "green":
        for key in ("kernel_mass", "route_agreement", "eta_closed_form", "mu_multiplier"):
            out[key] = FIXED_TOLS[key]
    return out


def suite_config(smap, tol=None):
    grid = None
    if isinstance(smap, GreenMap):
        grid = {"extent": smap.extent, "points": smap.points}
    return {"N": smap.basis.size, "grid": grid, "tolerances": tolerances(smap, tol)}


def run_suite(smap, battery=None, tol=None, timings=False, only=None):
    """
    Run every check for ``smap`` in a fixed order.

    Parameters
    ----------
    smap : SimilarityMap
    battery : Battery, optional
        Defaults to :func:`default_battery` on the map's basis.
    tol : float, optional
        Overrides the map tolerance used by the generic checks.
    timings : bool
        Record per-check wall time in ``ms``; off by default so that
        reports are byte-identical across runs.
    only : iterable of str, optional
        Restrict to the named checks (order is unchanged).

    Returns
    -------
    VerificationReport
        On a library error the report holds the checks completed so far
        and an ``error`` message.
    """
    battery = default_battery(smap.basis) if battery is None else battery
    suite = _Suite(smap, battery, tol, timings)
    report = VerificationReport(smap.descriptor, suite_config(smap, tol))
    wanted = None if only is None else set(only)
    for check in suite.plan():
        if wanted is not None and check.__name__ not in wanted:
            continue
        start = time.perf_counter()
        try:
            result = check()
        except (BiorthoError, ArithmeticError, ValueError) as exc:
            report.error = f"{check.__name__}: {exc}"
            break
        if timings:
            result.ms = 1e3 * (time.perf_counter() - start)
        report.checks.append(result)
    return report

"""
Command-line front end.

    biortho verify     --map rankone --alpha 1,0 --u hermite:0 --v hermite:0
    biortho eigenstate --map green --family eta --x0 0
    biortho matrix     --map identity --operator q0 --basis-size 4
    biortho profile    --map green --what kernel

Exit status: 0 all checks pass, 1 some check failed, 2 bad configuration
or map construction, 3 I/O error. Errors are reported as one line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import green as green_mod
from .battery import default_battery
from .deformation import IdentityMap, dual_apply, make_deformed, metric_apply
from .distributions import Delta, PlaneWave, atoms, sample_regular_part, symbolic_terms
from .errors import BiorthoError
from .green import GreenMap
from .rankone import RankOneMap
from .spectral import HermiteBasis, TestFunction, apply_p0, apply_q0, project
from .verifier import (
    QuasiBasisColumns,
    VerificationReport,
    _encode,
    _float,
    check_delta_kernel,
    check_quasi_basis,
    run_suite,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
DEFAULT_N = 64
ENV_N = "BIORTHO_DEFAULT_N"
OPERATORS = ("q", "p", "q_dag", "p_dag", "q0", "p0", "S_eta", "S_eta_up")
FAMILIES = ("eta", "eta-up", "mu", "mu-up")
PROFILES = ("kernel", "eta", "battery", "quasi-basis-residuals", "delta-kernel-residuals")
COEFF_HEADER = re.compile(r"^\s*hermite-coeffs\s+N\s*=\s*(\d+)\s*$")


class ConfigError(Exception):
    """Rejected command-line configuration (exit status 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- parsing helpers -----------------------------------------------------


def parse_complex(text):
    """``"re,im"`` (or a bare real) to a complex number."""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"expected a complex number as 're,im', got {text!r}")


def read_coefficients(path, basis):
    """
    Read a ``hermite-coeffs N=...`` file of ``re,im`` lines.

    Shorter files are zero-padded to the basis size; longer ones are rejected.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read coefficient file {path}: {exc.strerror}") from exc
    lines = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not COEFF_HEADER.match(lines[0]):
        raise ConfigError(f"{path}: first line must be 'hermite-coeffs N=<count>'")
    n = int(COEFF_HEADER.match(lines[0]).group(1))
    values = [parse_complex(ln) for ln in lines[1:]]
    if len(values) != n:
        raise ConfigError(f"{path}: header declares N={n} but {len(values)} coefficients follow")
    if n > basis.size:
        raise ConfigError(f"{path}: {n} coefficients exceed basis size {basis.size}")
    c = np.zeros(basis.size, dtype=complex)
    c[:n] = values
    return TestFunction(c, basis)


def parse_function(spec, basis):
    """
    ``hermite:n``, ``gaussian:center,width`` (unit L2 norm), a coefficient
    file, or a ``+``-joined sum of those.
    """
    if "+" in spec and not Path(spec).exists():
        total = basis.zero()
        for part in spec.split("+"):
            total = total + parse_function(part.strip(), basis)
        return total
    if spec.startswith("hermite:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad Hermite index in {spec!r}") from None
        if not 0 <= n < basis.size:
            raise ConfigError(f"{spec}: index outside 0..{basis.size - 1}")
        return basis.element(n)
    if spec.startswith("gaussian:"):
        args = spec.split(":", 1)[1].split(",")
        try:
            center, width = (float(a) for a in args)
        except ValueError:
            raise ConfigError(f"expected gaussian:center,width, got {spec!r}") from None
        if width <= 0:
            raise ConfigError(f"{spec}: width must be positive")
        f = project(lambda x: np.exp(-((x - center) ** 2) / (2.0 * width ** 2)), basis)
        return f / f.norm()
    if Path(spec).exists():
        return read_coefficients(spec, basis)
    raise ConfigError(f"unknown function {spec!r}: use hermite:n, gaussian:c,w or a coefficient file")


def default_size(map_name):
    env = os.environ.get(ENV_N)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{ENV_N} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{ENV_N} must be a positive integer, got {env!r}")
        return n
    return green_mod.DEFAULT_SIZE if map_name == "green" else DEFAULT_N


def build_map(args, spill_tol=None):
    """Construct the map selected by ``args``; raises ConfigError or a library error."""
    n = args.basis_size if args.basis_size is not None else default_size(args.map)
    if n < 1:
        raise ConfigError(f"--basis-size must be positive, got {n}")
    basis = HermiteBasis(n)
    if args.map == "identity":
        return IdentityMap(basis)
    if args.map == "rankone":
        alpha = parse_complex(args.alpha)
        u = parse_function(args.u, basis)
        v = parse_function(args.v, basis)
        return RankOneMap(u, v, alpha, labels=(args.u, args.v))
    extent = green_mod.DEFAULT_EXTENT if args.grid_extent is None else args.grid_extent
    points = green_mod.DEFAULT_POINTS if args.grid_points is None else args.grid_points
    kwargs = {} if spill_tol is None else {"spill_tol": spill_tol}
    try:
        return GreenMap(basis, extent, points, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", newline="\n")


def _write(path, text):
    stream = _open_out(path)
    try:
        stream.write(text)
    finally:
        if stream is not sys.stdout:
            stream.close()


def _csv(rows):
    # fields such as "gaussian:0,1" get quoted
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def sample_grid(args):
    if args.sample_points < 2:
        raise ConfigError("--sample-points must be at least 2")
    return np.linspace(-args.sample_extent, args.sample_extent, args.sample_points)


# -- commands ------------------------------------------------------------


def cmd_verify(args):
    tol = args.tol
    try:
        smap = build_map(args)
        make_deformed(smap)
    except (BiorthoError, ValueError) as exc:
        if args.out not in (None, "-"):
            partial = VerificationReport(args.map, {}, [], str(exc))
            _write(args.out, partial.to_json())
        raise ConfigError(str(exc)) from None
    report = run_suite(smap, tol=tol, timings=args.timings)
    if args.format == "csv":
        rows = [("name", "residual", "scale", "tol", "pass")]
        rows += [(c.name, _float(c.residual), _float(c.scale), _float(c.tol), str(c.passed).lower())
                 for c in report.checks]
        _write(args.out, _csv(rows))
    else:
        _write(args.out, report.to_json())
    failed = report.failures()
    summary = f"{report.map}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed"
    if failed:
        summary += "; failed: " + ", ".join(c.name for c in failed)
    print(summary, file=sys.stderr)
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if report.passed else EXIT_FAIL


def eigenstate(smap, family, x0=0.0, p0=0.0):
    """The requested eigen-distribution of ``smap``."""
    action = "T" if family in ("eta", "mu") else "Tinvdag"
    atom = Delta(x0) if family.startswith("eta") else PlaneWave(p0)
    return dual_apply(smap, action, atom)


def describe_terms(F):
    return " + ".join(f"({_float(w.real)},{_float(w.imag)})*{d.describe()}" for w, d in atoms(F))


def cmd_eigenstate(args):
    smap = build_map(args)
    param = args.x0 if args.family.startswith("eta") else args.p0
    try:
        F = eigenstate(smap, args.family, x0=args.x0, p0=args.p0)
    except BiorthoError as exc:
        raise ConfigError(f"family {args.family} not supported by {smap.descriptor}: {exc}") from None
    x = sample_grid(args)
    vals = sample_regular_part(F, x)
    symbolic = symbolic_terms(F)
    label = "x0" if args.family.startswith("eta") else "p0"
    if args.format == "json":
        doc = {
            "map": smap.descriptor,
            "family": args.family,
            label: float(param),
            "terms": describe_terms(F),
            "symbolic": [[w.real, w.imag, d.describe()] for w, d in symbolic],
            "x": x.tolist(),
            "re": vals.real.tolist(),
            "im": vals.imag.tolist(),
        }
        _write(args.out, _encode(doc) + "\n")
        return EXIT_OK
    lines = [
        f"# map: {smap.descriptor}",
        f"# family: {args.family} {label}={_float(param)}",
        f"# terms: {describe_terms(F)}",
        "# symbolic: " + (" + ".join(
            f"({_float(w.real)},{_float(w.imag)})*{d.describe()}" for w, d in symbolic) or "none"),
        "# samples: sum of PlaneWave and Regular summands",
    ]
    rows = [("x", "re", "im")] + [(_float(a), _float(v.real), _float(v.imag)) for a, v in zip(x, vals)]
    _write(args.out, "\n".join(lines) + "\n" + _csv(rows))
    return EXIT_OK


def operator_columns(smap, name):
    """Columns ``op e_n`` for every basis element, batched through the map."""
    elements = [smap.basis.element(n) for n in range(smap.basis.size)]
    if name == "q0":
        return [apply_q0(e) for e in elements]
    if name == "p0":
        return [apply_p0(e) for e in elements]
    if name in ("S_eta", "S_eta_up"):
        if name == "S_eta":
            return smap.apply_many("T", smap.apply_many("Tdag", elements))
        return [metric_apply(name, smap, e) for e in elements]
    base = apply_q0 if name.startswith("q") else apply_p0
    if name in ("q", "p"):
        return smap.apply_many("T", [base(g) for g in smap.apply_many("Tinv", elements)])
    return smap.apply_many("Tinvdag", [base(g) for g in smap.apply_many("Tdag", elements)])


def cmd_matrix(args):
    # the basis-edge columns of an unbounded T^-1 spill by construction
    smap = build_map(args, spill_tol=np.inf)
    cols = operator_columns(smap, args.operator)
    mat = np.column_stack([c.coeffs for c in cols])
    if args.format == "json":
        doc = {"N": smap.basis.size, "re": mat.real.tolist(), "im": mat.imag.tolist()}
        _write(args.out, _encode(doc) + "\n")
        return EXIT_OK
    rows = [[s for z in row for s in (_float(z.real), _float(z.imag))] for row in mat]
    _write(args.out, _csv(rows))
    return EXIT_OK


def profile_rows(smap, what, args):
    """Column names and rows for ``cmd_profile``."""
    if what == "kernel":
        if not isinstance(smap, GreenMap):
            raise ConfigError(f"{smap.descriptor} map has no convolution kernel")
        x = sample_grid(args)
        return ["x", "abs_G"], [[a, b] for a, b in zip(x, np.abs(green_mod.kernel(x)))]
    if what == "eta":
        x = sample_grid(args)
        F = eigenstate(smap, "eta", x0=args.x0)
        return ["x", "abs_eta"], [[a, b] for a, b in zip(x, np.abs(sample_regular_part(F, x)))]
    if what == "battery":
        x = sample_grid(args)
        battery = default_battery(smap.basis)
        cols = [np.abs(f(x)) for f in battery.functions()]
        return ["x"] + list(battery.names), [[xi] + [c[i] for c in cols] for i, xi in enumerate(x)]
    battery = default_battery(smap.basis)
    columns = QuasiBasisColumns(smap)
    truncations = [m for m in (16, 32, 64) if m <= smap.basis.size]
    rows = []
    for m in truncations:
        worst = 0.0
        for f in battery.functions():
            if what == "quasi-basis-residuals":
                worst = max(worst, check_quasi_basis(smap, f, f, m, columns) / f.norm() ** 2)
            else:
                for x0 in (0.0, 1.0):
                    worst = max(worst, check_delta_kernel(smap, x0, f, m, columns) / f.norm())
        rows.append([m, worst])
    return ["M", "residual"], rows


def cmd_profile(args):
    smap = build_map(args)
    header, rows = profile_rows(smap, args.what, args)
    if args.format == "json":
        doc = {"map": smap.descriptor, "what": args.what, "columns": header, "rows": rows}
        _write(args.out, _encode(doc) + "\n")
        return EXIT_OK
    fmt = [[str(v) if isinstance(v, (int, np.integer)) else _float(v) for v in r] for r in rows]
    _write(args.out, _csv([header] + fmt))
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--map", choices=("identity", "rankone", "green"), default="identity")
    common.add_argument("--alpha", default="1,0", help="complex alpha as 're,im'")
    common.add_argument("--u", default="hermite:0", help="hermite:n, gaussian:c,w, '+'-sums or a coefficient file")
    common.add_argument("--v", default="hermite:0")
    common.add_argument("--basis-size", type=int, default=None, help=f"N (default {DEFAULT_N}; green {green_mod.DEFAULT_SIZE}; env {ENV_N})")
    common.add_argument("--grid-extent", type=float, default=None)
    common.add_argument("--grid-points", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="override the map tolerance")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = _Parser(prog="biortho", description="Similarity-deformed position/momentum operators.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    verify = sub.add_parser("verify", parents=[common], help="run the check suite")
    verify.add_argument("--timings", action="store_true", help="record per-check wall time")

    sampling = _Parser(add_help=False)
    sampling.add_argument("--sample-extent", type=float, default=10.0)
    sampling.add_argument("--sample-points", type=int, default=401)
    sampling.add_argument("--x0", type=float, default=0.0)
    sampling.add_argument("--p0", type=float, default=0.0)

    eig = sub.add_parser("eigenstate", parents=[common, sampling], help="sample an eigen-distribution")
    eig.add_argument("--family", choices=FAMILIES, required=True)

    mat = sub.add_parser("matrix", parents=[common], help="export <e_m, op e_n>")
    mat.add_argument("--operator", choices=OPERATORS, required=True)

    prof = sub.add_parser("profile", parents=[common, sampling], help="dump data for plotting")
    prof.add_argument("--what", choices=PROFILES, required=True)
    return parser


COMMANDS = {
    "verify": (cmd_verify, "json"),
    "eigenstate": (cmd_eigenstate, "csv"),
    "matrix": (cmd_matrix, "csv"),
    "profile": (cmd_profile, "csv"),
}


def _fail(message, status):
    print("biortho: " + " ".join(str(message).split()), file=sys.stderr)
    return status


VALUE_FLAGS = ("--alpha", "--x0", "--p0", "--tol", "--grid-extent", "--sample-extent")


def _glue_negative_values(argv):
    """``--alpha -1,0`` -> ``--alpha=-1,0`` so argparse does not read a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_glue_negative_values(argv))
        command, fmt = COMMANDS[args.command]
        if args.format is None:
            args.format = fmt
        return command(args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail(f"I/O error: {exc}", EXIT_IO)
    except (BiorthoError, ValueError) as exc:
        return _fail(exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: batch runs that write JSON (and CSV) reports.

Exit codes: 0 all checks passed, 2 some residual or tolerance check failed,
1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import operators as ops
from .beltrami import BeltramiProblem, NonConvergence, QuadratureMode, SpectralMode, solve_fixed_point
from .clifford import Multivector
from .polynomial import ContractError, CliffordPolynomial, sphere_area
from . import quadrature as quad

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

BP_FUNCTIONS = ("one", "deg1", "deg2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ----------------------------------------------------------------------
# deterministic serialization


def _canon(x):
    if isinstance(x, dict):
        return {str(k): _canon(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_canon(v) for v in x]
    if isinstance(x, np.ndarray):
        return _canon(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        v = float(f"{x:.12g}")
        return 0.0 if v == 0 else v
    return x


def render_json(report: dict) -> str:
    return json.dumps(_canon(report), sort_keys=True, indent=2) + "\n"


def emit_report(report: dict, path: str | None, fmt: str = "json", csv_text: str | None = None):
    text = render_json(report) if fmt == "json" else (csv_text or "")
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ----------------------------------------------------------------------
# test functions


def bp_function(name: str) -> CliffordPolynomial:
    """Fixed restrictions used by bp-check (n = 2)."""
    e = lambda *i: Multivector.basis(2, *i)  # noqa: E731
    if name == "one":
        return CliffordPolynomial.constant(1, 2)
    if name == "deg1":
        return CliffordPolynomial.variable(2, 0) + CliffordPolynomial.variable(2, 1, e(2))
    if name == "deg2":
        return CliffordPolynomial.variable(2, 0) * CliffordPolynomial.variable(2, 2, e(1, 2)) + \
            CliffordPolynomial.variable(2, 1) * CliffordPolynomial.variable(2, 1)
    raise UsageError(f"unknown function {name!r}; expected one of {BP_FUNCTIONS}")


def random_polynomial(rng: np.random.Generator, n: int, degree: int) -> CliffordPolynomial:
    """Random Clifford polynomial with all monomials up to ``degree``."""
    from .polynomial import monomials

    terms = {}
    for k in range(degree + 1):
        for a in monomials(n + 1, k):
            terms[a] = Multivector.from_array(n, rng.normal(size=1 << n))
    return CliffordPolynomial(n, terms)


def sphere_targets(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(count, 3))
    return x / np.linalg.norm(x, axis=1)[:, None]


# ----------------------------------------------------------------------
# commands


SPECTRUM_TOL = {"gamma0": 1e-10, "Laplace_s": 1e-10, "Laplace_s_quad": 1e-10, "Ds": 1e-8, "T": 1e-8}


def spectrum_report(op: str, n: int, N: int, tol: float | None = None) -> dict:
    rep = ops.spectrum(op, n, N)
    out = rep.to_json()
    out["tolerance"] = tol if tol is not None else SPECTRUM_TOL[op]
    out["passed"] = rep.max_residual < out["tolerance"]
    return out


def cmd_spectrum(a) -> tuple[dict, bool]:
    if a.op != "all":
        out = spectrum_report(a.op, a.n, a.max_degree, a.tol)
        return out, out["passed"]
    spectra = [spectrum_report(t, a.n, a.max_degree, a.tol) for t in ("gamma0", "Ds", "T", "Laplace_s")]
    ok = all(s["passed"] for s in spectra)
    return {"n": a.n, "N": a.max_degree, "spectra": spectra, "passed": ok}, ok


def cmd_verify(a) -> tuple[dict, bool]:
    if a.all:
        tags = ops.IDENTITY_TAGS
    elif a.identity:
        tags = a.identity
    else:
        raise UsageError("verify needs --all or --identity TAG")
    tol = a.tol if a.tol is not None else 1e-10
    results = []
    for t in tags:
        if t not in ops.IDENTITY_TAGS:
            raise UsageError(f"unknown identity {t!r}")
        r = ops.verify_identity(t, a.n, a.N)
        d = r.to_json()
        d["passed"] = r.residual < tol
        results.append(d)
    ok = all(d["passed"] for d in results)
    return {"n": a.n, "N": a.N, "tolerance": tol, "identities": results, "passed": ok}, ok


def cmd_norms(a) -> tuple[dict, bool]:
    rep = ops.norm_report(a.n, a.N)
    tol = a.tol if a.tol is not None else 1e-10
    n = a.n
    checks = {
        "T_equals_2_over_n": abs(rep["T"]["max"] - 2 / n) < tol,
        "T_below_Lp_bound": rep["T"]["max"] <= sphere_area(n - 1) / 4 + tol,
        "Pi_s0_below_quadratic_bound": rep["Pi_s0"]["max"] <= 1 + 4 / n**2 + tol,
        "Pi_s0_below_triangle_bound": rep["Pi_s0"]["max"] <= 1 + 2 / n + tol,
        "Pi_s1_isometry": abs(rep["Pi_s1"]["max"] - 1) < tol and abs(rep["Pi_s1"]["min"] - 1) < tol,
    }
    rep["checks"] = checks
    rep["tolerance"] = tol
    ok = all(checks.values())
    rep["passed"] = ok
    return rep, ok


def cmd_bp_check(a) -> tuple[dict, bool, str]:
    hs = [float(x) for x in a.h_list.split(",")]
    f = bp_function(a.function)
    rows = quad.borel_pompeiu_residual(f, a.theta_c, hs)
    tol = a.tol if a.tol is not None else 1e-2
    fit = fitted_order([r.h for r in rows], [r.residual for r in rows])
    ok = rows[-1].residual <= tol and (fit is None or fit >= a.min_order)
    rep = {
        "function": a.function,
        "theta_c": a.theta_c,
        "rows": [{"h": r.h, "residual": r.residual, "observed_order": r.observed_order} for r in rows],
        "fitted_order": fit,
        "tolerance": tol,
        "min_order": a.min_order,
        "passed": ok,
    }
    return rep, ok, quad.convergence_csv(rows)


def fitted_order(hs: Sequence[float], res: Sequence[float]) -> float | None:
    """Least-squares slope of log(residual) against log(h)."""
    pts = [(math.log(h), math.log(r)) for h, r in zip(hs, res) if r > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def pi_check_inputs() -> dict[str, CliffordPolynomial]:
    """Degree-<=1 inputs for the Pi_{s,0} quadrature comparison (n = 2)."""
    e = lambda *i: Multivector.basis(2, *i)  # noqa: E731
    return {
        "1": CliffordPolynomial.constant(1, 2),
        "e1": CliffordPolynomial.constant(e(1)),
        "e12": CliffordPolynomial.constant(e(1, 2)),
        "x0": CliffordPolynomial.variable(2, 0),
        "x1*e2": CliffordPolynomial.variable(2, 1, e(2)),
        "x2*e12": CliffordPolynomial.variable(2, 2, e(1, 2)),
    }


def pi_quad_report(h: float, form: str, normalization: str, targets: np.ndarray, N: int = 4) -> dict:
    """Relative max deviation of the quadrature Pi_{s,0} from the spectral one, per input."""
    rows = []
    for name, f in pi_check_inputs().items():
        ref = ops.spectral_values("Pi_s0", f, N, targets)
        got = quad.pi_s0_quad(f, targets, h, form=form, normalization=normalization).values
        dev = float(np.abs(got - ref).max() / max(np.abs(ref).max(), 1e-300))
        rows.append({"input": name, "relative_deviation": dev, "spectral_max": float(np.abs(ref).max())})
    return {
        "form": form,
        "normalization": normalization,
        "h": h,
        "targets": targets,
        "inputs": rows,
        "max_relative_deviation": max(r["relative_deviation"] for r in rows),
    }


def cmd_pi_quad_check(a) -> tuple[dict, bool]:
    rep = pi_quad_report(a.h, a.form, a.normalization, sphere_targets(a.targets, a.seed), a.N)
    rep["tolerance"] = a.tol if a.tol is not None else 5e-2
    rep["passed"] = rep["max_relative_deviation"] <= rep["tolerance"]
    return rep, rep["passed"]


def cmd_beltrami(a) -> tuple[dict, bool]:
    if a.problem:
        pb = BeltramiProblem.from_json(json.loads(Path(a.problem).read_text()))
    else:
        q = Multivector.basis(a.n, *[int(s) for s in a.q_blade.split(",") if s.strip()], coeff=a.q_coeff)
        if a.mode == "spectral":
            mode = SpectralMode(a.N)
            pole = None
        else:
            mode = QuadratureMode(a.theta_c, a.h)
            pole = (-1.0, 0.0, 0.0) if a.pole == "antipode" else None
        pb = BeltramiProblem(a.n, a.variant, mode, q, pole, a.tolerance, a.max_iterations, a.start, a.seed)
    try:
        res = solve_fixed_point(pb)
    except NonConvergence as exc:
        return {"problem": pb.to_json(), "error": str(exc), "residual_history": exc.history, "passed": False}, False
    except ContractError as exc:
        return {"problem": pb.to_json(), "error": str(exc), "passed": False}, False
    out = {"problem": pb.to_json(), "result": res.to_json()}
    ok = res.final_residual <= max(pb.tolerance, 1e-6) * 10 and res.precheck.passed
    bound = res.precheck.q_sup * res.precheck.pi_norm + 0.05
    out["rate_bound"] = bound
    ok = ok and res.rate <= bound
    out["passed"] = ok
    return out, ok


def cmd_bounds(a) -> tuple[dict, bool]:
    try:
        rep = ops.theoretical_bounds(a.n, a.p, a.Bp)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep["kernel_mass"] = quad.kernel_mass(a.n) if a.n >= 2 else None
    rep["passed"] = True
    return rep, True


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spherical-pi", description="Spherical Dirac/Pi-operator verification suites.")
    p.add_argument("--config", help="JSON file with default flag values")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--out", default=None, help="JSON report path (default stdout)")
        sp.add_argument("--tol", type=float, default=None, help="override the pass tolerance")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("spectrum", help="per-degree eigenvalues vs closed forms")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--op", choices=ops.SPECTRUM_TAGS + ("all",), default="gamma0")
    s.add_argument("--max-degree", type=int, default=4, help="truncation degree N")
    common(s, seed=False)

    s = sub.add_parser("verify", help="operator identity residuals")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--N", type=int, default=5)
    s.add_argument("--all", action="store_true")
    s.add_argument("--identity", action="append", choices=ops.IDENTITY_TAGS)
    common(s, seed=False)

    s = sub.add_parser("norms", help="L2 operator norms vs bounds")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--N", type=int, default=6)
    common(s, seed=False)

    s = sub.add_parser("bp-check", help="Borel-Pompeiu convergence on a cap (n=2)")
    s.add_argument("--theta-c", type=float, default=math.pi / 3)
    s.add_argument("--h-list", default="0.08,0.04,0.02")
    s.add_argument("--function", choices=BP_FUNCTIONS, default="one")
    s.add_argument("--min-order", type=float, default=1.0)
    s.add_argument("--csv", default=None, help="convergence table path")
    common(s, seed=False)

    s = sub.add_parser("pi-quad-check", help="Pi_{s,0} integral expression vs spectral (n=2)")
    s.add_argument("--h", type=float, default=0.02)
    s.add_argument("--form", choices=quad.PI_FORMS, default="stated")
    s.add_argument("--normalization", choices=quad.NORMALIZATIONS, default="calibrated")
    s.add_argument("--targets", type=int, default=6)
    s.add_argument("--N", type=int, default=4)
    common(s)

    s = sub.add_parser("beltrami", help="fixed-point Beltrami solve")
    s.add_argument("--problem", help="problem JSON file (overrides the flags below)")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--variant", choices=("s0", "s1"), default="s0")
    s.add_argument("--mode", choices=("spectral", "cap"), default="spectral")
    s.add_argument("--N", type=int, default=6)
    s.add_argument("--theta-c", type=float, default=math.pi / 3)
    s.add_argument("--h", type=float, default=0.05)
    s.add_argument("--pole", choices=("antipode", "none"), default="antipode")
    s.add_argument("--q-coeff", type=float, default=0.2)
    s.add_argument("--q-blade", default="1", help="comma-separated generator indices; empty for scalar")
    s.add_argument("--tolerance", type=float, default=1e-10)
    s.add_argument("--max-iterations", type=int, default=200)
    s.add_argument("--start", choices=("zero", "random"), default="zero")
    common(s)

    s = sub.add_parser("bounds", help="closed-form L^p bounds")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--Bp", type=float, required=True)
    common(s, seed=False)
    return p


COMMANDS = {
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "norms": cmd_norms,
    "bp-check": cmd_bp_check,
    "pi-quad-check": cmd_pi_quad_check,
    "beltrami": cmd_beltrami,
    "bounds": cmd_bounds,
}


def _apply_config(parser, argv):
    """Re-parse with defaults from --config; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    args = parser.parse_args(argv)
    explicit = {tok.lstrip("-").split("=")[0].replace("-", "_") for tok in argv if tok.startswith("--")}
    for k, v in cfg.items():
        key = k.replace("-", "_")
        if key not in vars(args):
            raise UsageError(f"unknown config key {k!r}")
        if key not in explicit:
            setattr(args, key, v)
    return args


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"spherical-pi: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    report, ok = result[0], result[1]
    report = {"command": args.command, **report}
    if getattr(args, "seed", None) is not None:
        report["seed"] = args.seed
    try:
        emit_report(report, args.out)
        if args.command == "bp-check" and args.csv:
            Path(args.csv).write_text(result[2])
    except OSError as exc:
        sys.stderr.write(f"spherical-pi: cannot write report: {exc}\n")
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

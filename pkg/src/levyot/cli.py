"""Command-line interface.

Exit codes: 0 on success, 1 on invalid input (including a supplied coupling
that fails certification), 2 on an internal failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys

import numpy as np

from . import io
from ._simplex import SolverError
from .core import ValidationError, validate_coupling
from .gen_metric import (
    build_optimal_coupling,
    generator_distance,
    lambda_convergence_report,
    truncate_measure,
)
from .levy_ot import DualCheckError, classical_ot_solve, extract_duals, levy_ot_solve
from .monotonicity import check_cyclical_monotonicity
from .psd import TOL_NUM, EigenSolverError, dual_matrix_certificate, optimal_cross_block
from .simulate import estimate_cost_growth, estimate_sup_distance, simulate_path, sup_bound


class UsageError(ValidationError):
    pass


class CertificateFailure(Exception):
    def __init__(self, code):
        super().__init__(code)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    p = _Parser(prog="levyot", description="Optimal couplings and generator distances of Lévy triplets.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, pair=True, seed=False):
        if pair:
            sp.add_argument("--a", required=True, help="first triplet or measure (JSON)")
            sp.add_argument("--b", required=True, help="second triplet or measure (JSON)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default=None)
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    common(sub.add_parser("dist", help="generator distance and its parts"))
    common(sub.add_parser("couple", help="optimal coupled triplet"))
    c = sub.add_parser("certify", help="check duality, monotonicity and marginals")
    c.add_argument("--a")
    c.add_argument("--b")
    c.add_argument("--coupled", help="coupled triplet to certify instead of solving")
    c.add_argument("--tol-gap", type=_positive, default=None)
    c.add_argument("--max-cycle", type=int, default=4)
    common(c, pair=False, seed=True)

    s = sub.add_parser("simulate", help="Monte Carlo checks of the coupled process")
    s.add_argument("--a")
    s.add_argument("--b")
    s.add_argument("--coupled")
    s.add_argument("--mode", choices=["growth", "sup", "path"], default="growth")
    s.add_argument("--t", type=_floats, default=[0.25, 1.0, 4.0], help="times for growth mode")
    s.add_argument("--T", type=_floats, default=[1.0], help="horizons for sup/path mode")
    s.add_argument("--paths", type=int, default=None)
    s.add_argument("--grid", type=int, default=65)
    s.add_argument("--x", type=_floats, default=None)
    s.add_argument("--y", type=_floats, default=None)
    common(s, pair=False, seed=True)

    v = sub.add_parser("converge", help="convergence diagnostics toward a target measure")
    v.add_argument("--a", required=True, help="target measure (JSON)")
    v.add_argument("--b", help="JSON list of measures forming the sequence")
    v.add_argument("--truncate", type=_floats, help="use truncations of the target at 1/n for these n")
    common(v, pair=False)

    common(sub.add_parser("classical", help="classical transport between equal-mass measures"))
    return p


def _emit(args, text):
    if args.out:
        io.write_text(args.out, text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(args, obj):
    _emit(args, io.dumps(obj, indent=2))


def _csv(args, header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([io.format_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    _emit(args, buf.getvalue())


def _triplet(path):
    return io.triplet_from_dict(io.read_json(path), where=str(path))


def _pair(args):
    if not (args.a and args.b):
        raise UsageError("--a and --b are required")
    return _triplet(args.a), _triplet(args.b)


def cmd_dist(args):
    doc_a, doc_b = io.read_json(args.a), io.read_json(args.b)
    if io.is_pure_jump_doc(doc_a) and io.is_pure_jump_doc(doc_b):
        mu = io.measure_from_dict(doc_a, str(args.a))
        nu = io.measure_from_dict(doc_b, str(args.b))
        sol = levy_ot_solve(mu, nu, certify=False)
        _json(args, {"jump_sq": sol.cost, "w_lambda": sol.distance})
        return 0
    a = io.triplet_from_dict(doc_a, str(args.a))
    b = io.triplet_from_dict(doc_b, str(args.b))
    _json(args, generator_distance(a, b).to_dict())
    return 0


def cmd_couple(args):
    a, b = _pair(args)
    _json(args, io.coupled_to_dict(build_optimal_coupling(a, b)))
    return 0


def _certify_solved(args, a, b):
    sol = levy_ot_solve(a.jumps, b.jumps, certify=True, max_cycle=args.max_cycle, seed=args.seed)
    tol_gap = args.tol_gap if args.tol_gap is not None else sol.tol_gap()
    try:
        extract_duals(sol)
        duals_ok, dual_msg = True, None
    except DualCheckError as exc:
        duals_ok, dual_msg = False, str(exc)
    marg = validate_coupling(sol.plan, a.jumps, b.jumps)
    diff = optimal_cross_block(a.diffusion, b.diffusion)
    pair = dual_matrix_certificate(a.diffusion, b.diffusion)
    checks = {
        "duality_gap": abs(sol.duality_gap) <= tol_gap,
        "duals": duals_ok,
        "monotone": bool(sol.monotone_certified),
        "marginals": marg.passed,
        "diffusion_dual_feasible": pair.constraint_violation <= 1e-9,
        "diffusion_weak_duality": pair.value <= diff.cost + TOL_NUM,
    }
    report = {
        "passed": all(checks.values()),
        "checks": checks,
        "jump_cost": sol.cost,
        "duality_gap": sol.duality_gap,
        "tol_gap": tol_gap,
        "dual_error": dual_msg,
        "marginal_defect": marg.worst_defect,
        "marginal_tol": marg.tolerance,
        "diffusion_cost": diff.cost,
        "diffusion_dual_value": pair.value,
        "diffusion_dual_gap": diff.cost - pair.value,
    }
    return report


def _certify_coupled(args, j, a, b):
    if a is None:
        a, b = j.marginal_triplets()
    d = j.d
    dist = generator_distance(a, b)
    target = dist.theta0
    tol_gap = args.tol_gap if args.tol_gap is not None else 1e-8 * (1.0 + abs(target))
    marg = validate_coupling(j.jumps, a.jumps, b.jumps)
    mono = check_cyclical_monotonicity(j.jumps.sources, j.jumps.targets, max_cycle=args.max_cycle, seed=args.seed)
    rate = j.growth_rate0()
    checks = {
        "drift": bool(np.array_equal(j.drift[:d], a.drift) and np.array_equal(j.drift[d:], b.drift)),
        "diffusion_blocks": bool(
            np.array_equal(j.diffusion[:d, :d], a.diffusion) and np.array_equal(j.diffusion[d:, d:], b.diffusion)
        ),
        "marginals": marg.passed,
        "monotone": mono.passed,
        "optimal_rate": abs(rate - target) <= tol_gap,
    }
    return {
        "passed": all(checks.values()),
        "checks": checks,
        "growth_rate": rate,
        "optimal_rate": target,
        "tol_gap": tol_gap,
        "marginal_defect": marg.worst_defect,
        "marginal_tol": marg.tolerance,
        "worst_cycle_value": mono.worst_value,
    }


def cmd_certify(args):
    if args.coupled:
        j = io.coupled_from_dict(io.read_json(args.coupled), str(args.coupled))
        a = b = None
        if args.a or args.b:
            a, b = _pair(args)
            if a.d != j.d:
                raise ValidationError(f"dimension mismatch: coupled {j.d} vs triplets {a.d}")
        report = _certify_coupled(args, j, a, b)
        fail_code = 1
    else:
        a, b = _pair(args)
        report = _certify_solved(args, a, b)
        fail_code = 2
    _json(args, report)
    if not report["passed"]:
        failed = [k for k, ok in report["checks"].items() if not ok]
        raise CertificateFailure((fail_code, "certificate failed: " + ", ".join(failed)))
    return 0


def _coupled_for(args):
    if args.coupled:
        j = io.coupled_from_dict(io.read_json(args.coupled), str(args.coupled))
        return j, generator_distance(*j.marginal_triplets())
    a, b = _pair(args)
    return build_optimal_coupling(a, b), generator_distance(a, b)


def _point(v, d, name):
    if v is None:
        return np.zeros(d)
    if len(v) != d:
        raise ValidationError(f"--{name}: expected {d} numbers, got {len(v)}")
    return np.array(v)


def cmd_simulate(args):
    j, dist = _coupled_for(args)
    fmt = args.format or "csv"
    header = ["t", "estimate", "std_error", "predicted", "bound"]
    if args.mode == "growth":
        x, y = _point(args.x, j.d, "x"), _point(args.y, j.d, "y")
        n = args.paths or 20_000
        est = estimate_cost_growth(j, x, y, args.t, n_paths=n, seed=args.seed)
        dm = j.drift_gap()
        drift_term = float(np.dot(dm, x - y))
        c2 = 0.5 * float(np.dot(x - y, x - y))
        rows = []
        for t, e in zip(args.t, est):
            bound = c2 + t * drift_term + max(t, t * t) * dist.total_sq
            rows.append([t, e.mean, e.std_error, float(j.predicted_growth(x, y, t)), bound])
    elif args.mode == "sup":
        n = args.paths or 2000
        rows = []
        for T in args.T:
            e = estimate_sup_distance(j, T, n_paths=n, n_grid=args.grid, seed=args.seed)
            rows.append([T, e.mean, e.std_error, "", sup_bound(dist.total_sq, T, j.is_zero_mean())])
    else:
        d = j.d
        start = np.concatenate([_point(args.x, d, "x"), _point(args.y, d, "y")])
        path = simulate_path(j, start, args.T[0], args.seed, n_grid=args.grid)
        header = ["t"] + [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(d)]
        rows = path.rows()
    if fmt == "csv":
        _csv(args, header, rows)
    else:
        _json(args, [dict(zip(header, r)) for r in rows])
    return 0


def _measure(path):
    doc = io.read_json(path)
    return io.measure_from_dict(doc, str(path))


def cmd_converge(args):
    target = _measure(args.a)
    if args.truncate:
        seq = [truncate_measure(target, 1.0 / n, 0.0)[0] for n in args.truncate]
        labels = args.truncate
    elif args.b:
        doc = io.read_json(args.b)
        items = doc.get("sequence") if isinstance(doc, dict) else doc
        if not isinstance(items, list) or not items:
            raise io.ParseError(f"{args.b}: expected a nonempty list of measures")
        seq = [io.measure_from_dict(m, f"{args.b}[{i}]") for i, m in enumerate(items)]
        labels = list(range(len(seq)))
    else:
        raise UsageError("converge needs --b or --truncate")
    report = lambda_convergence_report(seq, target)
    out = {"n": labels}
    out.update(report.to_dict())
    _json(args, out)
    return 0


def cmd_classical(args):
    sol = classical_ot_solve(_measure(args.a), _measure(args.b))
    _json(args, io.solution_to_dict(sol))
    return 0


COMMANDS = {
    "dist": cmd_dist,
    "couple": cmd_couple,
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "classical": cmd_classical,
}


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except CertificateFailure as exc:
        code, msg = exc.code
        print(f"error: {msg}", file=sys.stderr)
        return code
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, EigenSolverError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())

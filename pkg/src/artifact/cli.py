"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 input error,
3 numerical non-convergence, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np
from scipy import integrate

from . import __version__
from .classical_vector import (
    classical_extraction_mc,
    vector_rel_bin_masses,
    vector_rel_integral,
    vector_rel_mc,
)
from .fidelity_ratios import (
    DiagonalPolynomial,
    cauchy_integral,
    fid_closed_form,
    fid_numeric_oracle,
    fourier_coefficient,
    fourier_coefficient_quadrature,
    hom_equation_branch,
    maxkcut_branch,
    ratio_for,
    smooth_equation_branch,
    smooth_inequation_branch,
)
from .gwb_group import (
    BudgetExceeded as GroupBudgetExceeded,
    GwbStructure,
    build_representation,
    enumerate_group,
    strong_isometry_check,
    verify_representation,
    vector_to_unitary,
)
from .instance import BudgetExceeded, InstanceError, NonHomogeneousInstance, parse_instance
from .relative_distribution import (
    DomainError,
    base_pair,
    cauchy_law_convergence_report,
    delta_lambda,
)
from .rounding_pipeline import (
    InfeasibleGram,
    expected_value_analytic,
    expected_value_gwb_exact,
    expected_value_gwb_mc,
)
from .sdp_solver import DEFAULT_TOL, MaxIterations, NumericalFailure, build_sdp, sdp_value_certificate, solve_sdp
from .unitary_core import TWO_PI, round_matrix, stream

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC, EXIT_BUDGET = 0, 1, 2, 3, 4
SIG = 12


# --------------------------------------------------------------------------- #
# output helpers


def fmt(x) -> str:
    return f"{float(x):.{SIG}g}"


def jsonable(obj):
    """Numbers rounded to 12 significant digits; complex values become [re, im]."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(fmt(obj.real)), float(fmt(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            return None
        return float(fmt(obj))
    return obj


def dump_json(payload: dict) -> str:
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


def dump_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Emitter:
    def __init__(self, args):
        self.args = args
        self.start = time.perf_counter()
        self.outputs: dict[str, str] = {}

    def write(self, text: str, path: str | None = None) -> None:
        target = path or self.args.out
        if target:
            Path(target).write_text(text)
            self.outputs[target] = hashlib.sha256(text.encode()).hexdigest()
        else:
            sys.stdout.write(text)

    def manifest(self, argv: list[str]) -> None:
        if not self.args.out:
            return
        flags = {k: v for k, v in vars(self.args).items() if k != "func"}
        payload = {
            "command": self.args.command,
            "argv": argv,
            "flags": flags,
            "seed": self.args.seed,
            "version": __version__,
            "wall_time": time.perf_counter() - self.start,
            "outputs": self.outputs,
        }
        Path(self.args.out + ".manifest.json").write_text(dump_json(payload))


def _read_instance(path: str):
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    return parse_instance(data)


# --------------------------------------------------------------------------- #
# commands


def _solve(inst, args):
    sdp = build_sdp(inst, args.sdp_strict_bounds)
    sol = solve_sdp(sdp, args.sdp_tol)
    return sdp, sol


def cmd_solve(args, out: Emitter) -> int:
    inst = _read_instance(args.instance)
    if args.problem not in (None, "homlin", "maxkcut"):
        raise InstanceError(f"solve supports homogeneous problems, not {args.problem!r}")
    sdp, sol = _solve(inst, args)
    run = expected_value_analytic(inst, sol)
    cert = sdp_value_certificate(sol, sdp)
    ratio = run.expected_value / sol.sdp_value if sol.sdp_value > 0 else 1.0
    out.write(dump_json({
        "k": inst.k,
        "num_vars": inst.num_vars,
        "sdp_value": sol.sdp_value,
        "dual_value": sol.dual_value,
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "lambda": sol.lam,
        "X": sol.x,
        "vectors": sol.vectors,
        "residuals": {
            "diag": cert.diag_residual,
            "bound": cert.bound_residual,
            "psd": cert.psd_residual,
            "value_gap": cert.value_gap,
        },
        "expected_value": run.expected_value,
        "ratio": ratio,
    }))
    return EXIT_OK


def _parse_k_list(values) -> list[int]:
    out = []
    for v in values:
        for part in str(v).split(","):
            if "-" in part[1:]:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    return out


def cmd_ratio(args, out: Emitter) -> int:
    ks = _parse_k_list(args.k or ["3"])
    if any(k < 3 or k > 50 for k in ks):
        raise InstanceError("ratio needs 3 <= k <= 50")
    rows = []
    for k in ks:
        res = ratio_for(args.problem, k)
        rows.append((k, res.value, res.argmin.real, res.argmin.imag, res.branch))
    out.write(dump_csv(["k", "ratio", "argmin_re", "argmin_im", "branch"], rows))
    return EXIT_OK


def cmd_ratio_curve(args, out: Emitter) -> int:
    k = int(args.k[0]) if args.k else 3
    pts = args.points
    lo = -1.0 / (k - 1)
    if args.problem in ("maxkcut", "homlin"):
        xs = np.linspace(lo, 1.0, pts, endpoint=False)
        if args.problem == "maxkcut":
            rows = [(x, v) for x, v in zip(xs, maxkcut_branch(k, xs))]
            out.write(dump_csv(["lambda", "ratio"], rows))
        else:
            keep = np.abs(1.0 + (k - 1) * xs) > 1e-9
            rows = [
                (x, a, b)
                for x, a, b in zip(xs[keep], maxkcut_branch(k, xs[keep]), hom_equation_branch(k, xs[keep]))
            ]
            out.write(dump_csv(["lambda", "inequation_ratio", "equation_ratio"], rows))
        return EXIT_OK
    # smooth: rays from the origin to each root-polygon edge midpoint and vertex
    rows = []
    for s in range(k):
        for v in (0.0, 0.5):
            direction = (1 - v) * np.exp(2j * np.pi * s / k) + v * np.exp(2j * np.pi * (s + 1) / k)
            us = np.linspace(0.0, 1.0, pts, endpoint=False)[1:]
            lam = us * direction
            ineq = smooth_inequation_branch(k, lam)
            eq = smooth_equation_branch(k, lam)
            rows.extend((z.real, z.imag, a.real, b.real) for z, a, b in zip(lam, ineq, eq))
    out.write(dump_csv(["re_lambda", "im_lambda", "inequation_ratio", "equation_ratio"], rows))
    return EXIT_OK


def cmd_curve(args, out: Emitter) -> int:
    pts = args.points
    theta = np.linspace(0.0, TWO_PI, pts, endpoint=False)
    if args.kind == "fid":
        ks = _parse_k_list(args.k or ["3"])
        cols = [fid_closed_form(DiagonalPolynomial.cut(k), theta).real for k in ks]
        out.write(dump_csv(["theta"] + [f"fid_{k}" for k in ks], zip(theta, *cols)))
        return EXIT_OK
    lams = [complex(x) for x in (args.lam or ["0.5"])]
    cols = []
    for lam in lams:
        law = delta_lambda(lam)
        if law.is_dirac:
            raise DomainError("|lambda| = 1 is a point mass; no density to tabulate")
        cols.append(law.pdf(theta))
    out.write(dump_csv(["theta"] + [f"pdf_{lam.real:g}{lam.imag:+g}i" for lam in lams], zip(theta, *cols)))
    return EXIT_OK


def _gwb_payload(n, k, verify: bool, dump: bool, seed, pairs: int = 100) -> tuple[dict, bool]:
    g = GwbStructure(n, k)
    payload = {"n": n, "k": k, "order_g": g.order_g, "order_gwb": g.order_quotient, "dim": g.rep_dim}
    ok = True
    if verify:
        rep_grp = enumerate_group(n, k)
        payload["enumeration"] = {
            "order_g": rep_grp.order_g,
            "order_gwb": rep_grp.order_quotient,
            "relators_ok": rep_grp.relators_ok,
            "r_central": rep_grp.r_central,
            "r_order_two": rep_grp.r_order_two,
            "admissible_nontrivial": rep_grp.admissible_nontrivial,
        }
        ok &= rep_grp.ok
    if verify or dump:
        rep = build_representation(n, k)
        rr = verify_representation(rep)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(pairs):
            x, y = rng.standard_normal((2, n))
            worst = max(worst, float(strong_isometry_check(rep, x / np.linalg.norm(x), y / np.linalg.norm(y)).max()))
        payload["residuals"] = {
            "unitary": rr.unitary,
            "order_k": rr.order_k,
            "anticommute": rr.anticommute,
            "relators": rr.relators,
            "j_minus_one": rr.j_minus_one,
            "trace_p_alpha": rr.trace_p_alpha,
            "strong_isometry": worst,
        }
        ok &= rr.worst() <= 1e-10 and worst <= 1e-9
        if dump:
            payload["sigma"] = [
                [[[float(z.real), float(z.imag)] for z in row] for row in s] for s in rep.sigma
            ]
    payload["ok"] = bool(ok)
    return payload, ok


def cmd_gwb(args, out: Emitter) -> int:
    payload, ok = _gwb_payload(args.n, int(args.k[0]) if args.k else 3, args.verify, args.dump, args.seed)
    out.write(dump_json(payload))
    return EXIT_OK if ok else EXIT_FAILED


# verification suites -------------------------------------------------------- #


def _check(name, value, threshold, passed=None):
    passed = bool(value <= threshold) if passed is None else bool(passed)
    return {"name": name, "value": value, "threshold": threshold, "passed": passed}


def suite_gwb(args) -> list[dict]:
    n = args.n
    k = int(args.k[0]) if args.k else 3
    payload, ok = _gwb_payload(n, k, True, False, args.seed)
    res = payload["residuals"]
    return [
        _check(f"gwb n={n} k={k} group order", payload["enumeration"]["order_gwb"], payload["order_gwb"],
               payload["enumeration"]["order_gwb"] == payload["order_gwb"]),
        _check(f"gwb n={n} k={k} relators and centrality", 0.0, 0.0,
               payload["enumeration"]["relators_ok"] and payload["enumeration"]["r_central"]),
        _check(f"gwb n={n} k={k} representation residual", max(v for kk, v in res.items() if kk != "strong_isometry"), 1e-10),
        _check(f"gwb n={n} k={k} strong isometry", res["strong_isometry"], 1e-9),
    ]


def suite_fidelity(args) -> list[dict]:
    ks = _parse_k_list(args.k) if args.k else list(range(2, 8))
    rng = np.random.default_rng(args.seed)
    checks = []
    for k in ks:
        poly = DiagonalPolynomial(k, rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))
        thetas = rng.uniform(0.0, TWO_PI, 1000)
        worst = max(abs(fid_closed_form(poly, th) - fid_numeric_oracle(poly, th)) for th in thetas)
        checks.append(_check(f"fidelity k={k} closed form vs oracle", worst, 1e-10))
        four = max(abs(fourier_coefficient(poly, n) - fourier_coefficient_quadrature(poly, n)) for n in range(-25, 26))
        checks.append(_check(f"fidelity k={k} Fourier coefficients", four, 1e-7))
        cut = DiagonalPolynomial.cut(k)
        breaks = list(np.arange(1, k) * TWO_PI / k)
        worst = 0.0
        for lam in (-0.9, -0.5, 0.0, 0.3, 0.9):
            law = delta_lambda(lam)
            quad = integrate.quad(
                lambda th: fid_closed_form(cut, th).real * law.pdf(th),
                0.0, TWO_PI, points=breaks, epsabs=1e-12, epsrel=1e-12, limit=400,
            )[0]
            worst = max(worst, abs(quad - cauchy_integral(cut, lam).real))
        checks.append(_check(f"fidelity k={k} Parseval against wrapped Cauchy", worst, 1e-7))
    return checks


def _lambda_list(args, default):
    return [complex(x) for x in (args.lam or default)]


def suite_cauchy(args) -> list[dict]:
    d, m = args.d, args.m or 32
    samples = args.samples or 2000
    checks = []
    for idx, lam in enumerate(_lambda_list(args, ["0", "-0.5", "0.8"])):
        a, b = _base_pair_d(lam.real, d)
        rows, est = cauchy_law_convergence_report(a, b, [m], samples, stream(args.seed, idx), threads=args.threads)
        worst = max(r.deviation - r.envelope for r in rows)
        checks.append(_check(f"cauchy lambda={lam.real:g} moments within envelope", worst, 0.0))
        edges = np.linspace(0.0, TWO_PI, 65)
        tv = est[m].histogram.rebinned(64).tv_distance(delta_lambda(lam.real).bin_masses(edges))
        checks.append(_check(f"cauchy lambda={lam.real:g} histogram TV", tv, 0.05))
        if args.csv_prefix:
            base = f"{args.csv_prefix}_lambda{idx}"
            Path(base + "_moments.csv").write_text(dump_csv(
                ["m", "n", "empirical_re", "empirical_im", "theoretical_re", "theoretical_im", "stderr"],
                [(r.m, r.n, r.empirical.real, r.empirical.imag, r.theoretical.real, r.theoretical.imag, r.stderr) for r in rows],
            ))
            h = est[m].histogram
            centers = 0.5 * (h.edges[:-1] + h.edges[1:])
            Path(base + "_hist.csv").write_text(dump_csv(["theta", "mass"], zip(centers, h.normalized())))
    return checks


def _base_pair_d(lam: float, d: int):
    if d % 2:
        raise InstanceError("the base pair needs an even dimension d")
    a, b = base_pair(lam)
    return np.kron(a, np.eye(d // 2)), np.kron(b, np.eye(d // 2))


def suite_vector(args) -> list[dict]:
    samples = args.samples or 10**5
    checks = []
    edges = np.linspace(0.0, TWO_PI, 65)
    for idx, lam in enumerate(_lambda_list(args, ["0", "0.5", "0.9"])):
        checks.append(_check(f"vector lambda={lam:g} pdf mass", abs(vector_rel_integral(lam) - 1.0), 1e-8))
        a = np.array([1.0, 0.0], dtype=complex)
        b = np.array([lam, np.sqrt(max(1.0 - abs(lam) ** 2, 0.0))], dtype=complex)
        est = vector_rel_mc(a, b, samples, stream(args.seed, idx), threads=args.threads)
        tv = est.histogram.rebinned(64).tv_distance(vector_rel_bin_masses(lam, edges))
        checks.append(_check(f"vector lambda={lam:g} histogram TV", tv, 0.02))
        moment = vector_rel_integral(lam, lambda th: np.exp(1j * th))
        checks.append(_check(f"vector lambda={lam:g} first moment", abs(est.first_moment - moment), 3 * est.stderr + 1e-12))
    return checks


SUITES = {"gwb": suite_gwb, "fidelity": suite_fidelity, "cauchy": suite_cauchy, "vector": suite_vector}


def cmd_verify(args, out: Emitter) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite.replace("vector-cauchy", "vector")]
    checks = []
    for name in names:
        checks.extend(SUITES[name](args))
    passed = all(c["passed"] for c in checks)
    out.write(dump_json({"suite": args.suite, "checks": checks, "passed": passed}))
    return EXIT_OK if passed else EXIT_FAILED


def cmd_round(args, out: Emitter) -> int:
    inst = _read_instance(args.instance)
    sdp, sol = _solve(inst, args)
    if args.method == "analytic":
        run = expected_value_analytic(inst, sol)
    else:
        rep = build_representation(inst.num_vars, inst.k)
        if args.method == "gwb":
            run = expected_value_gwb_exact(inst, sol, rep)
        else:
            run = expected_value_gwb_mc(inst, sol, rep, args.samples or 2000, args.seed, args.threads)
    payload = {
        "method": run.method,
        "sdp_value": sol.sdp_value,
        "expected_value": run.expected_value,
        "stderr": run.stderr,
        "samples": run.samples,
        "per_constraint": [
            {"i": con.i, "j": con.j, "kind": con.kind.value, "w": con.w, "lambda": run.lam[(con.i, con.j)], "value": v}
            for con, v in zip(inst.constraints, run.contributions)
        ],
        "ratio_vs_sdp": run.expected_value / sol.sdp_value if sol.sdp_value > 0 else 1.0,
    }
    out.write(dump_json(payload))
    return EXIT_OK


def cmd_classical_round(args, out: Emitter) -> int:
    inst = _read_instance(args.instance)
    if args.k and int(args.k[0]) != inst.k:
        raise InstanceError(f"--k {args.k[0]} does not match the instance modulus {inst.k}")
    sdp, sol = _solve(inst, args)
    rep = build_representation(inst.num_vars, inst.k)
    ops = [round_matrix(vector_to_unitary(rep, x), inst.k) for x in sol.vectors]
    res = classical_extraction_mc(ops, inst, args.samples or 10**4, args.seed, args.threads)
    out.write(dump_json({
        "k": inst.k,
        "sdp_value": sol.sdp_value,
        "operator_dim": rep.dim,
        "tracial_value": res.tracial_value,
        "classical_mean": res.mean,
        "stderr": res.stderr,
        "ratio": res.ratio,
        "samples": res.samples,
        "r_distribution": "V diag(uniform k-th roots) V*, V Haar",
    }))
    return EXIT_OK


# --------------------------------------------------------------------------- #
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--sdp-tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--sdp-strict-bounds", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--k", nargs="+", default=None)
    common.add_argument("--problem", choices=["maxkcut", "homlin", "smooth"], default=None)
    common.add_argument("--m", type=int, default=None)

    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve the canonical SDP and round analytically")
    p.add_argument("instance")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ratio", parents=[common], help="approximation ratio table")
    p.set_defaults(func=cmd_ratio, problem="maxkcut")

    p = sub.add_parser("ratio-curve", parents=[common], help="ratio branches as functions of lambda")
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_ratio_curve, problem="maxkcut")

    p = sub.add_parser("curve", parents=[common], help="fidelity or wrapped Cauchy density tables")
    p.add_argument("kind", choices=["fid", "cauchy"])
    p.add_argument("--lambda", dest="lam", nargs="+", default=None)
    p.add_argument("--points", type=int, default=721)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("gwb", parents=[common], help="group orders and representation checks")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--dump", action="store_true", help="include sigma matrices as row-major [re, im] pairs")
    p.set_defaults(func=cmd_gwb)

    p = sub.add_parser("verify", parents=[common], help="numerical verification suites")
    p.add_argument("suite", choices=["gwb", "cauchy", "fidelity", "vector", "vector-cauchy", "all"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lambda", dest="lam", nargs="+", default=None)
    p.add_argument("--csv-prefix", default=None, help="write cauchy moment and histogram CSVs")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("round", parents=[common], help="expected rounded objective")
    p.add_argument("instance")
    p.add_argument("--method", choices=["analytic", "gwb", "gwb-mc"], default="analytic")
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("classical-round", parents=[common], help="tracial to classical rounding experiment")
    p.add_argument("instance")
    p.set_defaults(func=cmd_classical_round)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Emitter(args)
    try:
        code = args.func(args, out)
    except (InstanceError, NonHomogeneousInstance, DomainError, InfeasibleGram, FileNotFoundError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MaxIterations, NumericalFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (BudgetExceeded, GroupBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    out.manifest(argv)
    return code

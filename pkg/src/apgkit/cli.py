"""Command-line entry point: solve / counterexample / inpaint / diagnose.

Exit codes: 0 success, 2 configuration or schedule error, 3 cone/affine
detection failure, 4 oracle cap exceeded, 5 non-convergence. Errors are
emitted as one-line JSON on stderr. Every text output begins with comment
lines carrying the tool version, a hash of the effective configuration,
and the seed; JSON outputs carry the same fields under a leading "meta"
key. Identical configuration and seed reproduce outputs byte for byte
(floats are written in shortest round-trip form).
"""

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .cone_affine import apg_cone_iterate, separation_certificate
from .descriptors import problem_from_json, problem_to_json
from .errors import (CertificationUnavailableError, ConstructionError,
                     DetectionError, DimensionMismatchError,
                     OracleUnavailableError, PowerIterationError,
                     PreconditionError, ScheduleError)
from .inpaint import instance_to_json, make_instance, reconstruct, synthetic_image
from .io import fmt_float, read_pgm, write_pgm, write_vector_bin
from .problem import closedness_diagnostics, make_random_problem
from .schedules import (chambolle_dossal, classical_fista, linear_half,
                        schedule_from_csv, theta_family)
from .solvers import run_apg, run_pgm, stop_on_gradmap

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DETECTION = 3
EXIT_CAP = 4
EXIT_NOCONV = 5

CONFIG_ERRORS = (ConstructionError, ScheduleError, DimensionMismatchError,
                 PreconditionError, PowerIterationError,
                 CertificationUnavailableError, FileNotFoundError,
                 json.JSONDecodeError, ValueError)


def _config_hash(args) -> str:
    payload = {k: v for k, v in vars(args).items()
               if k not in ("func", "out") and not callable(v)}
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _meta(args) -> dict:
    return {"tool": f"apgkit {__version__}",
            "config": _config_hash(args),
            "seed": getattr(args, "seed", None)}


def _header_lines(args):
    m = _meta(args)
    return [m["tool"], f"config {m['config']}", f"seed {m['seed']}"]


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _parse_schedule(spec: str):
    if spec in ("fista", "classical-fista"):
        return classical_fista()
    if spec == "linear-half":
        return linear_half()
    if spec.startswith("cd:"):
        return chambolle_dossal(float(spec[3:]))
    if spec.startswith("theta:"):
        return theta_family(float(spec[6:]))
    if spec.startswith("custom:"):
        return schedule_from_csv(spec[7:])
    raise ScheduleError(f"unknown schedule spec {spec!r}")


def _load_problem(args):
    if getattr(args, "problem", None):
        return problem_from_json(args.problem)
    if getattr(args, "random", None):
        rows, cols = args.random
        return make_random_problem(rows, cols, args.seed)
    raise ConstructionError("provide --problem FILE or --random ROWS COLS")


def _initial_point(args, dim):
    if args.x0 == "zeros":
        return np.zeros(dim)
    if args.x0 == "ones":
        return np.ones(dim)
    return np.random.default_rng([args.seed, 1]).standard_normal(dim)


def cmd_solve(args) -> int:
    p = _load_problem(args)
    os.makedirs(args.out, exist_ok=True)
    if getattr(args, "random", None):
        problem_to_json(p, args.out)
    x0 = _initial_point(args, p.dim)
    stop = stop_on_gradmap(args.tol, max_iter=args.max_iter)
    sol = p.try_solution_set()
    if args.pgm:
        trace = run_pgm(p, x0, stop)
        method = "pgm"
    else:
        sched = _parse_schedule(args.schedule)
        if args.certify == "auto":
            certify = {"rate", "xi", "ball"} if sol is not None else set()
        elif args.certify in ("none", ""):
            certify = set()
        else:
            certify = set(args.certify.split(","))
        trace = run_apg(p, x0, sched, stop, certify=certify)
        method = f"apg[{sched.family}]"
    trace.to_csv(os.path.join(args.out, "trace.csv"),
                 header_lines=_header_lines(args))
    write_vector_bin(os.path.join(args.out, "x_final.bin"), trace.x_final)
    k = trace.iterations
    summary = {
        "meta": _meta(args),
        "method": method,
        "lip": trace.lip,
        "power_seed": trace.power_seed,
        "converged": trace.converged,
        "stop_reason": trace.stop_reason,
        "iterations": k,
        "violations": trace.violation_counts(),
        "final": {"F": trace.F[k], "gap": trace.gap[k],
                  "gradmap": trace.gradmap[k], "dist_S": trace.dist_S[k]},
    }
    if sol is not None:
        summary["final"]["dist_to_PSx0"] = float(
            np.linalg.norm(trace.x_final - sol.project(x0)))
    summary["final"] = {key: (None if isinstance(v, float) and np.isnan(v) else v)
                        for key, v in summary["final"].items()}
    _write_json(os.path.join(args.out, "summary.json"), summary)
    return EXIT_OK if trace.converged else EXIT_NOCONV


def _rat(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


GOLDEN_W5 = {
    "x": {1: (Fraction(3), Fraction(-2)), 2: (Fraction(2), Fraction(-1)),
          3: (Fraction(11, 8), Fraction(-3, 8)),
          4: (Fraction(17, 16), Fraction(-1, 16))},
    "y4": (Fraction(29, 32), Fraction(3, 32)),
    "M": 4,
    "d_M": Fraction(5, 16),
    "u_star": Fraction(13, 32),
    "x_star": (Fraction(19, 32), Fraction(13, 32)),
    "p_star": (Fraction(1), Fraction(0)),
}


def cmd_counterexample(args) -> int:
    w = Fraction(args.w)
    report = separation_certificate(w, args.horizon)
    states = apg_cone_iterate(w, args.horizon)
    os.makedirs(args.out, exist_ok=True)
    head = _header_lines(args)

    with open(os.path.join(args.out, "map_exact.csv"), "w",
              encoding="utf-8") as fh:
        for line in head + [f"limit {_rat(report.p_star[0])},{_rat(report.p_star[1])}"]:
            fh.write(f"# {line}\n")
        for st in states:
            fh.write(f"{_rat(st.p[0])},{_rat(st.p[1])}\n")
    with open(os.path.join(args.out, "apg_exact.csv"), "w",
              encoding="utf-8") as fh:
        for line in head + [f"limit {_rat(report.x_star[0])},{_rat(report.x_star[1])}"]:
            fh.write(f"# {line}\n")
        for st in states:
            fh.write(f"{_rat(st.x[0])},{_rat(st.x[1])}\n")
    with open(os.path.join(args.out, "trajectories_float.csv"), "w",
              encoding="utf-8") as fh:
        for line in head + [
                f"p_star {fmt_float(report.p_star[0])},{fmt_float(report.p_star[1])}",
                f"x_star {fmt_float(report.x_star[0])},{fmt_float(report.x_star[1])}"]:
            fh.write(f"# {line}\n")
        fh.write("iter,map_x1,map_x2,apg_x1,apg_x2\n")
        for st in states:
            cells = [str(st.k)] + [fmt_float(v)
                                   for v in (*st.p, *st.x)]
            fh.write(",".join(cells) + "\n")

    summary = {
        "meta": _meta(args),
        "w": _rat(w),
        "M": report.M,
        "d_M": _rat(report.d_M) if report.d_M is not None else None,
        "u_star": _rat(report.u_star),
        "x_star": [_rat(v) for v in report.x_star],
        "p_star": [_rat(v) for v in report.p_star],
        "separation_sq": _rat(report.separation_sq),
        "separation_sq_float": float(report.separation_sq),
    }

    golden = None
    if w == 5:
        g = GOLDEN_W5
        golden = (all(states[k].x == v for k, v in g["x"].items())
                  and states[4].y == g["y4"]
                  and report.M == g["M"] and report.d_M == g["d_M"]
                  and report.u_star == g["u_star"]
                  and report.x_star == g["x_star"]
                  and report.p_star == g["p_star"])
        summary["golden_w5_reproduced"] = golden
    _write_json(os.path.join(args.out, "summary.json"), summary)
    if golden is False:
        print(json.dumps({"error": "GoldenMismatch",
                          "message": "w=5 run deviates from the published values"}),
              file=sys.stderr)
        return 1
    return EXIT_OK


def cmd_inpaint(args) -> int:
    if args.image:
        img = read_pgm(args.image)
    else:
        img = synthetic_image(args.synthetic)
    inst = make_instance(img, args.corrupt, args.p, args.m, args.seed,
                         freq_policy=args.freq_policy)
    os.makedirs(args.out, exist_ok=True)
    head = _header_lines(args)
    n = inst.n
    write_pgm(os.path.join(args.out, "truth.pgm"), img, header_lines=head)
    write_pgm(os.path.join(args.out, "corrupted.pgm"), inst.corrupted_image(),
              header_lines=head)
    instance_to_json(inst, os.path.join(args.out, "instance.json"),
                     meta=_meta(args))

    recs = []
    for init in args.inits.split(","):
        rec = reconstruct(inst, init=init.strip(), tol=args.tol,
                          max_iter=args.max_iter)
        tag = rec.init_tag.split("(")[0]
        write_pgm(os.path.join(args.out, f"recon_{tag}.pgm"),
                  rec.x_final.reshape(n, n), header_lines=head)
        recs.append((tag, rec))

    per_init = {}
    for tag, rec in recs:
        per_init[tag] = {
            "init": rec.init_tag,
            "converged": rec.converged,
            "iterations": rec.iters,
            "gradmap_final": rec.gradmap_final,
            "objective_final": inst.problem.f(rec.x_final),
            "psnr_vs_truth": rec.psnr_vs_truth,
            "dist_to_PSx0": rec.dist_to_PSx0,
        }
    pairwise = {}
    for i in range(len(recs)):
        for j in range(i + 1, len(recs)):
            key = f"{recs[i][0]}|{recs[j][0]}"
            pairwise[key] = float(np.linalg.norm(recs[i][1].x_final
                                                 - recs[j][1].x_final))
    metrics = {"meta": _meta(args), "n": n, "p": inst.p, "m": inst.m,
               "corruption_fraction": inst.corruption_fraction,
               "freq_policy": inst.freq_policy,
               "per_init": per_init, "pairwise_distances": pairwise}
    _write_json(os.path.join(args.out, "metrics.json"), metrics)
    return EXIT_OK if all(rec.converged for _, rec in recs) else EXIT_NOCONV


def cmd_diagnose(args) -> int:
    p = _load_problem(args)
    sol = p.solution_set()          # OracleUnavailableError -> exit 4
    diag = closedness_diagnostics(p)
    residuals = sol.validate(p)
    lines = [
        f"friedrichs_cos  {fmt_float(diag.friedrichs_cos)}",
        f"error_bound_C   {fmt_float(diag.error_bound_C)}",
        f"dim_par_S       {sol.par_dim}",
        f"mu              {fmt_float(sol.mu)}",
        "anchor residuals:",
    ]
    lines += [f"  {k}  {fmt_float(v)}" for k, v in residuals.items()]
    print("\n".join(lines))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "diagnose.json"),
                    {"meta": _meta(args),
                     "friedrichs_cos": diag.friedrichs_cos,
                     "error_bound_C": diag.error_bound_C,
                     "dim_par_S": sol.par_dim,
                     "mu": sol.mu,
                     "anchor_residuals": residuals})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="apgkit",
        description="Projected/accelerated gradient experiments on "
                    "affine-quadratic problems")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run PGM or APG on a problem")
    s.add_argument("--problem", help="problem descriptor JSON")
    s.add_argument("--random", nargs=2, type=int, metavar=("ROWS", "COLS"),
                   help="generate a seeded random instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x0", choices=["random", "zeros", "ones"],
                   default="random")
    s.add_argument("--pgm", action="store_true",
                   help="plain projected gradient instead of APG")
    s.add_argument("--schedule", default="fista",
                   help="fista | linear-half | cd:A | theta:T | custom:FILE")
    s.add_argument("--tol", type=float, default=1e-10,
                   help="gradient-mapping stopping tolerance")
    s.add_argument("--max-iter", type=int, default=1_000_000)
    s.add_argument("--certify", default="auto",
                   help="auto | none | comma list of rate,xi,ball,shadow")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("counterexample",
                       help="exact cone/affine two-limit demonstration")
    c.add_argument("--w", default="5", help="start abscissa as NUM or NUM/DEN")
    c.add_argument("--horizon", type=int, default=64)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_counterexample)

    i = sub.add_parser("inpaint", help="DCT-constrained image recovery study")
    group = i.add_mutually_exclusive_group(required=True)
    group.add_argument("--synthetic", type=int, metavar="N",
                       help="built-in N-by-N test image")
    group.add_argument("--image", help="8-bit binary PGM file")
    i.add_argument("--corrupt", type=float, default=0.4)
    i.add_argument("--p", type=int, required=True, help="known pixels")
    i.add_argument("--m", type=int, required=True, help="known DCT rows")
    i.add_argument("--inits", default="ones,zeros,random")
    i.add_argument("--tol", type=float, default=1e-10)
    i.add_argument("--max-iter", type=int, default=200_000)
    i.add_argument("--freq-policy", choices=["random", "high", "low"],
                   default="random")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default=".")
    i.set_defaults(func=cmd_inpaint)

    d = sub.add_parser("diagnose", help="closedness and oracle diagnostics")
    d.add_argument("--problem", help="problem descriptor JSON")
    d.add_argument("--random", nargs=2, type=int, metavar=("ROWS", "COLS"))
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DetectionError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_DETECTION
    except OracleUnavailableError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CAP
    except CONFIG_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

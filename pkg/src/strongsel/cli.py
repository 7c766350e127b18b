"""Command-line entry point: ``strongsel <command> ...``.

Every stochastic command is a pure function of its arguments and ``--seed``.
Floats are written with 17 significant digits; JSON documents carry
``spec_version``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, is_dataclass

import numpy as np

from . import SPEC_VERSION
from .acceptance import CRITERIA, run_suite
from .ancestral import (
    AsgState,
    asg_rates,
    asymptotic_rates,
    genealogical_interpretation_probe,
    simulate_fast,
    simulate_slow,
)
from .core import load_model
from .diffusion import (
    CbiState,
    cbi_simulate,
    gaussian_moments_solve,
    logistic_trajectory,
    wf_ensemble,
    wf_simulate,
)
from .discrete_wf import increment_limit_convergence, increment_moments, scaling_params, wf_step
from .duality import (
    componentwise_duality_check,
    generator_duality_check,
    mc_duality_experiment,
    random_duality_grid,
)
from .sampling import (
    SamplingProbabilities,
    expansion_general,
    expansion_pim,
    mc_oracle,
    pim_quadrature_oracle,
    truncated_system_oracle,
)

# replicates per worker task; fixed so the stream layout never depends on --threads
CHUNK = 256


# --- output ------------------------------------------------------------------

def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return f"{x:.17g}"
    return str(x)


def to_plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj, indent=0):
    """JSON text with every float at 17 significant digits; ``indent=None`` gives one line."""
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(k)}: {dumps(v, None if indent is None else indent + 1)}" for k, v in obj.items()]
        return "{" + _join(items, indent) + "}"
    if isinstance(obj, list):
        flat = all(not isinstance(v, (dict, list)) for v in obj)
        items = [dumps(v, None if indent is None or flat else indent + 1) for v in obj]
        return "[" + _join(items, None if flat else indent) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return fmt(obj)


def _join(items, indent):
    if indent is None:
        return ", ".join(items)
    pad = "  " * (indent + 1)
    return "\n" + ",\n".join(pad + item for item in items) + "\n" + "  " * indent


def emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def emit_json(payload, out):
    doc = {"spec_version": SPEC_VERSION}
    doc.update(to_plain(payload))
    emit(dumps(doc) + "\n", out)


def emit_csv(header, rows, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    emit(buf.getvalue(), out)


def emit_jsonl(records, out):
    emit("".join(dumps(to_plain(r), None) + "\n" for r in records), out)


# --- argument helpers --------------------------------------------------------

def int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def sigma_of(args, spec):
    return spec.selection.sigma if args.sigma is None else args.sigma


def rng_tasks(seed, replicates, task):
    """Run task(start, stop, rng) over fixed-size replicate chunks, one child stream per chunk."""
    starts = list(range(0, replicates, CHUNK))
    streams = np.random.SeedSequence(seed).spawn(len(starts))
    jobs = [(s, min(s + CHUNK, replicates), np.random.default_rng(ss)) for s, ss in zip(starts, streams)]
    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        return list(pool.map(lambda job: task(*job), jobs))


THREADS = os.cpu_count() or 1


# --- commands ------------------------------------------------------------------

def cmd_expand(args):
    spec = load_model(args.model)
    if args.method == "pim":
        if spec.pim is None:
            raise ValueError("the closed form needs a PIM model (give Q)")
        table = expansion_pim(spec.pim, args.hmax)
    else:
        table = expansion_general(spec.mutation, args.hmax)
    if args.kmax is not None:
        rows = [r for r in table.rows() if r[0] <= args.kmax]
    else:
        rows = table.rows()
    header = ["k"] + [f"n{i + 1}" for i in range(spec.d)] + ["qtilde"]
    emit_csv(header, ([k, *n, v] for k, n, v in rows), args.out)


def cmd_oracle(args):
    spec = load_model(args.model)
    sigma = sigma_of(args, spec)
    n = args.n
    if len(n) != spec.d:
        raise ValueError(f"--n needs {spec.d} counts")
    if args.method == "pim-quad":
        if spec.pim is None:
            raise ValueError("pim-quad needs a PIM model (give Q)")
        sigmas = spec.selection.vector(spec.d).copy()
        sigmas[0] = sigma
        result = pim_quadrature_oracle(n, spec.pim, sigmas, tol=args.tol)
    elif args.method == "linsys":
        cap = args.level_cap or sum(n) + 12
        result = truncated_system_oracle(spec.mutation, sigma, cap)[n]
    else:
        result = mc_oracle(spec.mutation, sigma, n, replicates=args.replicates, seed=args.seed)
    emit_json({"n": list(n), "value": result.value, "error_estimate": result.error_estimate,
               "method": result.method, "settings": result.settings}, args.out)


def cmd_simulate(args):
    spec = load_model(args.model)
    m, d = spec.mutation, spec.d
    if args.process == "wf":
        x0 = args.x0 or (1.0,) + (0.0,) * (d - 1)
        if args.replicates == 1:
            path = wf_simulate(m, spec.selection, x0, args.horizon, args.dt, args.seed)
            rows = ([t, *x] for t, x in zip(path.times, path.states))
            emit_csv(["t"] + [f"x{i + 1}" for i in range(d)], rows, args.out)
            return
        n_steps = int(math.ceil(args.horizon / args.dt - 1e-12))
        sigmas = spec.selection.vector(d)

        def task(start, stop, rng):
            x = np.tile(np.asarray(x0, dtype=float), (stop - start, 1))
            wf_ensemble(m, sigmas, x, args.dt, n_steps, rng)
            return [[r, *row] for r, row in zip(range(start, stop), x)]

        rows = [row for chunk in rng_tasks(args.seed, args.replicates, task) for row in chunk]
        emit_csv(["replicate"] + [f"x{i + 1}" for i in range(d)], rows, args.out)
    elif args.process == "cbi":
        z0 = CbiState.from_unfit(args.z0 or (0.0,) * (d - 1))
        times = [args.horizon * (k + 1) / args.steps for k in range(args.steps)]
        streams = np.random.SeedSequence(args.seed).spawn(args.replicates)

        def task(start, stop, _rng):
            return [(r, cbi_simulate(m, z0, times, streams[r])) for r in range(start, stop)]

        rows = []
        for chunk in rng_tasks(args.seed, args.replicates, task):
            for r, states in chunk:
                rows += [[r, s.time, *s.z] for s in states]
        emit_csv(["replicate", "t"] + [f"z{i + 1}" for i in range(d)], rows, args.out)
    elif args.process == "logistic":
        xi0 = args.x0 or (0.5,) + (0.5 / (d - 1),) * (d - 1)
        times = np.linspace(0.0, args.horizon, args.steps + 1)
        emit_csv(["t"] + [f"xi{i + 1}" for i in range(d)],
                 ([t, *logistic_trajectory(xi0, t)] for t in times), args.out)
    else:
        xi0 = args.x0 or (0.5,) + (0.5 / (d - 1),) * (d - 1)
        moments = gaussian_moments_solve(xi0, np.zeros(d), np.zeros((d, d)), args.horizon, args.dt)
        header = ["t"] + [f"m{i + 1}" for i in range(d)] + [f"C{i + 1}{j + 1}" for i in range(d) for j in range(d)]
        emit_csv(header, ([g.t, *g.mean, *g.cov.ravel()] for g in moments), args.out)


def _rate_rows(table):
    return [{"kind": e.kind, "source": e.source, "dest": e.dest, "target": list(e.target.n),
             "target_nu": list(e.target.nu), "rate": e.rate, "rel_error": e.rel_error} for e in table.entries]


def cmd_asg(args):
    spec = load_model(args.model)
    m = spec.mutation
    if args.action == "rates":
        state = AsgState(args.n, args.nu)
        if args.asymptotic:
            slow, fast = asymptotic_rates(state, m)
            payload = {"slow": slow and _rate_rows(slow), "fast": fast and _rate_rows(fast)}
        else:
            sigma = sigma_of(args, spec)
            cap = args.level_cap or state.size + 12
            provider = SamplingProbabilities.from_truncated_system(m, sigma, cap)
            table = asg_rates(state, m, sigma, provider)
            payload = {"sigma": sigma, "total": table.total, "expected_total": table.expected_total,
                       "relative_discrepancy": table.relative_discrepancy, "rates": _rate_rows(table)}
        emit_json(payload, args.out)
    elif args.action == "simulate-fast":
        events = simulate_fast(args.n, m, args.seed)
        emit_jsonl(({"t": t, "kind": k, "type": i, "n": list(n)} for t, k, i, n in events), args.out)
    elif args.action == "simulate-slow":
        theta_out = m.theta * (1.0 - m.P[0, 0])
        events = simulate_slow(args.n[0], theta_out, args.seed, record_virtual=args.record_virtual)
        emit_jsonl(({"t": t, "kind": k, "type": i, "n_fit": n} for t, k, i, n in events), args.out)
    else:
        probe = genealogical_interpretation_probe(args.n, m, args.sigmas, args.level_cap)
        emit_json({"probe": probe}, args.out)


def cmd_duality(args):
    spec = load_model(args.model)
    m = spec.mutation
    if args.action == "generator-check":
        points = random_duality_grid(m, args.points, np.random.default_rng(args.seed))
        check = generator_duality_check(points, m)
        emit_json({"points": check.points, "analytic_residual": check.analytic_residual,
                   "closed_form_residual": check.closed_form_residual,
                   "finite_difference_residual": check.finite_difference_residual}, args.out)
    elif args.action == "mc":
        est = mc_duality_experiment(args.z0, args.n, args.t, args.replicates, args.seed, m)
        emit_json({"lhs": est.lhs, "lhs_se": est.lhs_se, "rhs": est.rhs, "rhs_se": est.rhs_se,
                   "confidence": est.confidence, "half_widths": est.half_widths, "overlap": est.overlap},
                  args.out)
    else:
        res = componentwise_duality_check(args.component, args.z0[0], args.n[0], args.t,
                                          args.replicates, args.seed, m)
        emit_json({"estimate": res.estimate, "exact": res.exact, "lhs_within": res.lhs_within,
                   "rhs_within": res.rhs_within}, args.out)


def cmd_wf_discrete(args):
    spec = load_model(args.model)
    m, d = spec.mutation, spec.d
    sigmas = spec.selection.vector(d)
    x = np.asarray(args.x0 or (1.0 / d,) * d, dtype=float)
    cols = [f"x{i + 1}" for i in range(d)]
    if args.action == "step":
        p = scaling_params(m, sigmas, args.N, args.case)

        def task(start, stop, rng):
            batch = np.tile(x, (stop - start, 1))
            for _ in range(args.generations):
                batch = wf_step(batch, p, rng)
            return [[r, *row] for r, row in zip(range(start, stop), batch)]

        rows = [row for chunk in rng_tasks(args.seed, args.replicates, task) for row in chunk]
        emit_csv(["replicate"] + cols, rows, args.out)
    elif args.action == "moments":
        p = scaling_params(m, sigmas, args.N, args.case)
        drift, second = increment_moments(x, p, p.alpha)
        rows = [["drift", i + 1, "", drift[i]] for i in range(d)]
        rows += [["second", i + 1, j + 1, second[i, j]] for i in range(d) for j in range(d)]
        emit_csv(["moment", "i", "j", "value"], rows, args.out)
    else:
        conv = increment_limit_convergence(m, sigmas, x, args.case, args.N_list)
        rows = [[N, de, ce] for N, de, ce in zip(conv.N_list, conv.drift_errors, conv.covariance_errors)]
        rows.append(["slope", conv.drift_slope, conv.covariance_slope])
        emit_csv(["N", "drift_error", "covariance_error"], rows, args.out)


def cmd_acceptance(args):
    numbers = args.criteria or sorted(CRITERIA)
    results = run_suite(numbers, echo=lambda line: print(line, file=sys.stderr if args.out in (None, "-") else sys.stdout))
    report = {"suite": args.suite, "passed": all(r.passed for r in results),
              "criteria": [{"number": r.number, "title": r.title, "passed": r.passed,
                            "summary": r.summary, "seconds": r.seconds} for r in results]}
    emit_json(report, args.out)
    return 0 if report["passed"] else 1


# --- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="strongsel", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="TOML model file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: logical cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="expansion coefficients as CSV")
    p.add_argument("--hmax", type=int, default=8)
    p.add_argument("--kmax", type=int, default=None, help="drop rows with k above this order")
    p.add_argument("--method", choices=["general", "pim"], default="general")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("oracle", parents=[common], help="finite-sigma sampling probability")
    p.add_argument("--method", choices=["pim-quad", "linsys", "mc"], required=True)
    p.add_argument("--n", type=int_list, required=True, help="comma-separated counts")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--level-cap", type=int, default=None)
    p.add_argument("--replicates", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", parents=[common], help="forward processes")
    p.add_argument("process", choices=["wf", "cbi", "logistic", "gaussian-moments"])
    p.add_argument("--x0", type=float_list, default=None, help="start on the simplex (wf, logistic, gaussian-moments)")
    p.add_argument("--z0", type=float_list, default=None, help="unfit CBI coordinates")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=10, help="output times for cbi and logistic")
    p.add_argument("--replicates", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("asg", parents=[common], help="ancestral process rates and limits")
    p.add_argument("action", choices=["rates", "simulate-fast", "simulate-slow", "probe"])
    p.add_argument("--n", type=int_list, required=True)
    p.add_argument("--nu", type=int_list, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--sigmas", type=float_list, default=(1e2, 1e3, 1e4))
    p.add_argument("--level-cap", type=int, default=None)
    p.add_argument("--asymptotic", action="store_true", help="limiting rates instead of finite sigma")
    p.add_argument("--record-virtual", action="store_true")
    p.set_defaults(func=cmd_asg)

    p = sub.add_parser("duality", parents=[common], help="moment duality checks")
    p.add_argument("action", choices=["generator-check", "mc", "component"])
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--z0", type=float_list, default=None, help="unfit CBI coordinates (component: the single z_i)")
    p.add_argument("--n", type=int_list, default=None, help="sample counts (component: the single n_i)")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--component", type=int, default=1)
    p.add_argument("--replicates", type=int, default=100_000)
    p.set_defaults(func=cmd_duality)

    p = sub.add_parser("wf-discrete", parents=[common], help="discrete Wright-Fisher model")
    p.add_argument("action", choices=["step", "moments", "scaling"])
    p.add_argument("--case", choices=["d,i", "a,ii", "a,i"], default="d,i")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--N-list", dest="N_list", type=float_list, default=(1e3, 1e4, 1e5))
    p.add_argument("--x0", type=float_list, default=None)
    p.add_argument("--generations", type=int, default=1)
    p.add_argument("--replicates", type=int, default=1)
    p.set_defaults(func=cmd_wf_discrete)

    p = sub.add_parser("acceptance", parents=[common], help="run the acceptance suite")
    p.add_argument("--suite", choices=["primary"], default="primary")
    p.add_argument("--criteria", type=int_list, default=None, help="subset, e.g. 1,4,10")
    p.set_defaults(func=cmd_acceptance)
    return parser


def main(argv=None):
    global THREADS
    args = build_parser().parse_args(argv)
    THREADS = max(1, args.threads or os.cpu_count() or 1)
    needs_model = args.command not in ("acceptance",)
    if needs_model and not args.model:
        print("error: --model is required", file=sys.stderr)
        return 2
    if args.command == "duality" and args.action != "generator-check" and (args.z0 is None or args.n is None):
        print("error: --z0 and --n are required", file=sys.stderr)
        return 2
    try:
        return args.func(args) or 0
    except (ValueError, KeyError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

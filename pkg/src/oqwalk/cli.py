"""Command-line interface: ``oqwalk <command> WALK [options]``.

``WALK`` is a walk spec path or the name of a bundled spec (``oqwalk list``).
Exit codes: 0 success, 1 a check failed, 2 usage or parse error.
"""

import argparse
import json
import platform
import sys
import warnings

import numpy as np

from . import __version__, tolerances
from .builders import classical_coin, general_coin, hadamard_split_coin
from .ergodic import NotErgodicError, classify, fundamental, identity_residuals, power_convergence
from .hitting import NonAbsorbingError, hit_value, hitting_bundle, mht_value, return_value, series_bundle
from .mhtf import (
    HypothesisError,
    assemble,
    check_bracket_decomposition,
    check_constant_return,
    formula_residual,
    hermitian_basis,
    target_time,
    target_time_sweep,
)
from .minpoly import f_rank_one_residual, finite_formula_value, minimal_polynomial
from .model import ValidationError, block_rep, validate
from .specfile import ParseError, bundled_specs, concentrated_site, load_walk, parse_density
from .trajectories import TrajectoryConfig, npath_experiment, sample_hitting_time

SCHEMA = "oqwalk.report/1"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _versions():
    return {"oqwalk": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _emit(args, results, lines, ok=True, seed=None):
    if args.json:
        inputs = {k: v for k, v in vars(args).items() if k not in ("func", "json")}
        record = {"schema": SCHEMA, "command": args.command, "inputs": inputs, "seed": seed,
                  "versions": _versions(), "ok": ok, "results": results}
        print(json.dumps(_jsonable(record), indent=2))
    else:
        for line in lines:
            print(line)
    return 0 if ok else 1


def _tol(args, default):
    return default if args.tol is None else args.tol


def _walk_and_op(args):
    model = load_walk(args.walk)
    return model, block_rep(model, _tol(args, tolerances.STRUCTURAL))


def _densities(args, model):
    """Parsed ``--rho`` specs as ``(site, rho)`` pairs."""
    return [concentrated_site(parse_density(s, model.k, model.n)) for s in (args.rho or [])]


def cmd_list(args):
    names = bundled_specs()
    return _emit(args, {"bundled": names}, names)


def cmd_validate(args):
    model = load_walk(args.walk)
    rep = validate(model, _tol(args, tolerances.STRUCTURAL))
    lines = [f"walk {model.label or args.walk}: k={model.k} n={model.n}",
             f"{'source':>6}  {'residual':>12}"]
    lines += [f"{j + 1:>6}  {r:12.3e}" for j, r in enumerate(rep.residuals)]
    lines.append(f"normalization {'PASS' if rep.passed else 'FAIL'} (max residual {rep.max_residual:.3e}, "
                 f"tol {rep.tol:.1e})")
    results = {"k": model.k, "n": model.n, "label": model.label, "passed": rep.passed,
               "residuals": list(rep.residuals), "offending": [j + 1 for j in rep.offending]}
    return _emit(args, results, lines, ok=rep.passed)


def cmd_ergodic(args):
    _, op = _walk_and_op(args)
    rep = classify(op, _tol(args, tolerances.SPECTRAL))
    conv = power_convergence(op, r_max=args.r_max)
    shown = rep.eigenvalues[: args.show]
    lines = [f"leading eigenvalues (|lambda| descending, {len(shown)} of {len(rep.eigenvalues)}):"]
    lines += [f"  {z.real:+.9f} {z.imag:+.9f}i   |{abs(z):.9f}|" for z in shown]
    lines += [f"spectral gap        {rep.spectral_gap:.9f}",
              f"fixed-point resid.  {rep.fixed_point_residual:.3e}",
              f"powers converge     {'at r=' + str(conv.r_star) if conv.converged else 'no (r_max reached)'}",
              f"ergodic             {'yes' if rep.is_ergodic else 'no'}"]
    if rep.diagnostic:
        lines.append(f"diagnostic          {rep.diagnostic}")
    results = {"is_ergodic": rep.is_ergodic, "spectral_gap": rep.spectral_gap,
               "fixed_point_residual": rep.fixed_point_residual, "unit_circle_count": rep.unit_circle_count,
               "eigenvalues": list(rep.eigenvalues), "power_convergence_r": conv.r_star,
               "diagnostic": rep.diagnostic}
    if rep.is_ergodic:
        z = fundamental(op)
        ids = identity_residuals(op, z)
        results["identity_residuals"] = ids
        lines.append("identity residuals  " + ", ".join(f"{k}={v:.1e}" for k, v in ids.items()))
    return _emit(args, results, lines, ok=rep.is_ergodic)


def cmd_hitting(args):
    model, op = _walk_and_op(args)
    target = args.target - 1
    if not 0 <= target < model.k:
        raise ParseError(f"--target must be in 1..{model.k}")
    start, rho = concentrated_site(parse_density(args.rho, model.k, model.n))
    results = {"target": target + 1, "start": start + 1, "method": args.method}
    seed = None
    if args.method == "simulate":
        seed = args.seed
        cfg = TrajectoryConfig(target, start, rho, args.traj, args.max_steps, args.seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = sample_hitting_time(model, cfg, args.threads)
        results.update(mean=est.mean, stderr=est.stderr, timeouts=est.timeouts, samples=est.samples,
                       warnings=[str(w.message) for w in caught])
        lines = [f"mean hitting time {start + 1} -> {target + 1}: {est.mean:.6f} +/- {est.stderr:.6f} "
                 f"({est.samples} trajectories, {est.timeouts} timeouts, seed {args.seed})"]
        lines += [f"warning: {w}" for w in results["warnings"]]
        if args.compare:
            exact = mht_value(hitting_bundle(op, target), start, rho)
            z = (est.mean - exact) / est.stderr if est.stderr > 0 else 0.0
            results.update(exact=exact, z_score=z)
            lines.append(f"exact value {exact:.6f}, z-score {z:+.2f}")
        return _emit(args, results, lines, seed=seed)
    if args.method == "series":
        bundle = series_bundle(op, target, _tol(args, 1e-12))
    else:
        bundle = hitting_bundle(op, target)
    value = mht_value(bundle, start, rho)
    hit = hit_value(bundle, start, rho)
    ret = return_value(bundle, rho) if start == target else None
    results.update(mean_hitting_time=value, hitting_probability=hit, return_time=ret,
                   taboo_spectral_radius=bundle.spectral_radius)
    lines = [f"mean hitting time {start + 1} -> {target + 1}: {value:.10g}",
             f"hitting probability:        {hit:.10g}",
             f"taboo spectral radius:      {bundle.spectral_radius:.6g}"]
    if ret is not None:
        lines.append(f"mean first-return time:     {ret:.10g}")
    return _emit(args, results, lines)


def cmd_mhtf(args):
    model, op = _walk_and_op(args)
    tol = _tol(args, tolerances.IDENTITY)
    dens = hermitian_basis(model.n) + [rho for _, rho in _densities(args, model)]
    parts = assemble(op)
    z = fundamental(op).matrix
    resid = formula_residual(op, dens, parts, z)
    bracket = check_bracket_decomposition(op, dens, parts, z)
    cor = check_constant_return(op, dens, tol, parts, z)
    ok = resid <= tol and bracket <= tol and (not cor.applicable or cor.residual <= tol)
    lines = [f"mean hitting time formula residual   {resid:.3e}",
             f"bracket decomposition residual       {bracket:.3e}",
             "constant return time                 " + (f"yes, c = {cor.c:.10g}" if cor.applicable
                                                        else f"no ({cor.diagnostic})")]
    if cor.applicable:
        lines.append(f"normalized formula residual          {cor.residual:.3e}")
    lines.append(f"tolerance {tol:.1e}: {'PASS' if ok else 'FAIL'}")
    dz = parts.D.matrix @ z
    table = []
    for _, rho in _densities(args, model):
        for i in range(op.k):
            for j in range(op.k):
                if i != j:
                    blk = parts.N.matrix[op._sl(i), op._sl(j)]
                    v = float((np.eye(model.n).reshape(-1) @ blk @ rho.reshape(-1)).real)
                    rhs_blk = dz[op._sl(i), op._sl(i)] - dz[op._sl(i), op._sl(j)]
                    w = float((np.eye(model.n).reshape(-1) @ rhs_blk @ rho.reshape(-1)).real)
                    table.append({"i": i + 1, "j": j + 1, "N_ij": v, "DZ_ii_minus_DZ_ij": w})
                    lines.append(f"  Tr(N_{i + 1}{j + 1} rho) = {v:.10g}   Tr((DZ)_ii - (DZ)_ij) rho) = {w:.10g}")
    results = {"formula_residual": resid, "bracket_residual": bracket, "constant_return": cor.applicable,
               "c": cor.c if cor.applicable else None,
               "normalized_residual": cor.residual if cor.applicable else None,
               "diagnostic": cor.diagnostic, "tol": tol, "values": table}
    return _emit(args, results, lines, ok=ok)


def cmd_target_time(args):
    model, op = _walk_and_op(args)
    tol = _tol(args, tolerances.IDENTITY)
    start, rho = concentrated_site(parse_density(args.rho, model.k, model.n))
    t = target_time(op, rho, start)
    ok = t.j_spread <= tol and abs(t.value - t.via_fundamental) <= tol
    lines = [f"target time          {t.value:.10g}",
             f"via sum Tr(Z_ii rho) {t.via_fundamental:.10g}",
             f"start-site spread    {t.j_spread:.3e}",
             f"return-time constant {t.c:.10g}",
             f"tolerance {tol:.1e}: {'PASS' if ok else 'FAIL'}"]
    results = {"target_time": t.value, "via_fundamental": t.via_fundamental, "start_site": start + 1,
               "start_spread": t.j_spread, "c": t.c, "tol": tol}
    if args.sweep:
        sw = target_time_sweep(op, args.sweep)
        results["sweep"] = sw
        lines.append(f"Bloch sweep ({sw['points']} points): min {sw['min']:.10g}, max {sw['max']:.10g}")
    return _emit(args, results, lines, ok=ok)


def cmd_minpoly(args):
    model, op = _walk_and_op(args)
    tol = _tol(args, tolerances.IDENTITY)
    rep = minimal_polynomial(op)
    lines = [f"backend: {rep.backend}" + (f" ({rep.notice})" if rep.notice else ""),
             f"p(x) = {rep.p}", f"degree {rep.p.degree}"]
    results = {"backend": rep.backend, "p": rep.p.as_strings(), "p_decimal": rep.p.as_decimals(),
               "notice": rep.notice}
    ok = True
    if rep.f is None:
        lines.append("1 is not a root of p: no hitting-time cross-check")
        ok = False
    else:
        lines += [f"f(x) = {rep.f}", f"f(1) = {rep.f_at_1}"]
        results.update(f=rep.f.as_strings(), f_at_1=str(rep.f_at_1), f_rank_one_residual=f_rank_one_residual(op, rep.f))
        try:
            parts = assemble(op)
            z = fundamental(op).matrix
        except NotErgodicError as exc:
            lines.append(f"not ergodic, no cross-check: {exc}")
            return _emit(args, results, lines, ok=False)
        dz = parts.D.matrix @ z
        sites = _densities(args, model) or [(0, np.eye(model.n) / model.n)]
        worst = 0.0
        cross = []
        tr = np.eye(model.n).reshape(-1)
        for _, rho in sites:
            for i in range(op.k):
                for j in range(op.k):
                    if i == j:
                        continue
                    finite = finite_formula_value(op, i, j, rho, rep.f, parts.D)
                    blk = dz[op._sl(i), op._sl(i)] - dz[op._sl(i), op._sl(j)]
                    ref = float((tr @ blk @ rho.reshape(-1)).real)
                    worst = max(worst, abs(finite - ref))
                    cross.append({"i": i + 1, "j": j + 1, "finite_formula": finite, "fundamental": ref})
                    lines.append(f"  Tr(N_{i + 1}{j + 1} rho): finite {finite:.10g}, via Z {ref:.10g}")
        ok = worst <= tol
        results.update(cross_check=cross, cross_check_residual=worst, tol=tol)
        lines.append(f"cross-check residual {worst:.3e} (tol {tol:.1e}): {'PASS' if ok else 'FAIL'}")
    return _emit(args, results, lines, ok=ok)


def _parse_coin(spec):
    if spec == "hadamard-split":
        return hadamard_split_coin()
    if spec == "classical":
        return classical_coin()
    if spec.startswith("general:"):
        try:
            vals = [complex(v) for v in spec[len("general:"):].split(",")]
        except ValueError:
            raise ParseError(f"bad coin entries in {spec!r}") from None
        if len(vals) != 4:
            raise ParseError("general coin needs four entries: general:x,y,z,w")
        return general_coin(*vals)
    raise ParseError(f"unknown coin {spec!r}; use hadamard-split, classical or general:x,y,z,w")


def cmd_npath(args):
    L, R = _parse_coin(args.coin)
    if args.N < 2:
        raise ParseError("--N must be at least 2")
    state = parse_density(args.rho, args.N, 2)
    site, rho = concentrated_site(state)
    if site != 0:
        raise ParseError("the path walk starts at site 1; give bloch:1,...")
    res = npath_experiment(L, R, args.N, rho, args.mode, args.traj, args.seed, args.threads)
    lines = [f"{args.N}-path, coin {args.coin}, x1 = {res.x1:.6g}, mode {res.mode}",
             f"mean hitting time 1 -> {args.N}: {res.value:.10g}"
             + (f" +/- {res.stderr:.4g}" if res.mode == "sampled" else ""),
             f"(N-1)^2 + 2 x1 = {res.conjecture:.10g}   difference {res.residual:+.3e}",
             f"classical (N-1)^2 = {res.classical:.10g}"]
    results = {"N": res.N, "x1": res.x1, "value": res.value, "stderr": res.stderr, "prediction": res.conjecture,
               "difference": res.residual, "classical": res.classical, "mode": res.mode}
    return _emit(args, results, lines, seed=args.seed if args.mode == "sampled" else None)


def _add_common(p):
    p.add_argument("--json", action="store_true", help="emit a JSON report instead of text")
    p.add_argument("--tol", type=float, default=None, help="override the command's default tolerance")


def build_parser():
    parser = argparse.ArgumentParser(prog="oqwalk", description="Open quantum random walk analyses.")
    parser.add_argument("--version", action="version", version=f"oqwalk {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list bundled walk specs")
    _add_common(p)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("validate", help="check the normalization sum_i B_ij^* B_ij = I")
    p.add_argument("walk")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ergodic", help="spectrum, gap and ergodicity")
    p.add_argument("walk")
    p.add_argument("--show", type=int, default=6, help="eigenvalues to print")
    p.add_argument("--r-max", type=int, default=10_000, help="power-convergence horizon")
    _add_common(p)
    p.set_defaults(func=cmd_ergodic)

    p = sub.add_parser("hitting", help="mean hitting time from a density to a target site")
    p.add_argument("walk")
    p.add_argument("--target", type=int, required=True, help="target site (1-based)")
    p.add_argument("--rho", required=True, help="start density: bloch:SITE,X1,X2,X3 or a JSON file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="method", action="store_const", const="exact", help="resolvent (default)")
    g.add_argument("--series", dest="method", action="store_const", const="series", help="truncated path series")
    g.add_argument("--simulate", dest="method", action="store_const", const="simulate", help="Monte Carlo")
    p.set_defaults(method="exact")
    p.add_argument("--traj", type=int, default=100_000, help="trajectories for --simulate")
    p.add_argument("--seed", type=int, default=0, help="master seed for --simulate")
    p.add_argument("--max-steps", type=int, default=10_000, help="per-trajectory step cap")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default OQWALK_THREADS or 1)")
    p.add_argument("--compare", action="store_true", help="with --simulate, also report the exact value")
    _add_common(p)
    p.set_defaults(func=cmd_hitting)

    p = sub.add_parser("mhtf", help="residuals of the mean hitting time formula")
    p.add_argument("walk")
    p.add_argument("--rho", action="append", help="extra density to tabulate (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_mhtf)

    p = sub.add_parser("target-time", help="target time and its start-site independence")
    p.add_argument("walk")
    p.add_argument("--rho", required=True, help="density: bloch:SITE,X1,X2,X3 or a JSON file")
    p.add_argument("--sweep", type=int, default=0, metavar="M", help="also sweep an M-latitude Bloch grid")
    _add_common(p)
    p.set_defaults(func=cmd_target_time)

    p = sub.add_parser("minpoly", help="minimal polynomial and the finite hitting-time formula")
    p.add_argument("walk")
    p.add_argument("--rho", action="append", help="density for the cross-check (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_minpoly)

    p = sub.add_parser("npath", help="crossing time of the N-path walk")
    p.add_argument("--coin", default="hadamard-split", help="hadamard-split, classical or general:x,y,z,w")
    p.add_argument("--N", type=int, required=True, help="number of sites")
    p.add_argument("--rho", default="bloch:1,0,0,0", help="start density at site 1")
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--traj", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_npath)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        import logging
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"oqwalk: error: {exc}", file=sys.stderr)
        return 2
    except (NotErgodicError, NonAbsorbingError, HypothesisError) as exc:
        print(f"oqwalk: check failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"oqwalk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
